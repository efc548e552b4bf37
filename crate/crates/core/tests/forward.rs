mod common;

use common::*;
use num_complex::Complex64;
use wealth_target::distribution::*;
use wealth_target::error::EngineError;
use wealth_target::fixed_horizon::{solve_family_parameter, solve_terminal, ParametricFamily};
use wealth_target::forward::*;
use wealth_target::harmonic::HarmonicFunction;
use wealth_target::numerics::QuadratureSpec;
use wealth_target::simulation::*;

fn two_atom_case() -> (f64, f64, f64, f64) {
    // (b, β, k₁, k₂) for x₀ = 5, A_T = 0.04
    let b = solve_family_parameter(ParametricFamily::TransformedNormal, 5.0, &market(), 1.0, &QuadratureSpec::default())
        .unwrap();
    let a: f64 = 0.04;
    let s = (a * b).sqrt();
    let (e1, e2) = ((2.0 * (b - s)).exp(), (b / 2.0 - s).exp());
    let den = e1 + 2.0 * e2;
    (b, (b / a).sqrt(), 2.0 * e1 / den, 2.0 * e2 / den)
}

fn atoms(m: &RecoveredMeasure) -> Vec<Atom> {
    match &m.form {
        MeasureForm::Atomic { atoms } => atoms.clone(),
        other => panic!("expected atoms, got {other:?}"),
    }
}

#[test]
fn budget_matches_terminal_closed_forms() {
    let c = market();
    let q = QuadratureSpec::default();
    let v = budget_constraint_forward(&lognormal_family(0.16).unwrap(), &c, 1.0, &q).unwrap();
    assert!((v - 1.0).abs() < 1e-12);
    let (b, ..) = two_atom_case();
    let v = budget_constraint_forward(&transformed_normal_family(b).unwrap(), &c, 1.0, &q).unwrap();
    assert!(rel(v, 5.0) < 1e-10);
}

#[test]
fn lognormal_transform_is_a_single_exponential() {
    let c = market();
    let q = QuadratureSpec::default();
    let t = ForwardTransform::new(&lognormal_family(0.16).unwrap(), &c, 1.0, &q).unwrap();
    let s = t.sample(PROBE_HALF_WIDTH, PROBE_POINTS).unwrap();
    for (&x, &p) in s.x.iter().zip(&s.phi) {
        assert!((p - Complex64::from_polar(2.0, 2.0 * x)).norm() < 1e-6, "x={x}");
    }
    assert!((s.at_zero() - 2.0).norm() < 1e-12);
}

#[test]
fn transform_has_characteristic_function_bounds() {
    let c = market();
    let q = QuadratureSpec::default();
    let (b, ..) = two_atom_case();
    let t = ForwardTransform::new(&transformed_normal_family(b).unwrap(), &c, 1.0, &q).unwrap();
    let s = t.sample(PROBE_HALF_WIDTH, PROBE_POINTS).unwrap();
    let n = s.x.len();
    let p0 = s.at_zero();
    assert!(p0.im.abs() < 1e-12 * p0.re);
    for k in 0..n {
        assert!((s.phi[k] - s.phi[n - 1 - k].conj()).norm() <= 1e-12 * p0.re);
        assert!(s.phi[k].norm() <= p0.re * (1.0 + 1e-12));
    }
}

#[test]
fn lognormal_measure_is_a_dirac_mass() {
    let s = solve_forward(&lognormal_family(0.16).unwrap(), &market(), 1.0, 1.0, &QuadratureSpec::default()).unwrap();
    let a = atoms(&s.measure);
    assert_eq!(a.len(), 1);
    assert!((a[0].y - 2.0).abs() < 1e-6 && (a[0].m - 2.0).abs() < 1e-6);
    assert!(s.measure.admissible);
    for &(x, t) in &[(-0.3, 0.0), (0.2, 0.05), (1.0, 0.5)] {
        assert!(rel(s.measure_h.value(x, t).unwrap(), (2.0 * x - 2.0 * t).exp()) < 1e-9);
    }
    for i in 1..=50 {
        let x = 0.1 * i as f64;
        assert!(rel(s.initial_datum.eval(x).unwrap(), x.powf(-0.5)) < 1e-8, "x={x}");
    }
}

#[test]
fn transformed_normal_measure_has_two_atoms() {
    let (b, beta, k1, k2) = two_atom_case();
    let s = solve_forward(&transformed_normal_family(b).unwrap(), &market(), 1.0, 5.0, &QuadratureSpec::default())
        .unwrap();
    let a = atoms(&s.measure);
    assert_eq!(a.len(), 2);
    assert!(rel(a[0].y, 2.0 * beta) < 1e-8 && rel(a[0].m, k1 * beta) < 1e-8);
    assert!(rel(a[1].y, beta) < 1e-8 && rel(a[1].m, k2 * beta) < 1e-8);
    for &(x, t) in &[(-0.3, 0.0), (0.1, 0.02), (0.4, 0.3)] {
        let exact = 0.5 * k1 * (2.0 * beta * x - 2.0 * beta * beta * t).exp() + k2 * (beta * x - 0.5 * beta * beta * t).exp();
        assert!(rel(s.measure_h.value(x, t).unwrap(), exact) < 1e-8);
    }
    for i in 1..=20 {
        let x = 0.25 * i as f64;
        let exact = (((2.0 / k1) * x + k2 * k2 / (k1 * k1)).sqrt() - k2 / k1).powf(-1.0 / beta);
        assert!(rel(s.initial_datum.eval(x).unwrap(), exact) < 1e-8);
    }
    let h0 = s.measure_h.value(0.0, 0.0).unwrap();
    assert!((s.initial_datum.eval(h0).unwrap() - 1.0).abs() < 1e-14);
}

#[test]
fn normalized_harmonic_reproduces_terminal_data() {
    let c = market();
    let q = QuadratureSpec::default();
    let (b, ..) = two_atom_case();
    for (d, x0) in [(lognormal_family(0.16).unwrap(), 1.0), (transformed_normal_family(b).unwrap(), 5.0)] {
        let s = solve_forward(&d, &c, 1.0, x0, &q).unwrap();
        assert!((s.h.inverse(x0, 0.0).unwrap() - s.start()).abs() < 1e-12);
        for i in -30..=30 {
            let x = 0.1 * i as f64 * 0.2;
            assert!(rel(s.h.value(x, 0.04).unwrap(), d.score_quantile(x / 0.2)) < 1e-5);
        }
    }
}

#[test]
fn whole_line_example_is_gaussian_and_inadmissible() {
    let c = market();
    let q = QuadratureSpec::default();
    let d = whole_line_family(0.04).unwrap();
    let t = ForwardTransform::new(&d, &c, 1.0, &q).unwrap();
    let s = t.sample(PROBE_HALF_WIDTH, PROBE_POINTS).unwrap();
    for (&x, &p) in s.x.iter().zip(&s.phi) {
        assert!((p - (-0.5 * x * x).exp()).norm() < 1e-6);
    }
    match recover_measure(&s) {
        Err(EngineError::SupportViolation { mass }) => assert!(mass > 0.4),
        other => panic!("expected a support violation, got {other:?}"),
    }
    assert!(matches!(solve_forward(&d, &c, 1.0, 1.0, &q), Err(EngineError::Inadmissible(_))));
}

#[test]
fn admissibility_of_density_measures() {
    let gaussian: Vec<DensityPoint> = (1..=400)
        .map(|j| {
            let y = 0.05 * j as f64;
            DensityPoint { y, w: (-0.5 * y * y).exp() / (2.0 * std::f64::consts::PI).sqrt() }
        })
        .collect();
    let m = RecoveredMeasure::density(gaussian).unwrap();
    for t in [0.01, 0.5, 2.0] {
        assert!(!check_admissibility(&m, t));
    }
    assert!(matches!(harmonic_from_measure(&m), Err(EngineError::Inadmissible(_))));
    let compact: Vec<DensityPoint> = (1..=200)
        .map(|j| {
            let y = 0.025 * j as f64;
            DensityPoint { y, w: if (1.0..=3.0).contains(&y) { (y - 1.0) * (3.0 - y) + 0.1 } else { 0.0 } }
        })
        .collect();
    let m = RecoveredMeasure::density(compact).unwrap();
    assert!(check_admissibility(&m, 10.0));
    let atom = RecoveredMeasure::atomic(vec![Atom { y: 2.0, m: 2.0 }]).unwrap();
    assert!(check_admissibility(&atom, 100.0));
}

#[test]
fn recovered_density_reproduces_a_positive_transform() {
    // ν = N(2, 0.3²): φ(x) = e^{2ix − 0.045x²}, with negligible mass on y ≤ 0.
    let x = probe_grid(PROBE_HALF_WIDTH, PROBE_POINTS);
    let phi = x.iter().map(|&x| Complex64::from_polar((-0.045 * x * x).exp(), 2.0 * x)).collect();
    let s = FourierSamples::new(x, phi).unwrap();
    let m = recover_measure(&s).unwrap();
    assert!(!m.is_atomic());
    assert!((m.total_mass - 1.0).abs() < 1e-6);
    assert!(m.residual < FIT_TOLERANCE);
    let MeasureForm::Density { grid } = &m.form else { unreachable!() };
    let peak = grid.iter().max_by(|a, b| a.w.total_cmp(&b.w)).unwrap();
    assert!((peak.y - 2.0).abs() < 0.1);
    assert!(!check_admissibility(&m, 0.04));
}

#[test]
fn atoms_at_or_below_one_use_a_base_point() {
    let m = RecoveredMeasure::atomic(vec![Atom { y: 0.5, m: 1.0 }]).unwrap();
    let p = Performance::new(&m).unwrap();
    assert!(matches!(p.branch(), PerformanceBranch::BasePoint { .. }));
    assert!(p.eval(1.0, 0.0).unwrap().abs() < 1e-14);
    // u₀′(x) = (x/2)^{−2}, so u(x, 0) = 4(1 − 1/x)
    for &x in &[0.5, 2.0, 7.0] {
        assert!(rel(p.eval(x, 0.0).unwrap(), 4.0 * (1.0 - 1.0 / x)) < 1e-12);
    }
}

#[test]
fn performance_solves_its_pde_and_is_concave_and_decreasing() {
    let (_, beta, k1, k2) = two_atom_case();
    let m = RecoveredMeasure::atomic(vec![Atom { y: 2.0 * beta, m: k1 * beta }, Atom { y: beta, m: k2 * beta }])
        .unwrap();
    let p = Performance::new(&m).unwrap();
    assert_eq!(p.branch(), PerformanceBranch::ZeroAnchored);
    let xs: Vec<f64> = (1..=12).map(|i| 0.4 * i as f64).collect();
    let ts = [0.0, 0.02, 0.05, 0.1, 0.2];
    let surf = performance_surface(&m, &ts, &xs).unwrap();
    for row in &surf.u {
        for w in row.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] < 0.0);
        }
    }
    for i in 1..ts.len() {
        for j in 0..xs.len() {
            assert!(surf.u[i][j] < surf.u[i - 1][j]);
        }
    }
    let (ex, et) = (1e-3, 1e-4);
    for &t in &[0.02, 0.1] {
        for &x in &[0.8, 2.0, 4.0] {
            let u = |x: f64, t: f64| p.eval(x, t).unwrap();
            let ut = (u(x, t + et) - u(x, t - et)) / (2.0 * et);
            let ux = (u(x + ex, t) - u(x - ex, t)) / (2.0 * ex);
            let uxx = (u(x + ex, t) - 2.0 * u(x, t) + u(x - ex, t)) / (ex * ex);
            let resid = ut - 0.5 * ux * ux / uxx;
            assert!(resid.abs() / ut.abs() < 1e-4, "x={x} t={t} resid={resid}");
            assert!(rel(p.dx(x, t).unwrap(), ux) < 1e-6);
        }
    }
}

#[test]
fn dirac_performance_matches_consistent_constant() {
    // ν = 2δ₂ gives u₀′(x) = x^{−1/2}, hence u(x, t) = (β/(β−1)) x^{(β−1)/β} e^{−(β−1)t/2}.
    let m = RecoveredMeasure::atomic(vec![Atom { y: 2.0, m: 2.0 }]).unwrap();
    let p = Performance::new(&m).unwrap();
    for &t in &[0.0, 0.04, 0.5] {
        for &x in &[0.25, 1.0, 3.0] {
            assert!(rel(p.eval(x, t).unwrap(), 2.0 * x.sqrt() * (-0.5 * t).exp()) < 1e-12);
        }
    }
}

#[test]
fn forward_and_fixed_lognormal_paths_coincide() {
    let c = market();
    let q = QuadratureSpec::default();
    let d = lognormal_family(0.16).unwrap();
    let fwd = solve_forward(&d, &c, 1.0, 1.0, &q).unwrap();
    let fix = solve_terminal(&d, &c, 1.0, 1.0, &q).unwrap();
    let cfg = SimulationConfig { path_count: 2000, dt: 1e-3, seed: 4, checks: vec![], ..Default::default() };
    let a = simulate(fwd.h.as_ref(), Mode::Forward, &c, 1.0, 1.0, &[], &cfg).unwrap();
    let b = simulate(fix.h.as_ref(), Mode::Fixed, &c, 1.0, 1.0, &[], &cfg).unwrap();
    let worst = a.wealth.iter().zip(&b.wealth).map(|(x, y)| rel(*x, *y)).fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst:e}");
}

#[test]
fn scaling_the_measure_scales_wealth() {
    let c = market();
    let (_, beta, k1, k2) = two_atom_case();
    let m = RecoveredMeasure::atomic(vec![Atom { y: 2.0 * beta, m: k1 * beta }, Atom { y: beta, m: k2 * beta }])
        .unwrap();
    let h0 = m.total_mass;
    let x0 = 1.7;
    let cfg = SimulationConfig { path_count: 500, dt: 1e-2, seed: 9, checks: vec![], ..Default::default() };
    let base = simulate(&harmonic_from_measure(&m).unwrap(), Mode::Forward, &c, x0, 1.0, &[], &cfg).unwrap();
    for k0 in [0.5, 2.0, 10.0] {
        let f = k0 / h0;
        let scaled = harmonic_from_measure(&m.scaled(f)).unwrap();
        let other = simulate(&scaled, Mode::Forward, &c, f * x0, 1.0, &[], &cfg).unwrap();
        let worst = base.wealth.iter().zip(&other.wealth).map(|(x, y)| rel(f * x, *y)).fold(0.0, f64::max);
        assert!(worst < 1e-10, "k0={k0}: {worst:e}");
    }
}

#[test]
fn marker_targets_have_no_stable_transform() {
    let levels: Vec<f64> = (1..=30).map(|i| 0.6 + 0.03 * i as f64).collect();
    let d = from_markers(&levels).unwrap();
    let r = solve_forward(&d, &market(), 1.0, 1.0, &QuadratureSpec::default());
    assert!(matches!(r, Err(EngineError::IntegralDivergence(_))));
}

#[test]
fn measure_serialization_shape() {
    let m = RecoveredMeasure::atomic(vec![Atom { y: 2.0, m: 2.0 }]).unwrap();
    let v = serde_json::to_value(&m).unwrap();
    assert_eq!(v["form"], "atomic");
    assert_eq!(v["atoms"][0]["y"], 2.0);
    assert_eq!(v["admissible"], true);
    let back: RecoveredMeasure = serde_json::from_value(v).unwrap();
    assert_eq!(back, m);
}
