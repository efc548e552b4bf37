use proptest::prelude::*;
use wealth_target::numerics::*;

#[test]
fn normal_cdf_matches_tabulated_values() {
    // Values from high-precision tables.
    let table = [
        (0.0, 0.5),
        (1.0, 0.841_344_746_068_542_9),
        (-3.0, 0.001_349_898_031_630_094_6),
        (2.5, 0.993_790_334_674_223_8),
        (-7.0, 1.279_812_543_885_835e-12),
    ];
    for (x, p) in table {
        assert!((norm_cdf(x) - p).abs() <= 1e-15 * p.max(1e-300) + 1e-17, "x={x}");
    }
}

#[test]
fn legendre_rule_integrates_exponential() {
    let (x, w) = gauss_legendre_rule(32);
    let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.exp()).sum();
    assert!((v - (1f64.exp() - (-1f64).exp())).abs() < 1e-14);
}

#[test]
fn tanh_sinh_integrates_log_singularity() {
    // ∫₀¹ ln y dy = −1
    let v = tanh_sinh_unit(|y, _| y.ln()).unwrap();
    assert!((v + 1.0).abs() < 1e-12);
}

#[test]
fn invalid_quadrature_specs_are_rejected() {
    assert!(QuadratureSpec::gauss_hermite(8).validate().is_err());
    assert!(QuadratureSpec::adaptive(4.0).validate().is_err());
}

#[test]
fn pchip_preserves_monotone_data() {
    let x: Vec<f64> = (0..12).map(|i| i as f64).collect();
    let y: Vec<f64> = x.iter().map(|&v| if v < 5.0 { v } else { 5.0 + 0.01 * (v - 5.0) }).collect();
    let p = Pchip::new(x, y, None);
    let mut prev = f64::NEG_INFINITY;
    for i in 0..=1100 {
        let (v, d) = p.eval(i as f64 * 0.01);
        assert!(v >= prev - 1e-14 && d >= -1e-14);
        prev = v;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn quantile_inverts_cdf(p in 1e-12f64..0.999_999) {
        let x = norm_quantile(p);
        prop_assert!((norm_cdf(x) - p).abs() <= 1e-14 * p.min(1.0 - p).max(1e-3));
    }

    #[test]
    fn gaussian_mgf_is_exact(t in -3.0f64..3.0, m in -1.0f64..1.0, v in 0.01f64..2.0) {
        let exact = (t * m + 0.5 * t * t * v).exp();
        for spec in [QuadratureSpec::default(), QuadratureSpec::adaptive(10.0)] {
            let got: f64 = gaussian_integrate(|y| (t * y).exp(), m, v, &spec).unwrap();
            prop_assert!((got - exact).abs() <= 1e-12 * exact);
        }
    }

    #[test]
    fn brent_finds_cubic_root(r in -5.0f64..5.0) {
        let f = |x: f64| (x - r) * (x * x + 1.0);
        let x = bracketed_root(f, -10.0, 10.0, 1e-14).unwrap();
        prop_assert!((x - r).abs() < 1e-12);
    }

    #[test]
    fn expanding_inverse_round_trips(x in -20.0f64..20.0) {
        let f = |x: f64| x + x.sinh();
        let back = expanding_inverse(f, f(x), 0.0, 1e-15).unwrap();
        prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0));
    }
}
