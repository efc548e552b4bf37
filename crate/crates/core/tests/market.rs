use proptest::prelude::*;
use wealth_target::market::*;

#[test]
fn two_asset_lambda_solves_volatility_system() {
    let spec = MarketSpec {
        d: 2,
        horizon: 2.0,
        pieces: vec![MarketPiece {
            t_start: 0.0,
            t_end: 2.0,
            rate: 0.01,
            drift: vec![0.05, 0.08],
            vol: vec![vec![0.2, 0.0], vec![0.1, 0.3]],
        }],
        bounds: RiskBounds::default(),
    };
    let c = build_curves(&spec).unwrap();
    let l = c.lambda(1.0).unwrap();
    // σᵀλ = μ − r, with row i of σ belonging to asset i
    let sig = [[0.2, 0.0], [0.1, 0.3]];
    for i in 0..2 {
        let lhs: f64 = (0..2).map(|j| sig[j][i] * l[j]).sum();
        assert!((lhs - (spec.pieces[0].drift[i] - 0.01)).abs() < 1e-13);
    }
    let a = c.a(2.0).unwrap();
    assert!((a - 2.0 * (l[0] * l[0] + l[1] * l[1])).abs() < 1e-14);
}

#[test]
fn time_outside_horizon_is_rejected() {
    let c = build_curves(&MarketSpec::single_asset(0.06, 0.02, 0.2, 1.0)).unwrap();
    assert!(matches!(c.a(1.5), Err(MarketError::TimeOutOfRange { .. })));
}

proptest! {
    #[test]
    fn cumulative_variance_is_additive_and_invertible(
        l1 in 0.05f64..1.0, l2 in 0.05f64..1.0, l3 in 0.05f64..1.0, t in 0.0f64..3.0
    ) {
        let c = build_curves(&MarketSpec::piecewise_lambda(&[0.0, 1.0, 2.0, 3.0], &[l1, l2, l3])).unwrap();
        let sq = [l1 * l1, l2 * l2, l3 * l3];
        let exact: f64 = (0..3).map(|k| sq[k] * (t - k as f64).clamp(0.0, 1.0)).sum();
        let a = c.a(t).unwrap();
        prop_assert!((a - exact).abs() < 1e-13);
        prop_assert!((c.time_for_variance(a).unwrap() - t).abs() < 1e-10);
    }
}
