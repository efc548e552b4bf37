use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wealth_target::single_period::*;

fn permutations(v: &[f64]) -> Vec<Vec<f64>> {
    if v.len() <= 1 {
        return vec![v.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..v.len() {
        let mut rest = v.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

#[test]
fn random_markets_satisfy_pricing_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let r = rng.random_range(0.0..0.05);
        let mu = r + rng.random_range(0.005..0.1);
        let sigma = rng.random_range(0.05..0.5);
        let n = rng.random_range(3..=200);
        let m = SinglePeriodMarket::new(mu, sigma, r, n).unwrap();
        assert!(m.pricing_exponent < 0.0);
        let nf = n as f64;
        let sum_xi: f64 = m.state_prices.iter().sum::<f64>() / nf;
        let sum_xs: f64 = m.state_prices.iter().zip(&m.stock_states).map(|(x, s)| x * s).sum::<f64>() / nf;
        assert!((sum_xi - 1.0 / (1.0 + r)).abs() < 1e-10);
        assert!((sum_xs - 1.0).abs() < 1e-10);

        // Uniqueness: the defining residual changes sign exactly once.
        let resid = |b: f64| -> f64 {
            let w: Vec<f64> = m.stock_states.iter().map(|s| s.powf(b)).collect();
            let tot: f64 = w.iter().sum();
            w.iter().zip(&m.stock_states).map(|(w, s)| w * ((1.0 + r) - s)).sum::<f64>() / tot
        };
        let signs: Vec<bool> = (0..=400).map(|i| resid(-200.0 + i as f64) > 0.0).collect();
        assert_eq!(signs.windows(2).filter(|w| w[0] != w[1]).count(), 1);

        let x = rng.random_range(0.5..2.0);
        let cost = m.price(&vec![x; n]).unwrap();
        assert!((cost - x / (1.0 + r)).abs() <= 1e-14 * x);
    }
}

#[test]
fn distributional_price_is_the_permutation_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 3..=7 {
        for _ in 0..5 {
            let m = SinglePeriodMarket::new(0.05, rng.random_range(0.1..0.4), 0.01, n).unwrap();
            let levels: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
            let brute = permutations(&levels)
                .iter()
                .map(|p| p.iter().zip(&m.state_prices).map(|(x, xi)| x * xi).sum::<f64>() / n as f64)
                .fold(f64::INFINITY, f64::min);
            let fast = m.price(&levels).unwrap();
            assert!((fast - brute).abs() <= 1e-14 * brute.max(1.0));
        }
    }
}

#[test]
fn state_prices_decrease_with_stock_level() {
    let m = SinglePeriodMarket::new(0.07, 0.2, 0.02, 100).unwrap();
    assert!(m.state_prices.windows(2).all(|w| w[0] > w[1]));
}

#[test]
fn submit_requires_cost_band() {
    let m = SinglePeriodMarket::new(0.07, 0.2, 0.02, 100).unwrap();
    let mut s = BuilderSession::new(m, 1.0).unwrap();
    s.set_markers(&vec![0.95 * 1.02; 100]).unwrap();
    assert!(matches!(s.submit(), Err(BuilderError::IllegalTransition { .. })));
    s.set_markers(&vec![1.02; 100]).unwrap();
    assert_eq!(s.status, SessionStatus::Submittable);
    let pts = s.submit().unwrap();
    assert!(pts.degenerate);
    let r = s.realize(3).unwrap();
    assert!((r.wealth - 1.02).abs() < 1e-15);
    assert!(s.realize(3).is_err());
}

#[test]
fn realized_states_are_uniform() {
    let n = 10;
    let markers: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let draws = 10_000;
    let mut counts = vec![0usize; n];
    for seed in 0..draws {
        counts[draw_state(&markers, seed).state - 1] += 1;
    }
    let p = 1.0 / n as f64;
    let mean = draws as f64 * p;
    let sd = (draws as f64 * p * (1.0 - p)).sqrt();
    assert!(counts.iter().all(|&c| (c as f64 - mean).abs() <= 4.0 * sd), "{counts:?}");
}
