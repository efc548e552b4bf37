#![allow(dead_code)]

use wealth_target::market::{build_curves, MarketCurves, MarketSpec};

/// λ = 0.2 on [0, 1], so A_T = 0.04.
pub fn market() -> MarketCurves {
    build_curves(&MarketSpec::single_asset(0.06, 0.02, 0.2, 1.0)).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `b` solving the lognormal budget in closed form.
pub fn lognormal_b(a: f64, x0: f64) -> f64 {
    (a.sqrt() + (a + 2.0 * x0.ln()).max(0.0).sqrt()).powi(2)
}

pub fn lognormal_budget(a: f64, b: f64) -> f64 {
    (b / 2.0 - (a * b).sqrt()).exp()
}

pub fn transformed_normal_budget(a: f64, b: f64) -> f64 {
    let s = (a * b).sqrt();
    (2.0 * (b - s)).exp() + 2.0 * (b / 2.0 - s).exp()
}
