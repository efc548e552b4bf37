//! Single-period Distribution Builder backend: an `N`-state lognormal stock,
//! log-linear state prices, the cost meter and the marker session lifecycle.

use crate::numerics::{bracketed_root, norm_quantile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuilderError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no-arbitrage violated: need min state {min} < 1 + r = {growth} < max state {max}")]
    NoArbitrageViolated { min: f64, growth: f64, max: f64 },
    #[error("could not bracket the pricing exponent")]
    RootBracketFailure,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cannot {action} a session that is {from:?}")]
    IllegalTransition { from: SessionStatus, action: &'static str },
    #[error("session has not been submitted")]
    NotSubmitted,
}

/// `S_i = exp(μ + σ Φ⁻¹((2i − 1)/2N))`, sorted ascending.
pub fn discretize_lognormal(mu: f64, sigma: f64, n: usize) -> Result<Vec<f64>, BuilderError> {
    if n <= 2 {
        return Err(BuilderError::InvalidParameter(format!("N = {n} must exceed 2")));
    }
    if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
        return Err(BuilderError::InvalidParameter(format!("need finite mu and sigma > 0, got ({mu}, {sigma})")));
    }
    let nf = n as f64;
    Ok((1..=n)
        .map(|i| (mu + sigma * norm_quantile((2.0 * i as f64 - 1.0) / (2.0 * nf))).exp())
        .collect())
}

fn log_sum_exp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = v.clone().fold(f64::NEG_INFINITY, f64::max);
    m + v.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Solves `(1 + r) Σ S_i^b = Σ S_i^{b+1}` for `b`, then sets `a` so that
/// `(1/N) Σ e^{a} S_i^b = 1/(1 + r)`.
pub fn solve_pricing_exponent(states: &[f64], r: f64) -> Result<(f64, f64), BuilderError> {
    let n = states.len();
    if n < 2 {
        return Err(BuilderError::InvalidParameter("need at least two states".into()));
    }
    if states.iter().any(|&s| !(s > 0.0 && s.is_finite())) || !(r > -1.0 && r.is_finite()) {
        return Err(BuilderError::InvalidParameter("states must be positive and r > -1".into()));
    }
    let growth = 1.0 + r;
    let min = states.iter().copied().fold(f64::INFINITY, f64::min);
    let max = states.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(min < growth && growth < max) {
        return Err(BuilderError::NoArbitrageViolated { min, growth, max });
    }
    let logs: Vec<f64> = states.iter().map(|s| s.ln()).collect();
    // (1 + r) minus the S^b-tilted mean of S; decreasing in b.
    let resid = |b: f64| {
        let m = logs.iter().map(|l| b * l).fold(f64::NEG_INFINITY, f64::max);
        let (mut num, mut den) = (0.0, 0.0);
        for (s, l) in states.iter().zip(&logs) {
            let w = (b * l - m).exp();
            num += w * (growth - s);
            den += w;
        }
        num / den
    };
    let (lo, hi) = if resid(0.0) <= 0.0 {
        let mut lo = -100.0;
        let mut k = 0;
        while resid(lo) <= 0.0 {
            lo *= 2.0;
            k += 1;
            if k > 20 {
                return Err(BuilderError::RootBracketFailure);
            }
        }
        (lo, 0.0)
    } else {
        let mut hi = 100.0;
        let mut k = 0;
        while resid(hi) >= 0.0 {
            hi *= 2.0;
            k += 1;
            if k > 20 {
                return Err(BuilderError::RootBracketFailure);
            }
        }
        (0.0, hi)
    };
    let b = bracketed_root(resid, lo, hi, 1e-15).map_err(|_| BuilderError::RootBracketFailure)?;
    let a = -growth.ln() - (log_sum_exp(logs.iter().map(|l| b * l)) - (n as f64).ln());
    Ok((b, a))
}

/// Minimum cost over all pairings of `levels` with states: sorted levels against
/// nonincreasing state prices.
pub fn distributional_price(levels: &[f64], xi: &[f64]) -> Result<f64, BuilderError> {
    if levels.len() != xi.len() {
        return Err(BuilderError::DimensionMismatch { expected: xi.len(), got: levels.len() });
    }
    let mut sorted = levels.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = xi.len() as f64;
    Ok(sorted.iter().zip(xi).map(|(x, p)| x * p).sum::<f64>() / n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinglePeriodMarket {
    pub n: usize,
    pub r: f64,
    pub mu: f64,
    pub sigma: f64,
    pub stock_states: Vec<f64>,
    pub pricing_exponent: f64,
    pub intercept: f64,
    pub state_prices: Vec<f64>,
}

impl SinglePeriodMarket {
    pub fn new(mu: f64, sigma: f64, r: f64, n: usize) -> Result<Self, BuilderError> {
        let stock_states = discretize_lognormal(mu, sigma, n)?;
        let (b, a) = solve_pricing_exponent(&stock_states, r)?;
        let state_prices = stock_states.iter().map(|s| (a + b * s.ln()).exp()).collect();
        Ok(Self { n, r, mu, sigma, stock_states, pricing_exponent: b, intercept: a, state_prices })
    }

    pub fn price(&self, levels: &[f64]) -> Result<f64, BuilderError> {
        distributional_price(levels, &self.state_prices)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionStatus {
    Editing,
    Submittable,
    Submitted,
    Realized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalPoints {
    /// `(wealth, marginal utility)` with the free scale fixed at 1.
    pub points: Vec<(f64, f64)>,
    /// Set when distinct states share a wealth level, so one wealth maps to
    /// several marginal utilities.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    /// 1-based state index in ascending stock order.
    pub state: usize,
    pub wealth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuilderSession {
    pub market: SinglePeriodMarket,
    pub budget: f64,
    pub markers: Vec<f64>,
    pub cost: f64,
    pub status: SessionStatus,
    pub realized: Option<Realization>,
}

impl BuilderSession {
    /// All markers start on the bottom row (zero wealth).
    pub fn new(market: SinglePeriodMarket, budget: f64) -> Result<Self, BuilderError> {
        if !(budget > 0.0 && budget.is_finite()) {
            return Err(BuilderError::InvalidParameter(format!("budget {budget} must be positive")));
        }
        let n = market.n;
        Ok(Self { market, budget, markers: vec![0.0; n], cost: 0.0, status: SessionStatus::Editing, realized: None })
    }

    pub fn set_markers(&mut self, levels: &[f64]) -> Result<f64, BuilderError> {
        if !matches!(self.status, SessionStatus::Editing | SessionStatus::Submittable) {
            return Err(BuilderError::IllegalTransition { from: self.status, action: "move markers of" });
        }
        if levels.len() != self.market.n {
            return Err(BuilderError::DimensionMismatch { expected: self.market.n, got: levels.len() });
        }
        if levels.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(BuilderError::InvalidParameter("marker levels must be finite and nonnegative".into()));
        }
        let mut sorted = levels.to_vec();
        sorted.sort_by(f64::total_cmp);
        self.markers = sorted;
        Ok(self.marker_cost())
    }

    /// Recomputes the meter and the submittable flag.
    pub fn marker_cost(&mut self) -> f64 {
        self.cost = distributional_price(&self.markers, &self.market.state_prices)
            .expect("markers always have length N");
        if matches!(self.status, SessionStatus::Editing | SessionStatus::Submittable) {
            self.status = if self.within_band() { SessionStatus::Submittable } else { SessionStatus::Editing };
        }
        self.cost
    }

    /// `0.99·x₀ ≤ cost ≤ x₀`, with a few ulps of slack on the upper edge so
    /// that exact risk-free replication is not lost to rounding.
    pub fn within_band(&self) -> bool {
        self.cost >= 0.99 * self.budget && self.cost <= self.budget * (1.0 + 1e-12)
    }

    pub fn submit(&mut self) -> Result<MarginalPoints, BuilderError> {
        if self.status != SessionStatus::Submittable || !self.within_band() {
            return Err(BuilderError::IllegalTransition { from: self.status, action: "submit" });
        }
        self.status = SessionStatus::Submitted;
        self.infer_marginal_points()
    }

    /// First-order conditions `U′(x_i) = ξ_i` (scale normalized to 1).
    pub fn infer_marginal_points(&self) -> Result<MarginalPoints, BuilderError> {
        if !matches!(self.status, SessionStatus::Submitted | SessionStatus::Realized) {
            return Err(BuilderError::NotSubmitted);
        }
        let points: Vec<(f64, f64)> =
            self.markers.iter().copied().zip(self.market.state_prices.iter().copied()).collect();
        let degenerate = points.windows(2).any(|w| w[0].0 == w[1].0 && w[0].1 != w[1].1);
        Ok(MarginalPoints { points, degenerate })
    }

    pub fn realize(&mut self, seed: u64) -> Result<Realization, BuilderError> {
        match self.status {
            SessionStatus::Submitted => {}
            SessionStatus::Realized => {
                return Err(BuilderError::IllegalTransition { from: self.status, action: "realize" })
            }
            _ => return Err(BuilderError::NotSubmitted),
        }
        let r = draw_state(&self.markers, seed);
        self.realized = Some(r);
        self.status = SessionStatus::Realized;
        Ok(r)
    }
}

/// Uniform state under the cost-efficient pairing (ascending markers on ascending states).
pub fn draw_state(sorted_markers: &[f64], seed: u64) -> Realization {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let i = rng.random_range(0..sorted_markers.len());
    Realization { state: i + 1, wealth: sorted_markers[i] }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_state_discretization() {
        let s = discretize_lognormal(0.0, 1.0, 3).unwrap();
        assert!((s[1] - 1.0).abs() < 1e-15);
        assert!((s[0] - norm_quantile(1.0 / 6.0).exp()).abs() < 1e-15);
        assert!(discretize_lognormal(0.0, 1.0, 2).is_err());
    }

    #[test]
    fn geometric_mean_is_exp_mu() {
        let s = discretize_lognormal(0.08, 0.2, 5).unwrap();
        let g = (s.iter().map(|v| v.ln()).sum::<f64>() / 5.0).exp();
        assert!((g - 0.08f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn symmetric_two_point_states_give_minus_half() {
        // With 1 + r = √(ud), b = −½ solves the two-term equation exactly.
        let (d, u) = (0.9f64, 1.25f64);
        let (b, _) = solve_pricing_exponent(&[d, u], (u * d).sqrt() - 1.0).unwrap();
        assert!((b + 0.5).abs() < 1e-12);
    }

    #[test]
    fn equal_states_violate_no_arbitrage() {
        assert!(matches!(
            solve_pricing_exponent(&[1.1; 4], 0.02),
            Err(BuilderError::NoArbitrageViolated { .. })
        ));
    }

    #[test]
    fn session_lifecycle() {
        let m = SinglePeriodMarket::new(0.08, 0.2, 0.02, 20).unwrap();
        let mut s = BuilderSession::new(m, 1.0).unwrap();
        assert_eq!(s.status, SessionStatus::Editing);
        assert!(matches!(s.submit(), Err(BuilderError::IllegalTransition { .. })));
        s.set_markers(&[1.02; 20]).unwrap();
        assert_eq!(s.status, SessionStatus::Submittable);
        let pts = s.submit().unwrap();
        // One wealth level across distinct state prices.
        assert!(pts.degenerate);
        let r1 = s.realize(7).unwrap();
        assert_eq!(r1.wealth, 1.02);
        assert!(matches!(s.realize(7), Err(BuilderError::IllegalTransition { .. })));
    }

    #[test]
    fn zero_markers_cost_nothing() {
        let m = SinglePeriodMarket::new(0.08, 0.2, 0.02, 10).unwrap();
        let mut s = BuilderSession::new(m, 1.0).unwrap();
        assert_eq!(s.marker_cost(), 0.0);
        assert_eq!(s.status, SessionStatus::Editing);
    }
}
