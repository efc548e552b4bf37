//! Continuous-time market with piecewise-constant coefficients.
//!
//! The only quantities the engines need are the market price of risk
//! `λ(t) = (σᵀ)⁻¹(μ − r·1)`, the cumulative squared risk `A_t = ∫₀ᵗ |λ|²` and
//! the portfolio direction `σ⁻¹λ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarketError {
    #[error("volatility matrix of piece {piece} is singular")]
    SingularVolatility { piece: usize },
    #[error("|λ| = {norm} on piece {piece} is outside [{c0}, {c1}]")]
    RiskPriceOutOfBounds { piece: usize, norm: f64, c0: f64, c1: f64 },
    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },
    #[error("invalid market: {0}")]
    Invalid(String),
}

fn default_c0() -> f64 {
    1e-6
}
fn default_c1() -> f64 {
    1e3
}

/// Bounds `c₀ ≤ |λ(t)| ≤ c₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskBounds {
    #[serde(default = "default_c0")]
    pub c0: f64,
    #[serde(default = "default_c1")]
    pub c1: f64,
}

impl Default for RiskBounds {
    fn default() -> Self {
        Self { c0: default_c0(), c1: default_c1() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketPiece {
    pub t_start: f64,
    pub t_end: f64,
    pub rate: f64,
    pub drift: Vec<f64>,
    /// Row-major `d × d` volatility matrix.
    pub vol: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSpec {
    pub d: usize,
    pub horizon: f64,
    pub pieces: Vec<MarketPiece>,
    #[serde(default)]
    pub bounds: RiskBounds,
}

impl MarketSpec {
    /// One asset with constant coefficients on `[0, horizon]`.
    pub fn single_asset(mu: f64, r: f64, sigma: f64, horizon: f64) -> Self {
        Self {
            d: 1,
            horizon,
            pieces: vec![MarketPiece {
                t_start: 0.0,
                t_end: horizon,
                rate: r,
                drift: vec![mu],
                vol: vec![vec![sigma]],
            }],
            bounds: RiskBounds::default(),
        }
    }

    /// One asset whose market price of risk takes the value `lambdas[k]` on the
    /// `k`-th of the given consecutive intervals (σ = 1, r = 0).
    pub fn piecewise_lambda(breaks: &[f64], lambdas: &[f64]) -> Self {
        assert_eq!(breaks.len(), lambdas.len() + 1);
        let pieces = lambdas
            .iter()
            .enumerate()
            .map(|(k, &l)| MarketPiece {
                t_start: breaks[k],
                t_end: breaks[k + 1],
                rate: 0.0,
                drift: vec![l],
                vol: vec![vec![1.0]],
            })
            .collect();
        Self { d: 1, horizon: breaks[breaks.len() - 1], pieces, bounds: RiskBounds::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePiece {
    pub t_start: f64,
    pub t_end: f64,
    pub lambda: Vec<f64>,
    pub sigma_inv_lambda: Vec<f64>,
    pub lambda_sq: f64,
    /// `A(t_start)`.
    pub a_start: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketCurves {
    pub horizon: f64,
    pub pieces: Vec<CurvePiece>,
}

pub fn build_curves(spec: &MarketSpec) -> Result<MarketCurves, MarketError> {
    let d = spec.d;
    if d == 0 {
        return Err(MarketError::Invalid("asset count must be positive".into()));
    }
    if !(spec.horizon > 0.0 && spec.horizon.is_finite()) {
        return Err(MarketError::Invalid(format!("horizon {} must be positive", spec.horizon)));
    }
    if spec.pieces.is_empty() {
        return Err(MarketError::Invalid("no coefficient pieces".into()));
    }
    let mut pieces = Vec::with_capacity(spec.pieces.len());
    let mut t_prev = 0.0;
    let mut a = 0.0;
    for (k, p) in spec.pieces.iter().enumerate() {
        if (p.t_start - t_prev).abs() > 1e-12 || !(p.t_end > p.t_start) {
            return Err(MarketError::Invalid(format!(
                "piece {k} [{}, {}] does not continue the partition at {t_prev}",
                p.t_start, p.t_end
            )));
        }
        if p.drift.len() != d || p.vol.len() != d || p.vol.iter().any(|row| row.len() != d) {
            return Err(MarketError::Invalid(format!("piece {k} has wrong dimensions for d = {d}")));
        }
        let all = p.vol.iter().flatten().chain(&p.drift).chain(std::iter::once(&p.rate));
        if all.clone().any(|v| !v.is_finite()) {
            return Err(MarketError::Invalid(format!("piece {k} has non-finite coefficients")));
        }
        let sigma = DMatrix::from_fn(d, d, |i, j| p.vol[i][j]);
        let svd = sigma.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > 1e-12 * smax.max(1e-300)) {
            return Err(MarketError::SingularVolatility { piece: k });
        }
        let excess = DVector::from_fn(d, |i, _| p.drift[i] - p.rate);
        let lu_t = sigma.transpose().lu();
        let lambda = lu_t.solve(&excess).ok_or(MarketError::SingularVolatility { piece: k })?;
        let dir = sigma.lu().solve(&lambda).ok_or(MarketError::SingularVolatility { piece: k })?;
        let norm = lambda.norm();
        let b = spec.bounds;
        if !(norm >= b.c0 && norm <= b.c1) {
            return Err(MarketError::RiskPriceOutOfBounds { piece: k, norm, c0: b.c0, c1: b.c1 });
        }
        pieces.push(CurvePiece {
            t_start: p.t_start,
            t_end: p.t_end,
            lambda: lambda.iter().copied().collect(),
            sigma_inv_lambda: dir.iter().copied().collect(),
            lambda_sq: norm * norm,
            a_start: a,
        });
        a += norm * norm * (p.t_end - p.t_start);
        t_prev = p.t_end;
    }
    if (t_prev - spec.horizon).abs() > 1e-12 {
        return Err(MarketError::Invalid(format!(
            "pieces end at {t_prev}, horizon is {}",
            spec.horizon
        )));
    }
    Ok(MarketCurves { horizon: spec.horizon, pieces })
}

pub fn cumulative_variance(curves: &MarketCurves, t: f64) -> Result<f64, MarketError> {
    curves.a(t)
}

impl MarketCurves {
    fn piece_at(&self, t: f64) -> Result<&CurvePiece, MarketError> {
        if !(t >= -1e-14 && t <= self.horizon + 1e-12) {
            return Err(MarketError::TimeOutOfRange { t, horizon: self.horizon });
        }
        let k = self.pieces.partition_point(|p| p.t_end < t).min(self.pieces.len() - 1);
        Ok(&self.pieces[k])
    }

    /// `A(t)`, exact for piecewise-constant λ.
    pub fn a(&self, t: f64) -> Result<f64, MarketError> {
        let p = self.piece_at(t)?;
        let t = t.clamp(0.0, self.horizon);
        Ok(p.a_start + p.lambda_sq * (t - p.t_start))
    }

    /// `A(T)` at the market horizon.
    pub fn a_total(&self) -> f64 {
        let p = &self.pieces[self.pieces.len() - 1];
        p.a_start + p.lambda_sq * (p.t_end - p.t_start)
    }

    pub fn lambda(&self, t: f64) -> Result<&[f64], MarketError> {
        Ok(&self.piece_at(t)?.lambda)
    }

    pub fn lambda_sq(&self, t: f64) -> Result<f64, MarketError> {
        Ok(self.piece_at(t)?.lambda_sq)
    }

    pub fn sigma_inv_lambda(&self, t: f64) -> Result<&[f64], MarketError> {
        Ok(&self.piece_at(t)?.sigma_inv_lambda)
    }

    /// Calendar time at which `A` reaches `a` (inverse of the strictly increasing `A`).
    pub fn time_for_variance(&self, a: f64) -> Result<f64, MarketError> {
        let total = self.a_total();
        if !(a >= 0.0 && a <= total * (1.0 + 1e-14)) {
            return Err(MarketError::TimeOutOfRange { t: a, horizon: total });
        }
        for p in &self.pieces {
            let a_end = p.a_start + p.lambda_sq * (p.t_end - p.t_start);
            if a <= a_end {
                return Ok(p.t_start + (a - p.a_start) / p.lambda_sq);
            }
        }
        Ok(self.horizon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_single_asset() {
        let c = build_curves(&MarketSpec::single_asset(0.06, 0.02, 0.2, 1.0)).unwrap();
        assert!((c.lambda(0.3).unwrap()[0] - 0.2).abs() < 1e-15);
        assert!((c.a(1.0).unwrap() - 0.04).abs() < 1e-15);
        assert_eq!(c.a(0.0).unwrap(), 0.0);
        assert!((c.sigma_inv_lambda(0.5).unwrap()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_assets_identity_vol() {
        let spec = MarketSpec {
            d: 2,
            horizon: 1.0,
            pieces: vec![MarketPiece {
                t_start: 0.0,
                t_end: 1.0,
                rate: 0.0,
                drift: vec![0.1, 0.2],
                vol: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            }],
            bounds: RiskBounds::default(),
        };
        let c = build_curves(&spec).unwrap();
        assert!((c.a(1.0).unwrap() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn piecewise_variance_and_inverse() {
        let c = build_curves(&MarketSpec::piecewise_lambda(&[0.0, 0.5, 1.0], &[0.2, 0.4])).unwrap();
        assert!((c.a(1.0).unwrap() - 0.10).abs() < 1e-15);
        assert!((c.a(0.75).unwrap() - 0.06).abs() < 1e-15);
        assert!((c.time_for_variance(0.06).unwrap() - 0.75).abs() < 1e-14);
        assert!(matches!(c.a(1.5), Err(MarketError::TimeOutOfRange { .. })));
    }

    #[test]
    fn zero_risk_premium_is_rejected() {
        let r = build_curves(&MarketSpec::single_asset(0.02, 0.02, 0.2, 1.0));
        assert!(matches!(r, Err(MarketError::RiskPriceOutOfBounds { .. })));
    }

    #[test]
    fn singular_volatility_is_rejected() {
        let mut spec = MarketSpec::single_asset(0.06, 0.02, 0.2, 1.0);
        spec.d = 2;
        spec.pieces[0].drift = vec![0.06, 0.06];
        spec.pieces[0].vol = vec![vec![0.2, 0.1], vec![0.4, 0.2]];
        assert!(matches!(build_curves(&spec), Err(MarketError::SingularVolatility { .. })));
    }
}
