//! Space-time harmonic functions `h(x, t)`: positive, increasing in `x`, and
//! solving the backward heat equation in the variance clock. Optimal wealth is
//! always `h(h⁻¹(x₀, 0) + A_t + M_t, ·)`.

use crate::error::EngineError;
use crate::market::MarketCurves;
use crate::numerics::{expanding_inverse, gaussian_integrate, LogHermiteGrid, Pair, QuadratureSpec};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backing {
    ClosedForm,
    Convolution,
    Measure,
}

pub trait HarmonicFunction: Send + Sync {
    /// `(h, h_x)` at `(x, t)`.
    fn eval(&self, x: f64, t: f64) -> Result<(f64, f64), EngineError>;

    fn value(&self, x: f64, t: f64) -> Result<f64, EngineError> {
        Ok(self.eval(x, t)?.0)
    }

    fn dx(&self, x: f64, t: f64) -> Result<f64, EngineError> {
        Ok(self.eval(x, t)?.1)
    }

    /// Spatial inverse: `x` with `h(x, t) = y`.
    fn inverse(&self, y: f64, t: f64) -> Result<f64, EngineError> {
        let f = |x: f64| self.value(x, t).unwrap_or(f64::NAN);
        Ok(expanding_inverse(f, y, 0.0, 1e-15)?)
    }

    /// Hint that the function will be evaluated at these times.
    fn prepare(&self, _times: &[f64]) {}

    fn backing(&self) -> Backing;
}

/// How the second argument of `h` is read.
#[derive(Debug, Clone)]
pub enum Clock {
    /// Calendar time, mapped through `A(t)` of the market.
    Calendar(MarketCurves),
    /// The argument already is cumulative variance.
    Variance,
}

impl Clock {
    fn variance(&self, t: f64) -> Result<f64, EngineError> {
        match self {
            Clock::Calendar(c) => Ok(c.a(t)?),
            Clock::Variance => {
                if t >= 0.0 {
                    Ok(t)
                } else {
                    Err(EngineError::TimeOutOfRange { t, range: "[0, ∞)".into() })
                }
            }
        }
    }
}

/// `h(x, t) = Σ c_j exp(r_j x + ½ r_j² (v₀ − τ(t)))` with `c_j, r_j > 0`.
#[derive(Debug, Clone)]
pub struct ExpSumHarmonic {
    terms: Vec<(f64, f64)>,
    v0: f64,
    clock: Clock,
    backing: Backing,
}

impl ExpSumHarmonic {
    pub fn new(terms: Vec<(f64, f64)>, v0: f64, clock: Clock, backing: Backing) -> Self {
        debug_assert!(terms.iter().all(|&(c, r)| c > 0.0 && r > 0.0));
        Self { terms, v0, clock, backing }
    }

    pub fn terms(&self) -> &[(f64, f64)] {
        &self.terms
    }
}

impl HarmonicFunction for ExpSumHarmonic {
    fn eval(&self, x: f64, t: f64) -> Result<(f64, f64), EngineError> {
        let s = self.v0 - self.clock.variance(t)?;
        let (mut v, mut d) = (0.0, 0.0);
        for &(c, r) in &self.terms {
            let e = c * (r * x + 0.5 * r * r * s).exp();
            v += e;
            d += r * e;
        }
        Ok((v, d))
    }

    fn inverse(&self, y: f64, t: f64) -> Result<f64, EngineError> {
        let s = self.v0 - self.clock.variance(t)?;
        if !(y > 0.0) {
            return Err(EngineError::Numerics(crate::numerics::NumericsError::OutOfRange {
                y,
                lo: 0.0,
                hi: f64::INFINITY,
            }));
        }
        // Solve in log space, starting from the single-term solution of the first term.
        let (c0, r0) = self.terms[0];
        let mut x = ((y / c0).ln() - 0.5 * r0 * r0 * s) / r0;
        if self.terms.len() == 1 {
            return Ok(x);
        }
        let ly = y.ln();
        let f = |x: f64| -> (f64, f64) {
            let (mut v, mut d) = (0.0, 0.0);
            for &(c, r) in &self.terms {
                let e = c * (r * x + 0.5 * r * r * s).exp();
                v += e;
                d += r * e;
            }
            (v.ln() - ly, d / v)
        };
        // log h is convex and increasing in x, so Newton from the right converges monotonically.
        let (g, _) = f(x);
        if g < 0.0 {
            let mut step = 1.0;
            while f(x + step).0 < 0.0 {
                step *= 2.0;
            }
            x += step;
        }
        for _ in 0..200 {
            let (g, dg) = f(x);
            let nx = x - g / dg;
            if (nx - x).abs() <= 1e-16 * x.abs().max(1.0) {
                return Ok(nx);
            }
            x = nx;
        }
        Ok(x)
    }

    fn backing(&self) -> Backing {
        self.backing
    }
}

/// Terminal data `y ↦ (g(y), g′(y))` for a convolution-backed function.
pub type TerminalData = Arc<dyn Fn(f64) -> Result<(f64, f64), EngineError> + Send + Sync>;

const GRID_POINTS: usize = 513;
const GRID_HALF_WIDTH: f64 = 12.0;
const CACHE_LIMIT: usize = 8192;

/// `h(x, t) = E[g(x + √(A_T − A_t)·S)]` by Gaussian quadrature, with a spatial
/// grid cached per time slice and log-space cubic Hermite interpolation.
pub struct ConvolutionHarmonic {
    terminal: TerminalData,
    curves: MarketCurves,
    a_total: f64,
    spec: QuadratureSpec,
    grid_lo: f64,
    grid_step: f64,
    cache: Mutex<HashMap<u64, Option<Arc<LogHermiteGrid>>>>,
}

impl std::fmt::Debug for ConvolutionHarmonic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvolutionHarmonic")
            .field("a_total", &self.a_total)
            .field("spec", &self.spec)
            .finish_non_exhaustive()
    }
}

impl ConvolutionHarmonic {
    /// `a_total` is the variance at which the terminal data applies (`A_T`).
    pub fn new(terminal: TerminalData, curves: MarketCurves, a_total: f64, spec: QuadratureSpec) -> Self {
        let half = GRID_HALF_WIDTH * a_total.sqrt();
        Self {
            terminal,
            curves,
            a_total,
            spec,
            grid_lo: -half,
            grid_step: 2.0 * half / (GRID_POINTS - 1) as f64,
            cache: Mutex::new(HashMap::new()),
        }
    }

    fn residual_variance(&self, t: f64) -> Result<f64, EngineError> {
        let v = self.a_total - self.curves.a(t)?;
        Ok(v.max(0.0))
    }

    /// Direct quadrature, no cache.
    pub fn eval_direct(&self, x: f64, t: f64) -> Result<(f64, f64), EngineError> {
        let v = self.residual_variance(t)?;
        if v < 1e-10 {
            return (self.terminal)(x);
        }
        let err = std::cell::Cell::new(None);
        let pair = |y: f64| match (self.terminal)(y) {
            Ok((a, b)) => Pair(a, b),
            Err(e) => {
                err.set(Some(e));
                Pair(0.0, 0.0)
            }
        };
        let r: Pair = gaussian_integrate(pair, x, v, &self.spec)?;
        if let Some(e) = err.take() {
            return Err(e);
        }
        Ok((r.0, r.1))
    }

    fn slice(&self, t: f64) -> Result<Option<Arc<LogHermiteGrid>>, EngineError> {
        let key = t.to_bits();
        {
            let cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
            if let Some(s) = cache.get(&key) {
                return Ok(s.clone());
            }
        }
        let mut vals = Vec::with_capacity(GRID_POINTS);
        let mut ders = Vec::with_capacity(GRID_POINTS);
        for k in 0..GRID_POINTS {
            let x = self.grid_lo + k as f64 * self.grid_step;
            let (v, d) = self.eval_direct(x, t)?;
            vals.push(v);
            ders.push(d);
        }
        let grid = LogHermiteGrid::new(self.grid_lo, self.grid_step, &vals, &ders).map(Arc::new);
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, grid.clone());
        Ok(grid)
    }
}

impl HarmonicFunction for ConvolutionHarmonic {
    fn eval(&self, x: f64, t: f64) -> Result<(f64, f64), EngineError> {
        if self.residual_variance(t)? < 1e-10 {
            return (self.terminal)(x);
        }
        if let Some(grid) = self.slice(t)? {
            if let Some(r) = grid.eval(x) {
                return Ok(r);
            }
        }
        let r = self.eval_direct(x, t)?;
        if r.0.is_finite() && r.1.is_finite() {
            Ok(r)
        } else {
            Err(EngineError::EvaluationOutOfGrid { x, t })
        }
    }

    fn inverse(&self, y: f64, t: f64) -> Result<f64, EngineError> {
        let f = |x: f64| self.value(x, t).unwrap_or(f64::NAN);
        Ok(expanding_inverse(f, y, 0.0, 1e-15)?)
    }

    fn prepare(&self, times: &[f64]) {
        for &t in times {
            let _ = self.slice(t);
        }
    }

    fn backing(&self) -> Backing {
        Backing::Convolution
    }
}

/// `h(x + shift, t)`: the affine reparametrization that leaves optimal wealth unchanged.
pub struct ShiftedHarmonic<H> {
    pub inner: H,
    pub shift: f64,
}

impl<H: HarmonicFunction> HarmonicFunction for ShiftedHarmonic<H> {
    fn eval(&self, x: f64, t: f64) -> Result<(f64, f64), EngineError> {
        self.inner.eval(x + self.shift, t)
    }

    fn inverse(&self, y: f64, t: f64) -> Result<f64, EngineError> {
        Ok(self.inner.inverse(y, t)? - self.shift)
    }

    fn prepare(&self, times: &[f64]) {
        self.inner.prepare(times)
    }

    fn backing(&self) -> Backing {
        self.inner.backing()
    }
}

impl<H: HarmonicFunction + ?Sized> HarmonicFunction for Arc<H> {
    fn eval(&self, x: f64, t: f64) -> Result<(f64, f64), EngineError> {
        (**self).eval(x, t)
    }
    fn inverse(&self, y: f64, t: f64) -> Result<f64, EngineError> {
        (**self).inverse(y, t)
    }
    fn prepare(&self, times: &[f64]) {
        (**self).prepare(times)
    }
    fn backing(&self) -> Backing {
        (**self).backing()
    }
}
