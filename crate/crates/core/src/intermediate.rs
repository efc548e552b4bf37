//! Target placed at an intermediate time `T̂ < T`.
//!
//! With `c = √((A_T − A_T̂)/2)` and `G(z) = F⁻¹(Φ(cz/√A_T̂))` entire, the
//! terminal inverse marginal utility is the inverse Weierstrass transform
//! `I_T(e^{−cx}) = E[G(x + iY)]`, `Y ~ N(0, 2)`.

use crate::distribution::{analytic_extension, AnalyticQuantileExtension, TargetDistribution};
use crate::error::EngineError;
use crate::fixed_horizon::{budget_integral, check_feasibility, Feasibility};
use crate::harmonic::{Backing, Clock, ConvolutionHarmonic, ExpSumHarmonic, HarmonicFunction};
use crate::market::MarketCurves;
use crate::numerics::{gaussian_integrate, LogHermiteGrid, QuadratureSpec};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Relative tolerance on the imaginary part left by the inversion quadrature.
pub const IMAGINARY_TOLERANCE: f64 = 1e-8;

fn check_target_time(curves: &MarketCurves, t_hat: f64) -> Result<(), EngineError> {
    if t_hat > 0.0 && t_hat < curves.horizon {
        Ok(())
    } else {
        Err(EngineError::TimeOutOfRange { t: t_hat, range: format!("(0, {})", curves.horizon) })
    }
}

pub fn budget_constraint_intermediate(
    dist: &TargetDistribution,
    curves: &MarketCurves,
    t_hat: f64,
    spec: &QuadratureSpec,
) -> Result<f64, EngineError> {
    check_target_time(curves, t_hat)?;
    crate::fixed_horizon::budget_constraint_terminal(dist, curves, t_hat, spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub entire: bool,
    pub growth_ok: bool,
    pub real_nonneg_ok: bool,
    pub details: Vec<String>,
}

impl AssumptionReport {
    pub fn all_ok(&self) -> bool {
        self.entire && self.growth_ok && self.real_nonneg_ok
    }
}

/// Numerical certificate for the three conditions on `G`.
pub fn verify_assumptions(ext: &AnalyticQuantileExtension) -> AssumptionReport {
    let mut details = Vec::new();
    let entire = true;
    if ext.exp_sum().is_some() {
        details.push("entire: closed-form exponential sum".into());
    } else {
        details.push("entire: asserted by the caller".into());
    }

    // sup over x ∈ [−3, 3] of |G(x + iy)| / (|y| e^{y²/4}) must fall toward 0.
    let xs: Vec<f64> = (0..=24).map(|i| -3.0 + 0.25 * i as f64).collect();
    let ratio = |y: f64| {
        xs.iter()
            .map(|&x| ext.eval(Complex64::new(x, y)).norm() / (y.abs() * (0.25 * y * y).exp()))
            .fold(0.0, f64::max)
    };
    let mut growth_ok = true;
    for sign in [1.0, -1.0] {
        let seq: Vec<f64> = (1..=20).map(|k| ratio(sign * k as f64)).collect();
        let tail_decreasing = seq[9..].windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
        let vanishing = seq[19] <= 1e-6 * seq.iter().copied().fold(f64::MIN_POSITIVE, f64::max);
        if !(tail_decreasing && vanishing && seq.iter().all(|v| v.is_finite())) {
            growth_ok = false;
            details.push(format!(
                "growth: |G(x+iy)|/(|y|e^(y^2/4)) does not vanish for y -> {}inf (ratio at |y|=20: {:e})",
                if sign > 0.0 { "+" } else { "-" },
                seq[19]
            ));
        }
    }
    if growth_ok {
        details.push("growth: ratio decreases to 0 for |y| up to 20".into());
    }

    // g(x, t) = E[G(x + iY)], Y ~ N(0, 2t): real and nonnegative.
    let spec = QuadratureSpec::default();
    let mut real_nonneg_ok = true;
    'outer: for &t in &[0.25, 0.5, 0.75, 0.99] {
        for i in 0..=12 {
            let x = -3.0 + 0.5 * i as f64;
            let g: Result<Complex64, _> =
                gaussian_integrate(|y| ext.eval(Complex64::new(x, y)), 0.0, 2.0 * t, &spec);
            match g {
                Ok(g) if g.im.abs() < IMAGINARY_TOLERANCE * g.re.abs().max(1.0) && g.re >= -1e-10 => {}
                Ok(g) => {
                    real_nonneg_ok = false;
                    details.push(format!("real/nonnegative: g({x}, {t}) = {} + {}i", g.re, g.im));
                    break 'outer;
                }
                Err(e) => {
                    real_nonneg_ok = false;
                    details.push(format!("real/nonnegative: g({x}, {t}) failed: {e}"));
                    break 'outer;
                }
            }
        }
    }
    if real_nonneg_ok {
        details.push("real/nonnegative: g(x,t) real and >= 0 on the probe grid".into());
    }
    AssumptionReport { entire, growth_ok, real_nonneg_ok, details }
}

const INVERSE_GRID_POINTS: usize = 4097;
const INVERSE_GRID_HALF_WIDTH: f64 = 36.0;

/// `I_T` obtained by inverting the Weierstrass transform, stored on the
/// `y = −log x` scale with a cached interpolation grid.
#[derive(Debug, Clone)]
pub struct InverseMarginal {
    ext: AnalyticQuantileExtension,
    c: f64,
    spec: QuadratureSpec,
    grid: Arc<LogHermiteGrid>,
}

impl InverseMarginal {
    /// `(I_T(e^{−y}), d/dy I_T(e^{−y}))` by direct complex quadrature.
    pub fn eval_direct(&self, y: f64) -> Result<(f64, f64), EngineError> {
        let c = self.c;
        let v: Complex64 = gaussian_integrate(|s| self.ext.eval(Complex64::new(y / c, s)), 0.0, 2.0, &self.spec)?;
        let d: Complex64 = gaussian_integrate(|s| self.ext.deriv(Complex64::new(y / c, s)), 0.0, 2.0, &self.spec)?;
        for z in [v, d] {
            if z.im.abs() > IMAGINARY_TOLERANCE * z.re.abs() {
                return Err(EngineError::ComplexResidue { re: z.re, im: z.im });
            }
        }
        if !(v.re > 0.0) {
            return Err(EngineError::AssumptionViolated(format!("I_T(e^(-{y})) = {} is not positive", v.re)));
        }
        Ok((v.re, d.re / c))
    }

    /// `I_T(e^{−y})` and its `y`-derivative.
    pub fn eval_log(&self, y: f64) -> Result<(f64, f64), EngineError> {
        match self.grid.eval(y) {
            Some(r) => Ok(r),
            None => self.eval_direct(y),
        }
    }

    /// Inverse marginal utility `I_T(x)`, `x > 0`.
    pub fn eval(&self, x: f64) -> Result<f64, EngineError> {
        Ok(self.eval_log(-x.ln())?.0)
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Exponential-sum form `Σ a_j e^{s_j y}` of `I_T(e^{−y})` when `G` is one.
    pub fn closed_form(&self) -> Option<Vec<(f64, f64)>> {
        let e = self.ext.exp_sum()?;
        Some(e.terms.iter().map(|&(a, k)| (a * (-k * k).exp(), k / self.c)).collect())
    }
}

/// Recovers `I_T` from an analytic extension built with `c = √((A_T − A_T̂)/2)`.
pub fn weierstrass_invert(
    ext: &AnalyticQuantileExtension,
    curves: &MarketCurves,
    t_hat: f64,
    spec: &QuadratureSpec,
) -> Result<InverseMarginal, EngineError> {
    check_target_time(curves, t_hat)?;
    let report = verify_assumptions(ext);
    if !report.all_ok() {
        return Err(EngineError::AssumptionViolated(report.details.join("; ")));
    }
    let a_total = curves.a_total();
    let c = ((a_total - curves.a(t_hat)?) / 2.0).sqrt();
    let mut inv = InverseMarginal {
        ext: ext.clone(),
        c,
        spec: *spec,
        grid: Arc::new(LogHermiteGrid::new(0.0, 1.0, &[1.0, 1.0], &[0.0, 0.0]).expect("placeholder grid")),
    };
    let half = INVERSE_GRID_HALF_WIDTH * a_total.sqrt();
    let step = 2.0 * half / (INVERSE_GRID_POINTS - 1) as f64;
    let mut vals = Vec::with_capacity(INVERSE_GRID_POINTS);
    let mut ders = Vec::with_capacity(INVERSE_GRID_POINTS);
    for k in 0..INVERSE_GRID_POINTS {
        let (v, d) = inv.eval_direct(-half + k as f64 * step)?;
        vals.push(v);
        ders.push(d);
    }
    inv.grid = Arc::new(
        LogHermiteGrid::new(-half, step, &vals, &ders)
            .ok_or_else(|| EngineError::AssumptionViolated("I_T is not positive on its grid".into()))?,
    );
    Ok(inv)
}

/// `h(x, t) = E[I_T(e^{−(x + √(A_T − A_t) S)})]` by cached Gaussian convolution.
pub fn harmonic_intermediate(
    inv: &InverseMarginal,
    curves: &MarketCurves,
    spec: &QuadratureSpec,
) -> ConvolutionHarmonic {
    let inv = inv.clone();
    let terminal = Arc::new(move |y: f64| inv.eval_log(y));
    ConvolutionHarmonic::new(terminal, curves.clone(), curves.a_total(), *spec)
}

/// Closed-form `h` for exponential-sum `G`.
pub fn harmonic_intermediate_closed(inv: &InverseMarginal, curves: &MarketCurves) -> Option<ExpSumHarmonic> {
    let terms = inv.closed_form()?;
    Some(ExpSumHarmonic::new(terms, curves.a_total(), Clock::Calendar(curves.clone()), Backing::ClosedForm))
}

/// Gaussian smoothing of `I_T(e^{−cy})` with variance 2; reproduces `G` when the
/// inversion is right.
pub fn weierstrass_forward(inv: &InverseMarginal, x: f64, spec: &QuadratureSpec) -> Result<f64, EngineError> {
    let c = inv.c;
    let err = std::cell::Cell::new(None);
    let v: f64 = gaussian_integrate(
        |y| match inv.eval_log(c * y) {
            Ok(v) => v.0,
            Err(e) => {
                err.set(Some(e));
                0.0
            }
        },
        x,
        2.0,
        spec,
    )?;
    match err.take() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

pub struct IntermediateSolution {
    pub target_time: f64,
    pub a_hat: f64,
    pub a_total: f64,
    pub c: f64,
    pub feasibility: Feasibility,
    pub assumption_report: AssumptionReport,
    pub inverse_marginal: InverseMarginal,
    pub h: Arc<dyn HarmonicFunction>,
}

impl std::fmt::Debug for IntermediateSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IntermediateSolution")
            .field("target_time", &self.target_time)
            .field("a_hat", &self.a_hat)
            .field("c", &self.c)
            .field("feasibility", &self.feasibility)
            .finish_non_exhaustive()
    }
}

impl IntermediateSolution {
    /// `h⁻¹(x₀, 0) = −A_T̂`.
    pub fn start(&self) -> f64 {
        -self.a_hat
    }
}

pub fn solve_intermediate(
    dist: &TargetDistribution,
    curves: &MarketCurves,
    t_hat: f64,
    x0: f64,
    spec: &QuadratureSpec,
) -> Result<IntermediateSolution, EngineError> {
    check_target_time(curves, t_hat)?;
    let a_hat = curves.a(t_hat)?;
    let a_total = curves.a_total();
    let c = ((a_total - a_hat) / 2.0).sqrt();
    let ext = analytic_extension(dist, c, a_hat).map_err(|e| {
        EngineError::AssumptionViolated(format!(
            "{e}; use the terminal or forward engine for this target"
        ))
    })?;
    let assumption_report = verify_assumptions(&ext);
    if !assumption_report.all_ok() {
        return Err(EngineError::AssumptionViolated(assumption_report.details.join("; ")));
    }
    budget_integral(dist, a_hat, spec)?;
    let feasibility = check_feasibility(dist, a_hat, x0, spec)?;
    if !feasibility.feasible {
        return Err(EngineError::BudgetViolated { x0, budget: feasibility.budget });
    }
    let inverse_marginal = weierstrass_invert(&ext, curves, t_hat, spec)?;
    let h: Arc<dyn HarmonicFunction> = Arc::new(harmonic_intermediate(&inverse_marginal, curves, spec));
    Ok(IntermediateSolution {
        target_time: t_hat,
        a_hat,
        a_total,
        c,
        feasibility,
        assumption_report,
        inverse_marginal,
        h,
    })
}
