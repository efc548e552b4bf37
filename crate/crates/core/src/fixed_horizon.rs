//! Terminal-time target: the budget constraint, the implied marginal utility
//! `U′(x) = exp(−√A_T Φ⁻¹(F(x)))` and the harmonic function behind the optimal
//! policies.

use crate::distribution::{
    lognormal_family, transformed_normal_family, FamilyTag, GrowthClass, TargetDistribution,
};
use crate::error::EngineError;
use crate::harmonic::{Backing, Clock, ConvolutionHarmonic, ExpSumHarmonic, HarmonicFunction};
use crate::market::MarketCurves;
use crate::numerics::{bracketed_root, gaussian_integrate, tanh_sinh_unit, QuadratureSpec};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Relative band within which the budget integral must match `x₀`.
pub const BUDGET_TOLERANCE: f64 = 1e-6;

/// `E[Q(S − √a)]`, `S ~ N(0,1)`: the cost of the target when the deflator has log-variance `a`.
pub fn budget_integral(dist: &TargetDistribution, a: f64, spec: &QuadratureSpec) -> Result<f64, EngineError> {
    if !(a > 0.0) {
        return Err(EngineError::TimeOutOfRange { t: a, range: "A > 0".into() });
    }
    if !dist.verify_growth(dist.growth_class()) {
        return Err(EngineError::IntegralDivergence(format!(
            "{} target fails its growth certificate",
            dist.family()
        )));
    }
    let sa = a.sqrt();
    Ok(gaussian_integrate(|y| dist.score_quantile((y - a) / sa), 0.0, a, spec)?)
}

fn require_exponential_growth(dist: &TargetDistribution) -> Result<(), EngineError> {
    match dist.growth_class() {
        GrowthClass::Exponential { .. } if dist.is_positive() => Ok(()),
        _ => Err(EngineError::UnsupportedDistribution(format!(
            "the {} target needs exponential growth on (0, ∞) for the expected-utility engines",
            dist.family()
        ))),
    }
}

pub fn budget_constraint_terminal(
    dist: &TargetDistribution,
    curves: &MarketCurves,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<f64, EngineError> {
    require_exponential_growth(dist)?;
    budget_integral(dist, curves.a(t)?, spec)
}

/// Budget integral together with a cross-scheme error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub x0: f64,
    pub budget: f64,
    pub relative_gap: f64,
    pub quadrature_error_estimate: f64,
}

pub fn check_feasibility(
    dist: &TargetDistribution,
    a: f64,
    x0: f64,
    spec: &QuadratureSpec,
) -> Result<Feasibility, EngineError> {
    let budget = budget_integral(dist, a, spec)?;
    let other = budget_integral(dist, a, &QuadratureSpec::adaptive(spec.truncation_radius.max(8.0)))?;
    let relative_gap = (budget - x0).abs() / x0.abs().max(f64::MIN_POSITIVE);
    Ok(Feasibility {
        feasible: relative_gap <= BUDGET_TOLERANCE,
        x0,
        budget,
        relative_gap,
        quadrature_error_estimate: (budget - other).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParametricFamily {
    Lognormal,
    TransformedNormal,
}

impl ParametricFamily {
    pub fn build(self, b: f64) -> Result<TargetDistribution, EngineError> {
        Ok(match self {
            ParametricFamily::Lognormal => lognormal_family(b)?,
            ParametricFamily::TransformedNormal => transformed_normal_family(b)?,
        })
    }
}

/// Solves for the family parameter `b` whose budget integral, at deflator
/// log-variance `a`, equals `x₀`. The root is searched on `b ≥ a`, where the
/// budget is increasing in `b`.
pub fn solve_parameter_at(
    family: ParametricFamily,
    x0: f64,
    a: f64,
    spec: &QuadratureSpec,
) -> Result<f64, EngineError> {
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(EngineError::InfeasibleWealth { x0, min: 0.0 });
    }
    let budget = |b: f64| -> Result<f64, EngineError> { budget_integral(&family.build(b)?, a, spec) };
    let at_boundary = budget(a)?;
    let rel = (x0.ln() - at_boundary.ln()).abs();
    // At b = a the budget is stationary in b, so the boundary is a double root
    // that bracketing cannot resolve; accept it directly.
    if rel <= 1e-12 {
        return Ok(a);
    }
    if x0 < at_boundary {
        return match family {
            ParametricFamily::Lognormal => Err(EngineError::InfeasibleWealth { x0, min: at_boundary }),
            ParametricFamily::TransformedNormal => Err(EngineError::NoRoot(format!(
                "x0 = {x0} needs b > A; the transformed-normal budget on b > A exceeds {at_boundary}"
            ))),
        };
    }
    let f = |b: f64| budget(b).map(|v| v.ln() - x0.ln()).unwrap_or(f64::NAN);
    let mut hi = 2.0 * a;
    let mut k = 0;
    while !(f(hi) > 0.0) {
        hi *= 2.0;
        k += 1;
        if k > 60 || !hi.is_finite() {
            return Err(EngineError::NoRoot(format!("budget never reaches x0 = {x0}")));
        }
    }
    Ok(bracketed_root(f, a, hi, 1e-15)?)
}

pub fn solve_family_parameter(
    family: ParametricFamily,
    x0: f64,
    curves: &MarketCurves,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<f64, EngineError> {
    solve_parameter_at(family, x0, curves.a(t)?, spec)
}

/// `x ↦ exp(−√a · Φ⁻¹(F(x)))`.
#[derive(Debug, Clone)]
pub struct MarginalUtility {
    dist: TargetDistribution,
    sqrt_a: f64,
}

impl MarginalUtility {
    pub fn new(dist: TargetDistribution, a: f64) -> Self {
        Self { dist, sqrt_a: a.sqrt() }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (-self.sqrt_a * self.dist.score(x)).exp()
    }

    /// Inverse marginal utility `I(m)`.
    pub fn inverse(&self, m: f64) -> f64 {
        self.dist.score_quantile(-m.ln() / self.sqrt_a)
    }

    /// Closed form label when the family has one.
    pub fn closed_form(&self) -> Option<String> {
        let b = self.dist.parameter()?;
        let p = self.sqrt_a / b.sqrt();
        match self.dist.family() {
            FamilyTag::Lognormal => Some(format!("x^(-{p})")),
            FamilyTag::TransformedNormal => Some(format!("(-1 + sqrt(1 + x))^(-{p})")),
            _ => None,
        }
    }
}

pub fn marginal_utility_terminal(
    dist: &TargetDistribution,
    curves: &MarketCurves,
    t: f64,
) -> Result<MarginalUtility, EngineError> {
    require_exponential_growth(dist)?;
    Ok(MarginalUtility::new(dist.clone(), curves.a(t)?))
}

/// The harmonic function with terminal data `h(x, T) = Q(x/√A_T)`; closed form
/// for exponential-sum families, Gaussian convolution otherwise.
pub fn harmonic_fixed(
    dist: &TargetDistribution,
    curves: &MarketCurves,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<Arc<dyn HarmonicFunction>, EngineError> {
    require_exponential_growth(dist)?;
    let a = curves.a(t)?;
    if let Some(e) = dist.exp_sum() {
        let sa = a.sqrt();
        let terms = e.terms.iter().map(|&(c, r)| (c, r / sa)).collect();
        return Ok(Arc::new(ExpSumHarmonic::new(terms, a, Clock::Calendar(curves.clone()), Backing::ClosedForm)));
    }
    Ok(Arc::new(harmonic_fixed_convolution(dist, curves, t, spec)?))
}

/// Always the quadrature-backed variant, whatever the family.
pub fn harmonic_fixed_convolution(
    dist: &TargetDistribution,
    curves: &MarketCurves,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<ConvolutionHarmonic, EngineError> {
    require_exponential_growth(dist)?;
    let a = curves.a(t)?;
    let sa = a.sqrt();
    let d = dist.clone();
    let terminal = Arc::new(move |y: f64| Ok((d.score_quantile(y / sa), d.score_quantile_dz(y / sa) / sa)));
    Ok(ConvolutionHarmonic::new(terminal, curves.clone(), a, *spec))
}

/// Both sides of the cost-efficiency identity: the Gaussian budget integral and
/// `∫₀¹ F_Z⁻¹(y) F⁻¹(1 − y) dy` with `Z_T` lognormal with log-variance `A_T`.
pub fn cost_efficiency_check(
    dist: &TargetDistribution,
    curves: &MarketCurves,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<(f64, f64), EngineError> {
    let gaussian = budget_constraint_terminal(dist, curves, t, spec)?;
    let a = curves.a(t)?;
    let sa = a.sqrt();
    let coupling = tanh_sinh_unit(|y, yc| {
        let z = if y < 0.5 {
            crate::numerics::norm_quantile(y)
        } else {
            -crate::numerics::norm_quantile(yc)
        };
        (-0.5 * a + sa * z).exp() * dist.score_quantile(-z)
    })?;
    Ok((gaussian, coupling))
}

pub struct FixedHorizonSolution {
    pub target_time: f64,
    pub a_total: f64,
    pub feasibility: Feasibility,
    pub marginal_utility: MarginalUtility,
    pub h: Arc<dyn HarmonicFunction>,
}

impl std::fmt::Debug for FixedHorizonSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FixedHorizonSolution")
            .field("target_time", &self.target_time)
            .field("a_total", &self.a_total)
            .field("feasibility", &self.feasibility)
            .field("backing", &self.h.backing())
            .finish_non_exhaustive()
    }
}

impl FixedHorizonSolution {
    /// `h⁻¹(x₀, 0)`, which equals `−A_T` when the budget binds.
    pub fn start(&self) -> f64 {
        -self.a_total
    }
}

/// Checks the budget at `x₀` and assembles marginal utility and `h`.
pub fn solve_terminal(
    dist: &TargetDistribution,
    curves: &MarketCurves,
    t: f64,
    x0: f64,
    spec: &QuadratureSpec,
) -> Result<FixedHorizonSolution, EngineError> {
    require_exponential_growth(dist)?;
    let a = curves.a(t)?;
    let feasibility = check_feasibility(dist, a, x0, spec)?;
    if !feasibility.feasible {
        return Err(EngineError::BudgetViolated { x0, budget: feasibility.budget });
    }
    Ok(FixedHorizonSolution {
        target_time: t,
        a_total: a,
        feasibility,
        marginal_utility: marginal_utility_terminal(dist, curves, t)?,
        h: harmonic_fixed(dist, curves, t, spec)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{build_curves, MarketSpec};

    fn curves() -> MarketCurves {
        build_curves(&MarketSpec::single_asset(0.06, 0.02, 0.2, 1.0)).unwrap()
    }

    #[test]
    fn lognormal_budget_examples() {
        let q = QuadratureSpec::default();
        let c = curves();
        let d = lognormal_family(0.16).unwrap();
        assert!((budget_constraint_terminal(&d, &c, 1.0, &q).unwrap() - 1.0).abs() < 1e-14);
        let d = lognormal_family(0.04).unwrap();
        assert!((budget_constraint_terminal(&d, &c, 1.0, &q).unwrap() - (-0.02f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn infeasible_lognormal_wealth() {
        let r = solve_family_parameter(ParametricFamily::Lognormal, 0.97, &curves(), 1.0, &QuadratureSpec::default());
        assert!(matches!(r, Err(EngineError::InfeasibleWealth { .. })));
    }

    #[test]
    fn transformed_normal_below_domain_has_no_root() {
        let r = solve_family_parameter(ParametricFamily::TransformedNormal, 2.5, &curves(), 1.0, &QuadratureSpec::default());
        assert!(matches!(r, Err(EngineError::NoRoot(_))));
    }

    #[test]
    fn median_marginal_utility_is_one() {
        let d = transformed_normal_family(0.3).unwrap();
        let u = marginal_utility_terminal(&d, &curves(), 1.0).unwrap();
        assert!((u.eval(3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn terminal_data_at_horizon() {
        let d = lognormal_family(0.16).unwrap();
        let h = harmonic_fixed_convolution(&d, &curves(), 1.0, &QuadratureSpec::default()).unwrap();
        let x = 0.17;
        assert!((h.value(x, 1.0).unwrap() - d.score_quantile(x / 0.2)).abs() < 1e-15);
    }
}
