//! Request handling shared by the HTTP handlers and the CLI: pure functions of
//! the request document.

use crate::error::ServiceError;
use crate::schema::*;
use wealth_target::distribution::*;
use wealth_target::fixed_horizon::{
    budget_constraint_terminal, check_feasibility, solve_family_parameter, solve_terminal, FixedHorizonSolution,
};
use wealth_target::forward::{budget_constraint_forward, solve_forward, ForwardSolution};
use wealth_target::harmonic::HarmonicFunction;
use wealth_target::intermediate::{budget_constraint_intermediate, solve_intermediate, IntermediateSolution};
use wealth_target::market::{build_curves, MarketCurves};
use wealth_target::numerics::QuadratureSpec;
use wealth_target::simulation::{run_checks, simulate, PathBundle};

const SAMPLE_POINTS: usize = 64;

/// A request with its market built and its distribution fully parameterized.
#[derive(Debug)]
pub struct Resolved {
    pub mode: EngineMode,
    pub curves: MarketCurves,
    pub dist: TargetDistribution,
    pub x0: f64,
    pub target_time: f64,
    pub a_target: f64,
    pub solved_parameter: Option<f64>,
    pub quadrature: QuadratureSpec,
}

pub fn resolve(req: &ComputeRequest, default_quadrature: &QuadratureSpec) -> Result<Resolved, ServiceError> {
    if !(req.x0 > 0.0 && req.x0.is_finite()) {
        return Err(ServiceError::Invalid(format!("x0 must be positive and finite, got {}", req.x0)));
    }
    let curves = build_curves(&req.market)?;
    let target_time = match (req.mode, req.target_time) {
        (_, Some(t)) => t,
        (EngineMode::Intermediate, None) => {
            return Err(ServiceError::Invalid("the intermediate mode needs target_time".into()))
        }
        (_, None) => curves.horizon,
    };
    let a_target = curves.a(target_time)?;
    let q = req.quadrature.unwrap_or(*default_quadrature);
    let mut solved_parameter = None;
    let dist = match (&req.distribution, req.distribution.parametric_family()) {
        (_, Some(family)) => {
            let b = solve_family_parameter(family, req.x0, &curves, target_time, &q)?;
            solved_parameter = Some(b);
            family.build(b)?
        }
        (DistributionInput::Lognormal { b: Some(b) }, _) => lognormal_family(*b)?,
        (DistributionInput::TransformedNormal { b: Some(b) }, _) => transformed_normal_family(*b)?,
        (DistributionInput::Markers { levels }, _) => from_markers(levels)?,
        (DistributionInput::CustomQuantileTable { table }, _) => from_quantile_table(table)?,
        (DistributionInput::WholeLine { a }, _) => whole_line_family(a.unwrap_or(a_target))?,
        _ => unreachable!("parametric families without a parameter are solved above"),
    };
    Ok(Resolved { mode: req.mode, curves, dist, x0: req.x0, target_time, a_target, solved_parameter, quadrature: q })
}

pub fn feasibility(req: &ComputeRequest, q: &QuadratureSpec) -> Result<FeasibilityResponse, ServiceError> {
    let r = resolve(req, q)?;
    // The mode-specific constraint enforces that mode's growth class and time range.
    match r.mode {
        EngineMode::Terminal => budget_constraint_terminal(&r.dist, &r.curves, r.target_time, &r.quadrature)?,
        EngineMode::Intermediate => {
            budget_constraint_intermediate(&r.dist, &r.curves, r.target_time, &r.quadrature)?
        }
        EngineMode::Forward => budget_constraint_forward(&r.dist, &r.curves, r.target_time, &r.quadrature)?,
    };
    let f = check_feasibility(&r.dist, r.a_target, r.x0, &r.quadrature)?;
    Ok(FeasibilityResponse {
        feasible: f.feasible,
        mode: r.mode,
        target_time: r.target_time,
        a_target: r.a_target,
        budget_value: f.budget,
        relative_gap: f.relative_gap,
        quadrature_error_estimate: f.quadrature_error_estimate,
        solved_parameter: r.solved_parameter,
    })
}

pub enum Solution {
    Terminal(FixedHorizonSolution),
    Intermediate(IntermediateSolution),
    Forward(ForwardSolution),
}

impl Solution {
    pub fn harmonic(&self) -> &dyn HarmonicFunction {
        match self {
            Solution::Terminal(s) => s.h.as_ref(),
            Solution::Intermediate(s) => s.h.as_ref(),
            Solution::Forward(s) => s.h.as_ref(),
        }
    }
}

pub fn solve(r: &Resolved) -> Result<Solution, ServiceError> {
    let q = &r.quadrature;
    Ok(match r.mode {
        EngineMode::Terminal => Solution::Terminal(solve_terminal(&r.dist, &r.curves, r.target_time, r.x0, q)?),
        EngineMode::Intermediate => {
            Solution::Intermediate(solve_intermediate(&r.dist, &r.curves, r.target_time, r.x0, q)?)
        }
        EngineMode::Forward => Solution::Forward(solve_forward(&r.dist, &r.curves, r.target_time, r.x0, q)?),
    })
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
}

pub fn preferences(req: &ComputeRequest, q: &QuadratureSpec) -> Result<PreferenceResult, ServiceError> {
    let r = resolve(req, q)?;
    let solved_parameter = r.solved_parameter;
    Ok(match solve(&r)? {
        Solution::Terminal(s) => {
            let u = &s.marginal_utility;
            let (lo, hi) = (r.dist.quantile(1e-3), r.dist.quantile(1.0 - 1e-3));
            if !(lo > 0.0 && hi > lo) {
                return Err(ServiceError::Internal(format!("wealth range [{lo}, {hi}] is not positive")));
            }
            PreferenceResult::MarginalUtility {
                target_time: r.target_time,
                solved_parameter,
                closed_form: u.closed_form(),
                samples: log_grid(lo, hi, SAMPLE_POINTS).map(|x| (x, u.eval(x))).collect(),
            }
        }
        Solution::Intermediate(s) => {
            let sd = s.a_total.sqrt();
            let mut samples = (0..SAMPLE_POINTS)
                .map(|i| {
                    let w = sd * (-3.0 + 6.0 * i as f64 / (SAMPLE_POINTS - 1) as f64);
                    Ok(((-w).exp(), s.inverse_marginal.eval_log(w)?.0))
                })
                .collect::<Result<Vec<_>, ServiceError>>()?;
            samples.reverse();
            PreferenceResult::InverseMarginal {
                target_time: r.target_time,
                solved_parameter,
                closed_form_terms: s
                    .inverse_marginal
                    .closed_form()
                    .map(|t| t.into_iter().map(|(coefficient, rate)| ExpTerm { coefficient, rate }).collect()),
                assumptions: s.assumption_report.clone(),
                samples,
            }
        }
        Solution::Forward(s) => {
            let branch = s.performance()?.branch();
            let initial_datum = log_grid(0.1, 10.0, SAMPLE_POINTS)
                .map(|x| Ok((x, s.initial_datum.eval(x)?)))
                .collect::<Result<Vec<_>, ServiceError>>()?;
            PreferenceResult::ForwardMeasure {
                target_time: r.target_time,
                solved_parameter,
                measure: s.measure.clone(),
                normalization: s.normalization,
                performance_branch: branch,
                initial_datum,
            }
        }
    })
}

/// Solves, simulates and runs the configured checks.
pub fn simulate_request(req: &SimulateRequest, q: &QuadratureSpec) -> Result<(SimulateResponse, PathBundle), ServiceError> {
    let r = resolve(&req.compute, q)?;
    let solution = solve(&r)?;
    // Fixed-horizon policies live on [0, T]; the intermediate target is a marked time inside it.
    let (horizon, marks) = match r.mode {
        EngineMode::Intermediate => (r.curves.horizon, vec![r.target_time]),
        _ => (r.target_time, vec![]),
    };
    let cfg = &req.config;
    let bundle = simulate(solution.harmonic(), r.mode.clock(), &r.curves, r.x0, horizon, &marks, cfg)?;
    let checks = run_checks(&bundle, &r.dist, r.target_time, &cfg.checks)?;
    let summary = SimulationSummary {
        mode: r.mode,
        x0: r.x0,
        seed: cfg.seed,
        dt: cfg.dt,
        path_count: cfg.path_count,
        horizon,
        target_time: r.target_time,
        solved_parameter: r.solved_parameter,
        all_pass: checks.all_pass(),
        checks,
    };
    let fan = bundle.fan(&FAN_LEVELS);
    Ok((SimulateResponse { summary, fan }, bundle))
}
