//! Wire documents shared by the HTTP API and the CLI.

use serde::{Deserialize, Serialize};
use wealth_target::fixed_horizon::ParametricFamily;
use wealth_target::forward::{Normalization, PerformanceBranch, RecoveredMeasure};
use wealth_target::intermediate::AssumptionReport;
use wealth_target::market::MarketSpec;
use wealth_target::numerics::QuadratureSpec;
use wealth_target::simulation::{CheckReport, Fan, Mode, SimulationConfig};
use wealth_target::single_period::{BuilderSession, MarginalPoints, Realization, SessionStatus};

/// A target distribution as submitted. Parametric families may omit their
/// parameter, in which case it is solved from the budget constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionInput {
    Lognormal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<f64>,
    },
    TransformedNormal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<f64>,
    },
    Markers {
        levels: Vec<f64>,
    },
    CustomQuantileTable {
        table: Vec<(f64, f64)>,
    },
    /// `a` defaults to the cumulative squared risk at the target time.
    WholeLine {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<f64>,
    },
}

impl DistributionInput {
    pub fn parametric_family(&self) -> Option<ParametricFamily> {
        match self {
            DistributionInput::Lognormal { b: None } => Some(ParametricFamily::Lognormal),
            DistributionInput::TransformedNormal { b: None } => Some(ParametricFamily::TransformedNormal),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EngineMode {
    #[default]
    Terminal,
    Intermediate,
    Forward,
}

impl EngineMode {
    pub fn clock(self) -> Mode {
        match self {
            EngineMode::Forward => Mode::Forward,
            _ => Mode::Fixed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComputeRequest {
    pub market: MarketSpec,
    pub distribution: DistributionInput,
    pub x0: f64,
    #[serde(default)]
    pub mode: EngineMode,
    /// Defaults to the market horizon; required for the intermediate mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityResponse {
    pub feasible: bool,
    pub mode: EngineMode,
    pub target_time: f64,
    /// Cumulative squared risk at the target time.
    pub a_target: f64,
    pub budget_value: f64,
    pub relative_gap: f64,
    pub quadrature_error_estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solved_parameter: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub coefficient: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PreferenceResult {
    /// `(x, U_T′(x))` on a log-spaced wealth grid.
    MarginalUtility {
        target_time: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        solved_parameter: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        closed_form: Option<String>,
        samples: Vec<(f64, f64)>,
    },
    /// `(y, I_T(y))`, with `I_T(e^{−w}) = Σ coefficient·e^{rate·w}` when closed.
    InverseMarginal {
        target_time: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        solved_parameter: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        closed_form_terms: Option<Vec<ExpTerm>>,
        assumptions: AssumptionReport,
        samples: Vec<(f64, f64)>,
    },
    /// Recovered measure with `(x, u₀′(x))` samples.
    ForwardMeasure {
        target_time: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        solved_parameter: Option<f64>,
        measure: RecoveredMeasure,
        normalization: Normalization,
        performance_branch: PerformanceBranch,
        initial_datum: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateRequest {
    #[serde(flatten)]
    pub compute: ComputeRequest,
    #[serde(default)]
    pub config: SimulationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub mode: EngineMode,
    pub x0: f64,
    pub seed: u64,
    pub dt: f64,
    pub path_count: usize,
    pub horizon: f64,
    pub target_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solved_parameter: Option<f64>,
    pub checks: CheckReport,
    pub all_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateResponse {
    pub summary: SimulationSummary,
    pub fan: Fan,
}

pub const FAN_LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    #[serde(rename = "N", alias = "n")]
    pub n: usize,
    pub budget: f64,
    pub mu: f64,
    pub sigma: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkersUpdate {
    pub markers: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizeRequest {
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub id: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub budget: f64,
    pub markers: Vec<f64>,
    pub cost: f64,
    pub cost_fraction: f64,
    pub status: SessionStatus,
    pub pricing_exponent: f64,
    pub state_prices: Vec<f64>,
    pub stock_states: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realized: Option<Realization>,
}

impl SessionState {
    pub fn new(id: &str, s: &BuilderSession) -> Self {
        Self {
            id: id.to_string(),
            n: s.market.n,
            budget: s.budget,
            markers: s.markers.clone(),
            cost: s.cost,
            cost_fraction: s.cost / s.budget,
            status: s.status,
            pricing_exponent: s.market.pricing_exponent,
            state_prices: s.market.state_prices.clone(),
            stock_states: s.market.stock_states.clone(),
            realized: s.realized,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub session: SessionState,
    pub marginal: MarginalPoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizeResponse {
    pub session: SessionState,
    pub realization: Realization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub status: u16,
    /// Machine-readable cause, e.g. `infeasible-wealth`.
    pub code: String,
    pub message: String,
}
