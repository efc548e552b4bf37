use thiserror::Error;
use wealth_target::distribution::DistributionError;
use wealth_target::error::EngineError;
use wealth_target::market::MarketError;
use wealth_target::simulation::SimulationError;
use wealth_target::single_period::BuilderError;

/// How a failure should be reported: HTTP status and CLI exit code follow from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed or out-of-range input.
    Invalid,
    /// A well-formed request the mathematics refuses (infeasible, inadmissible, ...).
    Refusal,
    /// Illegal builder session transition.
    Conflict,
    NotFound,
    Internal,
}

impl ErrorClass {
    pub fn http_status(self) -> u16 {
        match self {
            ErrorClass::Invalid => 400,
            ErrorClass::Refusal => 422,
            ErrorClass::Conflict => 409,
            ErrorClass::NotFound => 404,
            ErrorClass::Internal => 500,
        }
    }

    pub fn exit_code(self) -> u8 {
        match self {
            ErrorClass::Refusal => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Builder(#[from] BuilderError),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<SimulationError> for ServiceError {
    fn from(e: SimulationError) -> Self {
        match e {
            SimulationError::Engine(e) => ServiceError::Engine(e),
            SimulationError::InvalidConfig(_) | SimulationError::TimeMismatch { .. } => {
                ServiceError::Invalid(e.to_string())
            }
            other => ServiceError::Internal(other.to_string()),
        }
    }
}

impl From<MarketError> for ServiceError {
    fn from(e: MarketError) -> Self {
        ServiceError::Engine(e.into())
    }
}

impl From<DistributionError> for ServiceError {
    fn from(e: DistributionError) -> Self {
        ServiceError::Engine(e.into())
    }
}

impl ServiceError {
    pub fn class(&self) -> ErrorClass {
        self.classify().0
    }

    /// Stable machine-readable cause.
    pub fn code(&self) -> &'static str {
        self.classify().1
    }

    fn classify(&self) -> (ErrorClass, &'static str) {
        use ErrorClass::*;
        match self {
            ServiceError::Invalid(_) => (Invalid, "invalid-request"),
            ServiceError::UnknownSession(_) => (NotFound, "unknown-session"),
            ServiceError::Internal(_) => (Internal, "internal"),
            ServiceError::Builder(e) => match e {
                BuilderError::IllegalTransition { .. } | BuilderError::NotSubmitted => (Conflict, "illegal-transition"),
                BuilderError::InvalidParameter(_) | BuilderError::DimensionMismatch { .. } => {
                    (Invalid, "invalid-request")
                }
                BuilderError::NoArbitrageViolated { .. } => (Refusal, "no-arbitrage-violated"),
                BuilderError::RootBracketFailure => (Refusal, "no-root"),
            },
            ServiceError::Engine(e) => match e {
                EngineError::Market(MarketError::TimeOutOfRange { .. }) => (Invalid, "time-out-of-range"),
                EngineError::Market(_) => (Invalid, "invalid-market"),
                EngineError::Distribution(DistributionError::GrowthViolation(_)) => (Refusal, "growth-violation"),
                EngineError::Distribution(DistributionError::NoAnalyticExtension(_)) => {
                    (Refusal, "assumption-violated")
                }
                EngineError::Distribution(_) => (Invalid, "invalid-distribution"),
                EngineError::TimeOutOfRange { .. } => (Invalid, "time-out-of-range"),
                EngineError::InfeasibleWealth { .. } => (Refusal, "infeasible-wealth"),
                EngineError::NoRoot(_) => (Refusal, "infeasible-wealth"),
                EngineError::BudgetViolated { .. } => (Refusal, "budget-violated"),
                EngineError::AssumptionViolated(_) => (Refusal, "assumption-violated"),
                EngineError::Inadmissible(_) | EngineError::SupportViolation { .. } => (Refusal, "inadmissible"),
                EngineError::UnsupportedDistribution(_) => (Refusal, "unsupported-distribution"),
                EngineError::IntegralDivergence(_) => (Refusal, "integral-divergence"),
                EngineError::DensityVanishes { .. } => (Refusal, "density-vanishes"),
                EngineError::RecoveryFailure(_) | EngineError::NegativeMass(_) => (Refusal, "recovery-failure"),
                EngineError::ComplexResidue { .. } => (Refusal, "complex-residue"),
                EngineError::Numerics(_) | EngineError::EvaluationOutOfGrid { .. } => (Internal, "numerics"),
            },
        }
    }
}
