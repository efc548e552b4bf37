use crate::distribution::DistributionError;
use crate::market::MarketError;
use crate::numerics::NumericsError;
use thiserror::Error;

/// Failures of the continuous-time engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error("integral diverges or is ill-conditioned: {0}")]
    IntegralDivergence(String),
    #[error("initial wealth {x0} is below the attainable minimum {min}")]
    InfeasibleWealth { x0: f64, min: f64 },
    #[error("no parameter root: {0}")]
    NoRoot(String),
    #[error("budget violated: x0 = {x0}, budget integral = {budget}")]
    BudgetViolated { x0: f64, budget: f64 },
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("imaginary residue {im} exceeds tolerance for value {re}")]
    ComplexResidue { re: f64, im: f64 },
    #[error("time {t} outside the admissible range {range}")]
    TimeOutOfRange { t: f64, range: String },
    #[error("evaluation at x = {x}, t = {t} left the cached grid and direct quadrature failed")]
    EvaluationOutOfGrid { x: f64, t: f64 },
    #[error("target density vanishes at score {z}")]
    DensityVanishes { z: f64 },
    #[error("measure recovery failed: {0}")]
    RecoveryFailure(String),
    #[error("recovered measure has negative mass {0}")]
    NegativeMass(f64),
    #[error("recovered measure puts mass {mass} on y <= 0")]
    SupportViolation { mass: f64 },
    #[error("inadmissible measure: {0}")]
    Inadmissible(String),
    #[error("unsupported distribution: {0}")]
    UnsupportedDistribution(String),
}
