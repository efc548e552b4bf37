pub mod distribution;
pub mod error;
pub mod forward;
pub mod fixed_horizon;
pub mod intermediate;
pub mod harmonic;
pub mod market;
pub mod numerics;
pub mod simulation;
pub mod single_period;
