//! Markovian multi-curve HJM model with separable volatility and
//! square-root stochastic variances.
//!
//! Paths are generated under a single measure whose numeraire accrues at the
//! collateral rate; forward-measure expectations are obtained by deflating
//! with `D(0, t; e) = P_0(t) exp(−∫_0^t Σ X)`.

mod reconstruct;
mod simulate;
mod spec;
mod state;

pub(crate) use reconstruct::ForwardKernel;
pub use reconstruct::{g0_integral, g_factor, g_integrals, reconstruct_bond, reconstruct_forward};
pub use simulate::{merge_times, simulate, PathEnsemble, SimulationGrid, GRID_TOLERANCE};
pub use spec::{VolatilityParams, VolatilitySpec};
pub use state::{evolve_state, MarkovState, StateView};

use crate::curves::CurveError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HjmError {
    #[error("invalid interval: {start} > {end}")]
    InvalidInterval { start: f64, end: f64 },
    #[error("time step must be positive, got {0}")]
    NonPositiveDt(f64),
    #[error("expected {expected} factors, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("state at t = {t} is past the fixing date {limit}")]
    StaleState { t: f64, limit: f64 },
    #[error("simulation grid is empty")]
    EmptyGrid,
    #[error("simulation grid must start at 0 and increase strictly")]
    InvalidGrid,
    #[error("at least one path is required")]
    NoPaths,
    #[error("invalid volatility specification: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
}
