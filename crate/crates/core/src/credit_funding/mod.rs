//! Default intensities, funding rates, collateral policies and CCP haircuts.

mod credit;
mod funding;
mod haircut;
mod policy;

pub use credit::{CreditSnapshot, CreditSpec};
pub use funding::{funding_rate, FundingDirection, FundingSpec};
pub use haircut::{empirical_quantile, haircut_price, haircut_var};
pub use policy::{
    collateral_fraction, CollateralMode, CollateralPolicy, HaircutMethod, DEFAULT_MARGIN_PERIOD,
    MAX_MARGIN_PERIOD,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CreditError {
    #[error("invalid credit/funding specification: {0}")]
    InvalidSpec(String),
    #[error("time {0} outside the rate domain")]
    OutOfDomain(f64),
    #[error("collateral fraction {0} outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("quantile level {0} must lie in (0, 1)")]
    InvalidQuantile(f64),
    #[error("current value is zero; relative haircut undefined")]
    ZeroValue,
    #[error("no samples")]
    EmptySamples,
    #[error("CCP policy needs a haircut")]
    MissingHaircut,
}
