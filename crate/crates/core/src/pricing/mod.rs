//! Clean and adjusted valuation of linear interest-rate deals.
//!
//! All prices are pre-default values. Adjusted prices discount coupons at
//! the effective rate `f̃ + ξ`, i.e. pathwise by `exp(−∫ q̃)` on top of the
//! collateral-rate deflator, with the exposure sign resolved by backward
//! induction on regressed continuation values.

mod adjusted;
mod cashflows;
mod deal;
mod oracle;
mod rates;
mod reduced;
mod regression;

pub use adjusted::{
    adjusted_bond, adjusted_one_period, convexity_adjustment, price_irs_partial,
    ConvexityEstimate, DividendIntegrals, DividendRate, OnePeriodAdjustment, PolicyDividend,
};
pub use cashflows::clean_value_analytic;
pub use deal::{CashFlow, DealSchedule, FlowKind};
pub use oracle::{price_master_oracle, OracleSettings};
pub use rates::{
    dividend_parts, effective_rate_xi, effective_rate_zeta, on_default_cashflow, DefaultOrder,
    Sign,
};
pub use reduced::{price_perfect, price_reduced, resolve_alpha};
pub use regression::{regress, RegressionBasis};

use serde::Serialize;

use crate::credit_funding::{CollateralPolicy, CreditError, CreditSpec, FundingSpec};
use crate::curves::{CurveError, CurveSet};
use crate::hjm::{HjmError, PathEnsemble, VolatilitySpec};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PricingError {
    #[error("deal date {0} is not on the simulation grid")]
    GridTooCoarse(f64),
    #[error("deal date {0} lies beyond the curves or the simulation")]
    ScheduleBeyondCurve(f64),
    #[error("collateral fraction {0} out of range")]
    AlphaOutOfRange(f64),
    #[error("fixed point did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("oracle grid has {0} intervals; at most {1} supported")]
    OracleGridTooLarge(usize, usize),
    #[error("forward rate is zero; relative convexity adjustment undefined")]
    ZeroForward,
    #[error("invalid deal: {0}")]
    InvalidDeal(String),
    #[error(transparent)]
    Credit(#[from] CreditError),
    #[error(transparent)]
    Hjm(#[from] HjmError),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Split of `adjusted − clean` by source.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Decomposition {
    pub cva: f64,
    pub dva: f64,
    pub funding_cost: f64,
    pub collateral_cost: f64,
}

impl Decomposition {
    pub fn total(&self) -> f64 {
        self.cva + self.dva + self.funding_cost + self.collateral_cost
    }

    pub fn scaled(&self, k: f64) -> Self {
        Decomposition {
            cva: self.cva * k,
            dva: self.dva * k,
            funding_cost: self.funding_cost * k,
            collateral_cost: self.collateral_cost * k,
        }
    }

    pub fn add(&mut self, other: &Decomposition) {
        self.cva += other.cva;
        self.dva += other.dva;
        self.funding_cost += other.funding_cost;
        self.collateral_cost += other.collateral_cost;
    }

    pub fn is_zero(&self) -> bool {
        self.cva == 0.0 && self.dva == 0.0 && self.funding_cost == 0.0 && self.collateral_cost == 0.0
    }
}

/// Valuation result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjustedPrice {
    /// OIS-collateralized (perfect collateral) value.
    pub clean: f64,
    pub adjusted: f64,
    pub decomposition: Decomposition,
    /// Monte Carlo standard error of `adjusted`.
    pub std_error: f64,
}

/// Market inputs shared by all pricers.
#[derive(Debug, Clone, Copy)]
pub struct Market<'a> {
    pub curves: &'a CurveSet,
    pub model: &'a VolatilitySpec,
    pub ensemble: &'a PathEnsemble,
}

/// Collateral, funding and credit terms of the deal.
#[derive(Debug, Clone, Copy)]
pub struct CsaTerms<'a> {
    pub policy: &'a CollateralPolicy,
    pub funding: &'a FundingSpec,
    pub credit: &'a CreditSpec,
}

pub(crate) fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
