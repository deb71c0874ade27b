//! Multi-curve interest-rate engine.
//!
//! * [`market_data`] — quote files and engine configuration.
//! * [`curves`] — OIS discount curve and tenor LIBOR forward curves.
//! * [`hjm`] — Markovian multi-curve HJM model and Monte Carlo paths.
//! * [`credit_funding`] — intensities, funding rates, collateral and haircuts.
//! * [`pricing`] — clean and collateral/credit/funding-adjusted valuation.

pub mod credit_funding;
pub mod curves;
pub mod hjm;
pub mod market_data;
pub mod pricing;
pub mod step;

pub use step::StepFunction;
