//! OIS discount curve and tenor-specific LIBOR forward curves.

mod discount;
mod forward;
mod solver;

pub use discount::{bootstrap_ois, ois_payment_times, DiscountCurve, OIS_FIXED_PERIOD};
pub use forward::{bootstrap_forwards, ForwardCurve};

use crate::market_data::{QuoteSet, TENOR_TOLERANCE};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CurveError {
    #[error("no OIS quotes to bootstrap")]
    NoQuotes,
    #[error("no IRS quotes for tenor {0}")]
    NoTenorQuotes(f64),
    #[error("cannot solve discount factor for maturity {0} in (0, 10]")]
    RootNotBracketed(f64),
    #[error("time {0} is outside the curve domain")]
    OutOfDomain(f64),
    #[error("IRS strip inconsistent at maturity {maturity}: shifted forward not positive")]
    InconsistentStrip { maturity: f64 },
    #[error("discount curve ends at {available} but {needed} is required")]
    DiscountTooShort { needed: f64, available: f64 },
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
}

/// Discount curve plus one forward curve per quoted tenor.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSet {
    pub discount: DiscountCurve,
    pub forwards: Vec<ForwardCurve>,
}

impl CurveSet {
    /// Bootstraps every curve in `quotes`. `shift` maps a tenor to its
    /// constant shift `k`; `None` means `1/x`.
    pub fn bootstrap(
        quotes: &QuoteSet,
        extrapolate: bool,
        shift: impl Fn(f64) -> Option<f64>,
    ) -> Result<CurveSet, CurveError> {
        let discount = bootstrap_ois(quotes)?.with_extrapolation(extrapolate);
        let forwards = quotes
            .tenors()
            .into_iter()
            .map(|x| {
                bootstrap_forwards(quotes, &discount, x, shift(x))
                    .map(|c| c.with_extrapolation(extrapolate))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CurveSet { discount, forwards })
    }

    pub fn forward_curve(&self, tenor: f64) -> Result<&ForwardCurve, CurveError> {
        self.forwards
            .iter()
            .find(|c| (c.tenor() - tenor).abs() <= TENOR_TOLERANCE)
            .ok_or(CurveError::NoTenorQuotes(tenor))
    }

    /// CSV dump of all forward curves with header `T,x,F`.
    pub fn forwards_csv(&self) -> String {
        let mut out = String::from("T,x,F\n");
        for c in &self.forwards {
            c.write_csv_rows(&mut out);
        }
        out
    }
}
