use std::fmt::Write as _;

use super::discount::{DiscountCurve, DOMAIN_TOLERANCE};
use super::CurveError;
use crate::market_data::{QuoteSet, TENOR_TOLERANCE};

/// Tenor-specific LIBOR forward curve `F_0(T, x)`.
///
/// Forwards are stored at the quoted IRS maturities and interpolated
/// linearly in `T` on the reset grid; flat before the first pillar.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCurve {
    tenor: f64,
    shift: f64,
    pillars: Vec<f64>,
    forwards: Vec<f64>,
    extrapolate: bool,
}

impl ForwardCurve {
    pub fn new(
        tenor: f64,
        shift: f64,
        pillars: Vec<f64>,
        forwards: Vec<f64>,
    ) -> Result<Self, CurveError> {
        if !(tenor > 0.0) {
            return Err(CurveError::InvalidCurve(format!("tenor {tenor} must be positive")));
        }
        if pillars.is_empty() || pillars.len() != forwards.len() {
            return Err(CurveError::InvalidCurve(
                "forward pillars and values must be non-empty and aligned".into(),
            ));
        }
        if pillars.windows(2).any(|w| !(w[1] > w[0])) || pillars[0] < tenor - TENOR_TOLERANCE {
            return Err(CurveError::InvalidCurve(
                "forward pillars must increase and start at or after the tenor".into(),
            ));
        }
        if let Some((&t, _)) = pillars
            .iter()
            .zip(&forwards)
            .find(|(_, &f)| !(shift + f > 0.0))
        {
            return Err(CurveError::InconsistentStrip { maturity: t });
        }
        Ok(ForwardCurve {
            tenor,
            shift,
            pillars,
            forwards,
            extrapolate: false,
        })
    }

    /// Flat forward curve on `[tenor, horizon]` with the default shift.
    pub fn flat(tenor: f64, forward: f64, horizon: f64) -> Result<Self, CurveError> {
        ForwardCurve::new(tenor, 1.0 / tenor, vec![tenor, horizon.max(tenor * 2.0)], vec![forward; 2])
    }

    pub fn with_extrapolation(mut self, extrapolate: bool) -> Self {
        self.extrapolate = extrapolate;
        self
    }

    pub fn tenor(&self) -> f64 {
        self.tenor
    }

    /// Shift `k(T, x)`, constant per tenor.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn pillars(&self) -> &[f64] {
        &self.pillars
    }

    pub fn forwards(&self) -> &[f64] {
        &self.forwards
    }

    pub fn last_pillar(&self) -> f64 {
        *self.pillars.last().expect("curve has pillars")
    }

    /// `F_0(T, x)` for reset `T - x >= 0`.
    pub fn forward(&self, maturity: f64) -> Result<f64, CurveError> {
        if maturity < self.tenor - TENOR_TOLERANCE || maturity.is_nan() {
            return Err(CurveError::OutOfDomain(maturity));
        }
        if maturity > self.last_pillar() + DOMAIN_TOLERANCE && !self.extrapolate {
            return Err(CurveError::OutOfDomain(maturity));
        }
        let k = self.pillars.partition_point(|&p| p <= maturity);
        if k == 0 {
            return Ok(self.forwards[0]);
        }
        if k == self.pillars.len() {
            return Ok(*self.forwards.last().unwrap());
        }
        let (t0, t1) = (self.pillars[k - 1], self.pillars[k]);
        let w = (t1 - maturity) / (t1 - t0);
        Ok(w * self.forwards[k - 1] + (1.0 - w) * self.forwards[k])
    }

    /// Par rate of a spot-starting IRS with both legs on the tenor grid,
    /// discounted on `discount`.
    pub fn swap_rate(&self, discount: &DiscountCurve, maturity: f64) -> Result<f64, CurveError> {
        let n = (maturity / self.tenor).round() as usize;
        let (mut fixed, mut float) = (0.0, 0.0);
        for i in 1..=n {
            let t = i as f64 * self.tenor;
            let p = discount.discount_factor(t)?;
            fixed += self.tenor * p;
            float += self.tenor * p * self.forward(t)?;
        }
        Ok(float / fixed)
    }

    /// CSV rows `T,x,F` (no header).
    pub fn write_csv_rows(&self, out: &mut String) {
        for (t, f) in self.pillars.iter().zip(&self.forwards) {
            let _ = writeln!(out, "{t},{},{f}", self.tenor);
        }
    }
}

/// Solves the tenor-`x` IRS strip maturity by maturity. Each quote fixes the
/// forward at its maturity; forwards on reset dates between two quoted
/// maturities are linear in the new unknown, so every step is a closed-form
/// linear solve.
pub fn bootstrap_forwards(
    quotes: &QuoteSet,
    discount: &DiscountCurve,
    tenor: f64,
    shift: Option<f64>,
) -> Result<ForwardCurve, CurveError> {
    let strip = quotes.irs(tenor).ok_or(CurveError::NoTenorQuotes(tenor))?;
    if strip.is_empty() {
        return Err(CurveError::NoTenorQuotes(tenor));
    }
    let shift = shift.unwrap_or(1.0 / tenor);
    let last = strip.last().unwrap().maturity;
    if last > discount.last_pillar() + DOMAIN_TOLERANCE && !discount.extrapolates() {
        return Err(CurveError::DiscountTooShort {
            needed: last,
            available: discount.last_pillar(),
        });
    }

    let mut pillars: Vec<f64> = Vec::with_capacity(strip.len());
    let mut forwards: Vec<f64> = Vec::with_capacity(strip.len());
    // reset-grid values solved so far: (T_i, P(T_i), F(T_i))
    let mut solved: Vec<(f64, f64, f64)> = Vec::new();
    for quote in strip {
        let n = (quote.maturity / tenor).round() as usize;
        let mut annuity = 0.0;
        let mut known = 0.0;
        for &(_, p, f) in &solved {
            annuity += tenor * p;
            known += tenor * p * f;
        }
        let prev = pillars.last().copied();
        let prev_forward = forwards.last().copied();
        let start = solved.len() + 1;
        let mut new_points = Vec::with_capacity(n.saturating_sub(solved.len()));
        let (mut fixed_part, mut unknown_coef) = (0.0, 0.0);
        for i in start..=n {
            let t = i as f64 * tenor;
            let p = discount.discount_factor(t)?;
            annuity += tenor * p;
            let w = match (prev, prev_forward) {
                (Some(t0), Some(f0)) => {
                    let w = (quote.maturity - t) / (quote.maturity - t0);
                    fixed_part += tenor * p * w * f0;
                    w
                }
                _ => 0.0,
            };
            unknown_coef += tenor * p * (1.0 - w);
            new_points.push((t, p, w));
        }
        if unknown_coef <= 0.0 {
            return Err(CurveError::InvalidCurve(format!(
                "IRS maturity {} adds no reset dates",
                quote.maturity
            )));
        }
        let forward = (quote.rate * annuity - known - fixed_part) / unknown_coef;
        if !(shift + forward > 0.0) {
            return Err(CurveError::InconsistentStrip {
                maturity: quote.maturity,
            });
        }
        for (t, p, w) in new_points {
            let f = w * prev_forward.unwrap_or(0.0) + (1.0 - w) * forward;
            solved.push((t, p, f));
        }
        pillars.push(quote.maturity);
        forwards.push(forward);
    }
    ForwardCurve::new(tenor, shift, pillars, forwards)
}
