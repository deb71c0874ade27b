use std::fmt::Write as _;

use super::solver::{brent, RootError};
use super::CurveError;
use crate::market_data::QuoteSet;

/// Absolute slack on the curve domain.
pub(crate) const DOMAIN_TOLERANCE: f64 = 1e-12;

/// Fixed-leg period of multi-period OIS quotes; maturities up to one period
/// are single-period swaps.
pub const OIS_FIXED_PERIOD: f64 = 1.0;

/// Bootstrap target: tolerance on the solved discount factor.
const DISCOUNT_TOLERANCE: f64 = 1e-14;
const MIN_DISCOUNT: f64 = 1e-12;
const MAX_DISCOUNT: f64 = 10.0;

/// OIS-collateralized discount curve, log-linear in discount factors.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscountCurve {
    pillars: Vec<f64>,
    log_discounts: Vec<f64>,
    extrapolate: bool,
}

impl DiscountCurve {
    /// `pillars` must start at 0 with `log_discounts[0] == 0` and increase
    /// strictly.
    pub fn from_pillars(pillars: Vec<f64>, log_discounts: Vec<f64>) -> Result<Self, CurveError> {
        if pillars.len() != log_discounts.len() || pillars.len() < 2 {
            return Err(CurveError::InvalidCurve(
                "need at least two pillars with matching log discounts".into(),
            ));
        }
        if pillars[0] != 0.0 || log_discounts[0] != 0.0 {
            return Err(CurveError::InvalidCurve(
                "curve must start at T=0 with P=1".into(),
            ));
        }
        if pillars.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CurveError::InvalidCurve("pillars must increase".into()));
        }
        if log_discounts.iter().any(|v| !v.is_finite()) {
            return Err(CurveError::InvalidCurve("non-finite discount".into()));
        }
        Ok(DiscountCurve {
            pillars,
            log_discounts,
            extrapolate: false,
        })
    }

    /// Flat continuously-compounded curve on `[0, horizon]`.
    pub fn flat(rate: f64, horizon: f64) -> Self {
        DiscountCurve {
            pillars: vec![0.0, horizon],
            log_discounts: vec![0.0, -rate * horizon],
            extrapolate: false,
        }
    }

    /// Enables flat-forward extrapolation beyond the last pillar.
    pub fn with_extrapolation(mut self, extrapolate: bool) -> Self {
        self.extrapolate = extrapolate;
        self
    }

    pub fn extrapolates(&self) -> bool {
        self.extrapolate
    }

    pub fn pillars(&self) -> &[f64] {
        &self.pillars
    }

    pub fn log_discounts(&self) -> &[f64] {
        &self.log_discounts
    }

    pub fn last_pillar(&self) -> f64 {
        *self.pillars.last().expect("curve has pillars")
    }

    fn check_domain(&self, t: f64) -> Result<f64, CurveError> {
        if !(t >= -DOMAIN_TOLERANCE) || t.is_nan() {
            return Err(CurveError::OutOfDomain(t));
        }
        let last = self.last_pillar();
        if t > last + DOMAIN_TOLERANCE && !self.extrapolate {
            return Err(CurveError::OutOfDomain(t));
        }
        Ok(t.max(0.0))
    }

    /// Index `k` of the segment `[pillars[k], pillars[k+1]]` used at `t`
    /// (right limit at interior pillars).
    fn segment(&self, t: f64) -> usize {
        let k = self.pillars.partition_point(|&p| p <= t);
        k.saturating_sub(1).min(self.pillars.len() - 2)
    }

    fn segment_forward(&self, k: usize) -> f64 {
        -(self.log_discounts[k + 1] - self.log_discounts[k])
            / (self.pillars[k + 1] - self.pillars[k])
    }

    pub fn log_discount(&self, t: f64) -> Result<f64, CurveError> {
        let t = self.check_domain(t)?;
        let k = self.segment(t);
        Ok(self.log_discounts[k] - self.segment_forward(k) * (t - self.pillars[k]))
    }

    /// Collateralized zero-coupon bond `P_0(T;e)`.
    pub fn discount_factor(&self, t: f64) -> Result<f64, CurveError> {
        Ok(self.log_discount(t)?.exp())
    }

    /// `-d/dT ln P_0(T)`; piecewise constant, right limit at pillars.
    pub fn instantaneous_forward(&self, t: f64) -> Result<f64, CurveError> {
        let t = self.check_domain(t)?;
        Ok(self.segment_forward(self.segment(t)))
    }

    /// One-period OIS par rate `(P(T-x)/P(T) - 1)/x`.
    pub fn ois_par_rate(&self, maturity: f64, tenor: f64) -> Result<f64, CurveError> {
        if !(tenor > 0.0) || maturity - tenor < -DOMAIN_TOLERANCE {
            return Err(CurveError::OutOfDomain(maturity - tenor));
        }
        let start = self.discount_factor(maturity - tenor)?;
        let end = self.discount_factor(maturity)?;
        Ok((start / end - 1.0) / tenor)
    }

    /// Par rate of a spot-starting OIS with annual fixed payments, priced
    /// with continuously compounded overnight accrual.
    pub fn ois_swap_rate(&self, maturity: f64) -> Result<f64, CurveError> {
        let times = ois_payment_times(maturity);
        let mut annuity = 0.0;
        let mut prev = 0.0;
        for &t in &times {
            annuity += (t - prev) * self.discount_factor(t)?;
            prev = t;
        }
        Ok((1.0 - self.discount_factor(maturity)?) / annuity)
    }

    /// CSV dump with header `T,logP`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("T,logP\n");
        for (t, l) in self.pillars.iter().zip(&self.log_discounts) {
            let _ = writeln!(out, "{t},{l}");
        }
        out
    }
}

/// Fixed-leg payment times of a spot-starting OIS: annual dates rolled back
/// from maturity with a short first period.
pub fn ois_payment_times(maturity: f64) -> Vec<f64> {
    let mut times = vec![maturity];
    let mut t = maturity - OIS_FIXED_PERIOD;
    while t > 1e-9 {
        times.push(t);
        t -= OIS_FIXED_PERIOD;
    }
    times.reverse();
    times
}

/// Builds the discount curve pillar by pillar so that every OIS quote is
/// repriced exactly.
pub fn bootstrap_ois(quotes: &QuoteSet) -> Result<DiscountCurve, CurveError> {
    let ois = quotes.ois();
    if ois.is_empty() {
        return Err(CurveError::NoQuotes);
    }
    let mut pillars = vec![0.0];
    let mut logs = vec![0.0];
    for quote in ois {
        if quote.maturity <= *pillars.last().unwrap() {
            return Err(CurveError::InvalidCurve(format!(
                "OIS maturity {} out of order",
                quote.maturity
            )));
        }
        let objective = |p: f64| {
            let mut trial_pillars = pillars.clone();
            let mut trial_logs = logs.clone();
            trial_pillars.push(quote.maturity);
            trial_logs.push(p.ln());
            let trial = DiscountCurve {
                pillars: trial_pillars,
                log_discounts: trial_logs,
                extrapolate: false,
            };
            let mut annuity = 0.0;
            let mut prev = 0.0;
            for t in ois_payment_times(quote.maturity) {
                annuity += (t - prev) * trial.discount_factor(t).unwrap_or(f64::NAN);
                prev = t;
            }
            quote.rate * annuity + p - 1.0
        };
        let p = brent(objective, MIN_DISCOUNT, MAX_DISCOUNT, DISCOUNT_TOLERANCE, 200).map_err(
            |e| match e {
                RootError::NotBracketed | RootError::MaxIterations => {
                    CurveError::RootNotBracketed(quote.maturity)
                }
            },
        )?;
        pillars.push(quote.maturity);
        logs.push(p.ln());
    }
    DiscountCurve::from_pillars(pillars, logs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{Quote, QuoteSet};
    use approx::assert_abs_diff_eq;

    fn ois_quotes(rows: &[(f64, f64)]) -> QuoteSet {
        let ois = rows
            .iter()
            .map(|&(maturity, rate)| Quote { maturity, rate })
            .collect();
        QuoteSet::new(None, ois, vec![]).unwrap()
    }

    #[test]
    fn single_period_quote_inverts_by_hand() {
        let curve = bootstrap_ois(&ois_quotes(&[(1.0, 0.0202013)])).unwrap();
        assert_abs_diff_eq!(curve.discount_factor(1.0).unwrap(), 1.0 / 1.0202013, epsilon = 1e-14);
        assert_abs_diff_eq!(curve.discount_factor(1.0).unwrap(), 0.980199, epsilon = 1e-6);
        assert_eq!(curve.pillars(), &[0.0, 1.0]);
    }

    #[test]
    fn zero_rates_give_unit_discounts() {
        let curve = bootstrap_ois(&ois_quotes(&[(0.5, 0.0), (2.0, 0.0), (5.0, 0.0)])).unwrap();
        for t in [0.0, 0.3, 1.0, 2.0, 4.5, 5.0] {
            assert_abs_diff_eq!(curve.discount_factor(t).unwrap(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn reprices_multi_period_strip() {
        let rows = [
            (0.25, 0.015),
            (0.5, 0.016),
            (1.0, 0.018),
            (1.5, 0.019),
            (2.0, 0.020),
            (3.0, 0.022),
            (5.0, 0.025),
            (7.0, 0.027),
            (10.0, 0.029),
            (20.0, 0.031),
        ];
        let curve = bootstrap_ois(&ois_quotes(&rows)).unwrap();
        for (m, r) in rows {
            assert_abs_diff_eq!(curve.ois_swap_rate(m).unwrap(), r, epsilon = 1e-12);
        }
    }

    #[test]
    fn payment_schedule_has_front_stub() {
        assert_eq!(ois_payment_times(0.5), vec![0.5]);
        assert_eq!(ois_payment_times(1.0), vec![1.0]);
        assert_eq!(ois_payment_times(2.5), vec![0.5, 1.5, 2.5]);
        assert_eq!(ois_payment_times(3.0), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn flat_curve_queries() {
        let curve = DiscountCurve::flat(0.02, 10.0);
        assert_eq!(curve.discount_factor(0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(curve.discount_factor(0.5).unwrap(), (-0.01f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(curve.discount_factor(0.5).unwrap(), 0.9900498, epsilon = 1e-7);
        assert!(matches!(curve.discount_factor(11.0), Err(CurveError::OutOfDomain(_))));
        assert!(matches!(curve.discount_factor(-0.1), Err(CurveError::OutOfDomain(_))));
        assert_abs_diff_eq!(curve.instantaneous_forward(3.3).unwrap(), 0.02, epsilon = 1e-15);
    }

    #[test]
    fn extrapolation_is_flat_forward_and_opt_in() {
        let curve = DiscountCurve::from_pillars(vec![0.0, 1.0, 2.0], vec![0.0, -0.02, -0.05])
            .unwrap()
            .with_extrapolation(true);
        assert_abs_diff_eq!(curve.log_discount(3.0).unwrap(), -0.08, epsilon = 1e-15);
        assert_abs_diff_eq!(curve.instantaneous_forward(2.5).unwrap(), 0.03, epsilon = 1e-15);
    }

    #[test]
    fn ois_par_rate_closed_forms() {
        let curve = DiscountCurve::flat(0.02, 10.0);
        let half = curve.ois_par_rate(1.0, 0.5).unwrap();
        assert_abs_diff_eq!(half, 2.0 * ((0.01f64).exp() - 1.0), epsilon = 1e-14);
        assert_abs_diff_eq!(half, 0.0201003, epsilon = 1e-7);
        let spot = curve.ois_par_rate(1.0, 1.0).unwrap();
        assert_abs_diff_eq!(spot, (0.02f64).exp() - 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(spot, 0.0202013, epsilon = 1e-7);
        let zero = DiscountCurve::flat(0.0, 10.0);
        assert_eq!(zero.ois_par_rate(3.0, 0.25).unwrap(), 0.0);
        assert!(curve.ois_par_rate(0.2, 0.5).is_err());
    }

    #[test]
    fn forward_is_segment_slope() {
        let curve = DiscountCurve::from_pillars(
            vec![0.0, 1.0, 2.0],
            vec![0.0, 0.98f64.ln(), 0.95f64.ln()],
        )
        .unwrap();
        let expected = (0.98f64 / 0.95).ln();
        assert_abs_diff_eq!(curve.instantaneous_forward(1.5).unwrap(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(expected, 0.031091, epsilon = 1e-6);
        // right limit at the kink
        assert_abs_diff_eq!(curve.instantaneous_forward(1.0).unwrap(), expected, epsilon = 1e-15);
        assert!(curve.instantaneous_forward(2.5).is_err());
    }
}
