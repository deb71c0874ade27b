use serde::Deserialize;

use super::PricingError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowKind {
    /// Pays `rate · accrual`.
    Fixed { rate: f64, accrual: f64 },
    /// Pays `x · F_{T−x}(T, x)`, fixed at `T − x`.
    Libor { tenor: f64 },
    /// Pays compounded overnight `exp(∫_{T−x}^T e) − 1`.
    Overnight { tenor: f64 },
}

/// One coupon, per unit notional times `notional · sign`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CashFlow {
    pub pay_time: f64,
    pub kind: FlowKind,
    pub notional: f64,
    /// +1 received, −1 paid.
    pub sign: f64,
}

impl CashFlow {
    pub fn fixed(pay_time: f64, rate: f64, accrual: f64, notional: f64) -> Self {
        CashFlow {
            pay_time,
            kind: FlowKind::Fixed { rate, accrual },
            notional,
            sign: 1.0,
        }
    }

    pub fn libor(pay_time: f64, tenor: f64, notional: f64) -> Self {
        CashFlow {
            pay_time,
            kind: FlowKind::Libor { tenor },
            notional,
            sign: 1.0,
        }
    }

    pub fn overnight(pay_time: f64, tenor: f64, notional: f64) -> Self {
        CashFlow {
            pay_time,
            kind: FlowKind::Overnight { tenor },
            notional,
            sign: 1.0,
        }
    }

    pub fn paid(mut self) -> Self {
        self.sign = -self.sign;
        self
    }

    /// Signed notional.
    pub fn scale(&self) -> f64 {
        self.notional * self.sign
    }

    pub fn reset_time(&self) -> Option<f64> {
        match self.kind {
            FlowKind::Fixed { .. } => None,
            FlowKind::Libor { tenor } | FlowKind::Overnight { tenor } => Some(self.pay_time - tenor),
        }
    }
}

/// Coupon schedule sorted by payment time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DealSchedule {
    flows: Vec<CashFlow>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowRepr {
    pay_time: f64,
    kind: String,
    #[serde(default)]
    rate: Option<f64>,
    #[serde(default)]
    accrual: Option<f64>,
    #[serde(default)]
    tenor: Option<f64>,
    #[serde(default = "one")]
    notional: f64,
    #[serde(default = "one")]
    sign: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SwapRepr {
    maturity: f64,
    tenor: f64,
    fixed_rate: f64,
    #[serde(default)]
    fixed_period: Option<f64>,
    #[serde(default = "one")]
    notional: f64,
    #[serde(default = "yes")]
    receive_fixed: bool,
}

fn yes() -> bool {
    true
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DealRepr {
    #[serde(default)]
    flows: Vec<FlowRepr>,
    #[serde(default)]
    swap: Option<SwapRepr>,
}

impl DealSchedule {
    pub fn new(mut flows: Vec<CashFlow>) -> Result<Self, PricingError> {
        for f in &flows {
            if !(f.pay_time > 0.0) || !f.pay_time.is_finite() {
                return Err(PricingError::InvalidDeal(format!(
                    "pay time {} must be positive",
                    f.pay_time
                )));
            }
            if !f.notional.is_finite() || !(f.sign == 1.0 || f.sign == -1.0) {
                return Err(PricingError::InvalidDeal("notional finite, sign ±1".into()));
            }
            match f.kind {
                FlowKind::Fixed { rate, accrual } if !(rate.is_finite() && accrual.is_finite()) => {
                    return Err(PricingError::InvalidDeal("fixed flow not finite".into()));
                }
                FlowKind::Libor { tenor } | FlowKind::Overnight { tenor } => {
                    if !(tenor > 0.0) || f.pay_time - tenor < -1e-9 {
                        return Err(PricingError::InvalidDeal(format!(
                            "flow at {} with tenor {tenor} resets before 0",
                            f.pay_time
                        )));
                    }
                }
                _ => {}
            }
        }
        flows.sort_by(|a, b| a.pay_time.total_cmp(&b.pay_time));
        Ok(DealSchedule { flows })
    }

    /// Spot-starting swap: floating leg on the tenor grid, fixed leg every
    /// `fixed_period` (default: the tenor).
    pub fn swap(
        maturity: f64,
        tenor: f64,
        fixed_rate: f64,
        fixed_period: Option<f64>,
        notional: f64,
        receive_fixed: bool,
    ) -> Result<Self, PricingError> {
        let periods = |step: f64| -> Result<usize, PricingError> {
            let n = (maturity / step).round();
            if !(step > 0.0) || n < 1.0 || (n * step - maturity).abs() > 1e-9 {
                return Err(PricingError::InvalidDeal(format!(
                    "period {step} does not divide maturity {maturity}"
                )));
            }
            Ok(n as usize)
        };
        let fixed_step = fixed_period.unwrap_or(tenor);
        let mut flows = Vec::new();
        for i in 1..=periods(fixed_step)? {
            let f = CashFlow::fixed(i as f64 * fixed_step, fixed_rate, fixed_step, notional);
            flows.push(if receive_fixed { f } else { f.paid() });
        }
        for i in 1..=periods(tenor)? {
            let f = CashFlow::libor(i as f64 * tenor, tenor, notional);
            flows.push(if receive_fixed { f.paid() } else { f });
        }
        DealSchedule::new(flows)
    }

    /// One-period IRS receiving `x(K − F_{T−x}(T, x))` at `T`.
    pub fn one_period_irs(maturity: f64, tenor: f64, strike: f64) -> Result<Self, PricingError> {
        DealSchedule::new(vec![
            CashFlow::fixed(maturity, strike, tenor, 1.0),
            CashFlow::libor(maturity, tenor, 1.0).paid(),
        ])
    }

    /// Zero-coupon bond paying 1 at `maturity`.
    pub fn zero_coupon(maturity: f64) -> Result<Self, PricingError> {
        DealSchedule::new(vec![CashFlow::fixed(maturity, 1.0, 1.0, 1.0)])
    }

    pub fn from_json_str(text: &str) -> Result<Self, PricingError> {
        let repr: DealRepr =
            serde_json::from_str(text).map_err(|e| PricingError::InvalidDeal(e.to_string()))?;
        let mut flows = Vec::new();
        if let Some(s) = repr.swap {
            flows.extend(
                DealSchedule::swap(
                    s.maturity,
                    s.tenor,
                    s.fixed_rate,
                    s.fixed_period,
                    s.notional,
                    s.receive_fixed,
                )?
                .flows,
            );
        }
        for f in repr.flows {
            let missing = |name: &str| PricingError::InvalidDeal(format!("{} flow needs {name}", f.kind));
            let kind = match f.kind.to_ascii_lowercase().as_str() {
                "fixed" => FlowKind::Fixed {
                    rate: f.rate.ok_or_else(|| missing("rate"))?,
                    accrual: f.accrual.ok_or_else(|| missing("accrual"))?,
                },
                "libor" => FlowKind::Libor {
                    tenor: f.tenor.ok_or_else(|| missing("tenor"))?,
                },
                "overnight" | "ois" => FlowKind::Overnight {
                    tenor: f.tenor.ok_or_else(|| missing("tenor"))?,
                },
                other => {
                    return Err(PricingError::InvalidDeal(format!("unknown flow kind '{other}'")))
                }
            };
            flows.push(CashFlow {
                pay_time: f.pay_time,
                kind,
                notional: f.notional,
                sign: f.sign,
            });
        }
        DealSchedule::new(flows)
    }

    pub fn flows(&self) -> &[CashFlow] {
        &self.flows
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    pub fn maturity(&self) -> f64 {
        self.flows.last().map_or(0.0, |f| f.pay_time)
    }

    /// Payment and fixing dates that must lie on the simulation grid.
    pub fn required_times(&self) -> Vec<f64> {
        let mut times = Vec::new();
        for f in &self.flows {
            times.push(f.pay_time);
            if let Some(r) = f.reset_time() {
                times.push(r.max(0.0));
            }
        }
        times
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn swap_template_legs() {
        let d = DealSchedule::swap(1.0, 0.5, 0.03, None, 100.0, true).unwrap();
        assert_eq!(d.flows().len(), 4);
        assert_eq!(d.maturity(), 1.0);
        let fixed: Vec<_> = d
            .flows()
            .iter()
            .filter(|f| matches!(f.kind, FlowKind::Fixed { .. }))
            .collect();
        assert!(fixed.iter().all(|f| f.sign == 1.0 && f.notional == 100.0));
        assert!(DealSchedule::swap(1.0, 0.3, 0.03, None, 1.0, true).is_err());
    }

    #[test]
    fn parses_flows_and_swap() {
        let d = DealSchedule::from_json_str(
            r#"{"flows":[{"pay_time":2.0,"kind":"libor","tenor":0.5,"sign":-1},
                         {"pay_time":1.0,"kind":"fixed","rate":0.02,"accrual":1.0}]}"#,
        )
        .unwrap();
        assert_eq!(d.flows()[0].pay_time, 1.0);
        assert_eq!(d.flows()[1].sign, -1.0);
        assert_eq!(d.required_times(), vec![1.0, 2.0, 1.5]);
        let s = DealSchedule::from_json_str(
            r#"{"swap":{"maturity":2,"tenor":0.5,"fixed_rate":0.03,"fixed_period":1}}"#,
        )
        .unwrap();
        assert_eq!(s.flows().len(), 6);
        assert!(DealSchedule::from_json_str(r#"{"flows":[{"pay_time":1,"kind":"cap"}]}"#).is_err());
        assert!(DealSchedule::from_json_str(r#"{"flows":[{"pay_time":0.2,"kind":"libor","tenor":0.5}]}"#).is_err());
        assert!(DealSchedule::from_json_str(r#"{"legs":[]}"#).is_err());
    }
}
