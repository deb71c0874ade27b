use super::CreditError;
use crate::step::StepFunction;

/// Longest admissible margin period of risk, in years.
pub const MAX_MARGIN_PERIOD: f64 = 20.0 / 365.0;
pub const DEFAULT_MARGIN_PERIOD: f64 = 10.0 / 365.0;

#[derive(Debug, Clone, PartialEq)]
pub enum CollateralMode {
    None,
    Perfect,
    /// Constant or scheduled fraction `α_t ∈ [0, 1]`.
    Fraction(StepFunction),
    /// Over-collateralization `α = 1 + ς`; a fixed haircut overrides the
    /// computed one.
    Ccp { haircut: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaircutMethod {
    /// Quantile of the margin-period P&L.
    Var,
    /// Call-option style expectation.
    Price,
}

/// Collateral agreement terms.
#[derive(Debug, Clone, PartialEq)]
pub struct CollateralPolicy {
    pub mode: CollateralMode,
    /// `c± − e`; collateral accrual is symmetric.
    pub c_spread: f64,
    /// Margin period of risk `δ` in years.
    pub delta: f64,
    pub quantile_q: f64,
    pub haircut_method: HaircutMethod,
}

impl Default for CollateralPolicy {
    fn default() -> Self {
        CollateralPolicy {
            mode: CollateralMode::Perfect,
            c_spread: 0.0,
            delta: DEFAULT_MARGIN_PERIOD,
            quantile_q: 0.01,
            haircut_method: HaircutMethod::Var,
        }
    }
}

impl CollateralPolicy {
    pub fn new(
        mode: CollateralMode,
        c_spread: f64,
        delta: f64,
        quantile_q: f64,
        haircut_method: HaircutMethod,
    ) -> Result<Self, CreditError> {
        match &mode {
            CollateralMode::Fraction(alpha) => {
                if alpha.min_value() < 0.0 || alpha.max_value() > 1.0 {
                    return Err(CreditError::AlphaOutOfRange(if alpha.min_value() < 0.0 {
                        alpha.min_value()
                    } else {
                        alpha.max_value()
                    }));
                }
            }
            CollateralMode::Ccp { haircut: Some(h) } if !(*h >= 0.0 && h.is_finite()) => {
                return Err(CreditError::InvalidSpec(format!("haircut {h} must be >= 0")));
            }
            _ => {}
        }
        if !c_spread.is_finite() {
            return Err(CreditError::InvalidSpec("c_spread must be finite".into()));
        }
        if !(0.0..=MAX_MARGIN_PERIOD + 1e-15).contains(&delta) {
            return Err(CreditError::InvalidSpec(format!(
                "margin period {delta} outside [0, 20 days]"
            )));
        }
        if !(quantile_q > 0.0 && quantile_q < 1.0) {
            return Err(CreditError::InvalidQuantile(quantile_q));
        }
        Ok(CollateralPolicy {
            mode,
            c_spread,
            delta,
            quantile_q,
            haircut_method,
        })
    }

    pub fn none() -> Self {
        CollateralPolicy {
            mode: CollateralMode::None,
            ..Default::default()
        }
    }

    pub fn perfect() -> Self {
        CollateralPolicy::default()
    }

    pub fn fraction(alpha: f64) -> Result<Self, CreditError> {
        CollateralPolicy::new(
            CollateralMode::Fraction(StepFunction::constant(alpha)),
            0.0,
            DEFAULT_MARGIN_PERIOD,
            0.01,
            HaircutMethod::Var,
        )
    }

    pub fn ccp(haircut: Option<f64>) -> Result<Self, CreditError> {
        CollateralPolicy::new(
            CollateralMode::Ccp { haircut },
            0.0,
            DEFAULT_MARGIN_PERIOD,
            0.01,
            HaircutMethod::Var,
        )
    }

    pub fn with_c_spread(mut self, c_spread: f64) -> Self {
        self.c_spread = c_spread;
        self
    }

    /// Breakpoints of the collateral schedule inside `(a, b)`.
    pub fn breakpoints_in(&self, a: f64, b: f64) -> Vec<f64> {
        match &self.mode {
            CollateralMode::Fraction(alpha) => alpha.breakpoints_in(a, b),
            _ => Vec::new(),
        }
    }
}

/// Collateral fraction `α_t`: none → 0, perfect → 1, fraction → `α(t)`,
/// CCP → `1 + ς`. `haircut` supplies `ς` for CCP policies without a fixed
/// haircut.
pub fn collateral_fraction(
    policy: &CollateralPolicy,
    t: f64,
    haircut: Option<f64>,
) -> Result<f64, CreditError> {
    Ok(match &policy.mode {
        CollateralMode::None => 0.0,
        CollateralMode::Perfect => 1.0,
        CollateralMode::Fraction(alpha) => alpha.value(t),
        CollateralMode::Ccp { haircut: fixed } => {
            1.0 + fixed.or(haircut).ok_or(CreditError::MissingHaircut)?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_by_mode() {
        assert_eq!(collateral_fraction(&CollateralPolicy::none(), 0.0, None).unwrap(), 0.0);
        assert_eq!(collateral_fraction(&CollateralPolicy::perfect(), 0.0, None).unwrap(), 1.0);
        let ccp = CollateralPolicy::ccp(None).unwrap();
        assert_eq!(collateral_fraction(&ccp, 0.0, Some(0.3)).unwrap(), 1.3);
        assert_eq!(
            collateral_fraction(&ccp, 0.0, None).unwrap_err(),
            CreditError::MissingHaircut
        );
        let half = CollateralPolicy::fraction(0.5).unwrap();
        assert_eq!(collateral_fraction(&half, 2.0, None).unwrap(), 0.5);
    }

    #[test]
    fn validation() {
        assert_eq!(
            CollateralPolicy::fraction(1.2).unwrap_err(),
            CreditError::AlphaOutOfRange(1.2)
        );
        let too_long = CollateralPolicy::new(
            CollateralMode::Perfect,
            0.0,
            25.0 / 365.0,
            0.01,
            HaircutMethod::Var,
        );
        assert!(too_long.is_err());
        let bad_q = CollateralPolicy::new(CollateralMode::Perfect, 0.0, 0.01, 1.0, HaircutMethod::Var);
        assert_eq!(bad_q.unwrap_err(), CreditError::InvalidQuantile(1.0));
    }
}
