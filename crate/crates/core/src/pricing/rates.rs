use super::{Decomposition, PricingError};
use crate::credit_funding::CreditSnapshot;

/// Sign of the all-inclusive mark-to-market.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub const ALL: [Sign; 3] = [Sign::Negative, Sign::Zero, Sign::Positive];

    pub fn of(v: f64) -> Self {
        if v > 0.0 {
            Sign::Positive
        } else if v < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Negative => -1.0,
            Sign::Zero => 0.0,
            Sign::Positive => 1.0,
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            Sign::Negative => 0,
            Sign::Zero => 1,
            Sign::Positive => 2,
        }
    }
}

/// Which party defaults first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefaultOrder {
    CounterpartyFirst,
    InvestorFirst,
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

fn neg(x: f64) -> f64 {
    x.min(0.0)
}

/// `ζ = (1−α)(λ^{C<I} LGD_C 1{V>0} + λ^{I<C} LGD_I 1{V<0}) − α(f̃ − c̃)` for
/// `α ∈ [0, 1]`.
pub fn effective_rate_zeta(
    alpha: f64,
    sign: Sign,
    credit: &CreditSnapshot,
    f_tilde: f64,
    c_tilde: f64,
) -> Result<f64, PricingError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(PricingError::AlphaOutOfRange(alpha));
    }
    let credit_term = match sign {
        Sign::Positive => credit.lambda_ci * credit.lgd_c,
        Sign::Negative => credit.lambda_ic * credit.lgd_i,
        Sign::Zero => 0.0,
    };
    Ok((1.0 - alpha) * credit_term - alpha * (f_tilde - c_tilde))
}

/// `ξ` for `α ≥ 0`: the credit terms switch sides when the deal is
/// over-collateralized, through `(1−α)⁺` and `(1−α)⁻ = min(1−α, 0)`.
pub fn effective_rate_xi(
    alpha: f64,
    sign: Sign,
    credit: &CreditSnapshot,
    f_tilde: f64,
    c_tilde: f64,
) -> Result<f64, PricingError> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(PricingError::AlphaOutOfRange(alpha));
    }
    let p = credit_parts(alpha, sign, credit);
    Ok(p.0 + p.1 - alpha * (f_tilde - c_tilde))
}

/// `(cva, dva)` rate components of `ξ`.
fn credit_parts(alpha: f64, sign: Sign, c: &CreditSnapshot) -> (f64, f64) {
    let up = pos(1.0 - alpha);
    let down = neg(1.0 - alpha);
    let lc = c.lambda_ci * c.lgd_c;
    let li = c.lambda_ic * c.lgd_i;
    match sign {
        Sign::Positive => (up * lc, down * li),
        Sign::Negative => (down * lc, up * li),
        Sign::Zero => (0.0, 0.0),
    }
}

/// Close-out cash flow `θ = ε − 1{C first} LGD_C (ε−C)⁺ − 1{I first} LGD_I (ε−C)⁻`.
pub fn on_default_cashflow(
    epsilon: f64,
    collateral: f64,
    who: DefaultOrder,
    credit: &CreditSnapshot,
) -> f64 {
    let exposure = epsilon - collateral;
    match who {
        DefaultOrder::CounterpartyFirst => epsilon - credit.lgd_c * pos(exposure),
        DefaultOrder::InvestorFirst => epsilon - credit.lgd_i * neg(exposure),
    }
}

/// Whether the treasury borrows: the uncollateralized part `(1−α)V` is
/// positive.
pub(crate) fn borrows(alpha: f64, sign: Sign) -> bool {
    (1.0 - alpha) * sign.as_f64() > 0.0
}

/// Rate components of the effective dividend `q̃ = f̃ − e + ξ`, given the
/// funding spreads `f± − e` and the collateral spread `c̃ − e`.
pub fn dividend_parts(
    alpha: f64,
    sign: Sign,
    credit: &CreditSnapshot,
    borrow_spread: f64,
    invest_spread: f64,
    c_spread: f64,
) -> Decomposition {
    let (cva, dva) = credit_parts(alpha, sign, credit);
    let f_spread = if borrows(alpha, sign) {
        borrow_spread
    } else {
        invest_spread
    };
    Decomposition {
        cva,
        dva,
        funding_cost: (1.0 - alpha) * f_spread,
        collateral_cost: alpha * c_spread,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn snap(lci: f64, lic: f64, lgd_c: f64, lgd_i: f64) -> CreditSnapshot {
        CreditSnapshot {
            lambda_ci: lci,
            lambda_ic: lic,
            lambda_p: 0.0,
            lambda_i: 0.0,
            lgd_c,
            lgd_i,
        }
    }

    #[test]
    fn zeta_examples() {
        let c = snap(0.02, 0.03, 0.6, 0.6);
        assert_abs_diff_eq!(
            effective_rate_zeta(1.0, Sign::Positive, &c, 0.031, 0.03).unwrap(),
            -0.001,
            epsilon = 1e-16
        );
        assert_abs_diff_eq!(
            effective_rate_zeta(0.0, Sign::Positive, &c, 0.031, 0.03).unwrap(),
            0.012,
            epsilon = 1e-16
        );
        assert_abs_diff_eq!(
            effective_rate_zeta(0.5, Sign::Positive, &c, 0.031, 0.03).unwrap(),
            0.0055,
            epsilon = 1e-15
        );
        assert_eq!(effective_rate_zeta(0.3, Sign::Zero, &c, 0.03, 0.03).unwrap(), 0.0);
        assert!(matches!(
            effective_rate_zeta(1.2, Sign::Positive, &c, 0.0, 0.0),
            Err(PricingError::AlphaOutOfRange(_))
        ));
    }

    #[test]
    fn xi_over_collateralized() {
        let c = snap(0.02, 0.03, 0.6, 0.6);
        assert_abs_diff_eq!(
            effective_rate_xi(1.1, Sign::Positive, &c, 0.031, 0.03).unwrap(),
            -0.0029,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            effective_rate_xi(1.0, Sign::Negative, &c, 0.031, 0.03).unwrap(),
            -0.001,
            epsilon = 1e-16
        );
        assert!(effective_rate_xi(-0.1, Sign::Positive, &c, 0.0, 0.0).is_err());
    }

    #[test]
    fn close_out_examples() {
        let c = snap(0.0, 0.0, 0.6, 0.6);
        assert_eq!(on_default_cashflow(42.0, 42.0, DefaultOrder::CounterpartyFirst, &c), 42.0);
        assert_abs_diff_eq!(
            on_default_cashflow(100.0, 60.0, DefaultOrder::CounterpartyFirst, &c),
            76.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            on_default_cashflow(-100.0, -60.0, DefaultOrder::InvestorFirst, &c),
            -76.0,
            epsilon = 1e-12
        );
        // the surviving party bears no loss on the other side
        assert_eq!(on_default_cashflow(-100.0, -60.0, DefaultOrder::CounterpartyFirst, &c), -100.0);
    }

    #[test]
    fn dividend_parts_reassemble_xi() {
        let c = snap(0.02, 0.03, 0.6, 0.4);
        let parts = dividend_parts(0.3, Sign::Positive, &c, 0.01, 0.002, 0.001);
        let xi = effective_rate_xi(0.3, Sign::Positive, &c, 0.01, 0.001).unwrap();
        assert_abs_diff_eq!(parts.total(), 0.01 + xi, epsilon = 1e-16);
        // perfect collateral at the overnight rate: nothing left
        assert!(dividend_parts(1.0, Sign::Negative, &c, 0.01, 0.002, 0.0).is_zero());
    }

    proptest! {
        #[test]
        fn xi_equals_zeta_on_unit_interval(
            alpha in 0.0f64..=1.0,
            s in 0usize..3,
            lci in 0.0f64..0.2, lic in 0.0f64..0.2,
            lgd_c in 0.0f64..=1.0, lgd_i in 0.0f64..=1.0,
            f in -0.05f64..0.1, cr in -0.05f64..0.1,
        ) {
            let c = snap(lci, lic, lgd_c, lgd_i);
            let sign = Sign::ALL[s];
            let xi = effective_rate_xi(alpha, sign, &c, f, cr).unwrap();
            let zeta = effective_rate_zeta(alpha, sign, &c, f, cr).unwrap();
            prop_assert!((xi - zeta).abs() <= 1e-15 * (1.0 + xi.abs()));
        }

        #[test]
        fn dividend_is_funding_spread_plus_xi(
            alpha in 0.0f64..1.5,
            s in 0usize..3,
            lci in 0.0f64..0.2, lic in 0.0f64..0.2,
            fp in 0.0f64..0.05, fm in -0.01f64..0.0, cs in -0.01f64..0.01,
        ) {
            let c = snap(lci, lic, 0.6, 0.4);
            let sign = Sign::ALL[s];
            let f_spread = if borrows(alpha, sign) { fp } else { fm };
            let xi = effective_rate_xi(alpha, sign, &c, f_spread, cs).unwrap();
            let parts = dividend_parts(alpha, sign, &c, fp, fm, cs);
            prop_assert!((parts.total() - (f_spread + xi)).abs() <= 1e-15);
        }
    }
}
