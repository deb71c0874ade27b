use super::{CreditError, CreditSpec};
use crate::step::{combine, StepFunction};

/// Direction of the treasury cash flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FundingDirection {
    /// Borrowing cash: `f⁺`.
    Borrow,
    /// Investing cash: `f⁻`.
    Invest,
}

/// Weights of the affine funding-rate model
/// `f⁻ = e + w⁻ + w^P λ^P`, `f⁺ = e + w⁺ + w^P λ^P + w^I λ^I`.
#[derive(Debug, Clone, PartialEq)]
pub struct FundingSpec {
    pub w_minus: StepFunction,
    pub w_plus: StepFunction,
    pub w_p: StepFunction,
    pub w_i: StepFunction,
}

impl Default for FundingSpec {
    fn default() -> Self {
        let zero = StepFunction::constant(0.0);
        FundingSpec {
            w_minus: zero.clone(),
            w_plus: zero.clone(),
            w_p: zero.clone(),
            w_i: zero,
        }
    }
}

impl FundingSpec {
    /// Flat weights.
    pub fn flat(w_minus: f64, w_plus: f64, w_p: f64, w_i: f64) -> Self {
        FundingSpec {
            w_minus: StepFunction::constant(w_minus),
            w_plus: StepFunction::constant(w_plus),
            w_p: StepFunction::constant(w_p),
            w_i: StepFunction::constant(w_i),
        }
    }

    /// Funding spread `f± − e` as an exact step function of time.
    pub fn spread(&self, credit: &CreditSpec, direction: FundingDirection) -> StepFunction {
        match direction {
            FundingDirection::Invest => combine(
                &[&self.w_minus, &self.w_p, credit.lambda_p()],
                |v| v[0] + v[1] * v[2],
            ),
            FundingDirection::Borrow => combine(
                &[&self.w_plus, &self.w_p, credit.lambda_p(), &self.w_i, credit.lambda_i()],
                |v| v[0] + v[1] * v[2] + v[3] * v[4],
            ),
        }
    }

    /// Borrowing must cost at least as much as investing yields.
    pub fn check_ordering(&self, credit: &CreditSpec) -> Result<(), CreditError> {
        let plus = self.spread(credit, FundingDirection::Borrow);
        let minus = self.spread(credit, FundingDirection::Invest);
        let gap = combine(&[&plus, &minus], |v| v[0] - v[1]);
        if let Some(k) = gap.values().iter().position(|&g| g < -1e-15) {
            return Err(CreditError::InvalidSpec(format!(
                "borrowing rate below investing rate from t = {}",
                gap.times()[k]
            )));
        }
        Ok(())
    }
}

/// `f⁺` or `f⁻` at time `t` given the overnight rate `e_t`.
pub fn funding_rate(
    spec: &FundingSpec,
    credit: &CreditSpec,
    e_t: f64,
    t: f64,
    direction: FundingDirection,
) -> Result<f64, CreditError> {
    if !(t >= 0.0) || !t.is_finite() || !e_t.is_finite() {
        return Err(CreditError::OutOfDomain(t));
    }
    let c = credit.at(t);
    let base = e_t + spec.w_p.value(t) * c.lambda_p;
    Ok(match direction {
        FundingDirection::Invest => base + spec.w_minus.value(t),
        FundingDirection::Borrow => base + spec.w_plus.value(t) + spec.w_i.value(t) * c.lambda_i,
    })
}
