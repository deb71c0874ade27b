use super::CreditError;
use crate::step::StepFunction;

/// Deterministic default intensities and losses given default.
#[derive(Debug, Clone, PartialEq)]
pub struct CreditSpec {
    lambda_ci: StepFunction,
    lambda_ic: StepFunction,
    lambda_p: StepFunction,
    lambda_i: StepFunction,
    lgd_c: f64,
    lgd_i: f64,
}

/// Credit parameters in force at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CreditSnapshot {
    /// Counterparty defaults first.
    pub lambda_ci: f64,
    /// Investor defaults first.
    pub lambda_ic: f64,
    pub lambda_p: f64,
    pub lambda_i: f64,
    pub lgd_c: f64,
    pub lgd_i: f64,
}

impl CreditSnapshot {
    /// First-to-default intensity `λ = λ^{C<I} + λ^{I<C}`.
    pub fn total(&self) -> f64 {
        self.lambda_ci + self.lambda_ic
    }
}

fn check_intensity(name: &str, f: &StepFunction) -> Result<(), CreditError> {
    if f.min_value() < 0.0 {
        return Err(CreditError::InvalidSpec(format!("{name} must be nonnegative")));
    }
    Ok(())
}

fn check_lgd(name: &str, v: f64) -> Result<(), CreditError> {
    if !(0.0..=1.0).contains(&v) {
        return Err(CreditError::InvalidSpec(format!("{name} = {v} must lie in [0, 1]")));
    }
    Ok(())
}

impl CreditSpec {
    pub fn new(
        lambda_ci: StepFunction,
        lambda_ic: StepFunction,
        lambda_p: StepFunction,
        lambda_i: StepFunction,
        lgd_c: f64,
        lgd_i: f64,
    ) -> Result<Self, CreditError> {
        check_intensity("lambda_CI", &lambda_ci)?;
        check_intensity("lambda_IC", &lambda_ic)?;
        check_intensity("lambda_P", &lambda_p)?;
        check_intensity("lambda_I", &lambda_i)?;
        check_lgd("lgd_C", lgd_c)?;
        check_lgd("lgd_I", lgd_i)?;
        Ok(CreditSpec {
            lambda_ci,
            lambda_ic,
            lambda_p,
            lambda_i,
            lgd_c,
            lgd_i,
        })
    }

    /// Default-free counterparties.
    pub fn riskless() -> Self {
        let zero = StepFunction::constant(0.0);
        CreditSpec {
            lambda_ci: zero.clone(),
            lambda_ic: zero.clone(),
            lambda_p: zero.clone(),
            lambda_i: zero,
            lgd_c: 0.0,
            lgd_i: 0.0,
        }
    }

    /// Flat bilateral intensities; pool and investor intensities zero.
    pub fn flat(lambda_ci: f64, lambda_ic: f64, lgd_c: f64, lgd_i: f64) -> Result<Self, CreditError> {
        CreditSpec::new(
            StepFunction::constant(lambda_ci),
            StepFunction::constant(lambda_ic),
            StepFunction::constant(0.0),
            StepFunction::constant(0.0),
            lgd_c,
            lgd_i,
        )
    }

    pub fn lambda_ci(&self) -> &StepFunction {
        &self.lambda_ci
    }

    pub fn lambda_ic(&self) -> &StepFunction {
        &self.lambda_ic
    }

    pub fn lambda_p(&self) -> &StepFunction {
        &self.lambda_p
    }

    pub fn lambda_i(&self) -> &StepFunction {
        &self.lambda_i
    }

    pub fn lgd_c(&self) -> f64 {
        self.lgd_c
    }

    pub fn lgd_i(&self) -> f64 {
        self.lgd_i
    }

    pub fn at(&self, t: f64) -> CreditSnapshot {
        CreditSnapshot {
            lambda_ci: self.lambda_ci.value(t),
            lambda_ic: self.lambda_ic.value(t),
            lambda_p: self.lambda_p.value(t),
            lambda_i: self.lambda_i.value(t),
            lgd_c: self.lgd_c,
            lgd_i: self.lgd_i,
        }
    }

    /// Breakpoints of every intensity inside `(a, b)`.
    pub fn breakpoints_in(&self, a: f64, b: f64) -> Vec<f64> {
        [&self.lambda_ci, &self.lambda_ic, &self.lambda_p, &self.lambda_i]
            .iter()
            .flat_map(|f| f.breakpoints_in(a, b))
            .collect()
    }
}
