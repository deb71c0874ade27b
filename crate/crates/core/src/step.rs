//! Right-continuous piecewise-constant functions of time.
//!
//! Used for intensities, funding weights, collateral fractions and
//! mean-reversion speeds. A function holds `values[k]` on
//! `[times[k], times[k+1])` and the last value beyond the last breakpoint.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StepError {
    #[error("step function needs at least one value")]
    Empty,
    #[error("step function has {times} breakpoints but {values} values")]
    LengthMismatch { times: usize, values: usize },
    #[error("step function breakpoints must start at 0 and increase strictly")]
    BadBreakpoints,
    #[error("step function value {0} is not finite")]
    NonFinite(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepRepr", into = "StepRepr")]
pub struct StepFunction {
    times: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum StepRepr {
    Constant(f64),
    Steps { times: Vec<f64>, values: Vec<f64> },
}

impl TryFrom<StepRepr> for StepFunction {
    type Error = StepError;

    fn try_from(repr: StepRepr) -> Result<Self, Self::Error> {
        match repr {
            StepRepr::Constant(v) => {
                if !v.is_finite() {
                    return Err(StepError::NonFinite(v));
                }
                Ok(StepFunction::constant(v))
            }
            StepRepr::Steps { times, values } => StepFunction::new(times, values),
        }
    }
}

impl From<StepFunction> for StepRepr {
    fn from(f: StepFunction) -> Self {
        if f.values.len() == 1 {
            StepRepr::Constant(f.values[0])
        } else {
            StepRepr::Steps {
                times: f.times,
                values: f.values,
            }
        }
    }
}

impl StepFunction {
    pub fn constant(value: f64) -> Self {
        StepFunction {
            times: vec![0.0],
            values: vec![value],
        }
    }

    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self, StepError> {
        if values.is_empty() {
            return Err(StepError::Empty);
        }
        if times.len() != values.len() {
            return Err(StepError::LengthMismatch {
                times: times.len(),
                values: values.len(),
            });
        }
        if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(StepError::BadBreakpoints);
        }
        if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(StepError::NonFinite(bad));
        }
        Ok(StepFunction { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|&v| v == self.values[0])
    }

    pub fn value(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&b| b <= t);
        self.values[k.saturating_sub(1)]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Exact integral over `[a, b]`; negative when `b < a`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b < a {
            return -self.integral(b, a);
        }
        let mut total = 0.0;
        let mut lo = a;
        for hi in self.breakpoints_in(a, b).into_iter().chain(std::iter::once(b)) {
            total += self.value(lo) * (hi - lo);
            lo = hi;
        }
        total
    }

    /// Breakpoints strictly inside `(a, b)`.
    pub fn breakpoints_in(&self, a: f64, b: f64) -> Vec<f64> {
        self.times
            .iter()
            .copied()
            .filter(|&t| t > a && t < b)
            .collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> StepFunction {
        StepFunction {
            times: self.times.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Sorted union of the breakpoints of several step functions inside `(a, b)`,
/// bracketed by `a` and `b`.
pub fn merged_partition(a: f64, b: f64, functions: &[&StepFunction]) -> Vec<f64> {
    let mut cuts = vec![a];
    for f in functions {
        cuts.extend(f.breakpoints_in(a, b));
    }
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

/// Pointwise combination of step functions, exact on the union of their
/// breakpoints.
pub fn combine(functions: &[&StepFunction], f: impl Fn(&[f64]) -> f64) -> StepFunction {
    let mut times: Vec<f64> = functions.iter().flat_map(|g| g.times.iter().copied()).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut args = vec![0.0; functions.len()];
    let values = times
        .iter()
        .map(|&t| {
            for (a, g) in args.iter_mut().zip(functions) {
                *a = g.value(t);
            }
            f(&args)
        })
        .collect();
    StepFunction { times, values }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> StepFunction {
        StepFunction::new(vec![0.0, 1.0, 3.0], vec![0.01, 0.02, 0.05]).unwrap()
    }

    #[test]
    fn value_is_right_continuous() {
        let f = sample();
        assert_eq!(f.value(0.0), 0.01);
        assert_eq!(f.value(0.999), 0.01);
        assert_eq!(f.value(1.0), 0.02);
        assert_eq!(f.value(10.0), 0.05);
    }

    #[test]
    fn integral_across_breakpoints() {
        let f = sample();
        let expected = 0.5 * 0.01 + 2.0 * 0.02 + 1.0 * 0.05;
        assert!((f.integral(0.5, 4.0) - expected).abs() < 1e-15);
        assert!((f.integral(4.0, 0.5) + expected).abs() < 1e-15);
        assert_eq!(f.integral(2.0, 2.0), 0.0);
    }

    #[test]
    fn rejects_bad_breakpoints() {
        assert_eq!(
            StepFunction::new(vec![0.5], vec![1.0]),
            Err(StepError::BadBreakpoints)
        );
        assert_eq!(
            StepFunction::new(vec![0.0, 1.0, 1.0], vec![1.0, 2.0, 3.0]),
            Err(StepError::BadBreakpoints)
        );
        assert!(StepFunction::new(vec![0.0], vec![]).is_err());
    }

    #[test]
    fn json_accepts_scalar_or_steps() {
        let c: StepFunction = serde_json::from_str("0.03").unwrap();
        assert_eq!(c, StepFunction::constant(0.03));
        let s: StepFunction =
            serde_json::from_str(r#"{"times":[0,1,3],"values":[0.01,0.02,0.05]}"#).unwrap();
        assert_eq!(s, sample());
        assert!(serde_json::from_str::<StepFunction>(r#"{"times":[1],"values":[0.0]}"#).is_err());
    }

    #[test]
    fn merged_partition_is_sorted_and_unique() {
        let f = sample();
        let g = StepFunction::new(vec![0.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(
            merged_partition(0.5, 3.5, &[&f, &g]),
            vec![0.5, 1.0, 2.0, 3.0, 3.5]
        );
    }

    #[test]
    fn combine_evaluates_on_union() {
        let f = sample();
        let g = StepFunction::new(vec![0.0, 2.0], vec![1.0, 2.0]).unwrap();
        let h = combine(&[&f, &g], |v| v[0] * v[1]);
        assert_eq!(h.times(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(h.values(), &[0.01, 0.02, 0.04, 0.1]);
    }
}
