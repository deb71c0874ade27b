use serde_json::{Map, Value};

use super::MarketDataError;
use crate::credit_funding::{
    CollateralMode, CollateralPolicy, CreditSpec, FundingSpec, HaircutMethod,
    DEFAULT_MARGIN_PERIOD,
};
use crate::hjm::{VolatilityParams, VolatilitySpec};
use crate::step::StepFunction;

/// Typed engine configuration with defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub num_factors: usize,
    pub seed: u64,
    pub paths: usize,
    /// Maximal Euler step in years.
    pub grid_dt: f64,
    /// Spacing of stored observation dates (regression dates) in years.
    pub obs_dt: f64,
    /// Worker threads; 0 means all available.
    pub threads: usize,
    pub extrapolate: bool,
    pub model: VolatilitySpec,
    /// Per-tenor shift `k`; unlisted tenors use `1/x`.
    pub shifts: Vec<(f64, f64)>,
    pub credit: CreditSpec,
    pub funding: FundingSpec,
    pub policy: CollateralPolicy,
}

impl Default for EngineConfig {
    fn default() -> Self {
        validate_config(&Value::Object(Map::new())).expect("defaults are valid")
    }
}

impl EngineConfig {
    pub fn shift_for(&self, tenor: f64) -> Option<f64> {
        self.shifts
            .iter()
            .find(|(x, _)| (x - tenor).abs() <= super::TENOR_TOLERANCE)
            .map(|&(_, k)| k)
    }
}

struct Fields {
    map: Map<String, Value>,
    prefix: String,
}

fn out_of_domain(key: impl Into<String>, value: impl ToString) -> MarketDataError {
    MarketDataError::OutOfDomain {
        key: key.into(),
        value: value.to_string(),
    }
}

impl Fields {
    fn new(value: &Value, prefix: &str) -> Result<Self, MarketDataError> {
        match value {
            Value::Object(map) => Ok(Fields {
                map: map.clone(),
                prefix: prefix.to_string(),
            }),
            other => Err(out_of_domain(
                if prefix.is_empty() { "<root>" } else { prefix },
                other,
            )),
        }
    }

    fn key(&self, k: &str) -> String {
        if self.prefix.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.prefix)
        }
    }

    fn take(&mut self, k: &str) -> Option<Value> {
        self.map.remove(k)
    }

    fn number(&mut self, k: &str, default: f64, ok: impl Fn(f64) -> bool) -> Result<f64, MarketDataError> {
        match self.take(k) {
            None => Ok(default),
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() && ok(x) => Ok(x),
                _ => Err(out_of_domain(self.key(k), v)),
            },
        }
    }

    fn integer(&mut self, k: &str, default: u64, min: u64) -> Result<u64, MarketDataError> {
        match self.take(k) {
            None => Ok(default),
            Some(v) => match v.as_u64() {
                Some(x) if x >= min => Ok(x),
                _ => Err(out_of_domain(self.key(k), v)),
            },
        }
    }

    fn boolean(&mut self, k: &str, default: bool) -> Result<bool, MarketDataError> {
        match self.take(k) {
            None => Ok(default),
            Some(Value::Bool(b)) => Ok(b),
            Some(v) => Err(out_of_domain(self.key(k), v)),
        }
    }

    fn step(&mut self, k: &str, default: f64, ok: impl Fn(f64) -> bool) -> Result<StepFunction, MarketDataError> {
        match self.take(k) {
            None => Ok(StepFunction::constant(default)),
            Some(v) => parse_step(&v, &self.key(k), ok),
        }
    }

    fn finish(self) -> Result<(), MarketDataError> {
        match self.map.keys().next() {
            Some(k) => Err(MarketDataError::UnknownKey(self.key(k))),
            None => Ok(()),
        }
    }
}

fn parse_step(v: &Value, key: &str, ok: impl Fn(f64) -> bool) -> Result<StepFunction, MarketDataError> {
    if let Value::Object(map) = v {
        if let Some(extra) = map.keys().find(|k| *k != "times" && *k != "values") {
            return Err(MarketDataError::UnknownKey(format!("{key}.{extra}")));
        }
    }
    let f: StepFunction =
        serde_json::from_value(v.clone()).map_err(|_| out_of_domain(key, v))?;
    if f.values().iter().all(|&x| ok(x)) {
        Ok(f)
    } else {
        Err(out_of_domain(key, v))
    }
}

fn parse_vector(v: &Value, key: &str, ok: impl Fn(f64) -> bool) -> Result<Vec<f64>, MarketDataError> {
    let items: Vec<f64> = match v {
        Value::Array(items) => items
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| out_of_domain(key, v)))
            .collect::<Result<_, _>>()?,
        other => vec![other.as_f64().ok_or_else(|| out_of_domain(key, v))?],
    };
    if items.is_empty() || items.iter().any(|&x| !x.is_finite() || !ok(x)) {
        return Err(out_of_domain(key, v));
    }
    Ok(items)
}

fn parse_matrix(v: &Value, key: &str, n: usize) -> Result<Vec<Vec<f64>>, MarketDataError> {
    if let Some(c) = v.as_f64() {
        let mut m = vec![vec![0.0; n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = c;
        }
        return Ok(m);
    }
    let rows = v.as_array().ok_or_else(|| out_of_domain(key, v))?;
    rows.iter()
        .map(|row| parse_vector(row, key, |_| true))
        .collect()
}

fn parse_tenor_map(
    v: &Value,
    key: &str,
    ok: impl Fn(f64) -> bool + Copy,
) -> Result<Vec<(f64, Vec<f64>)>, MarketDataError> {
    let map = v.as_object().ok_or_else(|| out_of_domain(key, v))?;
    map.iter()
        .map(|(tenor, value)| {
            let x: f64 = tenor
                .trim()
                .parse()
                .ok()
                .filter(|x: &f64| *x > 0.0 && x.is_finite())
                .ok_or_else(|| out_of_domain(format!("{key}.{tenor}"), tenor))?;
            Ok((x, parse_vector(value, &format!("{key}.{tenor}"), ok)?))
        })
        .collect()
}

fn parse_model(
    v: Option<&Value>,
    num_factors: usize,
) -> Result<(VolatilitySpec, Vec<(f64, f64)>), MarketDataError> {
    let empty = Value::Object(Map::new());
    let mut f = Fields::new(v.unwrap_or(&empty), "model")?;
    let n = num_factors;
    let a = match f.take("a") {
        None => vec![StepFunction::constant(0.05)],
        Some(Value::Array(items)) => items
            .iter()
            .map(|x| parse_step(x, &f.key("a"), |_| true))
            .collect::<Result<_, _>>()?,
        Some(x) => vec![parse_step(&x, &f.key("a"), |_| true)?],
    };
    let r = match f.take("R") {
        None => {
            let mut m = vec![vec![0.0; n]; n];
            for (i, row) in m.iter_mut().enumerate() {
                row[i] = 0.01;
            }
            m
        }
        Some(x) => parse_matrix(&x, &f.key("R"), n)?,
    };
    if r.len() != n {
        return Err(out_of_domain(f.key("R"), format!("{} rows for {n} factors", r.len())));
    }
    let mut vector = |k: &str, default: f64| -> Result<Vec<f64>, MarketDataError> {
        match f.take(k) {
            None => Ok(vec![default]),
            Some(x) => parse_vector(&x, &f.key(k), |v| v >= 0.0),
        }
    };
    let kappa = vector("kappa", 1.0)?;
    let theta = vector("theta", 1.0)?;
    let nu = vector("nu", 0.0)?;
    let v_bar = vector("v_bar", 1.0)?;
    let rho = match f.take("rho") {
        None => vec![vec![0.0; n]; n],
        Some(x) => parse_matrix(&x, &f.key("rho"), n)?,
    };
    let q = match f.take("q") {
        None => Vec::new(),
        Some(x) => parse_tenor_map(&x, &f.key("q"), |_| true)?,
    };
    let shifts = match f.take("shift") {
        None => Vec::new(),
        Some(x) => parse_tenor_map(&x, &f.key("shift"), |k| k > 0.0)?
            .into_iter()
            .map(|(t, k)| {
                if k.len() == 1 {
                    Ok((t, k[0]))
                } else {
                    Err(out_of_domain(format!("model.shift.{t}"), format!("{k:?}")))
                }
            })
            .collect::<Result<_, _>>()?,
    };
    f.finish()?;
    let spec = VolatilitySpec::new(VolatilityParams {
        a,
        r,
        kappa,
        theta,
        nu,
        v_bar,
        rho,
        q,
    })
    .map_err(|e| out_of_domain("model", e))?;
    Ok((spec, shifts))
}

/// Validates a collateral policy tree:
/// `{mode, alpha, c_spread, delta_days, quantile_q, haircut_method, haircut}`.
pub fn validate_policy(v: &Value) -> Result<CollateralPolicy, MarketDataError> {
    validate_policy_at(v, "policy")
}

fn validate_policy_at(v: &Value, prefix: &str) -> Result<CollateralPolicy, MarketDataError> {
    let mut f = Fields::new(v, prefix)?;
    let mode_name = match f.take("mode") {
        None => "perfect".to_string(),
        Some(Value::String(s)) => s.to_ascii_lowercase(),
        Some(other) => return Err(out_of_domain(f.key("mode"), other)),
    };
    let alpha = f.take("alpha");
    let haircut = f.take("haircut");
    let mode = match mode_name.as_str() {
        "none" => CollateralMode::None,
        "perfect" => CollateralMode::Perfect,
        "fraction" => {
            let a = alpha.ok_or_else(|| out_of_domain(f.key("alpha"), "missing"))?;
            CollateralMode::Fraction(parse_step(&a, &f.key("alpha"), |x| {
                (0.0..=1.0).contains(&x)
            })?)
        }
        "ccp" => CollateralMode::Ccp {
            haircut: match haircut {
                None => None,
                Some(h) => Some(
                    h.as_f64()
                        .filter(|x| *x >= 0.0 && x.is_finite())
                        .ok_or_else(|| out_of_domain(f.key("haircut"), h))?,
                ),
            },
        },
        other => return Err(out_of_domain(f.key("mode"), other)),
    };
    let c_spread = f.number("c_spread", 0.0, |_| true)?;
    let delta_days = f.number("delta_days", DEFAULT_MARGIN_PERIOD * 365.0, |d| {
        (0.0..=20.0).contains(&d)
    })?;
    let quantile_q = f.number("quantile_q", 0.01, |q| q > 0.0 && q < 1.0)?;
    let method = match f.take("haircut_method") {
        None => HaircutMethod::Var,
        Some(Value::String(s)) if s.eq_ignore_ascii_case("var") => HaircutMethod::Var,
        Some(Value::String(s)) if s.eq_ignore_ascii_case("price") => HaircutMethod::Price,
        Some(other) => return Err(out_of_domain(f.key("haircut_method"), other)),
    };
    f.finish()?;
    CollateralPolicy::new(mode, c_spread, delta_days / 365.0, quantile_q, method)
        .map_err(|e| out_of_domain(prefix, e))
}

/// Turns a parsed configuration tree into an [`EngineConfig`]. Unknown keys
/// and out-of-domain values are rejected; missing keys take defaults.
pub fn validate_config(raw: &Value) -> Result<EngineConfig, MarketDataError> {
    let mut f = Fields::new(raw, "")?;
    let num_factors = f.integer("num_factors", 1, 1)? as usize;
    let seed = f.integer("seed", 42, 0)?;
    let paths = f.integer("paths", 10_000, 1)? as usize;
    let grid_dt = f.number("grid_dt", 1.0 / 96.0, |x| x > 0.0)?;
    let obs_dt = f.number("obs_dt", 0.25, |x| x > 0.0)?;
    let threads = f.integer("threads", 0, 0)? as usize;
    let extrapolate = f.boolean("extrapolate", false)?;
    let unit = |x: f64| (0.0..=1.0).contains(&x);
    let lgd_c = f.number("lgd_C", 0.6, unit)?;
    let lgd_i = f.number("lgd_I", 0.6, unit)?;
    let nonneg = |x: f64| x >= 0.0;
    let lambda_ci = f.step("lambda_CI", 0.0, nonneg)?;
    let lambda_ic = f.step("lambda_IC", 0.0, nonneg)?;
    let lambda_p = f.step("lambda_P", 0.0, nonneg)?;
    let lambda_i = f.step("lambda_I", 0.0, nonneg)?;
    let any = |_: f64| true;
    let funding = FundingSpec {
        w_minus: f.step("w_minus", 0.0, any)?,
        w_plus: f.step("w_plus", 0.0, any)?,
        w_p: f.step("w_P", 0.0, any)?,
        w_i: f.step("w_I", 0.0, any)?,
    };
    let model_value = f.take("model");
    let policy_value = f.take("policy");
    f.finish()?;

    let (model, shifts) = parse_model(model_value.as_ref(), num_factors)?;
    let credit = CreditSpec::new(lambda_ci, lambda_ic, lambda_p, lambda_i, lgd_c, lgd_i)
        .map_err(|e| out_of_domain("credit", e))?;
    funding
        .check_ordering(&credit)
        .map_err(|e| out_of_domain("funding", e))?;
    let policy = match policy_value {
        None => CollateralPolicy::default(),
        Some(p) => validate_policy_at(&p, "policy")?,
    };
    Ok(EngineConfig {
        num_factors,
        seed,
        paths,
        grid_dt,
        obs_dt,
        threads,
        extrapolate,
        model,
        shifts,
        credit,
        funding,
        policy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn empty_config_takes_defaults() {
        let c = validate_config(&json!({})).unwrap();
        assert_eq!(c.num_factors, 1);
        assert_eq!(c.seed, 42);
        assert_eq!(c.paths, 10_000);
        assert_eq!(c.grid_dt, 1.0 / 96.0);
        assert_eq!(c.credit.lgd_c(), 0.6);
        assert_eq!(c.policy.mode, CollateralMode::Perfect);
        assert_eq!(c.model.num_factors(), 1);
        assert!(!c.extrapolate);
    }

    #[test]
    fn lgd_passthrough_and_domain() {
        let c = validate_config(&json!({"lgd_C": 0.6})).unwrap();
        assert_eq!(c.credit.lgd_c(), 0.6);
        assert_eq!(
            validate_config(&json!({"lgd_C": 1.5})).unwrap_err(),
            MarketDataError::OutOfDomain {
                key: "lgd_C".into(),
                value: "1.5".into()
            }
        );
    }

    #[test]
    fn unknown_keys_are_reported_with_path() {
        assert_eq!(
            validate_config(&json!({"lgd_c": 0.5})).unwrap_err(),
            MarketDataError::UnknownKey("lgd_c".into())
        );
        assert_eq!(
            validate_config(&json!({"model": {"sigma": 0.01}})).unwrap_err(),
            MarketDataError::UnknownKey("model.sigma".into())
        );
        assert_eq!(
            validate_config(&json!({"policy": {"mode": "none", "x": 1}})).unwrap_err(),
            MarketDataError::UnknownKey("policy.x".into())
        );
    }

    #[test]
    fn nested_model_and_policy() {
        let c = validate_config(&json!({
            "num_factors": 2,
            "model": {
                "a": [0.1, {"times": [0, 2], "values": [0.05, 0.02]}],
                "R": [[0.01, 0.002], [0, 0.008]],
                "kappa": 1.2, "theta": [1.0, 0.8], "nu": 0.3, "v_bar": 1.0,
                "rho": [[-0.3, 0.0], [0.0, 0.2]],
                "q": {"0.25": [1.0, 0.9]},
                "shift": {"0.5": 2.5}
            },
            "lambda_CI": {"times": [0, 5], "values": [0.01, 0.02]},
            "policy": {"mode": "fraction", "alpha": 0.5, "c_spread": 0.001}
        }))
        .unwrap();
        assert_eq!(c.model.num_factors(), 2);
        assert_eq!(c.model.q_loadings(0.25), vec![1.0, 0.9]);
        assert_eq!(c.shift_for(0.5), Some(2.5));
        assert_eq!(c.shift_for(0.25), None);
        assert_eq!(c.credit.lambda_ci().value(6.0), 0.02);
        assert_eq!(
            c.policy.mode,
            CollateralMode::Fraction(StepFunction::constant(0.5))
        );
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            json!({"paths": 0}),
            json!({"grid_dt": -1.0}),
            json!({"lambda_CI": -0.1}),
            json!({"num_factors": 2, "model": {"R": [[0.01]]}}),
            json!({"model": {"rho": 1.5}}),
            json!({"policy": {"mode": "fraction", "alpha": 1.2}}),
            json!({"policy": {"mode": "fraction"}}),
            json!({"policy": {"mode": "sometimes"}}),
            json!({"policy": {"delta_days": 30}}),
            json!({"w_minus": 0.01}),
            json!([1, 2]),
        ] {
            assert!(
                matches!(validate_config(&bad), Err(MarketDataError::OutOfDomain { .. })),
                "{bad}"
            );
        }
    }

    #[test]
    fn standalone_policy() {
        let p = validate_policy(&json!({"mode": "ccp", "haircut_method": "price", "delta_days": 5})).unwrap();
        assert_eq!(p.mode, CollateralMode::Ccp { haircut: None });
        assert_eq!(p.haircut_method, HaircutMethod::Price);
        assert!((p.delta - 5.0 / 365.0).abs() < 1e-15);
    }
}
