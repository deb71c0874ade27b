//! Browser bindings: curve bootstrap, a simulated forward fan, and a
//! collateral/credit explorer for a vanilla swap. Every entry point takes
//! plain numbers or CSV text and returns a JSON string.

use multicurve::credit_funding::{CollateralPolicy, CreditSpec, FundingSpec};
use multicurve::curves::CurveSet;
use multicurve::hjm::{reconstruct_forward, simulate, SimulationGrid, VolatilitySpec};
use multicurve::market_data::QuoteSet;
use multicurve::pricing::{price_reduced, CsaTerms, DealSchedule, Market};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const PERCENTILES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

fn curves_from(csv: &str) -> Result<CurveSet, String> {
    let quotes = QuoteSet::from_csv_str(csv).map_err(|e| e.to_string())?;
    CurveSet::bootstrap(&quotes, false, |_| None).map_err(|e| e.to_string())
}

fn bootstrap_impl(csv: &str) -> Result<Value, String> {
    let quotes = QuoteSet::from_csv_str(csv).map_err(|e| e.to_string())?;
    let curves = CurveSet::bootstrap(&quotes, false, |_| None).map_err(|e| e.to_string())?;
    let d = &curves.discount;
    let steps = (d.last_pillar() * 12.0).round() as usize;
    let mut discount = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let t = d.last_pillar() * i as f64 / steps as f64;
        let df = d.discount_factor(t).map_err(|e| e.to_string())?;
        let zero = if t > 0.0 { json!(-df.ln() / t) } else { Value::Null };
        discount.push(json!({ "t": t, "df": df, "zero": zero }));
    }
    let mut worst: f64 = 0.0;
    for q in quotes.ois() {
        worst = worst.max((d.ois_swap_rate(q.maturity).map_err(|e| e.to_string())? - q.rate).abs());
    }
    let mut forwards = Vec::new();
    for c in &curves.forwards {
        let points: Vec<Value> = c
            .pillars()
            .iter()
            .zip(c.forwards())
            .map(|(t, f)| json!({ "t": t, "f": f }))
            .collect();
        for q in quotes.irs(c.tenor()).unwrap_or(&[]) {
            worst = worst.max((c.swap_rate(d, q.maturity).map_err(|e| e.to_string())? - q.rate).abs());
        }
        forwards.push(json!({ "tenor": c.tenor(), "points": points }));
    }
    Ok(json!({ "discount": discount, "forwards": forwards, "max_repricing_error": worst }))
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[allow(clippy::too_many_arguments)]
fn fan_impl(csv: &str, tenor: f64, a: f64, sigma: f64, paths: usize, seed: u64, horizon: f64) -> Result<Value, String> {
    if paths < 2 || paths > 50_000 {
        return Err("paths must lie in [2, 50000]".into());
    }
    let curves = curves_from(csv)?;
    let fwd = curves.forward_curve(tenor).map_err(|e| e.to_string())?;
    let horizon = horizon.min(fwd.last_pillar() - tenor);
    if !(horizon > 0.0) {
        return Err("horizon leaves no room before the last forward pillar".into());
    }
    let spec = VolatilitySpec::one_factor(a, sigma);
    let grid = SimulationGrid::regular(horizon, horizon / 20.0, 1.0 / 48.0, &[]).map_err(|e| e.to_string())?;
    let ens = simulate(&spec, &grid, paths, seed).map_err(|e| e.to_string())?;
    let mut bands = Vec::new();
    for (i, &t) in ens.times().iter().enumerate() {
        let maturity = t + tenor;
        let mut values = (0..paths)
            .map(|p| reconstruct_forward(&ens.state(p, i), fwd, &spec, maturity))
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| e.to_string())?;
        values.sort_by(f64::total_cmp);
        let q: Vec<f64> = PERCENTILES.iter().map(|&p| quantile(&values, p)).collect();
        let f0 = fwd.forward(maturity).map_err(|e| e.to_string())?;
        bands.push(json!({ "t": t, "f0": f0, "q": q }));
    }
    Ok(json!({ "percentiles": PERCENTILES, "bands": bands }))
}

#[allow(clippy::too_many_arguments)]
fn explorer_impl(
    csv: &str,
    fixed_rate: f64,
    alphas: &[f64],
    lambda_ci: f64,
    lgd_c: f64,
    funding_spread: f64,
    paths: usize,
    seed: u64,
) -> Result<Value, String> {
    if paths < 2 || paths > 20_000 {
        return Err("paths must lie in [2, 20000]".into());
    }
    let curves = curves_from(csv)?;
    let maturity = 5.0_f64.min(curves.discount.last_pillar());
    let tenor = curves.forwards.first().ok_or("no IRS quotes")?.tenor();
    let deal = DealSchedule::swap(maturity, tenor, fixed_rate, Some(1.0), 100.0, true).map_err(|e| e.to_string())?;
    let spec = VolatilitySpec::one_factor(0.05, 0.01);
    let grid = SimulationGrid::regular(maturity, 0.25, 1.0 / 24.0, &deal.required_times()).map_err(|e| e.to_string())?;
    let ens = simulate(&spec, &grid, paths, seed).map_err(|e| e.to_string())?;
    let market = Market { curves: &curves, model: &spec, ensemble: &ens };
    let credit = CreditSpec::flat(lambda_ci, 0.01, lgd_c, 0.6).map_err(|e| e.to_string())?;
    let funding = FundingSpec::flat(0.0, funding_spread, 0.0, 0.0);
    let mut rows = Vec::new();
    for &alpha in alphas {
        let policy = CollateralPolicy::fraction(alpha).map_err(|e| e.to_string())?;
        let terms = CsaTerms { policy: &policy, funding: &funding, credit: &credit };
        let p = price_reduced(&deal, &terms, &market).map_err(|e| e.to_string())?;
        rows.push(json!({
            "alpha": alpha,
            "clean": p.clean,
            "adjusted": p.adjusted,
            "cva": p.decomposition.cva,
            "dva": p.decomposition.dva,
            "funding": p.decomposition.funding_cost,
            "std_error": p.std_error,
        }));
    }
    Ok(json!({ "maturity": maturity, "tenor": tenor, "rows": rows }))
}

fn to_js(r: Result<Value, String>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

/// Bootstraps curves from quote CSV; returns discount factors and zero
/// rates on a monthly grid, forward pillars per tenor and the worst
/// repricing error.
#[wasm_bindgen]
pub fn bootstrap_curves(quotes_csv: &str) -> Result<String, JsValue> {
    to_js(bootstrap_impl(quotes_csv))
}

/// Percentile bands of the simulated spot forward `F_t(t+x)` under a
/// one-factor model.
#[wasm_bindgen]
pub fn forward_fan(
    quotes_csv: &str,
    tenor: f64,
    a: f64,
    sigma: f64,
    paths: usize,
    seed: u64,
    horizon: f64,
) -> Result<String, JsValue> {
    to_js(fan_impl(quotes_csv, tenor, a, sigma, paths, seed, horizon))
}

/// Clean and adjusted value of a receive-fixed swap for each collateral
/// fraction in `alphas`.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn swap_explorer(
    quotes_csv: &str,
    fixed_rate: f64,
    alphas: &[f64],
    lambda_ci: f64,
    lgd_c: f64,
    funding_spread: f64,
    paths: usize,
    seed: u64,
) -> Result<String, JsValue> {
    to_js(explorer_impl(quotes_csv, fixed_rate, alphas, lambda_ci, lgd_c, funding_spread, paths, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    const QUOTES: &str = include_str!("../../../data/quotes.csv");

    #[test]
    fn bootstrap_reports_curves() {
        let v = bootstrap_impl(QUOTES).unwrap();
        assert!(v["max_repricing_error"].as_f64().unwrap() < 1e-10);
        assert_eq!(v["forwards"].as_array().unwrap().len(), 2);
        assert_eq!(v["discount"][0]["df"], 1.0);
        assert!(bootstrap_impl("not,a,quote\n").is_err());
    }

    #[test]
    fn fan_bands_are_ordered_around_the_initial_forward() {
        let v = fan_impl(QUOTES, 0.5, 0.05, 0.01, 500, 1, 5.0).unwrap();
        let bands = v["bands"].as_array().unwrap();
        assert_eq!(bands.len(), 21);
        for b in bands {
            let q: Vec<f64> = b["q"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
            assert!(q.windows(2).all(|w| w[0] <= w[1]));
        }
        let first = &bands[0];
        assert_eq!(first["q"][0], first["f0"]);
    }

    #[test]
    fn more_collateral_means_smaller_adjustment() {
        let v = explorer_impl(QUOTES, 0.035, &[0.0, 0.5, 1.0], 0.03, 0.6, 0.002, 400, 2).unwrap();
        let gaps: Vec<f64> = v["rows"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| (r["adjusted"].as_f64().unwrap() - r["clean"].as_f64().unwrap()).abs())
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2]);
        assert_eq!(gaps[2], 0.0);
    }
}
