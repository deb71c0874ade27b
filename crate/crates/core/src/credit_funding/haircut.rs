use super::CreditError;

/// Empirical quantile `Q_X(q) = inf{x : q < P[X < x]}`.
///
/// With sorted samples `s_0 ≤ … ≤ s_{n−1}` this is `s_k` for the smallest
/// `k` such that `(k + 1)/n > q`.
pub fn empirical_quantile(samples: &[f64], q: f64) -> Result<f64, CreditError> {
    if samples.is_empty() {
        return Err(CreditError::EmptySamples);
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(CreditError::InvalidQuantile(q));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut k = (q * n as f64).floor() as usize;
    // guard against rounding in q·n
    while k > 0 && (k as f64) / (n as f64) > q {
        k -= 1;
    }
    while ((k + 1) as f64) / (n as f64) <= q {
        k += 1;
    }
    Ok(sorted[k.min(n - 1)])
}

fn negative_part(x: f64) -> f64 {
    x.min(0.0)
}

/// VaR haircuts `(ς⁺, ς⁻)` from samples of the mark-to-market after the
/// margin period. Quantiles are taken on the P&L `V̄_{t+δ} − V_t`, so each
/// haircut is the relative adverse move covered at level `q`; each lies in
/// `[0, 1)`.
pub fn haircut_var(
    samples: &[f64],
    value_now: f64,
    q: f64,
) -> Result<(f64, f64), CreditError> {
    if value_now == 0.0 || !value_now.is_finite() {
        return Err(CreditError::ZeroValue);
    }
    let pnl: Vec<f64> = samples.iter().map(|s| s - value_now).collect();
    let losses: Vec<f64> = pnl.iter().map(|x| -x).collect();
    let q_plus = negative_part(empirical_quantile(&losses, q)?);
    let q_minus = negative_part(empirical_quantile(&pnl, q)?);
    let mut plus = if -value_now < q_plus { -q_plus / value_now } else { 0.0 };
    let mut minus = if value_now < q_minus { q_minus / value_now } else { 0.0 };
    // normalise −0
    plus += 0.0;
    minus += 0.0;
    Ok((plus, minus))
}

/// Option-style haircut `ς = 1 + (E[(V̄_{t+δ}D/V_t − 1)⁺] − 1)⁻`, i.e. the
/// expected relative upside capped at 1. Reaching the cap is logged.
pub fn haircut_price(discounted_values: &[f64], value_now: f64) -> Result<f64, CreditError> {
    if value_now == 0.0 || !value_now.is_finite() {
        return Err(CreditError::ZeroValue);
    }
    if discounted_values.is_empty() {
        return Err(CreditError::EmptySamples);
    }
    let n = discounted_values.len() as f64;
    let upside: f64 = discounted_values
        .iter()
        .map(|v| (v / value_now - 1.0).max(0.0))
        .sum::<f64>()
        / n;
    if upside >= 1.0 {
        log::warn!("option-style haircut saturated at 1 (expected upside {upside})");
    }
    Ok(1.0 + negative_part(upside - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quantile_definition() {
        let s: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(empirical_quantile(&s, 0.05).unwrap(), 1.0);
        // P[X < x] > 0.1 first happens just above 2
        assert_eq!(empirical_quantile(&s, 0.1).unwrap(), 2.0);
        assert_eq!(empirical_quantile(&s, 0.95).unwrap(), 10.0);
        assert!(empirical_quantile(&[], 0.5).is_err());
        assert!(empirical_quantile(&s, 1.0).is_err());
    }

    #[test]
    fn var_haircut_example() {
        let mut samples = vec![100.0; 98];
        samples.push(140.0);
        samples.push(130.0);
        let (plus, minus) = haircut_var(&samples, 100.0, 0.01).unwrap();
        assert!((plus - 0.3).abs() < 1e-15);
        assert_eq!(minus, 0.0);
    }

    #[test]
    fn degenerate_distribution_needs_no_haircut() {
        let (plus, minus) = haircut_var(&[42.0; 50], 42.0, 0.01).unwrap();
        assert_eq!((plus, minus), (0.0, 0.0));
        assert_eq!(haircut_price(&[42.0; 50], 42.0).unwrap(), 0.0);
    }

    #[test]
    fn price_haircut_values() {
        // no upside
        assert_eq!(haircut_price(&[90.0, 100.0, 80.0], 100.0).unwrap(), 0.0);
        // expected upside 0.3
        let v = haircut_price(&[160.0, 100.0], 100.0).unwrap();
        assert!((v - 0.3).abs() < 1e-15);
        // expected upside 1.5 saturates
        assert_eq!(haircut_price(&[400.0, 100.0], 100.0).unwrap(), 1.0);
        assert_eq!(haircut_price(&[1.0], 0.0).unwrap_err(), CreditError::ZeroValue);
    }

    #[test]
    fn negative_exposure_uses_minus_branch() {
        let mut samples = vec![-100.0; 98];
        samples.push(-125.0);
        samples.push(-150.0);
        let (plus, minus) = haircut_var(&samples, -100.0, 0.01).unwrap();
        assert_eq!(plus, 0.0);
        assert!((minus - 0.25).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn haircuts_stay_in_range(
            samples in prop::collection::vec(-500.0..500.0f64, 1..60),
            value in prop_oneof![-300.0..-1e-3f64, 1e-3..300.0f64],
            q in 0.001..0.999f64,
        ) {
            let (plus, minus) = haircut_var(&samples, value, q).unwrap();
            prop_assert!((0.0..1.0).contains(&plus));
            prop_assert!((0.0..1.0).contains(&minus));
            let s = haircut_price(&samples, value).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }
}
