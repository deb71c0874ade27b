use super::cashflows::{deflate_flows, grid_index, DeflatedFlows};
use super::rates::{dividend_parts, Sign};
use super::regression::{regress, RegressionBasis};
use super::{mean_and_se, AdjustedPrice, CsaTerms, DealSchedule, Decomposition, Market, PricingError};
use crate::credit_funding::{haircut_price, haircut_var, CollateralMode, FundingDirection, HaircutMethod};
use crate::step::{merged_partition, StepFunction};

/// Exact integrals of `q̃` per simulation interval and exposure sign.
#[derive(Debug, Clone)]
pub(crate) struct RateTable {
    /// `q[i][sign]`: components of `∫_{t_i}^{t_{i+1}} q̃`.
    pub q: Vec<[Decomposition; 3]>,
}

impl RateTable {
    pub fn build(times: &[f64], alpha: &StepFunction, terms: &CsaTerms<'_>) -> Self {
        let borrow = terms.funding.spread(terms.credit, FundingDirection::Borrow);
        let invest = terms.funding.spread(terms.credit, FundingDirection::Invest);
        let q = times
            .windows(2)
            .map(|w| {
                let mut cuts = merged_partition(w[0], w[1], &[alpha, &borrow, &invest]);
                cuts.extend(terms.credit.breakpoints_in(w[0], w[1]));
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
                let mut out = [Decomposition::default(); 3];
                for piece in cuts.windows(2) {
                    let (a, b) = (piece[0], piece[1]);
                    let len = b - a;
                    let mid = 0.5 * (a + b);
                    let credit = terms.credit.at(mid);
                    for s in Sign::ALL {
                        let rate = dividend_parts(
                            alpha.value(mid),
                            s,
                            &credit,
                            borrow.value(mid),
                            invest.value(mid),
                            terms.policy.c_spread,
                        );
                        out[s.index()].add(&rate.scaled(len));
                    }
                }
                out
            })
            .collect();
        RateTable { q }
    }

    /// Whether the exposure sign matters on interval `i`.
    pub fn sign_dependent(&self, i: usize) -> bool {
        let q = &self.q[i];
        q[0] != q[1] || q[1] != q[2]
    }
}

/// `(e^{−Q} − 1)/Q`, continuous at 0.
fn relative_decrement(q: f64) -> f64 {
    if q.abs() > 1e-12 {
        (-q).exp_m1() / q
    } else {
        -1.0 + 0.5 * q
    }
}

/// Per-path output of the backward induction.
#[derive(Debug, Clone)]
pub(crate) struct Induction {
    pub clean: Vec<f64>,
    pub adjusted: Vec<f64>,
    /// Sum over paths of the adjustment buckets.
    pub buckets: Decomposition,
    /// `∫_0^{t_last} q̃` per path and its split.
    pub q_total: Vec<f64>,
    pub q_parts: Vec<Decomposition>,
}

/// Undeflated regression targets `W / D(0, t_i; e)`.
pub(crate) fn undeflate(market: &Market<'_>, index: usize, values: &[f64]) -> Result<Vec<f64>, PricingError> {
    values
        .iter()
        .enumerate()
        .map(|(p, w)| Ok(w / market.ensemble.deflator(&market.curves.discount, p, index)?))
        .collect()
}

pub(crate) fn induct(
    flows: &DeflatedFlows,
    table: &RateTable,
    market: &Market<'_>,
) -> Result<Induction, PricingError> {
    let paths = market.ensemble.num_paths();
    let mut w = vec![0.0; paths];
    let mut clean = vec![0.0; paths];
    let mut q_total = vec![0.0; paths];
    let mut q_parts = vec![Decomposition::default(); paths];
    let mut buckets = Decomposition::default();
    for i in (0..flows.last_index).rev() {
        if let Some(dc) = &flows.by_index[i + 1] {
            for p in 0..paths {
                w[p] += dc[p];
                clean[p] += dc[p];
            }
        }
        let signs: Vec<Sign> = if table.sign_dependent(i) {
            let targets = undeflate(market, i, &w)?;
            regress(market.ensemble, i, &targets, RegressionBasis::Quadratic)
                .into_iter()
                .map(Sign::of)
                .collect()
        } else {
            vec![Sign::Positive; paths]
        };
        for p in 0..paths {
            let parts = &table.q[i][signs[p].index()];
            let q = parts.total();
            let r = relative_decrement(q);
            buckets.add(&parts.scaled(w[p] * r));
            w[p] *= (-q).exp();
            q_total[p] += q;
            q_parts[p].add(parts);
        }
    }
    Ok(Induction {
        clean,
        adjusted: w,
        buckets,
        q_total,
        q_parts,
    })
}

fn to_price(ind: &Induction) -> AdjustedPrice {
    let (clean, _) = mean_and_se(&ind.clean);
    let (adjusted, std_error) = mean_and_se(&ind.adjusted);
    let n = ind.adjusted.len().max(1) as f64;
    AdjustedPrice {
        clean,
        adjusted,
        decomposition: ind.buckets.scaled(1.0 / n),
        std_error,
    }
}

/// Collateral-rate discounted value of the coupons; clean = adjusted.
pub fn price_perfect(deal: &DealSchedule, market: &Market<'_>) -> Result<AdjustedPrice, PricingError> {
    let flows = deflate_flows(deal, market)?;
    let mut clean = vec![0.0; market.ensemble.num_paths()];
    for i in (1..=flows.last_index).rev() {
        if let Some(dc) = &flows.by_index[i] {
            for (c, d) in clean.iter_mut().zip(dc) {
                *c += d;
            }
        }
    }
    let (value, std_error) = mean_and_se(&clean);
    Ok(AdjustedPrice {
        clean: value,
        adjusted: value,
        decomposition: Decomposition::default(),
        std_error,
    })
}

/// Sum of deflated coupons paid strictly after grid date `index`.
fn remaining_clean(flows: &DeflatedFlows, index: usize, paths: usize) -> Vec<f64> {
    let mut out = vec![0.0; paths];
    for dc in flows.by_index.iter().skip(index + 1).flatten() {
        for (o, d) in out.iter_mut().zip(dc) {
            *o += d;
        }
    }
    out
}

pub(crate) fn alpha_for(
    flows: &DeflatedFlows,
    terms: &CsaTerms<'_>,
    market: &Market<'_>,
) -> Result<StepFunction, PricingError> {
    let policy = terms.policy;
    Ok(match &policy.mode {
        CollateralMode::None => StepFunction::constant(0.0),
        CollateralMode::Perfect => StepFunction::constant(1.0),
        CollateralMode::Fraction(a) => a.clone(),
        CollateralMode::Ccp { haircut: Some(h) } => StepFunction::constant(1.0 + h),
        CollateralMode::Ccp { haircut: None } => {
            let ens = market.ensemble;
            let paths = ens.num_paths();
            let value_now = mean_and_se(&remaining_clean(flows, 0, paths)).0;
            let k = grid_index(ens, policy.delta)?;
            let later = remaining_clean(flows, k, paths);
            let fitted = regress(ens, k, &undeflate(market, k, &later)?, RegressionBasis::Quadratic);
            let haircut = match policy.haircut_method {
                HaircutMethod::Var => {
                    let (plus, minus) = haircut_var(&fitted, value_now, policy.quantile_q)?;
                    plus + minus
                }
                HaircutMethod::Price => {
                    let dir = if value_now > 0.0 {
                        FundingDirection::Borrow
                    } else {
                        FundingDirection::Invest
                    };
                    let spread = terms.funding.spread(terms.credit, dir).integral(0.0, policy.delta);
                    let discounted = fitted
                        .iter()
                        .enumerate()
                        .map(|(p, v)| {
                            Ok(v * ens.deflator(&market.curves.discount, p, k)? * (-spread).exp())
                        })
                        .collect::<Result<Vec<f64>, PricingError>>()?;
                    haircut_price(&discounted, value_now)?
                }
            };
            log::info!("CCP haircut resolved at inception: {haircut}");
            StepFunction::constant(1.0 + haircut)
        }
    })
}

/// Collateral fraction schedule `α_t` of a deal under its policy. CCP
/// haircuts not fixed by the policy are computed at inception from the
/// regressed clean values after the margin period of risk.
pub fn resolve_alpha(
    deal: &DealSchedule,
    terms: &CsaTerms<'_>,
    market: &Market<'_>,
) -> Result<StepFunction, PricingError> {
    let flows = deflate_flows(deal, market)?;
    alpha_for(&flows, terms, market)
}

pub(crate) fn reduce(
    deal: &DealSchedule,
    terms: &CsaTerms<'_>,
    market: &Market<'_>,
) -> Result<Induction, PricingError> {
    let flows = deflate_flows(deal, market)?;
    let alpha = alpha_for(&flows, terms, market)?;
    let table = RateTable::build(market.ensemble.times(), &alpha, terms);
    induct(&flows, &table, market)
}

/// Adjusted value: coupons discounted pathwise by `exp(−∫ q̃)` on top of the
/// collateral deflator, exposure signs from regressed continuation values.
pub fn price_reduced(
    deal: &DealSchedule,
    terms: &CsaTerms<'_>,
    market: &Market<'_>,
) -> Result<AdjustedPrice, PricingError> {
    Ok(to_price(&reduce(deal, terms, market)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::credit_funding::{CollateralPolicy, CreditSpec, FundingSpec};
    use crate::curves::{CurveSet, DiscountCurve, ForwardCurve};
    use crate::hjm::{simulate, SimulationGrid, VolatilitySpec};
    use crate::pricing::{CashFlow, clean_value_analytic};
    use approx::assert_abs_diff_eq;

    fn curves() -> CurveSet {
        CurveSet {
            discount: DiscountCurve::flat(0.02, 30.0),
            forwards: vec![ForwardCurve::flat(0.5, 0.025, 30.0).unwrap()],
        }
    }

    #[test]
    fn perfect_collateral_matches_closed_form() {
        let c = curves();
        let spec = VolatilitySpec::zero_volatility(1);
        let grid = SimulationGrid::regular(3.0, 0.5, 0.25, &[]).unwrap();
        let ens = simulate(&spec, &grid, 4, 7).unwrap();
        let m = Market { curves: &c, model: &spec, ensemble: &ens };
        let bond = DealSchedule::zero_coupon(3.0).unwrap();
        let p = price_perfect(&bond, &m).unwrap();
        assert_abs_diff_eq!(p.clean, (-0.06f64).exp(), epsilon = 1e-14);
        let par = DealSchedule::one_period_irs(2.0, 0.5, 0.025).unwrap();
        assert_abs_diff_eq!(price_perfect(&par, &m).unwrap().clean, 0.0, epsilon = 1e-15);
        let ois_par = c.discount.ois_par_rate(2.0, 0.5).unwrap();
        let ois = DealSchedule::new(vec![
            CashFlow::fixed(2.0, ois_par, 0.5, 1.0),
            CashFlow::overnight(2.0, 0.5, 1.0).paid(),
        ])
        .unwrap();
        assert_abs_diff_eq!(price_perfect(&ois, &m).unwrap().clean, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(clean_value_analytic(&ois, &c).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn grid_errors() {
        let c = curves();
        let spec = VolatilitySpec::zero_volatility(1);
        let grid = SimulationGrid::regular(3.0, 0.5, 0.25, &[]).unwrap();
        let ens = simulate(&spec, &grid, 2, 7).unwrap();
        let m = Market { curves: &c, model: &spec, ensemble: &ens };
        let off = DealSchedule::zero_coupon(1.3).unwrap();
        assert_eq!(price_perfect(&off, &m).unwrap_err(), PricingError::GridTooCoarse(1.3));
        let far = DealSchedule::zero_coupon(4.0).unwrap();
        assert_eq!(price_perfect(&far, &m).unwrap_err(), PricingError::ScheduleBeyondCurve(4.0));
    }

    #[test]
    fn uncollateralized_fixed_leg_closed_form() {
        let c = curves();
        let spec = VolatilitySpec::zero_volatility(1);
        let grid = SimulationGrid::regular(5.0, 0.25, 0.25, &[]).unwrap();
        let ens = simulate(&spec, &grid, 3, 1).unwrap();
        let m = Market { curves: &c, model: &spec, ensemble: &ens };
        let credit = CreditSpec::flat(0.02, 0.01, 0.6, 0.6).unwrap();
        let funding = FundingSpec::flat(0.0, 0.004, 0.0, 0.0);
        let policy = CollateralPolicy::none();
        let terms = CsaTerms { policy: &policy, funding: &funding, credit: &credit };
        let deal = DealSchedule::new(vec![CashFlow::fixed(5.0, 0.03, 1.0, 1.0)]).unwrap();
        let p = price_reduced(&deal, &terms, &m).unwrap();
        let expected = 0.03 * (-(0.02 + 0.004 + 0.02 * 0.6) * 5.0f64).exp();
        assert_abs_diff_eq!(p.adjusted, expected, epsilon = 1e-10);
        assert_abs_diff_eq!(p.decomposition.total(), p.adjusted - p.clean, epsilon = 1e-15);
        assert!(p.decomposition.cva < 0.0 && p.decomposition.funding_cost < 0.0);
        assert_eq!(p.decomposition.dva, 0.0);
    }

    #[test]
    fn perfect_policy_reduces_pathwise() {
        let c = curves();
        let spec = VolatilitySpec::one_factor(0.1, 0.01);
        let grid = SimulationGrid::regular(3.0, 0.25, 1.0 / 48.0, &[]).unwrap();
        let ens = simulate(&spec, &grid, 200, 9).unwrap();
        let m = Market { curves: &c, model: &spec, ensemble: &ens };
        let credit = CreditSpec::flat(0.02, 0.01, 0.6, 0.6).unwrap();
        let funding = FundingSpec::flat(0.001, 0.005, 0.0, 0.0);
        let policy = CollateralPolicy::perfect();
        let terms = CsaTerms { policy: &policy, funding: &funding, credit: &credit };
        let deal = DealSchedule::swap(3.0, 0.5, 0.024, Some(1.0), 1.0, true).unwrap();
        let ind = reduce(&deal, &terms, &m).unwrap();
        assert_eq!(ind.adjusted, ind.clean);
        let a = price_reduced(&deal, &terms, &m).unwrap();
        let b = price_perfect(&deal, &m).unwrap();
        assert_eq!(a, b);
    }
}
