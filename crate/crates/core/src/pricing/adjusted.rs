use std::ops::Range;

use super::cashflows::grid_index;
use super::reduced::reduce;
use super::{AdjustedPrice, CsaTerms, DealSchedule, Decomposition, Market, PricingError};
use crate::curves::CurveError;
use crate::hjm::ForwardKernel;

const BATCHES: usize = 20;

/// Pathwise `∫_0^T q̃` and its split by source.
#[derive(Debug, Clone, PartialEq)]
pub struct DividendIntegrals {
    pub total: Vec<f64>,
    pub parts: Vec<Decomposition>,
}

impl DividendIntegrals {
    /// Integrals with no attribution (all booked as funding).
    pub fn unattributed(total: Vec<f64>) -> Self {
        let parts = total
            .iter()
            .map(|&q| Decomposition {
                funding_cost: q,
                ..Default::default()
            })
            .collect();
        DividendIntegrals { total, parts }
    }
}

/// Source of the effective dividend rate `q̃` of a contract paying at `T`.
pub trait DividendRate {
    fn integrals(&self, market: &Market<'_>, maturity: f64) -> Result<DividendIntegrals, PricingError>;
}

impl<F> DividendRate for F
where
    F: Fn(&Market<'_>, f64) -> Result<DividendIntegrals, PricingError>,
{
    fn integrals(&self, market: &Market<'_>, maturity: f64) -> Result<DividendIntegrals, PricingError> {
        self(market, maturity)
    }
}

/// `q̃` implied by a collateral/funding/credit agreement on a given
/// contract, signs from backward induction.
#[derive(Debug, Clone)]
pub struct PolicyDividend<'a> {
    pub terms: CsaTerms<'a>,
    pub contract: DealSchedule,
}

impl DividendRate for PolicyDividend<'_> {
    fn integrals(&self, market: &Market<'_>, maturity: f64) -> Result<DividendIntegrals, PricingError> {
        if (self.contract.maturity() - maturity).abs() > 1e-9 {
            return Err(PricingError::InvalidDeal(format!(
                "contract matures at {}, not {maturity}",
                self.contract.maturity()
            )));
        }
        let ind = reduce(&self.contract, &self.terms, market)?;
        Ok(DividendIntegrals {
            total: ind.q_total,
            parts: ind.q_parts,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityEstimate {
    pub gamma: f64,
    /// Batch-means standard error of `gamma`.
    pub std_error: f64,
    pub forward: f64,
    /// `F̄ = F(1 + γ)`.
    pub adjusted_forward: f64,
}

/// Self-normalized weighted moments: `(E[f], E[d], Cov[f, d])`.
fn moments(r: Range<usize>, w: &[f64], f: &[f64], d: &[f64]) -> (f64, f64, f64) {
    // shift by the first sample so constant inputs give an exact zero
    let (f0, d0) = (f[r.start], d[r.start]);
    let (mut sw, mut sf, mut sd, mut sfd) = (0.0, 0.0, 0.0, 0.0);
    for p in r {
        let (a, b) = (f[p] - f0, d[p] - d0);
        sw += w[p];
        sf += w[p] * a;
        sd += w[p] * b;
        sfd += w[p] * a * b;
    }
    let (ef, ed) = (sf / sw, sd / sw);
    (f0 + ef, d0 + ed, sfd / sw - ef * ed)
}

/// Batch-means standard error of a statistic over contiguous path blocks.
fn batch_se(paths: usize, stat: impl Fn(Range<usize>) -> f64) -> f64 {
    let b = BATCHES.min(paths / 2);
    if b < 2 {
        return 0.0;
    }
    let size = paths / b;
    let vals: Vec<f64> = (0..b)
        .map(|k| stat(k * size..if k + 1 == b { paths } else { (k + 1) * size }))
        .collect();
    let mean = vals.iter().sum::<f64>() / b as f64;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (b - 1) as f64;
    (var / b as f64).sqrt()
}

struct ForwardSample {
    f0: f64,
    p0: f64,
    /// T-forward measure weights `exp(−I_T)`.
    weights: Vec<f64>,
    fixings: Vec<f64>,
}

fn sample_forward(market: &Market<'_>, maturity: f64, tenor: f64) -> Result<ForwardSample, PricingError> {
    let ens = market.ensemble;
    let ip = grid_index(ens, maturity)?;
    let ir = grid_index(ens, maturity - tenor)?;
    let beyond = |e: CurveError| match e {
        CurveError::OutOfDomain(_) => PricingError::ScheduleBeyondCurve(maturity),
        other => PricingError::Curve(other),
    };
    let curve = market.curves.forward_curve(tenor)?;
    let f0 = curve.forward(maturity).map_err(beyond)?;
    let p0 = market.curves.discount.discount_factor(maturity).map_err(beyond)?;
    let kernel = ForwardKernel::new(ens.times()[ir], curve, market.model, maturity)?;
    let paths = ens.num_paths();
    let mut weights = Vec::with_capacity(paths);
    let mut fixings = Vec::with_capacity(paths);
    for p in 0..paths {
        weights.push((-ens.state(p, ip).integral).exp());
        let s = ens.state(p, ir);
        fixings.push(kernel.eval(s.x, s.y));
    }
    Ok(ForwardSample {
        f0,
        p0,
        weights,
        fixings,
    })
}

fn discounts(q: &DividendIntegrals) -> Vec<f64> {
    q.total.iter().map(|t| (-t).exp()).collect()
}

/// `γ = Cov^T[F_{T−x}(T,x), D(0,T;q̃)] / (F_0(T,x) E^T[D(0,T;q̃)])`.
pub fn convexity_adjustment(
    maturity: f64,
    tenor: f64,
    dividend: &dyn DividendRate,
    market: &Market<'_>,
) -> Result<ConvexityEstimate, PricingError> {
    let s = sample_forward(market, maturity, tenor)?;
    if s.f0 == 0.0 {
        return Err(PricingError::ZeroForward);
    }
    let d = discounts(&dividend.integrals(market, maturity)?);
    let n = d.len();
    let gamma_of = |r: Range<usize>| {
        let (_, ed, cov) = moments(r, &s.weights, &s.fixings, &d);
        cov / (s.f0 * ed)
    };
    let gamma = gamma_of(0..n);
    Ok(ConvexityEstimate {
        gamma,
        std_error: batch_se(n, gamma_of),
        forward: s.f0,
        adjusted_forward: s.f0 * (1.0 + gamma),
    })
}

/// `P̄ = P_0(T) E^T[D(0,T;q̃)]`.
pub fn adjusted_bond(
    maturity: f64,
    dividend: &dyn DividendRate,
    market: &Market<'_>,
) -> Result<f64, PricingError> {
    let ens = market.ensemble;
    let ip = grid_index(ens, maturity)?;
    let p0 = market
        .curves
        .discount
        .discount_factor(maturity)
        .map_err(|_| PricingError::ScheduleBeyondCurve(maturity))?;
    let d = discounts(&dividend.integrals(market, maturity)?);
    let w: Vec<f64> = (0..ens.num_paths())
        .map(|p| (-ens.state(p, ip).integral).exp())
        .collect();
    let (_, ed, _) = moments(0..d.len(), &w, &d, &d);
    Ok(p0 * ed)
}

/// Adjusted quantities of a one-period IRS.
#[derive(Debug, Clone, PartialEq)]
pub struct OnePeriodAdjustment {
    pub convexity: ConvexityEstimate,
    pub bond: f64,
    pub adjusted_bond: f64,
    /// `V̄ = x(K − F̄)P̄` with the clean value `x(K − F)P`.
    pub price: AdjustedPrice,
}

/// One-period IRS receiving `x(K − F_{T−x}(T,x))` at `T` under a
/// collateral agreement: adjusted forward, adjusted bond and value.
pub fn adjusted_one_period(
    strike: f64,
    maturity: f64,
    tenor: f64,
    terms: &CsaTerms<'_>,
    market: &Market<'_>,
) -> Result<OnePeriodAdjustment, PricingError> {
    let dividend = PolicyDividend {
        terms: *terms,
        contract: DealSchedule::one_period_irs(maturity, tenor, strike)?,
    };
    one_period_with(strike, maturity, tenor, &dividend, market)
}

pub(crate) fn one_period_with(
    strike: f64,
    maturity: f64,
    tenor: f64,
    dividend: &dyn DividendRate,
    market: &Market<'_>,
) -> Result<OnePeriodAdjustment, PricingError> {
    let s = sample_forward(market, maturity, tenor)?;
    if s.f0 == 0.0 {
        return Err(PricingError::ZeroForward);
    }
    let q = dividend.integrals(market, maturity)?;
    let d = discounts(&q);
    let n = d.len();
    let (_, ed, cov) = moments(0..n, &s.weights, &s.fixings, &d);
    let gamma = cov / (s.f0 * ed);
    let adjusted_forward = s.f0 * (1.0 + gamma);
    let adjusted_bond = s.p0 * ed;
    let value_of = |r: Range<usize>| {
        let (_, ed, cov) = moments(r, &s.weights, &s.fixings, &d);
        tenor * (strike - s.f0 * (1.0 + cov / (s.f0 * ed))) * s.p0 * ed
    };
    // bucket b gets x P (K − F)E[(D−1)^b] − x P Cov[F, (D−1)^b]; the
    // buckets add up to V̄ − clean because D − 1 = Σ_b (D−1)^b
    let mut decomposition = Decomposition::default();
    let shares: [fn(&Decomposition) -> f64; 4] = [|p| p.cva, |p| p.dva, |p| p.funding_cost, |p| p.collateral_cost];
    let mut buckets = [0.0; 4];
    for (k, share) in shares.iter().enumerate() {
        let part: Vec<f64> = q
            .total
            .iter()
            .zip(&q.parts)
            .map(|(&t, p)| {
                let r = if t.abs() > 1e-12 { (-t).exp_m1() / t } else { -1.0 + 0.5 * t };
                r * share(p)
            })
            .collect();
        let (_, ep, cov_p) = moments(0..n, &s.weights, &s.fixings, &part);
        buckets[k] = tenor * s.p0 * ((strike - s.f0) * ep - cov_p);
    }
    decomposition.cva = buckets[0];
    decomposition.dva = buckets[1];
    decomposition.funding_cost = buckets[2];
    decomposition.collateral_cost = buckets[3];
    Ok(OnePeriodAdjustment {
        convexity: ConvexityEstimate {
            gamma,
            std_error: batch_se(n, |r| {
                let (_, ed, cov) = moments(r, &s.weights, &s.fixings, &d);
                cov / (s.f0 * ed)
            }),
            forward: s.f0,
            adjusted_forward,
        },
        bond: s.p0,
        adjusted_bond,
        price: AdjustedPrice {
            clean: tenor * (strike - s.f0) * s.p0,
            adjusted: tenor * (strike - adjusted_forward) * adjusted_bond,
            decomposition,
            std_error: batch_se(n, value_of),
        },
    })
}

/// `V̄ = x(K − F̄)P̄` for a one-period IRS.
pub fn price_irs_partial(
    strike: f64,
    maturity: f64,
    tenor: f64,
    terms: &CsaTerms<'_>,
    market: &Market<'_>,
) -> Result<AdjustedPrice, PricingError> {
    Ok(adjusted_one_period(strike, maturity, tenor, terms, market)?.price)
}
