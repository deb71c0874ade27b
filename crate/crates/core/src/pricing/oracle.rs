//! Brute-force solution of the recursive pricing equation, used to check
//! the reduced-rate pricer.
//!
//! On each simulation interval the pre-default value obeys, with the
//! exposure sign frozen at the left end,
//!
//! `Ṽ_t = E_t[W] e^{−∫_t^{t₁} κ} + ∫_t^{t₁} (λ^{C<I} θ^C + λ^{I<C} θ^I + (f̃ − c̃) C)~ e^{−∫_t^u κ} du`
//!
//! with `κ = f̃ − e + λ`, close-out `ε = V̄` and collateral `C = αV̄`. The
//! integrand is positively homogeneous in `V̄`, so `Ṽ_t = Φ(t) E_t[W]` where
//! `Φ` solves a scalar Volterra equation. `Φ` is found by damped Picard
//! iteration on piecewise Chebyshev–Lobatto nodes; conditional expectations
//! come from least-squares regression.

use std::collections::HashMap;
use std::f64::consts::PI;

use super::cashflows::deflate_flows;
use super::rates::{borrows, on_default_cashflow, DefaultOrder, Sign};
use super::reduced::{alpha_for, undeflate};
use super::regression::{regress, RegressionBasis};
use super::{CsaTerms, DealSchedule, Market, PricingError};
use crate::credit_funding::FundingDirection;
use crate::step::{merged_partition, StepFunction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    pub max_intervals: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub damping: f64,
    /// Interpolation nodes per smooth piece.
    pub nodes: usize,
    /// Gauss–Legendre points per quadrature panel.
    pub quadrature: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings {
            max_intervals: 50,
            tolerance: 1e-10,
            max_iterations: 200,
            damping: 0.5,
            nodes: 12,
            quadrature: 16,
        }
    }
}

fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (mut q0, mut q1) = (1.0, z);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * z * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let d = n as f64 * (z * q1 - q0) / (z * z - 1.0);
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * d * d);
                break;
            }
        }
    }
    (x, w)
}

/// One smooth piece: constant coefficients, polynomial `Φ`.
struct Piece {
    a: f64,
    b: f64,
    kappa: f64,
    c: f64,
    nodes: Vec<f64>,
}

struct Volterra {
    pieces: Vec<Piece>,
    bary: Vec<f64>,
    gl: (Vec<f64>, Vec<f64>),
}

impl Volterra {
    fn interpolate(&self, j: usize, values: &[f64], u: f64) -> f64 {
        let nodes = &self.pieces[j].nodes;
        let mut num = 0.0;
        let mut den = 0.0;
        for (k, (&x, &f)) in nodes.iter().zip(values).enumerate() {
            let d = u - x;
            if d == 0.0 {
                return f;
            }
            let t = self.bary[k] / d;
            num += t * f;
            den += t;
        }
        num / den
    }

    /// `∫_s^{b_j} c_j φ_j(u) e^{−κ_j (u − s)} du`.
    fn panel(&self, j: usize, values: &[f64], s: f64) -> f64 {
        let p = &self.pieces[j];
        let half = 0.5 * (p.b - s);
        if half <= 0.0 || p.c == 0.0 {
            return 0.0;
        }
        let mid = 0.5 * (p.b + s);
        let (x, w) = &self.gl;
        let sum: f64 = x
            .iter()
            .zip(w)
            .map(|(&xi, &wi)| {
                let u = mid + half * xi;
                wi * self.interpolate(j, values, u) * (-p.kappa * (u - s)).exp()
            })
            .sum();
        p.c * half * sum
    }

    fn apply(&self, phi: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let np = self.pieces.len();
        // tail[j] = ∫_{a_j}^{t₁} c φ e^{−∫_{a_j}^u κ}; decay[j] = e^{−∫_{a_j}^{t₁} κ}
        let mut tail = vec![0.0; np + 1];
        let mut decay = vec![1.0; np + 1];
        for j in (0..np).rev() {
            let p = &self.pieces[j];
            let e = (-p.kappa * (p.b - p.a)).exp();
            tail[j] = self.panel(j, &phi[j], p.a) + e * tail[j + 1];
            decay[j] = e * decay[j + 1];
        }
        self.pieces
            .iter()
            .enumerate()
            .map(|(j, p)| {
                p.nodes
                    .iter()
                    .map(|&t| {
                        let e = (-p.kappa * (p.b - t)).exp();
                        e * decay[j + 1] + self.panel(j, &phi[j], t) + e * tail[j + 1]
                    })
                    .collect()
            })
            .collect()
    }
}

/// Rates `(κ, c)` per unit exposure of sign `s` at time `u`.
fn coefficients(
    u: f64,
    s: Sign,
    alpha: &StepFunction,
    borrow: &StepFunction,
    invest: &StepFunction,
    terms: &CsaTerms<'_>,
) -> (f64, f64) {
    let a = alpha.value(u);
    let credit = terms.credit.at(u);
    let f_spread = if borrows(a, s) {
        borrow.value(u)
    } else {
        invest.value(u)
    };
    let kappa = f_spread + credit.total();
    let funding_gap = f_spread - terms.policy.c_spread;
    let c = match s {
        Sign::Zero => credit.total() + a * funding_gap,
        _ => {
            let v = s.as_f64();
            let collateral = a * v;
            let close_c = on_default_cashflow(v, collateral, DefaultOrder::CounterpartyFirst, &credit);
            let close_i = on_default_cashflow(v, collateral, DefaultOrder::InvestorFirst, &credit);
            (credit.lambda_ci * close_c + credit.lambda_ic * close_i + funding_gap * collateral) / v
        }
    };
    (kappa, c)
}

fn solve_multiplier(
    t0: f64,
    t1: f64,
    s: Sign,
    alpha: &StepFunction,
    terms: &CsaTerms<'_>,
    settings: &OracleSettings,
) -> Result<f64, PricingError> {
    let borrow = terms.funding.spread(terms.credit, FundingDirection::Borrow);
    let invest = terms.funding.spread(terms.credit, FundingDirection::Invest);
    let mut cuts = merged_partition(t0, t1, &[alpha, &borrow, &invest]);
    cuts.extend(terms.credit.breakpoints_in(t0, t1));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let m = settings.nodes.max(2);
    let pieces = cuts
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let (kappa, c) = coefficients(0.5 * (a + b), s, alpha, &borrow, &invest, terms);
            let nodes = (0..m)
                .map(|k| {
                    let x = -(PI * k as f64 / (m - 1) as f64).cos();
                    0.5 * (a + b) + 0.5 * (b - a) * x
                })
                .collect();
            Piece { a, b, kappa, c, nodes }
        })
        .collect();
    let bary = (0..m)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            if k == 0 || k == m - 1 {
                0.5 * sign
            } else {
                sign
            }
        })
        .collect();
    let eq = Volterra {
        pieces,
        bary,
        gl: gauss_legendre(settings.quadrature.max(2)),
    };
    let mut phi: Vec<Vec<f64>> = eq.pieces.iter().map(|_| vec![1.0; m]).collect();
    for _ in 0..settings.max_iterations {
        let image = eq.apply(&phi);
        let mut change: f64 = 0.0;
        for (row, new) in phi.iter_mut().zip(&image) {
            for (v, n) in row.iter_mut().zip(new) {
                let next = (1.0 - settings.damping) * n + settings.damping * *v;
                change = change.max((next - *v).abs());
                *v = next;
            }
        }
        if change < settings.tolerance {
            return Ok(phi[0][0]);
        }
    }
    Err(PricingError::NoConvergence(settings.max_iterations))
}

/// Value of the deal from the recursive pricing equation with explicit
/// close-out and collateral terms, by backward regression.
pub fn price_master_oracle(
    deal: &DealSchedule,
    terms: &CsaTerms<'_>,
    market: &Market<'_>,
    settings: &OracleSettings,
) -> Result<f64, PricingError> {
    let flows = deflate_flows(deal, market)?;
    if flows.last_index > settings.max_intervals {
        return Err(PricingError::OracleGridTooLarge(flows.last_index, settings.max_intervals));
    }
    let alpha = alpha_for(&flows, terms, market)?;
    let ens = market.ensemble;
    let times = ens.times();
    let paths = ens.num_paths();
    let mut cache: HashMap<(usize, Sign), f64> = HashMap::new();
    let mut value = vec![0.0; paths];
    for i in (0..flows.last_index).rev() {
        if let Some(dc) = &flows.by_index[i + 1] {
            for (v, d) in value.iter_mut().zip(dc) {
                *v += d;
            }
        }
        let fitted = regress(ens, i, &undeflate(market, i, &value)?, RegressionBasis::Quadratic);
        for (p, m) in fitted.into_iter().enumerate() {
            let s = Sign::of(m);
            let phi = match cache.get(&(i, s)) {
                Some(&phi) => phi,
                None => {
                    let phi = solve_multiplier(times[i], times[i + 1], s, &alpha, terms, settings)?;
                    cache.insert((i, s), phi);
                    phi
                }
            };
            value[p] = phi * m * ens.deflator(&market.curves.discount, p, i)?;
        }
    }
    Ok(value.iter().sum::<f64>() / paths as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::credit_funding::{CollateralPolicy, CreditSpec, FundingSpec};
    use crate::curves::{CurveSet, DiscountCurve, ForwardCurve};
    use crate::hjm::{simulate, SimulationGrid, VolatilitySpec};
    use crate::pricing::CashFlow;
    use approx::assert_abs_diff_eq;

    fn setup(horizon: f64, obs: f64) -> (CurveSet, VolatilitySpec, crate::hjm::PathEnsemble) {
        let curves = CurveSet {
            discount: DiscountCurve::flat(0.02, 30.0),
            forwards: vec![ForwardCurve::flat(0.5, 0.025, 30.0).unwrap()],
        };
        let spec = VolatilitySpec::zero_volatility(1);
        let grid = SimulationGrid::regular(horizon, obs, obs, &[]).unwrap();
        let ens = simulate(&spec, &grid, 2, 3).unwrap();
        (curves, spec, ens)
    }

    #[test]
    fn quadrature_rule() {
        let (x, w) = gauss_legendre(16);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        let int: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert_abs_diff_eq!(int, 2.0 / 31.0, epsilon = 1e-14);
    }

    #[test]
    fn empty_deal_is_worth_nothing() {
        let (c, spec, ens) = setup(1.0, 0.5);
        let m = Market { curves: &c, model: &spec, ensemble: &ens };
        let credit = CreditSpec::flat(0.02, 0.01, 0.6, 0.6).unwrap();
        let funding = FundingSpec::flat(0.0, 0.01, 0.0, 0.0);
        let policy = CollateralPolicy::none();
        let terms = CsaTerms { policy: &policy, funding: &funding, credit: &credit };
        let deal = DealSchedule::new(vec![]).unwrap();
        assert_eq!(price_master_oracle(&deal, &terms, &m, &OracleSettings::default()).unwrap(), 0.0);
    }

    #[test]
    fn perfect_collateral_is_ois_discounting() {
        let (c, spec, ens) = setup(2.0, 0.5);
        let m = Market { curves: &c, model: &spec, ensemble: &ens };
        let credit = CreditSpec::flat(0.05, 0.03, 0.6, 0.6).unwrap();
        let funding = FundingSpec::flat(0.002, 0.01, 0.0, 0.0);
        let policy = CollateralPolicy::perfect();
        let terms = CsaTerms { policy: &policy, funding: &funding, credit: &credit };
        let deal = DealSchedule::new(vec![CashFlow::fixed(2.0, 0.04, 1.0, 1.0)]).unwrap();
        let v = price_master_oracle(&deal, &terms, &m, &OracleSettings::default()).unwrap();
        assert_abs_diff_eq!(v, 0.04 * (-0.04f64).exp(), epsilon = 1e-10);
    }

    #[test]
    fn half_collateral_single_coupon() {
        let (c, spec, ens) = setup(3.0, 0.25);
        let m = Market { curves: &c, model: &spec, ensemble: &ens };
        let credit = CreditSpec::flat(0.02, 0.01, 0.6, 0.4).unwrap();
        let funding = FundingSpec::flat(0.001, 0.006, 0.0, 0.0);
        let policy = CollateralPolicy::fraction(0.5).unwrap().with_c_spread(0.0005);
        let terms = CsaTerms { policy: &policy, funding: &funding, credit: &credit };
        let deal = DealSchedule::new(vec![CashFlow::fixed(3.0, 1.0, 1.0, 1.0)]).unwrap();
        let v = price_master_oracle(&deal, &terms, &m, &OracleSettings::default()).unwrap();
        // f̃ − e = 0.006 (borrowing), ζ = 0.5·0.012 − 0.5·(0.006 − 0.0005)
        let rate = 0.02 + 0.006 + 0.5 * 0.012 - 0.5 * (0.006 - 0.0005);
        assert_abs_diff_eq!(v, (-rate * 3.0f64).exp(), epsilon = 1e-8);
    }

    #[test]
    fn refuses_large_grids() {
        let (c, spec, ens) = setup(20.0, 0.25);
        let m = Market { curves: &c, model: &spec, ensemble: &ens };
        let credit = CreditSpec::riskless();
        let funding = FundingSpec::default();
        let policy = CollateralPolicy::none();
        let terms = CsaTerms { policy: &policy, funding: &funding, credit: &credit };
        let deal = DealSchedule::zero_coupon(20.0).unwrap();
        assert_eq!(
            price_master_oracle(&deal, &terms, &m, &OracleSettings::default()).unwrap_err(),
            PricingError::OracleGridTooLarge(80, 50)
        );
        let strict = OracleSettings { max_iterations: 1, ..Default::default() };
        let short = DealSchedule::zero_coupon(1.0).unwrap();
        let funding = FundingSpec::flat(0.01, 0.01, 0.0, 0.0);
        let credit = CreditSpec::flat(0.02, 0.0, 0.6, 0.6).unwrap();
        let terms = CsaTerms { policy: &policy, funding: &funding, credit: &credit };
        assert_eq!(
            price_master_oracle(&short, &terms, &m, &strict).unwrap_err(),
            PricingError::NoConvergence(1)
        );
    }
}
