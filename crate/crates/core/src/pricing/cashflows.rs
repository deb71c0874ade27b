use super::{CashFlow, DealSchedule, FlowKind, Market, PricingError};
use crate::curves::{CurveError, CurveSet};
use crate::hjm::{ForwardKernel, PathEnsemble, GRID_TOLERANCE};

/// Deflated coupons `D(0, T; e)·π_T` per path, stored at their payment
/// dates on the simulation grid.
#[derive(Debug, Clone)]
pub(crate) struct DeflatedFlows {
    pub by_index: Vec<Option<Vec<f64>>>,
    /// Grid index of the last payment (0 for an empty deal).
    pub last_index: usize,
}

fn curve_domain(t: f64) -> impl Fn(CurveError) -> PricingError {
    move |e| match e {
        CurveError::OutOfDomain(_) => PricingError::ScheduleBeyondCurve(t),
        other => PricingError::Curve(other),
    }
}

pub(crate) fn grid_index(ensemble: &PathEnsemble, t: f64) -> Result<usize, PricingError> {
    let times = ensemble.times();
    let horizon = times.last().copied().unwrap_or(0.0);
    if t > horizon + GRID_TOLERANCE {
        return Err(PricingError::ScheduleBeyondCurve(t));
    }
    ensemble
        .time_index(t.max(0.0))
        .ok_or(PricingError::GridTooCoarse(t))
}

pub(crate) fn deflate_flows(
    deal: &DealSchedule,
    market: &Market<'_>,
) -> Result<DeflatedFlows, PricingError> {
    let ens = market.ensemble;
    let disc = &market.curves.discount;
    let paths = ens.num_paths();
    let mut by_index: Vec<Option<Vec<f64>>> = vec![None; ens.times().len()];
    let mut last_index = 0;
    for flow in deal.flows() {
        let t = flow.pay_time;
        let ip = grid_index(ens, t)?;
        disc.discount_factor(t).map_err(curve_domain(t))?;
        let ir = flow.reset_time().map(|r| grid_index(ens, r)).transpose()?;
        let scale = flow.scale();
        let mut amounts = vec![0.0; paths];
        match flow.kind {
            FlowKind::Fixed { rate, accrual } => amounts.fill(rate * accrual),
            FlowKind::Libor { tenor } => {
                let ir = ir.expect("floating flow has a reset");
                let curve = market.curves.forward_curve(tenor)?;
                curve.forward(t).map_err(curve_domain(t))?;
                let kernel = ForwardKernel::new(ens.times()[ir], curve, market.model, t)?;
                for (p, a) in amounts.iter_mut().enumerate() {
                    let s = ens.state(p, ir);
                    *a = tenor * kernel.eval(s.x, s.y);
                }
            }
            FlowKind::Overnight { tenor } => {
                let ir = ir.expect("floating flow has a reset");
                let start = (t - tenor).max(0.0);
                let base = disc.log_discount(start).map_err(curve_domain(start))?
                    - disc.log_discount(t).map_err(curve_domain(t))?;
                for (p, a) in amounts.iter_mut().enumerate() {
                    let accrued = ens.state(p, ip).integral - ens.state(p, ir).integral;
                    *a = (base + accrued).exp_m1();
                }
            }
        }
        let slot = by_index[ip].get_or_insert_with(|| vec![0.0; paths]);
        for (p, (dc, a)) in slot.iter_mut().zip(&amounts).enumerate() {
            *dc += scale * ens.deflator(disc, p, ip)? * a;
        }
        last_index = last_index.max(ip);
    }
    Ok(DeflatedFlows {
        by_index,
        last_index,
    })
}

/// Perfect-collateral value of a deal from the initial curves alone.
pub fn clean_value_analytic(deal: &DealSchedule, curves: &CurveSet) -> Result<f64, PricingError> {
    let disc = &curves.discount;
    let mut total = 0.0;
    for flow in deal.flows() {
        let t = flow.pay_time;
        let p = disc.discount_factor(t).map_err(curve_domain(t))?;
        total += flow.scale() * p * flow_forward_amount(flow, curves)?;
    }
    Ok(total)
}

fn flow_forward_amount(flow: &CashFlow, curves: &CurveSet) -> Result<f64, PricingError> {
    let t = flow.pay_time;
    Ok(match flow.kind {
        FlowKind::Fixed { rate, accrual } => rate * accrual,
        FlowKind::Libor { tenor } => {
            tenor
                * curves
                    .forward_curve(tenor)?
                    .forward(t)
                    .map_err(curve_domain(t))?
        }
        FlowKind::Overnight { tenor } => {
            let start = (t - tenor).max(0.0);
            (curves.discount.log_discount(start).map_err(curve_domain(start))?
                - curves.discount.log_discount(t).map_err(curve_domain(t))?)
            .exp_m1()
        }
    })
}
