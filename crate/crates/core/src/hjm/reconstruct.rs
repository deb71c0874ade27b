use super::{HjmError, StateView, VolatilitySpec};
use crate::curves::{DiscountCurve, ForwardCurve};
use crate::step::merged_partition;

const TIME_TOLERANCE: f64 = 1e-12;

/// `g(t, u) = exp(−∫_t^u a(s) ds)` per factor.
pub fn g_factor(spec: &VolatilitySpec, t: f64, u: f64) -> Result<Vec<f64>, HjmError> {
    if t > u {
        return Err(HjmError::InvalidInterval { start: t, end: u });
    }
    Ok(spec
        .mean_reversion()
        .iter()
        .map(|a| (-a.integral(t, u)).exp())
        .collect())
}

/// `G0(t, T0, T1) = ∫_{T0}^{T1} g(t, v) dv` per factor, exact for
/// piecewise-constant `a`.
pub fn g0_integral(spec: &VolatilitySpec, t: f64, t0: f64, t1: f64) -> Result<Vec<f64>, HjmError> {
    if t > t0 + TIME_TOLERANCE || t0 > t1 {
        return Err(HjmError::InvalidInterval { start: t, end: t1.min(t0) });
    }
    Ok(spec
        .mean_reversion()
        .iter()
        .map(|a| {
            let mut acc = a.integral(t, t0);
            let mut total = 0.0;
            let cuts = merged_partition(t0, t1, &[a]);
            for w in cuts.windows(2) {
                let len = w[1] - w[0];
                let rate = a.value(w[0]);
                // ∫_0^len exp(−acc − rate s) ds
                let piece = if (rate * len).abs() < 1e-12 {
                    len * (1.0 - 0.5 * rate * len)
                } else {
                    -(-rate * len).exp_m1() / rate
                };
                total += (-acc).exp() * piece;
                acc += rate * len;
            }
            total
        })
        .collect())
}

/// `(G0, G)` over `[T0, T1]` for tenor `x`; `G = q_x ∘ G0` with per-tenor
/// constant `q`.
pub fn g_integrals(
    spec: &VolatilitySpec,
    t: f64,
    t0: f64,
    t1: f64,
    tenor: f64,
) -> Result<(Vec<f64>, Vec<f64>), HjmError> {
    let g0 = g0_integral(spec, t, t0, t1)?;
    let q = spec.q_loadings(tenor);
    let g = g0.iter().zip(&q).map(|(a, b)| a * b).collect();
    Ok((g0, g))
}

fn quadratic(y: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        for k in 0..n {
            s += a[i] * y[i * n + k] * b[k];
        }
    }
    s
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `P_t(T) = P_0(T)/P_0(t) · exp{−G0·X − ½ G0ᵀ Y G0}` with `G0 = G0(t, t, T)`.
pub fn reconstruct_bond(
    state: &StateView<'_>,
    curve0: &DiscountCurve,
    spec: &VolatilitySpec,
    maturity: f64,
) -> Result<f64, HjmError> {
    if state.t > maturity + TIME_TOLERANCE {
        return Err(HjmError::StaleState {
            t: state.t,
            limit: maturity,
        });
    }
    let g0 = g0_integral(spec, state.t, state.t, maturity.max(state.t))?;
    let ratio = curve0.discount_factor(maturity)? / curve0.discount_factor(state.t)?;
    Ok(ratio * (-dot(&g0, state.x) - 0.5 * quadratic(state.y, &g0, &g0)).exp())
}

/// Path-independent part of the forward reconstruction for one state time,
/// maturity and tenor.
#[derive(Debug, Clone)]
pub(crate) struct ForwardKernel {
    g: Vec<f64>,
    to_maturity: Vec<f64>,
    f0: f64,
    shift: f64,
}

impl ForwardKernel {
    pub(crate) fn new(
        t: f64,
        curve0: &ForwardCurve,
        spec: &VolatilitySpec,
        maturity: f64,
    ) -> Result<Self, HjmError> {
        let tenor = curve0.tenor();
        let reset = maturity - tenor;
        if t > reset + TIME_TOLERANCE {
            return Err(HjmError::StaleState { t, limit: reset });
        }
        let (_, g) = g_integrals(spec, t, reset.max(t), maturity, tenor)?;
        Ok(ForwardKernel {
            g,
            to_maturity: g0_integral(spec, t, t, maturity)?,
            f0: curve0.forward(maturity)?,
            shift: curve0.shift(),
        })
    }

    pub(crate) fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.g.len();
        let mut exponent = dot(&self.g, x);
        for i in 0..n {
            for j in 0..n {
                exponent += self.g[i] * y[i * n + j] * (self.to_maturity[j] - 0.5 * self.g[j]);
            }
        }
        (self.shift + self.f0) * exponent.exp_m1() + self.f0
    }
}

/// `F_t(T, x) = (k + F_0)·exp{G·(X + Y(G0(t,t,T) − ½G))} − k`, with the
/// tenor taken from `curve0`.
pub fn reconstruct_forward(
    state: &StateView<'_>,
    curve0: &ForwardCurve,
    spec: &VolatilitySpec,
    maturity: f64,
) -> Result<f64, HjmError> {
    Ok(ForwardKernel::new(state.t, curve0, spec, maturity)?.eval(state.x, state.y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hjm::{MarkovState, VolatilityParams};
    use crate::step::StepFunction;
    use approx::assert_abs_diff_eq;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn g_factor_values() {
        let spec = VolatilitySpec::one_factor(0.1, 0.01);
        assert_eq!(g_factor(&spec, 1.3, 1.3).unwrap(), vec![1.0]);
        assert_abs_diff_eq!(g_factor(&spec, 0.0, 2.0).unwrap()[0], (-0.2f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(g_factor(&spec, 0.0, 2.0).unwrap()[0], 0.818731, epsilon = 1e-6);
        assert!(matches!(
            g_factor(&spec, 1.0, 0.0),
            Err(HjmError::InvalidInterval { .. })
        ));
    }

    #[test]
    fn g_integral_closed_forms() {
        let flat = VolatilitySpec::one_factor(0.0, 0.01);
        assert_eq!(g0_integral(&flat, 0.0, 0.0, 2.0).unwrap(), vec![2.0]);
        let spec = VolatilitySpec::one_factor(0.1, 0.01);
        assert_eq!(g0_integral(&spec, 0.0, 1.5, 1.5).unwrap(), vec![0.0]);
        let v = g0_integral(&spec, 0.0, 1.0, 2.0).unwrap()[0];
        assert_abs_diff_eq!(v, ((-0.1f64).exp() - (-0.2f64).exp()) / 0.1, epsilon = 1e-14);
        assert_abs_diff_eq!(v, 0.861067, epsilon = 1e-6);
    }

    #[test]
    fn g_integrals_match_quadrature_for_step_reversion() {
        let a = StepFunction::new(vec![0.0, 0.7, 2.2], vec![0.3, 0.05, -0.02]).unwrap();
        let spec = VolatilitySpec::new(VolatilityParams {
            a: vec![a.clone(), StepFunction::constant(0.15)],
            r: vec![vec![0.01, 0.0], vec![0.0, 0.01]],
            rho: vec![vec![0.0; 2]; 2],
            q: vec![(0.5, vec![1.1, 0.9])],
            ..Default::default()
        })
        .unwrap();
        let (t, t0, t1) = (0.4, 1.5, 3.1);
        let (g0, g) = g_integrals(&spec, t, t0, t1, 0.5).unwrap();
        for (i, ai) in [a, StepFunction::constant(0.15)].iter().enumerate() {
            let f = |v: f64| (-ai.integral(t, v)).exp();
            // split at breakpoints so Simpson sees smooth pieces
            let mut cuts = vec![t0];
            cuts.extend(ai.breakpoints_in(t0, t1));
            cuts.push(t1);
            let quad: f64 = cuts.windows(2).map(|w| simpson(f, w[0], w[1], 2000)).sum();
            assert_abs_diff_eq!(g0[i], quad, epsilon = 1e-10);
            let g_direct = g_factor(&spec, t, 2.0).unwrap()[i];
            assert_abs_diff_eq!(g_direct, f(2.0), epsilon = 1e-15);
        }
        assert_abs_diff_eq!(g[0], 1.1 * g0[0], epsilon = 1e-16);
        assert_abs_diff_eq!(g[1], 0.9 * g0[1], epsilon = 1e-16);
    }

    #[test]
    fn initial_state_reproduces_curves() {
        let spec = VolatilitySpec::one_factor(0.1, 0.01);
        let disc = DiscountCurve::flat(0.02, 10.0);
        let fwd = ForwardCurve::flat(0.5, 0.025, 10.0).unwrap();
        let s = MarkovState::initial(&spec);
        assert_eq!(reconstruct_forward(&s.view(), &fwd, &spec, 3.0).unwrap(), 0.025);
        assert_abs_diff_eq!(
            reconstruct_bond(&s.view(), &disc, &spec, 3.0).unwrap(),
            (-0.06f64).exp(),
            epsilon = 1e-15
        );
        let mut later = s.clone();
        later.t = 2.0;
        assert_eq!(reconstruct_bond(&later.view(), &disc, &spec, 2.0).unwrap(), 1.0);
        assert!(matches!(
            reconstruct_forward(&later.view(), &fwd, &spec, 2.4),
            Err(HjmError::StaleState { .. })
        ));
    }

    #[test]
    fn default_shift_forward_is_bond_ratio() {
        // with q = 1 and k = 1/x, 1 + xF_t = P_t(T−x)/P_t(T)
        let spec = VolatilitySpec::one_factor(0.08, 0.012);
        let disc = DiscountCurve::flat(0.02, 10.0);
        let x = 0.5;
        let f0 = disc.ois_par_rate(4.0, x).unwrap();
        let fwd = ForwardCurve::flat(x, f0, 10.0).unwrap();
        let state = MarkovState {
            t: 1.25,
            x: vec![0.004],
            y: vec![1.1e-4],
            v: vec![1.0],
            integral: 0.0,
        };
        let f = reconstruct_forward(&state.view(), &fwd, &spec, 4.0).unwrap();
        let p1 = reconstruct_bond(&state.view(), &disc, &spec, 3.5).unwrap();
        let p2 = reconstruct_bond(&state.view(), &disc, &spec, 4.0).unwrap();
        assert_abs_diff_eq!(1.0 + x * f, p1 / p2, epsilon = 1e-14);
    }
}
