use super::{HjmError, VolatilitySpec};

/// Markov state `(X, Y, v)` of one path, plus the integrated short-rate
/// deviation `I_t = ∫_0^t Σ_i X_i(s) ds` used for deflation.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovState {
    pub t: f64,
    pub x: Vec<f64>,
    /// Row-major N×N.
    pub y: Vec<f64>,
    pub v: Vec<f64>,
    pub integral: f64,
}

/// Borrowed view of a state stored inside a [`super::PathEnsemble`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateView<'a> {
    pub t: f64,
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub v: &'a [f64],
    pub integral: f64,
}

impl StateView<'_> {
    pub fn num_factors(&self) -> usize {
        self.x.len()
    }

    pub fn y_at(&self, i: usize, k: usize) -> f64 {
        self.y[i * self.x.len() + k]
    }

    pub fn to_owned(&self) -> MarkovState {
        MarkovState {
            t: self.t,
            x: self.x.to_vec(),
            y: self.y.to_vec(),
            v: self.v.to_vec(),
            integral: self.integral,
        }
    }
}

/// Number of floats per stored state: X, Y, v and the integral.
pub(crate) fn state_stride(n: usize) -> usize {
    n + n * n + n + 1
}

pub(crate) fn view_from_slice(t: f64, n: usize, s: &[f64]) -> StateView<'_> {
    StateView {
        t,
        x: &s[..n],
        y: &s[n..n + n * n],
        v: &s[n + n * n..2 * n + n * n],
        integral: s[2 * n + n * n],
    }
}

pub(crate) fn write_initial(spec: &VolatilitySpec, s: &mut [f64]) {
    let n = spec.num_factors();
    s.fill(0.0);
    s[n + n * n..2 * n + n * n].copy_from_slice(spec.v_bar());
}

impl MarkovState {
    /// `X = 0`, `Y = 0`, `v = v̄` at `t = 0`.
    pub fn initial(spec: &VolatilitySpec) -> Self {
        let n = spec.num_factors();
        MarkovState {
            t: 0.0,
            x: vec![0.0; n],
            y: vec![0.0; n * n],
            v: spec.v_bar().to_vec(),
            integral: 0.0,
        }
    }

    pub fn view(&self) -> StateView<'_> {
        StateView {
            t: self.t,
            x: &self.x,
            y: &self.y,
            v: &self.v,
            integral: self.integral,
        }
    }

    fn to_flat(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(state_stride(self.x.len()));
        s.extend_from_slice(&self.x);
        s.extend_from_slice(&self.y);
        s.extend_from_slice(&self.v);
        s.push(self.integral);
        s
    }
}

/// Decay factors `g_i = exp(−∫_t^{t+dt} a_i)` for one step.
pub(crate) fn step_decay(spec: &VolatilitySpec, t: f64, dt: f64, out: &mut [f64]) {
    for (g, a) in out.iter_mut().zip(spec.mean_reversion()) {
        *g = (-a.integral(t, t + dt)).exp();
    }
}

/// `v_{t+dt}` given `v_t`: exact conditional mean
/// `θ + (v−θ)e^{−κdt}` plus a normal shock with the exact conditional
/// variance, floored at 0.
fn cir_step(v: f64, kappa: f64, theta: f64, nu: f64, dt: f64, z: f64) -> f64 {
    let (decay, var) = if kappa * dt > 1e-12 {
        let e = (-kappa * dt).exp();
        let one_minus = -(-kappa * dt).exp_m1();
        (e, nu * nu / kappa * (v * e * one_minus + 0.5 * theta * one_minus * one_minus))
    } else {
        (1.0, nu * nu * v * dt)
    };
    let mean = theta + (v - theta) * decay;
    (mean + var.sqrt() * z).max(0.0)
}

/// Advances a flat state by one step. `xi` holds 2N independent standard
/// normals (W block, then Z block); `work` needs 2N slots.
///
/// X and Y decay exactly over the step with the left-point drift and
/// diffusion; the variance takes a Gaussian step with the exact CIR
/// conditional mean and variance, truncated at zero.
pub(crate) fn advance(
    spec: &VolatilitySpec,
    s: &mut [f64],
    dt: f64,
    g: &[f64],
    xi: &[f64],
    work: &mut [f64],
) {
    let n = spec.num_factors();
    let dim = 2 * n;
    let chol = spec.joint_cholesky();
    for i in 0..dim {
        let row = &chol[i * dim..i * dim + i + 1];
        work[i] = row.iter().zip(xi).map(|(l, z)| l * z).sum();
    }
    let (w, z) = work.split_at(n);
    let sqrt_dt = dt.sqrt();
    let r = spec.loading();
    let rrt = spec.loading_gram();
    let (x, rest) = s.split_at_mut(n);
    let (y, rest) = rest.split_at_mut(n * n);
    let (v, integral) = rest.split_at_mut(n);

    let sum_before: f64 = x.iter().sum();
    for i in 0..n {
        let sv = v[i].sqrt();
        let drift: f64 = y[i * n..(i + 1) * n].iter().sum();
        let shock: f64 = r[i * n..(i + 1) * n].iter().zip(w).map(|(a, b)| a * b).sum();
        x[i] = g[i] * (x[i] + drift * dt + sv * shock * sqrt_dt);
    }
    for i in 0..n {
        for k in 0..n {
            let qv = (v[i] * v[k]).sqrt() * rrt[i * n + k];
            y[i * n + k] = g[i] * g[k] * (y[i * n + k] + qv * dt);
        }
    }
    let kappa = spec.kappa();
    let theta = spec.theta();
    let nu = spec.nu();
    for i in 0..n {
        v[i] = cir_step(v[i], kappa[i], theta[i], nu[i], dt, z[i]);
    }
    let sum_after: f64 = x.iter().sum();
    integral[0] += 0.5 * (sum_before + sum_after) * dt;
}

/// One simulation step from `state`. `dw` and `dz` are independent
/// standard normals; the (W, Z) correlation is applied here.
pub fn evolve_state(
    state: &MarkovState,
    dt: f64,
    dw: &[f64],
    dz: &[f64],
    spec: &VolatilitySpec,
) -> Result<MarkovState, HjmError> {
    if !(dt > 0.0) {
        return Err(HjmError::NonPositiveDt(dt));
    }
    let n = spec.num_factors();
    if dw.len() != n || dz.len() != n || state.x.len() != n {
        return Err(HjmError::DimensionMismatch {
            expected: n,
            found: dw.len().min(dz.len()).min(state.x.len()),
        });
    }
    let mut flat = state.to_flat();
    let mut g = vec![0.0; n];
    step_decay(spec, state.t, dt, &mut g);
    let xi: Vec<f64> = dw.iter().chain(dz).copied().collect();
    let mut work = vec![0.0; 2 * n];
    advance(spec, &mut flat, dt, &g, &xi, &mut work);
    Ok(view_from_slice(state.t + dt, n, &flat).to_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hjm::VolatilityParams;
    use crate::step::StepFunction;

    #[test]
    fn degenerate_cir_keeps_variance() {
        let spec = VolatilitySpec::new(VolatilityParams {
            kappa: vec![0.0],
            nu: vec![0.0],
            v_bar: vec![0.7],
            ..Default::default()
        })
        .unwrap();
        let mut s = MarkovState::initial(&spec);
        for k in 0..50 {
            let z = [(k as f64 * 0.37).sin() * 2.0];
            s = evolve_state(&s, 0.01, &z, &z, &spec).unwrap();
        }
        assert_eq!(s.v, vec![0.7]);
    }

    #[test]
    fn zero_volatility_stays_at_origin() {
        let spec = VolatilitySpec::zero_volatility(2);
        let mut s = MarkovState::initial(&spec);
        for _ in 0..20 {
            s = evolve_state(&s, 0.1, &[1.5, -0.3], &[0.2, 2.0], &spec).unwrap();
        }
        assert!(s.x.iter().chain(&s.y).all(|&v| v == 0.0));
        assert_eq!(s.integral, 0.0);
    }

    #[test]
    fn y_grows_linearly_without_mean_reversion() {
        let h = 0.012;
        let spec = VolatilitySpec::new(VolatilityParams {
            a: vec![StepFunction::constant(0.0)],
            r: vec![vec![h]],
            kappa: vec![0.0],
            ..Default::default()
        })
        .unwrap();
        let mut s = MarkovState::initial(&spec);
        for _ in 0..96 {
            s = evolve_state(&s, 1.0 / 96.0, &[0.4], &[0.0], &spec).unwrap();
        }
        assert!((s.y[0] - h * h).abs() < 1e-16);
        assert!((s.t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn y_stays_symmetric_and_nonnegative() {
        let spec = VolatilitySpec::new(VolatilityParams {
            a: vec![StepFunction::constant(0.3), StepFunction::constant(0.02)],
            r: vec![vec![0.01, -0.006], vec![0.0, 0.009]],
            kappa: vec![1.5, 0.8],
            theta: vec![1.0, 0.5],
            nu: vec![0.9, 0.6],
            v_bar: vec![1.0, 0.5],
            rho: vec![vec![-0.4, 0.1], vec![0.2, 0.3]],
            q: Vec::new(),
        })
        .unwrap();
        let mut s = MarkovState::initial(&spec);
        for k in 0..400 {
            let a = (k as f64 * 1.3).sin() * 2.5;
            let b = (k as f64 * 0.7).cos() * 2.5;
            s = evolve_state(&s, 0.01, &[a, -b], &[b, a], &spec).unwrap();
            assert_eq!(s.y[1], s.y[2]);
            assert!(s.y[0] >= 0.0 && s.y[3] >= 0.0);
            assert!(s.v.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn rejects_bad_step() {
        let spec = VolatilitySpec::one_factor(0.1, 0.01);
        let s = MarkovState::initial(&spec);
        assert_eq!(
            evolve_state(&s, 0.0, &[0.0], &[0.0], &spec).unwrap_err(),
            HjmError::NonPositiveDt(0.0)
        );
    }
}
