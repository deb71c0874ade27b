use super::HjmError;
use crate::market_data::TENOR_TOLERANCE;
use crate::step::StepFunction;

/// Raw model parameters. Per-factor vectors of length 1 are broadcast to
/// the factor count, which is taken from `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolatilityParams {
    /// Mean-reversion speed per factor.
    pub a: Vec<StepFunction>,
    /// Upper-triangular loading matrix `R`, `h_t = diag(sqrt(v_t)) R`.
    pub r: Vec<Vec<f64>>,
    pub kappa: Vec<f64>,
    pub theta: Vec<f64>,
    pub nu: Vec<f64>,
    pub v_bar: Vec<f64>,
    /// `rho[i][j] = corr(Z_i, W_j)`.
    pub rho: Vec<Vec<f64>>,
    /// Per-tenor constant `q` loadings; tenors not listed use 1.
    pub q: Vec<(f64, Vec<f64>)>,
}

impl Default for VolatilityParams {
    fn default() -> Self {
        VolatilityParams {
            a: vec![StepFunction::constant(0.05)],
            r: vec![vec![0.01]],
            kappa: vec![1.0],
            theta: vec![1.0],
            nu: vec![0.0],
            v_bar: vec![1.0],
            rho: vec![vec![0.0]],
            q: Vec::new(),
        }
    }
}

/// Validated separable volatility structure with stochastic variances.
#[derive(Debug, Clone, PartialEq)]
pub struct VolatilitySpec {
    n: usize,
    a: Vec<StepFunction>,
    r: Vec<f64>,
    kappa: Vec<f64>,
    theta: Vec<f64>,
    nu: Vec<f64>,
    v_bar: Vec<f64>,
    rho: Vec<f64>,
    q: Vec<(f64, Vec<f64>)>,
    /// Lower Cholesky factor of the joint (W, Z) correlation, row-major 2N×2N.
    chol: Vec<f64>,
    /// `R Rᵀ`, row-major, exactly symmetric.
    rrt: Vec<f64>,
}

fn broadcast<T: Clone>(name: &str, v: Vec<T>, n: usize) -> Result<Vec<T>, HjmError> {
    match v.len() {
        1 => Ok(vec![v[0].clone(); n]),
        len if len == n => Ok(v),
        len => Err(HjmError::InvalidSpec(format!(
            "{name} has {len} entries for {n} factors"
        ))),
    }
}

fn check_matrix(name: &str, m: &[Vec<f64>], n: usize) -> Result<Vec<f64>, HjmError> {
    if m.len() != n || m.iter().any(|row| row.len() != n) {
        return Err(HjmError::InvalidSpec(format!("{name} must be {n}x{n}")));
    }
    let flat: Vec<f64> = m.iter().flatten().copied().collect();
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(HjmError::InvalidSpec(format!("{name} has non-finite entries")));
    }
    Ok(flat)
}

/// Cholesky factorisation that accepts positive semidefinite input.
/// Returns `None` when the matrix is not PSD.
pub(crate) fn psd_cholesky(m: &[f64], dim: usize) -> Option<Vec<f64>> {
    const TOL: f64 = 1e-12;
    let mut l = vec![0.0; dim * dim];
    for j in 0..dim {
        let mut d = m[j * dim + j];
        for k in 0..j {
            d -= l[j * dim + k] * l[j * dim + k];
        }
        if d < -TOL {
            return None;
        }
        let pivot = d.max(0.0).sqrt();
        l[j * dim + j] = pivot;
        for i in j + 1..dim {
            let mut s = m[i * dim + j];
            for k in 0..j {
                s -= l[i * dim + k] * l[j * dim + k];
            }
            if pivot > TOL.sqrt() {
                l[i * dim + j] = s / pivot;
            } else if s.abs() > TOL.sqrt() {
                return None;
            }
        }
    }
    Some(l)
}

impl VolatilitySpec {
    pub fn new(params: VolatilityParams) -> Result<Self, HjmError> {
        let n = params.r.len();
        if n == 0 {
            return Err(HjmError::InvalidSpec("at least one factor required".into()));
        }
        let r = check_matrix("R", &params.r, n)?;
        for i in 0..n {
            for j in 0..i {
                if r[i * n + j] != 0.0 {
                    return Err(HjmError::InvalidSpec("R must be upper triangular".into()));
                }
            }
        }
        let a = broadcast("a", params.a, n)?;
        let kappa = broadcast("kappa", params.kappa, n)?;
        let theta = broadcast("theta", params.theta, n)?;
        let nu = broadcast("nu", params.nu, n)?;
        let v_bar = broadcast("v_bar", params.v_bar, n)?;
        for (name, v) in [("kappa", &kappa), ("theta", &theta), ("nu", &nu), ("v_bar", &v_bar)] {
            if let Some(bad) = v.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
                return Err(HjmError::InvalidSpec(format!("{name} = {bad} must be >= 0")));
            }
        }
        let rho = check_matrix("rho", &params.rho, n)?;
        if rho.iter().any(|c| c.abs() > 1.0) {
            return Err(HjmError::InvalidSpec("rho entries must lie in [-1, 1]".into()));
        }
        let dim = 2 * n;
        let mut joint = vec![0.0; dim * dim];
        for i in 0..dim {
            joint[i * dim + i] = 1.0;
        }
        for i in 0..n {
            for j in 0..n {
                // W block first, then Z block
                joint[(n + i) * dim + j] = rho[i * n + j];
                joint[j * dim + n + i] = rho[i * n + j];
            }
        }
        let chol = psd_cholesky(&joint, dim).ok_or_else(|| {
            HjmError::InvalidSpec("joint (W, Z) correlation is not positive semidefinite".into())
        })?;
        let mut q = Vec::with_capacity(params.q.len());
        for (tenor, loads) in params.q {
            if !(tenor > 0.0) {
                return Err(HjmError::InvalidSpec(format!("q tenor {tenor} must be positive")));
            }
            let loads = broadcast("q", loads, n)?;
            if loads.iter().any(|v| !v.is_finite()) {
                return Err(HjmError::InvalidSpec("q has non-finite entries".into()));
            }
            q.push((tenor, loads));
        }
        let mut rrt = vec![0.0; n * n];
        for i in 0..n {
            for k in i..n {
                let s: f64 = (0..n).map(|j| r[i * n + j] * r[k * n + j]).sum();
                rrt[i * n + k] = s;
                rrt[k * n + i] = s;
            }
        }
        Ok(VolatilitySpec {
            n,
            a,
            r,
            kappa,
            theta,
            nu,
            v_bar,
            rho,
            q,
            chol,
            rrt,
        })
    }

    /// One factor with constant `a` and deterministic volatility `sigma`.
    pub fn one_factor(a: f64, sigma: f64) -> Self {
        VolatilitySpec::new(VolatilityParams {
            a: vec![StepFunction::constant(a)],
            r: vec![vec![sigma]],
            kappa: vec![0.0],
            theta: vec![1.0],
            nu: vec![0.0],
            v_bar: vec![1.0],
            rho: vec![vec![0.0]],
            q: Vec::new(),
        })
        .expect("valid one-factor spec")
    }

    /// `n` factors with `h ≡ 0`.
    pub fn zero_volatility(n: usize) -> Self {
        VolatilitySpec::new(VolatilityParams {
            a: vec![StepFunction::constant(0.1)],
            r: vec![vec![0.0; n]; n],
            kappa: vec![0.0],
            theta: vec![0.0],
            nu: vec![0.0],
            v_bar: vec![0.0],
            rho: vec![vec![0.0; n]; n],
            q: Vec::new(),
        })
        .expect("valid zero-volatility spec")
    }

    pub fn num_factors(&self) -> usize {
        self.n
    }

    pub fn mean_reversion(&self) -> &[StepFunction] {
        &self.a
    }

    /// Row-major `R`.
    pub fn loading(&self) -> &[f64] {
        &self.r
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn v_bar(&self) -> &[f64] {
        &self.v_bar
    }

    /// Row-major `rho`.
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub(crate) fn joint_cholesky(&self) -> &[f64] {
        &self.chol
    }

    pub(crate) fn loading_gram(&self) -> &[f64] {
        &self.rrt
    }

    /// `q` loadings for tenor `x`; `x = 0` (the OIS limit) is always 1.
    pub fn q_loadings(&self, tenor: f64) -> Vec<f64> {
        self.q
            .iter()
            .find(|(x, _)| (x - tenor).abs() <= TENOR_TOLERANCE)
            .map(|(_, l)| l.clone())
            .unwrap_or_else(|| vec![1.0; self.n])
    }

    /// True when `h ≡ 0` along every path.
    pub fn is_zero_volatility(&self) -> bool {
        self.r.iter().all(|&v| v == 0.0)
            || self
                .v_bar
                .iter()
                .zip(&self.theta)
                .zip(&self.kappa)
                .all(|((&vb, &th), &k)| vb == 0.0 && (k == 0.0 || th == 0.0))
    }

    /// Closed-form CIR mean `θ + (v̄ − θ)e^{−κt}` per factor.
    pub fn variance_mean(&self, t: f64) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.theta[i] + (self.v_bar[i] - self.theta[i]) * (-self.kappa[i] * t).exp())
            .collect()
    }
}
