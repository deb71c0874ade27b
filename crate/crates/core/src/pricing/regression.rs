use nalgebra::{DMatrix, DVector};

use crate::hjm::PathEnsemble;

/// Polynomial basis in the standardized state variables `(X, diag Y, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegressionBasis {
    Linear,
    #[default]
    Quadratic,
}

struct Standardized {
    /// Per kept variable: (selector, mean, std).
    vars: Vec<(usize, f64, f64)>,
}

fn raw_variable(ens: &PathEnsemble, path: usize, index: usize, k: usize) -> f64 {
    let s = ens.state(path, index);
    let n = s.num_factors();
    if k < n {
        s.x[k]
    } else if k < 2 * n {
        s.y_at(k - n, k - n)
    } else {
        s.v[k - 2 * n]
    }
}

fn standardize(ens: &PathEnsemble, index: usize) -> Standardized {
    let paths = ens.num_paths();
    let mut vars = Vec::new();
    for k in 0..3 * ens.num_factors() {
        let mean = (0..paths).map(|p| raw_variable(ens, p, index, k)).sum::<f64>() / paths as f64;
        let var = (0..paths)
            .map(|p| {
                let d = raw_variable(ens, p, index, k) - mean;
                d * d
            })
            .sum::<f64>()
            / paths as f64;
        let std = var.sqrt();
        // constants (up to rounding) carry no information
        if std > 1e-12 * (1.0 + mean.abs()) {
            vars.push((k, mean, std));
        }
    }
    Standardized { vars }
}

fn features(st: &Standardized, basis: RegressionBasis, ens: &PathEnsemble, p: usize, index: usize, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    let start = out.len();
    for &(k, mean, std) in &st.vars {
        out.push((raw_variable(ens, p, index, k) - mean) / std);
    }
    if basis == RegressionBasis::Quadratic {
        let m = out.len();
        for a in start..m {
            for b in a..m {
                out.push(out[a] * out[b]);
            }
        }
    }
}

/// Least-squares projection of `targets` on the state at grid date `index`.
/// Returns the fitted values per path; a constant state yields the sample
/// mean.
pub fn regress(
    ensemble: &PathEnsemble,
    index: usize,
    targets: &[f64],
    basis: RegressionBasis,
) -> Vec<f64> {
    let paths = ensemble.num_paths();
    assert_eq!(targets.len(), paths, "one target per path");
    if paths == 0 {
        return Vec::new();
    }
    let st = standardize(ensemble, index);
    if st.vars.is_empty() {
        let mean = targets.iter().sum::<f64>() / paths as f64;
        return vec![mean; paths];
    }
    let mut row = Vec::new();
    features(&st, basis, ensemble, 0, index, &mut row);
    let m = row.len();
    let mut gram = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    for (p, &y) in targets.iter().enumerate() {
        features(&st, basis, ensemble, p, index, &mut row);
        for a in 0..m {
            rhs[a] += row[a] * y;
            for b in a..m {
                gram[(a, b)] += row[a] * row[b];
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    let svd = gram.svd(true, true);
    let eps = 1e-12 * svd.singular_values.max();
    let beta = svd.solve(&rhs, eps).expect("both factors computed");
    (0..paths)
        .map(|p| {
            features(&st, basis, ensemble, p, index, &mut row);
            row.iter().zip(beta.iter()).map(|(a, b)| a * b).sum()
        })
        .collect()
}
