use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::state::{advance, state_stride, step_decay, view_from_slice, write_initial};
use super::{HjmError, StateView, VolatilitySpec};
use crate::curves::DiscountCurve;

/// Grid alignment tolerance in years.
pub const GRID_TOLERANCE: f64 = 1e-9;

/// Observation dates (where states are stored) plus the maximal Euler step
/// used between them.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationGrid {
    times: Vec<f64>,
    max_dt: f64,
}

impl SimulationGrid {
    /// `times` must increase strictly; 0 is prepended when missing.
    pub fn new(mut times: Vec<f64>, max_dt: f64) -> Result<Self, HjmError> {
        if times.is_empty() {
            return Err(HjmError::EmptyGrid);
        }
        if !(max_dt > 0.0) {
            return Err(HjmError::NonPositiveDt(max_dt));
        }
        if times[0].abs() <= GRID_TOLERANCE {
            times[0] = 0.0;
        } else if times[0] > 0.0 {
            times.insert(0, 0.0);
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(HjmError::InvalidGrid);
        }
        if times[0] < 0.0 {
            return Err(HjmError::InvalidGrid);
        }
        Ok(SimulationGrid { times, max_dt })
    }

    /// Regular observation grid `0, dt_obs, …, horizon` merged with `extra`.
    pub fn regular(horizon: f64, obs_dt: f64, max_dt: f64, extra: &[f64]) -> Result<Self, HjmError> {
        if !(obs_dt > 0.0) {
            return Err(HjmError::NonPositiveDt(obs_dt));
        }
        let n = (horizon / obs_dt - GRID_TOLERANCE).ceil().max(0.0) as usize;
        let mut times: Vec<f64> = (0..=n).map(|i| (i as f64 * obs_dt).min(horizon)).collect();
        times.extend_from_slice(extra);
        Self::new(merge_times(times), max_dt)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn max_dt(&self) -> f64 {
        self.max_dt
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }
}

/// Sorts and merges times closer than the grid tolerance.
pub fn merge_times(mut times: Vec<f64>) -> Vec<f64> {
    times.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(times.len());
    for t in times {
        match out.last() {
            Some(&last) if (t - last).abs() <= GRID_TOLERANCE => {}
            _ => out.push(t),
        }
    }
    out
}

/// Simulated Markov states on the observation grid, path-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    times: Vec<f64>,
    n: usize,
    num_paths: usize,
    seed: u64,
    data: Vec<f64>,
}

impl PathEnsemble {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn num_paths(&self) -> usize {
        self.num_paths
    }

    pub fn num_factors(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Index of grid date `t`, if on the grid.
    pub fn time_index(&self, t: f64) -> Option<usize> {
        let k = self.times.partition_point(|&s| s < t - GRID_TOLERANCE);
        (k < self.times.len() && (self.times[k] - t).abs() <= GRID_TOLERANCE).then_some(k)
    }

    pub fn state(&self, path: usize, index: usize) -> StateView<'_> {
        let stride = state_stride(self.n);
        let off = (path * self.times.len() + index) * stride;
        view_from_slice(self.times[index], self.n, &self.data[off..off + stride])
    }

    /// Collateral-rate deflator `D(0, t; e) = P_0(t) exp(−I_t)` on a path.
    pub fn deflator(
        &self,
        curve0: &DiscountCurve,
        path: usize,
        index: usize,
    ) -> Result<f64, HjmError> {
        let s = self.state(path, index);
        Ok(curve0.discount_factor(s.t)? * (-s.integral).exp())
    }

    /// CSV `path,t,X_1..,Y_11..,v_1..` for the first `max_paths` paths.
    pub fn to_csv(&self, max_paths: usize) -> String {
        let n = self.n;
        let mut out = String::from("path,t");
        for i in 1..=n {
            let _ = write!(out, ",X{i}");
        }
        for i in 1..=n {
            let _ = write!(out, ",Y{i}{i}");
        }
        for i in 1..=n {
            let _ = write!(out, ",v{i}");
        }
        out.push('\n');
        for p in 0..self.num_paths.min(max_paths) {
            for k in 0..self.times.len() {
                let s = self.state(p, k);
                let _ = write!(out, "{p},{}", s.t);
                for x in s.x {
                    let _ = write!(out, ",{x}");
                }
                for i in 0..n {
                    let _ = write!(out, ",{}", s.y_at(i, i));
                }
                for v in s.v {
                    let _ = write!(out, ",{v}");
                }
                out.push('\n');
            }
        }
        out
    }
}

struct Substep {
    t: f64,
    dt: f64,
    g: Vec<f64>,
    /// Observation index reached at the end of this substep, if any.
    store: Option<usize>,
}

fn plan(spec: &VolatilitySpec, grid: &SimulationGrid) -> Vec<Substep> {
    let n = spec.num_factors();
    let mut steps = Vec::new();
    for (k, w) in grid.times.windows(2).enumerate() {
        let span = w[1] - w[0];
        let count = ((span / grid.max_dt) - GRID_TOLERANCE).ceil().max(1.0) as usize;
        let dt = span / count as f64;
        for j in 0..count {
            let t = w[0] + j as f64 * dt;
            let mut g = vec![0.0; n];
            step_decay(spec, t, dt, &mut g);
            steps.push(Substep {
                t,
                dt,
                g,
                store: (j + 1 == count).then_some(k + 1),
            });
        }
    }
    steps
}

fn simulate_path(
    spec: &VolatilitySpec,
    steps: &[Substep],
    seed: u64,
    path: usize,
    out: &mut [f64],
) {
    let n = spec.num_factors();
    let stride = state_stride(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    let mut state = vec![0.0; stride];
    write_initial(spec, &mut state);
    out[..stride].copy_from_slice(&state);
    let mut xi = vec![0.0; 2 * n];
    let mut work = vec![0.0; 2 * n];
    for step in steps {
        for z in xi.iter_mut() {
            *z = rng.sample(StandardNormal);
        }
        debug_assert!(step.t >= 0.0);
        advance(spec, &mut state, step.dt, &step.g, &xi, &mut work);
        if let Some(k) = step.store {
            out[k * stride..(k + 1) * stride].copy_from_slice(&state);
        }
    }
}

/// Simulates `num_paths` independent paths. Path `p` draws from its own
/// ChaCha stream, so results do not depend on scheduling or thread count.
pub fn simulate(
    spec: &VolatilitySpec,
    grid: &SimulationGrid,
    num_paths: usize,
    seed: u64,
) -> Result<PathEnsemble, HjmError> {
    if num_paths == 0 {
        return Err(HjmError::NoPaths);
    }
    let n = spec.num_factors();
    let stride = state_stride(n);
    let per_path = grid.times.len() * stride;
    let steps = plan(spec, grid);
    log::debug!(
        "simulating {num_paths} paths over {} substeps, {} factors",
        steps.len(),
        n
    );
    let mut data = vec![0.0; per_path * num_paths];
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(per_path)
        .enumerate()
        .for_each(|(p, out)| simulate_path(spec, &steps, seed, p, out));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(per_path)
        .enumerate()
        .for_each(|(p, out)| simulate_path(spec, &steps, seed, p, out));
    Ok(PathEnsemble {
        times: grid.times.clone(),
        n,
        num_paths,
        seed,
        data,
    })
}
