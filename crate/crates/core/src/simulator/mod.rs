//! Trajectory loop, ensemble runner and analytic baselines.
//!
//! Trajectories are independent tasks. They run on a rayon pool in chunks
//! and are folded into the running statistics strictly in index order, so
//! the result does not depend on the number of workers.

mod analytic;
mod config;
mod trajectory;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use crate::dynamics::SmeScheme;
pub use analytic::{analytic_f1, analytic_f3d};
pub use config::{Mode, Preset, SimConfig, SweepParam, MAX_RATE_DT};
pub use trajectory::{run_trajectory, ScriptedJump, Simulation, TrajectoryResult};

/// Largest tolerated fraction of aborted trajectories.
pub const MAX_ABORTED_FRACTION: f64 = 0.1;

const CHUNK: usize = 256;

/// Ensemble mean fidelity curve with its standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    /// Sample standard deviation over trajectories divided by √n.
    pub stderr: Vec<f64>,
    /// Trajectories that entered the statistics.
    pub n_traj: usize,
    pub n_aborted: usize,
    /// Jumps per error channel summed over the counted trajectories.
    pub jump_totals: Vec<u64>,
    pub config: SimConfig,
    pub seed: u64,
    /// The same trajectory index sees the same noise streams at every point
    /// of a sweep.
    pub common_random_numbers: bool,
}

impl EnsembleResult {
    /// Mean and standard error at the last sample.
    pub fn final_fidelity(&self) -> (f64, f64) {
        (
            *self.mean.last().expect("non-empty curve"),
            *self.stderr.last().expect("non-empty curve"),
        )
    }

    /// Index of the last sample with `t ≤ time`.
    pub fn index_at(&self, time: f64) -> usize {
        self.times
            .partition_point(|t| *t <= time + 1e-12)
            .saturating_sub(1)
    }

    /// Mean number of jumps per trajectory and channel.
    pub fn mean_jumps(&self) -> Vec<f64> {
        self.jump_totals
            .iter()
            .map(|j| *j as f64 / self.n_traj.max(1) as f64)
            .collect()
    }
}

/// Per-sample running mean and variance (Welford).
struct Accumulator {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
    jumps: Vec<u64>,
}

impl Accumulator {
    fn new(len: usize, n_err: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
            jumps: vec![0; n_err],
        }
    }

    fn push(&mut self, t: &TrajectoryResult) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), x) in self.mean.iter_mut().zip(&mut self.m2).zip(&t.fidelity) {
            let d = x - *m;
            *m += d / n;
            *s += d * (x - *m);
        }
        for (a, b) in self.jumps.iter_mut().zip(&t.jumps) {
            *a += b;
        }
    }

    fn stderr(&self) -> Vec<f64> {
        if self.n < 2 {
            return vec![0.0; self.mean.len()];
        }
        let n = self.n as f64;
        self.m2
            .iter()
            .map(|s| (s.max(0.0) / (n - 1.0)).sqrt() / n.sqrt())
            .collect()
    }
}

/// Runs the ensemble on the global rayon pool.
pub fn run_ensemble(cfg: &SimConfig) -> Result<EnsembleResult> {
    let sim = Simulation::new(cfg.clone())?;
    ensemble(&sim)
}

/// Runs the ensemble on a dedicated pool of `threads` workers (all cores if
/// `None`). The result is identical for every worker count.
pub fn run_ensemble_with_threads(
    cfg: &SimConfig,
    threads: Option<usize>,
) -> Result<EnsembleResult> {
    let sim = Simulation::new(cfg.clone())?;
    run_simulation_with_threads(&sim, threads)
}

pub fn run_simulation_with_threads(
    sim: &Simulation,
    threads: Option<usize>,
) -> Result<EnsembleResult> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Contract(format!("cannot start worker pool: {e}")))?;
    pool.install(|| ensemble(sim))
}

/// Runs every trajectory of `sim` and reduces them in index order.
pub fn ensemble(sim: &Simulation) -> Result<EnsembleResult> {
    let cfg = sim.config();
    let times = sim.sample_times();
    let mut acc = Accumulator::new(times.len(), sim.code().errors().len());
    let mut aborted = 0usize;
    let mut first_reason = None;

    let n = cfg.n_traj as u64;
    let mut start = 0u64;
    while start < n {
        let end = (start + CHUNK as u64).min(n);
        let chunk: Vec<TrajectoryResult> = (start..end)
            .into_par_iter()
            .map(|i| sim.run_trajectory(i))
            .collect();
        for t in &chunk {
            if t.aborted {
                aborted += 1;
                if first_reason.is_none() {
                    first_reason = t.abort_reason.clone();
                }
            } else {
                acc.push(t);
            }
        }
        start = end;
    }

    if aborted as f64 > MAX_ABORTED_FRACTION * cfg.n_traj as f64 || acc.n == 0 {
        return Err(Error::NumericalIntegrity(format!(
            "{aborted} of {} trajectories aborted (first: {})",
            cfg.n_traj,
            first_reason.unwrap_or_default()
        )));
    }

    Ok(EnsembleResult {
        stderr: acc.stderr(),
        mean: acc.mean.iter().map(|m| m.clamp(0.0, 1.0)).collect(),
        times,
        n_traj: acc.n,
        n_aborted: aborted,
        jump_totals: acc.jumps,
        config: cfg.clone(),
        seed: cfg.seed,
        common_random_numbers: true,
    })
}
