//! Fixtures shared by the benchmarks.

use cqec::dynamics::{Increments, StepInput};
use cqec::stochastic::TrajectoryNoise;
use cqec::{Preset, SimConfig};

/// Fig. 2 parameters shortened to `t_final` seconds.
pub fn short_fig2(t_final: f64, n_traj: usize) -> SimConfig {
    SimConfig {
        t_final,
        window: t_final.min(0.15),
        n_traj,
        ..Preset::Fig2.config()
    }
}

/// Hardware-regime parameters with a short horizon.
pub fn short_hardware(t_final: f64) -> SimConfig {
    SimConfig {
        t_final,
        n_traj: 1,
        ..Preset::Hardware.config()
    }
}

pub fn step_input(feedback: &[f64]) -> StepInput<'_> {
    StepInput {
        kappa: 150.0,
        gamma: 0.1,
        lambda: 150.0,
        eta: 0.8,
        dt: 1e-4,
        feedback,
    }
}

/// A pre-drawn block of increments so step benchmarks exclude sampling.
pub fn increment_block(n: usize, n_gen: usize, n_err: usize) -> Vec<Increments> {
    let mut noise = TrajectoryNoise::new(1, 0, n_gen, n_err);
    let probs = vec![1e-5; n_err];
    (0..n)
        .map(|_| {
            let mut inc = Increments::zeros(n_gen, n_err);
            inc.sample(&mut noise, &probs, 1e-4);
            inc
        })
        .collect()
}
