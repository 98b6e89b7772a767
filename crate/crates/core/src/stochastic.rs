//! Reproducible random increments.
//!
//! Every trajectory owns one stream per noise channel. A stream is a ChaCha8
//! generator keyed by the master seed and positioned on a stream id derived
//! from `(trajectory_index, channel)`, so the numbers a trajectory sees do not
//! depend on which worker runs it or in what order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Largest `γ·dt` for which a per-step Bernoulli draw stands in for the
/// Poisson error process.
pub const MAX_JUMP_PROBABILITY: f64 = 0.1;

const CHANNEL_BITS: u32 = 16;
const JUMP_CHANNEL_BASE: u64 = 1 << 8;

/// Identifies which noise source of a trajectory a stream feeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    /// Wiener noise of the measurement record of generator `l`.
    Measurement(usize),
    /// Jump process of error operator `k`.
    Jump(usize),
}

impl Channel {
    fn id(self) -> u64 {
        match self {
            Channel::Measurement(l) => l as u64,
            Channel::Jump(k) => JUMP_CHANNEL_BASE + k as u64,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NoiseStream {
    master_seed: u64,
    trajectory: u64,
    channel: Channel,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(master_seed: u64, trajectory: u64, channel: Channel) -> Self {
        assert!(
            trajectory < 1 << (64 - CHANNEL_BITS),
            "trajectory index {trajectory} exceeds the stream id space"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream((trajectory << CHANNEL_BITS) | channel.id());
        Self {
            master_seed,
            trajectory,
            channel,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn trajectory(&self) -> u64 {
        self.trajectory
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    /// Wiener increment `dW ~ N(0, dt)`.
    #[inline]
    pub fn wiener(&mut self, dt: f64) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        z * dt.sqrt()
    }

    /// Jump increment `dN ∈ {0, 1}` with `P(dN = 1) = γ·dt`.
    ///
    /// Fails if `γ < 0` or `γ·dt` exceeds [`MAX_JUMP_PROBABILITY`].
    pub fn jump(&mut self, gamma: f64, dt: f64) -> Result<bool> {
        check_jump_probability(gamma, dt)?;
        Ok(self.bernoulli(gamma * dt))
    }

    /// Draws one uniform and compares it against `p`. Always consumes one
    /// draw, so streams stay aligned when `p` changes across a sweep.
    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        let u: f64 = self.rng.random();
        u < p
    }
}

pub fn check_jump_probability(gamma: f64, dt: f64) -> Result<()> {
    if !(gamma >= 0.0) {
        return Err(Error::Config(format!(
            "error rate must be non-negative, got {gamma}"
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::Config(format!(
            "time step must be positive, got {dt}"
        )));
    }
    if gamma * dt > MAX_JUMP_PROBABILITY {
        return Err(Error::Config(format!(
            "time step too coarse for jump process: gamma*dt = {} exceeds {MAX_JUMP_PROBABILITY}",
            gamma * dt
        )));
    }
    Ok(())
}

/// All noise streams of one trajectory.
#[derive(Clone, Debug)]
pub struct TrajectoryNoise {
    pub measurement: Vec<NoiseStream>,
    pub jumps: Vec<NoiseStream>,
}

impl TrajectoryNoise {
    pub fn new(master_seed: u64, trajectory: u64, n_generators: usize, n_errors: usize) -> Self {
        Self {
            measurement: (0..n_generators)
                .map(|l| NoiseStream::new(master_seed, trajectory, Channel::Measurement(l)))
                .collect(),
            jumps: (0..n_errors)
                .map(|k| NoiseStream::new(master_seed, trajectory, Channel::Jump(k)))
                .collect(),
        }
    }
}
