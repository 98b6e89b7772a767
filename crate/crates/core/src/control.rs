//! Classical side of the feedback loop: smoothing of the noisy measurement
//! records and sign-based selection of the feedback channels.

use std::collections::VecDeque;

use crate::codes::{pattern_index, Sign, StabilizerCode};
use crate::error::{Error, Result};

/// A causal filter turning record increments into a smoothed signal.
pub trait RecordFilter {
    /// Feeds one record increment and returns the new filter output.
    fn update(&mut self, dq: f64) -> f64;
    /// Most recent output.
    fn output(&self) -> f64;
    /// True until the filter has seen a full window of increments.
    fn warming_up(&self) -> bool;
    fn reset(&mut self);
}

/// Parameters of the truncated exponential filter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterParams {
    /// Decay rate r (s⁻¹).
    pub rate: f64,
    /// Window length T (s).
    pub window: f64,
    pub dt: f64,
    /// Measurement strength κ, which sets the normalization.
    pub kappa: f64,
    /// Normalize partial windows by their own length instead of the full one.
    pub early_feedback: bool,
}

impl FilterParams {
    /// Window size in samples, `round(T / dt)`.
    pub fn window_len(&self) -> usize {
        (self.window / self.dt).round() as usize
    }

    /// `N(τ) = (2κ/r)(1 − e^{−rτ})`; tends to `2κτ` as `r → 0`.
    pub fn normalization(&self, span: f64) -> f64 {
        if self.rate == 0.0 {
            2.0 * self.kappa * span
        } else {
            2.0 * self.kappa / self.rate * (-(-self.rate * span).exp_m1())
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate >= 0.0) || !self.rate.is_finite() {
            return Err(Error::Config(format!(
                "filter rate must be >= 0, got {}",
                self.rate
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.window_len() < 1 {
            return Err(Error::Config(format!(
                "filter window {} is shorter than one time step {}",
                self.window, self.dt
            )));
        }
        Ok(())
    }
}

/// Exponentially weighted sum over the last `M = round(T/dt)` record
/// increments, `R = (1/N) Σ_{j<M} e^{−r j dt} dQ[latest − j]`.
///
/// The sum is updated recursively in O(1) per increment and recomputed
/// from the buffer once per window to bound round-off drift.
#[derive(Clone, Debug)]
pub struct ExponentialFilter {
    params: FilterParams,
    len: usize,
    decay: f64,
    tail: f64,
    norm: f64,
    buffer: VecDeque<f64>,
    sum: f64,
    since_refresh: usize,
    output: f64,
}

impl ExponentialFilter {
    pub fn new(params: FilterParams) -> Result<Self> {
        params.validate()?;
        let len = params.window_len();
        let decay = (-params.rate * params.dt).exp();
        Ok(Self {
            params,
            len,
            decay,
            tail: decay.powi(len as i32),
            norm: params.normalization(len as f64 * params.dt),
            buffer: VecDeque::with_capacity(len + 1),
            sum: 0.0,
            since_refresh: 0,
            output: 0.0,
        })
    }

    pub fn params(&self) -> &FilterParams {
        &self.params
    }

    pub fn window_len(&self) -> usize {
        self.len
    }

    /// Full-window normalization N.
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    pub fn filled(&self) -> usize {
        self.buffer.len()
    }

    /// Unnormalized weighted sum recomputed directly from the buffer.
    fn exact_sum(&self) -> f64 {
        self.buffer.iter().fold(0.0, |acc, x| acc * self.decay + x)
    }

    fn current_norm(&self) -> f64 {
        if self.params.early_feedback && self.buffer.len() < self.len {
            self.params
                .normalization(self.buffer.len() as f64 * self.params.dt)
        } else {
            self.norm
        }
    }
}

impl RecordFilter for ExponentialFilter {
    fn update(&mut self, dq: f64) -> f64 {
        self.buffer.push_back(dq);
        self.sum = self.sum * self.decay + dq;
        if self.buffer.len() > self.len {
            let dropped = self.buffer.pop_front().expect("buffer is non-empty");
            self.sum -= self.tail * dropped;
        }
        self.since_refresh += 1;
        if self.since_refresh >= self.len {
            self.sum = self.exact_sum();
            self.since_refresh = 0;
        }
        let norm = self.current_norm();
        self.output = if norm > 0.0 { self.sum / norm } else { 0.0 };
        self.output
    }

    fn output(&self) -> f64 {
        self.output
    }

    fn warming_up(&self) -> bool {
        self.buffer.len() < self.len
    }

    fn reset(&mut self) {
        self.buffer.clear();
        self.sum = 0.0;
        self.since_refresh = 0;
        self.output = 0.0;
    }
}

/// Feedback amplitudes `G_k` for every channel of a code.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConditioningSignals {
    pub g: Vec<f64>,
    pub active: Vec<bool>,
}

/// Switching rule from filter outputs to feedback amplitudes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Switching {
    /// A generator reads negative when its filtered signal is below `−θ`.
    pub threshold: f64,
}

impl Default for Switching {
    fn default() -> Self {
        Self { threshold: 0.0 }
    }
}

impl Switching {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&threshold) {
            return Err(Error::Config(format!(
                "threshold must lie in [0, 1), got {threshold}"
            )));
        }
        Ok(Self { threshold })
    }

    pub fn sign(&self, r: f64) -> Sign {
        Sign::of(r + self.threshold)
    }

    /// Writes `G` into `out`; returns the number of active channels.
    ///
    /// Every channel selected by the sign pattern gets the value of its
    /// driving filter; all others are zero. While `warming_up`, all are zero.
    pub fn apply(
        &self,
        code: &StabilizerCode,
        r: &[f64],
        warming_up: bool,
        out: &mut ConditioningSignals,
    ) -> Result<usize> {
        if r.len() != code.generators().len() {
            return Err(Error::DimensionMismatch {
                expected: code.generators().len(),
                found: r.len(),
            });
        }
        let n = code.feedbacks().len();
        out.g.clear();
        out.g.resize(n, 0.0);
        out.active.clear();
        out.active.resize(n, false);
        if warming_up {
            return Ok(0);
        }
        let mut pattern = 0usize;
        for (l, x) in r.iter().enumerate() {
            if self.sign(*x) == Sign::Minus {
                pattern |= 1 << l;
            }
        }
        let drives = &code.switch_table()[pattern];
        for d in drives {
            out.g[d.channel] = r[d.driver];
            out.active[d.channel] = true;
        }
        Ok(drives.len())
    }
}

/// Feedback amplitudes for filter outputs `r` with the plain sign rule.
pub fn conditioning(
    code: &StabilizerCode,
    r: &[f64],
    warming_up: bool,
) -> Result<ConditioningSignals> {
    let mut out = ConditioningSignals::default();
    Switching::default().apply(code, r, warming_up, &mut out)?;
    Ok(out)
}

/// Sign pattern of `r` under the plain sign rule, as a switch-table index.
pub fn sign_pattern(r: &[f64]) -> usize {
    let signs: Vec<Sign> = r.iter().map(|x| Sign::of(*x)).collect();
    pattern_index(&signs)
}
