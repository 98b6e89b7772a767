//! Run configuration and named presets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codes::CodeName;
use crate::dynamics::SmeScheme;
use crate::error::{Error, Result};
use crate::stochastic::MAX_JUMP_PROBABILITY;

/// Largest `κ·dt` and `λ·dt` accepted by the Euler integrator.
pub const MAX_RATE_DT: f64 = 0.1;

/// Evolution law used for each trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Pure states with jump errors; perfect detection only.
    Sse,
    /// Density matrices with dissipative errors; any efficiency in (0, 1].
    Sme,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Sse => "sse",
            Mode::Sme => "sme",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sse" => Ok(Mode::Sse),
            "sme" => Ok(Mode::Sme),
            other => Err(Error::Config(format!(
                "unknown mode \"{other}\" (valid: sse, sme)"
            ))),
        }
    }
}

/// Everything that determines an ensemble run. All rates are in s⁻¹ and all
/// times in s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub code: CodeName,
    /// Error rate γ per error operator.
    pub gamma: f64,
    /// Measurement strength κ per generator.
    pub kappa: f64,
    /// Maximum feedback strength λ.
    pub lambda: f64,
    /// Filter decay rate r.
    pub filter_rate: f64,
    /// Filter window T.
    pub window: f64,
    /// Detection efficiency η.
    pub eta: f64,
    pub dt: f64,
    pub t_final: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub mode: Mode,
    /// Apply feedback before the filter window has filled.
    pub early_feedback: bool,
    /// Activation threshold θ: a generator reads negative when R < −θ.
    pub threshold: f64,
    /// Store every `sample_stride`-th step.
    pub sample_stride: usize,
    /// Update rule for density matrices (sme mode only).
    #[serde(default)]
    pub sme_scheme: SmeScheme,
}

impl Default for SimConfig {
    fn default() -> Self {
        Preset::Fig2.config()
    }
}

impl SimConfig {
    /// Number of Euler steps, `round(t_final / dt)`.
    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    /// Checks every constraint; the error message names the one violated.
    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = [
            ("gamma", self.gamma),
            ("kappa", self.kappa),
            ("lambda", self.lambda),
            ("filter-rate", self.filter_rate),
        ];
        for (name, v) in finite_nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.window >= self.dt) {
            return Err(Error::Config(format!(
                "window must be at least one time step: window = {} < dt = {}",
                self.window, self.dt
            )));
        }
        if !(self.t_final >= self.window) {
            return Err(Error::Config(format!(
                "t-final must be >= window: t-final = {} < window = {}",
                self.t_final, self.window
            )));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Config(format!(
                "eta must lie in (0, 1], got {}",
                self.eta
            )));
        }
        if self.mode == Mode::Sse && self.eta != 1.0 {
            return Err(Error::Config(format!(
                "eta = {} < 1 requires mode sme; the sse mode models perfect detection",
                self.eta
            )));
        }
        if self.gamma * self.dt > MAX_JUMP_PROBABILITY {
            return Err(Error::Config(format!(
                "time step too coarse: gamma*dt = {} exceeds {MAX_JUMP_PROBABILITY}",
                self.gamma * self.dt
            )));
        }
        if self.kappa * self.dt > MAX_RATE_DT {
            return Err(Error::Config(format!(
                "time step too coarse: kappa*dt = {} exceeds {MAX_RATE_DT}",
                self.kappa * self.dt
            )));
        }
        if self.lambda * self.dt > MAX_RATE_DT {
            return Err(Error::Config(format!(
                "time step too coarse: lambda*dt = {} exceeds {MAX_RATE_DT}",
                self.lambda * self.dt
            )));
        }
        if self.n_traj < 1 {
            return Err(Error::Config("trajectories must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.threshold) {
            return Err(Error::Config(format!(
                "threshold must lie in [0, 1), got {}",
                self.threshold
            )));
        }
        if self.sample_stride < 1 {
            return Err(Error::Config("stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// Parameters that a sweep can vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepParam {
    Gamma,
    Kappa,
    Lambda,
    Eta,
    FilterRate,
    Window,
    Threshold,
    /// Sets κ = value · γ.
    KappaOverGamma,
    /// Sets λ = value · γ.
    LambdaOverGamma,
    /// Sets κ = λ = value · γ.
    RateRatio,
}

impl SweepParam {
    pub const ALL: [SweepParam; 10] = [
        SweepParam::Gamma,
        SweepParam::Kappa,
        SweepParam::Lambda,
        SweepParam::Eta,
        SweepParam::FilterRate,
        SweepParam::Window,
        SweepParam::Threshold,
        SweepParam::KappaOverGamma,
        SweepParam::LambdaOverGamma,
        SweepParam::RateRatio,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Gamma => "gamma",
            SweepParam::Kappa => "kappa",
            SweepParam::Lambda => "lambda",
            SweepParam::Eta => "eta",
            SweepParam::FilterRate => "filter-rate",
            SweepParam::Window => "window",
            SweepParam::Threshold => "threshold",
            SweepParam::KappaOverGamma => "kappa-over-gamma",
            SweepParam::LambdaOverGamma => "lambda-over-gamma",
            SweepParam::RateRatio => "rate-ratio",
        }
    }

    /// Returns a copy of `cfg` with this parameter set to `value`.
    pub fn apply(self, cfg: &SimConfig, value: f64) -> SimConfig {
        let mut c = cfg.clone();
        match self {
            SweepParam::Gamma => c.gamma = value,
            SweepParam::Kappa => c.kappa = value,
            SweepParam::Lambda => c.lambda = value,
            SweepParam::Eta => c.eta = value,
            SweepParam::FilterRate => c.filter_rate = value,
            SweepParam::Window => c.window = value,
            SweepParam::Threshold => c.threshold = value,
            SweepParam::KappaOverGamma => c.kappa = value * c.gamma,
            SweepParam::LambdaOverGamma => c.lambda = value * c.gamma,
            SweepParam::RateRatio => {
                c.kappa = value * c.gamma;
                c.lambda = value * c.gamma;
            }
        }
        c
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SweepParam::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                let valid: Vec<_> = SweepParam::ALL.iter().map(|p| p.as_str()).collect();
                Error::Config(format!(
                    "unknown sweep parameter \"{s}\" (valid: {})",
                    valid.join(", ")
                ))
            })
    }
}

/// Named parameter sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    Toy,
    Fig2,
    Fig3,
    Hardware,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Toy, Preset::Fig2, Preset::Fig3, Preset::Hardware];

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Toy => "toy",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Hardware => "hardware",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::Toy => {
                "one-qubit toy code (protect |0> against X flips by measuring Z), \
                 kappa = lambda = 150/s, r = 20/s, T = 0.15 s, dt = 1e-4 s"
            }
            Preset::Fig2 => {
                "three-qubit bit-flip code, pure-state trajectories, kappa = lambda = 150/s, \
                 r = 20/s, T = 1500 dt = 0.15 s, dt = 1e-4 s, 600 trajectories to t = 1 s; \
                 gamma is given in the same 1/s units (default 0.1)"
            }
            Preset::Fig3 => {
                "three-qubit bit-flip code, density-matrix trajectories with detector \
                 efficiency eta, kappa = lambda = 50/s, r = 10/s, T = 0.15 s, dt = 1e-4 s, \
                 600 trajectories to t = 1 s; default sweep eta = 1.0..0.6"
            }
            Preset::Hardware => {
                "solid-state regime: gamma = 1e2/s, kappa = 1e6/s, lambda = 1e7/s, \
                 dt = 1e-9 s, t = 1 ms, r = 1.5e5/s, T = 20 us, 100 trajectories"
            }
        }
    }

    pub fn config(self) -> SimConfig {
        let fig2 = SimConfig {
            code: CodeName::Bitflip3,
            gamma: 0.1,
            kappa: 150.0,
            lambda: 150.0,
            filter_rate: 20.0,
            window: 0.15,
            eta: 1.0,
            dt: 1e-4,
            t_final: 1.0,
            n_traj: 600,
            seed: 42,
            mode: Mode::Sse,
            early_feedback: false,
            threshold: 0.0,
            sample_stride: 10,
            sme_scheme: SmeScheme::Kraus,
        };
        match self {
            Preset::Fig2 => fig2,
            Preset::Toy => SimConfig {
                code: CodeName::Toy,
                ..fig2
            },
            Preset::Fig3 => SimConfig {
                kappa: 50.0,
                lambda: 50.0,
                filter_rate: 10.0,
                mode: Mode::Sme,
                ..fig2
            },
            Preset::Hardware => SimConfig {
                gamma: 1e2,
                kappa: 1e6,
                lambda: 1e7,
                filter_rate: 1.5e5,
                window: 2e-5,
                dt: 1e-9,
                t_final: 1e-3,
                n_traj: 100,
                sample_stride: 1000,
                ..fig2
            },
        }
    }

    /// The sweep this preset runs when `sweep` is given no parameter.
    pub fn default_sweep(self) -> Option<(SweepParam, Vec<f64>)> {
        match self {
            Preset::Fig2 => Some((SweepParam::Gamma, vec![0.1, 0.3, 1.0])),
            Preset::Fig3 => Some((SweepParam::Eta, vec![1.0, 0.9, 0.8, 0.7, 0.6])),
            Preset::Hardware => Some((SweepParam::RateRatio, vec![1e3, 1e4, 1e5])),
            Preset::Toy => None,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown preset \"{s}\" (valid: toy, fig2, fig3, hardware)"
                ))
            })
    }
}
