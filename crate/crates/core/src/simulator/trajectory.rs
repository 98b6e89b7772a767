use serde::{Deserialize, Serialize};

use crate::codes::StabilizerCode;
use crate::control::{
    ConditioningSignals, ExponentialFilter, FilterParams, RecordFilter, Switching,
};
use crate::dynamics::{Increments, SmeStepper, SseStepper, StepInput};
use crate::error::Result;
use crate::quantum::{codeword_fidelity, DensityMatrix, StateVector};
use crate::stochastic::TrajectoryNoise;

use super::config::{Mode, SimConfig};

/// One sampled unraveling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryResult {
    pub index: u64,
    pub times: Vec<f64>,
    pub fidelity: Vec<f64>,
    /// Number of jumps per error channel (always zero in SME mode).
    pub jumps: Vec<u64>,
    pub aborted: bool,
    pub abort_reason: Option<String>,
}

/// An error applied at a fixed step in addition to the random ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScriptedJump {
    pub step: usize,
    pub error: usize,
}

enum State {
    Pure(StateVector, SseStepper),
    Mixed(DensityMatrix, SmeStepper),
}

/// A validated configuration with everything precomputed that trajectories
/// share read-only.
#[derive(Clone, Debug)]
pub struct Simulation {
    cfg: SimConfig,
    code: StabilizerCode,
    jump_probabilities: Vec<f64>,
    filter: FilterParams,
    switching: Switching,
    n_steps: usize,
}

impl Simulation {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let code = cfg.code.build();
        Self::with_code(cfg, code)
    }

    /// Uses `code` in place of the one named in `cfg`, e.g. with a different
    /// initial codeword.
    pub fn with_code(cfg: SimConfig, code: StabilizerCode) -> Result<Self> {
        cfg.validate()?;
        let jump_probabilities = code
            .error_rates()
            .iter()
            .map(|s| cfg.gamma * s * cfg.dt)
            .collect();
        let filter = FilterParams {
            rate: cfg.filter_rate,
            window: cfg.window,
            dt: cfg.dt,
            kappa: cfg.kappa,
            early_feedback: cfg.early_feedback,
        };
        filter.validate()?;
        Ok(Self {
            switching: Switching::new(cfg.threshold)?,
            n_steps: cfg.n_steps(),
            jump_probabilities,
            filter,
            code,
            cfg,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn code(&self) -> &StabilizerCode {
        &self.code
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Steps (after the initial state) at which fidelity is stored.
    fn is_sample_step(&self, completed: usize) -> bool {
        completed.is_multiple_of(self.cfg.sample_stride) || completed == self.n_steps
    }

    /// Sample times, starting at 0.
    pub fn sample_times(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(
                (1..=self.n_steps)
                    .filter(|s| self.is_sample_step(*s))
                    .map(|s| s as f64 * self.cfg.dt),
            )
            .collect()
    }

    pub fn run_trajectory(&self, index: u64) -> TrajectoryResult {
        self.run_scripted(index, &[])
    }

    /// Runs trajectory `index`, applying `script` jumps on top of the random
    /// error process (pure-state mode only; ignored for density matrices).
    pub fn run_scripted(&self, index: u64, script: &[ScriptedJump]) -> TrajectoryResult {
        let cfg = &self.cfg;
        let code = &self.code;
        let n_gen = code.generators().len();
        let n_err = code.errors().len();
        let psi0 = code.initial_codeword();

        let mut noise = TrajectoryNoise::new(cfg.seed, index, n_gen, n_err);
        let mut state = match cfg.mode {
            Mode::Sse => State::Pure(psi0.clone(), SseStepper::new(code)),
            Mode::Sme => State::Mixed(
                DensityMatrix::from_pure(psi0),
                SmeStepper::with_scheme(code, cfg.sme_scheme),
            ),
        };
        let mut filters: Vec<ExponentialFilter> = (0..n_gen)
            .map(|_| ExponentialFilter::new(self.filter).expect("validated filter"))
            .collect();
        let mut r = vec![0.0; n_gen];
        let mut dq = vec![0.0; n_gen];
        let mut signals = ConditioningSignals::default();
        let mut inc = Increments::zeros(n_gen, n_err);

        let capacity = self.n_steps / cfg.sample_stride + 2;
        let mut times = Vec::with_capacity(capacity);
        let mut fidelity = Vec::with_capacity(capacity);
        let mut jumps = vec![0u64; n_err];
        let fid = |s: &State| match s {
            State::Pure(psi, _) => codeword_fidelity(psi0, psi),
            State::Mixed(rho, _) => codeword_fidelity(psi0, rho),
        };
        times.push(0.0);
        fidelity.push(fid(&state).expect("initial state is valid"));

        let mut script = script.to_vec();
        script.sort_by_key(|s| s.step);
        let mut next_scripted = 0;

        for step in 0..self.n_steps {
            let warming = !cfg.early_feedback && filters.iter().any(|f| f.warming_up());
            self.switching
                .apply(code, &r, warming, &mut signals)
                .expect("filter count matches generators");
            let input = StepInput {
                kappa: cfg.kappa,
                gamma: cfg.gamma,
                lambda: cfg.lambda,
                eta: cfg.eta,
                dt: cfg.dt,
                feedback: &signals.g,
            };
            let completed = step + 1;
            let outcome = match &mut state {
                State::Pure(psi, stepper) => {
                    inc.sample(&mut noise, &self.jump_probabilities, cfg.dt);
                    while next_scripted < script.len() && script[next_scripted].step == step {
                        inc.dn[script[next_scripted].error] = true;
                        next_scripted += 1;
                    }
                    for (count, hit) in jumps.iter_mut().zip(&inc.dn) {
                        *count += u64::from(*hit);
                    }
                    stepper.step(psi, &inc, &input, &mut dq)
                }
                State::Mixed(rho, stepper) => {
                    inc.sample_diffusive(&mut noise, cfg.dt);
                    let check = self.is_sample_step(completed);
                    stepper.step(rho, &inc, &input, &mut dq, check)
                }
            };
            if let Err(e) = outcome {
                return TrajectoryResult {
                    index,
                    times,
                    fidelity,
                    jumps,
                    aborted: true,
                    abort_reason: Some(format!("step {step}: {e}")),
                };
            }
            for ((out, f), x) in r.iter_mut().zip(&mut filters).zip(&dq) {
                *out = f.update(*x);
            }
            if self.is_sample_step(completed) {
                times.push(completed as f64 * cfg.dt);
                match fid(&state) {
                    Ok(f) => fidelity.push(f),
                    Err(e) => {
                        return TrajectoryResult {
                            index,
                            times,
                            fidelity,
                            jumps,
                            aborted: true,
                            abort_reason: Some(format!("step {step}: {e}")),
                        }
                    }
                }
            }
        }

        TrajectoryResult {
            index,
            times,
            fidelity,
            jumps,
            aborted: false,
            abort_reason: None,
        }
    }
}

/// Runs trajectory `index` of `cfg`.
pub fn run_trajectory(cfg: &SimConfig, index: u64) -> Result<TrajectoryResult> {
    Ok(Simulation::new(cfg.clone())?.run_trajectory(index))
}
