//! Continuous quantum error correction by weak stabilizer measurement and
//! filtered Hamiltonian feedback.
//!
//! The crate simulates conditioned quantum trajectories of small stabilizer
//! codes. Each stabilizer generator is measured weakly; its noisy record is
//! smoothed by an exponential low-pass filter, and the signs of the filtered
//! signals select a feedback Hamiltonian that rotates the state back into the
//! codespace. Ensembles of trajectories give the average codeword fidelity.
//!
//! Modules, bottom up:
//!
//! * [`quantum`]: dense matrices, states, Pauli strings, fidelity.
//! * [`codes`]: the one-qubit toy code and the three-qubit bit-flip code.
//! * [`stochastic`]: per-trajectory Wiener and jump noise streams.
//! * [`dynamics`]: Euler steps of the stochastic Schrödinger and master equations.
//! * [`control`]: record filters and the feedback switching rule.
//! * [`simulator`]: trajectory loop, ensemble runner, presets, analytic baselines.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod codes;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod quantum;
pub mod simulator;
pub mod stochastic;

pub use codes::{bitflip_code, toy_code, CodeName, StabilizerCode};
pub use error::{Error, Result};
pub use quantum::{
    codeword_fidelity, expectation, normalize, pauli_matrix, renormalize, Complex64, ComplexMatrix,
    DensityMatrix, PauliString, StateVector,
};
pub use simulator::{
    analytic_f1, analytic_f3d, run_ensemble, run_ensemble_with_threads, run_trajectory,
    EnsembleResult, Mode, Preset, SimConfig, Simulation, SweepParam, TrajectoryResult,
};
