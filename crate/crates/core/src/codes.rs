//! Declarative error-correction setups.
//!
//! A [`StabilizerCode`] lists the error operators, the measured stabilizer
//! generators, the feedback Hamiltonians and a switching table that maps the
//! sign pattern of the filtered generator signals to the feedback channels
//! to drive. The table is data, so a new code needs no controller changes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{expectation, PauliString, StateVector};

/// Sign of a filtered generator signal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    /// `sign(0) = +1`.
    pub fn of(x: f64) -> Self {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn value(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

/// Bit `l` set iff generator `l` reads negative.
pub fn pattern_index(signs: &[Sign]) -> usize {
    signs
        .iter()
        .enumerate()
        .filter(|(_, s)| **s == Sign::Minus)
        .fold(0, |acc, (l, _)| acc | (1 << l))
}

/// One active feedback channel and the filter output that sets its amplitude.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackDrive {
    pub channel: usize,
    pub driver: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CodeName {
    Toy,
    Bitflip3,
}

impl CodeName {
    pub const ALL: [CodeName; 2] = [CodeName::Toy, CodeName::Bitflip3];

    pub fn as_str(self) -> &'static str {
        match self {
            CodeName::Toy => "toy",
            CodeName::Bitflip3 => "bitflip3",
        }
    }

    pub fn build(self) -> StabilizerCode {
        match self {
            CodeName::Toy => toy_code(),
            CodeName::Bitflip3 => bitflip_code(),
        }
    }
}

impl fmt::Display for CodeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CodeName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toy" => Ok(CodeName::Toy),
            "bitflip3" => Ok(CodeName::Bitflip3),
            other => Err(Error::Config(format!(
                "unknown code \"{other}\" (valid: toy, bitflip3)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilizerCode {
    name: CodeName,
    n_qubits: usize,
    errors: Vec<PauliString>,
    error_rates: Vec<f64>,
    generators: Vec<PauliString>,
    measurement_strengths: Vec<f64>,
    feedbacks: Vec<PauliString>,
    initial_codeword: StateVector,
    switch_table: Vec<Vec<FeedbackDrive>>,
}

impl StabilizerCode {
    /// Validates and assembles a code. `switch_table[pattern_index(signs)]`
    /// lists the channels to drive for that sign pattern.
    pub fn new(
        name: CodeName,
        errors: Vec<PauliString>,
        generators: Vec<PauliString>,
        feedbacks: Vec<PauliString>,
        initial_codeword: StateVector,
        switch_table: Vec<Vec<FeedbackDrive>>,
    ) -> Result<Self> {
        let n_qubits = generators
            .first()
            .ok_or_else(|| Error::Contract("a code needs at least one generator".into()))?
            .n_qubits();
        for p in errors.iter().chain(&generators).chain(&feedbacks) {
            if p.n_qubits() != n_qubits {
                return Err(Error::DimensionMismatch {
                    expected: n_qubits,
                    found: p.n_qubits(),
                });
            }
        }
        if initial_codeword.dim() != 1 << n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_qubits,
                found: initial_codeword.dim(),
            });
        }
        for (a, g) in generators.iter().enumerate() {
            if !g.is_hermitian() {
                return Err(Error::Contract(format!("generator {g} is not Hermitian")));
            }
            for h in &generators[a + 1..] {
                if !g.commutes_with(h) {
                    return Err(Error::Contract(format!(
                        "generators {g} and {h} anticommute"
                    )));
                }
            }
            let e = expectation(&g.matrix(), &initial_codeword)?;
            if (e - 1.0).abs() > 1e-9 {
                return Err(Error::Contract(format!(
                    "initial codeword is not a +1 eigenstate of {g} (⟨{g}⟩ = {e})"
                )));
            }
        }
        if let Some(f) = feedbacks.iter().find(|f| !f.is_hermitian()) {
            return Err(Error::Contract(format!("feedback {f} is not Hermitian")));
        }
        if switch_table.len() != 1 << generators.len() {
            return Err(Error::Contract(format!(
                "switch table has {} entries, expected {}",
                switch_table.len(),
                1 << generators.len()
            )));
        }
        if !switch_table[0].is_empty() {
            return Err(Error::Contract(
                "the all-(+1) sign pattern must not drive any feedback".into(),
            ));
        }
        for d in switch_table.iter().flatten() {
            if d.channel >= feedbacks.len() || d.driver >= generators.len() {
                return Err(Error::Contract(format!(
                    "switch entry {d:?} refers to a missing channel or filter"
                )));
            }
        }
        Ok(Self {
            name,
            n_qubits,
            error_rates: vec![1.0; errors.len()],
            measurement_strengths: vec![1.0; generators.len()],
            errors,
            generators,
            feedbacks,
            initial_codeword,
            switch_table,
        })
    }

    pub fn name(&self) -> CodeName {
        self.name
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn errors(&self) -> &[PauliString] {
        &self.errors
    }

    /// Per-error multipliers on the base error rate γ.
    pub fn error_rates(&self) -> &[f64] {
        &self.error_rates
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.generators
    }

    /// Per-generator multipliers on the base measurement strength κ.
    pub fn measurement_strengths(&self) -> &[f64] {
        &self.measurement_strengths
    }

    pub fn feedbacks(&self) -> &[PauliString] {
        &self.feedbacks
    }

    pub fn initial_codeword(&self) -> &StateVector {
        &self.initial_codeword
    }

    pub fn switch_table(&self) -> &[Vec<FeedbackDrive>] {
        &self.switch_table
    }

    pub fn with_initial_codeword(mut self, psi: StateVector) -> Result<Self> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.dim(),
            });
        }
        self.initial_codeword = psi;
        Ok(self)
    }

    /// Channels to drive for a generator sign pattern.
    pub fn active_channels(&self, signs: &[Sign]) -> Result<&[FeedbackDrive]> {
        if signs.len() != self.generators.len() {
            return Err(Error::DimensionMismatch {
                expected: self.generators.len(),
                found: signs.len(),
            });
        }
        Ok(&self.switch_table[pattern_index(signs)])
    }
}

/// One qubit protected in `|0⟩` against `X` flips by measuring `Z`.
pub fn toy_code() -> StabilizerCode {
    let x: PauliString = "X".parse().expect("valid label");
    StabilizerCode::new(
        CodeName::Toy,
        vec![x.clone()],
        vec!["Z".parse().expect("valid label")],
        vec![x],
        StateVector::from_bits("0").expect("valid bits"),
        vec![
            vec![],
            vec![FeedbackDrive {
                channel: 0,
                driver: 0,
            }],
        ],
    )
    .expect("toy code is consistent")
}

/// Three-qubit bit-flip code with generators `ZZI`, `IZZ`.
///
/// | ZZI | IZZ | feedback | driven by |
/// |-----|-----|----------|-----------|
/// | +1  | +1  | none     |           |
/// | −1  | +1  | XII      | R₁        |
/// | +1  | −1  | IIX      | R₂        |
/// | −1  | −1  | IXI      | R₁        |
pub fn bitflip_code() -> StabilizerCode {
    let flips: Vec<PauliString> = ["XII", "IXI", "IIX"]
        .iter()
        .map(|s| s.parse().expect("valid label"))
        .collect();
    let drive = |channel, driver| vec![FeedbackDrive { channel, driver }];
    StabilizerCode::new(
        CodeName::Bitflip3,
        flips.clone(),
        vec![
            "ZZI".parse().expect("valid label"),
            "IZZ".parse().expect("valid label"),
        ],
        flips,
        StateVector::from_bits("000").expect("valid bits"),
        vec![vec![], drive(0, 0), drive(2, 1), drive(1, 0)],
    )
    .expect("bit-flip code is consistent")
}
