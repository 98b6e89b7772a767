//! Dense complex linear algebra on small Hilbert spaces of dimension 2ⁿ.
//!
//! Everything here is dense. Pauli strings additionally have a monomial
//! realization ([`PauliOp`]) used on the integration hot path: a Pauli string
//! maps each basis state to exactly one other basis state times a phase.
//!
//! Qubit ordering: the leftmost letter of a Pauli label acts on the most
//! significant bit of the computational basis index, so `"XII"` flips
//! `|000⟩` into `|100⟩` (index 4).

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};
use std::str::FromStr;

pub use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Numerical tolerances used by the checked operations of this module.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Maximum entrywise |A − A†| for an operator to count as Hermitian.
    pub hermitian: f64,
    /// Imaginary residue at which an expectation value is rejected.
    pub imag_error: f64,
    /// Norm (or trace) below which a state cannot be renormalized.
    pub norm_floor: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        hermitian: 1e-9,
        imag_error: 1e-6,
        norm_floor: 1e-12,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

fn check_power_of_two(dim: usize) -> Result<()> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::Contract(format!(
            "dimension {dim} is not a positive power of two"
        )));
    }
    Ok(())
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_power_of_two(dim)?;
        Ok(Self {
            dim,
            data: vec![ZERO; dim * dim],
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        Ok(m)
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        check_power_of_two(dim)?;
        check_dims(dim * dim, data.len())?;
        Ok(Self { dim, data })
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Result<Self> {
        let mut m = Self::zeros(diag.len())?;
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] = self.data[j * n + i].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    /// Kronecker product `self ⊗ other`; `self` becomes the more significant factor.
    pub fn kron(&self, other: &Self) -> Self {
        let (a, b) = (self.dim, other.dim);
        let n = a * b;
        let mut data = vec![ZERO; n * n];
        for i in 0..a {
            for j in 0..a {
                let s = self.data[i * a + j];
                if s == ZERO {
                    continue;
                }
                for k in 0..b {
                    for l in 0..b {
                        data[(i * b + k) * n + j * b + l] = s * other.data[k * b + l];
                    }
                }
            }
        }
        Self { dim: n, data }
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim, other.dim)?;
        Ok(&(self * other) - &(other * self))
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        check_dims(self.dim, v.len())?;
        let n = self.dim;
        Ok((0..n)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(v)
                    .map(|(a, x)| a * x)
                    .sum()
            })
            .collect())
    }

    /// Largest entrywise |A − A†|.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        worst
    }

    /// Largest entrywise |A − B|.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        let n = self.dim;
        let mut data = vec![ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        ComplexMatrix { dim: n, data }
    }
}

/// Pure state |ψ⟩.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Wraps raw amplitudes without normalizing them.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        check_power_of_two(amps.len())?;
        Ok(Self { amps })
    }

    /// Computational basis state `|index⟩` in dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        check_power_of_two(dim)?;
        if index >= dim {
            return Err(Error::Contract(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { amps })
    }

    /// Basis state from a bit label such as `"010"` (leftmost bit most significant).
    pub fn from_bits(bits: &str) -> Result<Self> {
        let mut index = 0usize;
        for c in bits.chars() {
            index = (index << 1)
                | match c {
                    '0' => 0,
                    '1' => 1,
                    other => {
                        return Err(Error::Contract(format!(
                            "invalid bit '{other}' in \"{bits}\""
                        )))
                    }
                };
        }
        Self::basis(1 << bits.len(), index)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        check_dims(self.dim(), other.dim())?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Rescales to unit norm in place. Global phase is kept.
    pub fn normalize_in_place(&mut self) -> Result<()> {
        let norm = self.norm();
        if !(norm > Tolerances::DEFAULT.norm_floor) {
            return Err(Error::DegenerateState { norm });
        }
        let inv = 1.0 / norm;
        for a in &mut self.amps {
            *a *= inv;
        }
        Ok(())
    }
}

/// Density operator ρ.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: ComplexMatrix,
}

impl DensityMatrix {
    /// Wraps a matrix without validating trace or positivity.
    pub fn from_matrix(m: ComplexMatrix) -> Self {
        Self { m }
    }

    /// |ψ⟩⟨ψ|.
    pub fn from_pure(psi: &StateVector) -> Self {
        let n = psi.dim();
        let a = psi.amplitudes();
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(a[i] * a[j].conj());
            }
        }
        Self {
            m: ComplexMatrix { dim: n, data },
        }
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Ok(Self {
            m: ComplexMatrix::identity(dim)?.scale(ONE / dim as f64),
        })
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn matrix_mut(&mut self) -> &mut ComplexMatrix {
        &mut self.m
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    /// Rescales to unit trace in place.
    pub fn renormalize_in_place(&mut self) -> Result<()> {
        let tr = self.trace();
        if !(tr > Tolerances::DEFAULT.norm_floor) {
            return Err(Error::DegenerateState { norm: tr });
        }
        let inv = 1.0 / tr;
        for z in self.m.as_mut_slice() {
            *z *= inv;
        }
        Ok(())
    }

    /// Replaces ρ by (ρ + ρ†)/2.
    pub fn symmetrize(&mut self) {
        let n = self.dim();
        let d = self.m.as_mut_slice();
        for i in 0..n {
            d[i * n + i].im = 0.0;
            for j in i + 1..n {
                let upper = d[i * n + j];
                let lower = d[j * n + i];
                let avg = (upper + lower.conj()) * 0.5;
                d[i * n + j] = avg;
                d[j * n + i] = avg.conj();
            }
        }
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.dim();
        let herm = nalgebra::DMatrix::<Complex64>::from_fn(n, n, |i, j| {
            (self.m[(i, j)] + self.m[(j, i)].conj()) * 0.5
        });
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// A state on which expectation values and fidelities can be evaluated.
pub trait QuantumState {
    fn dim(&self) -> usize;
    /// ⟨ψ|A|ψ⟩ or tr(ρA), without any checks.
    fn raw_expectation(&self, a: &ComplexMatrix) -> Complex64;
    /// ⟨ψ0|ρ|ψ0⟩ or |⟨ψ0|ψ⟩|², without any checks.
    fn raw_overlap(&self, psi0: &StateVector) -> f64;
}

impl QuantumState for StateVector {
    fn dim(&self) -> usize {
        self.amps.len()
    }

    fn raw_expectation(&self, a: &ComplexMatrix) -> Complex64 {
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            let row: Complex64 = (0..n).map(|j| a[(i, j)] * self.amps[j]).sum();
            acc += self.amps[i].conj() * row;
        }
        acc
    }

    fn raw_overlap(&self, psi0: &StateVector) -> f64 {
        psi0.amps
            .iter()
            .zip(&self.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr()
    }
}

impl QuantumState for DensityMatrix {
    fn dim(&self) -> usize {
        self.m.dim()
    }

    fn raw_expectation(&self, a: &ComplexMatrix) -> Complex64 {
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += self.m[(i, j)] * a[(j, i)];
            }
        }
        acc
    }

    fn raw_overlap(&self, psi0: &StateVector) -> f64 {
        let n = self.dim();
        let v = psi0.amplitudes();
        let mut acc = ZERO;
        for i in 0..n {
            if v[i] == ZERO {
                continue;
            }
            for j in 0..n {
                acc += v[i].conj() * self.m[(i, j)] * v[j];
            }
        }
        acc.re
    }
}

/// Expectation value of a Hermitian observable.
///
/// Residual imaginary parts are dropped; residues of `1e-6` or more signal a
/// broken state and are reported as a numerical-integrity error.
pub fn expectation<S: QuantumState>(a: &ComplexMatrix, s: &S) -> Result<f64> {
    expectation_with(a, s, &Tolerances::DEFAULT)
}

pub fn expectation_with<S: QuantumState>(
    a: &ComplexMatrix,
    s: &S,
    tol: &Tolerances,
) -> Result<f64> {
    check_dims(a.dim(), s.dim())?;
    if !a.is_hermitian(tol.hermitian) {
        return Err(Error::Contract(format!(
            "observable is not Hermitian (deviation {:e})",
            a.hermitian_deviation()
        )));
    }
    let v = s.raw_expectation(a);
    if v.im.abs() >= tol.imag_error {
        return Err(Error::NumericalIntegrity(format!(
            "expectation value has imaginary residue {:e}",
            v.im
        )));
    }
    Ok(v.re)
}

/// Codeword fidelity ⟨ψ0|ρ|ψ0⟩ (or |⟨ψ0|ψ⟩|²), clamped into [0, 1].
pub fn codeword_fidelity<S: QuantumState>(psi0: &StateVector, s: &S) -> Result<f64> {
    check_dims(psi0.dim(), s.dim())?;
    let f = s.raw_overlap(psi0);
    if !f.is_finite() {
        return Err(Error::NumericalIntegrity(format!("fidelity is {f}")));
    }
    Ok(f.clamp(0.0, 1.0))
}

/// Returns a unit-norm copy of `s`.
pub fn normalize(s: &StateVector) -> Result<StateVector> {
    let mut out = s.clone();
    out.normalize_in_place()?;
    Ok(out)
}

/// Returns a unit-trace copy of `rho`.
pub fn renormalize(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let mut out = rho.clone();
    out.renormalize_in_place()?;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliLetter {
    I,
    X,
    Y,
    Z,
}

impl PauliLetter {
    pub fn matrix(self) -> ComplexMatrix {
        let d = match self {
            PauliLetter::I => [ONE, ZERO, ZERO, ONE],
            PauliLetter::X => [ZERO, ONE, ONE, ZERO],
            PauliLetter::Y => [ZERO, -I, I, ZERO],
            PauliLetter::Z => [ONE, ZERO, ZERO, -ONE],
        };
        ComplexMatrix {
            dim: 2,
            data: d.to_vec(),
        }
    }

    fn flips(self) -> bool {
        matches!(self, PauliLetter::X | PauliLetter::Y)
    }

    /// ⟨row|σ|row ⊕ flip⟩ for a single qubit.
    fn row_phase(self, row_bit: bool) -> Complex64 {
        match (self, row_bit) {
            (PauliLetter::I, _) | (PauliLetter::X, _) => ONE,
            (PauliLetter::Z, false) => ONE,
            (PauliLetter::Z, true) => -ONE,
            (PauliLetter::Y, false) => -I,
            (PauliLetter::Y, true) => I,
        }
    }

    fn as_char(self) -> char {
        match self {
            PauliLetter::I => 'I',
            PauliLetter::X => 'X',
            PauliLetter::Y => 'Y',
            PauliLetter::Z => 'Z',
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    #[default]
    PlusOne,
    MinusOne,
    PlusI,
    MinusI,
}

impl Phase {
    pub fn value(self) -> Complex64 {
        match self {
            Phase::PlusOne => ONE,
            Phase::MinusOne => -ONE,
            Phase::PlusI => I,
            Phase::MinusI => -I,
        }
    }
}

/// An n-qubit Pauli operator with an overall phase, e.g. `ZZI` or `-iXY`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString {
    letters: Vec<PauliLetter>,
    phase: Phase,
}

impl PauliString {
    pub fn new(letters: Vec<PauliLetter>, phase: Phase) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::Contract(
                "Pauli string must act on at least one qubit".into(),
            ));
        }
        Ok(Self { letters, phase })
    }

    pub fn letters(&self) -> &[PauliLetter] {
        &self.letters
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.letters.len()
    }

    /// Hermitian iff the phase is real.
    pub fn is_hermitian(&self) -> bool {
        matches!(self.phase, Phase::PlusOne | Phase::MinusOne)
    }

    /// Symbolic commutation test: Pauli strings commute iff they anticommute
    /// on an even number of positions.
    pub fn commutes_with(&self, other: &Self) -> bool {
        self.letters
            .iter()
            .zip(&other.letters)
            .filter(|(a, b)| **a != PauliLetter::I && **b != PauliLetter::I && a != b)
            .count()
            % 2
            == 0
    }

    pub fn matrix(&self) -> ComplexMatrix {
        pauli_matrix(self)
    }

    pub fn op(&self) -> PauliOp {
        PauliOp::new(self)
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses labels such as `"ZZI"`, `"-XII"`, `"+iY"` or `"-iYZ"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, rest) = if let Some(r) = s.strip_prefix("-i") {
            (Phase::MinusI, r)
        } else if let Some(r) = s.strip_prefix("+i") {
            (Phase::PlusI, r)
        } else if let Some(r) = s.strip_prefix("i") {
            (Phase::PlusI, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (Phase::MinusOne, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (Phase::PlusOne, r)
        } else {
            (Phase::PlusOne, s)
        };
        let letters = rest
            .chars()
            .map(|c| match c {
                'I' => Ok(PauliLetter::I),
                'X' => Ok(PauliLetter::X),
                'Y' => Ok(PauliLetter::Y),
                'Z' => Ok(PauliLetter::Z),
                other => Err(Error::Contract(format!(
                    "invalid Pauli letter '{other}' in \"{s}\""
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(letters, phase)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase {
            Phase::PlusOne => "",
            Phase::MinusOne => "-",
            Phase::PlusI => "i",
            Phase::MinusI => "-i",
        };
        f.write_str(prefix)?;
        for l in &self.letters {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

/// Dense 2ⁿ×2ⁿ realization of a Pauli string as a Kronecker product, first
/// letter as the most significant factor.
pub fn pauli_matrix(p: &PauliString) -> ComplexMatrix {
    let mut letters = p.letters.iter();
    let first = letters.next().expect("non-empty Pauli string").matrix();
    letters
        .fold(first, |acc, l| acc.kron(&l.matrix()))
        .scale(p.phase.value())
}

/// Monomial realization of a Pauli string: `(P v)[i] = phase[i] · v[i ^ flip]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliOp {
    flip: usize,
    phases: Vec<Complex64>,
}

impl PauliOp {
    pub fn new(p: &PauliString) -> Self {
        let n = p.n_qubits();
        let dim = 1usize << n;
        let mut flip = 0usize;
        for (q, l) in p.letters.iter().enumerate() {
            if l.flips() {
                flip |= 1 << (n - 1 - q);
            }
        }
        let phases = (0..dim)
            .map(|row| {
                p.letters
                    .iter()
                    .enumerate()
                    .fold(p.phase.value(), |acc, (q, l)| {
                        acc * l.row_phase(row >> (n - 1 - q) & 1 == 1)
                    })
            })
            .collect();
        Self { flip, phases }
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    /// Bit mask of basis positions the operator flips.
    pub fn flip_mask(&self) -> usize {
        self.flip
    }

    pub fn phases(&self) -> &[Complex64] {
        &self.phases
    }

    /// Diagonal in the computational basis.
    pub fn is_diagonal(&self) -> bool {
        self.flip == 0
    }

    /// `out = P v`.
    #[inline]
    pub fn apply_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.phases[i] * v[i ^ self.flip];
        }
    }

    /// ⟨v|P|v⟩ (complex in general).
    #[inline]
    pub fn expectation(&self, v: &[Complex64]) -> Complex64 {
        let mut acc = ZERO;
        for (i, a) in v.iter().enumerate() {
            acc += a.conj() * self.phases[i] * v[i ^ self.flip];
        }
        acc
    }

    /// Real part of ⟨v|P|v⟩ for a Hermitian P.
    #[inline]
    pub fn expectation_re(&self, v: &[Complex64]) -> f64 {
        if self.flip == 0 {
            v.iter()
                .zip(&self.phases)
                .map(|(a, p)| a.norm_sqr() * p.re)
                .sum()
        } else {
            self.expectation(v).re
        }
    }

    /// tr(P ρ) for a row-major ρ.
    pub fn trace_with(&self, rho: &[Complex64]) -> Complex64 {
        let n = self.dim();
        (0..n)
            .map(|i| self.phases[i] * rho[(i ^ self.flip) * n + i])
            .sum()
    }

    /// `out = P ρ` (row-major).
    pub fn left_mul_into(&self, rho: &[Complex64], out: &mut [Complex64]) {
        let n = self.dim();
        for i in 0..n {
            let src = (i ^ self.flip) * n;
            let p = self.phases[i];
            for j in 0..n {
                out[i * n + j] = p * rho[src + j];
            }
        }
    }

    /// `out = ρ P` (row-major).
    pub fn right_mul_into(&self, rho: &[Complex64], out: &mut [Complex64]) {
        let n = self.dim();
        // (ρP)[i][j] = ρ[i][j^f] · phase[j^f]
        for i in 0..n {
            for j in 0..n {
                let k = j ^ self.flip;
                out[i * n + j] = rho[i * n + k] * self.phases[k];
            }
        }
    }

    /// `out = P ρ P†` (row-major).
    pub fn sandwich_into(&self, rho: &[Complex64], out: &mut [Complex64]) {
        let n = self.dim();
        for i in 0..n {
            let si = i ^ self.flip;
            let pi = self.phases[i];
            for j in 0..n {
                out[i * n + j] = pi * rho[si * n + (j ^ self.flip)] * self.phases[j].conj();
            }
        }
    }
}
