//! Single Euler steps of the conditioned evolution.
//!
//! Two evolution laws are provided for any [`StabilizerCode`]:
//!
//! * the stochastic Schrödinger equation (pure states, perfect detection),
//!   in which errors appear as jumps `|ψ⟩ → E_k|ψ⟩` and each generator is
//!   weakly measured with a diffusive record;
//! * the stochastic master equation (density matrices), in which errors are
//!   averaged into dissipators and detection may be inefficient (`η < 1`).
//!
//! Both add the feedback Hamiltonian `λ Σ_k G_k F_k`. All expectation values
//! of one step are taken on the same state (after jumps, before any other
//! increment), then the state is renormalized.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codes::StabilizerCode;
use crate::error::{Error, Result};
use crate::quantum::{Complex64, ComplexMatrix, DensityMatrix, PauliOp, StateVector};
use crate::stochastic::{check_jump_probability, TrajectoryNoise};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Eigenvalue below which an integrated density matrix is declared broken.
pub const POSITIVITY_FLOOR: f64 = -1e-3;

/// Rates and controls for one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInput<'a> {
    pub kappa: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub eta: f64,
    pub dt: f64,
    /// Feedback conditioning signals `G_k`, one per feedback channel.
    pub feedback: &'a [f64],
}

impl StepInput<'_> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("lambda", self.lambda),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Contract(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Contract(format!(
                "eta must lie in (0, 1], got {}",
                self.eta
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Contract(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        Ok(())
    }
}

/// Measurement record increments `dQ_l` of one step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RecordIncrement {
    pub dq: Vec<f64>,
}

/// Raw noise of one step: Wiener increments per generator and jump
/// indicators per error.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Increments {
    pub dw: Vec<f64>,
    pub dn: Vec<bool>,
}

impl Increments {
    pub fn zeros(n_generators: usize, n_errors: usize) -> Self {
        Self {
            dw: vec![0.0; n_generators],
            dn: vec![false; n_errors],
        }
    }

    /// Fills `self` from the trajectory's streams. Jump probabilities are
    /// `γ · rate_k · dt`; the caller has validated them.
    #[inline]
    pub fn sample(&mut self, noise: &mut TrajectoryNoise, jump_probabilities: &[f64], dt: f64) {
        for (w, s) in self.dw.iter_mut().zip(&mut noise.measurement) {
            *w = s.wiener(dt);
        }
        for ((n, s), p) in self
            .dn
            .iter_mut()
            .zip(&mut noise.jumps)
            .zip(jump_probabilities)
        {
            *n = s.bernoulli(*p);
        }
    }

    /// Draws Wiener increments only; jump flags are cleared.
    #[inline]
    pub fn sample_diffusive(&mut self, noise: &mut TrajectoryNoise, dt: f64) {
        for (w, s) in self.dw.iter_mut().zip(&mut noise.measurement) {
            *w = s.wiener(dt);
        }
        self.dn.iter_mut().for_each(|n| *n = false);
    }
}

/// Monomial realizations of a code's operators, built once per run.
#[derive(Clone, Debug)]
pub struct CodeOperators {
    pub generators: Vec<PauliOp>,
    pub errors: Vec<PauliOp>,
    pub feedbacks: Vec<PauliOp>,
    pub kappa_scale: Vec<f64>,
    pub gamma_scale: Vec<f64>,
}

impl CodeOperators {
    pub fn new(code: &StabilizerCode) -> Self {
        Self {
            generators: code.generators().iter().map(|p| p.op()).collect(),
            errors: code.errors().iter().map(|p| p.op()).collect(),
            feedbacks: code.feedbacks().iter().map(|p| p.op()).collect(),
            kappa_scale: code.measurement_strengths().to_vec(),
            gamma_scale: code.error_rates().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.generators[0].dim()
    }

    /// Per-step jump probabilities `γ · rate_k · dt`, validated.
    pub fn jump_probabilities(&self, gamma: f64, dt: f64) -> Result<Vec<f64>> {
        self.gamma_scale
            .iter()
            .map(|s| {
                check_jump_probability(gamma * s, dt)?;
                Ok(gamma * s * dt)
            })
            .collect()
    }
}

/// Euler integrator for the stochastic Schrödinger equation with jumps.
#[derive(Clone, Debug)]
pub struct SseStepper {
    ops: CodeOperators,
    incr: Vec<Complex64>,
    m_psi: Vec<Complex64>,
    mm_psi: Vec<Complex64>,
}

impl SseStepper {
    pub fn new(code: &StabilizerCode) -> Self {
        let ops = CodeOperators::new(code);
        let dim = ops.dim();
        Self {
            ops,
            incr: vec![ZERO; dim],
            m_psi: vec![ZERO; dim],
            mm_psi: vec![ZERO; dim],
        }
    }

    pub fn operators(&self) -> &CodeOperators {
        &self.ops
    }

    /// Advances `psi` by one step with the given increments and writes the
    /// record increments into `dq`.
    ///
    /// Order: jumps, then drift, diffusion and feedback evaluated on the
    /// post-jump state, then normalization.
    pub fn step(
        &mut self,
        psi: &mut StateVector,
        inc: &Increments,
        p: &StepInput,
        dq: &mut [f64],
    ) -> Result<()> {
        if p.eta != 1.0 {
            return Err(Error::Contract(
                "the pure-state equation models perfect detection only; use the SME for eta < 1"
                    .into(),
            ));
        }
        let dim = self.ops.dim();
        if psi.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: psi.dim(),
            });
        }
        let dt = p.dt;

        for (e, hit) in self.ops.errors.iter().zip(&inc.dn) {
            if *hit {
                e.apply_into(psi.amplitudes(), &mut self.m_psi);
                psi.amplitudes_mut().copy_from_slice(&self.m_psi);
            }
        }

        self.incr.iter_mut().for_each(|z| *z = ZERO);
        let v = psi.amplitudes();
        for (l, m_op) in self.ops.generators.iter().enumerate() {
            let kappa = p.kappa * self.ops.kappa_scale[l];
            let m = m_op.expectation_re(v);
            m_op.apply_into(v, &mut self.m_psi);
            m_op.apply_into(&self.m_psi, &mut self.mm_psi);
            let drift = -0.5 * kappa * dt;
            let diff = kappa.sqrt() * inc.dw[l];
            let terms = v.iter().zip(&self.m_psi).zip(&self.mm_psi);
            for (out, ((x, mx), mmx)) in self.incr.iter_mut().zip(terms) {
                // (1 − m M)² ψ = ψ − 2m Mψ + m² M²ψ
                let sq = x - mx * (2.0 * m) + mmx * (m * m);
                *out += sq * drift + (mx - x * m) * diff;
            }
            dq[l] = 2.0 * kappa * m * dt + diff;
        }

        for (k, f_op) in self.ops.feedbacks.iter().enumerate() {
            let g = p.feedback[k];
            if g == 0.0 {
                continue;
            }
            f_op.apply_into(v, &mut self.m_psi);
            // −iλ G F ψ dt
            let c = Complex64::new(0.0, -p.lambda * g * dt);
            for i in 0..dim {
                self.incr[i] += self.m_psi[i] * c;
            }
        }

        for (a, d) in psi.amplitudes_mut().iter_mut().zip(&self.incr) {
            *a += d;
        }
        psi.normalize_in_place()
    }
}

/// Update rule used for one step of the master equation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SmeScheme {
    /// Plain Euler–Maruyama: ρ += dρ with every term of the equation
    /// evaluated at the start of the step.
    Euler,
    /// The same first-order increments written as a completely positive map,
    /// `ρ ← (KρK† + (1−η)κ dt Σ MρM + γ dt Σ EρE†) / tr`, with
    /// `K = 1 − (iλΣG F + ½κΣM² + ½γΣE†E) dt + √(κη) Σ M dy` and
    /// `dy = 2√(κη)⟨M⟩dt + dW`. Agrees with [`SmeScheme::Euler`] to first
    /// order and keeps ρ positive semidefinite.
    #[default]
    Kraus,
}

impl SmeScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            SmeScheme::Euler => "euler",
            SmeScheme::Kraus => "kraus",
        }
    }
}

impl fmt::Display for SmeScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SmeScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(SmeScheme::Euler),
            "kraus" => Ok(SmeScheme::Kraus),
            other => Err(Error::Config(format!(
                "unknown sme scheme \"{other}\" (valid: euler, kraus)"
            ))),
        }
    }
}

/// Integrator for the stochastic master equation with efficiency η.
#[derive(Clone, Debug)]
pub struct SmeStepper {
    ops: CodeOperators,
    scheme: SmeScheme,
    drho: Vec<Complex64>,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
}

impl SmeStepper {
    /// Plain Euler stepper.
    pub fn new(code: &StabilizerCode) -> Self {
        Self::with_scheme(code, SmeScheme::Euler)
    }

    /// Generators and feedback operators must be Hermitian.
    pub fn with_scheme(code: &StabilizerCode, scheme: SmeScheme) -> Self {
        let ops = CodeOperators::new(code);
        let n = ops.dim() * ops.dim();
        Self {
            ops,
            scheme,
            drho: vec![ZERO; n],
            a: vec![ZERO; n],
            b: vec![ZERO; n],
        }
    }

    pub fn scheme(&self) -> SmeScheme {
        self.scheme
    }

    pub fn operators(&self) -> &CodeOperators {
        &self.ops
    }

    /// Advances `rho` by one step using the Wiener increments in `inc.dw`
    /// (jump flags are ignored: errors enter as dissipators).
    ///
    /// With `check_positivity`, the smallest eigenvalue of the result is
    /// computed and anything below [`POSITIVITY_FLOOR`] is reported.
    pub fn step(
        &mut self,
        rho: &mut DensityMatrix,
        inc: &Increments,
        p: &StepInput,
        dq: &mut [f64],
        check_positivity: bool,
    ) -> Result<()> {
        let dim = self.ops.dim();
        if rho.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: rho.dim(),
            });
        }
        match self.scheme {
            SmeScheme::Euler => self.euler(rho, inc, p, dq),
            SmeScheme::Kraus => self.kraus(rho, inc, p, dq),
        }
        rho.symmetrize();
        rho.renormalize_in_place()?;
        if check_positivity {
            let low = rho.min_eigenvalue();
            if low < POSITIVITY_FLOOR {
                return Err(Error::NumericalIntegrity(format!(
                    "density matrix eigenvalue {low:e} below {POSITIVITY_FLOOR:e}; reduce dt"
                )));
            }
        }
        Ok(())
    }

    fn euler(&mut self, rho: &mut DensityMatrix, inc: &Increments, p: &StepInput, dq: &mut [f64]) {
        let dim = self.ops.dim();
        let dt = p.dt;
        let sqrt_eta = p.eta.sqrt();
        self.drho.iter_mut().for_each(|z| *z = ZERO);
        let r = rho.matrix().as_slice();

        for (k, e) in self.ops.errors.iter().enumerate() {
            let c = p.gamma * self.ops.gamma_scale[k] * dt;
            if c == 0.0 {
                continue;
            }
            // D[E]ρ = EρE† − ρ for unitary E
            e.sandwich_into(r, &mut self.a);
            for ((d, a), x) in self.drho.iter_mut().zip(&self.a).zip(r) {
                *d += (a - x) * c;
            }
        }

        for (l, m_op) in self.ops.generators.iter().enumerate() {
            let kappa = p.kappa * self.ops.kappa_scale[l];
            let m = m_op.trace_with(r).re;
            let c_diss = kappa * dt;
            let c_inn = (kappa * p.eta).sqrt() * inc.dw[l];
            m_op.sandwich_into(r, &mut self.a);
            for ((d, a), x) in self.drho.iter_mut().zip(&self.a).zip(r) {
                *d += (a - x) * c_diss;
            }
            // H[M]ρ = Mρ + ρM − 2⟨M⟩ρ
            m_op.left_mul_into(r, &mut self.a);
            m_op.right_mul_into(r, &mut self.b);
            let terms = self.a.iter().zip(&self.b).zip(r);
            for (d, ((a, b), x)) in self.drho.iter_mut().zip(terms) {
                *d += (a + b - x * (2.0 * m)) * c_inn;
            }
            dq[l] = 2.0 * kappa * sqrt_eta * m * dt + kappa.sqrt() * inc.dw[l];
        }

        for (k, f_op) in self.ops.feedbacks.iter().enumerate() {
            let g = p.feedback[k];
            if g == 0.0 {
                continue;
            }
            // −iλG[F, ρ] dt
            let c = Complex64::new(0.0, -p.lambda * g * dt);
            f_op.left_mul_into(r, &mut self.a);
            f_op.right_mul_into(r, &mut self.b);
            for i in 0..dim * dim {
                self.drho[i] += (self.a[i] - self.b[i]) * c;
            }
        }

        for (x, d) in rho.matrix_mut().as_mut_slice().iter_mut().zip(&self.drho) {
            *x += d;
        }
    }

    fn kraus(&mut self, rho: &mut DensityMatrix, inc: &Increments, p: &StepInput, dq: &mut [f64]) {
        let dim = self.ops.dim();
        let n = dim * dim;
        let dt = p.dt;
        let sqrt_eta = p.eta.sqrt();
        let r = rho.matrix().as_slice();

        // Coefficients of K on I, the generators and the feedback operators.
        let mut k0 = 1.0;
        let mut km = Vec::with_capacity(self.ops.generators.len());
        for (k, _) in self.ops.errors.iter().enumerate() {
            k0 -= 0.5 * p.gamma * self.ops.gamma_scale[k] * dt;
        }
        for (l, m_op) in self.ops.generators.iter().enumerate() {
            let kappa = p.kappa * self.ops.kappa_scale[l];
            let m = m_op.trace_with(r).re;
            let ke = (kappa * p.eta).sqrt();
            let dy = 2.0 * ke * m * dt + inc.dw[l];
            k0 -= 0.5 * kappa * dt;
            km.push(ke * dy);
            dq[l] = 2.0 * kappa * sqrt_eta * m * dt + kappa.sqrt() * inc.dw[l];
        }
        let kf: Vec<Complex64> = p
            .feedback
            .iter()
            .map(|g| Complex64::new(0.0, -p.lambda * g * dt))
            .collect();

        // drho = Kρ
        for (d, x) in self.drho.iter_mut().zip(r) {
            *d = x * k0;
        }
        for (m_op, c) in self.ops.generators.iter().zip(&km) {
            m_op.left_mul_into(r, &mut self.a);
            for (d, a) in self.drho.iter_mut().zip(&self.a) {
                *d += a * c;
            }
        }
        for (f_op, c) in self.ops.feedbacks.iter().zip(&kf) {
            if c.im == 0.0 {
                continue;
            }
            f_op.left_mul_into(r, &mut self.a);
            for (d, a) in self.drho.iter_mut().zip(&self.a) {
                *d += a * c;
            }
        }

        // b = (Kρ)K† plus the incoherent terms, all from the old ρ.
        for (b, d) in self.b.iter_mut().zip(&self.drho) {
            *b = d * k0;
        }
        for (m_op, c) in self.ops.generators.iter().zip(&km) {
            m_op.right_mul_into(&self.drho, &mut self.a);
            for (b, a) in self.b.iter_mut().zip(&self.a) {
                *b += a * c;
            }
        }
        for (f_op, c) in self.ops.feedbacks.iter().zip(&kf) {
            if c.im == 0.0 {
                continue;
            }
            f_op.right_mul_into(&self.drho, &mut self.a);
            let c = c.conj();
            for (b, a) in self.b.iter_mut().zip(&self.a) {
                *b += a * c;
            }
        }
        for (l, m_op) in self.ops.generators.iter().enumerate() {
            let c = (1.0 - p.eta) * p.kappa * self.ops.kappa_scale[l] * dt;
            if c == 0.0 {
                continue;
            }
            m_op.sandwich_into(r, &mut self.a);
            for (b, a) in self.b.iter_mut().zip(&self.a) {
                *b += a * c;
            }
        }
        for (k, e) in self.ops.errors.iter().enumerate() {
            let c = p.gamma * self.ops.gamma_scale[k] * dt;
            if c == 0.0 {
                continue;
            }
            e.sandwich_into(r, &mut self.a);
            for (b, a) in self.b.iter_mut().zip(&self.a) {
                *b += a * c;
            }
        }
        rho.matrix_mut().as_mut_slice()[..n].copy_from_slice(&self.b);
    }
}

/// One step of the pure-state equation, sampling its own increments.
///
/// Returns the new state, the record increments and the jump indicators.
pub fn sse_step(
    state: &StateVector,
    code: &StabilizerCode,
    noise: &mut TrajectoryNoise,
    p: &StepInput,
) -> Result<(StateVector, RecordIncrement, Vec<bool>)> {
    p.validate()?;
    let mut stepper = SseStepper::new(code);
    let probs = stepper.ops.jump_probabilities(p.gamma, p.dt)?;
    let mut inc = Increments::zeros(code.generators().len(), code.errors().len());
    inc.sample(noise, &probs, p.dt);
    let mut psi = state.clone();
    let mut dq = vec![0.0; code.generators().len()];
    stepper.step(&mut psi, &inc, p, &mut dq)?;
    Ok((psi, RecordIncrement { dq }, inc.dn))
}

/// One step of the master equation, sampling its own increments.
pub fn sme_step(
    rho: &DensityMatrix,
    code: &StabilizerCode,
    noise: &mut TrajectoryNoise,
    p: &StepInput,
) -> Result<(DensityMatrix, RecordIncrement)> {
    p.validate()?;
    let mut stepper = SmeStepper::new(code);
    let mut inc = Increments::zeros(code.generators().len(), code.errors().len());
    inc.sample_diffusive(noise, p.dt);
    let mut out = rho.clone();
    let mut dq = vec![0.0; code.generators().len()];
    stepper.step(&mut out, &inc, p, &mut dq, true)?;
    Ok((out, RecordIncrement { dq }))
}

/// Lindblad dissipator `D[A]ρ = AρA† − ½(A†Aρ + ρA†A)`.
pub fn dissipator(a: &ComplexMatrix, rho: &DensityMatrix) -> Result<ComplexMatrix> {
    if a.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: a.dim(),
        });
    }
    let r = rho.matrix();
    let ad = a.adjoint();
    let ada = &ad * a;
    let half = Complex64::new(0.5, 0.0);
    Ok(&(&(a * r) * &ad) - &(&(&ada * r) + &(r * &ada)).scale(half))
}

/// Measurement innovation `H[A]ρ = Aρ + ρA† − ρ·tr(Aρ + ρA†)`.
pub fn innovation(a: &ComplexMatrix, rho: &DensityMatrix) -> Result<ComplexMatrix> {
    if a.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: a.dim(),
        });
    }
    let r = rho.matrix();
    let s = &(a * r) + &(r * &a.adjoint());
    let tr = s.trace();
    Ok(&s - &r.scale(tr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{bitflip_code, toy_code};
    use crate::quantum::{codeword_fidelity, expectation, normalize};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn input(kappa: f64, gamma: f64, lambda: f64, eta: f64, dt: f64, g: &[f64]) -> StepInput<'_> {
        StepInput {
            kappa,
            gamma,
            lambda,
            eta,
            dt,
            feedback: g,
        }
    }

    fn plus() -> StateVector {
        normalize(&StateVector::new(vec![c(1.0), c(1.0)]).unwrap()).unwrap()
    }

    // Dense reference for one SME Euler step, built from the public
    // superoperators and full matrices.
    fn dense_sme_step(
        rho: &DensityMatrix,
        code: &StabilizerCode,
        dw: &[f64],
        p: &StepInput,
    ) -> (ComplexMatrix, Vec<f64>) {
        let r = rho.matrix();
        let mut d = ComplexMatrix::zeros(r.dim()).unwrap();
        for e in code.errors() {
            d = &d
                + &dissipator(&e.matrix(), rho)
                    .unwrap()
                    .scale(c(p.gamma * p.dt));
        }
        let mut dq = vec![];
        for (l, g) in code.generators().iter().enumerate() {
            let gm = g.matrix();
            d = &d + &dissipator(&gm, rho).unwrap().scale(c(p.kappa * p.dt));
            d = &d
                + &innovation(&gm, rho)
                    .unwrap()
                    .scale(c((p.kappa * p.eta).sqrt() * dw[l]));
            let m = expectation(&gm, rho).unwrap();
            dq.push(2.0 * p.kappa * p.eta.sqrt() * m * p.dt + p.kappa.sqrt() * dw[l]);
        }
        for (k, f) in code.feedbacks().iter().enumerate() {
            let comm = f.matrix().commutator(r).unwrap();
            d = &d + &comm.scale(Complex64::new(0.0, -p.lambda * p.feedback[k] * p.dt));
        }
        let mut out = r + &d;
        let tr = out.trace();
        out = out.scale(Complex64::new(1.0, 0.0) / tr);
        (out, dq)
    }

    #[test]
    fn dissipator_and_innovation_examples() {
        let zero = DensityMatrix::from_pure(&StateVector::basis(2, 0).unwrap());
        let z = "Z".parse::<crate::quantum::PauliString>().unwrap().matrix();
        let x = "X".parse::<crate::quantum::PauliString>().unwrap().matrix();
        let zeros = ComplexMatrix::zeros(2).unwrap();
        assert_eq!(dissipator(&z, &zero).unwrap().max_abs_diff(&zeros), 0.0);
        assert_eq!(innovation(&z, &zero).unwrap().max_abs_diff(&zeros), 0.0);
        let expect = ComplexMatrix::from_diagonal(&[c(-1.0), c(1.0)]).unwrap();
        assert_eq!(dissipator(&x, &zero).unwrap().max_abs_diff(&expect), 0.0);
        assert!(dissipator(&ComplexMatrix::zeros(4).unwrap(), &zero).is_err());
        assert!(innovation(&ComplexMatrix::zeros(4).unwrap(), &zero).is_err());
    }

    #[test]
    fn sse_codespace_is_a_fixed_point() {
        let code = bitflip_code();
        let mut st = SseStepper::new(&code);
        let mut psi = code.initial_codeword().clone();
        let g = [0.0; 3];
        let p = input(150.0, 0.0, 0.0, 1.0, 1e-4, &g);
        let mut dq = [0.0; 2];
        for dw in [0.3, -1.2, 0.01] {
            let inc = Increments {
                dw: vec![dw, -dw],
                dn: vec![false; 3],
            };
            st.step(&mut psi, &inc, &p, &mut dq).unwrap();
            assert_eq!(&psi, code.initial_codeword());
            assert_eq!(dq[0], 2.0 * 150.0 * 1e-4 + 150f64.sqrt() * dw);
        }
    }

    #[test]
    fn sse_error_eigenstate_is_a_fixed_point() {
        let code = toy_code();
        let mut st = SseStepper::new(&code);
        let one = StateVector::basis(2, 1).unwrap();
        let mut psi = one.clone();
        let g = [0.0];
        let p = input(150.0, 0.0, 0.0, 1.0, 1e-4, &g);
        let mut dq = [0.0];
        st.step(&mut psi, &Increments::zeros(1, 1), &p, &mut dq)
            .unwrap();
        assert_eq!(psi, one);
        assert_eq!(dq[0], -2.0 * 150.0 * 1e-4);
    }

    #[test]
    fn sse_jump_then_record() {
        let code = toy_code();
        let mut st = SseStepper::new(&code);
        let (kappa, dt, dw) = (150.0, 1e-4, 0.004);
        let mut psi = StateVector::basis(2, 0).unwrap();
        let g = [0.0];
        let p = input(kappa, 0.5, 0.0, 1.0, dt, &g);
        let mut dq = [0.0];
        let inc = Increments {
            dw: vec![dw],
            dn: vec![true],
        };
        st.step(&mut psi, &inc, &p, &mut dq).unwrap();
        assert_eq!(psi, StateVector::basis(2, 1).unwrap());
        assert!((dq[0] - (-2.0 * kappa * dt + kappa.sqrt() * dw)).abs() < 1e-15);
    }

    #[test]
    fn sse_rejects_inefficient_detection() {
        let code = toy_code();
        let mut st = SseStepper::new(&code);
        let mut psi = StateVector::basis(2, 0).unwrap();
        let g = [0.0];
        let p = input(1.0, 0.0, 0.0, 0.9, 1e-4, &g);
        assert!(matches!(
            st.step(&mut psi, &Increments::zeros(1, 1), &p, &mut [0.0]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn sse_feedback_rotates_towards_codeword() {
        // From |1⟩ with G = −1 the X rotation moves amplitude into |0⟩.
        let code = toy_code();
        let mut st = SseStepper::new(&code);
        let mut psi = StateVector::basis(2, 1).unwrap();
        let g = [-1.0];
        let p = input(0.0, 0.0, 100.0, 1.0, 1e-4, &g);
        let mut dq = [0.0];
        let mut f_prev = 0.0;
        for _ in 0..100 {
            st.step(&mut psi, &Increments::zeros(1, 1), &p, &mut dq)
                .unwrap();
            let f = codeword_fidelity(code.initial_codeword(), &psi).unwrap();
            assert!(f > f_prev);
            f_prev = f;
        }
        // Rotation angle λ t = 1 rad: fidelity sin²(1) up to Euler error.
        assert!((f_prev - 1f64.sin().powi(2)).abs() < 1e-2);
    }

    #[test]
    fn sme_codespace_is_a_fixed_point() {
        let code = bitflip_code();
        for scheme in [SmeScheme::Euler, SmeScheme::Kraus] {
            let mut st = SmeStepper::with_scheme(&code, scheme);
            let rho0 = DensityMatrix::from_pure(code.initial_codeword());
            let mut rho = rho0.clone();
            let g = [0.0; 3];
            let (kappa, dt) = (150.0, 1e-4);
            let p = input(kappa, 0.0, 0.0, 1.0, dt, &g);
            let mut dq = [0.0; 2];
            let inc = Increments {
                dw: vec![0.01, -0.02],
                dn: vec![false; 3],
            };
            st.step(&mut rho, &inc, &p, &mut dq, true).unwrap();
            assert!(rho.matrix().max_abs_diff(rho0.matrix()) < 1e-14, "{scheme}");
            assert!((dq[0] - (2.0 * kappa * dt + kappa.sqrt() * 0.01)).abs() < 1e-15);
            assert!((dq[1] - (2.0 * kappa * dt - kappa.sqrt() * 0.02)).abs() < 1e-15);
        }
    }

    #[test]
    fn sme_dephasing_of_plus_state() {
        let code = toy_code();
        let mut st = SmeStepper::new(&code);
        let mut rho = DensityMatrix::from_pure(&plus());
        let g = [0.0];
        let (kappa, dt) = (150.0, 1e-4);
        let p = input(kappa, 0.0, 0.0, 1.0, dt, &g);
        st.step(&mut rho, &Increments::zeros(1, 1), &p, &mut [0.0], true)
            .unwrap();
        let off = rho.matrix()[(0, 1)].re;
        assert!((off - 0.5 * (1.0 - 2.0 * kappa * dt)).abs() < 1e-15);
        assert!((rho.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sme_matches_dense_superoperators() {
        let code = bitflip_code();
        let mut st = SmeStepper::new(&code);
        // A generic mixed state.
        let psi = normalize(
            &StateVector::new(
                (0..8)
                    .map(|k| Complex64::new(1.0 + k as f64, 0.5 - 0.2 * k as f64))
                    .collect(),
            )
            .unwrap(),
        )
        .unwrap();
        let mix = DensityMatrix::maximally_mixed(8).unwrap();
        let rho = DensityMatrix::from_matrix(
            &DensityMatrix::from_pure(&psi).matrix().scale(c(0.7)) + &mix.matrix().scale(c(0.3)),
        );
        let g = [-0.4, 0.0, -0.9];
        let dw = [0.012, -0.007];
        for eta in [1.0, 0.6] {
            let p = input(150.0, 0.3, 150.0, eta, 1e-4, &g);
            let (want, want_dq) = dense_sme_step(&rho, &code, &dw, &p);
            let mut got = rho.clone();
            let mut dq = [0.0; 2];
            let inc = Increments {
                dw: dw.to_vec(),
                dn: vec![false; 3],
            };
            st.step(&mut got, &inc, &p, &mut dq, true).unwrap();
            assert!(got.matrix().max_abs_diff(&want) < 1e-14);
            for (a, b) in dq.iter().zip(&want_dq) {
                assert!((a - b).abs() < 1e-15);
            }
            assert_eq!(got.matrix().hermitian_deviation(), 0.0);
            assert!((got.trace() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sme_reports_positivity_loss() {
        let code = toy_code();
        let mut st = SmeStepper::new(&code);
        let mut rho = DensityMatrix::from_pure(&plus());
        let g = [0.0];
        // A huge innovation kick drives an eigenvalue far negative.
        let p = input(1.0, 0.0, 0.0, 1.0, 1e-4, &g);
        let inc = Increments {
            dw: vec![5.0],
            dn: vec![false],
        };
        assert!(matches!(
            st.step(&mut rho, &inc, &p, &mut [0.0], true),
            Err(Error::NumericalIntegrity(_))
        ));
    }

    #[test]
    fn sme_hermiticity_and_trace_over_many_steps() {
        let code = bitflip_code();
        let mut st = SmeStepper::new(&code);
        let mut noise = TrajectoryNoise::new(5, 0, 2, 3);
        let mut rho = DensityMatrix::from_pure(&plus_state_3());
        let g = [0.0, -0.5, 0.0];
        let p = input(150.0, 1.0, 150.0, 0.8, 1e-4, &g);
        let mut inc = Increments::zeros(2, 3);
        let mut dq = [0.0; 2];
        for _ in 0..2000 {
            inc.sample_diffusive(&mut noise, p.dt);
            st.step(&mut rho, &inc, &p, &mut dq, false).unwrap();
            assert!(rho.matrix().hermitian_deviation() <= 1e-12);
            assert!((rho.trace() - 1.0).abs() <= 1e-12);
        }
        assert!(rho.min_eigenvalue() > -1e-6);
    }

    fn generic_mixed_state() -> DensityMatrix {
        let psi = normalize(
            &StateVector::new(
                (0..8)
                    .map(|k| Complex64::new(1.0 + k as f64, 0.5 - 0.2 * k as f64))
                    .collect(),
            )
            .unwrap(),
        )
        .unwrap();
        let mix = DensityMatrix::maximally_mixed(8).unwrap();
        DensityMatrix::from_matrix(
            &DensityMatrix::from_pure(&psi).matrix().scale(c(0.7)) + &mix.matrix().scale(c(0.3)),
        )
    }

    #[test]
    fn kraus_agrees_with_euler_to_first_order() {
        // One generator and dW² = dt: the two rules differ only at order
        // dt^{3/2}, so the gap shrinks by about 4^{3/2} = 8 when dt shrinks
        // by 4. (With several generators the dW_l·dW_m cross terms differ at
        // order dt and agree only on average, see the next test.)
        let code = toy_code();
        let psi =
            normalize(&StateVector::new(vec![c(0.8), Complex64::new(0.3, 0.5)]).unwrap()).unwrap();
        let rho = DensityMatrix::from_matrix(
            &DensityMatrix::from_pure(&psi).matrix().scale(c(0.9))
                + &DensityMatrix::maximally_mixed(2)
                    .unwrap()
                    .matrix()
                    .scale(c(0.1)),
        );
        let g = [-0.7];
        for eta in [1.0, 0.6] {
            let gap = |dt: f64| {
                let p = input(150.0, 0.3, 150.0, eta, dt, &g);
                let inc = Increments {
                    dw: vec![dt.sqrt()],
                    dn: vec![false],
                };
                let mut a = rho.clone();
                let mut b = rho.clone();
                let (mut qa, mut qb) = ([0.0], [0.0]);
                SmeStepper::with_scheme(&code, SmeScheme::Euler)
                    .step(&mut a, &inc, &p, &mut qa, false)
                    .unwrap();
                SmeStepper::with_scheme(&code, SmeScheme::Kraus)
                    .step(&mut b, &inc, &p, &mut qb, false)
                    .unwrap();
                assert_eq!(qa, qb);
                a.matrix().max_abs_diff(b.matrix())
            };
            let ratio = gap(4e-6) / gap(1e-6);
            assert!(ratio > 6.0 && ratio < 10.0, "eta={eta}: ratio {ratio}");
        }
    }

    #[test]
    fn kraus_mean_step_matches_the_master_equation() {
        // Averaged over ±√dt kicks, the Kraus rule reproduces the Euler drift
        // of the unconditioned equation to order dt².
        let code = bitflip_code();
        let rho = generic_mixed_state();
        let g = [-0.4, 0.0, -0.9];
        let dt = 1e-5;
        let p = input(150.0, 0.3, 150.0, 0.7, dt, &g);
        let s = dt.sqrt();
        let mut mean_k = ComplexMatrix::zeros(8).unwrap();
        let mut mean_e = ComplexMatrix::zeros(8).unwrap();
        for dw in [[s, s], [s, -s], [-s, s], [-s, -s]] {
            let inc = Increments {
                dw: dw.to_vec(),
                dn: vec![false; 3],
            };
            for (scheme, mean) in [
                (SmeScheme::Kraus, &mut mean_k),
                (SmeScheme::Euler, &mut mean_e),
            ] {
                let mut r = rho.clone();
                SmeStepper::with_scheme(&code, scheme)
                    .step(&mut r, &inc, &p, &mut [0.0; 2], false)
                    .unwrap();
                *mean = &*mean + &r.matrix().scale(c(0.25));
            }
        }
        let drift = mean_e.max_abs_diff(rho.matrix());
        assert!(drift > 1e-4);
        assert!(mean_k.max_abs_diff(&mean_e) < 1e-2 * drift);
    }

    #[test]
    fn kraus_keeps_positivity_where_euler_does_not() {
        // Feedback rotations keep the state away from generator eigenstates,
        // where every Euler step leaves a negative part of order κ·dt.
        let code = bitflip_code();
        let g = [0.0, -1.0, 0.0];
        let p = input(50.0, 0.1, 50.0, 1.0, 1e-4, &g);
        let mut worst = [0.0f64; 2];
        for (i, scheme) in [SmeScheme::Euler, SmeScheme::Kraus].into_iter().enumerate() {
            let mut st = SmeStepper::with_scheme(&code, scheme);
            let mut noise = TrajectoryNoise::new(9, 0, 2, 3);
            let mut rho = DensityMatrix::from_pure(code.initial_codeword());
            let mut inc = Increments::zeros(2, 3);
            let mut dq = [0.0; 2];
            for _ in 0..5000 {
                inc.sample_diffusive(&mut noise, p.dt);
                st.step(&mut rho, &inc, &p, &mut dq, false).unwrap();
                worst[i] = worst[i].min(rho.min_eigenvalue());
                assert!((rho.trace() - 1.0).abs() <= 1e-12);
                assert!(rho.matrix().hermitian_deviation() <= 1e-12);
            }
        }
        assert!(worst[0] < POSITIVITY_FLOOR, "euler {:e}", worst[0]);
        assert!(worst[1] > -1e-12, "kraus {:e}", worst[1]);
    }

    fn plus_state_3() -> StateVector {
        normalize(&StateVector::new(vec![c(1.0); 8]).unwrap()).unwrap()
    }

    #[test]
    fn sse_norm_is_restored_every_step() {
        let code = bitflip_code();
        let mut st = SseStepper::new(&code);
        let mut noise = TrajectoryNoise::new(9, 0, 2, 3);
        let mut psi = plus_state_3();
        let g = [-0.3, 0.0, 0.0];
        let p = input(150.0, 10.0, 150.0, 1.0, 1e-4, &g);
        let probs = st.operators().jump_probabilities(p.gamma, p.dt).unwrap();
        let mut inc = Increments::zeros(2, 3);
        let mut dq = [0.0; 2];
        for _ in 0..5000 {
            inc.sample(&mut noise, &probs, p.dt);
            st.step(&mut psi, &inc, &p, &mut dq).unwrap();
            assert!((psi.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn record_mean_in_generator_eigenstate() {
        let code = bitflip_code();
        let (kappa, dt, n) = (150.0, 1e-4, 200_000);
        let g = [0.0; 3];
        for (bits, sign) in [("000", 1.0), ("100", -1.0)] {
            for (eta, scheme) in [
                (1.0, SmeScheme::Euler),
                (0.5, SmeScheme::Euler),
                (0.5, SmeScheme::Kraus),
            ] {
                let mut st = SmeStepper::with_scheme(&code, scheme);
                let mut noise = TrajectoryNoise::new(21, 0, 2, 3);
                let mut rho = DensityMatrix::from_pure(&StateVector::from_bits(bits).unwrap());
                let p = input(kappa, 0.0, 0.0, eta, dt, &g);
                let mut inc = Increments::zeros(2, 3);
                let mut dq = [0.0; 2];
                let mut sum = 0.0;
                for _ in 0..n {
                    inc.sample_diffusive(&mut noise, dt);
                    st.step(&mut rho, &inc, &p, &mut dq, false).unwrap();
                    sum += dq[0] / dt;
                }
                let mean = sum / n as f64;
                let sigma = (kappa / (dt * n as f64)).sqrt();
                let want = sign * 2.0 * kappa * eta.sqrt();
                assert!(
                    (mean - want).abs() < 3.0 * sigma,
                    "{bits} eta={eta}: {mean} vs {want}"
                );
            }
        }
    }

    #[test]
    fn convenience_wrappers_validate() {
        let code = toy_code();
        let mut noise = TrajectoryNoise::new(1, 0, 1, 1);
        let g = [0.0];
        let psi = StateVector::basis(2, 0).unwrap();
        let coarse = input(1.0, 2000.0, 0.0, 1.0, 1e-4, &g);
        assert!(matches!(
            sse_step(&psi, &code, &mut noise, &coarse),
            Err(Error::Config(_))
        ));
        let ok = input(1.0, 0.0, 0.0, 1.0, 1e-4, &g);
        let (next, rec, jumps) = sse_step(&psi, &code, &mut noise, &ok).unwrap();
        assert_eq!(next, psi);
        assert_eq!(jumps, vec![false]);
        assert_eq!(rec.dq.len(), 1);
        let rho = DensityMatrix::from_pure(&psi);
        let (rho2, _) = sme_step(&rho, &code, &mut noise, &ok).unwrap();
        assert!(rho2.matrix().max_abs_diff(rho.matrix()) < 1e-15);
        let bad = input(1.0, 0.0, 0.0, 0.0, 1e-4, &g);
        assert!(sme_step(&rho, &code, &mut noise, &bad).is_err());
    }
}
