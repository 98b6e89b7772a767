//! Closed-form fidelity baselines.

/// Fidelity of one unprotected qubit under bit flips at rate γ, starting in
/// `|0⟩`: the solution `½(1 + e^{−2γt})` of `dρ/dt = γD[X]ρ`.
pub fn analytic_f1(gamma: f64, t: f64) -> f64 {
    0.5 * (1.0 + (-2.0 * gamma * t).exp())
}

/// Average fidelity of discrete three-qubit bit-flip correction applied
/// after an interval `t`: `¼(2 + 3e^{−2γt} − e^{−6γt})`.
pub fn analytic_f3d(gamma: f64, t: f64) -> f64 {
    0.25 * (2.0 + 3.0 * (-2.0 * gamma * t).exp() - (-6.0 * gamma * t).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f3d_values() {
        assert_eq!(analytic_f3d(0.5, 0.0), 1.0);
        assert!((analytic_f3d(1.0, 1e3) - 0.5).abs() < 1e-15);
        let want = (2.0 + 3.0 * (-1.0f64).exp() - (-3.0f64).exp()) / 4.0;
        assert!((analytic_f3d(0.5, 1.0) - want).abs() < 1e-15);
        assert!((analytic_f3d(0.5, 1.0) - 0.76346).abs() < 1e-5);
    }

    #[test]
    fn f1_values() {
        assert_eq!(analytic_f1(1.0, 0.0), 1.0);
        assert!((analytic_f1(1.0, 1e3) - 0.5).abs() < 1e-15);
        assert!((analytic_f1(1.0, 1.0) - 0.56767).abs() < 1e-5);
        assert!((analytic_f1(0.1, 1.0) - 0.5 * (1.0 + (-0.2f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn discrete_correction_beats_bare_qubit_early() {
        for t in [0.01, 0.1, 0.5] {
            assert!(analytic_f3d(0.1, t) > analytic_f1(0.1, t));
        }
    }
}
