use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuits::ParametrizedCircuit;
use crate::engine::StreamingEvaluator;
use crate::error::{Error, Result};
use crate::hamiltonians::ssh_terms;
use crate::hilbert::{fock_cutoff_for, thermal_state, DensityMatrix, ProductState, SpinBosonSpace};
use crate::reference::GroundTruth;

type C64 = Complex64;

/// Pure Fock state `|q⟩⟨q|` of a `d`-level boson.
pub fn fock_state(q: usize, d: usize) -> Result<DensityMatrix> {
    if q >= d {
        return Err(Error::InvalidArgument(format!("Fock level {q} beyond cutoff {d}")));
    }
    let mut m = Array2::zeros((d, d));
    m[[q, q]] = C64::new(1.0, 0.0);
    DensityMatrix::new(SpinBosonSpace::boson(d), m)
}

/// Relative excitation of the output for each listed initial boson state.
fn epsilons(
    circuit: &ParametrizedCircuit,
    d: usize,
    theta: &[f64],
    gt: &GroundTruth,
    states: &[DensityMatrix],
) -> Result<Vec<f64>> {
    let h = ssh_terms(gt.n, gt.t, gt.b_tilde)?;
    let psi = ProductState::neel(gt.n);
    states
        .iter()
        .map(|rho0| {
            let ev = StreamingEvaluator::new(circuit, d, &psi, Some(rho0), std::slice::from_ref(&h))?;
            gt.relative_excitation(ev.evaluate(theta)?[0])
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalDecomposition {
    pub n0: f64,
    pub fock_cutoff: usize,
    /// `ε_q` for the boson prepared in `|q⟩`, `q = 0, 1`.
    pub eps_q: Vec<f64>,
    /// Thermal weights of `|0⟩` and `|1⟩`.
    pub p_q: Vec<f64>,
    pub eps_thermal: f64,
    /// `ε_thermal − (ε0 p0 + ε1 p1)`, carried by levels `q ≥ 2`.
    pub residual: f64,
    /// `residual / n0²`; `None` at `n0 = 0`.
    pub fitted_constant: Option<f64>,
}

/// Splits the thermal excitation energy into its vacuum and one-phonon parts.
pub fn thermal_error_decomposition(
    circuit: &ParametrizedCircuit,
    theta: &[f64],
    gt: &GroundTruth,
    n0: f64,
) -> Result<ThermalDecomposition> {
    if !circuit.uses_boson() {
        return Err(Error::NoBoson);
    }
    if circuit.n_qubits != gt.n {
        return Err(Error::DimensionMismatch(format!("circuit on {} qubits, reference on {}", circuit.n_qubits, gt.n)));
    }
    // the q = 1 run needs one level more than the vacuum run
    let d = fock_cutoff_for(n0, gt.n).max(fock_cutoff_for(0.0, gt.n) + 1);
    let (thermal, _) = thermal_state(n0, d)?;
    let p_q: Vec<f64> = (0..2).map(|q| thermal.matrix()[[q, q]].re).collect();
    let eps = epsilons(circuit, d, theta, gt, &[fock_state(0, d)?, fock_state(1, d)?, thermal])?;
    let residual = eps[2] - (eps[0] * p_q[0] + eps[1] * p_q[1]);
    Ok(ThermalDecomposition {
        n0,
        fock_cutoff: d,
        eps_q: eps[..2].to_vec(),
        p_q,
        eps_thermal: eps[2],
        residual,
        fitted_constant: (n0 > 0.0).then(|| residual / (n0 * n0)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{build_qdb_mps_ansatz, min_params_qdb_mps};
    use crate::reference::ground_truth;

    fn setup() -> (ParametrizedCircuit, Vec<f64>, GroundTruth) {
        let c = build_qdb_mps_ansatz(4, 2, min_params_qdb_mps(4)).unwrap();
        let theta: Vec<f64> = (0..c.n_params).map(|k| 0.3 + 0.17 * (k as f64).sin()).collect();
        (c, theta, ground_truth(4, 0.5, 0.1).unwrap())
    }

    #[test]
    fn zero_occupation_is_the_vacuum_run() {
        let (c, theta, gt) = setup();
        let t = thermal_error_decomposition(&c, &theta, &gt, 0.0).unwrap();
        assert_eq!(t.p_q, vec![1.0, 0.0]);
        assert_eq!(t.eps_thermal, t.eps_q[0]);
        assert_eq!(t.residual, 0.0);
        assert!(t.fitted_constant.is_none());
    }

    #[test]
    fn residual_is_second_order() {
        let (c, theta, gt) = setup();
        let r: Vec<f64> = [0.04, 0.02, 0.01]
            .iter()
            .map(|&n0| thermal_error_decomposition(&c, &theta, &gt, n0).unwrap().residual)
            .collect();
        for w in r.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() < 0.5, "{r:?}");
        }
    }

    #[test]
    fn small_occupation_shifts_epsilon_linearly() {
        let (c, theta, gt) = setup();
        let a = thermal_error_decomposition(&c, &theta, &gt, 0.01).unwrap();
        let b = thermal_error_decomposition(&c, &theta, &gt, 0.005).unwrap();
        let da = a.eps_thermal - a.eps_q[0];
        let db = b.eps_thermal - b.eps_q[0];
        assert!((da / db - 2.0).abs() < 0.1, "{da} {db}");
    }
}
