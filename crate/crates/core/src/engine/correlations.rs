use ndarray::Array2;

use super::Ensemble;
use crate::hilbert::{Pauli, PauliString, PauliSum};

/// `σ^x_i` for every site followed by `σ^x_i σ^x_j` for every `i < j`, in the order
/// expected by [`correlation_from_values`].
pub fn correlation_observables(n: usize) -> Vec<PauliSum> {
    let mut out: Vec<PauliSum> = (0..n)
        .map(|i| PauliSum::from_string(PauliString::single(i, Pauli::X)))
        .collect();
    for i in 0..n {
        for j in i + 1..n {
            let s = PauliString::pair(i, Pauli::X, j, Pauli::X).expect("distinct sites");
            out.push(PauliSum::from_string(s));
        }
    }
    out
}

/// Connected correlators `C_ij = ⟨σ^x_i σ^x_j⟩ − ⟨σ^x_i⟩⟨σ^x_j⟩`, symmetric with
/// a zero diagonal, from values ordered as in [`correlation_observables`].
pub fn correlation_from_values(n: usize, values: &[f64]) -> Array2<f64> {
    assert_eq!(values.len(), n + n * n.saturating_sub(1) / 2, "correlation value count");
    let (x, xx) = values.split_at(n);
    let mut c = Array2::zeros((n, n));
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            let v = xx[k] - x[i] * x[j];
            c[[i, j]] = v;
            c[[j, i]] = v;
            k += 1;
        }
    }
    c
}

/// Connected `σ^x` correlators of a qubit state.
pub fn correlation_matrix(state: &Ensemble) -> Array2<f64> {
    let n = state.space.n_qubits;
    let values: Vec<f64> = correlation_observables(n)
        .iter()
        .map(|o| o.terms.iter().map(|(c, s)| c * state.pauli_expectation(s)).sum())
        .collect();
    correlation_from_values(n, &values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{neel_state, PureState, SpinBosonSpace};
    use num_complex::Complex64;

    #[test]
    fn product_state_has_no_correlations() {
        let c = correlation_matrix(&Ensemble::from_pure(&neel_state(4)));
        assert!(c.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bell_pair_is_maximally_correlated() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = [h, 0.0, 0.0, h].iter().map(|&a| Complex64::new(a, 0.0)).collect();
        let psi = PureState::new(SpinBosonSpace::qubits(2), v).unwrap();
        let c = correlation_matrix(&Ensemble::from_pure(&psi));
        assert!((c[[0, 1]] - 1.0).abs() < 1e-15);
        assert_eq!(c[[0, 1]], c[[1, 0]]);
    }
}
