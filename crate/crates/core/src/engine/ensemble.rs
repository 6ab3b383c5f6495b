use ndarray::{Array1, Array2};
use ndarray_linalg::{EigValsh, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, LinearOperator, PauliString, PureState, SpinBosonSpace};

type C64 = Complex64;

/// Mixed state stored as unnormalized vectors, `ρ = Σ_k |m_k⟩⟨m_k|`.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub space: SpinBosonSpace,
    pub members: Vec<Vec<C64>>,
}

impl Ensemble {
    pub fn from_pure(psi: &PureState) -> Self {
        Self { space: psi.space(), members: vec![psi.vector().to_vec()] }
    }

    pub fn trace(&self) -> f64 {
        self.members.iter().flatten().map(|a| a.norm_sqr()).sum()
    }

    pub fn to_density(&self) -> DensityMatrix {
        let dim = self.space.dim();
        let mut m = Array2::<C64>::zeros((dim, dim));
        for v in &self.members {
            for r in 0..dim {
                if v[r] == C64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..dim {
                    m[[r, c]] += v[r] * v[c].conj();
                }
            }
        }
        DensityMatrix::new_unchecked(self.space, m)
    }

    /// `Re Tr[O ρ]`.
    pub fn expectation(&self, op: &LinearOperator) -> Result<f64> {
        if op.dim() != self.space.dim() {
            return Err(Error::DimensionMismatch("operator and ensemble".into()));
        }
        let mut acc = 0.0;
        for v in &self.members {
            acc += op.expectation(v)?.re;
        }
        Ok(acc)
    }

    pub fn pauli_expectation(&self, s: &PauliString) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for v in &self.members {
            for (r, a) in v.iter().enumerate() {
                if *a == C64::new(0.0, 0.0) {
                    continue;
                }
                let (c, val) = s.row_entry(self.space, r);
                acc += a.conj() * val * v[c];
            }
        }
        acc.re
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity(&self, psi: &PureState) -> Result<f64> {
        if psi.space() != self.space {
            return Err(Error::DimensionMismatch("target and ensemble spaces differ".into()));
        }
        let t = psi.vector();
        Ok(self
            .members
            .iter()
            .map(|v| v.iter().zip(t.iter()).map(|(a, b)| b.conj() * a).sum::<C64>().norm_sqr())
            .sum())
    }

    /// Gram matrix `G_kl = ⟨m_k|m_l⟩`, which shares the nonzero spectrum of `ρ`.
    pub fn gram(&self) -> Array2<C64> {
        let k = self.members.len();
        let mut g = Array2::zeros((k, k));
        for i in 0..k {
            for j in i..k {
                let v: C64 = self.members[i]
                    .iter()
                    .zip(&self.members[j])
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                g[[i, j]] = v;
                g[[j, i]] = v.conj();
            }
        }
        g
    }

    pub fn purity(&self) -> f64 {
        self.gram().iter().map(|x| x.norm_sqr()).sum()
    }

    /// Nonzero part of the spectrum of `ρ`.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        if self.members.is_empty() {
            return Ok(Vec::new());
        }
        let ev: Array1<f64> = self.gram().eigvalsh(UPLO::Lower)?;
        Ok(ev.to_vec())
    }

    /// Von Neumann entropy in nats.
    pub fn entropy(&self) -> Result<f64> {
        Ok(entropy_of(&self.spectrum()?))
    }
}

/// `-Σ p ln p` over the positive entries.
pub(crate) fn entropy_of(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 1e-15).map(|&x| -x * x.ln()).sum()
}
