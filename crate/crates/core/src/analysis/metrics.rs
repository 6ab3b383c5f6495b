use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::Ensemble;
use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, PureState, SpinBosonSpace};
use crate::reference::{GroundTruth, DEGENERACY_TOL};

type C64 = Complex64;

/// Slack on the exact inequalities between energy, fidelity and purity.
pub const BOUND_SLACK: f64 = 1e-9;

/// Normalized ℓ1 distance between the strict upper triangles of two correlation
/// matrices, `Σ_{i<j} |C_ref − C| / Σ_{i<j} |C_ref|`.
pub fn f_err(c: &Array2<f64>, c_ref: &Array2<f64>) -> Result<f64> {
    if c.dim() != c_ref.dim() || c.nrows() != c.ncols() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", c.dim(), c_ref.dim())));
    }
    let n = c.nrows();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            num += (c_ref[[i, j]] - c[[i, j]]).abs();
            den += c_ref[[i, j]].abs();
        }
    }
    if den == 0.0 {
        return Err(Error::InvalidArgument("reference correlations vanish".into()));
    }
    Ok(num / den)
}

/// `(⟨H⟩ − E0)/Δ`.
pub fn relative_excitation_energy(energy: f64, gt: &GroundTruth) -> Result<f64> {
    gt.relative_excitation(energy)
}

/// `⟨ψ|ρ|ψ⟩`.
pub fn fidelity(rho: &DensityMatrix, psi: &PureState) -> Result<f64> {
    if rho.space() != psi.space() {
        return Err(Error::DimensionMismatch("state and target spaces differ".into()));
    }
    let m = rho.matrix();
    let v = psi.vector();
    let mut acc = C64::new(0.0, 0.0);
    for r in 0..v.len() {
        if v[r] == C64::new(0.0, 0.0) {
            continue;
        }
        for c in 0..v.len() {
            acc += v[r].conj() * m[[r, c]] * v[c];
        }
    }
    Ok(acc.re)
}

/// `F ≥ (E1 − ⟨H⟩)/(E1 − E0)`; values at or below zero carry no information.
pub fn fidelity_lower_bound(energy: f64, e0: f64, e1: f64) -> Result<f64> {
    let gap = e1 - e0;
    if !(gap >= DEGENERACY_TOL) {
        return Err(Error::DegenerateGap(gap));
    }
    Ok((e1 - energy) / gap)
}

/// `Tr ρ² ≥ F² ≥ bound²` for a fidelity bound in `[0, 1]`.
pub fn purity_lower_bound(fidelity_bound: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&fidelity_bound) {
        return Err(Error::InvalidArgument(format!("fidelity bound {fidelity_bound} outside [0, 1]")));
    }
    Ok(fidelity_bound * fidelity_bound)
}

/// `I(Q:B) = S(ρ_Q) + S(ρ_B) − S(ρ_QB)` in nats for a qubits-plus-boson ensemble.
pub fn boson_qubit_mutual_information(composite: &Ensemble) -> Result<f64> {
    let space = composite.space;
    if !space.has_boson() {
        return Err(Error::NoBoson);
    }
    let d = space.boson_dim();
    let nq = space.qubit_dim();
    // boson factor is the fastest index: member m splits into d qubit vectors
    let mut qubit_members = Vec::with_capacity(composite.members.len() * d);
    let mut rho_b = Array2::<C64>::zeros((d, d));
    for m in &composite.members {
        for q in 0..d {
            qubit_members.push((0..nq).map(|i| m[i * d + q]).collect::<Vec<_>>());
        }
        for i in 0..nq {
            for a in 0..d {
                let x = m[i * d + a];
                if x == C64::new(0.0, 0.0) {
                    continue;
                }
                for b in 0..d {
                    rho_b[[a, b]] += x * m[i * d + b].conj();
                }
            }
        }
    }
    let qubits = Ensemble { space: SpinBosonSpace::qubits(space.n_qubits), members: qubit_members };
    let s_b = density_entropy(&rho_b)?;
    Ok(qubits.entropy()? + s_b - composite.entropy()?)
}

fn density_entropy(rho: &Array2<C64>) -> Result<f64> {
    use ndarray_linalg::{EigValsh, UPLO};
    let ev = rho.eigvalsh(UPLO::Lower)?;
    Ok(ev.iter().filter(|&&x| x > 1e-15).map(|&x| -x * x.ln()).sum())
}

/// Figures of merit of one prepared state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsBundle {
    pub energy: f64,
    /// `None` when the reference gap is degenerate.
    pub epsilon: Option<f64>,
    pub fidelity: f64,
    pub purity: f64,
    pub f_err: f64,
    pub fidelity_lower_bound: Option<f64>,
    pub purity_lower_bound: Option<f64>,
    /// Only available from the full route with a boson.
    pub mutual_information: Option<f64>,
}

impl MetricsBundle {
    /// Derives the energy-based quantities from measured ones.
    pub fn assemble(
        energy: f64,
        fidelity: f64,
        purity: f64,
        f_err: f64,
        mutual_information: Option<f64>,
        gt: &GroundTruth,
    ) -> Self {
        let (epsilon, fb, pb) = if gt.degenerate {
            (None, None, None)
        } else {
            let fb = (gt.e1 - energy) / gt.gap;
            (Some((energy - gt.e0) / gt.gap), Some(fb), Some(fb.clamp(0.0, 1.0).powi(2)))
        };
        Self {
            energy,
            epsilon,
            fidelity,
            purity,
            f_err,
            fidelity_lower_bound: fb,
            purity_lower_bound: pb,
            mutual_information,
        }
    }

    /// Checks the energy/fidelity/purity chain and the ranges of every quantity.
    pub fn check(&self, gt: &GroundTruth) -> Result<()> {
        let s = BOUND_SLACK;
        let breach = |what: String| Err(Error::Invariant(what));
        if !(-s..=1.0 + s).contains(&self.fidelity) {
            return breach(format!("fidelity {} outside [0, 1]", self.fidelity));
        }
        if !(-s..=1.0 + s).contains(&self.purity) {
            return breach(format!("purity {} outside [0, 1]", self.purity));
        }
        if self.purity < self.fidelity * self.fidelity - s {
            return breach(format!("purity {} below F² = {}", self.purity, self.fidelity.powi(2)));
        }
        if let Some(mi) = self.mutual_information {
            if mi < -1e-10 {
                return breach(format!("negative mutual information {mi}"));
            }
        }
        if let (Some(eps), Some(fb)) = (self.epsilon, self.fidelity_lower_bound) {
            if eps < -1e-10 {
                return breach(format!("energy {} below the ground energy {}", self.energy, gt.e0));
            }
            if self.energy < gt.e1 {
                if self.fidelity < fb - s {
                    return breach(format!("fidelity {} below its energy bound {fb}", self.fidelity));
                }
                if 1.0 - self.fidelity > eps + s {
                    return breach(format!("infidelity {} exceeds ε = {eps}", 1.0 - self.fidelity));
                }
            }
        }
        Ok(())
    }
}
