use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{fidelity_lower_bound, BOUND_SLACK};
use super::schmidt::{project_boson, schmidt_profile, SchmidtProfile};
use crate::circuits::{build_qdb_mps_ansatz, min_params_qdb_mps};
use crate::engine::{run_full_ensemble, Ensemble};
use crate::error::Result;
use crate::hamiltonians::ssh_terms;
use crate::hilbert::{fock_cutoff_for, neel_state, PureState, SpinBosonSpace};
use crate::reference::exact_spectrum;

type C64 = Complex64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BondAudit {
    pub n_qubits: usize,
    pub box_size: usize,
    pub draws: usize,
    pub profiles: Vec<SchmidtProfile>,
    pub violations: usize,
    pub marginal: usize,
}

impl BondAudit {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Schmidt profiles of minimal sideband circuits at random angles, with the bus
/// projected onto its vacuum after the circuit.
pub fn bond_dimension_audit(n: usize, l: usize, draws: usize, seed: u64) -> Result<BondAudit> {
    let circuit = build_qdb_mps_ansatz(n, l, min_params_qdb_mps(n) + 4)?;
    let d = fock_cutoff_for(0.0, n);
    let psi = neel_state(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut profiles = Vec::with_capacity(draws);
    for _ in 0..draws {
        let theta: Vec<f64> =
            (0..circuit.n_params).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
        let out = run_full_ensemble(&circuit, d, &theta, &psi, None)?;
        let projected = project_boson(out.composite_space, &out.composite[0], 0)?;
        profiles.push(schmidt_profile(&projected, l)?);
    }
    Ok(BondAudit {
        n_qubits: n,
        box_size: l,
        draws,
        violations: profiles.iter().map(|p| p.violations.len()).sum(),
        marginal: profiles.iter().map(|p| p.marginal.len()).sum(),
        profiles,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundTrials {
    pub n_qubits: usize,
    pub trials: usize,
    /// Trials with `⟨H⟩ < E1`, where the fidelity bound is informative.
    pub informative: usize,
    pub violations: usize,
    /// Smallest `F − bound`, `Tr ρ² − F²` and `ε − (1 − F)` seen.
    pub min_fidelity_margin: f64,
    pub min_purity_margin: f64,
    pub min_infidelity_margin: f64,
}

/// Random mixed states of the target chain checked against the energy bounds on
/// fidelity and purity. Each state mixes the exact ground state with random
/// vectors, so that every regime from nearly pure to strongly mixed occurs.
pub fn bound_trials(n: usize, t: f64, b_tilde: f64, trials: usize, seed: u64) -> Result<BoundTrials> {
    let space = SpinBosonSpace::qubits(n);
    let h = ssh_terms(n, t, b_tilde)?.operator(space)?;
    let spec = exact_spectrum(&h, 2)?;
    let (e0, e1) = (spec.values[0], spec.values[1]);
    let psi0 = PureState::new(space, spec.vectors[0].clone())?;
    let dim = space.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = BoundTrials {
        n_qubits: n,
        trials,
        informative: 0,
        violations: 0,
        min_fidelity_margin: f64::INFINITY,
        min_purity_margin: f64::INFINITY,
        min_infidelity_margin: f64::INFINITY,
    };
    for _ in 0..trials {
        let rank = rng.random_range(1..=4usize);
        let noise = 10f64.powf(rng.random_range(-3.0..0.5));
        let mut members: Vec<Vec<C64>> = (0..rank)
            .map(|_| {
                let w = rng.random::<f64>();
                (0..dim)
                    .map(|i| {
                        let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                        psi0.vector()[i] * w + z * noise / (dim as f64).sqrt()
                    })
                    .collect()
            })
            .collect();
        let tr: f64 = members.iter().flatten().map(|a| a.norm_sqr()).sum();
        members.iter_mut().flatten().for_each(|a| *a /= tr.sqrt());
        let ens = Ensemble { space, members };
        let energy = ens.expectation(&h)?;
        let f = ens.fidelity(&psi0)?;
        let purity = ens.purity();
        let fb = fidelity_lower_bound(energy, e0, e1)?;
        let eps = (energy - e0) / (e1 - e0);
        let mut bad = purity < f * f - BOUND_SLACK;
        out.min_purity_margin = out.min_purity_margin.min(purity - f * f);
        if energy < e1 {
            out.informative += 1;
            bad |= f < fb - BOUND_SLACK || 1.0 - f > eps + BOUND_SLACK;
            out.min_fidelity_margin = out.min_fidelity_margin.min(f - fb);
            out.min_infidelity_margin = out.min_infidelity_margin.min(eps - (1.0 - f));
        }
        out.violations += bad as usize;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bond_audit_small_chain() {
        let a = bond_dimension_audit(4, 2, 3, 5).unwrap();
        assert!(a.passed(), "{:?}", a.profiles);
        assert!(a.profiles.iter().all(|p| p.ranks.len() == 3));
    }

    #[test]
    fn bounds_hold_on_random_states() {
        let r = bound_trials(4, 0.5, 0.1, 300, 3).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.informative > 50, "{r:?}");
        assert!(r.min_fidelity_margin >= -1e-12 && r.min_purity_margin >= -1e-12);
    }
}
