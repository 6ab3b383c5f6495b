//! Energy minimization of a circuit against the dimerized target chain.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{boson_qubit_mutual_information, f_err, MetricsBundle};
use crate::circuits::{AnsatzFamily, ParametrizedCircuit};
use crate::engine::{correlation_matrix, run_full_ensemble, Ensemble, StreamingEvaluator};
use crate::error::{Error, Result};
use crate::hamiltonians::ssh_terms;
use crate::hilbert::{fock_cutoff_for, thermal_state, DensityMatrix, LinearOperator, ProductState, PureState, SpinBosonSpace};
use crate::optimize::{
    basin_hopping, bfgs_minimize, random_initial, BasinHoppingOptions, BfgsOptions, HopProgress, Objective, SweepProblem,
};
use crate::reference::GroundTruth;

/// A circuit, its initial boson occupation and the reference data of its target.
pub struct VqeProblem {
    circuit: ParametrizedCircuit,
    n0: f64,
    fock_cutoff: usize,
    rho0: Option<DensityMatrix>,
    gt: GroundTruth,
    psi_in: PureState,
    hamiltonian: LinearOperator,
    /// `None` for circuits the streaming engine cannot run.
    streaming: Option<StreamingEvaluator>,
}

impl VqeProblem {
    /// Néel input and a thermal boson of mean occupation `n0`, truncated by the
    /// default cutoff rule.
    pub fn new(circuit: &ParametrizedCircuit, n0: f64, gt: GroundTruth) -> Result<Self> {
        let n = circuit.n_qubits;
        if gt.n != n {
            return Err(Error::DimensionMismatch(format!("circuit on {n} qubits, reference on {}", gt.n)));
        }
        let (d, rho0) = if circuit.uses_boson() {
            let d = fock_cutoff_for(n0, n);
            (d, Some(thermal_state(n0, d)?.0))
        } else {
            if n0 != 0.0 {
                return Err(Error::InvalidArgument("boson occupation set for a bus-free circuit".into()));
            }
            (0, None)
        };
        let terms = ssh_terms(n, gt.t, gt.b_tilde)?;
        let psi = ProductState::neel(n);
        let streaming = match StreamingEvaluator::new(circuit, d, &psi, rho0.as_ref(), std::slice::from_ref(&terms)) {
            Ok(ev) => Some(ev),
            Err(Error::NotStreamable(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            circuit: circuit.clone(),
            n0,
            fock_cutoff: d,
            rho0,
            psi_in: psi.to_pure()?,
            hamiltonian: terms.operator(SpinBosonSpace::qubits(n))?,
            gt,
            streaming,
        })
    }

    pub fn circuit(&self) -> &ParametrizedCircuit {
        &self.circuit
    }

    pub fn ground_truth(&self) -> &GroundTruth {
        &self.gt
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    pub fn is_streamed(&self) -> bool {
        self.streaming.is_some()
    }

    /// `⟨H⟩` of the output state.
    pub fn energy(&self, theta: &[f64]) -> Result<f64> {
        match &self.streaming {
            Some(ev) => Ok(ev.evaluate(theta)?[0]),
            None => self.full(theta)?.0.expectation(&self.hamiltonian),
        }
    }

    /// Relative excitation `(⟨H⟩ − E0)/Δ`.
    pub fn epsilon(&self, theta: &[f64]) -> Result<f64> {
        self.gt.relative_excitation(self.energy(theta)?)
    }

    fn full(&self, theta: &[f64]) -> Result<(Ensemble, Option<Ensemble>)> {
        let out = run_full_ensemble(&self.circuit, self.fock_cutoff, theta, &self.psi_in, self.rho0.as_ref())?;
        let composite = self
            .circuit
            .uses_boson()
            .then(|| Ensemble { space: out.composite_space, members: out.composite });
        Ok((out.qubits, composite))
    }

    /// Every figure of merit of the output, from the full route.
    pub fn metrics(&self, theta: &[f64]) -> Result<MetricsBundle> {
        let (qubits, composite) = self.full(theta)?;
        let energy = qubits.expectation(&self.hamiltonian)?;
        let fidelity = qubits.fidelity(&self.gt.target()?)?;
        let ferr = f_err(&correlation_matrix(&qubits), &self.gt.c_ref_matrix())?;
        let mi = composite.as_ref().map(boson_qubit_mutual_information).transpose()?;
        Ok(MetricsBundle::assemble(energy, fidelity, qubits.purity(), ferr, mi, &self.gt))
    }
}

impl Objective for VqeProblem {
    fn value(&self, theta: &[f64]) -> Result<f64> {
        self.energy(theta)
    }
}

/// Restarts and basin-hopping settings of one optimization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VqeOptions {
    pub restarts: usize,
    /// Initial parameters are drawn uniformly from this range.
    pub init_low: f64,
    pub init_high: f64,
    pub basin: BasinHoppingOptions,
    /// Stop as soon as the best energy reaches this value.
    pub target_energy: Option<f64>,
}

impl Default for VqeOptions {
    fn default() -> Self {
        Self { restarts: 5, init_low: 0.001, init_high: 0.1, basin: BasinHoppingOptions::default(), target_energy: None }
    }
}

/// Identifies the configuration a record belongs to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordId {
    pub ansatz: AnsatzFamily,
    pub n_qubits: usize,
    pub n_params: usize,
    pub n0: f64,
    pub seed: u64,
}

/// Outcome of optimizing one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationRecord {
    pub id: RecordId,
    pub theta_init: Vec<f64>,
    pub theta_opt: Vec<f64>,
    /// `(evaluations so far, best energy so far)` after every hop of every restart.
    pub trajectory: Vec<(usize, f64)>,
    pub metrics: MetricsBundle,
    /// Left out unless requested, so that records are reproducible byte for byte.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_s: Option<f64>,
}

/// Optimizes from several random starts and keeps the best result.
pub fn optimize_vqe(problem: &VqeProblem, opts: &VqeOptions, seed: u64) -> Result<OptimizationRecord> {
    if opts.restarts == 0 {
        return Err(Error::InvalidArgument("need at least one restart".into()));
    }
    let start = Instant::now();
    let np = problem.circuit.n_params;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<f64>, Vec<f64>, f64)> = None;
    let mut trajectory: Vec<(usize, f64)> = Vec::new();
    let mut evaluations = 0;
    for r in 0..opts.restarts {
        let theta0 = random_initial(np, opts.init_low, opts.init_high, &mut rng);
        let basin = BasinHoppingOptions { seed: seed.wrapping_add(r as u64 + 1), ..opts.basin };
        let offset = evaluations;
        let prior = best.as_ref().map_or(f64::INFINITY, |b| b.2);
        let target = opts.target_energy;
        let mut cb = |p: &HopProgress<'_>| target.is_none_or(|t| p.best_value > t);
        let out = basin_hopping(problem, &theta0, &basin, Some(&mut cb))?;
        for &(e, v) in &out.trajectory {
            trajectory.push((offset + e, v.min(prior)));
        }
        evaluations += out.evaluations;
        if out.value < prior {
            best = Some((theta0, out.theta, out.value));
        }
        if target.is_some_and(|t| out.value <= t) {
            break;
        }
    }
    let (theta_init, theta_opt, _) = best.expect("at least one restart ran");
    let metrics = problem.metrics(&theta_opt)?;
    Ok(OptimizationRecord {
        id: RecordId {
            ansatz: problem.circuit.family,
            n_qubits: problem.circuit.n_qubits,
            n_params: np,
            n0: problem.n0,
            seed,
        },
        theta_init,
        theta_opt,
        trajectory,
        metrics,
        wall_time_s: Some(start.elapsed().as_secs_f64()),
    })
}

/// Grid of related problems swept by warm starts; the figure of merit is ε.
/// Transferred parameters are refined locally, the global search having been
/// done per point beforehand.
pub struct VqeGrid {
    pub points: Vec<VqeProblem>,
    pub bfgs: BfgsOptions,
}

impl SweepProblem for VqeGrid {
    fn len(&self) -> usize {
        self.points.len()
    }

    fn n_params(&self, i: usize) -> usize {
        self.points[i].circuit.n_params
    }

    fn cost(&self, i: usize, theta: &[f64]) -> Result<f64> {
        self.points[i].epsilon(theta)
    }

    fn refine(&self, i: usize, theta0: &[f64]) -> Result<(Vec<f64>, f64)> {
        let p = &self.points[i];
        let out = bfgs_minimize(p, theta0, &self.bfgs)?;
        let eps = p.gt.relative_excitation(out.value)?;
        Ok((out.theta, eps))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{build_csa_ansatz, build_qdb_mps_ansatz, min_params_qdb_mps, CsaConstraints};
    use crate::reference::ground_truth;

    fn small_opts() -> VqeOptions {
        VqeOptions {
            restarts: 2,
            basin: BasinHoppingOptions { n_hops: 2, bfgs: BfgsOptions { gtol: 1e-6, max_iter: 60 }, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn zero_angles_give_the_input_energy() {
        let gt = ground_truth(4, 0.5, 0.1).unwrap();
        let c = build_qdb_mps_ansatz(4, 2, min_params_qdb_mps(4)).unwrap();
        let p = VqeProblem::new(&c, 0.0, gt).unwrap();
        assert!(p.is_streamed());
        let h = ssh_terms(4, 0.5, 0.1).unwrap().operator(SpinBosonSpace::qubits(4)).unwrap();
        let e_in = ProductState::neel(4).to_pure().unwrap().expectation(&h).unwrap();
        let theta = vec![0.0; c.n_params];
        assert!((p.energy(&theta).unwrap() - e_in).abs() < 1e-12);
        let m = p.metrics(&theta).unwrap();
        assert!((m.energy - e_in).abs() < 1e-12);
        assert!((m.purity - 1.0).abs() < 1e-12);
        assert!(m.mutual_information.unwrap().abs() < 1e-10);
    }

    #[test]
    fn streamed_and_full_energies_agree() {
        let gt = ground_truth(4, 0.5, 0.1).unwrap();
        let c = build_qdb_mps_ansatz(4, 3, 16).unwrap();
        let p = VqeProblem::new(&c, 0.05, gt).unwrap();
        let theta: Vec<f64> = (0..16).map(|k| (k as f64 * 0.7).cos()).collect();
        let m = p.metrics(&theta).unwrap();
        assert!((m.energy - p.energy(&theta).unwrap()).abs() < 1e-10);
        m.check(p.ground_truth()).unwrap();
    }

    #[test]
    fn global_ansatz_uses_the_full_route() {
        let gt = ground_truth(4, 0.5, 0.1).unwrap();
        let c = build_csa_ansatz(4, 2, CsaConstraints::default()).unwrap();
        let p = VqeProblem::new(&c, 0.0, gt.clone()).unwrap();
        assert!(!p.is_streamed());
        assert!(VqeProblem::new(&c, 0.1, gt).is_err());
    }

    #[test]
    fn optimization_is_deterministic_and_improves() {
        let gt = ground_truth(4, 0.5, 0.1).unwrap();
        let c = build_qdb_mps_ansatz(4, 2, min_params_qdb_mps(4)).unwrap();
        let p = VqeProblem::new(&c, 0.0, gt).unwrap();
        let a = optimize_vqe(&p, &small_opts(), 11).unwrap();
        let b = optimize_vqe(&p, &small_opts(), 11).unwrap();
        assert_eq!(a.theta_opt, b.theta_opt);
        assert_eq!(a.trajectory, b.trajectory);
        assert!(a.metrics.energy <= p.energy(&a.theta_init).unwrap());
        assert!(a.trajectory.windows(2).all(|w| w[1].1 <= w[0].1));
        a.metrics.check(p.ground_truth()).unwrap();
    }
}
