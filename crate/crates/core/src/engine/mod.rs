//! Simulation of parametrized circuits on the qubit-plus-boson space.
//!
//! Two routes are provided. The full route keeps every qubit and the boson at all
//! times, as pure-state trajectories over the diagonal initial boson state or as a
//! dense density matrix. The streaming route keeps only the qubits between their
//! first and last gate, and obtains expectation values of qubits that already left
//! the window through operator-inserted partial traces ("tags") that are evolved
//! along with the reduced state.

mod correlations;
mod ensemble;
mod full;
mod kernel;
mod spectral;
mod streaming;

use std::collections::HashMap;

pub use correlations::{correlation_from_values, correlation_matrix, correlation_observables};
pub use ensemble::Ensemble;
pub use full::{
    apply_generator, apply_generator_density, evolve_density, evolve_pure, run_full,
    run_full_ensemble, unitary_matrix, FullOutput,
};
pub use spectral::{LocalUnitary, SpectralGenerator};
pub use streaming::{run_streaming, StreamingEvaluator};

use crate::circuits::{Operation, ParametrizedCircuit};
use crate::error::{Error, Result};
use crate::hilbert::{Site, SpinBosonSpace};

/// Doubled charge of each local basis state of a list of factors (first slowest).
pub(crate) fn local_charges(sites: &[Site], dims: &[usize]) -> Vec<i32> {
    let mut q = vec![0i32];
    for (s, &d) in sites.iter().zip(dims) {
        let fc = kernel::factor_charges(*s, d);
        q = q.iter().flat_map(|a| fc.iter().map(move |b| a + b)).collect();
    }
    q
}

#[derive(Clone, Debug)]
pub(crate) enum Step {
    Gate { gen: usize, sites: Vec<Site>, slot: usize, sign: f64 },
    Reset,
}

/// A circuit with every distinct gate generator diagonalized once.
#[derive(Clone, Debug)]
pub struct CompiledCircuit {
    circuit: ParametrizedCircuit,
    fock_cutoff: usize,
    generators: Vec<SpectralGenerator>,
    steps: Vec<Step>,
}

impl CompiledCircuit {
    /// `fock_cutoff` is ignored for circuits that never touch the boson.
    pub fn new(circuit: &ParametrizedCircuit, fock_cutoff: usize) -> Result<Self> {
        circuit.validate()?;
        let n = circuit.n_qubits;
        let d = if circuit.uses_boson() {
            if fock_cutoff < 2 {
                return Err(Error::InvalidArgument(format!(
                    "sideband gates need a Fock cutoff of at least 2, got {fock_cutoff}"
                )));
            }
            fock_cutoff
        } else {
            0
        };
        let mut cache: HashMap<String, usize> = HashMap::new();
        let mut generators = Vec::new();
        let mut steps = Vec::with_capacity(circuit.ops.len());
        for op in &circuit.ops {
            match op {
                Operation::ResetBoson => {
                    if d == 0 {
                        return Err(Error::NoBoson);
                    }
                    steps.push(Step::Reset);
                }
                Operation::Gate(g) => {
                    let sites = g.generator.sites(n);
                    let key = generator_key(&g.generator, sites.len());
                    let gen = match cache.get(&key) {
                        Some(&i) => i,
                        None => {
                            let dims: Vec<usize> = sites
                                .iter()
                                .map(|s| if *s == Site::Boson { d } else { 2 })
                                .collect();
                            let local = g.generator.local_operator(n, d)?;
                            let charges = local_charges(&sites, &dims);
                            generators.push(SpectralGenerator::new(&local, dims, &charges)?);
                            cache.insert(key, generators.len() - 1);
                            generators.len() - 1
                        }
                    };
                    steps.push(Step::Gate { gen, sites, slot: g.slot, sign: g.sign });
                }
            }
        }
        Ok(Self { circuit: circuit.clone(), fock_cutoff: d, generators, steps })
    }

    pub fn circuit(&self) -> &ParametrizedCircuit {
        &self.circuit
    }

    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    /// Composite space the circuit acts on.
    pub fn space(&self) -> SpinBosonSpace {
        SpinBosonSpace::new(self.circuit.n_qubits, self.fock_cutoff)
    }

    /// Whether every gate conserves `½Σσ^z − a†a`.
    pub fn conserves_charge(&self) -> bool {
        self.generators.iter().all(|g| g.conserves_charge())
    }

    pub(crate) fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub(crate) fn generator(&self, i: usize) -> &SpectralGenerator {
        &self.generators[i]
    }
}

/// Generators with equal keys have identical local matrices.
fn generator_key(g: &crate::hamiltonians::GeneratorSpec, n_sites: usize) -> String {
    use crate::hamiltonians::GeneratorKind::*;
    let r = g.rate_unit.to_bits();
    match &g.kind {
        BlueSideband { .. } => format!("sb:{r}"),
        Ms { .. } => format!("ms{n_sites}:{r}"),
        Xy { alpha, j0, b } => {
            format!("xy{n_sites}:{}:{}:{}:{r}", alpha.to_bits(), j0.to_bits(), b.to_bits())
        }
        ZRotation { .. } => format!("z:{r}"),
    }
}
#[cfg(test)]
mod tests;
