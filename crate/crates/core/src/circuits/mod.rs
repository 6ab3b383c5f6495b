//! Parametrized gate sequences and their box layouts.
//!
//! A circuit is an ordered list of gates `exp(-i·sign·θ[slot]·G)` plus optional
//! boson resets. Slots are shared between gates of boxes of the same kind. Slot
//! numbers are stable under [`extend_parameters`]: every slot of the smaller
//! circuit keeps its meaning and new slots are appended.

mod builders;

use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use builders::{
    build_csa_ansatz, build_csa_ansatz_with_params, build_csd_mps_ansatz, build_modular_ansatz,
    build_qdb_mps_ansatz, csa_slot_classes, min_params_csd_mps, min_params_modular,
    min_params_qdb_mps, CsaConstraints,
};

use crate::error::{Error, Result};
use crate::hamiltonians::GeneratorSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnsatzFamily {
    QdbMps,
    CsdMps,
    Csa,
    QdbMpsModular,
}

impl AnsatzFamily {
    pub fn uses_boson(self) -> bool {
        matches!(self, AnsatzFamily::QdbMps | AnsatzFamily::QdbMpsModular)
    }

    pub fn name(self) -> &'static str {
        match self {
            AnsatzFamily::QdbMps => "qdb-mps",
            AnsatzFamily::CsdMps => "csd-mps",
            AnsatzFamily::Csa => "csa",
            AnsatzFamily::QdbMpsModular => "qdb-mps-modular",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "qdb-mps" | "qdb_mps" => Ok(AnsatzFamily::QdbMps),
            "csd-mps" | "csd_mps" => Ok(AnsatzFamily::CsdMps),
            "csa" => Ok(AnsatzFamily::Csa),
            "qdb-mps-modular" | "modular" => Ok(AnsatzFamily::QdbMpsModular),
            _ => Err(Error::InvalidArgument(format!("unknown ansatz family `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoxKind {
    LeftEdge,
    /// Bulk boxes introducing qubits with even zero-based index.
    BulkOdd,
    /// Bulk boxes introducing qubits with odd zero-based index.
    BulkEven,
    RightEdge,
    /// Bus hand-over between traps: `U_I`, reset, `U_I†`.
    Interface,
    Layer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxInfo {
    pub kind: BoxKind,
    /// Indices into [`ParametrizedCircuit::ops`].
    pub ops: Range<usize>,
    /// Qubit introduced by a bulk box.
    pub new_qubit: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub generator: GeneratorSpec,
    pub slot: usize,
    pub sign: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Operation {
    Gate(Gate),
    /// Discards the boson and replaces it with a fresh copy of its initial state.
    ResetBoson,
}

/// Inputs that regenerate a circuit deterministically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BuildParams {
    QdbMps { n: usize, l: usize, np: usize },
    CsdMps { n: usize, l: usize, np: usize },
    Csa { n: usize, np: usize, constraints: CsaConstraints, alpha: f64, j0: f64, b: f64 },
    Modular { n_traps: usize, ions_per_trap: usize, l: usize, np: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParametrizedCircuit {
    pub family: AnsatzFamily,
    pub n_qubits: usize,
    pub n_params: usize,
    /// Largest number of qubits a box acts on jointly; the streaming window size.
    pub box_size: usize,
    pub ops: Vec<Operation>,
    pub boxes: Vec<BoxInfo>,
    pub build: BuildParams,
}

impl ParametrizedCircuit {
    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.ops.iter().filter_map(|o| match o {
            Operation::Gate(g) => Some(g),
            Operation::ResetBoson => None,
        })
    }

    pub fn n_gates(&self) -> usize {
        self.gates().count()
    }

    pub fn uses_boson(&self) -> bool {
        self.family.uses_boson()
    }

    /// First and last operation index touching each qubit.
    pub fn qubit_spans(&self) -> Vec<Option<(usize, usize)>> {
        let mut spans = vec![None; self.n_qubits];
        for (i, op) in self.ops.iter().enumerate() {
            if let Operation::Gate(g) = op {
                for q in g.generator.qubits(self.n_qubits) {
                    spans[q] = Some(match spans[q] {
                        None => (i, i),
                        Some((a, _)) => (a, i),
                    });
                }
            }
        }
        spans
    }

    /// Operation index after which each qubit is no longer touched.
    pub fn retirement_schedule(&self) -> Vec<Option<usize>> {
        self.qubit_spans().into_iter().map(|s| s.map(|x| x.1)).collect()
    }

    /// Largest number of qubits between their first and last gate at any time.
    pub fn max_active_qubits(&self) -> usize {
        let spans = self.qubit_spans();
        (0..self.ops.len())
            .map(|i| {
                spans
                    .iter()
                    .filter(|s| matches!(s, Some((a, b)) if *a <= i && i <= *b))
                    .count()
            })
            .max()
            .unwrap_or(0)
    }

    /// Pairs of consecutive sideband gates acting on the same qubit.
    pub fn adjacent_sideband_repeats(&self) -> Vec<usize> {
        use crate::hamiltonians::GeneratorKind::BlueSideband;
        let mut out = Vec::new();
        let mut prev: Option<(usize, usize)> = None;
        for (i, op) in self.ops.iter().enumerate() {
            match op {
                Operation::Gate(Gate { generator, .. }) => match generator.kind {
                    BlueSideband { site } => {
                        if matches!(prev, Some((_, s)) if s == site) {
                            out.push(i);
                        }
                        prev = Some((i, site));
                    }
                    _ => prev = None,
                },
                Operation::ResetBoson => prev = None,
            }
        }
        out
    }

    /// Checks slot ranges, qubit ranges and that every slot is used.
    pub fn validate(&self) -> Result<()> {
        let mut used = vec![false; self.n_params];
        for g in self.gates() {
            if g.slot >= self.n_params {
                return Err(Error::Invariant(format!("slot {} ≥ {}", g.slot, self.n_params)));
            }
            used[g.slot] = true;
            for q in g.generator.qubits(self.n_qubits) {
                if q >= self.n_qubits {
                    return Err(Error::SiteOutOfRange { site: q, n_qubits: self.n_qubits });
                }
            }
        }
        if let Some(s) = used.iter().position(|u| !u) {
            return Err(Error::Invariant(format!("slot {s} is not used by any gate")));
        }
        Ok(())
    }

    pub fn check_params(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params {
            return Err(Error::ParameterCount { expected: self.n_params, got: theta.len() });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }
}

/// Rebuilds `circuit` with `new_np ≥ n_params` slots. Existing slots keep their
/// gates; new gates use the new slots, so zero values reproduce the old circuit.
pub fn extend_parameters(circuit: &ParametrizedCircuit, new_np: usize) -> Result<ParametrizedCircuit> {
    if new_np < circuit.n_params {
        return Err(Error::InvalidArgument(format!(
            "cannot shrink from {} to {new_np} parameters",
            circuit.n_params
        )));
    }
    match circuit.build.clone() {
        BuildParams::QdbMps { n, l, .. } => build_qdb_mps_ansatz(n, l, new_np),
        BuildParams::CsdMps { n, l, .. } => build_csd_mps_ansatz(n, l, new_np),
        BuildParams::Csa { n, constraints, alpha, j0, b, .. } => {
            build_csa_ansatz_with_params(n, new_np, constraints, alpha, j0, b)
        }
        BuildParams::Modular { n_traps, ions_per_trap, l, .. } => {
            build_modular_ansatz(n_traps, ions_per_trap, l, new_np)
        }
    }
}

/// Copies `theta` into a vector of length `len`, truncating or padding with zeros.
pub fn transfer_parameters(theta: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    let k = len.min(theta.len());
    out[..k].copy_from_slice(&theta[..k]);
    out
}
