//! Figures of merit of prepared states and the structural audits of the circuit
//! families: conserved charges, bond dimensions and controllability.

mod audits;
mod lie;
mod metrics;
mod schmidt;
mod symmetry;
mod thermal;

pub use audits::{bond_dimension_audit, bound_trials, BondAudit, BoundTrials};
pub use lie::{charge_sector, effective_generators, flip_flop, lie_closure_dense, lie_closure_dimension, LIE_RANK_TOL};
pub use metrics::{
    boson_qubit_mutual_information, f_err, fidelity, fidelity_lower_bound, purity_lower_bound,
    relative_excitation_energy, MetricsBundle, BOUND_SLACK,
};
pub use schmidt::{
    generic_bound, max_bond_bound, project_boson, right_bound, schmidt_profile, schmidt_ranks, structured_bound,
    BondExcess, SchmidtProfile, BOND_BOUND_SLACK, SCHMIDT_THRESHOLD,
};
pub use symmetry::{
    audit_circuit, charge_defect, group_defects, symmetry_audit, transfer_population_error, GroupDefects,
    SymmetryCheck, SymmetryReport, COMMUTATOR_TOL, GROUP_TOL, REALNESS_TOL,
};
pub use thermal::{fock_state, thermal_error_decomposition, ThermalDecomposition};
