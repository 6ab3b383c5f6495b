use ndarray::Array2;
use ndarray_linalg::Determinant;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::{
    build_csa_ansatz, build_csd_mps_ansatz, build_qdb_mps_ansatz, min_params_csd_mps, min_params_qdb_mps,
    AnsatzFamily, CsaConstraints, ParametrizedCircuit,
};
use crate::engine::{apply_generator, unitary_matrix, CompiledCircuit};
use crate::error::{Error, Result};
use crate::hamiltonians::{
    blue_sideband, extended_magnetization, full_transfer_area, magnetization, spin_parity, GeneratorSpec,
};
use crate::hilbert::{fock_cutoff_for, LinearOperator, PureState, SpinBosonSpace, DOWN, UP};

type C64 = Complex64;

pub const COMMUTATOR_TOL: f64 = 1e-10;
pub const REALNESS_TOL: f64 = 1e-10;
pub const GROUP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryCheck {
    pub name: String,
    /// Largest value over generators or draws.
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl SymmetryCheck {
    fn new(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, passed: value < threshold }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub family: AnsatzFamily,
    pub n_qubits: usize,
    pub fock_cutoff: usize,
    pub draws: usize,
    /// Name of the conserved operator checked against every generator.
    pub charge: String,
    pub checks: Vec<SymmetryCheck>,
}

impl SymmetryReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&SymmetryCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Largest Frobenius norm of `[G, Q]` over the generators.
pub fn charge_defect(generators: &[LinearOperator], charge: &LinearOperator) -> Result<f64> {
    generators
        .iter()
        .map(|g| Ok(g.commutator(charge)?.frobenius_norm()))
        .try_fold(0.0f64, |m, x: Result<f64>| Ok(m.max(x?)))
}

/// Deviations of a unitary from the real special orthogonal group.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupDefects {
    pub max_imag: f64,
    /// Frobenius norm of `U Uᵀ − I`.
    pub orthogonality: f64,
    /// Frobenius norm of `U U† − I`.
    pub unitarity: f64,
    pub determinant: f64,
}

pub fn group_defects(u: &Array2<C64>) -> Result<GroupDefects> {
    let n = u.nrows();
    let ut = u.t().to_owned();
    let uh = ut.mapv(|x| x.conj());
    let dev = |m: Array2<C64>| -> f64 {
        m.indexed_iter()
            .map(|((r, c), x)| (x - if r == c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let det = u.det()?;
    debug_assert_eq!(u.ncols(), n);
    Ok(GroupDefects {
        max_imag: u.iter().fold(0.0, |m, x| m.max(x.im.abs())),
        orthogonality: dev(u.dot(&ut)),
        unitarity: dev(u.dot(&uh)),
        determinant: (det - C64::new(1.0, 0.0)).norm(),
    })
}

/// Smallest circuit of each family on `n` qubits, as audited.
pub fn audit_circuit(family: AnsatzFamily, n: usize) -> Result<ParametrizedCircuit> {
    match family {
        AnsatzFamily::QdbMps => build_qdb_mps_ansatz(n, 2, min_params_qdb_mps(n)),
        AnsatzFamily::CsdMps => build_csd_mps_ansatz(n, 2, min_params_csd_mps(n, 2)),
        AnsatzFamily::Csa => build_csa_ansatz(n, 2, CsaConstraints::default()),
        AnsatzFamily::QdbMpsModular => Err(Error::InvalidArgument(
            "bus resets make the modular circuit non-unitary; audit the single-trap family".into(),
        )),
    }
}

fn distinct_generators(circuit: &ParametrizedCircuit, space: SpinBosonSpace) -> Result<Vec<LinearOperator>> {
    let mut seen: Vec<&GeneratorSpec> = Vec::new();
    let mut out = Vec::new();
    for g in circuit.gates() {
        if !seen.contains(&&g.generator) {
            seen.push(&g.generator);
            out.push(g.generator.operator(space)?);
        }
    }
    Ok(out)
}

/// Conservation, realness and group checks of one ansatz family over random angles.
///
/// The sideband family is checked against `Z = M − a†a` and for real special
/// orthogonal unitaries. The collective-coupling family conserves only the spin
/// parity and the long-range family the magnetization `M`; their gates have complex
/// matrix elements, so they are checked for unitarity and unit determinant only.
pub fn symmetry_audit(family: AnsatzFamily, n: usize, draws: usize, seed: u64) -> Result<SymmetryReport> {
    let circuit = audit_circuit(family, n)?;
    let d = if family.uses_boson() { fock_cutoff_for(0.0, n) } else { 0 };
    let space = SpinBosonSpace::new(n, d);
    let (charge_name, charge) = match family {
        AnsatzFamily::QdbMps | AnsatzFamily::QdbMpsModular => ("Z", extended_magnetization(space)),
        AnsatzFamily::CsdMps => ("P", spin_parity(space)),
        AnsatzFamily::Csa => ("M", magnetization(space)),
    };
    let generators = distinct_generators(&circuit, space)?;
    let mut checks = vec![SymmetryCheck::new(
        &format!("[G, {charge_name}]"),
        charge_defect(&generators, &charge)?,
        COMMUTATOR_TOL,
    )];
    let cc = CompiledCircuit::new(&circuit, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = GroupDefects { max_imag: 0.0, orthogonality: 0.0, unitarity: 0.0, determinant: 0.0 };
    for _ in 0..draws {
        let theta: Vec<f64> = (0..circuit.n_params).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
        let g = group_defects(&unitary_matrix(&cc, &theta)?)?;
        worst.max_imag = worst.max_imag.max(g.max_imag);
        worst.orthogonality = worst.orthogonality.max(g.orthogonality);
        worst.unitarity = worst.unitarity.max(g.unitarity);
        worst.determinant = worst.determinant.max(g.determinant);
    }
    if family.uses_boson() {
        checks.push(SymmetryCheck::new("max |Im U|", worst.max_imag, REALNESS_TOL));
        checks.push(SymmetryCheck::new("|U Uᵀ − I|", worst.orthogonality, GROUP_TOL));
    }
    checks.push(SymmetryCheck::new("|U U† − I|", worst.unitarity, GROUP_TOL));
    checks.push(SymmetryCheck::new("|det U − 1|", worst.determinant, GROUP_TOL));
    Ok(SymmetryReport { family, n_qubits: n, fock_cutoff: d, draws, charge: charge_name.into(), checks })
}

/// `1 − |⟨↑,q+1| e^{−iθ*G} |↓,q⟩|²` at the full-transfer sideband angle.
pub fn transfer_population_error(q: usize) -> Result<f64> {
    let space = SpinBosonSpace::new(1, q + 3);
    let d = space.boson_dim();
    let h = blue_sideband(0, space, 1.0)?;
    let start = PureState::basis(space, DOWN * d + q)?;
    let out = apply_generator(&start, &h, full_transfer_area(q))?;
    let p = out.vector()[UP * d + q + 1].norm_sqr();
    Ok((1.0 - p).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::sigma_x;
    use crate::hilbert::{embed, Site};

    #[test]
    fn sideband_family_passes() {
        for n in 2..=3 {
            let r = symmetry_audit(AnsatzFamily::QdbMps, n, 5, 1).unwrap();
            assert!(r.passed(), "{:?}", r.failures());
            assert_eq!(r.checks.len(), 5);
        }
    }

    #[test]
    fn other_families_conserve_their_charges() {
        for family in [AnsatzFamily::CsdMps, AnsatzFamily::Csa] {
            let r = symmetry_audit(family, 3, 3, 2).unwrap();
            assert!(r.passed(), "{family:?}: {:?}", r.failures());
        }
        assert_eq!(symmetry_audit(AnsatzFamily::Csa, 3, 1, 0).unwrap().charge, "M");
    }

    #[test]
    fn corrupted_generator_breaks_conservation() {
        let space = SpinBosonSpace::new(2, 3);
        let z = extended_magnetization(space);
        let g = blue_sideband(1, space, 1.0).unwrap();
        assert!(charge_defect(std::slice::from_ref(&g), &z).unwrap() < 1e-14);
        let bad = g.add(&embed(&sigma_x(), &[Site::Qubit(0)], space).unwrap()).unwrap();
        assert!(charge_defect(&[g, bad], &z).unwrap() > 1.0);
    }

    #[test]
    fn complex_unitaries_fail_realness() {
        let u = ndarray::array![[C64::new(0.0, 1.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(0.0, -1.0)]];
        let g = group_defects(&u).unwrap();
        assert!(g.max_imag == 1.0 && g.orthogonality > 1.0 && g.unitarity < 1e-15 && g.determinant < 1e-15);
    }

    #[test]
    fn transfer_areas_are_complete() {
        for q in 0..3 {
            assert!(transfer_population_error(q).unwrap() < 1e-12);
        }
    }

    #[test]
    fn modular_is_rejected() {
        assert!(symmetry_audit(AnsatzFamily::QdbMpsModular, 4, 1, 0).is_err());
    }
}
