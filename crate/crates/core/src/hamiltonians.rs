//! Generators of the variational gates and the target spin models.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    destruction_operator, embed, sigma_minus, sigma_plus, sigma_z, LinearOperator, Pauli,
    PauliString, PauliSum, Site, SpinBosonSpace,
};

type C64 = Complex64;

/// Default target-model parameters.
pub const DEFAULT_DIMERIZATION: f64 = 0.5;
pub const DEFAULT_EDGE_FIELD: f64 = 0.1;
/// Default long-range XY parameters.
pub const DEFAULT_XY_ALPHA: f64 = 1.34;
pub const DEFAULT_XY_FIELD: f64 = 20.0;
pub const DEFAULT_XY_COUPLING: f64 = 1.0;

fn check_qubit(space: SpinBosonSpace, j: usize) -> Result<()> {
    space.check_site(Site::Qubit(j))
}

/// Blue-sideband generator `i·rate·(a σ⁻_j − a† σ⁺_j)` on qubit `j` and the boson.
pub fn blue_sideband(j: usize, space: SpinBosonSpace, rate: f64) -> Result<LinearOperator> {
    check_qubit(space, j)?;
    if !space.has_boson() {
        return Err(Error::NoBoson);
    }
    let a = destruction_operator(space.fock_cutoff);
    let local = sigma_minus()
        .kron(&a)?
        .linear_combination(C64::new(0.0, rate), &sigma_plus().kron(&a.adjoint())?, C64::new(0.0, -rate))?;
    embed(&local, &[Site::Qubit(j), Site::Boson], space)
}

/// Sideband angle `π/(2√(q+1))` that moves `|↓,q⟩` completely to `|↑,q+1⟩` at unit rate.
pub fn full_transfer_area(q: usize) -> f64 {
    std::f64::consts::PI / (2.0 * ((q + 1) as f64).sqrt())
}

/// Collective coupling `Σ_{i<j ∈ S} σ^x_i σ^x_j`.
pub fn ms_coupling(sites: &[usize], space: SpinBosonSpace) -> Result<LinearOperator> {
    if sites.len() < 2 {
        return Err(Error::InvalidArgument("coupling needs at least two sites".into()));
    }
    let mut h = PauliSum::new();
    for (a, &i) in sites.iter().enumerate() {
        check_qubit(space, i)?;
        for &j in &sites[a + 1..] {
            if i == j {
                return Err(Error::DuplicateSite(format!("qubit {i}")));
            }
            h.push(1.0, PauliString::pair(i, Pauli::X, j, Pauli::X)?);
        }
    }
    h.operator(space)
}

/// Coupling matrix `J_ij = J0 |i-j|^{-α}`.
pub fn xy_couplings(n: usize, alpha: f64, j0: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        j0 * ((i as f64 - j as f64).abs()).powf(-alpha)
                    }
                })
                .collect()
        })
        .collect()
}

/// Long-range XY model `Σ_{i<j} J_ij/2 (σ^xσ^x + σ^yσ^y) + B Σ σ^z` as a Pauli sum.
pub fn xy_terms(n: usize, alpha: f64, j0: f64, b: f64) -> PauliSum {
    let j = xy_couplings(n, alpha, j0);
    let mut h = PauliSum::new();
    for i in 0..n {
        for k in i + 1..n {
            let c = j[i][k] / 2.0;
            h.push(c, PauliString::pair(i, Pauli::X, k, Pauli::X).expect("distinct"));
            h.push(c, PauliString::pair(i, Pauli::Y, k, Pauli::Y).expect("distinct"));
        }
        h.push(b, PauliString::single(i, Pauli::Z));
    }
    h
}

pub fn xy_hamiltonian(n: usize, alpha: f64, j0: f64, b: f64, space: SpinBosonSpace) -> Result<LinearOperator> {
    if n != space.n_qubits {
        return Err(Error::DimensionMismatch(format!(
            "{n}-qubit model on a {}-qubit space",
            space.n_qubits
        )));
    }
    xy_terms(n, alpha, j0, b).operator(space)
}

/// Hopping amplitude of bond `(b, b+1)`, zero-based: `1 + (-1)^b t`.
pub fn ssh_bond_strength(bond: usize, t: f64) -> f64 {
    if bond % 2 == 0 {
        1.0 + t
    } else {
        1.0 - t
    }
}

/// Dimerized chain with open ends and opposite edge fields:
/// `Σ_b (1 + (-1)^b t)(σ^xσ^x + σ^yσ^y)_{b,b+1} + B̃(σ^z_0 − σ^z_{N-1})`.
pub fn ssh_terms(n: usize, t: f64, b_tilde: f64) -> Result<PauliSum> {
    if n < 2 {
        return Err(Error::InvalidArgument("chain needs at least two sites".into()));
    }
    let mut h = PauliSum::new();
    for bond in 0..n - 1 {
        let c = ssh_bond_strength(bond, t);
        h.push(c, PauliString::pair(bond, Pauli::X, bond + 1, Pauli::X)?);
        h.push(c, PauliString::pair(bond, Pauli::Y, bond + 1, Pauli::Y)?);
    }
    h.push(b_tilde, PauliString::single(0, Pauli::Z));
    h.push(-b_tilde, PauliString::single(n - 1, Pauli::Z));
    Ok(h)
}

pub fn ssh_hamiltonian(n: usize, t: f64, b_tilde: f64, space: SpinBosonSpace) -> Result<LinearOperator> {
    if n != space.n_qubits {
        return Err(Error::DimensionMismatch(format!(
            "{n}-site chain on a {}-qubit space",
            space.n_qubits
        )));
    }
    ssh_terms(n, t, b_tilde)?.operator(space)
}

pub fn z_rotation_generator(j: usize, space: SpinBosonSpace) -> Result<LinearOperator> {
    check_qubit(space, j)?;
    embed(&sigma_z(), &[Site::Qubit(j)], space)
}

/// Qubit magnetization `½ Σ σ^z`.
pub fn magnetization(space: SpinBosonSpace) -> LinearOperator {
    let diag: Vec<f64> = (0..space.dim()).map(|i| space.magnetization2(i) as f64 / 2.0).collect();
    LinearOperator::diagonal(space, &diag).expect("diagonal of matching length")
}

/// Conserved charge of the sideband gates, `½ Σ σ^z − a†a`.
pub fn extended_magnetization(space: SpinBosonSpace) -> LinearOperator {
    let diag: Vec<f64> = (0..space.dim()).map(|i| space.charge2(i) as f64 / 2.0).collect();
    LinearOperator::diagonal(space, &diag).expect("diagonal of matching length")
}

/// Spin parity `Π σ^z`.
pub fn spin_parity(space: SpinBosonSpace) -> LinearOperator {
    let diag: Vec<f64> = (0..space.dim())
        .map(|i| if space.qubit_bits(i).count_ones() % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    LinearOperator::diagonal(space, &diag).expect("diagonal of matching length")
}

/// Kind of a variational gate generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GeneratorKind {
    BlueSideband { site: usize },
    Ms { sites: Vec<usize> },
    Xy { alpha: f64, j0: f64, b: f64 },
    ZRotation { site: usize },
}

/// Generator of one gate `exp(-iθ·rate·G)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub rate_unit: f64,
}

impl GeneratorSpec {
    pub fn sideband(site: usize) -> Self {
        Self { kind: GeneratorKind::BlueSideband { site }, rate_unit: 1.0 }
    }

    pub fn ms(sites: Vec<usize>) -> Self {
        Self { kind: GeneratorKind::Ms { sites }, rate_unit: 1.0 }
    }

    pub fn xy(alpha: f64, j0: f64, b: f64) -> Self {
        Self { kind: GeneratorKind::Xy { alpha, j0, b }, rate_unit: 1.0 }
    }

    pub fn z_rotation(site: usize) -> Self {
        Self { kind: GeneratorKind::ZRotation { site }, rate_unit: 1.0 }
    }

    /// Factors the generator acts on, in the order of [`Self::local_operator`].
    pub fn sites(&self, n_qubits: usize) -> Vec<Site> {
        match &self.kind {
            GeneratorKind::BlueSideband { site } => vec![Site::Qubit(*site), Site::Boson],
            GeneratorKind::Ms { sites } => sites.iter().map(|&s| Site::Qubit(s)).collect(),
            GeneratorKind::Xy { .. } => (0..n_qubits).map(Site::Qubit).collect(),
            GeneratorKind::ZRotation { site } => vec![Site::Qubit(*site)],
        }
    }

    /// Qubits touched by the generator.
    pub fn qubits(&self, n_qubits: usize) -> Vec<usize> {
        self.sites(n_qubits)
            .into_iter()
            .filter_map(|s| if let Site::Qubit(j) = s { Some(j) } else { None })
            .collect()
    }

    pub fn uses_boson(&self) -> bool {
        matches!(self.kind, GeneratorKind::BlueSideband { .. })
    }

    /// Generator restricted to its own factors, on a space with those factors in order.
    pub fn local_operator(&self, n_qubits: usize, fock_cutoff: usize) -> Result<LinearOperator> {
        let op = match &self.kind {
            GeneratorKind::BlueSideband { .. } => {
                blue_sideband(0, SpinBosonSpace::new(1, fock_cutoff), 1.0)?
            }
            GeneratorKind::Ms { sites } => {
                let k = sites.len();
                ms_coupling(&(0..k).collect::<Vec<_>>(), SpinBosonSpace::qubits(k))?
            }
            GeneratorKind::Xy { alpha, j0, b } => {
                xy_hamiltonian(n_qubits, *alpha, *j0, *b, SpinBosonSpace::qubits(n_qubits))?
            }
            GeneratorKind::ZRotation { .. } => sigma_z(),
        };
        Ok(op.scale(C64::new(self.rate_unit, 0.0)))
    }

    /// Generator on the full space.
    pub fn operator(&self, space: SpinBosonSpace) -> Result<LinearOperator> {
        let op = match &self.kind {
            GeneratorKind::BlueSideband { site } => blue_sideband(*site, space, 1.0)?,
            GeneratorKind::Ms { sites } => ms_coupling(sites, space)?,
            GeneratorKind::Xy { alpha, j0, b } => {
                xy_terms(space.n_qubits, *alpha, *j0, *b).operator(space)?
            }
            GeneratorKind::ZRotation { site } => z_rotation_generator(*site, space)?,
        };
        Ok(op.scale(C64::new(self.rate_unit, 0.0)))
    }
}
