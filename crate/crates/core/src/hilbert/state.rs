use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::operator::{product_space, LinearOperator};
use super::space::{Site, SpinBosonSpace, DOWN, UP};
use crate::error::{Error, Result};

type C64 = Complex64;

/// Tolerance on unit norm and unit trace.
pub const NORM_TOL: f64 = 1e-10;

/// Normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    space: SpinBosonSpace,
    vector: Array1<C64>,
}

impl PureState {
    pub fn new(space: SpinBosonSpace, vector: Array1<C64>) -> Result<Self> {
        if vector.len() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for dimension {}",
                vector.len(),
                space.dim()
            )));
        }
        let norm = vector.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!("state norm {norm} is not 1")));
        }
        Ok(Self { space, vector })
    }

    /// Normalizes `vector`; fails on a zero vector.
    pub fn normalized(space: SpinBosonSpace, mut vector: Array1<C64>) -> Result<Self> {
        let norm = vector.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("cannot normalize a zero vector".into()));
        }
        vector.mapv_inplace(|a| a / norm);
        Self::new(space, vector)
    }

    pub fn basis(space: SpinBosonSpace, index: usize) -> Result<Self> {
        if index >= space.dim() {
            return Err(Error::DimensionMismatch(format!("basis index {index}")));
        }
        let mut v = Array1::zeros(space.dim());
        v[index] = C64::new(1.0, 0.0);
        Ok(Self { space, vector: v })
    }

    pub fn space(&self) -> SpinBosonSpace {
        self.space
    }

    pub fn vector(&self) -> &Array1<C64> {
        &self.vector
    }

    pub fn into_vector(self) -> Array1<C64> {
        self.vector
    }

    pub fn overlap(&self, other: &PureState) -> Result<C64> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch("overlap across spaces".into()));
        }
        Ok(self.vector.iter().zip(other.vector.iter()).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn expectation(&self, op: &LinearOperator) -> Result<f64> {
        if op.space().dim() != self.space.dim() {
            return Err(Error::DimensionMismatch("operator and state".into()));
        }
        Ok(op.expectation(self.vector.as_slice().expect("contiguous"))?.re)
    }

    pub fn kron(&self, other: &PureState) -> Result<PureState> {
        let space = product_space(self.space, other.space)?;
        let db = other.vector.len();
        let mut v = Array1::zeros(space.dim());
        for (i, a) in self.vector.iter().enumerate() {
            for (j, b) in other.vector.iter().enumerate() {
                v[i * db + j] = a * b;
            }
        }
        Ok(PureState { space, vector: v })
    }

    /// Multiplies by a global phase so the first amplitude above `1e-12` is real and positive.
    pub fn fix_phase(&mut self) {
        if let Some(a) = self.vector.iter().find(|a| a.norm() > 1e-12).copied() {
            let ph = a.conj() / a.norm();
            self.vector.mapv_inplace(|x| x * ph);
        }
    }
}

/// Product of single-qubit states, used as the input of the streaming engine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductState {
    pub locals: Vec<[C64; 2]>,
}

impl ProductState {
    /// `|↓↑↓↑…⟩`, qubit 0 down.
    pub fn neel(n: usize) -> Self {
        let down = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let up = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        Self {
            locals: (0..n).map(|j| if j % 2 == 0 { down } else { up }).collect(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.locals.len()
    }

    pub fn to_pure(&self) -> Result<PureState> {
        let mut v = Array1::from_elem(1, C64::new(1.0, 0.0));
        for loc in &self.locals {
            let mut next = Array1::zeros(v.len() * 2);
            for (i, a) in v.iter().enumerate() {
                next[2 * i] = a * loc[UP];
                next[2 * i + 1] = a * loc[DOWN];
            }
            v = next;
        }
        PureState::new(SpinBosonSpace::qubits(self.locals.len()), v)
    }
}

pub fn neel_state(n: usize) -> PureState {
    ProductState::neel(n).to_pure().expect("basis product state")
}

/// Dense density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    space: SpinBosonSpace,
    matrix: Array2<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity (`1e-12`) and unit trace.
    pub fn new(space: SpinBosonSpace, matrix: Array2<C64>) -> Result<Self> {
        let dim = space.dim();
        if matrix.dim() != (dim, dim) {
            return Err(Error::DimensionMismatch(format!(
                "matrix {:?} for dimension {dim}",
                matrix.dim()
            )));
        }
        let mut herm = 0.0f64;
        for r in 0..dim {
            for c in r..dim {
                herm = herm.max((matrix[[r, c]] - matrix[[c, r]].conj()).norm());
            }
        }
        if herm > 1e-12 {
            return Err(Error::NotHermitian(herm));
        }
        let tr: C64 = (0..dim).map(|i| matrix[[i, i]]).sum();
        if (tr.re - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!("trace {} is not 1", tr.re)));
        }
        Ok(Self { space, matrix })
    }

    pub(crate) fn new_unchecked(space: SpinBosonSpace, matrix: Array2<C64>) -> Self {
        Self { space, matrix }
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let v = psi.vector();
        let dim = v.len();
        let mut m = Array2::zeros((dim, dim));
        for r in 0..dim {
            if v[r] == C64::new(0.0, 0.0) {
                continue;
            }
            for c in 0..dim {
                m[[r, c]] = v[r] * v[c].conj();
            }
        }
        Self { space: psi.space(), matrix: m }
    }

    pub fn space(&self) -> SpinBosonSpace {
        self.space
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diag().sum()
    }

    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `Re Tr[O ρ]`.
    pub fn expectation(&self, op: &LinearOperator) -> Result<f64> {
        if op.dim() != self.matrix.nrows() {
            return Err(Error::DimensionMismatch("operator and density matrix".into()));
        }
        Ok(op.triplets().map(|(r, c, v)| v * self.matrix[[c, r]]).sum::<C64>().re)
    }

    /// Smallest eigenvalue, for positivity checks.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        use ndarray_linalg::{EigValsh, UPLO};
        let ev = self.matrix.eigvalsh(UPLO::Lower)?;
        Ok(ev.iter().copied().fold(f64::INFINITY, f64::min))
    }

    /// Checks Hermiticity, trace and positivity at the given tolerance.
    pub fn validate(&self, tol: f64) -> Result<()> {
        Self::new(self.space, self.matrix.clone())?;
        let m = self.min_eigenvalue()?;
        if m < -tol {
            return Err(Error::Invariant(format!("negative eigenvalue {m:e}")));
        }
        Ok(())
    }

    pub fn kron(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let space = product_space(self.space, other.space)?;
        let db = other.matrix.nrows();
        let mut m = Array2::zeros((space.dim(), space.dim()));
        for ((ra, ca), a) in self.matrix.indexed_iter() {
            if *a == C64::new(0.0, 0.0) {
                continue;
            }
            for ((rb, cb), b) in other.matrix.indexed_iter() {
                m[[ra * db + rb, ca * db + cb]] = a * b;
            }
        }
        Ok(DensityMatrix { space, matrix: m })
    }

    /// Whether all off-diagonal entries vanish exactly.
    pub fn is_diagonal(&self) -> bool {
        self.matrix
            .indexed_iter()
            .all(|((r, c), v)| r == c || *v == C64::new(0.0, 0.0))
    }
}

/// Thermal state of the boson truncated to `d` levels and renormalized, together
/// with the weight `r^d` the untruncated distribution puts on levels `≥ d`.
pub fn thermal_state(n0: f64, d: usize) -> Result<(DensityMatrix, f64)> {
    if !(n0 >= 0.0) || !n0.is_finite() {
        return Err(Error::InvalidArgument(format!("mean occupation {n0} must be ≥ 0")));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("Fock cutoff must be ≥ 1".into()));
    }
    let p = thermal_populations(n0, d);
    let mut m = Array2::zeros((d, d));
    for (q, pq) in p.iter().enumerate() {
        m[[q, q]] = C64::new(*pq, 0.0);
    }
    let r = n0 / (1.0 + n0);
    Ok((DensityMatrix::new(SpinBosonSpace::boson(d), m)?, r.powi(d as i32)))
}

/// Renormalized populations `p_q ∝ r^q`, `q < d`.
pub fn thermal_populations(n0: f64, d: usize) -> Vec<f64> {
    let r = n0 / (1.0 + n0);
    let w: Vec<f64> = (0..d).map(|q| r.powi(q as i32)).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// Traces out the listed factors.
pub fn partial_trace(rho: &DensityMatrix, discard: &[Site]) -> Result<DensityMatrix> {
    let space = rho.space();
    for (k, s) in discard.iter().enumerate() {
        space.check_site(*s)?;
        if discard[..k].contains(s) {
            return Err(Error::DuplicateSite(format!("{s:?}")));
        }
    }
    let kept_sites: Vec<Site> = space.sites().into_iter().filter(|s| !discard.contains(s)).collect();
    let kept_qubits: Vec<usize> = kept_sites
        .iter()
        .filter_map(|s| if let Site::Qubit(j) = s { Some(*j) } else { None })
        .collect();
    let keeps_boson = kept_sites.contains(&Site::Boson);
    if kept_sites.is_empty() {
        return Err(Error::InvalidArgument("cannot trace out every factor".into()));
    }
    let out_space = SpinBosonSpace::new(kept_qubits.len(), if keeps_boson { space.fock_cutoff } else { 0 });

    let strides_of = |sites: &[Site]| -> Result<Vec<(usize, usize)>> {
        sites.iter().map(|s| Ok((space.site_dim(*s)?, space.stride(*s)?))).collect()
    };
    let kept = strides_of(&kept_sites)?;
    let disc = strides_of(discard)?;
    let offsets = |f: &[(usize, usize)]| -> Vec<usize> {
        let n: usize = f.iter().map(|x| x.0).product();
        (0..n)
            .map(|mut k| {
                let mut off = 0;
                for &(d, s) in f.iter().rev() {
                    off += (k % d) * s;
                    k /= d;
                }
                off
            })
            .collect()
    };
    let base = offsets(&kept);
    let env = offsets(&disc);
    let m = rho.matrix();
    let dim = base.len();
    let mut out = Array2::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            out[[i, j]] = env.iter().map(|&e| m[[base[i] + e, base[j] + e]]).sum();
        }
    }
    Ok(DensityMatrix::new_unchecked(out_space, out))
}

/// Reduced state of the qubits.
pub fn trace_out_boson(rho: &DensityMatrix) -> Result<DensityMatrix> {
    if !rho.space().has_boson() {
        return Ok(rho.clone());
    }
    partial_trace(rho, &[Site::Boson])
}
