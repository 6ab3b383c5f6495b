use ndarray::Array2;
use num_complex::Complex64;

use super::space::{Site, SpinBosonSpace};
use crate::error::{Error, Result};

type C64 = Complex64;

/// Tolerance of the Hermitian and real flags.
pub const FLAG_TOL: f64 = 1e-12;

/// Sparse complex operator on a [`SpinBosonSpace`], stored in compressed rows.
///
/// Column indices are sorted within each row and explicit zeros are dropped.
#[derive(Clone, Debug)]
pub struct LinearOperator {
    space: SpinBosonSpace,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
    hermitian: bool,
    real: bool,
}

impl LinearOperator {
    /// Builds an operator from `(row, col, value)` entries; repeated positions are summed.
    pub fn from_triplets<I>(space: SpinBosonSpace, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let dim = space.dim();
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); dim];
        for (r, c, v) in entries {
            if r >= dim || c >= dim {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({r}, {c}) outside dimension {dim}"
                )));
            }
            rows[r].push((c, v));
        }
        let mut indptr = Vec::with_capacity(dim + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut v = C64::new(0.0, 0.0);
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                if v != C64::new(0.0, 0.0) {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self::from_parts(space, indptr, indices, values))
    }

    fn from_parts(
        space: SpinBosonSpace,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<C64>,
    ) -> Self {
        let mut op = Self {
            space,
            indptr,
            indices,
            values,
            hermitian: false,
            real: false,
        };
        op.real = op.values.iter().all(|v| v.im.abs() <= FLAG_TOL);
        op.hermitian = op.hermiticity_defect() <= FLAG_TOL;
        op
    }

    pub fn from_dense(space: SpinBosonSpace, m: &Array2<C64>) -> Result<Self> {
        let dim = space.dim();
        if m.dim() != (dim, dim) {
            return Err(Error::DimensionMismatch(format!(
                "matrix {:?} for space dimension {dim}",
                m.dim()
            )));
        }
        let entries = m
            .indexed_iter()
            .filter(|(_, v)| **v != C64::new(0.0, 0.0))
            .map(|((r, c), v)| (r, c, *v));
        Self::from_triplets(space, entries)
    }

    pub fn identity(space: SpinBosonSpace) -> Self {
        let dim = space.dim();
        Self::from_parts(
            space,
            (0..=dim).collect(),
            (0..dim).collect(),
            vec![C64::new(1.0, 0.0); dim],
        )
    }

    pub fn zeros(space: SpinBosonSpace) -> Self {
        Self::from_parts(space, vec![0; space.dim() + 1], Vec::new(), Vec::new())
    }

    /// Diagonal operator with the given real entries.
    pub fn diagonal(space: SpinBosonSpace, diag: &[f64]) -> Result<Self> {
        if diag.len() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} diagonal entries for dimension {}",
                diag.len(),
                space.dim()
            )));
        }
        Self::from_triplets(
            space,
            diag.iter().enumerate().map(|(i, &v)| (i, i, C64::new(v, 0.0))),
        )
    }

    pub fn space(&self) -> SpinBosonSpace {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Nonzero entries of row `r` as `(column, value)` pairs.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        self.indices[a..b].iter().copied().zip(self.values[a..b].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        match self.indices[a..b].binary_search(&c) {
            Ok(k) => self.values[a + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim()).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let dim = self.dim();
        let mut m = Array2::zeros((dim, dim));
        for (r, c, v) in self.triplets() {
            m[[r, c]] = v;
        }
        m
    }

    /// Largest `|A_rc - conj(A_cr)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.triplets()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for operator dimension {}",
                x.len(),
                self.dim()
            )));
        }
        Ok((0..self.dim())
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect())
    }

    /// `<x| A |x>` for a vector of matching length.
    pub fn expectation(&self, x: &[C64]) -> Result<C64> {
        let ax = self.apply(x)?;
        Ok(x.iter().zip(&ax).map(|(a, b)| a.conj() * b).sum())
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch(format!(
                "operators on {:?} and {:?}",
                self.space, other.space
            )));
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        let dim = self.dim();
        let mut acc = vec![C64::new(0.0, 0.0); dim];
        let mut touched = Vec::new();
        let mut mark = vec![false; dim];
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for r in 0..dim {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !mark[c] {
                        mark[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                if acc[c] != C64::new(0.0, 0.0) {
                    indices.push(c);
                    values.push(acc[c]);
                }
                acc[c] = C64::new(0.0, 0.0);
                mark[c] = false;
            }
            touched.clear();
            indptr.push(indices.len());
        }
        Ok(Self::from_parts(self.space, indptr, indices, values))
    }

    /// `a·self + b·other`.
    pub fn linear_combination(&self, a: C64, other: &Self, b: C64) -> Result<Self> {
        self.check_same_space(other)?;
        let entries = self
            .triplets()
            .map(|(r, c, v)| (r, c, a * v))
            .chain(other.triplets().map(|(r, c, v)| (r, c, b * v)));
        Self::from_triplets(self.space, entries)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.linear_combination(C64::new(1.0, 0.0), other, C64::new(1.0, 0.0))
    }

    pub fn scale(&self, s: C64) -> Self {
        let values = self.values.iter().map(|v| v * s).collect();
        Self::from_parts(self.space, self.indptr.clone(), self.indices.clone(), values)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.space, self.triplets().map(|(r, c, v)| (c, r, v.conj())))
            .expect("adjoint keeps the dimension")
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.space, self.triplets().map(|(r, c, v)| (c, r, v)))
            .expect("transpose keeps the dimension")
    }

    /// `[self, other] = self·other - other·self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        let ab = self.matmul(other)?;
        let ba = other.matmul(self)?;
        ab.linear_combination(C64::new(1.0, 0.0), &ba, C64::new(-1.0, 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|r| self.get(r, r)).sum()
    }

    /// Dense submatrix on the given basis indices.
    pub fn submatrix(&self, idx: &[usize]) -> Array2<C64> {
        let mut pos = std::collections::HashMap::with_capacity(idx.len());
        for (k, &i) in idx.iter().enumerate() {
            pos.insert(i, k);
        }
        let mut m = Array2::zeros((idx.len(), idx.len()));
        for (k, &r) in idx.iter().enumerate() {
            for (c, v) in self.row(r) {
                if let Some(&j) = pos.get(&c) {
                    m[[k, j]] = v;
                }
            }
        }
        m
    }

    /// Largest entry connecting two basis states with different values of `label`.
    pub fn max_cross_block(&self, label: impl Fn(usize) -> i64) -> f64 {
        self.triplets()
            .filter(|(r, c, _)| label(*r) != label(*c))
            .map(|(_, _, v)| v.norm())
            .fold(0.0, f64::max)
    }

    /// Kronecker product. The result must respect the basis order, so the left
    /// factor may not carry a boson unless the right factor is empty.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let space = product_space(self.space, other.space)?;
        let db = other.dim();
        let entries = self.triplets().flat_map(|(ra, ca, va)| {
            other
                .triplets()
                .map(move |(rb, cb, vb)| (ra * db + rb, ca * db + cb, va * vb))
        });
        Self::from_triplets(space, entries)
    }

    /// Same matrix reinterpreted on another space of equal dimension.
    pub fn with_space(&self, space: SpinBosonSpace) -> Result<Self> {
        if space.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot view dimension {} as {:?}",
                self.dim(),
                space
            )));
        }
        let mut op = self.clone();
        op.space = space;
        Ok(op)
    }
}

/// Space of `A ⊗ B` under the qubits-then-boson ordering.
pub(crate) fn product_space(a: SpinBosonSpace, b: SpinBosonSpace) -> Result<SpinBosonSpace> {
    if a.has_boson() && (b.n_qubits > 0 || b.has_boson()) {
        return Err(Error::DimensionMismatch(
            "left factor carries the boson, which must be the last factor".into(),
        ));
    }
    Ok(SpinBosonSpace::new(a.n_qubits + b.n_qubits, b.fock_cutoff))
}

/// Places `local` (acting on `sites` in the listed order, first site slowest) into
/// `space`, with identity elsewhere.
pub fn embed(local: &LinearOperator, sites: &[Site], space: SpinBosonSpace) -> Result<LinearOperator> {
    let mut dims = Vec::with_capacity(sites.len());
    let mut strides = Vec::with_capacity(sites.len());
    for (k, &s) in sites.iter().enumerate() {
        if sites[..k].contains(&s) {
            return Err(Error::DuplicateSite(format!("{s:?}")));
        }
        dims.push(space.site_dim(s)?);
        strides.push(space.stride(s)?);
    }
    let local_dim: usize = dims.iter().product();
    if local_dim != local.dim() {
        return Err(Error::DimensionMismatch(format!(
            "local operator of dimension {} for sites of total dimension {local_dim}",
            local.dim()
        )));
    }
    // global offset of each local index
    let offsets: Vec<usize> = (0..local_dim)
        .map(|mut k| {
            let mut off = 0;
            for f in (0..dims.len()).rev() {
                off += (k % dims[f]) * strides[f];
                k /= dims[f];
            }
            off
        })
        .collect();
    let local_of = |g: usize| -> usize {
        let mut k = 0;
        for f in 0..dims.len() {
            k = k * dims[f] + (g / strides[f]) % dims[f];
        }
        k
    };
    let dim = space.dim();
    let mut entries = Vec::with_capacity(dim * (local.nnz() / local_dim.max(1) + 1));
    for g in 0..dim {
        let lr = local_of(g);
        let base = g - offsets[lr];
        for (lc, v) in local.row(lr) {
            entries.push((g, base + offsets[lc], v));
        }
    }
    LinearOperator::from_triplets(space, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::pauli::{destruction_operator, sigma_x, sigma_z};

    #[test]
    fn sigma_z_times_annihilator() {
        let op = sigma_z().kron(&destruction_operator(2)).unwrap();
        assert_eq!(op.space(), SpinBosonSpace::new(1, 2));
        assert_eq!(op.nnz(), 2);
        assert_eq!(op.get(0, 1), C64::new(1.0, 0.0));
        assert_eq!(op.get(2, 3), C64::new(-1.0, 0.0));
    }

    #[test]
    fn embed_places_the_factor() {
        let s = SpinBosonSpace::qubits(2);
        let x1 = embed(&sigma_x(), &[Site::Qubit(0)], s).unwrap();
        let dense = x1.to_dense();
        let expected = sigma_x().kron(&LinearOperator::identity(SpinBosonSpace::qubits(1))).unwrap();
        assert_eq!(dense, expected.to_dense());
    }

    #[test]
    fn embed_respects_site_order() {
        // σ+ on qubit 1 times σ- on qubit 0, listed in reversed order
        use crate::hilbert::pauli::{sigma_minus, sigma_plus};
        let s = SpinBosonSpace::qubits(2);
        let local = sigma_plus().kron(&sigma_minus()).unwrap();
        let a = embed(&local, &[Site::Qubit(1), Site::Qubit(0)], s).unwrap();
        let b = embed(&sigma_minus(), &[Site::Qubit(0)], s)
            .unwrap()
            .matmul(&embed(&sigma_plus(), &[Site::Qubit(1)], s).unwrap())
            .unwrap();
        assert_eq!(a.to_dense(), b.to_dense());
    }

    #[test]
    fn embed_rejects_bad_sites() {
        let s = SpinBosonSpace::qubits(2);
        assert!(matches!(
            embed(&sigma_x(), &[Site::Qubit(2)], s),
            Err(Error::SiteOutOfRange { .. })
        ));
        let xx = sigma_x().kron(&sigma_x()).unwrap();
        assert!(matches!(
            embed(&xx, &[Site::Qubit(0), Site::Qubit(0)], s),
            Err(Error::DuplicateSite(_))
        ));
        assert!(matches!(
            embed(&xx, &[Site::Qubit(0)], s),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn boson_must_be_last_in_products() {
        let a = destruction_operator(2);
        assert!(a.kron(&sigma_x()).is_err());
    }

    #[test]
    fn flags_track_structure() {
        assert!(sigma_x().is_hermitian() && sigma_x().is_real());
        let a = destruction_operator(3);
        assert!(!a.is_hermitian());
        let y = crate::hilbert::pauli::sigma_y();
        assert!(y.is_hermitian() && !y.is_real());
    }
}
