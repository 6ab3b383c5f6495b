//! Single-site operators and Pauli strings.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::operator::{embed, LinearOperator};
use super::space::{Site, SpinBosonSpace, DOWN, UP};
use crate::error::{Error, Result};

type C64 = Complex64;

const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

fn qubit_op(entries: &[(usize, usize, C64)]) -> LinearOperator {
    LinearOperator::from_triplets(SpinBosonSpace::qubits(1), entries.iter().copied())
        .expect("2x2 entries")
}

pub fn sigma_x() -> LinearOperator {
    qubit_op(&[(UP, DOWN, ONE), (DOWN, UP, ONE)])
}

pub fn sigma_y() -> LinearOperator {
    qubit_op(&[(UP, DOWN, -I), (DOWN, UP, I)])
}

pub fn sigma_z() -> LinearOperator {
    qubit_op(&[(UP, UP, ONE), (DOWN, DOWN, -ONE)])
}

/// `σ⁺ = |↑⟩⟨↓|`.
pub fn sigma_plus() -> LinearOperator {
    qubit_op(&[(UP, DOWN, ONE)])
}

/// `σ⁻ = |↓⟩⟨↑|`.
pub fn sigma_minus() -> LinearOperator {
    qubit_op(&[(DOWN, UP, ONE)])
}

/// Truncated annihilation operator, `a|n⟩ = √n |n-1⟩` for `n < d`.
pub fn destruction_operator(d: usize) -> LinearOperator {
    LinearOperator::from_triplets(
        SpinBosonSpace::boson(d),
        (1..d).map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0))),
    )
    .expect("annihilator entries")
}

pub fn number_operator(d: usize) -> LinearOperator {
    let diag: Vec<f64> = (0..d).map(|n| n as f64).collect();
    LinearOperator::diagonal(SpinBosonSpace::boson(d), &diag).expect("number operator")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn operator(self) -> LinearOperator {
        match self {
            Pauli::X => sigma_x(),
            Pauli::Y => sigma_y(),
            Pauli::Z => sigma_z(),
        }
    }

    /// Entry `⟨r|P|c⟩` and the column paired with row `r`.
    pub fn row_entry(self, r: usize) -> (usize, C64) {
        match (self, r) {
            (Pauli::X, _) => (1 - r, ONE),
            (Pauli::Y, UP) => (DOWN, -I),
            (Pauli::Y, _) => (UP, I),
            (Pauli::Z, UP) => (UP, ONE),
            (Pauli::Z, _) => (DOWN, -ONE),
        }
    }
}

/// Product of Paulis on distinct qubits, kept sorted by site.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliString {
    factors: Vec<(usize, Pauli)>,
}

impl PauliString {
    pub fn new(mut factors: Vec<(usize, Pauli)>) -> Result<Self> {
        factors.sort();
        for w in factors.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::DuplicateSite(format!("qubit {}", w[0].0)));
            }
        }
        Ok(Self { factors })
    }

    pub fn identity() -> Self {
        Self { factors: Vec::new() }
    }

    pub fn single(site: usize, p: Pauli) -> Self {
        Self { factors: vec![(site, p)] }
    }

    pub fn pair(i: usize, pi: Pauli, j: usize, pj: Pauli) -> Result<Self> {
        Self::new(vec![(i, pi), (j, pj)])
    }

    pub fn factors(&self) -> &[(usize, Pauli)] {
        &self.factors
    }

    pub fn max_site(&self) -> Option<usize> {
        self.factors.last().map(|f| f.0)
    }

    pub fn operator(&self, space: SpinBosonSpace) -> Result<LinearOperator> {
        let mut op = LinearOperator::identity(space);
        for &(s, p) in &self.factors {
            op = op.matmul(&embed(&p.operator(), &[Site::Qubit(s)], space)?)?;
        }
        Ok(op)
    }

    /// Row `r` of the string on `space`: the single nonzero column and its value.
    pub fn row_entry(&self, space: SpinBosonSpace, r: usize) -> (usize, C64) {
        let mut c = r;
        let mut v = ONE;
        for &(s, p) in &self.factors {
            let stride = space.boson_dim() << (space.n_qubits - 1 - s);
            let bit = (r / stride) & 1;
            let (cb, pv) = p.row_entry(bit);
            c = c - bit * stride + cb * stride;
            v *= pv;
        }
        (c, v)
    }
}

/// Real linear combination of Pauli strings plus a constant.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PauliSum {
    pub constant: f64,
    pub terms: Vec<(f64, PauliString)>,
}

impl PauliSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_string(s: PauliString) -> Self {
        Self { constant: 0.0, terms: vec![(1.0, s)] }
    }

    pub fn push(&mut self, coeff: f64, s: PauliString) {
        if coeff != 0.0 {
            self.terms.push((coeff, s));
        }
    }

    /// Merges repeated strings and drops zero coefficients.
    pub fn simplified(&self) -> Self {
        let mut acc: BTreeMap<PauliString, f64> = BTreeMap::new();
        for (c, s) in &self.terms {
            *acc.entry(s.clone()).or_insert(0.0) += c;
        }
        let mut out = Self { constant: self.constant, terms: Vec::new() };
        for (s, c) in acc {
            if s.factors.is_empty() {
                out.constant += c;
            } else {
                out.push(c, s);
            }
        }
        out
    }

    pub fn max_site(&self) -> Option<usize> {
        self.terms.iter().filter_map(|(_, s)| s.max_site()).max()
    }

    pub fn operator(&self, space: SpinBosonSpace) -> Result<LinearOperator> {
        let mut entries = Vec::new();
        let dim = space.dim();
        if self.constant != 0.0 {
            entries.extend((0..dim).map(|r| (r, r, C64::new(self.constant, 0.0))));
        }
        for (coef, s) in &self.terms {
            if let Some(m) = s.max_site() {
                space.check_site(Site::Qubit(m))?;
            }
            for r in 0..dim {
                let (c, v) = s.row_entry(space, r);
                entries.push((r, c, v * *coef));
            }
        }
        LinearOperator::from_triplets(space, entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_algebra() {
        let x = sigma_x();
        let y = sigma_y();
        let z = sigma_z();
        // σx σy = i σz
        let xy = x.matmul(&y).unwrap();
        assert_eq!(xy.to_dense(), z.scale(I).to_dense());
        // σ⁺ + σ⁻ = σx
        assert_eq!(sigma_plus().add(&sigma_minus()).unwrap().to_dense(), x.to_dense());
        // σ⁻ lowers ↑ to ↓
        assert_eq!(sigma_minus().get(DOWN, UP), ONE);
    }

    #[test]
    fn annihilator_entries() {
        let a = destruction_operator(4);
        assert_eq!(a.nnz(), 3);
        assert!((a.get(2, 3).re - 3f64.sqrt()).abs() < 1e-15);
        let n = a.adjoint().matmul(&a).unwrap();
        let diff = &n.to_dense() - &number_operator(4).to_dense();
        assert!(diff.iter().all(|x| x.norm() < 1e-14));
    }

    #[test]
    fn string_rows_match_embedded_products() {
        let space = SpinBosonSpace::new(3, 2);
        let s = PauliString::new(vec![(2, Pauli::Y), (0, Pauli::X)]).unwrap();
        let op = s.operator(space).unwrap();
        for r in 0..space.dim() {
            let (c, v) = s.row_entry(space, r);
            assert_eq!(op.get(r, c), v);
        }
    }

    #[test]
    fn sums_merge_terms() {
        let mut h = PauliSum::new();
        h.push(1.0, PauliString::single(0, Pauli::Z));
        h.push(2.0, PauliString::single(0, Pauli::Z));
        h.push(0.5, PauliString::identity());
        let s = h.simplified();
        assert_eq!(s.terms.len(), 1);
        assert_eq!(s.terms[0].0, 3.0);
        assert_eq!(s.constant, 0.5);
    }
}
