use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{embed, sigma_minus, sigma_plus, LinearOperator, Site, SpinBosonSpace};

type C64 = Complex64;

/// Relative rank threshold of the spanned real vector space.
pub const LIE_RANK_TOL: f64 = 1e-8;
const MAX_ROUNDS: usize = 64;

/// Hermitian flip-flop generator `i(σ⁻_j σ⁺_k − σ⁺_j σ⁻_k)` on a qubit chain.
pub fn flip_flop(j: usize, k: usize, n: usize) -> Result<LinearOperator> {
    if j == k {
        return Err(Error::DuplicateSite(format!("qubit {j}")));
    }
    let space = SpinBosonSpace::qubits(n);
    let mp = sigma_minus().kron(&sigma_plus())?;
    let pm = sigma_plus().kron(&sigma_minus())?;
    let local = mp.linear_combination(C64::new(0.0, 1.0), &pm, C64::new(0.0, -1.0))?;
    embed(&local, &[Site::Qubit(j), Site::Qubit(k)], space)
}

/// Effective qubit generators obtained from commutators of pairs of sideband
/// gates: one flip-flop per pair of sites.
pub fn effective_generators(n: usize) -> Result<Vec<LinearOperator>> {
    let mut out = Vec::new();
    for j in 0..n {
        for k in j + 1..n {
            out.push(flip_flop(j, k, n)?);
        }
    }
    Ok(out)
}

/// Modified Gram-Schmidt basis over the reals of Hermitian matrices, stored as
/// real vectors of length `2·dim²`.
struct RealSpan {
    basis: Vec<Vec<f64>>,
    tol: f64,
}

impl RealSpan {
    fn flatten(m: &Array2<C64>) -> Vec<f64> {
        m.iter().flat_map(|x| [x.re, x.im]).collect()
    }

    /// Adds `m` when it is independent of the span; returns whether it was added.
    fn insert(&mut self, m: &Array2<C64>) -> bool {
        let mut v = Self::flatten(m);
        let scale = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if scale == 0.0 {
            return false;
        }
        for _ in 0..2 {
            for b in &self.basis {
                let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r <= self.tol * scale {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= r);
        self.basis.push(v);
        true
    }
}

/// `i[A, B]`, Hermitian for Hermitian `A`, `B`.
fn i_commutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    (a.dot(b) - b.dot(a)).mapv(|x| x * C64::new(0.0, 1.0))
}

/// Dimension of the real Lie algebra generated by Hermitian matrices under `i[·,·]`.
pub fn lie_closure_dense(generators: &[Array2<C64>]) -> Result<usize> {
    let Some(first) = generators.first() else {
        return Ok(0);
    };
    let dim = first.nrows();
    if generators.iter().any(|g| g.dim() != (dim, dim)) {
        return Err(Error::DimensionMismatch("generators of different shapes".into()));
    }
    let cap = dim * dim;
    let mut span = RealSpan { basis: Vec::new(), tol: LIE_RANK_TOL };
    let mut elements: Vec<Array2<C64>> = Vec::new();
    for g in generators {
        if span.insert(g) {
            elements.push(g.clone());
        }
    }
    // each round commutes the elements found last round with everything so far
    let mut fresh = 0..elements.len();
    for _ in 0..MAX_ROUNDS {
        let start = elements.len();
        for i in fresh.clone() {
            for j in 0..start {
                let c = i_commutator(&elements[i], &elements[j]);
                if span.insert(&c) {
                    elements.push(c);
                }
            }
        }
        if elements.len() == start || span.basis.len() == cap {
            return Ok(span.basis.len());
        }
        fresh = start..elements.len();
    }
    Err(Error::NoConvergence(format!("Lie closure still growing at dimension {}", span.basis.len())))
}

/// Closure dimension of generators restricted to the basis states `sector`.
pub fn lie_closure_dimension(generators: &[LinearOperator], sector: &[usize]) -> Result<usize> {
    for g in generators {
        let leak = g.max_cross_block(|i| sector.contains(&i) as i64);
        if leak > 1e-12 {
            return Err(Error::InvalidArgument(format!("generator leaves the sector by {leak}")));
        }
    }
    let blocks: Vec<Array2<C64>> = generators.iter().map(|g| g.submatrix(sector)).collect();
    lie_closure_dense(&blocks)
}

/// Basis states of given doubled charge `2Z = Σσ^z − 2a†a`.
pub fn charge_sector(space: SpinBosonSpace, charge2: i32) -> Vec<usize> {
    (0..space.dim()).filter(|&i| space.charge2(i) == charge2).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::blue_sideband;
    use crate::reference::sector_indices;

    fn so(d: usize) -> usize {
        d * (d - 1) / 2
    }

    #[test]
    fn two_sites_zero_magnetization() {
        let sector = sector_indices(SpinBosonSpace::qubits(2), 0);
        assert_eq!(sector.len(), 2);
        assert_eq!(lie_closure_dimension(&effective_generators(2).unwrap(), &sector).unwrap(), so(2));
    }

    #[test]
    fn three_sites_single_excitation() {
        let sector = sector_indices(SpinBosonSpace::qubits(3), -1);
        assert_eq!(sector.len(), 3);
        assert_eq!(lie_closure_dimension(&effective_generators(3).unwrap(), &sector).unwrap(), so(3));
    }

    #[test]
    fn empty_set_is_trivial() {
        assert_eq!(lie_closure_dimension(&[], &[0, 1]).unwrap(), 0);
    }

    #[test]
    fn raw_sideband_closure_smoke() {
        // |↓↓,0⟩ couples to |↑↓,1⟩ and |↓↑,1⟩; level 2 is cut off at d = 2
        let space = SpinBosonSpace::new(2, 2);
        let gens: Vec<_> = (0..2).map(|j| blue_sideband(j, space, 1.0).unwrap()).collect();
        let sector = charge_sector(space, -2);
        assert_eq!(sector.len(), 3);
        assert_eq!(lie_closure_dimension(&gens, &sector).unwrap(), so(3));
    }

    #[test]
    fn full_unitary_algebra_caps() {
        // σx and σz generate su(2); adding the identity gives u(2)
        let x = ndarray::array![[C64::new(0.0, 0.0), C64::new(1.0, 0.0)], [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]];
        let z = ndarray::array![[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(-1.0, 0.0)]];
        assert_eq!(lie_closure_dense(&[x.clone(), z.clone()]).unwrap(), 3);
        let id = Array2::eye(2);
        assert_eq!(lie_closure_dense(&[x, z, id]).unwrap(), 4);
    }

    #[test]
    fn leaking_generator_rejected() {
        let g = effective_generators(2).unwrap();
        assert!(lie_closure_dimension(&g, &[0, 1]).is_err());
    }
}
