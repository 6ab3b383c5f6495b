//! Exact diagonalization of the target chain: spectrum, gap, ground state and
//! reference correlators.
//!
//! Sectors of fixed magnetization are diagonalized densely up to
//! [`DENSE_SECTOR_MAX`] and with a restarted Lanczos iteration above that. This is
//! a desk-scale oracle capped at [`MAX_QUBITS`] sites.

use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{correlation_matrix, Ensemble};
use crate::error::{Error, Result};
use crate::hamiltonians::ssh_hamiltonian;
use crate::hilbert::{LinearOperator, PureState, SpinBosonSpace, MAX_QUBITS};
use crate::linalg::{eigh_complex, eigh_real};

type C64 = Complex64;
const ZERO: C64 = C64::new(0.0, 0.0);

/// Largest block handed to the dense eigensolver.
pub const DENSE_SECTOR_MAX: usize = 1200;
/// Gaps below this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;
const LANCZOS_SEED: u64 = 0x5eed;

/// Lowest eigenpairs in ascending order, vectors on the full space of the operator.
#[derive(Clone, Debug)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Array1<C64>>,
    /// Doubled magnetization of each pair when it came from a sector.
    pub sectors: Vec<Option<i32>>,
}

/// Hermitian matrix in compressed rows over an index subset.
struct Block {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl Block {
    fn restrict(h: &LinearOperator, idx: &[usize]) -> Self {
        let mut map = vec![usize::MAX; h.dim()];
        for (k, &i) in idx.iter().enumerate() {
            map[i] = k;
        }
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for &r in idx {
            for (c, v) in h.row(r) {
                if map[c] != usize::MAX {
                    indices.push(map[c]);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self { n: idx.len(), indptr, indices, values }
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        for r in 0..self.n {
            let mut acc = ZERO;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            y[r] = acc;
        }
    }

    fn dense(&self) -> Array2<C64> {
        let mut m = Array2::zeros((self.n, self.n));
        for r in 0..self.n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                m[[r, self.indices[k]]] += self.values[k];
            }
        }
        m
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn orthogonalize(v: &mut [C64], against: &[Vec<C64>]) {
    // two passes keep the basis orthogonal to working precision
    for _ in 0..2 {
        for u in against {
            let c = dot(u, v);
            for (x, y) in v.iter_mut().zip(u) {
                *x -= c * y;
            }
        }
    }
}

/// Lowest eigenpair of `h` restricted to the complement of `locked`.
fn lanczos_lowest(h: &Block, locked: &[Vec<C64>], rng: &mut ChaCha8Rng) -> Result<(f64, Vec<C64>)> {
    let n = h.n;
    let max_krylov = (n - locked.len()).min(300);
    let mut start: Vec<C64> = (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), 0.0)).collect();
    for _ in 0..20 {
        orthogonalize(&mut start, locked);
        let s = norm(&start);
        if s < 1e-12 {
            return Err(Error::NoConvergence("Lanczos start vector vanished".into()));
        }
        let mut basis: Vec<Vec<C64>> = vec![start.iter().map(|x| x / s).collect()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut w = vec![ZERO; n];
        loop {
            let j = basis.len() - 1;
            h.apply(&basis[j], &mut w);
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            orthogonalize(&mut w, locked);
            orthogonalize(&mut w, &basis);
            let b = norm(&w);
            // Ritz values of the tridiagonal matrix
            let m = alpha.len();
            let mut t = Array2::<f64>::zeros((m, m));
            for i in 0..m {
                t[[i, i]] = alpha[i];
                if i + 1 < m {
                    t[[i, i + 1]] = beta[i];
                    t[[i + 1, i]] = beta[i];
                }
            }
            let (ev, evec) = eigh_real(&t)?;
            let resid = (b * evec[[m - 1, 0]]).abs();
            let converged = resid < 1e-13 * ev[0].abs().max(1.0);
            if converged || b < 1e-12 || m >= max_krylov {
                let (lambda, s0) = (ev[0], evec.column(0));
                let mut v = vec![ZERO; n];
                for (coef, u) in s0.iter().zip(&basis) {
                    for (x, y) in v.iter_mut().zip(u) {
                        *x += *coef * y;
                    }
                }
                orthogonalize(&mut v, locked);
                let nv = norm(&v);
                v.iter_mut().for_each(|x| *x /= nv);
                if converged || b < 1e-12 {
                    return Ok((lambda, v));
                }
                // restart from the current Ritz vector
                start = v;
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
    }
    Err(Error::NoConvergence("Lanczos did not converge after 20 restarts".into()))
}

fn block_lowest(h: &Block, k: usize) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let k = k.min(h.n);
    if h.n <= DENSE_SECTOR_MAX {
        let m = h.dense();
        let real = m.iter().all(|v| v.im == 0.0);
        let (ev, vecs): (Vec<f64>, Vec<Vec<C64>>) = if real {
            let (e, v) = eigh_real(&m.mapv(|x| x.re))?;
            (e, (0..k).map(|c| v.column(c).iter().map(|&x| C64::new(x, 0.0)).collect()).collect())
        } else {
            let (e, v) = eigh_complex(&m)?;
            (e, (0..k).map(|c| v.column(c).to_vec()).collect())
        };
        return Ok((ev[..k].to_vec(), vecs));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(LANCZOS_SEED);
    let mut values = Vec::new();
    let mut locked: Vec<Vec<C64>> = Vec::new();
    for _ in 0..k {
        let (l, v) = lanczos_lowest(h, &locked, &mut rng)?;
        values.push(l);
        locked.push(v);
    }
    // locking can return pairs slightly out of order
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    Ok((order.iter().map(|&i| values[i]).collect(), order.iter().map(|&i| locked[i].clone()).collect()))
}

/// Makes the first amplitude above `1e-12` real and positive.
pub fn fix_phase(v: &mut [C64]) {
    if let Some(a) = v.iter().find(|a| a.norm() > 1e-12) {
        let ph = a.conj() / a.norm();
        v.iter_mut().for_each(|x| *x *= ph);
    }
}

fn embed(idx: &[usize], dim: usize, v: &[C64]) -> Array1<C64> {
    let mut out = Array1::zeros(dim);
    for (&i, &a) in idx.iter().zip(v) {
        out[i] = a;
    }
    fix_phase(out.as_slice_mut().expect("contiguous"));
    out
}

/// The `k` lowest eigenpairs of a Hermitian operator.
pub fn exact_spectrum(h: &LinearOperator, k: usize) -> Result<Eigenpairs> {
    if k > h.dim() {
        return Err(Error::InvalidArgument(format!("{k} eigenpairs requested of a {}-dimensional operator", h.dim())));
    }
    let defect = h.hermiticity_defect();
    if defect > 1e-12 {
        return Err(Error::NotHermitian(defect));
    }
    let idx: Vec<usize> = (0..h.dim()).collect();
    let (values, vecs) = block_lowest(&Block::restrict(h, &idx), k)?;
    Ok(Eigenpairs {
        values,
        vectors: vecs.iter().map(|v| embed(&idx, h.dim(), v)).collect(),
        sectors: vec![None; k],
    })
}

/// Basis states with doubled qubit magnetization `m2`.
pub fn sector_indices(space: SpinBosonSpace, m2: i32) -> Vec<usize> {
    (0..space.dim()).filter(|&i| space.magnetization2(i) == m2).collect()
}

/// The `k` lowest eigenpairs inside the sector of doubled magnetization `m2`
/// (`m2 = N − 2·#down`).
pub fn sector_spectrum(h: &LinearOperator, m2: i32, k: usize) -> Result<Eigenpairs> {
    let space = h.space();
    let leak = h.max_cross_block(|i| space.magnetization2(i) as i64);
    if leak > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "operator does not conserve the magnetization (coupling {leak:.3e} between sectors)"
        )));
    }
    let idx = sector_indices(space, m2);
    if k > idx.len() {
        return Err(Error::InvalidArgument(format!("{k} eigenpairs requested of a {}-dimensional sector", idx.len())));
    }
    let (values, vecs) = block_lowest(&Block::restrict(h, &idx), k)?;
    Ok(Eigenpairs {
        values,
        vectors: vecs.iter().map(|v| embed(&idx, h.dim(), v)).collect(),
        sectors: vec![Some(m2); k],
    })
}

/// Lowest `k` eigenpairs over all magnetization sectors.
pub fn lowest_over_sectors(h: &LinearOperator, k: usize) -> Result<Eigenpairs> {
    let n = h.space().n_qubits as i32;
    let mut all: Vec<(f64, Array1<C64>, Option<i32>)> = Vec::new();
    for downs in 0..=n {
        let m2 = n - 2 * downs;
        let size = sector_indices(h.space(), m2).len();
        let e = sector_spectrum(h, m2, k.min(size))?;
        for ((v, x), s) in e.values.into_iter().zip(e.vectors).zip(e.sectors) {
            all.push((v, x, s));
        }
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    all.truncate(k);
    Ok(Eigenpairs {
        values: all.iter().map(|x| x.0).collect(),
        vectors: all.iter().map(|x| x.1.clone()).collect(),
        sectors: all.iter().map(|x| x.2).collect(),
    })
}

/// Target-chain reference data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub n: usize,
    pub t: f64,
    pub b_tilde: f64,
    pub e0: f64,
    pub e1: f64,
    pub gap: f64,
    /// Set when the gap is below [`DEGENERACY_TOL`]; energy-normalized metrics are
    /// then undefined.
    pub degenerate: bool,
    pub psi_targ: Vec<C64>,
    /// Connected `σ^x` correlators of the ground state.
    pub c_ref: Vec<Vec<f64>>,
    /// Doubled magnetization of the ground and first excited state.
    pub sector_labels: Vec<i32>,
}

impl GroundTruth {
    pub fn target(&self) -> Result<PureState> {
        PureState::new(SpinBosonSpace::qubits(self.n), Array1::from(self.psi_targ.clone()))
    }

    pub fn c_ref_matrix(&self) -> Array2<f64> {
        let n = self.n;
        Array2::from_shape_fn((n, n), |(i, j)| self.c_ref[i][j])
    }

    /// `(⟨H⟩ − E0)/Δ`.
    pub fn relative_excitation(&self, energy: f64) -> Result<f64> {
        if self.degenerate {
            return Err(Error::DegenerateGap(self.gap));
        }
        Ok((energy - self.e0) / self.gap)
    }

    pub fn cache_file_name(n: usize, t: f64, b_tilde: f64) -> String {
        format!("ground_truth_N{n}_t{t}_b{b_tilde}.json")
    }

    /// Reads a cached record from `dir`, computing and writing it when missing.
    pub fn cached(dir: &Path, n: usize, t: f64, b_tilde: f64) -> Result<(Self, PathBuf, bool)> {
        let path = dir.join(Self::cache_file_name(n, t, b_tilde));
        if path.exists() {
            let gt: Self = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
            if gt.n == n && gt.t == t && gt.b_tilde == b_tilde {
                return Ok((gt, path, true));
            }
        }
        let gt = ground_truth(n, t, b_tilde)?;
        std::fs::create_dir_all(dir)?;
        std::fs::write(&path, serde_json::to_string_pretty(&gt)?)?;
        Ok((gt, path, false))
    }
}

/// Ground state, gap and reference correlators of the dimerized chain.
pub fn ground_truth(n: usize, t: f64, b_tilde: f64) -> Result<GroundTruth> {
    if n > MAX_QUBITS {
        return Err(Error::SizeCap { n, cap: MAX_QUBITS });
    }
    let space = SpinBosonSpace::qubits(n);
    let h = ssh_hamiltonian(n, t, b_tilde, space)?;
    let low = lowest_over_sectors(&h, 2)?;
    let (e0, e1) = (low.values[0], low.values[1]);
    let gap = e1 - e0;
    let psi = PureState::new(space, low.vectors[0].clone())?;
    let c = correlation_matrix(&Ensemble::from_pure(&psi));
    Ok(GroundTruth {
        n,
        t,
        b_tilde,
        e0,
        e1,
        gap,
        degenerate: gap < DEGENERACY_TOL,
        psi_targ: psi.vector().to_vec(),
        c_ref: c.outer_iter().map(|r| r.to_vec()).collect(),
        sector_labels: low.sectors.iter().map(|s| s.expect("sector eigenpair")).collect(),
    })
}
