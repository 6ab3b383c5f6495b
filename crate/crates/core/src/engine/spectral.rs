//! Block-diagonalized generators and the unitaries they produce.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::LinearOperator;

type C64 = Complex64;

/// Blocks larger than this are applied to vectors through their eigenbasis instead
/// of an explicit unitary.
const EXPLICIT_MAX: usize = 8;

#[derive(Clone, Debug)]
struct SpectralBlock {
    idx: Vec<usize>,
    evals: Vec<f64>,
    /// Eigenvectors as columns, row-major `s × s`.
    evecs: Vec<C64>,
    charge: Option<i32>,
}

/// Hermitian operator on a few tensor factors, split into connected blocks with
/// cached eigendecompositions so that `exp(-iθG)` is cheap for any `θ`.
#[derive(Clone, Debug)]
pub struct SpectralGenerator {
    dims: Vec<usize>,
    blocks: Vec<SpectralBlock>,
    conserving: bool,
}

impl SpectralGenerator {
    /// `local_charges[k]` is the conserved charge of local basis state `k`.
    pub fn new(op: &LinearOperator, dims: Vec<usize>, local_charges: &[i32]) -> Result<Self> {
        let dim: usize = dims.iter().product();
        if dim != op.dim() || local_charges.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "generator of dimension {} on factors {:?}",
                op.dim(),
                dims
            )));
        }
        let defect = op.hermiticity_defect();
        if defect > 1e-12 {
            return Err(Error::NotHermitian(defect));
        }
        let mut parent: Vec<usize> = (0..dim).collect();
        fn root(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for (r, c, _) in op.triplets() {
            let (a, b) = (root(&mut parent, r), root(&mut parent, c));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; dim];
        for i in 0..dim {
            let r = root(&mut parent, i);
            if slot[r] == usize::MAX {
                slot[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[slot[r]].push(i);
        }
        let mut blocks = Vec::with_capacity(groups.len());
        let mut conserving = true;
        for idx in groups {
            let q0 = local_charges[idx[0]];
            let charge = idx.iter().all(|&i| local_charges[i] == q0).then_some(q0);
            conserving &= charge.is_some();
            let (evals, evecs) = diagonalize(&op.submatrix(&idx))?;
            blocks.push(SpectralBlock { idx, evals, evecs, charge });
        }
        Ok(Self { dims, blocks, conserving })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Whether every block stays within one charge sector.
    pub fn conserves_charge(&self) -> bool {
        self.conserving
    }

    pub fn largest_block(&self) -> usize {
        self.blocks.iter().map(|b| b.idx.len()).max().unwrap_or(0)
    }

    /// `exp(-iθG)` block by block. Large blocks keep only their phases unless
    /// `explicit` is set.
    pub fn unitary(&self, theta: f64, explicit: bool) -> LocalUnitary<'_> {
        let blocks = self
            .blocks
            .iter()
            .filter_map(|b| {
                let phases: Vec<C64> =
                    b.evals.iter().map(|&l| C64::from_polar(1.0, -theta * l)).collect();
                if phases.iter().all(|p| *p == C64::new(1.0, 0.0)) {
                    return None;
                }
                let s = b.idx.len();
                let u = if s <= EXPLICIT_MAX || explicit {
                    let mut u = vec![C64::new(0.0, 0.0); s * s];
                    for i in 0..s {
                        for j in 0..s {
                            let mut acc = C64::new(0.0, 0.0);
                            for k in 0..s {
                                acc += b.evecs[i * s + k] * phases[k] * b.evecs[j * s + k].conj();
                            }
                            u[i * s + j] = acc;
                        }
                    }
                    BlockAction::Dense(u)
                } else {
                    BlockAction::Spectral { evecs: &b.evecs, phases }
                };
                Some(UBlock { idx: &b.idx, action: u, charge: b.charge })
            })
            .collect();
        LocalUnitary { blocks, conserving: self.conserving }
    }
}

fn diagonalize(m: &Array2<C64>) -> Result<(Vec<f64>, Vec<C64>)> {
    let s = m.nrows();
    if s == 1 {
        return Ok((vec![m[[0, 0]].re], vec![C64::new(1.0, 0.0)]));
    }
    if m.iter().all(|v| v.im == 0.0) {
        let re = m.mapv(|v| v.re);
        let (e, v) = crate::linalg::eigh_real(&re)?;
        Ok((e, v.iter().map(|&x| C64::new(x, 0.0)).collect()))
    } else {
        let (e, v) = crate::linalg::eigh_complex(m)?;
        Ok((e, v.iter().copied().collect()))
    }
}

pub(crate) enum BlockAction<'a> {
    Dense(Vec<C64>),
    Spectral { evecs: &'a [C64], phases: Vec<C64> },
}

pub(crate) struct UBlock<'a> {
    pub idx: &'a [usize],
    pub action: BlockAction<'a>,
    pub charge: Option<i32>,
}

/// Unitary of one gate at a fixed angle; identity blocks are omitted.
pub struct LocalUnitary<'a> {
    pub(crate) blocks: Vec<UBlock<'a>>,
    pub(crate) conserving: bool,
}

impl UBlock<'_> {
    /// `y = U x` in place on a gathered block vector.
    #[inline]
    pub fn apply(&self, x: &mut [C64], tmp: &mut Vec<C64>) {
        let s = self.idx.len();
        match &self.action {
            BlockAction::Dense(u) => match s {
                1 => x[0] *= u[0],
                2 => {
                    let (a, b) = (x[0], x[1]);
                    x[0] = u[0] * a + u[1] * b;
                    x[1] = u[2] * a + u[3] * b;
                }
                _ => {
                    tmp.clear();
                    tmp.extend_from_slice(x);
                    for i in 0..s {
                        let row = &u[i * s..(i + 1) * s];
                        x[i] = row.iter().zip(tmp.iter()).map(|(a, b)| a * b).sum();
                    }
                }
            },
            BlockAction::Spectral { evecs, phases } => {
                // x ← V diag(phases) V† x
                tmp.clear();
                tmp.resize(s, C64::new(0.0, 0.0));
                for i in 0..s {
                    let xi = x[i];
                    if xi == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let row = &evecs[i * s..(i + 1) * s];
                    for k in 0..s {
                        tmp[k] += row[k].conj() * xi;
                    }
                }
                for k in 0..s {
                    tmp[k] *= phases[k];
                }
                for i in 0..s {
                    let row = &evecs[i * s..(i + 1) * s];
                    x[i] = row.iter().zip(tmp.iter()).map(|(a, b)| a * b).sum();
                }
            }
        }
    }

    /// `y_j = Σ_k x_k conj(U_jk)`, i.e. a row vector times `U†`.
    #[inline]
    pub fn apply_adjoint_right(&self, x: &mut [C64], tmp: &mut Vec<C64>) {
        let s = self.idx.len();
        match &self.action {
            BlockAction::Dense(u) => match s {
                1 => x[0] *= u[0].conj(),
                2 => {
                    let (a, b) = (x[0], x[1]);
                    x[0] = a * u[0].conj() + b * u[1].conj();
                    x[1] = a * u[2].conj() + b * u[3].conj();
                }
                _ => {
                    tmp.clear();
                    tmp.extend_from_slice(x);
                    for j in 0..s {
                        let row = &u[j * s..(j + 1) * s];
                        x[j] = row.iter().zip(tmp.iter()).map(|(a, b)| a.conj() * b).sum();
                    }
                }
            },
            BlockAction::Spectral { .. } => {
                // (x U†)_j = conj((U x*)_j)
                for v in x.iter_mut() {
                    *v = v.conj();
                }
                self.apply(x, tmp);
                for v in x.iter_mut() {
                    *v = v.conj();
                }
            }
        }
    }
}
