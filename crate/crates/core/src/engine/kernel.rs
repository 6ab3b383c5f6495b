//! Gate application on dense vectors and charge-graded matrices over an ordered
//! list of tensor factors.

use num_complex::Complex64;

use super::spectral::LocalUnitary;
use crate::error::{Error, Result};
use crate::hilbert::{Site, UP};

type C64 = Complex64;
const ZERO: C64 = C64::new(0.0, 0.0);

/// Doubled charge of the local basis states of a factor.
pub(crate) fn factor_charges(site: Site, dim: usize) -> Vec<i32> {
    match site {
        Site::Qubit(_) => vec![1, -1],
        Site::Boson => (0..dim as i32).map(|n| -2 * n).collect(),
    }
}

/// Ordered tensor factors, first factor slowest.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    pub labels: Vec<Site>,
    pub dims: Vec<usize>,
    pub strides: Vec<usize>,
    pub total: usize,
    pub charge: Vec<i32>,
    sectors: Vec<(i32, Vec<usize>)>,
    all: Vec<usize>,
}

impl Layout {
    pub fn new(labels: Vec<Site>, dims: Vec<usize>) -> Self {
        let mut strides = vec![1; dims.len()];
        for f in (0..dims.len().saturating_sub(1)).rev() {
            strides[f] = strides[f + 1] * dims[f + 1];
        }
        let total: usize = dims.iter().product();
        let fc: Vec<Vec<i32>> = labels.iter().zip(&dims).map(|(l, d)| factor_charges(*l, *d)).collect();
        let charge: Vec<i32> = (0..total)
            .map(|i| (0..dims.len()).map(|f| fc[f][(i / strides[f]) % dims[f]]).sum())
            .collect();
        let mut sectors: Vec<(i32, Vec<usize>)> = Vec::new();
        let mut order: Vec<usize> = (0..total).collect();
        order.sort_by_key(|&i| (charge[i], i));
        for i in order {
            match sectors.last_mut() {
                Some((q, v)) if *q == charge[i] => v.push(i),
                _ => sectors.push((charge[i], vec![i])),
            }
        }
        Self { labels, dims, strides, total, charge, sectors, all: (0..total).collect() }
    }

    pub fn position(&self, site: Site) -> Option<usize> {
        self.labels.iter().position(|l| *l == site)
    }

    pub fn positions(&self, sites: &[Site]) -> Result<Vec<usize>> {
        sites
            .iter()
            .map(|s| {
                self.position(*s)
                    .ok_or_else(|| Error::Invariant(format!("{s:?} is not in the active window")))
            })
            .collect()
    }

    pub fn with_charge(&self, q: i32) -> &[usize] {
        match self.sectors.binary_search_by_key(&q, |s| s.0) {
            Ok(k) => &self.sectors[k].1,
            Err(_) => &[],
        }
    }

    pub fn all(&self) -> &[usize] {
        &self.all
    }

    /// Offset of each local index of the factors at `positions` (first slowest).
    pub fn local_offsets(&self, positions: &[usize]) -> Vec<usize> {
        let n: usize = positions.iter().map(|&p| self.dims[p]).product();
        (0..n)
            .map(|mut k| {
                let mut off = 0;
                for &p in positions.iter().rev() {
                    off += (k % self.dims[p]) * self.strides[p];
                    k /= self.dims[p];
                }
                off
            })
            .collect()
    }

    /// Offsets of every configuration of the factors not in `positions`.
    pub fn env_offsets(&self, positions: &[usize]) -> Vec<usize> {
        let rest: Vec<usize> = (0..self.dims.len()).filter(|f| !positions.contains(f)).collect();
        self.local_offsets(&rest)
    }

    pub fn without(&self, pos: usize) -> Layout {
        let mut labels = self.labels.clone();
        let mut dims = self.dims.clone();
        labels.remove(pos);
        dims.remove(pos);
        Layout::new(labels, dims)
    }

    pub fn with_appended(&self, site: Site, dim: usize) -> Layout {
        let mut labels = self.labels.clone();
        let mut dims = self.dims.clone();
        labels.push(site);
        dims.push(dim);
        Layout::new(labels, dims)
    }
}

/// Precomputed index structure of one gate on one layout.
#[derive(Clone, Debug)]
pub(crate) struct GatePlan {
    pub local: Vec<usize>,
    pub env: Vec<usize>,
}

impl GatePlan {
    pub fn new(layout: &Layout, positions: &[usize]) -> Self {
        Self { local: layout.local_offsets(positions), env: layout.env_offsets(positions) }
    }
}

/// `ψ ← U ψ`.
pub(crate) fn apply_vector(v: &mut [C64], plan: &GatePlan, u: &LocalUnitary<'_>) {
    let mut buf = Vec::new();
    let mut tmp = Vec::new();
    for &e in &plan.env {
        for b in &u.blocks {
            buf.clear();
            buf.extend(b.idx.iter().map(|&k| v[e + plan.local[k]]));
            if buf.iter().all(|x| *x == ZERO) {
                continue;
            }
            b.apply(&mut buf, &mut tmp);
            for (j, &k) in b.idx.iter().enumerate() {
                v[e + plan.local[k]] = buf[j];
            }
        }
    }
}

/// Square matrix whose nonzero entries satisfy `charge(row) - charge(col) = delta`
/// when `delta` is known.
#[derive(Clone, Debug)]
pub(crate) struct Graded {
    pub m: Vec<C64>,
    pub delta: Option<i32>,
}

impl Graded {
    /// `M ← U M U†`.
    pub fn conjugate(&mut self, layout: &Layout, plan: &GatePlan, u: &LocalUnitary<'_>) {
        if !u.conserving {
            self.delta = None;
        }
        let d = layout.total;
        let mut buf = Vec::new();
        let mut tmp = Vec::new();
        // left multiplication, row blocks
        for &e in &plan.env {
            for b in &u.blocks {
                let r0 = e + plan.local[b.idx[0]];
                let cols = match (self.delta, b.charge) {
                    (Some(dl), Some(_)) => layout.with_charge(layout.charge[r0] - dl),
                    _ => layout.all(),
                };
                let s = b.idx.len();
                if s == 2 {
                    let ra = r0 * d;
                    let rb = (e + plan.local[b.idx[1]]) * d;
                    for &c in cols {
                        buf.clear();
                        buf.push(self.m[ra + c]);
                        buf.push(self.m[rb + c]);
                        b.apply(&mut buf, &mut tmp);
                        self.m[ra + c] = buf[0];
                        self.m[rb + c] = buf[1];
                    }
                } else {
                    for &c in cols {
                        buf.clear();
                        buf.extend(b.idx.iter().map(|&k| self.m[(e + plan.local[k]) * d + c]));
                        b.apply(&mut buf, &mut tmp);
                        for (j, &k) in b.idx.iter().enumerate() {
                            self.m[(e + plan.local[k]) * d + c] = buf[j];
                        }
                    }
                }
            }
        }
        // right multiplication by U†, column blocks
        for &e in &plan.env {
            for b in &u.blocks {
                let c0 = e + plan.local[b.idx[0]];
                let rows = match (self.delta, b.charge) {
                    (Some(dl), Some(_)) => layout.with_charge(layout.charge[c0] + dl),
                    _ => layout.all(),
                };
                let s = b.idx.len();
                if s == 2 {
                    let cb = e + plan.local[b.idx[1]];
                    for &r in rows {
                        let row = r * d;
                        buf.clear();
                        buf.push(self.m[row + c0]);
                        buf.push(self.m[row + cb]);
                        b.apply_adjoint_right(&mut buf, &mut tmp);
                        self.m[row + c0] = buf[0];
                        self.m[row + cb] = buf[1];
                    }
                } else {
                    for &r in rows {
                        let row = r * d;
                        buf.clear();
                        buf.extend(b.idx.iter().map(|&k| self.m[row + e + plan.local[k]]));
                        b.apply_adjoint_right(&mut buf, &mut tmp);
                        for (j, &k) in b.idx.iter().enumerate() {
                            self.m[row + e + plan.local[k]] = buf[j];
                        }
                    }
                }
            }
        }
    }

    /// `Tr_f[(L_f ⊗ I) M]` for the factor at `pos`, with `L` given as sparse entries
    /// `(x, y, value)` meaning `L[x][y]`; `None` is the identity.
    pub fn trace_out(
        &self,
        layout: &Layout,
        pos: usize,
        op: Option<(&[(usize, usize, C64)], i32)>,
    ) -> (Graded, Layout) {
        let out_layout = layout.without(pos);
        let d = layout.total;
        let stride = layout.strides[pos];
        let fd = layout.dims[pos];
        // full index of each reduced index with the traced digit at zero
        let base: Vec<usize> = {
            let mut labels_pos = Vec::with_capacity(layout.dims.len() - 1);
            for f in 0..layout.dims.len() {
                if f != pos {
                    labels_pos.push(f);
                }
            }
            layout.local_offsets(&labels_pos)
        };
        let identity: Vec<(usize, usize, C64)>;
        let (entries, dq) = match op {
            Some((e, dq)) => (e, dq),
            None => {
                identity = (0..fd).map(|x| (x, x, C64::new(1.0, 0.0))).collect();
                (&identity[..], 0)
            }
        };
        let delta = self.delta.map(|dl| dl + dq);
        let n = out_layout.total;
        let mut out = vec![ZERO; n * n];
        for a in 0..n {
            let cols = match delta {
                Some(dl) => out_layout.with_charge(out_layout.charge[a] - dl),
                None => out_layout.all(),
            };
            for &c in cols {
                let mut acc = ZERO;
                for &(x, y, v) in entries {
                    acc += v * self.m[(base[a] + y * stride) * d + base[c] + x * stride];
                }
                out[a * n + c] = acc;
            }
        }
        (Graded { m: out, delta }, out_layout)
    }

    /// `Tr[(L_f ⊗ I) M]`.
    pub fn trace_with(&self, layout: &Layout, pos: usize, entries: &[(usize, usize, C64)], dq: i32) -> C64 {
        if let Some(dl) = self.delta {
            if dl + dq != 0 {
                return ZERO;
            }
        }
        let d = layout.total;
        let stride = layout.strides[pos];
        let fd = layout.dims[pos];
        let mut acc = ZERO;
        for i in 0..d {
            let digit = (i / stride) % fd;
            if digit != 0 {
                continue;
            }
            for &(x, y, v) in entries {
                acc += v * self.m[(i + y * stride) * d + i + x * stride];
            }
        }
        acc
    }

    /// `M ⊗ σ` with the new factor appended last.
    pub fn adjoin(&self, old: usize, sigma: &[C64], k: usize, sigma_delta: Option<i32>) -> Graded {
        let n = old * k;
        let mut out = vec![ZERO; n * n];
        for a in 0..old {
            for c in 0..old {
                let v = self.m[a * old + c];
                if v == ZERO {
                    continue;
                }
                for x in 0..k {
                    for y in 0..k {
                        let s = sigma[x * k + y];
                        if s != ZERO {
                            out[(a * k + x) * n + c * k + y] = v * s;
                        }
                    }
                }
            }
        }
        let delta = match (self.delta, sigma_delta) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        Graded { m: out, delta }
    }
}

/// Charge offset of a small matrix on one factor, if definite.
pub(crate) fn local_delta(sigma: &[C64], charges: &[i32]) -> Option<i32> {
    let k = charges.len();
    let mut delta = None;
    for x in 0..k {
        for y in 0..k {
            if sigma[x * k + y] != ZERO {
                let dq = charges[x] - charges[y];
                match delta {
                    None => delta = Some(dq),
                    Some(d) if d != dq => return None,
                    _ => {}
                }
            }
        }
    }
    Some(delta.unwrap_or(0))
}

/// `|s⟩⟨s|` of a single-qubit state.
pub(crate) fn qubit_projector(s: &[C64; 2]) -> Vec<C64> {
    let mut out = Vec::with_capacity(4);
    for x in 0..2 {
        for y in 0..2 {
            out.push(s[x] * s[y].conj());
        }
    }
    debug_assert_eq!(UP, 0);
    out
}
