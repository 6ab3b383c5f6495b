use ndarray::Array2;
use ndarray_linalg::SVD;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{PureState, SpinBosonSpace, NORM_TOL};

type C64 = Complex64;

/// Singular values at or below this count as zero.
pub const SCHMIDT_THRESHOLD: f64 = 1e-10;
/// Factor by which the heuristic bus bounds may be exceeded before it is a violation.
pub const BOND_BOUND_SLACK: usize = 2;

/// Qubit state obtained by projecting the boson of a composite vector onto Fock
/// level `level`, renormalized.
pub fn project_boson(space: SpinBosonSpace, composite: &[C64], level: usize) -> Result<PureState> {
    if !space.has_boson() {
        return Err(Error::NoBoson);
    }
    if composite.len() != space.dim() {
        return Err(Error::DimensionMismatch(format!("vector of length {} for {}", composite.len(), space.dim())));
    }
    let d = space.boson_dim();
    if level >= d {
        return Err(Error::InvalidArgument(format!("Fock level {level} beyond cutoff {d}")));
    }
    let v: Vec<C64> = (0..space.qubit_dim()).map(|i| composite[i * d + level]).collect();
    let norm2: f64 = v.iter().map(|a| a.norm_sqr()).sum();
    if norm2 < NORM_TOL {
        return Err(Error::InvalidArgument(format!("Fock level {level} has probability {norm2}")));
    }
    PureState::normalized(SpinBosonSpace::qubits(space.n_qubits), v.into())
}

/// Schmidt ranks across `[0, n) | [n, N)` for `n = 1..N−1`.
pub fn schmidt_ranks(psi: &PureState) -> Result<Vec<usize>> {
    let space = psi.space();
    if space.has_boson() {
        return Err(Error::InvalidArgument("Schmidt profile needs a qubit-only state".into()));
    }
    let n = space.n_qubits;
    let v = psi.vector();
    (1..n)
        .map(|cut| {
            let rows = 1usize << cut;
            let cols = 1usize << (n - cut);
            // qubit 0 is the slowest index, so the left block is the row index
            let m = Array2::from_shape_fn((rows, cols), |(r, c)| v[r * cols + c]);
            let (_, s, _) = m.svd(false, false)?;
            Ok(s.iter().filter(|&&x| x > SCHMIDT_THRESHOLD).count())
        })
        .collect()
}

/// Bus-mediated bound `(⌊n/2⌋ + 1)·2^{l−1}` on the rank across cut `n`: at most
/// `⌊n/2⌋ + 1` bus levels carry information out of the first `n` qubits, each
/// joined by the `l − 1` qubits still shared with the next box.
pub fn structured_bound(cut: usize, l: usize) -> usize {
    (cut / 2 + 1) << (l - 1)
}

/// Bound `(N − n)·2^{l−1}` seen from the right end.
pub fn right_bound(n_qubits: usize, cut: usize, l: usize) -> usize {
    (n_qubits - cut) << (l - 1)
}

/// Bound `⌊2N/3⌋·2^{l−1}` on the largest rank over all cuts.
pub fn max_bond_bound(n_qubits: usize, l: usize) -> usize {
    (2 * n_qubits / 3) << (l - 1)
}

pub fn generic_bound(n_qubits: usize, cut: usize) -> usize {
    1 << cut.min(n_qubits - cut)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BondExcess {
    pub cut: usize,
    pub rank: usize,
    pub bound: usize,
    pub which: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchmidtProfile {
    pub n_qubits: usize,
    pub box_size: usize,
    /// Rank at cut `n` is entry `n − 1`.
    pub ranks: Vec<usize>,
    pub structured_bounds: Vec<usize>,
    pub right_bounds: Vec<usize>,
    pub generic_bounds: Vec<usize>,
    pub max_rank: usize,
    pub max_rank_bound: usize,
    /// Above a bus bound but within the slack factor.
    pub marginal: Vec<BondExcess>,
    /// Above the generic bound or beyond the slack on a bus bound.
    pub violations: Vec<BondExcess>,
}

impl SchmidtProfile {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Schmidt ranks of `psi` compared with the bounds for a bus circuit of box size `l`.
pub fn schmidt_profile(psi: &PureState, l: usize) -> Result<SchmidtProfile> {
    if l == 0 {
        return Err(Error::InvalidArgument("box size must be positive".into()));
    }
    let ranks = schmidt_ranks(psi)?;
    let n = psi.space().n_qubits;
    let cuts = 1..n;
    let structured_bounds: Vec<usize> = cuts.clone().map(|c| structured_bound(c, l)).collect();
    let right_bounds: Vec<usize> = cuts.clone().map(|c| right_bound(n, c, l)).collect();
    let generic_bounds: Vec<usize> = cuts.clone().map(|c| generic_bound(n, c)).collect();
    let max_rank = ranks.iter().copied().max().unwrap_or(1);
    let max_rank_bound = max_bond_bound(n, l);
    let mut marginal = Vec::new();
    let mut violations = Vec::new();
    let mut judge = |cut: usize, rank: usize, bound: usize, which: &str, slack: usize| {
        let e = BondExcess { cut, rank, bound, which: which.into() };
        if rank > slack * bound {
            violations.push(e);
        } else if rank > bound {
            marginal.push(e);
        }
    };
    for (k, cut) in cuts.enumerate() {
        judge(cut, ranks[k], generic_bounds[k], "generic", 1);
        judge(cut, ranks[k], structured_bounds[k], "structured", BOND_BOUND_SLACK);
    }
    judge(0, max_rank, max_rank_bound, "maximum", BOND_BOUND_SLACK);
    Ok(SchmidtProfile {
        n_qubits: n,
        box_size: l,
        ranks,
        structured_bounds,
        right_bounds,
        generic_bounds,
        max_rank,
        max_rank_bound,
        marginal,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::neel_state;
    use ndarray::Array1;

    fn c64(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn product_state_has_unit_ranks() {
        assert_eq!(schmidt_ranks(&neel_state(5)).unwrap(), vec![1; 4]);
    }

    #[test]
    fn ghz_state() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = Array1::zeros(16);
        v[0] = c64(s);
        v[15] = c64(s);
        let psi = PureState::new(SpinBosonSpace::qubits(4), v).unwrap();
        assert_eq!(schmidt_ranks(&psi).unwrap(), vec![2, 2, 2]);
    }

    #[test]
    fn pair_product_ranks() {
        // singlets on (0,1) and (2,3): rank 2 at cuts 1 and 3, 1 at cut 2
        let s = 0.5;
        let mut v = Array1::zeros(16);
        for (i, sign) in [(0b0101, 1.0), (0b0110, -1.0), (0b1001, -1.0), (0b1010, 1.0)] {
            v[i] = c64(s * sign);
        }
        let psi = PureState::new(SpinBosonSpace::qubits(4), v).unwrap();
        assert_eq!(schmidt_ranks(&psi).unwrap(), vec![2, 1, 2]);
    }

    #[test]
    fn bound_formulas() {
        assert_eq!(structured_bound(1, 2), 2);
        assert_eq!(structured_bound(4, 3), 12);
        assert_eq!(generic_bound(6, 2), 4);
        assert_eq!(generic_bound(6, 5), 2);
        assert_eq!(max_bond_bound(6, 2), 8);
        assert_eq!(right_bound(6, 4, 2), 4);
    }

    #[test]
    fn projection_selects_and_renormalizes() {
        let space = SpinBosonSpace::new(1, 3);
        let v = vec![c64(0.6), c64(0.0), c64(0.0), c64(0.0), c64(0.8), c64(0.0)];
        let p = project_boson(space, &v, 1).unwrap();
        assert_eq!(p.vector().to_vec(), vec![c64(0.0), c64(1.0)]);
        assert!(project_boson(space, &v, 2).is_err());
        assert!(project_boson(space, &v, 3).is_err());
    }

    #[test]
    fn violations_are_reported() {
        // a Bell pair across cut 1 of a 2-qubit chain exceeds nothing...
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = PureState::new(SpinBosonSpace::qubits(2), Array1::from(vec![c64(s), c64(0.0), c64(0.0), c64(s)])).unwrap();
        assert!(schmidt_profile(&psi, 2).unwrap().passed());
        // ...but exceeds the per-cut and maximum bounds of l = 1 within the slack
        let p = schmidt_profile(&psi, 1).unwrap();
        assert!(p.passed());
        assert_eq!(p.marginal.len(), 2);
    }
}
