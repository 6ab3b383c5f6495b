use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Qubit basis label for spin up. `σ^z` is `+1` on this state.
pub const UP: usize = 0;
/// Qubit basis label for spin down. `σ^z` is `-1` on this state.
pub const DOWN: usize = 1;

/// Largest qubit count accepted by full-space constructions.
pub const MAX_QUBITS: usize = 14;

/// Composite space of `n_qubits` two-level systems and one truncated bosonic mode.
///
/// Basis states are ordered with qubit 0 as the slowest index and the boson as the
/// fastest. `fock_cutoff == 0` denotes a qubit-only space; otherwise the boson keeps
/// the levels `0..fock_cutoff`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinBosonSpace {
    pub n_qubits: usize,
    pub fock_cutoff: usize,
}

/// A tensor factor of a [`SpinBosonSpace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Site {
    Qubit(usize),
    Boson,
}

impl SpinBosonSpace {
    pub fn new(n_qubits: usize, fock_cutoff: usize) -> Self {
        Self { n_qubits, fock_cutoff }
    }

    pub fn qubits(n_qubits: usize) -> Self {
        Self::new(n_qubits, 0)
    }

    pub fn boson(fock_cutoff: usize) -> Self {
        Self::new(0, fock_cutoff)
    }

    pub fn has_boson(&self) -> bool {
        self.fock_cutoff > 0
    }

    /// Dimension contributed by the boson, `1` when absent.
    pub fn boson_dim(&self) -> usize {
        self.fock_cutoff.max(1)
    }

    pub fn qubit_dim(&self) -> usize {
        1usize << self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.qubit_dim() * self.boson_dim()
    }

    /// The same qubits without the bosonic mode.
    pub fn qubit_space(&self) -> Self {
        Self::qubits(self.n_qubits)
    }

    /// Factors in basis order.
    pub fn sites(&self) -> Vec<Site> {
        let mut s: Vec<Site> = (0..self.n_qubits).map(Site::Qubit).collect();
        if self.has_boson() {
            s.push(Site::Boson);
        }
        s
    }

    pub fn site_dim(&self, site: Site) -> Result<usize> {
        self.check_site(site)?;
        Ok(match site {
            Site::Qubit(_) => 2,
            Site::Boson => self.fock_cutoff,
        })
    }

    /// Basis-index stride of a factor.
    pub fn stride(&self, site: Site) -> Result<usize> {
        self.check_site(site)?;
        Ok(match site {
            Site::Qubit(j) => self.boson_dim() << (self.n_qubits - 1 - j),
            Site::Boson => 1,
        })
    }

    pub fn check_site(&self, site: Site) -> Result<()> {
        match site {
            Site::Qubit(j) if j >= self.n_qubits => Err(Error::SiteOutOfRange {
                site: j,
                n_qubits: self.n_qubits,
            }),
            Site::Boson if !self.has_boson() => Err(Error::NoBoson),
            _ => Ok(()),
        }
    }

    /// State label (`UP` or `DOWN`) of qubit `j` in basis state `index`.
    pub fn qubit_state(&self, index: usize, j: usize) -> usize {
        (index / (self.boson_dim() << (self.n_qubits - 1 - j))) & 1
    }

    pub fn boson_level(&self, index: usize) -> usize {
        index % self.boson_dim()
    }

    /// Bitstring of the qubit part of `index`, qubit 0 in the most significant bit.
    pub fn qubit_bits(&self, index: usize) -> usize {
        index / self.boson_dim()
    }

    /// Twice the qubit magnetization `½ Σ σ^z` of a basis state.
    pub fn magnetization2(&self, index: usize) -> i32 {
        let downs = self.qubit_bits(index).count_ones() as i32;
        self.n_qubits as i32 - 2 * downs
    }

    /// Twice the conserved charge `½ Σ σ^z - a†a` of a basis state.
    pub fn charge2(&self, index: usize) -> i32 {
        self.magnetization2(index) - 2 * self.boson_level(index) as i32
    }
}

/// Smallest level `q ≥ 1` whose thermal weight ratio `r^q` drops below `1e-10`,
/// with `r = n0 / (1 + n0)`.
pub fn thermal_tail_level(n0: f64) -> usize {
    let r = n0 / (1.0 + n0);
    let mut q = 1usize;
    while r.powi(q as i32) >= 1e-10 {
        q += 1;
    }
    q
}

/// Fock cutoff that holds every relevant thermal level plus the excitations the
/// Néel state can push into the boson: `q_tail + ⌊N/2⌋ + 1`.
pub fn fock_cutoff_for(n0: f64, n_qubits: usize) -> usize {
    thermal_tail_level(n0) + n_qubits / 2 + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qubit_is_slowest_and_boson_fastest() {
        let s = SpinBosonSpace::new(2, 3);
        assert_eq!(s.dim(), 12);
        assert_eq!(s.stride(Site::Qubit(0)).unwrap(), 6);
        assert_eq!(s.stride(Site::Qubit(1)).unwrap(), 3);
        assert_eq!(s.stride(Site::Boson).unwrap(), 1);
        // index 7 = (q0=↓, q1=↑, n=1)
        assert_eq!(s.qubit_state(7, 0), DOWN);
        assert_eq!(s.qubit_state(7, 1), UP);
        assert_eq!(s.boson_level(7), 1);
        assert_eq!(s.charge2(7), 0 - 2);
    }

    #[test]
    fn cutoff_rule() {
        assert_eq!(thermal_tail_level(0.0), 1);
        // r = 0.01/1.01, r^5 ≈ 9.5e-11 is the first below 1e-10
        assert_eq!(thermal_tail_level(0.01), 5);
        assert_eq!(fock_cutoff_for(0.0, 6), 5);
        assert_eq!(fock_cutoff_for(0.01, 6), 9);
    }

    #[test]
    fn bad_sites_are_rejected() {
        let s = SpinBosonSpace::qubits(3);
        assert!(matches!(s.check_site(Site::Qubit(3)), Err(Error::SiteOutOfRange { .. })));
        assert!(matches!(s.check_site(Site::Boson), Err(Error::NoBoson)));
    }
}
