//! Composite qubit-plus-boson spaces, sparse operators and states.

mod operator;
mod pauli;
mod space;
mod state;

pub use operator::{embed, LinearOperator, FLAG_TOL};
pub use pauli::{
    destruction_operator, number_operator, sigma_minus, sigma_plus, sigma_x, sigma_y, sigma_z,
    Pauli, PauliString, PauliSum,
};
pub use space::{
    fock_cutoff_for, thermal_tail_level, Site, SpinBosonSpace, DOWN, MAX_QUBITS, UP,
};
pub use state::{
    neel_state, partial_trace, thermal_populations, thermal_state, trace_out_boson,
    DensityMatrix, ProductState, PureState, NORM_TOL,
};

use crate::error::Result;

/// Kronecker product of two objects of the same kind.
pub trait TensorProduct: Sized {
    fn tensor(&self, other: &Self) -> Result<Self>;
}

impl TensorProduct for LinearOperator {
    fn tensor(&self, other: &Self) -> Result<Self> {
        self.kron(other)
    }
}

impl TensorProduct for PureState {
    fn tensor(&self, other: &Self) -> Result<Self> {
        self.kron(other)
    }
}

impl TensorProduct for DensityMatrix {
    fn tensor(&self, other: &Self) -> Result<Self> {
        self.kron(other)
    }
}

pub fn tensor_product<T: TensorProduct>(a: &T, b: &T) -> Result<T> {
    a.tensor(b)
}
