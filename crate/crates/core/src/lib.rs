//! Variational preparation of spin-chain ground states with a shared bosonic bus.

pub mod analysis;
pub mod circuits;
pub mod engine;
pub mod error;
pub mod hamiltonians;
pub mod hilbert;
mod linalg;
pub mod optimize;
pub mod reference;
pub mod vqe;

pub use error::{Error, Result};
