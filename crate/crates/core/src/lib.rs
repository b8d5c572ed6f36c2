//! Variational simulation of star-geometry quantum impurity models.
//!
//! The crate covers the whole chain from a second-quantized Hamiltonian to
//! Green's functions: Pauli algebra and state vectors, the Jordan-Wigner
//! map, impurity-model builders, UCCGSD and k-uCJ ansatzes (with their
//! sparse variants), VQE, recursive spectral-moment fitting, block-Lanczos
//! reconstruction and an exact-diagonalization reference.

pub mod ansatz;
pub mod ed;
pub mod error;
pub mod fermion;
pub mod greens;
pub mod models;
pub mod moments;
pub mod optimize;
pub mod pauli;
pub mod sampling;
pub mod sector;
pub mod statevector;
pub mod vqe;

pub use error::{Error, Result};
