//! Classical simulation of "free fermions in disguise" circuits.
//!
//! Three families of brickwork-like circuits built from three-site generators
//! admit commuting transfer operators and a free-fermionic spectrum even
//! though no Jordan-Wigner transformation exists for them.  This crate
//! constructs the transfer operators, extracts the single-particle spectrum
//! from scalar polynomial recursions, and propagates the edge operator
//! through a quench at polynomial cost, with a dense exact-diagonalization
//! oracle for cross-checking at small sizes.

pub mod circuit;
pub mod dd;
pub mod dense;
pub mod dynamics;
pub mod error;
pub mod lapack;
pub mod mpo;
pub mod oracle;
pub mod pauli;
pub mod poly;
pub mod spectral;
pub mod transfer;

pub use circuit::{CircuitSpec, Family};
pub use error::{FfdError, FfdResult};

/// Complex double, the crate's working scalar.
pub type C64 = num_complex::Complex64;
