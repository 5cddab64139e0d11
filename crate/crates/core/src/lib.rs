//! Numerical phase-space quantum mechanics for one degree of freedom.
//!
//! The crate provides the Moyal star product (exact on polynomials, finite
//! differences for mixed products, and an FFT twisted convolution on grids),
//! a dense-matrix Weyl quantisation oracle, an Ermakov-Pinney solver for
//! time-dependent oscillators, Lewis-Riesenfeld invariants with their
//! Laguerre-Gaussian Wigner functions, and the star exponential of the
//! oscillator Hamiltonian by three independent routes.

pub mod ermakov;
pub mod error;
pub mod invariant;
pub mod models;
pub mod ode;
pub mod oracle;
pub mod spectral;
pub mod star;
pub mod starexp;
pub mod symbols;
pub mod verify;

pub use error::{Error, Result};
pub use symbols::{GridSymbol, PhaseGrid, PhysContext, PolySymbol};
