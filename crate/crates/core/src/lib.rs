//! Numerical lab for div-curl quantities of elliptic systems of constant
//! coefficient complex vector fields, with discrete local Hardy space (h1)
//! and bmo estimators on periodic grids.
//!
//! Fields live on a periodic box (a torus model of R^N). All derivatives are
//! spectral, so algebraic identities such as `curl(grad u) = 0` hold to
//! roundoff.

pub mod cvf;
pub mod error;
pub mod grid;
pub mod harness;
pub mod hodge;
pub mod norms;
pub mod operators;
pub mod spectral;
pub mod system;
pub mod witness;

mod fft;

pub use error::{Error, Result};
pub use grid::{GridSpec, MatrixField, ScalarField, VectorField};
pub use num_complex::Complex64;
pub use operators::PairingConvention;
pub use system::EllipticSystem;
