//! Two-dimensional spectral estimation by Newton's method on the convex dual,
//! with the Hessian solves done through fast Toeplitz-block-Toeplitz algebra.

pub mod bench;
pub mod dual;
pub mod error;
pub mod estimate;
pub mod field;
pub mod grid;
pub mod lattice;
pub mod newton;
pub mod tbt;

pub use error::{Error, Result};

/// Caps the worker threads faer may use for dense kernels. `1` keeps every
/// computation sequential and bit-reproducible.
pub fn set_threads(n: usize) {
    faer::set_global_parallelism(if n <= 1 {
        faer::Par::Seq
    } else {
        faer::Par::rayon(n)
    });
}
