//! Fast algebra for Hermitian positive definite Toeplitz-block-Toeplitz
//! matrices.

pub mod dense;
pub mod generators;
pub mod invert;
pub mod schur;
pub mod solve;

use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};

pub use dense::{dense_oracle_invert, dense_oracle_solve};
pub use generators::{assemble_dense_hessian, TbtGenerators};
pub use invert::tbt_invert;
pub use schur::{schur_advance, schur_init, SchurState};
pub use solve::{tbt_solve, BlockVector};

/// Reversal of `k` stacked blocks of size `p`, i.e. the `kp x kp`
/// anti-identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExchangeOperator {
    p: usize,
    k: usize,
}

impl ExchangeOperator {
    pub fn new(p: usize, k: usize) -> Self {
        ExchangeOperator { p, k }
    }

    pub fn order(&self) -> usize {
        self.p * self.k
    }

    /// `J M`, which reverses the rows of `M`.
    pub fn reverse_apply(&self, m: MatRef<'_, c64>) -> Result<Mat<c64>> {
        if m.nrows() != self.order() {
            return Err(Error::domain(format!(
                "exchange of order {} applied to {} rows",
                self.order(),
                m.nrows()
            )));
        }
        Ok(m.reverse_rows().to_owned())
    }

    pub fn matrix(&self) -> Mat<c64> {
        let n = self.order();
        Mat::from_fn(n, n, |r, c| c64::new(if r + c + 1 == n { 1.0 } else { 0.0 }, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reverse_matches_dense_exchange() {
        let j = ExchangeOperator::new(3, 2);
        let m = Mat::from_fn(6, 2, |r, c| c64::new(r as f64, c as f64));
        let fast = j.reverse_apply(m.as_ref()).unwrap();
        assert_eq!(fast, j.matrix() * &m);
        assert!(j.reverse_apply(Mat::<c64>::zeros(5, 1).as_ref()).is_err());
        assert_eq!(j.matrix() * j.matrix(), Mat::<c64>::identity(6, 6));
    }
}
