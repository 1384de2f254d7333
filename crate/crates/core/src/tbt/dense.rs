use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{c64, Mat, MatRef, Side};

use crate::error::{Error, Result};

/// Inverse of a Hermitian positive definite matrix through a dense Cholesky
/// factorization. Reference for the structured inverse and the dense side of
/// the benchmark.
pub fn dense_oracle_invert(a: MatRef<'_, c64>) -> Result<Mat<c64>> {
    Ok(factor(a)?.inverse())
}

/// Solves `A X = B` for Hermitian positive definite `A` by dense Cholesky.
pub fn dense_oracle_solve(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Result<Mat<c64>> {
    if b.nrows() != a.nrows() {
        return Err(Error::domain(format!(
            "right-hand side has {} rows, matrix has {}",
            b.nrows(),
            a.nrows()
        )));
    }
    Ok(factor(a)?.solve(b))
}

fn factor(a: MatRef<'_, c64>) -> Result<faer::linalg::solvers::Llt<c64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::domain("matrix must be square"));
    }
    a.llt(Side::Lower)
        .map_err(|_| Error::numerical("matrix is not Hermitian positive definite"))
}
