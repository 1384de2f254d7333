use faer::{c64, Accum, Mat, MatRef, Par};

use crate::error::{Error, Result};
use crate::tbt::generators::TbtGenerators;
use crate::tbt::schur::{factor_r0, BlockCache, SchurState};

/// `m` stacked blocks of `p x q` right-hand sides.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    data: Mat<c64>,
    block_size: usize,
}

impl BlockVector {
    pub fn new(data: Mat<c64>, block_size: usize) -> Result<Self> {
        if block_size == 0 || !data.nrows().is_multiple_of(block_size) || data.ncols() == 0 {
            return Err(Error::domain(format!(
                "a {}x{} matrix is not a stack of {block_size}-row blocks",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(BlockVector { data, block_size })
    }

    /// A single column, split into blocks of `block_size` entries.
    pub fn from_column(values: &[c64], block_size: usize) -> Result<Self> {
        Self::new(Mat::from_fn(values.len(), 1, |i, _| values[i]), block_size)
    }

    pub fn block_count(&self) -> usize {
        self.data.nrows() / self.block_size
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn block(&self, i: usize) -> MatRef<'_, c64> {
        self.data.as_ref().subrows(i * self.block_size, self.block_size)
    }

    pub fn as_mat(&self) -> MatRef<'_, c64> {
        self.data.as_ref()
    }

    pub fn into_mat(self) -> Mat<c64> {
        self.data
    }

    /// First column as a flat vector.
    pub fn column(&self, j: usize) -> Vec<c64> {
        (0..self.data.nrows()).map(|i| self.data[(i, j)]).collect()
    }
}

/// Solves `G X = B` for a Hermitian positive definite TBT matrix `G` by
/// growing the solution one block at a time:
///
/// ```text
/// X_0     = R_0^{-1} B_0
/// δ_k     = W_k^* [B_0; ...; B_{k-1}] + B_k
/// X_k     = [X_{k-1}; 0] + [W_k; I] α_k^{-1} δ_k
/// ```
pub fn tbt_solve(gen: &TbtGenerators, rhs: &BlockVector) -> Result<BlockVector> {
    let m = gen.block_count();
    let p = gen.block_size();
    if rhs.block_count() != m || rhs.block_size() != p {
        return Err(Error::domain(format!(
            "right-hand side has {} blocks of {} rows, matrix has {m} blocks of {p}",
            rhs.block_count(),
            rhs.block_size()
        )));
    }
    let q = rhs.ncols();
    let b = rhs.as_mat();
    let cache = BlockCache::new(gen);
    let r0 = factor_r0(&cache)?;

    let mut x = Mat::<c64>::zeros(m * p, q);
    {
        use faer::linalg::solvers::Solve;
        let x0 = r0.solve(b.subrows(0, p));
        x.as_mut().subrows_mut(0, p).copy_from(&x0);
    }

    let mut state = SchurState::start(&cache, &r0)?;
    for k in 1..m {
        let w = state.w();
        let mut delta = b.subrows(k * p, p).to_owned();
        faer::linalg::matmul::matmul(
            delta.as_mut(),
            Accum::Add,
            w.adjoint(),
            b.subrows(0, k * p),
            c64::new(1.0, 0.0),
            Par::Seq,
        );
        let update = state.solve_alpha(delta.as_ref());
        faer::linalg::matmul::matmul(
            x.as_mut().subrows_mut(0, k * p),
            Accum::Add,
            w.as_ref(),
            update.as_ref(),
            c64::new(1.0, 0.0),
            Par::Seq,
        );
        x.as_mut().subrows_mut(k * p, p).copy_from(&update);
        if k + 1 < m {
            state = state.advance_with(&cache)?;
        }
    }
    BlockVector::new(x, p)
}
