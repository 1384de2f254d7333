//! Nested Schur-complement recursion for Hermitian TBT matrices.
//!
//! `G_k` is the leading principal submatrix with `k + 1` blocks. With
//! `W_k = -G_{k-1}^{-1} [R_k; ...; R_1]` and the Schur complement
//! `α_k = R_0 + W_k^* [R_k; ...; R_1]`, persymmetry gives the order-update
//!
//! ```text
//! β_k     = W_k^T [R̂_1; ...; R̂_k] + R̂_{k+1}
//! α_{k+1} = α_k - β_k^* α_k^{-T} β_k
//! Ŵ_{k+1} = [Ŵ_k; 0] - [conj(W_k); I] α_k^{-T} β_k
//! ```
//!
//! where `R̂_j = J_p R_j` and `Ŵ_k = J W_k` (full row reversal). Only `Ŵ_k`
//! is carried; `W_k` is recovered by reversing rows when needed.

use faer::linalg::solvers::{DenseSolveCore, Llt, Solve};
use faer::{c64, Accum, Mat, MatRef, Par, Side};

use crate::error::{Error, Result};
use crate::tbt::generators::TbtGenerators;

/// Blocks `R_0 .. R_{m-1}` and the stack `[R̂_1; ...; R̂_{m-1}]`.
pub(crate) struct BlockCache {
    pub(crate) r: Vec<Mat<c64>>,
    rhat_stack: Mat<c64>,
    p: usize,
}

impl BlockCache {
    pub(crate) fn new(gen: &TbtGenerators) -> Self {
        let m = gen.block_count();
        let p = gen.block_size();
        let r: Vec<Mat<c64>> = (0..m).map(|j| gen.block(j)).collect();
        let mut rhat_stack = Mat::zeros((m - 1) * p, p);
        for (i, rj) in r.iter().enumerate().skip(1) {
            rhat_stack
                .as_mut()
                .subrows_mut((i - 1) * p, p)
                .copy_from(rj.as_ref().reverse_rows());
        }
        BlockCache { r, rhat_stack, p }
    }

    pub(crate) fn block_count(&self) -> usize {
        self.r.len()
    }

    fn rhat_stack(&self, k: usize) -> MatRef<'_, c64> {
        self.rhat_stack.as_ref().subrows(0, k * self.p)
    }

    fn rhat(&self, j: usize) -> MatRef<'_, c64> {
        self.rhat_stack.as_ref().subrows((j - 1) * self.p, self.p)
    }
}

/// Carry of the recursion at stage `k`: `α_k` with its Cholesky factor,
/// `Ŵ_k` (`kp x p`), and the `β_{k-1}` that produced this stage.
#[derive(Debug, Clone)]
pub struct SchurState {
    stage: usize,
    alpha: Mat<c64>,
    alpha_llt: Llt<c64>,
    what: Mat<c64>,
    beta: Option<Mat<c64>>,
}

fn factor_alpha(alpha: &Mat<c64>, stage: usize) -> Result<Llt<c64>> {
    alpha.llt(Side::Lower).map_err(|_| {
        Error::numerical(format!(
            "Schur complement α_{stage} is not positive definite; input is not a Hermitian PD TBT matrix"
        ))
    })
}

fn hermitian_part(a: &Mat<c64>) -> Mat<c64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

pub(crate) fn factor_r0(cache: &BlockCache) -> Result<Llt<c64>> {
    cache.r[0].llt(Side::Lower).map_err(|_| {
        Error::numerical("R_0 is not positive definite; input is not a Hermitian PD TBT matrix")
    })
}

impl SchurState {
    pub(crate) fn start(cache: &BlockCache, r0: &Llt<c64>) -> Result<Self> {
        if cache.block_count() < 2 {
            return Err(Error::domain("the recursion needs at least two blocks"));
        }
        let r1 = &cache.r[1];
        let w1 = -r0.solve(r1);
        let mut alpha = cache.r[0].clone();
        faer::linalg::matmul::matmul(
            alpha.as_mut(),
            Accum::Add,
            w1.adjoint(),
            r1.as_ref(),
            c64::new(1.0, 0.0),
            Par::Seq,
        );
        let alpha = hermitian_part(&alpha);
        let alpha_llt = factor_alpha(&alpha, 1)?;
        Ok(SchurState {
            stage: 1,
            alpha,
            alpha_llt,
            what: w1.as_ref().reverse_rows().to_owned(),
            beta: None,
        })
    }

    pub(crate) fn advance_with(&self, cache: &BlockCache) -> Result<Self> {
        let k = self.stage;
        if k + 1 >= cache.block_count() {
            return Err(Error::domain(format!(
                "stage {k} is already the last for {} blocks",
                cache.block_count()
            )));
        }
        let p = cache.p;
        let w = self.w();

        // β_k = W_k^T R̂stack_k + R̂_{k+1}
        let mut beta = cache.rhat(k + 1).to_owned();
        faer::linalg::matmul::matmul(
            beta.as_mut(),
            Accum::Add,
            w.transpose(),
            cache.rhat_stack(k),
            c64::new(1.0, 0.0),
            Par::Seq,
        );

        // α_k^{-T} = conj(α_k)^{-1} for Hermitian α_k
        let gamma = self.alpha_llt.solve_conjugate(&beta);

        let mut alpha = self.alpha.clone();
        faer::linalg::matmul::matmul(
            alpha.as_mut(),
            Accum::Add,
            beta.adjoint(),
            gamma.as_ref(),
            c64::new(-1.0, 0.0),
            Par::Seq,
        );
        let alpha = hermitian_part(&alpha);
        let alpha_llt = factor_alpha(&alpha, k + 1)?;

        let mut what = Mat::zeros((k + 1) * p, p);
        {
            let (mut top, mut bottom) = what.as_mut().split_at_row_mut(k * p);
            top.copy_from(&self.what);
            faer::linalg::matmul::matmul(
                top.as_mut(),
                Accum::Add,
                w.conjugate(),
                gamma.as_ref(),
                c64::new(-1.0, 0.0),
                Par::Seq,
            );
            bottom.copy_from(-&gamma);
        }

        Ok(SchurState {
            stage: k + 1,
            alpha,
            alpha_llt,
            what,
            beta: Some(beta),
        })
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    /// Schur complement `α_k = G_k / G_{k-1}`.
    pub fn alpha(&self) -> &Mat<c64> {
        &self.alpha
    }

    /// `Ŵ_k = J W_k`.
    pub fn what(&self) -> &Mat<c64> {
        &self.what
    }

    /// `β_{k-1}`, absent at stage 1.
    pub fn beta(&self) -> Option<&Mat<c64>> {
        self.beta.as_ref()
    }

    /// `W_k = -G_{k-1}^{-1} [R_k; ...; R_1]`, recovered from `Ŵ_k`.
    pub fn w(&self) -> Mat<c64> {
        self.what.as_ref().reverse_rows().to_owned()
    }

    /// `α_k^{-1} rhs`.
    pub fn solve_alpha(&self, rhs: MatRef<'_, c64>) -> Mat<c64> {
        self.alpha_llt.solve(rhs)
    }

    /// `α_k^{-T} rhs`, from the same factorization.
    pub fn solve_alpha_transpose(&self, rhs: MatRef<'_, c64>) -> Mat<c64> {
        self.alpha_llt.solve_conjugate(rhs)
    }

    pub fn alpha_inverse(&self) -> Mat<c64> {
        self.alpha_llt.inverse()
    }
}

/// Stage-1 state: `W_1 = -R_0^{-1} R_1`, `α_1 = R_0 + W_1^* R_1`, `Ŵ_1 = J_p W_1`.
pub fn schur_init(gen: &TbtGenerators) -> Result<SchurState> {
    let cache = BlockCache::new(gen);
    let r0 = factor_r0(&cache)?;
    SchurState::start(&cache, &r0)
}

/// One order-update from stage `k` to `k + 1`.
pub fn schur_advance(state: &SchurState, gen: &TbtGenerators) -> Result<SchurState> {
    state.advance_with(&BlockCache::new(gen))
}
