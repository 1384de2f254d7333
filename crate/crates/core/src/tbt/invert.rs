use faer::{c64, Accum, Mat, MatMut, Par};

use crate::error::Result;
use crate::tbt::generators::TbtGenerators;
use crate::tbt::schur::{factor_r0, BlockCache, SchurState};

/// Inverse of a Hermitian positive definite TBT matrix from its first block
/// row.
///
/// Runs the Schur recursion to the last stage, fills the first block row of
/// the inverse from `α` and `Ŵ`, propagates the upper quarter of blocks
/// with `(G⁻¹)_{i+1,j+1} = (G⁻¹)_{i,j} + 𝒲_{i,j}`, then completes the matrix
/// by persymmetry and Hermitian symmetry. Blocks on the diagonal and the
/// anti-diagonal are halved before the two symmetric completions (the centre
/// block, on both, is quartered) so each is counted exactly once.
pub fn tbt_invert(gen: &TbtGenerators) -> Result<Mat<c64>> {
    let cache = BlockCache::new(gen);
    let m = cache.block_count();
    let p = gen.block_size();
    let dim = m * p;
    let r0 = factor_r0(&cache)?;

    let mut state = SchurState::start(&cache, &r0)?;
    while state.stage() + 1 < m {
        state = state.advance_with(&cache)?;
    }
    let last = m - 1;

    let what = state.what();
    let w = state.w();
    let alpha_inv = state.alpha_inverse();
    // α^{-T} = conj(α^{-1}) for Hermitian α
    let alpha_inv_t = alpha_inv.conjugate().to_owned();

    // 𝒲_{i,j} = conj(Ŵ)_i α^{-T} (Ŵ_j)^T − W_i α^{-1} (W_j)^*
    let hat_left = w_times(what.conjugate().to_owned(), &alpha_inv_t);
    let left = w_times(w.clone(), &alpha_inv);
    let correction = |i: usize, j: usize| -> Mat<c64> {
        let mut out = Mat::zeros(p, p);
        faer::linalg::matmul::matmul(
            out.as_mut(),
            Accum::Replace,
            hat_left.as_ref().subrows(i * p, p),
            what.as_ref().subrows(j * p, p).transpose(),
            c64::new(1.0, 0.0),
            Par::Seq,
        );
        faer::linalg::matmul::matmul(
            out.as_mut(),
            Accum::Add,
            left.as_ref().subrows(i * p, p),
            w.as_ref().subrows(j * p, p).adjoint(),
            c64::new(-1.0, 0.0),
            Par::Seq,
        );
        out
    };

    let mut inv = Mat::<c64>::zeros(dim, dim);

    // first block row: J_p α^{-T} J_p, then J_p α^{-T} Ŵ^T
    let head = alpha_inv_t.as_ref().reverse_rows().reverse_cols().to_owned();
    block_mut(inv.as_mut(), 0, 0, p).copy_from(&head);
    let tail = alpha_inv_t.as_ref().reverse_rows() * what.transpose();
    inv.as_mut()
        .submatrix_mut(0, p, p, last * p)
        .copy_from(&tail);

    // upper quarter, 0-based blocks (i, j) -> (i+1, j+1)
    let half = last / 2;
    for i in 0..half {
        for j in i..(last - i - 1) {
            let next = inv.as_ref().submatrix(i * p, j * p, p, p) + correction(i, j);
            block_mut(inv.as_mut(), i + 1, j + 1, p).copy_from(&next);
        }
    }

    for i in 0..=half {
        scale_block(block_mut(inv.as_mut(), i, i, p), 0.5);
        scale_block(block_mut(inv.as_mut(), i, last - i, p), 0.5);
    }

    // persymmetry: G ← G + (J G J)^T, entrywise G[r][c] += G[n-1-c][n-1-r]
    let snapshot = inv.clone();
    for c in 0..dim {
        for r in 0..dim {
            inv[(r, c)] += snapshot[(dim - 1 - c, dim - 1 - r)];
        }
    }
    // Hermitian completion: G ← G + G^*
    let snapshot = inv.clone();
    for c in 0..dim {
        for r in 0..dim {
            inv[(r, c)] += snapshot[(c, r)].conj();
        }
    }
    Ok(inv)
}

fn w_times(w: Mat<c64>, rhs: &Mat<c64>) -> Mat<c64> {
    &w * rhs
}

fn block_mut(m: MatMut<'_, c64>, i: usize, j: usize, p: usize) -> MatMut<'_, c64> {
    m.submatrix_mut(i * p, j * p, p, p)
}

fn scale_block(mut b: MatMut<'_, c64>, s: f64) {
    for j in 0..b.ncols() {
        for i in 0..b.nrows() {
            let v = b[(i, j)];
            b[(i, j)] = v * s;
        }
    }
}
