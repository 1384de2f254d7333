use faer::{c64, Mat};
use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::SymmetricMultisequence;

/// First block row `{h_{j,l}}` of a Hermitian Toeplitz-block-Toeplitz matrix
/// with `2 n1 + 1` blocks of size `2 n2 + 1`, for `j ∈ 0..=2n1` and
/// `l ∈ -2n2..=2n2`.
///
/// Lags with `j < 0` are implied by `h_{-j,-l} = conj(h_{j,l})`.
#[derive(Debug, Clone, PartialEq)]
pub struct TbtGenerators {
    n1: usize,
    n2: usize,
    h: Vec<c64>,
}

impl TbtGenerators {
    /// Builds generators from `f(j, l)`. The `j = 0` row is taken from
    /// `l >= 0` and completed by conjugation so the assembled matrix is
    /// Hermitian; `h_{0,0}` keeps only its real part.
    pub fn from_fn(n1: usize, n2: usize, f: impl FnMut(usize, i64) -> c64) -> Result<Self> {
        let gen = Self::build(n1, n2, f)?;
        if gen.h00() <= 0.0 {
            return Err(Error::invalid(format!(
                "h_(0,0) must be positive, got {}",
                gen.h00()
            )));
        }
        Ok(gen)
    }

    fn build(n1: usize, n2: usize, mut f: impl FnMut(usize, i64) -> c64) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::domain("generator orders must be positive"));
        }
        let width = 4 * n2 + 1;
        let mut h = vec![c64::new(0.0, 0.0); (2 * n1 + 1) * width];
        let c = 2 * n2 as i64;
        for j in 0..=2 * n1 {
            for l in -c..=c {
                if j == 0 && l < 0 {
                    continue;
                }
                h[j * width + (l + c) as usize] = f(j, l);
            }
        }
        for l in 1..=c {
            h[(c - l) as usize] = h[(c + l) as usize].conj();
        }
        h[c as usize].im = 0.0;
        Ok(TbtGenerators { n1, n2, h })
    }

    /// Generators of the identity matrix.
    pub fn identity(n1: usize, n2: usize) -> Result<Self> {
        Self::from_fn(n1, n2, |j, l| {
            c64::new(if j == 0 && l == 0 { 1.0 } else { 0.0 }, 0.0)
        })
    }

    /// Reads the `j >= 0` half of a multisequence over `(2n1, 2n2)`, e.g. the
    /// Fourier coefficients of `(Ψ⁻¹ + Q)⁻²`.
    pub fn from_lag_coefficients(coeffs: &SymmetricMultisequence) -> Result<Self> {
        let s = coeffs.index_set();
        if !s.n1().is_multiple_of(2) || !s.n2().is_multiple_of(2) {
            return Err(Error::domain(
                "lag coefficients must cover an even rectangle (2 n1, 2 n2)",
            ));
        }
        let values = coeffs.values();
        let p = s.block_size();
        let offset = s.n1() * p;
        Self::from_fn(s.n1() / 2, s.n2() / 2, |j, l| {
            values[offset + j * p + (l + s.n2() as i64) as usize]
        })
    }

    /// Random Hermitian positive definite generators: entries uniform in the
    /// unit square, then `h_{0,0}` shifted by `2 Σ|h| + 1`.
    ///
    /// No row of the assembled matrix holds more than two copies of any
    /// generator's magnitude off the diagonal, so the shift makes it strictly
    /// diagonally dominant.
    pub fn random_pd<R: Rng + ?Sized>(n1: usize, n2: usize, rng: &mut R) -> Result<Self> {
        let mut gen = Self::build(n1, n2, |_, _| {
            c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })?;
        let total: f64 = gen.h.iter().map(|v| v.norm()).sum();
        gen.h[2 * n2].re += 2.0 * total + 1.0;
        Ok(gen)
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    /// Number of blocks per block row, `2 n1 + 1`.
    pub fn block_count(&self) -> usize {
        2 * self.n1 + 1
    }

    /// Block size `p = 2 n2 + 1`.
    pub fn block_size(&self) -> usize {
        2 * self.n2 + 1
    }

    /// Order of the assembled matrix.
    pub fn dim(&self) -> usize {
        self.block_count() * self.block_size()
    }

    pub fn h00(&self) -> f64 {
        self.h[2 * self.n2].re
    }

    /// `h_{j,l}` for any `|j| <= 2n1`, `|l| <= 2n2`.
    pub fn get(&self, j: i64, l: i64) -> c64 {
        let width = 4 * self.n2 + 1;
        let c = 2 * self.n2 as i64;
        debug_assert!(j.unsigned_abs() as usize <= 2 * self.n1 && l.abs() <= c);
        if j < 0 {
            self.h[(-j) as usize * width + (c - l) as usize].conj()
        } else {
            self.h[j as usize * width + (c + l) as usize]
        }
    }

    /// The Toeplitz block `R_j`, whose entry `(r, c)` is `h_{j, c-r}`.
    pub fn block(&self, j: usize) -> Mat<c64> {
        let p = self.block_size();
        Mat::from_fn(p, p, |r, c| self.get(j as i64, c as i64 - r as i64))
    }

    /// Keeps the leading `2 n1 + 1` blocks, i.e. the generators of the
    /// leading principal TBT submatrix.
    pub fn truncated(&self, n1: usize) -> Result<Self> {
        if n1 == 0 || n1 > self.n1 {
            return Err(Error::domain(format!(
                "cannot truncate {} block orders to {n1}",
                self.n1
            )));
        }
        let width = 4 * self.n2 + 1;
        Ok(TbtGenerators {
            n1,
            n2: self.n2,
            h: self.h[..(2 * n1 + 1) * width].to_vec(),
        })
    }
}

/// The dense matrix whose entry at lexicographic row `k`, column `l` is
/// `h_{l-k}`: block `(a, b)` is `R_{b-a}` for `b >= a` and `R_{a-b}^*` below.
pub fn assemble_dense_hessian(gen: &TbtGenerators) -> Mat<c64> {
    let p = gen.block_size();
    let n = gen.dim();
    Mat::from_fn(n, n, |row, col| {
        let (a, r) = ((row / p) as i64, (row % p) as i64);
        let (b, c) = ((col / p) as i64, (col % p) as i64);
        gen.get(b - a, c - r)
    })
}
