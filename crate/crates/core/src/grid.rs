//! Regular frequency grids on the 2-torus, real grid functions, Riemann-sum
//! quadrature and FFT-based Fourier coefficients.

use std::f64::consts::TAU;

use faer::c64;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::lattice::{IndexSet, SymmetricMultisequence};

/// Nodes `θ = (2π ℓ1 / N1, 2π ℓ2 / N2)`, `ℓj = 0..Nj`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrequencyGrid {
    nodes1: usize,
    nodes2: usize,
}

impl FrequencyGrid {
    pub fn new(nodes1: usize, nodes2: usize) -> Result<Self> {
        if nodes1 == 0 || nodes2 == 0 {
            return Err(Error::domain("grid sizes must be positive"));
        }
        Ok(FrequencyGrid { nodes1, nodes2 })
    }

    pub fn nodes1(&self) -> usize {
        self.nodes1
    }

    pub fn nodes2(&self) -> usize {
        self.nodes2
    }

    pub fn len(&self) -> usize {
        self.nodes1 * self.nodes2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Angular coordinates of the node at row-major index `idx`.
    pub fn theta(&self, idx: usize) -> (f64, f64) {
        let (l1, l2) = (idx / self.nodes2, idx % self.nodes2);
        (
            TAU * l1 as f64 / self.nodes1 as f64,
            TAU * l2 as f64 / self.nodes2 as f64,
        )
    }

    /// Row-major index of the node nearest to `(θ1, θ2)` on the torus.
    pub fn nearest_node(&self, theta1: f64, theta2: f64) -> usize {
        let snap = |theta: f64, n: usize| {
            let l = (theta.rem_euclid(TAU) / TAU * n as f64).round() as usize;
            l % n
        };
        snap(theta1, self.nodes1) * self.nodes2 + snap(theta2, self.nodes2)
    }

    /// Errors unless `Nj > 2 maxlag_j`, the condition under which the
    /// discrete Fourier coefficients of lags up to `maxlag` do not alias.
    pub fn check_lags(&self, maxlag1: usize, maxlag2: usize) -> Result<()> {
        if self.nodes1 <= 2 * maxlag1 || self.nodes2 <= 2 * maxlag2 {
            return Err(Error::domain(format!(
                "a {}x{} grid aliases lags up to ({maxlag1}, {maxlag2}); need N1 > {}, N2 > {}",
                self.nodes1,
                self.nodes2,
                2 * maxlag1,
                2 * maxlag2
            )));
        }
        Ok(())
    }
}

/// Real values on a [`FrequencyGrid`], stored row-major (`ℓ1` outer).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: FrequencyGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: FrequencyGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::domain(format!(
                "grid has {} nodes but {} values were given",
                grid.len(),
                values.len()
            )));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn constant(grid: FrequencyGrid, c: f64) -> Self {
        GridFunction {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: FrequencyGrid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let (t1, t2) = grid.theta(i);
                f(t1, t2)
            })
            .collect();
        GridFunction { grid, values }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Index and value of the largest entry.
    pub fn argmax(&self) -> (usize, f64) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best })
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::domain("grid functions live on different grids"));
        }
        Ok(GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn recip(&self) -> Self {
        self.map(f64::recip)
    }
}

/// Riemann-sum approximation of `∫ f dm`: the mean over the grid.
pub fn quadrature(f: &GridFunction) -> f64 {
    f.values.iter().sum::<f64>() / f.values.len() as f64
}

/// In-place unnormalized 2-D DFT of a row-major `n1 x n2` buffer.
fn fft2(data: &mut [c64], n1: usize, n2: usize, direction: FftDirection) {
    let mut planner = FftPlanner::<f64>::new();
    let rows = planner.plan_fft(n2, direction);
    let mut scratch = vec![c64::new(0.0, 0.0); rows.get_inplace_scratch_len()];
    rows.process_with_scratch(data, &mut scratch);

    let cols = planner.plan_fft(n1, direction);
    let mut column = vec![c64::new(0.0, 0.0); n1];
    let mut scratch = vec![c64::new(0.0, 0.0); cols.get_inplace_scratch_len()];
    for j in 0..n2 {
        for i in 0..n1 {
            column[i] = data[i * n2 + j];
        }
        cols.process_with_scratch(&mut column, &mut scratch);
        for i in 0..n1 {
            data[i * n2 + j] = column[i];
        }
    }
}

fn wrap(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// `Q(θ) = Σ_k q_k e^{-i⟨k,θ⟩}` at every node.
///
/// Coefficients are accumulated at `k mod N` before a forward FFT, which is
/// exact on the grid even when the rectangle is wider than the grid.
pub fn eval_trig_poly(q: &SymmetricMultisequence, grid: &FrequencyGrid) -> GridFunction {
    let (n1, n2) = (grid.nodes1, grid.nodes2);
    let mut buf = vec![c64::new(0.0, 0.0); n1 * n2];
    for (k, v) in q.index_set().lags().zip(q.values()) {
        buf[wrap(k.k1, n1) * n2 + wrap(k.k2, n2)] += v;
    }
    fft2(&mut buf, n1, n2, FftDirection::Forward);
    let scale = buf.iter().fold(1.0_f64, |m, v| m.max(v.norm()));
    debug_assert!(buf.iter().all(|v| v.im.abs() <= 1e-10 * scale));
    GridFunction {
        grid: *grid,
        values: buf.into_iter().map(|v| v.re).collect(),
    }
}

/// Discrete Fourier coefficients `(1/(N1 N2)) Σ_θ e^{i⟨k,θ⟩} f(θ)` for
/// `|kj| <= maxlag_j`, computed with one inverse FFT.
///
/// `f` is real, so the result is conjugate-symmetric; pairs are averaged to
/// make that exact.
pub fn fourier_coefficients(
    f: &GridFunction,
    maxlag1: usize,
    maxlag2: usize,
) -> Result<SymmetricMultisequence> {
    let grid = f.grid;
    grid.check_lags(maxlag1, maxlag2)?;
    let s = IndexSet::new(maxlag1, maxlag2)?;
    let (n1, n2) = (grid.nodes1, grid.nodes2);
    let mut buf: Vec<c64> = f.values.iter().map(|&v| c64::new(v, 0.0)).collect();
    fft2(&mut buf, n1, n2, FftDirection::Inverse);
    let norm = 1.0 / (n1 * n2) as f64;
    let mut out = SymmetricMultisequence::from_half_fn(s, |k| {
        let hi = buf[wrap(k.k1, n1) * n2 + wrap(k.k2, n2)];
        let lo = buf[wrap(-k.k1, n1) * n2 + wrap(-k.k2, n2)];
        (hi + lo.conj()) * (0.5 * norm)
    });
    out.symmetrize();
    Ok(out)
}
