//! Timing of the structured inverse against dense Cholesky inversion.

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use faer::{c64, Mat};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::io_err;
use crate::tbt::{assemble_dense_hessian, dense_oracle_invert, tbt_invert, TbtGenerators};

/// Largest accepted `‖G⁻¹ A - I‖_F / √dim` for a structured inverse.
pub const INVERSE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub p: usize,
    /// Median seconds per structured inversion.
    pub fast_s: f64,
    /// Median seconds per dense inversion.
    pub dense_s: f64,
}

/// Seed of repetition `rep` at order `n`.
pub fn instance_seed(base: u64, n: usize, rep: usize) -> u64 {
    base.wrapping_add((n as u64) << 32).wrapping_add(rep as u64)
}

/// Random PD generators with `n1 = n2 = n`.
pub fn random_instance(n: usize, seed: u64) -> Result<TbtGenerators> {
    TbtGenerators::random_pd(n, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `‖B A - I‖_F / √dim`.
pub fn inverse_residual(inv: &Mat<c64>, a: &Mat<c64>) -> f64 {
    let n = a.nrows();
    (inv * a - Mat::<c64>::identity(n, n)).norm_l2() / (n as f64).sqrt()
}

fn median(mut xs: Vec<Duration>) -> f64 {
    xs.sort();
    let m = xs.len();
    if m % 2 == 1 {
        xs[m / 2].as_secs_f64()
    } else {
        (xs[m / 2 - 1] + xs[m / 2]).as_secs_f64() / 2.0
    }
}

/// Times both inversions on `reps` instances after one untimed warm-up,
/// checking every structured inverse against the dense one.
pub fn bench_invert(n: usize, reps: usize, base_seed: u64) -> Result<BenchRow> {
    if n == 0 || reps == 0 {
        return Err(Error::domain("order and repetition count must be positive"));
    }
    let warm = random_instance(n, instance_seed(base_seed, n, reps))?;
    tbt_invert(&warm)?;
    dense_oracle_invert(assemble_dense_hessian(&warm).as_ref())?;

    let mut fast = Vec::with_capacity(reps);
    let mut dense = Vec::with_capacity(reps);
    for rep in 0..reps {
        let seed = instance_seed(base_seed, n, rep);
        let gen = random_instance(n, seed)?;
        let a = assemble_dense_hessian(&gen);

        let start = Instant::now();
        let g_fast = tbt_invert(&gen)?;
        fast.push(start.elapsed());

        let start = Instant::now();
        let g_dense = dense_oracle_invert(a.as_ref())?;
        dense.push(start.elapsed());

        let resid = inverse_residual(&g_fast, &a);
        let gap = (&g_fast - &g_dense).norm_l2() / g_dense.norm_l2();
        if !(resid < INVERSE_TOL && gap < INVERSE_TOL) {
            return Err(Error::numerical(format!(
                "structured inverse failed verification at n={n}, seed={seed}: residual {resid:e}, gap to dense {gap:e}"
            )));
        }
        log::info!("n={n} rep={rep}: fast {:?}, dense {:?}", fast[rep], dense[rep]);
    }
    Ok(BenchRow {
        n,
        p: 2 * n + 1,
        fast_s: median(fast),
        dense_s: median(dense),
    })
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "p", "fast_mean_s", "dense_mean_s"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.p.to_string(),
            format!("{:e}", r.fast_s),
            format!("{:e}", r.dense_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_bench_csv(rows: &[BenchRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    write_bench_csv(rows, file).map_err(|source| Error::Csv {
        path: path.display().to_string(),
        source,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_orders_verify() {
        for n in 1..=4 {
            let row = bench_invert(n, 3, 7).unwrap();
            assert_eq!(row.p, 2 * n + 1);
            assert!(row.fast_s > 0.0 && row.dense_s > 0.0);
        }
        assert!(bench_invert(0, 1, 0).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [2.0, 3.0, 5.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 0.3 * x.powf(4.5)).collect();
        assert!((log_log_slope(&xs, &ys) - 4.5).abs() < 1e-12);
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        write_bench_csv(&[BenchRow { n: 1, p: 3, fast_s: 1e-5, dense_s: 2e-5 }], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("n,p,fast_mean_s,dense_mean_s"));
        assert!(text.lines().nth(1).unwrap().starts_with("1,3,"));
    }
}
