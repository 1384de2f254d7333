//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits nonzero if any criterion fails.

use std::f64::consts::{PI, SQRT_2};
use std::process::ExitCode;
use std::time::Instant;

use faer::{c64, Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use specest_core::bench::{bench_invert, inverse_residual, log_log_slope, random_instance};
use specest_core::dual::{dual_gradient, dual_objective, hessian_generators, moment_residual};
use specest_core::estimate::{estimate_spectrum, Estimate, EstimateConfig};
use specest_core::field::{synth_field, FieldModel};
use specest_core::grid::{FrequencyGrid, GridFunction};
use specest_core::lattice::{IndexSet, LagIndex, SymmetricMultisequence};
use specest_core::newton::{solve_dual, Method, SolverConfig};
use specest_core::tbt::{assemble_dense_hessian, tbt_invert, tbt_solve, BlockVector};

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn inversion() -> Check {
    let mut worst: f64 = 0.0;
    for n in 1..=8 {
        for rep in 0..50 {
            let gen = random_instance(n, 1000 * n as u64 + rep).map_err(|e| e.to_string())?;
            let inv = tbt_invert(&gen).map_err(|e| format!("n={n} rep={rep}: {e}"))?;
            worst = worst.max(inverse_residual(&inv, &assemble_dense_hessian(&gen)));
        }
    }
    ensure(worst < 1e-8, format!("worst ‖G A - I‖_F/√dim = {worst:.2e} over 400 instances"))
}

fn solving() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for n in 1..=8 {
        for rep in 0..50 {
            let gen = random_instance(n, 5000 * n as u64 + rep).map_err(|e| e.to_string())?;
            let a = assemble_dense_hessian(&gen);
            let p = gen.block_size();
            for q in [1, p, 3] {
                let b = Mat::from_fn(gen.dim(), q, |_, _| {
                    c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                });
                let rhs = BlockVector::new(b.clone(), p).map_err(|e| e.to_string())?;
                let x = tbt_solve(&gen, &rhs).map_err(|e| format!("n={n} q={q}: {e}"))?;
                worst = worst.max((&a * x.as_mat() - &b).norm_l2() / b.norm_l2());
            }
        }
    }
    ensure(worst < 1e-10, format!("worst relative residual {worst:.2e}"))
}

fn complexity() -> Check {
    let (mut ps, mut fast, mut dense) = (Vec::new(), Vec::new(), Vec::new());
    let mut crossover = None;
    for n in (10..=40).step_by(2) {
        let row = bench_invert(n, 1, 0).map_err(|e| e.to_string())?;
        eprintln!("  n={n:>2} p={:>2} fast {:.3e} s dense {:.3e} s", row.p, row.fast_s, row.dense_s);
        if crossover.is_none() && row.fast_s < row.dense_s {
            crossover = Some(n);
        }
        ps.push(row.p as f64);
        fast.push(row.fast_s);
        dense.push(row.dense_s);
    }
    let (sf, sd) = (log_log_slope(&ps, &fast), log_log_slope(&ps, &dense));
    let cross = crossover.map_or("none".to_string(), |n| format!("n={n}"));
    ensure(
        sf <= sd - 0.5,
        format!("slope fast {sf:.2}, dense {sd:.2}; fast first faster at {cross}"),
    )
}

fn random_sym(s: IndexSet, scale: f64, rng: &mut ChaCha8Rng) -> SymmetricMultisequence {
    SymmetricMultisequence::from_half_fn(s, |_| {
        c64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale))
    })
}

struct Point {
    q: SymmetricMultisequence,
    sigma: SymmetricMultisequence,
    psi_inv: GridFunction,
}

/// Feasible points on a 16×16 grid: `Ψ⁻¹ ≥ 1` and `Σ|q_k| < 1/2`.
fn random_points() -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let grid = FrequencyGrid::new(16, 16).unwrap();
    (0..20)
        .map(|i| {
            let n = 1 + i % 2;
            let s = IndexSet::new(n, n).unwrap();
            let q = random_sym(s, 0.4 / s.len() as f64, &mut rng);
            let mut sigma = random_sym(s, 0.2, &mut rng);
            sigma.set(LagIndex::ZERO, c64::new(1.5, 0.0)).unwrap();
            let a = rng.random_range(0.0..0.5);
            let psi_inv = GridFunction::from_fn(grid, |t1, t2| 1.5 + a * (t1 + 0.3).cos() * t2.sin());
            Point { q, sigma, psi_inv }
        })
        .collect()
}

fn perturb(q: &SymmetricMultisequence, pos: usize, delta: c64) -> SymmetricMultisequence {
    let k = q.index_set().lag_at(pos);
    let mut out = q.clone();
    out.set(k, q.get(k).unwrap() + delta).unwrap();
    out
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn derivatives() -> Check {
    let h = 1e-5;
    let (mut grad_err, mut hess_err): (f64, f64) = (0.0, 0.0);
    for pt in random_points() {
        let j = |x: &SymmetricMultisequence| dual_objective(x, &pt.sigma, &pt.psi_inv).unwrap();
        let grad = |x: &SymmetricMultisequence| dual_gradient(x, &pt.sigma, &pt.psi_inv).unwrap();
        let g = grad(&pt.q);
        let hess = assemble_dense_hessian(&hessian_generators(&pt.q, &pt.psi_inv).unwrap());
        let len = pt.q.len();
        let mid = len / 2;
        let i = c64::new(0.0, 1.0);
        let scale = hess.norm_max();
        let gdiff = |delta: c64, pos: usize| -> Vec<c64> {
            let (a, b) = (grad(&perturb(&pt.q, pos, delta)), grad(&perturb(&pt.q, pos, -delta)));
            a.values().iter().zip(b.values()).map(|(x, y)| (x - y) / (2.0 * h)).collect()
        };
        for pos in mid..len {
            let gk = g.values()[pos];
            let fd_re = (j(&perturb(&pt.q, pos, c64::new(h, 0.0))) - j(&perturb(&pt.q, pos, c64::new(-h, 0.0))))
                / (2.0 * h);
            let dr = gdiff(c64::new(h, 0.0), pos);
            if pos == mid {
                grad_err = grad_err.max(rel(fd_re, gk.re));
                for k in 0..len {
                    hess_err = hess_err.max((dr[k] - hess[(k, pos)]).norm() / scale);
                }
                continue;
            }
            let fd_im = (j(&perturb(&pt.q, pos, i * h)) - j(&perturb(&pt.q, pos, -i * h))) / (2.0 * h);
            grad_err = grad_err.max(rel(fd_re, 2.0 * gk.re)).max(rel(fd_im, -2.0 * gk.im));
            let di = gdiff(i * h, pos);
            for k in 0..len {
                let col = (dr[k] + i * di[k]) * 0.5;
                let mirror = (dr[k] - i * di[k]) * 0.5;
                hess_err = hess_err
                    .max((col - hess[(k, pos)]).norm() / scale)
                    .max((mirror - hess[(k, len - 1 - pos)]).norm() / scale);
            }
        }
    }
    ensure(
        grad_err < 1e-6 && hess_err < 1e-5,
        format!("gradient rel. error {grad_err:.2e}, Hessian rel. error {hess_err:.2e}"),
    )
}

fn structure() -> Check {
    let mut herm: f64 = 0.0;
    let mut persym: f64 = 0.0;
    let mut toeplitz: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    for pt in random_points() {
        let a = assemble_dense_hessian(&hessian_generators(&pt.q, &pt.psi_inv).unwrap());
        let n = a.nrows();
        let scale = a.norm_max();
        herm = herm.max((&a - a.adjoint()).norm_max() / scale);
        let jatj = Mat::from_fn(n, n, |r, c| a[(n - 1 - c, n - 1 - r)]);
        persym = persym.max((&jatj - &a).norm_max() / scale);
        let eig = a.self_adjoint_eigenvalues(Side::Lower).map_err(|e| format!("{e:?}"))?;
        min_eig = eig.iter().cloned().fold(min_eig, f64::min);
        let s = pt.q.index_set();
        if s.n1() == 1 {
            for (r, k) in s.lags().enumerate() {
                for (c, l) in s.lags().enumerate() {
                    for (r2, k2) in s.lags().enumerate() {
                        for (c2, l2) in s.lags().enumerate() {
                            if l.k1 - k.k1 == l2.k1 - k2.k1 && l.k2 - k.k2 == l2.k2 - k2.k2 {
                                toeplitz = toeplitz.max((a[(r, c)] - a[(r2, c2)]).norm() / scale);
                            }
                        }
                    }
                }
            }
        }
    }
    ensure(
        herm < 1e-12 && persym < 1e-12 && toeplitz < 1e-12 && min_eig > 0.0,
        format!(
            "Hermitian defect {herm:.1e}, persymmetry defect {persym:.1e}, \
             Toeplitz defect {toeplitz:.1e}, min eigenvalue {min_eig:.3e}"
        ),
    )
}

fn centre(s: IndexSet, v: f64) -> SymmetricMultisequence {
    let mut out = SymmetricMultisequence::zeros(s);
    out.set(LagIndex::ZERO, c64::new(v, 0.0)).unwrap();
    out
}

fn analytic_optimum() -> Check {
    let s = IndexSet::new(1, 1).unwrap();
    let one = GridFunction::constant(FrequencyGrid::new(16, 16).unwrap(), 1.0);
    let cfg = SolverConfig::default();
    let (q, _) = solve_dual(&centre(s, 2.0), &one, &cfg, Method::Full).map_err(|e| e.to_string())?;
    let q0 = q.get(LagIndex::ZERO).unwrap();
    let others = q
        .values()
        .iter()
        .enumerate()
        .filter(|&(pos, _)| pos != s.len() / 2)
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max);
    let (_, trace) = solve_dual(&centre(s, 1.0), &one, &cfg, Method::Full).map_err(|e| e.to_string())?;
    ensure(
        (q0.re + 0.5).abs() < 1e-10 && q0.im == 0.0 && others < 1e-10 && trace.iterations() == 0,
        format!(
            "q_00 = {:.15}, max other |q_k| = {others:.1e}, unit-covariance run took {} iterations",
            q0.re,
            trace.iterations()
        ),
    )
}

const PLANTED: (f64, f64) = (2.0 * PI * 0.3, 2.0 * PI * 0.2);

fn scenario(method: Method) -> Result<Estimate, String> {
    let model = FieldModel::with_ratio(PLANTED, 1.0 / SQRT_2, 0).map_err(|e| e.to_string())?;
    let y = synth_field(&model, 30, 30).map_err(|e| e.to_string())?;
    let cfg = EstimateConfig {
        n1: 1,
        n2: 1,
        grid1: 30,
        grid2: 30,
        method,
        solver: SolverConfig {
            max_iters: 1000,
            ..SolverConfig::default()
        },
    };
    estimate_spectrum(&y, &cfg).map_err(|e| format!("{method}: {e}"))
}

fn end_to_end() -> Check {
    let est = scenario(Method::Full)?;
    let grad = est.trace.last().unwrap().grad_norm;
    let resid = moment_residual(&est.phi, &est.sigma).map_err(|e| e.to_string())?;
    let (peak, _) = est.phi.argmax();
    let expect = est.phi.grid().nearest_node(PLANTED.0, PLANTED.1);
    let hess = hessian_generators(&est.q, &est.psi.recip()).map_err(|e| e.to_string())?;
    let full = hess.dim();
    let quarter = est.q.index_set().quarter_len();
    let theta = est.phi.grid().theta(peak);
    ensure(
        grad < 1e-10 && resid < 1e-8 && peak == expect && full == 9 && quarter == 5,
        format!(
            "gradient {grad:.1e}, moment residual {resid:.1e}, peak at ({:.4}, {:.4}), \
             Hessian {full}×{full}, quarter {quarter}×{quarter}",
            theta.0, theta.1
        ),
    )
}

fn convergence_order() -> Check {
    let full = scenario(Method::Full)?.trace;
    let quarter = scenario(Method::Quarter)?.trace;
    let (nf, nq) = (full.iterations_to(1e-8), quarter.iterations_to(1e-8));
    let ratios: Vec<String> = full.quadratic_ratios(1e-12).iter().map(|r| format!("{r:.2}")).collect();
    let quadratic = full.has_quadratic_tail(1e-12);
    match (nf, nq) {
        (Some(f), Some(q)) => ensure(
            f < q && quadratic,
            format!(
                "iterations to distance < 1e-8: full {f}, quarter {q}; full e_(k+1)/e_k² = [{}]",
                ratios.join(", ")
            ),
        ),
        _ => Err(format!("distance 1e-8 never reached: full {nf:?}, quarter {nq:?}")),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("AC1", "structured inverse matches dense", inversion),
        ("AC2", "structured multi-RHS solve", solving),
        ("AC3", "inverse scales better than dense", complexity),
        ("AC4", "gradient and Hessian match finite differences", derivatives),
        ("AC5", "Hessian structure", structure),
        ("AC6", "analytic optimum", analytic_optimum),
        ("AC7", "planted exponential end to end", end_to_end),
        ("AC8", "full Newton beats the quarter Hessian", convergence_order),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {id} {name}: {detail} ({secs:.1} s)"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {id} {name}: {detail} ({secs:.1} s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
