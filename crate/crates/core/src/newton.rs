//! Damped Newton iteration on the dual problem.
//!
//! Directions come either from the full TBT Hessian, solved with the fast
//! block recursion, or from its quarter submatrix over the independent half
//! of the lags. Steps are chosen by backtracking: feasibility first, then
//! sufficient decrease, measured directly rather than as a difference of two
//! objective values.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::io::Write;
use std::path::Path;

use faer::{c64, Mat};

use crate::dual::{
    directional_derivative, dual_objective, gradient_and_generators, real, shifted_polynomial, LineProbe,
};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::lattice::{io_err, SymmetricMultisequence, SYMMETRY_TOL};
use crate::tbt::{assemble_dense_hessian, dense_oracle_solve, tbt_solve, BlockVector, TbtGenerators};

/// Smallest step length tried before the line search gives up.
pub const MIN_STEP: f64 = 1e-14;

/// Tolerance on the conjugate symmetry of a computed direction.
const DIRECTION_SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Stop once the Euclidean norm of the gradient falls below this.
    pub grad_tol: f64,
    pub max_iters: usize,
    pub backtrack_shrink: f64,
    pub armijo_c: f64,
    /// Starting point; zero when absent.
    pub initial_q: Option<SymmetricMultisequence>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grad_tol: 1e-10,
            max_iters: 100,
            backtrack_shrink: 0.5,
            armijo_c: 1e-4,
            initial_q: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0 && self.grad_tol.is_finite()) {
            return Err(Error::domain(format!("grad_tol must be positive, got {}", self.grad_tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::domain("max_iters must be positive"));
        }
        if !(self.backtrack_shrink > 0.0 && self.backtrack_shrink < 1.0) {
            return Err(Error::domain(format!(
                "backtrack_shrink must lie in (0, 1), got {}",
                self.backtrack_shrink
            )));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(Error::domain(format!("armijo_c must lie in (0, 1), got {}", self.armijo_c)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Newton steps with the full Hessian.
    Full,
    /// Steps from the lower-right quarter of the Hessian.
    Quarter,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Method::Full),
            "quarter" => Ok(Method::Quarter),
            other => Err(Error::invalid(format!("unknown method '{other}', expected full or quarter"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Full => "full",
            Method::Quarter => "quarter",
        })
    }
}

/// One iterate. `step` is the length of the step that produced it (zero for
/// the starting point).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub dist_to_final: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// Number of steps taken.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    /// First iteration whose distance to the final iterate is below `tol`.
    pub fn iterations_to(&self, tol: f64) -> Option<usize> {
        self.records.iter().find(|r| r.dist_to_final < tol).map(|r| r.iter)
    }

    /// Ratios `e_{k+1} / e_k²` of consecutive distances to the final
    /// iterate, using only distances above `floor`.
    pub fn quadratic_ratios(&self, floor: f64) -> Vec<f64> {
        let errs: Vec<f64> = self
            .records
            .iter()
            .map(|r| r.dist_to_final)
            .filter(|&e| e > floor)
            .collect();
        errs.windows(2).map(|w| w[1] / (w[0] * w[0])).collect()
    }

    /// Whether the last three ratios `e_{k+1} / e_k²` agree within a
    /// factor of 10.
    pub fn has_quadratic_tail(&self, floor: f64) -> bool {
        let ratios = self.quadratic_ratios(floor);
        if ratios.len() < 3 {
            return false;
        }
        let tail = &ratios[ratios.len() - 3..];
        let hi = tail.iter().cloned().fold(f64::MIN, f64::max);
        let lo = tail.iter().cloned().fold(f64::MAX, f64::min);
        lo > 0.0 && hi / lo < 10.0
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iter", "objective", "grad_norm", "step", "dist_to_final"])?;
        for r in &self.records {
            w.write_record([
                r.iter.to_string(),
                format!("{:e}", r.objective),
                format!("{:e}", r.grad_norm),
                format!("{:e}", r.step),
                format!("{:e}", r.dist_to_final),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
        self.write_csv(file).map_err(|source| Error::Csv {
            path: path.display().to_string(),
            source,
        })
    }

    fn finish(&mut self, iterates: &[SymmetricMultisequence]) {
        let last = iterates.last().expect("at least one iterate");
        for (r, q) in self.records.iter_mut().zip(iterates) {
            r.dist_to_final = q.distance(last).unwrap_or(f64::NAN);
        }
    }
}

/// Whether `Ψ⁻¹ + Q > 0` at every grid node, with the minimum value.
pub fn check_feasible(q: &SymmetricMultisequence, psi_inv: &GridFunction) -> (bool, f64) {
    match shifted_polynomial(q, psi_inv) {
        Ok(p) => (true, p.min()),
        Err(Error::Infeasible { min_value }) => (false, min_value),
        Err(_) => (false, f64::NAN),
    }
}

/// Newton direction at `q`.
///
/// With `x` solving `H x = -g` for the Hessian `H[k,l] = h_{l-k}`, the
/// minimizer of the quadratic model along symmetric directions is
/// `d = conj(x)`.
pub fn newton_direction(
    q: &SymmetricMultisequence,
    sigma: &SymmetricMultisequence,
    psi_inv: &GridFunction,
) -> Result<SymmetricMultisequence> {
    let (g, gen) = gradient_and_generators(q, sigma, psi_inv)?;
    full_direction(&g, &gen)
}

/// Direction from the quarter Hessian: the reduced system on the lags from
/// `0` onward in lexicographic order, with the rest filled by conjugate
/// symmetry.
pub fn quasi_newton_direction(
    q: &SymmetricMultisequence,
    sigma: &SymmetricMultisequence,
    psi_inv: &GridFunction,
) -> Result<SymmetricMultisequence> {
    let (g, gen) = gradient_and_generators(q, sigma, psi_inv)?;
    quarter_direction(&g, &gen)
}

fn full_direction(g: &SymmetricMultisequence, gen: &TbtGenerators) -> Result<SymmetricMultisequence> {
    let rhs: Vec<c64> = g.values().iter().map(|v| -v).collect();
    let x = tbt_solve(gen, &BlockVector::from_column(&rhs, gen.block_size())?)?;
    let values = x.column(0).into_iter().map(|v| v.conj()).collect();
    symmetric_direction(g, values)
}

fn quarter_direction(g: &SymmetricMultisequence, gen: &TbtGenerators) -> Result<SymmetricMultisequence> {
    let len = g.len();
    let mid = len / 2;
    let r = len - mid;
    let hess = assemble_dense_hessian(gen);
    let reduced = hess.as_ref().submatrix(mid, mid, r, r);
    // the centre lag is its own mirror, so its coordinate carries weight 1/√2
    let rhs = Mat::from_fn(r, 1, |i, _| {
        let v = -g.values()[mid + i];
        if i == 0 { v * FRAC_1_SQRT_2 } else { v }
    });
    let u = dense_oracle_solve(reduced, rhs.as_ref())?;
    let mut values = vec![c64::new(0.0, 0.0); len];
    for i in 1..r {
        let v = u[(i, 0)].conj();
        values[mid + i] = v;
        values[mid - i] = v.conj();
    }
    values[mid] = real(u[(0, 0)].re * SQRT_2);
    symmetric_direction(g, values)
}

fn symmetric_direction(g: &SymmetricMultisequence, values: Vec<c64>) -> Result<SymmetricMultisequence> {
    let mut d = SymmetricMultisequence::from_values(*g.index_set(), values, f64::INFINITY)?;
    let defect = d.symmetrize();
    if defect > DIRECTION_SYMMETRY_TOL * (1.0 + d.norm()) {
        log::warn!("search direction lost conjugate symmetry by {defect:e}; re-symmetrized");
    }
    Ok(d)
}

/// Minimizes the dual objective from `cfg.initial_q` (zero by default).
pub fn solve_dual(
    sigma: &SymmetricMultisequence,
    psi_inv: &GridFunction,
    cfg: &SolverConfig,
    method: Method,
) -> Result<(SymmetricMultisequence, IterationTrace)> {
    cfg.validate()?;
    sigma.check_symmetry(SYMMETRY_TOL * (1.0 + sigma.norm()))?;
    let sigma0 = sigma.values()[sigma.len() / 2].re;
    if sigma0 <= 0.0 {
        return Err(Error::invalid(format!("lag-0 covariance must be positive, got {sigma0}")));
    }
    if !psi_inv.is_strictly_positive() {
        return Err(Error::invalid("the reciprocal prior must be strictly positive"));
    }
    let mut q = match &cfg.initial_q {
        Some(q0) if q0.index_set() != sigma.index_set() => {
            return Err(Error::domain("initial point and covariances use different lag sets"));
        }
        Some(q0) => q0.clone(),
        None => SymmetricMultisequence::zeros(*sigma.index_set()),
    };

    let mut trace = IterationTrace::default();
    let mut iterates = Vec::new();
    let mut objective = dual_objective(&q, sigma, psi_inv)?;
    let mut step = 0.0;
    for iter in 0..=cfg.max_iters {
        let (g, gen) = gradient_and_generators(&q, sigma, psi_inv)?;
        let grad_norm = g.norm();
        trace.records.push(IterationRecord {
            iter,
            objective,
            grad_norm,
            step,
            dist_to_final: f64::NAN,
        });
        iterates.push(q.clone());
        log::debug!("iter {iter}: J = {objective:.15e}, |g| = {grad_norm:e}, t = {step}");
        if grad_norm < cfg.grad_tol {
            trace.finish(&iterates);
            return Ok((q, trace));
        }
        if iter == cfg.max_iters {
            break;
        }

        let d = match method {
            Method::Full => full_direction(&g, &gen)?,
            Method::Quarter => quarter_direction(&g, &gen)?,
        };
        let slope = directional_derivative(&g, &d)?;
        if slope.is_nan() || slope >= 0.0 {
            trace.finish(&iterates);
            return Err(Error::Stagnation {
                iteration: iter,
                min_step: MIN_STEP,
                trace: Box::new(trace),
            });
        }

        let probe = LineProbe::new(&q, &d, sigma, psi_inv)?;
        let mut t = 1.0;
        loop {
            match probe.decrease(t) {
                Some(change) if change <= cfg.armijo_c * t * slope => {
                    q = q.add_scaled(t, &d)?;
                    objective = dual_objective(&q, sigma, psi_inv)?;
                    step = t;
                    break;
                }
                _ => {}
            }
            t *= cfg.backtrack_shrink;
            if t < MIN_STEP {
                trace.finish(&iterates);
                return Err(Error::Stagnation {
                    iteration: iter,
                    min_step: MIN_STEP,
                    trace: Box::new(trace),
                });
            }
        }
    }
    trace.finish(&iterates);
    let grad_norm = trace.last().map_or(f64::NAN, |r| r.grad_norm);
    Err(Error::NotConverged {
        iterations: cfg.max_iters,
        grad_norm,
        trace: Box::new(trace),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::dual_gradient;
    use crate::grid::FrequencyGrid;
    use crate::lattice::{IndexSet, LagIndex};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn centre(s: IndexSet, v: f64) -> SymmetricMultisequence {
        let mut q = SymmetricMultisequence::zeros(s);
        q.set(LagIndex::ZERO, real(v)).unwrap();
        q
    }

    fn random_instance(
        n1: usize,
        n2: usize,
        rng: &mut ChaCha8Rng,
    ) -> (SymmetricMultisequence, SymmetricMultisequence, GridFunction) {
        let s = IndexSet::new(n1, n2).unwrap();
        let g = FrequencyGrid::new(4 * n1 + 5, 4 * n2 + 3).unwrap();
        let small = 0.3 / s.len() as f64;
        let q = SymmetricMultisequence::from_half_fn(s, |_| {
            c64::new(rng.random_range(-small..small), rng.random_range(-small..small))
        });
        let mut sigma = SymmetricMultisequence::from_half_fn(s, |_| {
            c64::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1))
        });
        sigma.set(LagIndex::ZERO, real(1.2)).unwrap();
        let psi_inv = GridFunction::from_fn(g, |t1, t2| 1.3 + 0.2 * (t1 - t2).cos());
        (q, sigma, psi_inv)
    }

    #[test]
    fn feasibility_examples() {
        let g = FrequencyGrid::new(5, 5).unwrap();
        let s = IndexSet::new(1, 1).unwrap();
        let one = GridFunction::constant(g, 1.0);
        assert_eq!(check_feasible(&SymmetricMultisequence::zeros(s), &one), (true, 1.0));
        assert_eq!(check_feasible(&centre(s, -2.0), &one), (false, -1.0));
        assert_eq!(check_feasible(&centre(s, -1.0), &one), (false, 0.0));
    }

    #[test]
    fn identity_hessian_directions() {
        let g = FrequencyGrid::new(7, 7).unwrap();
        let s = IndexSet::new(1, 1).unwrap();
        let one = GridFunction::constant(g, 1.0);
        let zero = SymmetricMultisequence::zeros(s);
        for dir in [newton_direction, quasi_newton_direction] {
            assert!(dir(&zero, &centre(s, 1.0), &one).unwrap().norm() < 1e-15);
            let d = dir(&zero, &centre(s, 2.0), &one).unwrap();
            assert!(d.distance(&centre(s, -1.0)).unwrap() < 1e-14);
        }
    }

    #[test]
    fn newton_direction_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (n1, n2) in [(1, 1), (2, 1), (1, 3)] {
            let (q, sigma, psi_inv) = random_instance(n1, n2, &mut rng);
            let d = newton_direction(&q, &sigma, &psi_inv).unwrap();
            let (g, gen) = gradient_and_generators(&q, &sigma, &psi_inv).unwrap();
            let hess = assemble_dense_hessian(&gen);
            let rhs = Mat::from_fn(g.len(), 1, |i, _| -g.values()[i]);
            let x = dense_oracle_solve(hess.as_ref(), rhs.as_ref()).unwrap();
            for i in 0..g.len() {
                assert!((d.values()[i] - x[(i, 0)].conj()).norm() < 1e-10);
            }
            assert!(directional_derivative(&g, &d).unwrap() < 0.0);
        }
    }

    #[test]
    fn quarter_direction_descends_but_differs() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let (q, sigma, psi_inv) = random_instance(1, 1, &mut rng);
        let full = newton_direction(&q, &sigma, &psi_inv).unwrap();
        let quarter = quasi_newton_direction(&q, &sigma, &psi_inv).unwrap();
        let g = dual_gradient(&q, &sigma, &psi_inv).unwrap();
        assert!(quarter.symmetry_defect() == 0.0);
        assert!(directional_derivative(&g, &quarter).unwrap() < 0.0);
        assert!(full.distance(&quarter).unwrap() > 1e-8);
    }

    #[test]
    fn analytic_optima() {
        let g = FrequencyGrid::new(9, 9).unwrap();
        let s = IndexSet::new(1, 1).unwrap();
        let one = GridFunction::constant(g, 1.0);
        let cfg = SolverConfig::default();

        let (q, trace) = solve_dual(&centre(s, 1.0), &one, &cfg, Method::Full).unwrap();
        assert_eq!(trace.iterations(), 0);
        assert_eq!(q.norm(), 0.0);

        for method in [Method::Full, Method::Quarter] {
            let (q, trace) = solve_dual(&centre(s, 2.0), &one, &cfg, method).unwrap();
            assert!(q.distance(&centre(s, -0.5)).unwrap() < 1e-10);
            assert!(trace.last().unwrap().grad_norm < 1e-10);
            assert_eq!(trace.last().unwrap().dist_to_final, 0.0);
            for w in trace.records.windows(2) {
                assert!(w[1].objective <= w[0].objective + 1e-14);
            }
        }
    }

    #[test]
    fn random_problems_converge_quadratically() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for (n1, n2) in [(1, 1), (2, 2), (1, 2)] {
            let (_, sigma, psi_inv) = random_instance(n1, n2, &mut rng);
            let (q, trace) = solve_dual(&sigma, &psi_inv, &SolverConfig::default(), Method::Full).unwrap();
            assert!(check_feasible(&q, &psi_inv).0);
            assert!(trace.last().unwrap().grad_norm < 1e-10);
            let cfg = SolverConfig { max_iters: 1000, ..SolverConfig::default() };
            let (q2, slow) = solve_dual(&sigma, &psi_inv, &cfg, Method::Quarter).unwrap();
            assert!(q.distance(&q2).unwrap() < 1e-8);
            assert!(trace.iterations() <= slow.iterations());
        }
    }

    #[test]
    fn iteration_cap_reports_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let (_, sigma, psi_inv) = random_instance(1, 1, &mut rng);
        let cfg = SolverConfig { max_iters: 1, ..SolverConfig::default() };
        match solve_dual(&sigma, &psi_inv, &cfg, Method::Quarter) {
            Err(e @ Error::NotConverged { .. }) => assert_eq!(e.trace().unwrap().len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn config_and_method_parsing() {
        assert!(SolverConfig { backtrack_shrink: 1.0, ..SolverConfig::default() }.validate().is_err());
        assert!(SolverConfig { grad_tol: 0.0, ..SolverConfig::default() }.validate().is_err());
        assert_eq!("quarter".parse::<Method>().unwrap(), Method::Quarter);
        assert!("half".parse::<Method>().is_err());
    }

    #[test]
    fn trace_csv_and_quadratic_tail() {
        let errs = [1e-1, 1e-2, 1e-4, 1e-8, 0.0];
        let trace = IterationTrace {
            records: errs
                .iter()
                .enumerate()
                .map(|(i, &e)| IterationRecord {
                    iter: i,
                    objective: -(i as f64),
                    grad_norm: e,
                    step: 1.0,
                    dist_to_final: e,
                })
                .collect(),
        };
        assert!(trace.quadratic_ratios(1e-14).iter().all(|r| (r - 1.0).abs() < 1e-9));
        assert!(trace.has_quadratic_tail(1e-14));
        assert_eq!(trace.iterations_to(1e-5), Some(3));
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iter,objective,grad_norm,step,dist_to_final\n"));
        assert_eq!(text.lines().count(), 6);
    }
}
