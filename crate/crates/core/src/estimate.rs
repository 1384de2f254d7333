//! Samples to spectrum: biased covariances, flat prior, dual solve, primal
//! recovery.

use std::io::Write;
use std::path::Path;

use crate::dual::primal_recover;
use crate::error::{Error, Result};
use crate::field::{biased_covariances, constant_prior, FieldSamples};
use crate::grid::{FrequencyGrid, GridFunction};
use crate::lattice::{io_err, IndexSet, SymmetricMultisequence};
use crate::newton::{solve_dual, IterationTrace, Method, SolverConfig};

#[derive(Debug, Clone)]
pub struct EstimateConfig {
    pub n1: usize,
    pub n2: usize,
    pub grid1: usize,
    pub grid2: usize,
    pub method: Method,
    pub solver: SolverConfig,
}

#[derive(Debug, Clone)]
pub struct Estimate {
    pub sigma: SymmetricMultisequence,
    pub q: SymmetricMultisequence,
    pub psi: GridFunction,
    pub phi: GridFunction,
    pub trace: IterationTrace,
}

pub fn estimate_spectrum(samples: &FieldSamples, cfg: &EstimateConfig) -> Result<Estimate> {
    let s = IndexSet::new(cfg.n1, cfg.n2)?;
    let grid = FrequencyGrid::new(cfg.grid1, cfg.grid2)?;
    grid.check_lags(2 * cfg.n1, 2 * cfg.n2)?;
    let sigma = biased_covariances(samples, s)?;
    let (psi, psi_inv) = constant_prior(&sigma, &grid)?;
    let (q, trace) = solve_dual(&sigma, &psi_inv, &cfg.solver, cfg.method)?;
    let phi = primal_recover(&q, &psi_inv)?;
    Ok(Estimate { sigma, q, psi, phi, trace })
}

pub fn write_spectrum_csv<W: Write>(phi: &GridFunction, out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta1", "theta2", "phi"])?;
    for (idx, v) in phi.values().iter().enumerate() {
        let (t1, t2) = phi.grid().theta(idx);
        w.write_record([t1.to_string(), t2.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_spectrum_csv(phi: &GridFunction, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    write_spectrum_csv(phi, std::io::BufWriter::new(file)).map_err(|source| Error::Csv {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::moment_residual;
    use crate::field::{synth_field, FieldModel};
    use std::f64::consts::{PI, SQRT_2};

    #[test]
    fn planted_exponential_is_recovered() {
        let model = FieldModel::with_ratio((2.0 * PI * 0.3, 2.0 * PI * 0.2), 1.0 / SQRT_2, 1).unwrap();
        let y = synth_field(&model, 30, 30).unwrap();
        let cfg = EstimateConfig {
            n1: 1,
            n2: 1,
            grid1: 30,
            grid2: 30,
            method: Method::Full,
            solver: SolverConfig::default(),
        };
        let est = estimate_spectrum(&y, &cfg).unwrap();
        assert!(est.trace.last().unwrap().grad_norm < 1e-10);
        assert!(moment_residual(&est.phi, &est.sigma).unwrap() < 1e-8);
        let peak = est.phi.argmax().0;
        assert_eq!(peak, est.phi.grid().nearest_node(model.freq.0, model.freq.1));
        assert!((est.psi.values()[0] - est.sigma.values()[4].re).abs() == 0.0);

        let mut buf = Vec::new();
        write_spectrum_csv(&est.phi, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("theta1,theta2,phi"));
        assert_eq!(text.lines().count(), 901);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let y = FieldSamples::new(4, 4, vec![faer::c64::new(1.0, 0.0); 16]).unwrap();
        let cfg = EstimateConfig {
            n1: 1,
            n2: 1,
            grid1: 4,
            grid2: 30,
            method: Method::Full,
            solver: SolverConfig::default(),
        };
        assert!(matches!(estimate_spectrum(&y, &cfg), Err(Error::Domain(_))));
    }
}
