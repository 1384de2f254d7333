//! Synthetic single-exponential fields in white noise, and biased sample
//! covariances.

use std::f64::consts::{PI, SQRT_2};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use faer::c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, GridFunction};
use crate::lattice::{io_err, parse_field, IndexSet, SymmetricMultisequence};

/// A complex exponential `amplitude · e^{i(⟨t,freq⟩ + phase)}` plus circular
/// complex Gaussian noise. The generator is ChaCha8 seeded with `seed`; when
/// `phase` is absent it is drawn uniformly from `[0, 2π)` first.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldModel {
    pub freq: (f64, f64),
    pub amplitude: f64,
    pub noise_std: f64,
    pub phase: Option<f64>,
    pub seed: u64,
}

impl FieldModel {
    /// Unit amplitude and `noise_std = 1 / ratio`.
    pub fn with_ratio(freq: (f64, f64), ratio: f64, seed: u64) -> Result<Self> {
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(Error::domain(format!("amplitude-to-noise ratio must be positive, got {ratio}")));
        }
        Ok(FieldModel {
            freq,
            amplitude: 1.0,
            noise_std: 1.0 / ratio,
            phase: None,
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let (f1, f2) = self.freq;
        if !(f1.is_finite() && f2.is_finite()) {
            return Err(Error::domain("planted frequency must be finite"));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::domain(format!("amplitude must be non-negative, got {}", self.amplitude)));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::domain(format!("noise_std must be non-negative, got {}", self.noise_std)));
        }
        Ok(())
    }
}

/// Observations `y_t`, `t = (t1, t2)`, stored with `t1` outer.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSamples {
    t1: usize,
    t2: usize,
    y: Vec<c64>,
}

impl FieldSamples {
    pub fn new(t1: usize, t2: usize, y: Vec<c64>) -> Result<Self> {
        if t1 == 0 || t2 == 0 || y.len() != t1 * t2 {
            return Err(Error::domain(format!(
                "{} samples do not fill a {t1}x{t2} field",
                y.len()
            )));
        }
        Ok(FieldSamples { t1, t2, y })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.t1, self.t2)
    }

    pub fn get(&self, t1: usize, t2: usize) -> c64 {
        self.y[t1 * self.t2 + t2]
    }

    pub fn values(&self) -> &[c64] {
        &self.y
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::Io {
            path: "<samples>".into(),
            source: e,
        };
        writeln!(out, "# T1={} T2={}", self.t1, self.t2).map_err(io)?;
        let mut w = csv::Writer::from_writer(out);
        let mut rows = || -> std::result::Result<(), csv::Error> {
            w.write_record(["t1", "t2", "re", "im"])?;
            for a in 0..self.t1 {
                for b in 0..self.t2 {
                    let v = self.get(a, b);
                    w.write_record([a.to_string(), b.to_string(), v.re.to_string(), v.im.to_string()])?;
                }
            }
            w.flush()?;
            Ok(())
        };
        rows().map_err(|source| Error::Csv {
            path: "<samples>".into(),
            source,
        })
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut input = BufReader::new(input);
        let mut preamble = String::new();
        input.read_line(&mut preamble).map_err(|e| Error::invalid(e.to_string()))?;
        let (t1, t2) = parse_preamble(&preamble)?;
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers().map_err(|e| Error::invalid(e.to_string()))?;
        if header.iter().map(str::trim).ne(["t1", "t2", "re", "im"]) {
            return Err(Error::invalid("expected header t1,t2,re,im"));
        }
        let mut y = vec![None; t1 * t2];
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::invalid(e.to_string()))?;
            if rec.len() != 4 {
                return Err(Error::invalid(format!("row with {} fields", rec.len())));
            }
            let a: usize = parse_field(&rec[0])?;
            let b: usize = parse_field(&rec[1])?;
            if a >= t1 || b >= t2 {
                return Err(Error::invalid(format!("sample ({a}, {b}) outside the {t1}x{t2} field")));
            }
            let v = c64::new(parse_field(&rec[2])?, parse_field(&rec[3])?);
            if y[a * t2 + b].replace(v).is_some() {
                return Err(Error::invalid(format!("sample ({a}, {b}) listed twice")));
            }
        }
        let y = y
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| Error::invalid(format!("sample ({}, {}) missing", i / t2, i % t2))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(t1, t2, y)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
        self.write_csv(std::io::BufWriter::new(file)).map_err(|e| relabel(e, path))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
        Self::read_csv(file).map_err(|e| match e {
            Error::InvalidInput(msg) => Error::InvalidInput(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

fn relabel(e: Error, path: &Path) -> Error {
    let path = path.display().to_string();
    match e {
        Error::Io { source, .. } => Error::Io { path, source },
        Error::Csv { source, .. } => Error::Csv { path, source },
        other => other,
    }
}

fn parse_preamble(line: &str) -> Result<(usize, usize)> {
    let bad = || Error::invalid(format!("expected preamble '# T1=<..> T2=<..>', found {:?}", line.trim_end()));
    let rest = line.trim().strip_prefix('#').ok_or_else(bad)?;
    let mut dims = (None, None);
    for part in rest.split_whitespace() {
        if let Some(v) = part.strip_prefix("T1=") {
            dims.0 = Some(parse_field::<usize>(v)?);
        } else if let Some(v) = part.strip_prefix("T2=") {
            dims.1 = Some(parse_field::<usize>(v)?);
        }
    }
    match dims {
        (Some(a), Some(b)) if a > 0 && b > 0 => Ok((a, b)),
        _ => Err(bad()),
    }
}

/// Draws a `t1 x t2` field from `model`.
pub fn synth_field(model: &FieldModel, t1: usize, t2: usize) -> Result<FieldSamples> {
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let phase = model.phase.unwrap_or_else(|| rng.random_range(0.0..2.0 * PI));
    let scale = model.noise_std / SQRT_2;
    let mut y = Vec::with_capacity(t1 * t2);
    for a in 0..t1 {
        for b in 0..t2 {
            let arg = a as f64 * model.freq.0 + b as f64 * model.freq.1 + phase;
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            y.push(c64::from_polar(model.amplitude, arg) + c64::new(re, im) * scale);
        }
    }
    FieldSamples::new(t1, t2, y)
}

/// Biased estimates `σ_k = (1/(T1 T2)) Σ_t y_{t+k} conj(y_t)` over the
/// pairs inside the field, for every `k` in `s`.
pub fn biased_covariances(samples: &FieldSamples, s: IndexSet) -> Result<SymmetricMultisequence> {
    let (t1, t2) = samples.dims();
    if s.n1() >= t1 || s.n2() >= t2 {
        return Err(Error::domain(format!(
            "lag orders ({}, {}) must be below the field size ({t1}, {t2})",
            s.n1(),
            s.n2()
        )));
    }
    let norm = 1.0 / (t1 * t2) as f64;
    Ok(SymmetricMultisequence::from_half_fn(s, |k| {
        let range = |k: i64, t: usize| (0.max(-k) as usize)..((t as i64 - k.max(0)) as usize);
        let mut sum = c64::new(0.0, 0.0);
        for a in range(k.k1, t1) {
            let a2 = (a as i64 + k.k1) as usize;
            for b in range(k.k2, t2) {
                let b2 = (b as i64 + k.k2) as usize;
                sum += samples.get(a2, b2) * samples.get(a, b).conj();
            }
        }
        sum * norm
    }))
}

/// The flat prior `Ψ ≡ σ_0` and its reciprocal.
pub fn constant_prior(
    sigma: &SymmetricMultisequence,
    grid: &FrequencyGrid,
) -> Result<(GridFunction, GridFunction)> {
    let sigma0 = sigma.values()[sigma.len() / 2].re;
    if !(sigma0 > 0.0 && sigma0.is_finite()) {
        return Err(Error::domain(format!("lag-0 covariance must be positive, got {sigma0}")));
    }
    Ok((GridFunction::constant(*grid, sigma0), GridFunction::constant(*grid, 1.0 / sigma0)))
}
