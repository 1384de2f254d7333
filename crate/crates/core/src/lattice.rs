//! Rectangular lag sets, conjugate-symmetric multisequences and their
//! lexicographic vectorization.
//!
//! A [`SymmetricMultisequence`] stores every lag of the rectangle
//! `|k1| <= n1, |k2| <= n2`, in lexicographic order (`k1` outer, `k2` inner).
//! With that order the coefficient at `-k` sits at the mirrored position
//! `len - 1 - pos(k)`, which the rest of the crate relies on.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use faer::c64;

use crate::error::{Error, Result};

/// Absolute tolerance for conjugate-symmetry checks on O(1)-scaled data.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A two-dimensional lag `k = (k1, k2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LagIndex {
    pub k1: i64,
    pub k2: i64,
}

impl LagIndex {
    pub const ZERO: LagIndex = LagIndex { k1: 0, k2: 0 };

    pub fn new(k1: i64, k2: i64) -> Self {
        LagIndex { k1, k2 }
    }
}

impl std::ops::Neg for LagIndex {
    type Output = LagIndex;

    fn neg(self) -> LagIndex {
        LagIndex::new(-self.k1, -self.k2)
    }
}

impl fmt::Display for LagIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.k1, self.k2)
    }
}

/// The rectangle `{ k : |k1| <= n1, |k2| <= n2 }`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IndexSet {
    n1: usize,
    n2: usize,
}

impl IndexSet {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::domain(format!(
                "index set orders must be positive, got n1={n1}, n2={n2}"
            )));
        }
        Ok(IndexSet { n1, n2 })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    /// Number of blocks `2 n1 + 1` in the lexicographic order.
    pub fn block_count(&self) -> usize {
        2 * self.n1 + 1
    }

    /// Block size `2 n2 + 1`.
    pub fn block_size(&self) -> usize {
        2 * self.n2 + 1
    }

    /// Cardinality `(2 n1 + 1)(2 n2 + 1)`.
    pub fn len(&self) -> usize {
        self.block_count() * self.block_size()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: LagIndex) -> bool {
        k.k1.unsigned_abs() as usize <= self.n1 && k.k2.unsigned_abs() as usize <= self.n2
    }

    /// 0-based lexicographic position of `k`.
    pub fn position(&self, k: LagIndex) -> Result<usize> {
        if !self.contains(k) {
            return Err(Error::domain(format!(
                "lag {k} outside index set n1={}, n2={}",
                self.n1, self.n2
            )));
        }
        let row = (k.k1 + self.n1 as i64) as usize;
        let col = (k.k2 + self.n2 as i64) as usize;
        Ok(self.block_size() * row + col)
    }

    /// Inverse of [`position`](Self::position).
    pub fn lag_at(&self, pos: usize) -> LagIndex {
        debug_assert!(pos < self.len());
        let p = self.block_size();
        LagIndex::new(
            (pos / p) as i64 - self.n1 as i64,
            (pos % p) as i64 - self.n2 as i64,
        )
    }

    /// All lags in lexicographic order.
    pub fn lags(&self) -> impl Iterator<Item = LagIndex> + '_ {
        (0..self.len()).map(move |pos| self.lag_at(pos))
    }

    /// Size of the lower-right principal submatrix used by the
    /// quarter-Hessian method: `n2 + 1 + n1 (2 n2 + 1)`.
    pub fn quarter_len(&self) -> usize {
        self.n2 + 1 + self.n1 * self.block_size()
    }
}

/// 1-based position `(2n2+1)(k1+n1) + k2 + n2 + 1` of lag `k` in `vec(Q)`.
pub fn vec_position(k: LagIndex, s: &IndexSet) -> Result<usize> {
    s.position(k).map(|p| p + 1)
}

/// Complex coefficients on an [`IndexSet`] with `value(-k) = conj(value(k))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMultisequence {
    index_set: IndexSet,
    values: Vec<c64>,
}

impl SymmetricMultisequence {
    pub fn zeros(index_set: IndexSet) -> Self {
        SymmetricMultisequence {
            index_set,
            values: vec![c64::new(0.0, 0.0); index_set.len()],
        }
    }

    /// Builds the multisequence from `f(k)` evaluated on the lags with
    /// `pos(k) >= pos(0)`; the other half is filled by conjugation and the
    /// centre is made real.
    pub fn from_half_fn(index_set: IndexSet, mut f: impl FnMut(LagIndex) -> c64) -> Self {
        let len = index_set.len();
        let mid = len / 2;
        let mut values = vec![c64::new(0.0, 0.0); len];
        for pos in mid..len {
            let v = f(index_set.lag_at(pos));
            values[pos] = v;
            values[len - 1 - pos] = v.conj();
        }
        values[mid] = c64::new(values[mid].re, 0.0);
        SymmetricMultisequence { index_set, values }
    }

    /// Wraps a full lexicographic coefficient vector after validating
    /// conjugate symmetry to `tol`.
    pub fn from_values(index_set: IndexSet, values: Vec<c64>, tol: f64) -> Result<Self> {
        if values.len() != index_set.len() {
            return Err(Error::domain(format!(
                "expected {} coefficients, got {}",
                index_set.len(),
                values.len()
            )));
        }
        let seq = SymmetricMultisequence { index_set, values };
        seq.check_symmetry(tol)?;
        Ok(seq)
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.index_set
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Coefficients in lexicographic order.
    pub fn values(&self) -> &[c64] {
        &self.values
    }

    pub fn get(&self, k: LagIndex) -> Result<c64> {
        Ok(self.values[self.index_set.position(k)?])
    }

    /// Sets `value(k) = v` and `value(-k) = conj(v)`. For `k = 0` the
    /// imaginary part of `v` must vanish.
    pub fn set(&mut self, k: LagIndex, v: c64) -> Result<()> {
        let pos = self.index_set.position(k)?;
        let mirror = self.len() - 1 - pos;
        if pos == mirror && v.im.abs() > SYMMETRY_TOL {
            return Err(Error::invalid(format!(
                "coefficient at lag 0 must be real, got {v}"
            )));
        }
        if pos == mirror {
            self.values[pos] = c64::new(v.re, 0.0);
        } else {
            self.values[pos] = v;
            self.values[mirror] = v.conj();
        }
        Ok(())
    }

    /// Largest deviation `|value(-k) - conj(value(k))|` over the set.
    pub fn symmetry_defect(&self) -> f64 {
        let len = self.len();
        (0..len)
            .map(|pos| (self.values[len - 1 - pos] - self.values[pos].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn check_symmetry(&self, tol: f64) -> Result<()> {
        let defect = self.symmetry_defect();
        if defect > tol {
            return Err(Error::invalid(format!(
                "conjugate symmetry violated by {defect:e} (tolerance {tol:e})"
            )));
        }
        Ok(())
    }

    /// Replaces each pair by its symmetric average, returning the defect
    /// that was removed.
    pub fn symmetrize(&mut self) -> f64 {
        let defect = self.symmetry_defect();
        let len = self.len();
        for pos in len / 2..len {
            let mirror = len - 1 - pos;
            let v = (self.values[pos] + self.values[mirror].conj()) * 0.5;
            self.values[pos] = v;
            self.values[mirror] = v.conj();
        }
        let mid = len / 2;
        self.values[mid].im = 0.0;
        defect
    }

    /// `self + t * dir`.
    pub fn add_scaled(&self, t: f64, dir: &SymmetricMultisequence) -> Result<Self> {
        self.same_set(dir)?;
        let values = self
            .values
            .iter()
            .zip(&dir.values)
            .map(|(a, b)| a + b * t)
            .collect();
        Ok(SymmetricMultisequence {
            index_set: self.index_set,
            values,
        })
    }

    /// Entrywise conjugate; equals the multisequence with mirrored lags.
    pub fn conj(&self) -> Self {
        SymmetricMultisequence {
            index_set: self.index_set,
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Euclidean distance between coefficient vectors.
    pub fn distance(&self, other: &SymmetricMultisequence) -> Result<f64> {
        self.same_set(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    pub fn vectorize(&self) -> CoefficientVector {
        CoefficientVector(self.values.clone())
    }

    /// Inverse of [`vectorize`](Self::vectorize); validates symmetry to
    /// [`SYMMETRY_TOL`].
    pub fn devectorize(v: &CoefficientVector, s: IndexSet) -> Result<Self> {
        Self::devectorize_with_tol(v, s, SYMMETRY_TOL)
    }

    pub fn devectorize_with_tol(v: &CoefficientVector, s: IndexSet, tol: f64) -> Result<Self> {
        Self::from_values(s, v.0.clone(), tol)
    }

    /// `⟨Q, S⟩ = Σ q_k conj(σ_k)`, real for conjugate-symmetric pairs.
    pub fn real_inner_product(&self, other: &SymmetricMultisequence) -> Result<f64> {
        self.same_set(other)?;
        let mut sum = c64::new(0.0, 0.0);
        let mut scale = 1.0_f64;
        for (a, b) in self.values.iter().zip(&other.values) {
            sum += a * b.conj();
            scale += a.norm() * b.norm();
        }
        if sum.im.abs() > SYMMETRY_TOL * scale {
            return Err(Error::invalid(format!(
                "inner product has imaginary part {:e}; inputs are not conjugate-symmetric",
                sum.im
            )));
        }
        Ok(sum.re)
    }

    fn same_set(&self, other: &SymmetricMultisequence) -> Result<()> {
        if self.index_set != other.index_set {
            return Err(Error::domain(format!(
                "index sets differ: {:?} vs {:?}",
                self.index_set, other.index_set
            )));
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k1", "k2", "re", "im"])?;
        for (k, v) in self.index_set.lags().zip(&self.values) {
            w.write_record([
                k.k1.to_string(),
                k.k2.to_string(),
                v.re.to_string(),
                v.im.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the `k1,k2,re,im` format. The index set is inferred from the
    /// largest lags present; every lag of the rectangle must appear exactly
    /// once and the data must be conjugate-symmetric to `tol`.
    pub fn read_csv<R: Read>(input: R, tol: f64) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers().map_err(csv_err)?.clone();
        if header.iter().map(str::trim).ne(["k1", "k2", "re", "im"]) {
            return Err(Error::invalid(format!(
                "expected header k1,k2,re,im, found {}",
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != 4 {
                return Err(Error::invalid(format!("row with {} fields", rec.len())));
            }
            let k1: i64 = parse_field(&rec[0])?;
            let k2: i64 = parse_field(&rec[1])?;
            let re: f64 = parse_field(&rec[2])?;
            let im: f64 = parse_field(&rec[3])?;
            rows.push((LagIndex::new(k1, k2), c64::new(re, im)));
        }
        let n1 = rows.iter().map(|(k, _)| k.k1.unsigned_abs()).max().unwrap_or(0) as usize;
        let n2 = rows.iter().map(|(k, _)| k.k2.unsigned_abs()).max().unwrap_or(0) as usize;
        let s = IndexSet::new(n1, n2)
            .map_err(|_| Error::invalid("coefficient file does not span a 2-D rectangle"))?;
        let mut values = vec![None; s.len()];
        for (k, v) in rows {
            let pos = s.position(k)?;
            if values[pos].replace(v).is_some() {
                return Err(Error::invalid(format!("lag {k} listed twice")));
            }
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(pos, v)| v.ok_or_else(|| Error::invalid(format!("lag {} missing", s.lag_at(pos)))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_values(s, values, tol)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
        self.write_csv(file).map_err(|source| Error::Csv {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
        Self::read_csv(file, SYMMETRY_TOL)
    }
}

/// `vec(Q)`: the coefficients stacked in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector(pub Vec<c64>);

impl CoefficientVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Entry at a 1-based position.
    pub fn entry(&self, position: usize) -> Option<c64> {
        position.checked_sub(1).and_then(|i| self.0.get(i)).copied()
    }
}

pub(crate) fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::invalid(e.to_string())
}

pub(crate) fn parse_field<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::invalid(format!("cannot parse field {s:?}")))
}
