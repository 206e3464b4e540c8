//! Random designs, signal vectors, responses, and CSV ingestion.

use std::fs::File;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    GaussianIid,
    BernoulliRademacher,
    GaussianCorrelated,
}

/// Column correlation of a [`Family::GaussianCorrelated`] design.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "rho")]
pub enum Correlation {
    /// `Σ_ij = rho · scale` off the diagonal.
    Equi(f64),
    /// `Σ_ij = rho^|i−j| · scale`.
    Decaying(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub n: usize,
    pub p: usize,
    pub family: Family,
    /// Per-entry variance. `None` means `1/n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation: Option<Correlation>,
}

impl DesignSpec {
    pub fn gaussian(n: usize, p: usize) -> Self {
        DesignSpec {
            n,
            p,
            family: Family::GaussianIid,
            scale: None,
            correlation: None,
        }
    }

    pub fn bernoulli(n: usize, p: usize) -> Self {
        DesignSpec {
            family: Family::BernoulliRademacher,
            ..Self::gaussian(n, p)
        }
    }

    pub fn correlated(n: usize, p: usize, correlation: Correlation) -> Self {
        DesignSpec {
            family: Family::GaussianCorrelated,
            correlation: Some(correlation),
            ..Self::gaussian(n, p)
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = Some(scale);
        self
    }

    pub fn entry_variance(&self) -> f64 {
        self.scale.unwrap_or(1.0 / self.n as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::InvalidParameter(format!(
                "design dimensions must be positive (n = {}, p = {})",
                self.n, self.p
            )));
        }
        let scale = self.entry_variance();
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "entry variance must be positive, got {scale}"
            )));
        }
        match (self.family, self.correlation) {
            (Family::GaussianCorrelated, None) => Err(Error::InvalidParameter(
                "a correlated design needs a correlation structure".into(),
            )),
            (Family::GaussianCorrelated, Some(Correlation::Equi(rho))) if !(0.0..1.0).contains(&rho) => {
                Err(Error::InvalidParameter(format!(
                    "equicorrelation rho must lie in [0, 1), got {rho}"
                )))
            }
            (Family::GaussianCorrelated, Some(Correlation::Decaying(rho))) if !(rho > -1.0 && rho < 1.0) => {
                Err(Error::InvalidParameter(format!(
                    "decaying correlation rho must lie in (-1, 1), got {rho}"
                )))
            }
            (Family::GaussianCorrelated, Some(_)) => Ok(()),
            (_, Some(_)) => Err(Error::InvalidParameter(
                "correlation is only meaningful for the correlated Gaussian family".into(),
            )),
            (_, None) => Ok(()),
        }
    }

    /// Column covariance `Σ` of one row.
    pub fn covariance(&self) -> DMatrix<f64> {
        let scale = self.entry_variance();
        let p = self.p;
        match self.correlation {
            Some(Correlation::Equi(rho)) => DMatrix::from_fn(p, p, |i, j| if i == j { scale } else { rho * scale }),
            Some(Correlation::Decaying(rho)) => {
                DMatrix::from_fn(p, p, |i, j| rho.powi(i.abs_diff(j) as i32) * scale)
            }
            None => DMatrix::from_diagonal_element(p, p, scale),
        }
    }
}

/// A block of equal nonzero coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalBlock {
    pub count: usize,
    pub magnitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub p: usize,
    pub blocks: Vec<SignalBlock>,
    pub noise_sigma: f64,
    /// Scatter the nonzero coefficients over random columns instead of
    /// placing them on `0..k`.
    #[serde(default)]
    pub shuffle_support: bool,
}

impl SignalSpec {
    /// `k` coefficients equal to `magnitude`, the rest zero.
    pub fn uniform(p: usize, k: usize, magnitude: f64, noise_sigma: f64) -> Self {
        let blocks = if k == 0 {
            Vec::new()
        } else {
            vec![SignalBlock { count: k, magnitude }]
        };
        SignalSpec {
            p,
            blocks,
            noise_sigma,
            shuffle_support: false,
        }
    }

    pub fn sparsity(&self) -> usize {
        self.blocks.iter().map(|b| b.count).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::InvalidParameter("signal length p must be positive".into()));
        }
        for b in &self.blocks {
            if b.count == 0 {
                return Err(Error::InvalidParameter("signal block counts must be positive".into()));
            }
            if b.magnitude == 0.0 || !b.magnitude.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "signal magnitudes must be finite and nonzero, got {}",
                    b.magnitude
                )));
            }
        }
        if self.sparsity() > self.p {
            return Err(Error::InvalidParameter(format!(
                "{} nonzero coefficients do not fit in p = {}",
                self.sparsity(),
                self.p
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise sigma must be a nonnegative real, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

/// One instance of `y = Xβ + z`. The noise draw is consumed at
/// construction and not retained.
#[derive(Clone, Debug)]
pub struct Dataset {
    x: DMatrix<f64>,
    beta: DVector<f64>,
    y: DVector<f64>,
    support: Vec<usize>,
    sigma: f64,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, beta: DVector<f64>, y: DVector<f64>, sigma: f64) -> Result<Self> {
        if x.ncols() != beta.len() || x.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "X is {}x{}, beta has {} entries, y has {}",
                x.nrows(),
                x.ncols(),
                beta.len(),
                y.len()
            )));
        }
        let support = beta
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, _)| j)
            .collect();
        Ok(Dataset {
            x,
            beta,
            y,
            support,
            sigma,
        })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// Sorted indices of the nonzero coefficients.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn signal(&self) -> DVector<f64> {
        &self.x * &self.beta
    }

    /// `y − Xβ`, recomputed from the stored fields.
    pub fn noise(&self) -> DVector<f64> {
        &self.y - self.signal()
    }
}

/// Precomputed sampler for one design spec. For correlated designs this
/// holds the Cholesky factor of `Σ` so repeated draws skip the factorization.
#[derive(Clone, Debug)]
pub struct DesignSampler {
    spec: DesignSpec,
    factor: Option<DMatrix<f64>>,
}

impl DesignSampler {
    pub fn new(spec: &DesignSpec) -> Result<Self> {
        spec.validate()?;
        let factor = match spec.family {
            Family::GaussianCorrelated => Some(cholesky_lower(&spec.covariance())?),
            _ => None,
        };
        Ok(DesignSampler {
            spec: spec.clone(),
            factor,
        })
    }

    pub fn spec(&self) -> &DesignSpec {
        &self.spec
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64> {
        let (n, p) = (self.spec.n, self.spec.p);
        let scale = self.spec.entry_variance();
        match self.spec.family {
            Family::GaussianIid => {
                let sd = scale.sqrt();
                DMatrix::from_fn(n, p, |_, _| sd * rng.sample::<f64, _>(StandardNormal))
            }
            Family::BernoulliRademacher => {
                let a = scale.sqrt();
                DMatrix::from_fn(n, p, |_, _| if rng.random::<bool>() { a } else { -a })
            }
            Family::GaussianCorrelated => {
                let factor = self.factor.as_ref().expect("factor is built for correlated designs");
                // rows are L·z, so X = Z·Lᵀ
                let z = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
                z * factor.transpose()
            }
        }
    }

    pub fn generate<R: Rng + ?Sized>(&self, signal: &SignalSpec, rng: &mut R) -> Result<Dataset> {
        signal.validate()?;
        if signal.p != self.spec.p {
            return Err(Error::DimensionMismatch(format!(
                "design has p = {} but signal has p = {}",
                self.spec.p, signal.p
            )));
        }
        let p = self.spec.p;
        let mut positions: Vec<usize> = (0..p).collect();
        if signal.shuffle_support {
            positions.shuffle(rng);
        }
        let mut beta = DVector::zeros(p);
        let mut slot = 0;
        for block in &signal.blocks {
            for _ in 0..block.count {
                beta[positions[slot]] = block.magnitude;
                slot += 1;
            }
        }
        let x = self.sample(rng);
        let mut y = &x * &beta;
        if signal.noise_sigma > 0.0 {
            for yi in y.iter_mut() {
                *yi += signal.noise_sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
        Dataset::new(x, beta, y, signal.noise_sigma)
    }
}

/// Draws one dataset from stream 0 of `seed`.
pub fn generate_dataset(design: &DesignSpec, signal: &SignalSpec, seed: u64) -> Result<Dataset> {
    generate_dataset_stream(design, signal, seed, 0)
}

pub fn generate_dataset_stream(design: &DesignSpec, signal: &SignalSpec, seed: u64, stream: u64) -> Result<Dataset> {
    let mut rng: StreamRng = stream_rng(seed, stream);
    DesignSampler::new(design)?.generate(signal, &mut rng)
}

/// Lower Cholesky factor. A pivot below `1e-12·trace/p` counts as a
/// non-positive leading minor.
pub(crate) fn cholesky_lower(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = sigma.nrows();
    let floor = 1e-12 * sigma.trace() / p as f64;
    let mut l = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        let mut d = sigma[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) {
            return Err(Error::NotPositiveDefinite { index: j + 1, pivot: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..p {
            let mut s = sigma[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Centers every column and scales it to unit Euclidean norm.
pub fn standardize_columns(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "standardizing needs at least two rows, got {n}"
        )));
    }
    let mut out = x.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let magnitude = col.amax();
        // second pass removes the rounding left by the first
        for _ in 0..2 {
            let mean = col.sum() / n as f64;
            col.add_scalar_mut(-mean);
        }
        let norm = col.norm();
        if magnitude == 0.0 || norm <= 1e-14 * magnitude * (n as f64).sqrt() {
            return Err(Error::ConstantColumn(j));
        }
        col /= norm;
    }
    Ok(out)
}

/// Reads a rectangular numeric CSV. A first row that fails to parse as
/// numbers is taken as a header.
pub fn load_design_csv(path: impl AsRef<Path>, standardize: bool) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let rows = read_numeric_rows(path)?;
    let ncols = rows[0].len();
    let x = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
    if standardize {
        standardize_columns(&x)
    } else {
        Ok(x)
    }
}

/// Reads a response vector stored as a single column (or a single row).
pub fn load_response_csv(path: impl AsRef<Path>) -> Result<DVector<f64>> {
    let path = path.as_ref();
    let rows = read_numeric_rows(path)?;
    if rows[0].len() == 1 {
        Ok(DVector::from_iterator(rows.len(), rows.iter().map(|r| r[0])))
    } else if rows.len() == 1 {
        Ok(DVector::from_vec(rows[0].clone()))
    } else {
        Err(Error::Csv {
            path: path.to_path_buf(),
            message: format!(
                "expected a single column or row, found {}x{}",
                rows.len(),
                rows[0].len()
            ),
        })
    }
}

fn read_numeric_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let file = File::open(path).map_err(|e| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut expected: Option<usize> = None;
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let line = idx + 1;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, usize>> = record
            .iter()
            .enumerate()
            .map(|(c, s)| s.parse::<f64>().map_err(|_| c))
            .collect();
        if idx == 0 && parsed.iter().any(|v| v.is_err()) {
            expected = Some(record.len());
            continue;
        }
        match expected {
            Some(e) if e != record.len() => {
                return Err(Error::RaggedRow {
                    path: path.to_path_buf(),
                    row: line,
                    found: record.len(),
                    expected: e,
                })
            }
            _ => expected = Some(record.len()),
        }
        let mut row = Vec::with_capacity(record.len());
        for v in parsed {
            match v {
                Ok(v) => row.push(v),
                Err(c) => {
                    return Err(Error::NonNumeric {
                        path: path.to_path_buf(),
                        row: line,
                        column: c + 1,
                        value: record[c].to_string(),
                    })
                }
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    Ok(rows)
}
