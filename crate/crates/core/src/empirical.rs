//! Sample clouds from the construction `X = (A_1 Z, ..., A_d Z)` and
//! rank-based estimation of `l` and of the profile distribution.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dependence::{McConfig, Point};
use crate::error::{Error, Result};
use crate::generators::mc::{stream_len, stream_rng};
use crate::generators::{open01, Generator};
use crate::output::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginTag {
    Raw,
    /// `rank / (n + 1)`, inside `(0, 1)`.
    Uniform,
    /// `(n + 1) / (n + 1 - rank)`, at least 1.
    Pareto,
}

/// An `n x d` observation matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCloud {
    names: Vec<String>,
    data: Vec<f64>,
    margin: MarginTag,
}

impl SampleCloud {
    pub fn new(names: Vec<String>, data: Vec<f64>, margin: MarginTag) -> Result<Self> {
        let d = names.len();
        if d == 0 {
            return Err(Error::InvalidParameter("a cloud needs at least one column".into()));
        }
        if !data.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch { expected: d, got: data.len() % d });
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite observation {v}")));
        }
        Ok(SampleCloud { names, data, margin })
    }

    /// Columns named `x1, ..., xd`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidParameter("rows differ in length".into()));
        }
        Self::new(default_names(d), rows.concat(), MarginTag::Raw)
    }

    pub fn n(&self) -> usize {
        self.data.len() / self.names.len()
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn margin(&self) -> MarginTag {
        self.margin
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim())
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Header row of column names, then numeric rows. Lines starting with
    /// `#` are skipped.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
        let names: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Spec(format!("bad CSV header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut data = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Spec(format!("CSV row {}: {e}", i + 1)))?;
            if record.len() != names.len() {
                return Err(Error::Spec(format!(
                    "CSV row {} has {} fields, expected {}",
                    i + 1,
                    record.len(),
                    names.len()
                )));
            }
            for field in record.iter() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::Spec(format!("CSV row {}: '{field}' is not a number", i + 1)))?;
                data.push(v);
            }
        }
        Self::new(names, data, MarginTag::Raw)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Domain(format!("write failed: {e}"));
        w.write_record(&self.names).map_err(err)?;
        for row in self.rows() {
            w.write_record(row.iter().map(|v| fmt_f64(*v))).map_err(err)?;
        }
        w.flush().map_err(|e| Error::Domain(format!("write failed: {e}")))
    }
}

fn default_names(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("x{j}")).collect()
}

/// `n` rows of `X = A Z` with `Z = -1 / log U` unit Fréchet, independent of
/// `A`. Rows come from the same stream layout as the Monte Carlo engine.
pub fn simulate_x(gen: &Generator, n: usize, seed: u64) -> Result<SampleCloud> {
    let cfg = McConfig::new(n, seed);
    cfg.validate()?;
    let d = gen.dim();
    let blocks: Vec<Vec<f64>> = (0..cfg.streams)
        .into_par_iter()
        .map(|s| {
            let len = stream_len(n, cfg.streams, s);
            let mut rng = stream_rng(seed, s as u64);
            let mut block = vec![0.0; len * d];
            for row in block.chunks_exact_mut(d) {
                gen.sample(&mut rng, row);
                let z = -1.0 / open01(&mut rng).ln();
                for v in row.iter_mut() {
                    *v *= z;
                }
            }
            block
        })
        .collect();
    SampleCloud::new(default_names(d), blocks.concat(), MarginTag::Raw)
}

/// Column ranks `1..=n`; ties are broken by input order.
pub fn column_ranks(cloud: &SampleCloud) -> Vec<Vec<u32>> {
    let n = cloud.n();
    (0..cloud.dim())
        .into_par_iter()
        .map(|j| {
            let col = cloud.column(j);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            let mut ranks = vec![0u32; n];
            for (r, &i) in order.iter().enumerate() {
                ranks[i] = r as u32 + 1;
            }
            ranks
        })
        .collect()
}

pub fn rank_transform(cloud: &SampleCloud, target: MarginTag) -> Result<SampleCloud> {
    let n = cloud.n();
    if n == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let np1 = (n + 1) as f64;
    let f: fn(f64, f64) -> f64 = match target {
        MarginTag::Uniform => |r, np1| r / np1,
        MarginTag::Pareto => |r, np1| np1 / (np1 - r),
        MarginTag::Raw => return Ok(cloud.clone()),
    };
    let ranks = column_ranks(cloud);
    let d = cloud.dim();
    let mut data = vec![0.0; n * d];
    for (i, row) in data.chunks_exact_mut(d).enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = f(ranks[j][i] as f64, np1);
        }
    }
    SampleCloud::new(cloud.names.clone(), data, target)
}

/// `floor(sqrt(n))`, kept inside `1..n`.
pub fn default_k(n: usize) -> usize {
    ((n as f64).sqrt().floor() as usize).clamp(1, n.saturating_sub(1).max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllHat {
    /// Estimate clamped to `[max x, sum x]`.
    pub value: f64,
    pub raw: f64,
    pub clamped: bool,
}

/// Rank-based estimators over one cloud; ranks are computed once.
#[derive(Debug, Clone)]
pub struct TailEstimator {
    n: usize,
    d: usize,
    ranks: Vec<Vec<u32>>,
}

impl TailEstimator {
    pub fn new(cloud: &SampleCloud) -> Result<Self> {
        if cloud.n() < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: cloud.n() });
        }
        Ok(TailEstimator { n: cloud.n(), d: cloud.dim(), ranks: column_ranks(cloud) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 || k >= self.n {
            return Err(Error::InvalidParameter(format!("k = {k} must lie in 1..{}", self.n)));
        }
        Ok(())
    }

    /// `(n/k) (1 - C_n(1 - k x / n))` with `C_n` the empirical copula of the
    /// uniform view, that is `(n - #{i : rank_ij <= (n+1)(1 - k x_j / n) for all j}) / k`.
    pub fn ell_hat(&self, x: &Point, k: usize) -> Result<EllHat> {
        self.check_k(k)?;
        if x.dim() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: x.dim() });
        }
        let (n, kf) = (self.n as f64, k as f64);
        let mut limits = Vec::with_capacity(self.d);
        for (j, &xj) in x.coords().iter().enumerate() {
            let frac = kf * xj / n;
            if frac > 1.0 {
                return Err(Error::Domain(format!("k x_{} / n = {frac} exceeds 1", j + 1)));
            }
            limits.push((n + 1.0) * (1.0 - frac));
        }
        let inside = (0..self.n)
            .filter(|&i| self.ranks.iter().zip(&limits).all(|(col, &lim)| col[i] as f64 <= lim))
            .count();
        let raw = (n - inside as f64) / kf;
        let value = raw.clamp(x.max(), x.sum());
        Ok(EllHat { value, raw, clamped: value != raw })
    }

    /// Profiles `y / sum(y)` of the `k` rows of the Pareto view with the
    /// largest `sum(y)`; ties keep input order.
    pub fn profile_hat(&self, k: usize) -> Result<ProfileSummary> {
        self.check_k(k)?;
        let np1 = (self.n + 1) as f64;
        let pareto = |i: usize, j: usize| np1 / (np1 - self.ranks[j][i] as f64);
        let radius: Vec<f64> = (0..self.n).map(|i| (0..self.d).map(|j| pareto(i, j)).sum()).collect();
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by(|&a, &b| radius[b].total_cmp(&radius[a]));
        let profiles = order[..k]
            .iter()
            .map(|&i| (0..self.d).map(|j| pareto(i, j) / radius[i]).collect())
            .collect();
        Ok(ProfileSummary::new(self.d, profiles))
    }
}

pub fn ell_hat(cloud: &SampleCloud, x: &Point, k: usize) -> Result<EllHat> {
    TailEstimator::new(cloud)?.ell_hat(x, k)
}

pub fn profile_hat(cloud: &SampleCloud, k: usize) -> Result<ProfileSummary> {
    TailEstimator::new(cloud)?.profile_hat(k)
}

/// Exceedance profiles with their coordinate means and standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSummary {
    pub dim: usize,
    pub profiles: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

impl ProfileSummary {
    fn new(dim: usize, profiles: Vec<Vec<f64>>) -> Self {
        let k = profiles.len() as f64;
        let mean: Vec<f64> = (0..dim).map(|j| profiles.iter().map(|w| w[j]).sum::<f64>() / k).collect();
        let se = (0..dim)
            .map(|j| {
                let ss: f64 = profiles.iter().map(|w| (w[j] - mean[j]).powi(2)).sum();
                (ss / (k - 1.0).max(1.0) / k).sqrt()
            })
            .collect();
        ProfileSummary { dim, profiles, mean, se }
    }

    pub fn k(&self) -> usize {
        self.profiles.len()
    }

    /// Share of profiles within sup-distance `tol` of a simplex vertex.
    pub fn vertex_fraction(&self, tol: f64) -> f64 {
        let near = self
            .profiles
            .iter()
            .filter(|w| {
                let (jmax, top) = w
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc });
                let rest = w.iter().enumerate().filter(|&(j, _)| j != jmax).fold(0.0f64, |m, (_, &v)| m.max(v));
                (1.0 - top).max(rest) <= tol
            })
            .count();
        near as f64 / self.k() as f64
    }

    /// Share of profiles with `w_j > w_i` for all `i != j`, per coordinate.
    pub fn argmax_shares(&self) -> Vec<f64> {
        let mut counts = vec![0usize; self.dim];
        for w in &self.profiles {
            let j = (0..self.dim).fold(0, |b, j| if w[j] > w[b] { j } else { b });
            counts[j] += 1;
        }
        counts.iter().map(|&c| c as f64 / self.k() as f64).collect()
    }
}
