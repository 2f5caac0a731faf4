//! The object algebra of max-stable dependence.
//!
//! A [`DependenceModel`] bundles the stable tail dependence function `l`, the
//! tail copula `R`, the Pickands dependence function `D` and the extreme-value
//! copula `C` of one max-stable dependence structure. The model is backed by a
//! closed-form family, by a discrete spectral measure, or by a generator `A`
//! whose attractor is evaluated by Monte Carlo:
//!
//! ```text
//! l(x) = E[max(x_1 A_1, ..., x_d A_d, 0)]
//! ```
//!
//! Generator-backed evaluation always draws the same samples for a given
//! [`McConfig`], so estimates at different points share common random numbers.
//! Homogeneity and convexity then hold sample by sample.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::closed_forms::Family;
use crate::error::{Error, Result};
use crate::generators::mc::{self, SampleStore};
use crate::generators::Generator;

/// Largest dimension accepted by the inclusion-exclusion routines.
pub const MAX_SUBSET_DIMENSION: usize = 25;

/// Tolerance for construction checks on simplex weights.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// Relative tolerance for the moment constraints of a spectral measure.
pub const SPECTRAL_TOLERANCE: f64 = 1e-9;

/// Argument of `l` and `R`: a vector of nonnegative reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        for (index, &value) in coords.iter().enumerate() {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::NegativeCoordinate { index, value });
            }
        }
        Ok(Point(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    /// The `j`-th unit vector in dimension `dim`.
    pub fn unit(dim: usize, j: usize) -> Self {
        let mut coords = vec![0.0; dim];
        coords[j] = 1.0;
        Point(coords)
    }

    pub fn ones(dim: usize) -> Self {
        Point(vec![1.0; dim])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn scaled(&self, a: f64) -> Result<Self> {
        Point::new(self.0.iter().map(|v| a * v).collect())
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Coordinates outside `mask` set to zero.
    pub fn masked(&self, mask: u32) -> Self {
        Point(
            self.0
                .iter()
                .enumerate()
                .map(|(j, &v)| if mask & (1 << j) != 0 { v } else { 0.0 })
                .collect(),
        )
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// A point of the unit simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexWeight(Vec<f64>);

impl SimplexWeight {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        let sum: f64 = weights.iter().sum();
        let in_range = weights
            .iter()
            .all(|w| (-SIMPLEX_TOLERANCE..=1.0 + SIMPLEX_TOLERANCE).contains(w));
        if !in_range || (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::OffSimplex { sum });
        }
        Ok(SimplexWeight(weights))
    }

    /// Bivariate weight `(1 - t, t)`, the argument convention of `D(t) = l(1 - t, t)`.
    pub fn pair(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OffSimplex { sum: f64::NAN });
        }
        Ok(SimplexWeight(vec![1.0 - t, t]))
    }

    pub fn vertex(dim: usize, j: usize) -> Self {
        let mut w = vec![0.0; dim];
        w[j] = 1.0;
        SimplexWeight(w)
    }

    pub fn barycenter(dim: usize) -> Self {
        SimplexWeight(vec![1.0 / dim as f64; dim])
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn to_point(&self) -> Point {
        Point(self.0.iter().map(|w| w.max(0.0)).collect())
    }
}

/// Marginal standardization under which the copula is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginForm {
    /// `C(u) = exp{-l(-log u)}` on `(0, 1]^d`.
    Uniform01,
    /// `G(x) = exp{-l(1/x)}` on `(0, inf)^d`.
    UnitFrechet,
    /// `G(x) = exp{-l(exp(-x))}` on the real line.
    Gumbel,
    /// `G(x) = exp{-l(-x)}` on `(-inf, 0)^d`.
    ReverseExponential,
}

impl MarginForm {
    /// Maps one coordinate in this margin form to the matching argument of `l`.
    pub fn ell_argument(self, value: f64) -> Result<f64> {
        let out = match self {
            MarginForm::Uniform01 if value > 0.0 && value <= 1.0 => -value.ln(),
            MarginForm::UnitFrechet if value > 0.0 && value.is_finite() => 1.0 / value,
            MarginForm::Gumbel if value.is_finite() => (-value).exp(),
            MarginForm::ReverseExponential if value < 0.0 && value.is_finite() => -value,
            _ => {
                return Err(Error::Domain(format!(
                    "{value} is outside the domain of the {} margin",
                    self.name()
                )))
            }
        };
        Ok(out)
    }

    pub fn name(self) -> &'static str {
        match self {
            MarginForm::Uniform01 => "uniform01",
            MarginForm::UnitFrechet => "unit_frechet",
            MarginForm::Gumbel => "gumbel",
            MarginForm::ReverseExponential => "reverse_exponential",
        }
    }
}

impl std::str::FromStr for MarginForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform01" | "uniform" => Ok(MarginForm::Uniform01),
            "unit_frechet" | "frechet" => Ok(MarginForm::UnitFrechet),
            "gumbel" => Ok(MarginForm::Gumbel),
            "reverse_exponential" | "weibull" => Ok(MarginForm::ReverseExponential),
            other => Err(Error::Spec(format!("unknown margin form '{other}'"))),
        }
    }
}

/// One atom `(w_k, m_k)` of a discrete spectral measure.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAtom {
    pub weight: SimplexWeight,
    pub mass: f64,
}

/// A discrete spectral measure `H = sum_k m_k delta_{w_k}` on the unit simplex.
///
/// Construction enforces the moment constraints `sum_k m_k w_kj = 1` for
/// every `j`, hence total mass `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAtoms {
    dim: usize,
    atoms: Vec<SpectralAtom>,
}

impl SpectralAtoms {
    pub fn new(dim: usize, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyAtoms);
        }
        let mut out = Vec::with_capacity(atoms.len());
        for (weights, mass) in atoms {
            if weights.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: weights.len() });
            }
            if !(mass > 0.0) || !mass.is_finite() {
                return Err(Error::SpectralConstraint(format!("atom mass {mass} is not positive")));
            }
            out.push(SpectralAtom { weight: SimplexWeight::new(weights)?, mass });
        }
        let atoms = SpectralAtoms { dim, atoms: out };
        atoms.check_constraints()?;
        Ok(atoms)
    }

    fn check_constraints(&self) -> Result<()> {
        let d = self.dim as f64;
        let total = self.total_mass();
        if (total - d).abs() > SPECTRAL_TOLERANCE * d {
            return Err(Error::SpectralConstraint(format!("total mass {total} differs from {d}")));
        }
        for (j, moment) in self.first_moments().into_iter().enumerate() {
            if (moment - 1.0).abs() > SPECTRAL_TOLERANCE {
                return Err(Error::SpectralConstraint(format!(
                    "moment of coordinate {j} is {moment}, expected 1"
                )));
            }
        }
        Ok(())
    }

    /// Independence: unit masses at the vertices.
    pub fn independence(dim: usize) -> Self {
        SpectralAtoms {
            dim,
            atoms: (0..dim)
                .map(|j| SpectralAtom { weight: SimplexWeight::vertex(dim, j), mass: 1.0 })
                .collect(),
        }
    }

    /// Perfect dependence: mass `d` at the barycenter.
    pub fn perfect_dependence(dim: usize) -> Self {
        SpectralAtoms {
            dim,
            atoms: vec![SpectralAtom { weight: SimplexWeight::barycenter(dim), mass: dim as f64 }],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[SpectralAtom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// `sum_k m_k w_kj` for each coordinate `j`.
    pub fn first_moments(&self) -> Vec<f64> {
        let mut moments = vec![0.0; self.dim];
        for atom in &self.atoms {
            for (m, w) in moments.iter_mut().zip(atom.weight.weights()) {
                *m += atom.mass * w;
            }
        }
        moments
    }

    /// `l(x) = sum_k m_k max_j (w_kj x_j)`.
    pub fn ell(&self, x: &Point) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self
            .atoms
            .iter()
            .map(|a| a.mass * weighted_max(a.weight.weights(), x.coords()))
            .sum())
    }

    /// `R(x) = sum_k m_k min_j (w_kj x_j)`, the integral form of the tail copula.
    pub fn tail_copula(&self, x: &Point) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self
            .atoms
            .iter()
            .map(|a| {
                let m = a
                    .weight
                    .weights()
                    .iter()
                    .zip(x.coords())
                    .map(|(w, x)| w * x)
                    .fold(f64::INFINITY, f64::min);
                a.mass * m
            })
            .sum())
    }

    /// Spectral measure of the margin on the coordinates `subset` (sorted,
    /// distinct, 0-based). Atoms are projected, atoms that vanish are dropped
    /// and equal profiles are merged.
    pub fn restrict(&self, subset: &[usize]) -> Result<Self> {
        let mut merged: Vec<(Vec<f64>, f64)> = Vec::new();
        for atom in &self.atoms {
            let w = atom.weight.weights();
            let part: f64 = subset.iter().map(|&j| w[j]).sum();
            if part <= 0.0 {
                continue;
            }
            let profile: Vec<f64> = subset.iter().map(|&j| w[j] / part).collect();
            let mass = atom.mass * part;
            match merged.iter_mut().find(|(p, _)| same_profile(p, &profile)) {
                Some(entry) => entry.1 += mass,
                None => merged.push((profile, mass)),
            }
        }
        let total: f64 = merged.iter().map(|(_, m)| m).sum();
        let target = subset.len() as f64;
        for (_, m) in merged.iter_mut() {
            *m *= target / total;
        }
        SpectralAtoms::new(subset.len(), merged)
    }

    fn check_dim(&self, x: &Point) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.dim() });
        }
        Ok(())
    }
}

fn same_profile(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= SIMPLEX_TOLERANCE)
}

fn weighted_max(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(w, x)| w * x).fold(0.0, f64::max)
}

/// `l(x)` from a discrete spectral measure.
pub fn ell_from_spectral(atoms: &SpectralAtoms, x: &Point) -> Result<f64> {
    atoms.ell(x)
}

/// Monte Carlo settings for generator-backed models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    /// Number of independent random streams the samples are split over.
    /// Fixing it fixes the estimate regardless of the worker-thread count.
    pub streams: usize,
    pub antithetic: bool,
}

pub const DEFAULT_SAMPLES: usize = 1_000_000;
pub const DEFAULT_STREAMS: usize = 16;

impl Default for McConfig {
    fn default() -> Self {
        McConfig { samples: DEFAULT_SAMPLES, seed: 0, streams: DEFAULT_STREAMS, antithetic: false }
    }
}

impl McConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        McConfig { samples, seed, streams: DEFAULT_STREAMS.min(samples.max(1)), antithetic: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        if self.streams == 0 || self.streams > self.samples {
            return Err(Error::InvalidParameter(format!(
                "stream count {} must lie in 1..={}",
                self.streams, self.samples
            )));
        }
        Ok(())
    }
}

/// A value with an optional Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: Option<f64>,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, se: None }
    }

    pub fn se_or_zero(&self) -> f64 {
        self.se.unwrap_or(0.0)
    }
}

/// Whether generator-backed models keep their Monte Carlo sample in memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CachePolicy {
    /// Redraw the samples from the seed on every evaluation.
    #[default]
    Resample,
    /// Draw once and keep the sample matrix.
    Materialize,
}

/// Generator plus Monte Carlo configuration.
#[derive(Debug, Clone)]
pub struct GeneratorBackend {
    generator: Generator,
    mc: McConfig,
    policy: CachePolicy,
    cache: OnceLock<Arc<SampleStore>>,
}

impl GeneratorBackend {
    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn mc(&self) -> &McConfig {
        &self.mc
    }

    pub fn policy(&self) -> CachePolicy {
        self.policy
    }

    fn store(&self) -> Result<Option<Arc<SampleStore>>> {
        if self.policy == CachePolicy::Resample {
            return Ok(None);
        }
        if let Some(store) = self.cache.get() {
            return Ok(Some(store.clone()));
        }
        let store = Arc::new(mc::materialize(&self.generator, &self.mc)?);
        Ok(Some(self.cache.get_or_init(|| store).clone()))
    }

    /// Means of `f` over the shared sample; `f` writes `outputs` values per row.
    pub(crate) fn estimate<F>(&self, outputs: usize, f: F) -> Result<Vec<Estimate>>
    where
        F: Fn(&[f64], &mut [f64]) + Sync,
    {
        let store = self.store()?;
        mc::estimate_means(&self.generator, &self.mc, store.as_deref(), outputs, f)
    }
}

#[derive(Debug, Clone)]
pub enum Backend {
    ClosedForm(Family),
    Discrete(SpectralAtoms),
    Generator(GeneratorBackend),
}

/// A max-stable dependence structure in dimension `d`.
#[derive(Debug, Clone)]
pub struct DependenceModel {
    dim: usize,
    backend: Backend,
}

impl DependenceModel {
    pub fn closed_form(family: Family) -> Result<Self> {
        family.validate()?;
        Ok(DependenceModel { dim: family.dim(), backend: Backend::ClosedForm(family) })
    }

    pub fn discrete(atoms: SpectralAtoms) -> Self {
        DependenceModel { dim: atoms.dim(), backend: Backend::Discrete(atoms) }
    }

    pub fn generator(generator: Generator, mc: McConfig) -> Result<Self> {
        Self::generator_with_policy(generator, mc, CachePolicy::Resample)
    }

    pub fn generator_with_policy(
        generator: Generator,
        mc: McConfig,
        policy: CachePolicy,
    ) -> Result<Self> {
        mc.validate()?;
        if mc.antithetic && !generator.supports_antithetic() {
            return Err(Error::Unsupported(format!(
                "antithetic sampling for the {} generator",
                generator.kind_name()
            )));
        }
        Ok(DependenceModel {
            dim: generator.dim(),
            backend: Backend::Generator(GeneratorBackend {
                generator,
                mc,
                policy,
                cache: OnceLock::new(),
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn is_monte_carlo(&self) -> bool {
        matches!(self.backend, Backend::Generator(_))
    }

    /// Human-readable backend description.
    pub fn describe(&self) -> String {
        match &self.backend {
            Backend::ClosedForm(f) => format!("closed_form:{}", f.name()),
            Backend::Discrete(a) => format!("discrete:{} atoms", a.atoms().len()),
            Backend::Generator(g) => format!("generator:{}", g.generator.kind_name()),
        }
    }

    fn check_point(&self, x: &Point) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.dim() });
        }
        Ok(())
    }

    /// Stable tail dependence function `l(x)`.
    pub fn ell(&self, x: &Point) -> Result<Estimate> {
        Ok(self.ell_batch(std::slice::from_ref(x))?.remove(0))
    }

    /// `l` at several points; generator-backed models share one sample.
    pub fn ell_batch(&self, xs: &[Point]) -> Result<Vec<Estimate>> {
        for x in xs {
            self.check_point(x)?;
        }
        match &self.backend {
            Backend::ClosedForm(f) => {
                Ok(xs.iter().map(|x| Estimate::exact(f.ell(x.coords()))).collect())
            }
            Backend::Discrete(atoms) => {
                xs.iter().map(|x| atoms.ell(x).map(Estimate::exact)).collect()
            }
            Backend::Generator(g) => {
                if g.mc.samples < 2 {
                    return Err(Error::TooFewSamples { needed: 2, got: g.mc.samples });
                }
                g.estimate(xs.len(), |a, out| {
                    for (o, x) in out.iter_mut().zip(xs) {
                        *o = positive_weighted_max(x.coords(), a);
                    }
                })
            }
        }
    }

    /// Tail copula `R(x)` by inclusion-exclusion over the margins of `l`.
    pub fn tail_copula(&self, x: &Point) -> Result<Estimate> {
        self.check_point(x)?;
        let d = self.dim;
        if d > MAX_SUBSET_DIMENSION {
            return Err(Error::DimensionOverflow(d));
        }
        if x.coords().contains(&0.0) {
            let se = self.is_monte_carlo().then_some(0.0);
            return Ok(Estimate { value: 0.0, se });
        }
        let full: u32 = ((1u64 << d) - 1) as u32;
        let masks: Vec<u32> = (1..=full).collect();
        let points: Vec<Point> = masks.iter().map(|&m| x.masked(m)).collect();
        let signed_sum = |values: &[f64]| -> f64 {
            masks
                .iter()
                .zip(values)
                .map(|(m, v)| if m.count_ones() % 2 == 1 { *v } else { -*v })
                .sum()
        };
        match &self.backend {
            Backend::Generator(g) => {
                let n_masks = masks.len();
                let xs = x.coords();
                // Per row: l-terms for every subset, then min_j (x_j A_j)^+ whose
                // mean equals the alternating sum and carries the standard error.
                let est = g.estimate(n_masks + 1, |a, out| {
                    let mut subset_max = vec![0.0f64; n_masks + 1];
                    let mut min = f64::INFINITY;
                    for mask in 1..=full as usize {
                        let low = mask.trailing_zeros() as usize;
                        let y = (xs[low] * a[low]).max(0.0);
                        subset_max[mask] = subset_max[mask & (mask - 1)].max(y);
                    }
                    for (j, &xj) in xs.iter().enumerate() {
                        min = min.min((xj * a[j]).max(0.0));
                    }
                    out[..n_masks].copy_from_slice(&subset_max[1..]);
                    out[n_masks] = min;
                })?;
                let values: Vec<f64> = est[..n_masks].iter().map(|e| e.value).collect();
                Ok(Estimate { value: signed_sum(&values), se: est[n_masks].se })
            }
            _ => {
                let values: Vec<f64> =
                    self.ell_batch(&points)?.into_iter().map(|e| e.value).collect();
                Ok(Estimate::exact(signed_sum(&values)))
            }
        }
    }

    /// Pickands dependence function `D(w) = l(w)` on the unit simplex.
    pub fn pickands(&self, w: &SimplexWeight) -> Result<Estimate> {
        if w.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: w.dim() });
        }
        self.ell(&w.to_point())
    }

    /// The max-stable distribution function with margins in `margin` form,
    /// evaluated at `u`. For [`MarginForm::Uniform01`] this is the copula `C(u)`.
    pub fn copula(&self, u: &[f64], margin: MarginForm) -> Result<Estimate> {
        Ok(self.copula_batch(std::slice::from_ref(&u.to_vec()), margin)?.remove(0))
    }

    pub fn copula_batch(&self, us: &[Vec<f64>], margin: MarginForm) -> Result<Vec<Estimate>> {
        let mut points = Vec::with_capacity(us.len());
        for u in us {
            if u.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: u.len() });
            }
            let x = u.iter().map(|&v| margin.ell_argument(v)).collect::<Result<Vec<_>>>()?;
            points.push(Point::new(x)?);
        }
        Ok(self.ell_batch(&points)?.into_iter().map(copula_from_ell).collect())
    }

    /// `|C(u) - C(u^{1/k})^k|`.
    pub fn max_stability_defect(&self, u: &[f64], k: u32) -> Result<f64> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        let root: Vec<f64> = u.iter().map(|v| v.powf(1.0 / k as f64)).collect();
        let c = self.copula_batch(&[u.to_vec(), root], MarginForm::Uniform01)?;
        Ok((c[0].value - c[1].value.powi(k as i32)).abs())
    }

    /// Lower-dimensional margin on the coordinates in `subset` (0-based).
    pub fn margin_restrict(&self, subset: &[usize]) -> Result<Self> {
        let idx = normalize_subset(subset, self.dim)?;
        match &self.backend {
            Backend::ClosedForm(f) => match f.restrict(&idx) {
                Some(family) => DependenceModel::closed_form(family),
                None => match f.spectral_atoms() {
                    Some(atoms) => Ok(DependenceModel::discrete(atoms.restrict(&idx)?)),
                    None => Err(Error::Unsupported(format!("margins of {}", f.name()))),
                },
            },
            Backend::Discrete(atoms) => Ok(DependenceModel::discrete(atoms.restrict(&idx)?)),
            Backend::Generator(g) => DependenceModel::generator_with_policy(
                Generator::marginal(g.generator.clone(), idx)?,
                g.mc,
                g.policy,
            ),
        }
    }
}

/// `exp(-l)` with a delta-method standard error.
fn copula_from_ell(e: Estimate) -> Estimate {
    let value = (-e.value).exp();
    Estimate { value, se: e.se.map(|s| value * s) }
}

/// `max(x_1 a_1, ..., x_d a_d, 0)`.
#[inline]
pub(crate) fn positive_weighted_max(x: &[f64], a: &[f64]) -> f64 {
    x.iter().zip(a).map(|(x, a)| x * a).fold(0.0, f64::max)
}

/// Sorted, distinct, in-range copy of a coordinate subset.
pub(crate) fn normalize_subset(subset: &[usize], dim: usize) -> Result<Vec<usize>> {
    let mut idx = subset.to_vec();
    idx.sort_unstable();
    idx.dedup();
    if idx.is_empty() || idx.iter().any(|&j| j >= dim) {
        return Err(Error::InvalidSubset(dim));
    }
    Ok(idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::Family;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn model(f: Family) -> DependenceModel {
        DependenceModel::closed_form(f).unwrap()
    }

    #[test]
    fn point_rejects_negative_and_nan() {
        assert!(matches!(Point::new(vec![1.0, -0.5]), Err(Error::NegativeCoordinate { index: 1, .. })));
        assert!(Point::new(vec![f64::NAN]).is_err());
        assert!(Point::new(vec![]).is_err());
    }

    #[test]
    fn simplex_weight_tolerance() {
        assert!(SimplexWeight::new(vec![0.5, 0.5 + 5e-13]).is_ok());
        assert!(SimplexWeight::new(vec![0.5, 0.5 + 1e-11]).is_err());
        assert!(SimplexWeight::new(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn ell_examples() {
        let logistic = model(Family::Logistic { theta: 1.0, dim: 2 });
        assert_eq!(logistic.ell(&pt(&[3.0, 4.0])).unwrap().value, 7.0);
        let dir = model(Family::DirichletBivariate11);
        assert!((dir.ell(&pt(&[1.0, 1.0])).unwrap().value - 1.5).abs() < 1e-15);
        let indep = DependenceModel::discrete(SpectralAtoms::independence(2));
        assert_eq!(indep.ell(&pt(&[0.3, 2.5])).unwrap().value, 2.8);
        assert_eq!(indep.ell(&Point::zeros(2)).unwrap().value, 0.0);
    }

    #[test]
    fn ell_errors() {
        let m = model(Family::Logistic { theta: 2.0, dim: 3 });
        assert!(matches!(m.ell(&pt(&[1.0, 1.0])), Err(Error::DimensionMismatch { expected: 3, got: 2 })));
        assert_eq!(SpectralAtoms::new(2, vec![]), Err(Error::EmptyAtoms));
    }

    #[test]
    fn tail_copula_examples() {
        let perfect = model(Family::PerfectDependence { dim: 2 });
        let r = perfect.tail_copula(&pt(&[0.7, 1.9])).unwrap().value;
        assert!((r - 0.7).abs() < 1e-15);
        let indep = model(Family::Logistic { theta: 1.0, dim: 2 });
        assert!(indep.tail_copula(&pt(&[0.7, 1.9])).unwrap().value.abs() < 1e-15);
        let dir = model(Family::DirichletBivariate11);
        assert!((dir.tail_copula(&pt(&[1.0, 1.0])).unwrap().value - 0.5).abs() < 1e-15);
        assert_eq!(dir.tail_copula(&pt(&[0.0, 3.0])).unwrap().value, 0.0);
    }

    #[test]
    fn tail_copula_matches_min_integral_for_discrete() {
        let atoms = SpectralAtoms::new(
            3,
            vec![
                (vec![0.5, 0.25, 0.25], 1.2),
                (vec![0.0, 0.5, 0.5], 0.8),
                (vec![0.2, 0.4, 0.4], 1.0),
            ],
        );
        // masses chosen to satisfy the constraints only approximately: expect rejection
        assert!(atoms.is_err());
        // a valid one: three-atom measure built from a discrete generator law
        let atoms = SpectralAtoms::new(
            3,
            vec![
                (vec![1.0 / 3.0; 3], 1.5),
                (vec![1.0, 0.0, 0.0], 0.5),
                (vec![0.0, 0.5, 0.5], 1.0),
            ],
        )
        .unwrap();
        let m = DependenceModel::discrete(atoms.clone());
        let x = pt(&[0.9, 1.3, 0.4]);
        let via_inclusion_exclusion = m.tail_copula(&x).unwrap().value;
        let direct = atoms.tail_copula(&x).unwrap();
        assert!((via_inclusion_exclusion - direct).abs() < 1e-14);
    }

    #[test]
    fn tail_copula_dimension_cap() {
        let m = model(Family::Independence { dim: 26 });
        assert!(matches!(m.tail_copula(&Point::ones(26)), Err(Error::DimensionOverflow(26))));
    }

    #[test]
    fn pickands_examples() {
        let tawn = model(Family::TawnMixture { theta: 1.0 });
        assert!((tawn.pickands(&SimplexWeight::pair(0.5).unwrap()).unwrap().value - 0.75).abs() < 1e-15);
        let schlather = model(Family::Schlather { rho: -1.0 + 1e-15 });
        let d = schlather.pickands(&SimplexWeight::pair(0.5).unwrap()).unwrap().value;
        assert!((d - 1.0).abs() < 1e-7);
        for j in 0..3 {
            let m = model(Family::Logistic { theta: 2.5, dim: 3 });
            assert!((m.pickands(&SimplexWeight::vertex(3, j)).unwrap().value - 1.0).abs() < 1e-15);
        }
        assert!(matches!(
            tawn.pickands(&SimplexWeight::barycenter(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn copula_examples() {
        let indep = model(Family::Independence { dim: 2 });
        let c = indep.copula(&[0.5, 0.5], MarginForm::Uniform01).unwrap().value;
        assert!((c - 0.25).abs() < 1e-15);
        let perfect = model(Family::PerfectDependence { dim: 2 });
        let c = perfect.copula(&[0.3, 0.8], MarginForm::Uniform01).unwrap().value;
        assert!((c - 0.3).abs() < 1e-15);
        let logistic = model(Family::Logistic { theta: 2.0, dim: 2 });
        let e = (-1.0f64).exp();
        let c = logistic.copula(&[e, e], MarginForm::Uniform01).unwrap().value;
        assert!((c - (-(2.0f64).sqrt()).exp()).abs() < 1e-15);
    }

    #[test]
    fn copula_margin_forms_agree() {
        let m = model(Family::Logistic { theta: 1.8, dim: 2 });
        let x = [0.7, 1.6];
        let u: Vec<f64> = x.iter().map(|v: &f64| (-v).exp()).collect();
        let uniform = m.copula(&u, MarginForm::Uniform01).unwrap().value;
        let frechet = m.copula(&[1.0 / x[0], 1.0 / x[1]], MarginForm::UnitFrechet).unwrap().value;
        let gumbel = m.copula(&[-x[0].ln(), -x[1].ln()], MarginForm::Gumbel).unwrap().value;
        let weibull = m.copula(&[-x[0], -x[1]], MarginForm::ReverseExponential).unwrap().value;
        for v in [frechet, gumbel, weibull] {
            assert!((v - uniform).abs() < 1e-14);
        }
    }

    #[test]
    fn copula_domain_errors() {
        let m = model(Family::Independence { dim: 2 });
        assert!(matches!(m.copula(&[0.0, 0.5], MarginForm::Uniform01), Err(Error::Domain(_))));
        assert!(matches!(m.copula(&[1.5, 0.5], MarginForm::Uniform01), Err(Error::Domain(_))));
        assert!(matches!(m.copula(&[-1.0, 0.5], MarginForm::UnitFrechet), Err(Error::Domain(_))));
        assert!(matches!(m.copula(&[0.0, -0.5], MarginForm::ReverseExponential), Err(Error::Domain(_))));
    }

    #[test]
    fn max_stability_examples() {
        let m = model(Family::Logistic { theta: 1.7, dim: 2 });
        assert_eq!(m.max_stability_defect(&[0.4, 0.9], 1).unwrap(), 0.0);
        assert!(m.max_stability_defect(&[0.4, 0.9], 7).unwrap() <= 1e-10);
        let mo = model(Family::MarshallOlkin { alpha: 0.3, beta: 0.9 });
        assert!(mo.max_stability_defect(&[0.2, 0.5], 3).unwrap() <= 1e-10);
        assert!(mo.max_stability_defect(&[0.2, 0.5], 0).is_err());
    }

    #[test]
    fn ell_from_spectral_examples() {
        let perfect = SpectralAtoms::new(2, vec![(vec![0.5, 0.5], 2.0)]).unwrap();
        assert_eq!(ell_from_spectral(&perfect, &pt(&[1.0, 1.0])).unwrap(), 1.0);
        let indep = SpectralAtoms::new(2, vec![(vec![1.0, 0.0], 1.0), (vec![0.0, 1.0], 1.0)]).unwrap();
        assert_eq!(ell_from_spectral(&indep, &pt(&[2.0, 3.0])).unwrap(), 5.0);
        let two = SpectralAtoms::new(2, vec![(vec![0.75, 0.25], 1.0), (vec![0.25, 0.75], 1.0)]).unwrap();
        assert_eq!(ell_from_spectral(&two, &pt(&[1.0, 1.0])).unwrap(), 1.5);
    }

    #[test]
    fn spectral_constraints_rejected() {
        let bad_mass = SpectralAtoms::new(2, vec![(vec![0.5, 0.5], 1.0)]);
        assert!(matches!(bad_mass, Err(Error::SpectralConstraint(_))));
        let bad_moment = SpectralAtoms::new(2, vec![(vec![1.0, 0.0], 1.5), (vec![0.0, 1.0], 0.5)]);
        assert!(matches!(bad_moment, Err(Error::SpectralConstraint(_))));
        let negative = SpectralAtoms::new(2, vec![(vec![0.5, 0.5], -2.0)]);
        assert!(negative.is_err());
    }

    #[test]
    fn margin_restrict_logistic() {
        let m = model(Family::Logistic { theta: 2.5, dim: 3 });
        let r = m.margin_restrict(&[0, 1]).unwrap();
        assert_eq!(r.dim(), 2);
        for (a, b) in [(0.3, 1.2), (2.0, 0.1), (1.0, 1.0)] {
            let full = m.ell(&pt(&[a, b, 0.0])).unwrap().value;
            let sub = r.ell(&pt(&[a, b])).unwrap().value;
            assert!((full - sub).abs() < 1e-14);
        }
        let single = m.margin_restrict(&[2]).unwrap();
        assert_eq!(single.ell(&pt(&[0.37])).unwrap().value, 0.37);
        assert!(matches!(m.margin_restrict(&[]), Err(Error::InvalidSubset(3))));
        assert!(m.margin_restrict(&[3]).is_err());
    }

    #[test]
    fn margin_restrict_discrete_brute_force() {
        let atoms = SpectralAtoms::new(
            3,
            vec![
                (vec![1.0 / 3.0; 3], 1.5),
                (vec![1.0, 0.0, 0.0], 0.5),
                (vec![0.0, 0.5, 0.5], 1.0),
            ],
        )
        .unwrap();
        let m = DependenceModel::discrete(atoms);
        for subset in [vec![0, 1], vec![1, 2], vec![0, 2], vec![1]] {
            let r = m.margin_restrict(&subset).unwrap();
            if let Backend::Discrete(a) = r.backend() {
                assert!((a.total_mass() - subset.len() as f64).abs() < 1e-12);
            } else {
                panic!("expected discrete margin");
            }
            for i in 0..=10 {
                for k in 0..=10 {
                    let mut full = vec![0.0; 3];
                    let mut sub = Vec::new();
                    for (pos, &j) in subset.iter().enumerate() {
                        let v = if pos == 0 { i as f64 * 0.3 } else { k as f64 * 0.2 };
                        full[j] = v;
                        sub.push(v);
                    }
                    let a = m.ell(&pt(&full)).unwrap().value;
                    let b = r.ell(&pt(&sub)).unwrap().value;
                    assert!((a - b).abs() < 1e-13, "{subset:?} {full:?}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn restricted_discrete_merges_profiles() {
        // (1,0,0) and (1/2,0,1/2) both project to the vertex of the {0,1} face.
        let atoms = SpectralAtoms::new(
            3,
            vec![
                (vec![1.0, 0.0, 0.0], 0.5),
                (vec![0.5, 0.0, 0.5], 1.0),
                (vec![0.0, 1.0, 0.0], 1.0),
                (vec![0.0, 0.0, 1.0], 0.5),
            ],
        )
        .unwrap();
        let r = atoms.restrict(&[0, 1]).unwrap();
        assert_eq!(r.atoms().len(), 2);
    }

    #[test]
    fn vertex_center_dichotomy() {
        let indep = SpectralAtoms::independence(4);
        for a in indep.atoms() {
            assert_eq!(a.weight.weights().iter().filter(|&&w| w == 1.0).count(), 1);
        }
        let perfect = SpectralAtoms::perfect_dependence(4);
        assert_eq!(perfect.atoms().len(), 1);
        assert_eq!(perfect.atoms()[0].weight.weights(), &[0.25; 4]);
    }
}
