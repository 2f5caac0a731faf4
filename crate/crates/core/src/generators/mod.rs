//! Generators for the construction `X = (A_1 Z, ..., A_d Z)`.
//!
//! A [`Generator`] samples the random vector `A`, rescaled so that
//! `E[max(A_j, 0)] = 1` for every coordinate. The max-stable attractor of `X`
//! then has unit Fréchet margins and stable tail dependence function
//! `l_A(x) = E[max(x_1 A_1, ..., x_d A_d, 0)]`.
//!
//! Every kind here has a closed-form standardization constant, recorded in
//! [`Generator::standardization`].

pub mod mc;
mod ops;

mod thinning;

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::closed_forms::Family;
use crate::dependence::{DependenceModel, SpectralAtoms};
use crate::error::{Error, Result};

pub use ops::{
    attractor_cdf, face_mass, mc_ell, profile_atoms, sample_a, sample_profiles, ProfileSample,
    SampleBatch,
};
pub use thinning::{
    indicator_thin, indicator_thin_pair, indicator_thin_pair_generator, indicator_thin_symmetric,
    IndicatorLaw,
};

/// Uniform on the grid `(k + 1/2) 2^-52` inside `(0, 1)`. The grid is closed
/// under `u -> 1 - u` and that subtraction is exact, so antithetic pairs are
/// exactly symmetric.
#[inline]
pub(crate) fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Support size of the counting variables of [`GeneratorKind::RandomSumExponential`].
pub const RANDOM_SUM_SUPPORT: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorKind {
    /// `A = a` almost surely.
    Constant { a: Vec<f64> },
    /// `P[A = a_k] = p_k`.
    DiscreteAtoms { atoms: Vec<Vec<f64>>, probs: Vec<f64>, cumulative: Vec<f64> },
    /// `A'_j = p_j^{-1} I_j A_j` with the indicator vector independent of `A`.
    Indicators { base: Box<Generator>, law: IndicatorLaw },
    /// `A_j = Z_j / alpha_j`, `Z_j ~ Gamma(alpha_j, 1)` independent.
    DirichletGamma { alpha: Vec<f64>, gammas: Vec<Gamma<f64>> },
    /// `A = sqrt(2 pi) (S, T)` with `(S, T)` standard bivariate normal.
    GaussianPair { rho: f64 },
    /// `A = exp(sigma S - sigma^2 / 2)`, `B = exp(sigma T - sigma^2 / 2)`.
    LognormalPair { rho: f64, sigma: f64 },
    /// `A = E_1 + ... + E_J`, `B = F_1 + ... + F_K`, unit exponentials,
    /// `J` and `K` on `{0, 1, 2, 3}` with unit mean.
    RandomSumExponential { j_law: [f64; RANDOM_SUM_SUPPORT], k_law: [f64; RANDOM_SUM_SUPPORT] },
    /// `A_j = V_j / Gamma(1 - 1/theta)` with `V_j` i.i.d. Fréchet(theta).
    /// Its attractor is the logistic model with the same `theta`.
    FrechetStable { theta: f64, dim: usize },
    /// Coordinates `coords` of `base`.
    Marginal { base: Box<Generator>, coords: Vec<usize> },
}

/// A standardized sampler of the random vector `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    dim: usize,
    kind: GeneratorKind,
    scale: Vec<f64>,
}

fn invalid(msg: String) -> Error {
    Error::InvalidParameter(msg)
}

fn check_probability_vector(probs: &[f64], what: &str) -> Result<Vec<f64>> {
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in probs {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(invalid(format!("{what}: probability {p} is negative")));
        }
        acc += p;
        cumulative.push(acc);
    }
    if (acc - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("{what}: probabilities sum to {acc}, expected 1")));
    }
    Ok(cumulative)
}

/// Index drawn from a cumulative distribution by inversion.
#[inline]
fn invert_cumulative(cumulative: &[f64], u: f64) -> usize {
    cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1)
}

impl Generator {
    fn with_scale(kind: GeneratorKind, dim: usize, scale: Vec<f64>) -> Self {
        Generator { dim, kind, scale }
    }

    pub fn constant(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(invalid("constant generator needs at least one coordinate".into()));
        }
        if let Some(v) = a.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(invalid(format!("constant coordinate {v} must be positive")));
        }
        let scale = a.iter().map(|v| 1.0 / v).collect();
        let dim = a.len();
        Ok(Self::with_scale(GeneratorKind::Constant { a }, dim, scale))
    }

    pub fn discrete_atoms(atoms: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != probs.len() {
            return Err(invalid("need one probability per atom".into()));
        }
        let dim = atoms[0].len();
        if dim == 0 || atoms.iter().any(|a| a.len() != dim) {
            return Err(invalid("atoms must share a positive dimension".into()));
        }
        if atoms.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("atom coordinates must be finite".into()));
        }
        if probs.iter().any(|&p| !(p > 0.0 && p < 1.0)) && probs.len() > 1 {
            return Err(invalid("atom probabilities must lie in (0, 1)".into()));
        }
        let cumulative = check_probability_vector(&probs, "discrete atoms")?;
        let mut scale = Vec::with_capacity(dim);
        for j in 0..dim {
            let c: f64 = atoms.iter().zip(&probs).map(|(a, p)| p * a[j].max(0.0)).sum();
            if c <= 0.0 {
                return Err(invalid(format!("coordinate {j} has E[A_j^+] = 0")));
            }
            scale.push(1.0 / c);
        }
        Ok(Self::with_scale(GeneratorKind::DiscreteAtoms { atoms, probs, cumulative }, dim, scale))
    }

    pub fn indicators(base: Generator, law: IndicatorLaw) -> Result<Self> {
        if base.dim != law.dim() {
            return Err(Error::DimensionMismatch { expected: base.dim, got: law.dim() });
        }
        let scale = law.marginals().iter().map(|p| 1.0 / p).collect();
        let dim = base.dim;
        Ok(Self::with_scale(GeneratorKind::Indicators { base: Box::new(base), law }, dim, scale))
    }

    pub fn dirichlet_gamma(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(invalid("Dirichlet generator needs at least one shape".into()));
        }
        let mut gammas = Vec::with_capacity(alpha.len());
        for &a in &alpha {
            if !(a > 0.0) || !a.is_finite() {
                return Err(invalid(format!("Gamma shape {a} must be positive")));
            }
            gammas.push(Gamma::new(a, 1.0).map_err(|e| invalid(e.to_string()))?);
        }
        let scale = alpha.iter().map(|a| 1.0 / a).collect();
        let dim = alpha.len();
        Ok(Self::with_scale(GeneratorKind::DirichletGamma { alpha, gammas }, dim, scale))
    }

    pub fn gaussian_pair(rho: f64) -> Result<Self> {
        check_rho(rho)?;
        let s = (2.0 * PI).sqrt();
        Ok(Self::with_scale(GeneratorKind::GaussianPair { rho }, 2, vec![s, s]))
    }

    pub fn lognormal_pair(rho: f64, sigma: f64) -> Result<Self> {
        check_rho(rho)?;
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(invalid(format!("sigma {sigma} must be positive")));
        }
        Ok(Self::with_scale(GeneratorKind::LognormalPair { rho, sigma }, 2, vec![1.0, 1.0]))
    }

    pub fn random_sum_exponential(
        j_law: [f64; RANDOM_SUM_SUPPORT],
        k_law: [f64; RANDOM_SUM_SUPPORT],
    ) -> Result<Self> {
        for (name, law) in [("J", &j_law), ("K", &k_law)] {
            check_probability_vector(law, name)?;
            let mean: f64 = law.iter().enumerate().map(|(i, p)| i as f64 * p).sum();
            if (mean - 1.0).abs() > 1e-12 {
                return Err(invalid(format!("{name} has mean {mean}, expected 1")));
            }
        }
        Ok(Self::with_scale(
            GeneratorKind::RandomSumExponential { j_law, k_law },
            2,
            vec![1.0, 1.0],
        ))
    }

    pub fn frechet_stable(theta: f64, dim: usize) -> Result<Self> {
        if !(theta > 1.0) || !theta.is_finite() {
            return Err(invalid(format!("Fréchet shape {theta} must exceed 1")));
        }
        if dim == 0 {
            return Err(invalid("dimension must be positive".into()));
        }
        let c = 1.0 / libm::tgamma(1.0 - 1.0 / theta);
        Ok(Self::with_scale(GeneratorKind::FrechetStable { theta, dim }, dim, vec![c; dim]))
    }

    /// Independence: `A` is `e_j / p_j` with probability `p_j`, so only one
    /// coordinate is positive at a time.
    pub fn independence(probs: Vec<f64>) -> Result<Self> {
        let d = probs.len();
        if d == 1 {
            return Self::constant(vec![1.0]);
        }
        let atoms = (0..d).map(|j| (0..d).map(|i| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Self::discrete_atoms(atoms, probs)
    }

    /// `A = d w_k` with probability `m_k / d`, whose profile atoms are the
    /// given spectral atoms.
    pub fn from_spectral(atoms: &SpectralAtoms) -> Result<Self> {
        let d = atoms.dim() as f64;
        let rows = atoms.atoms().iter().map(|a| a.weight.weights().iter().map(|w| d * w).collect()).collect();
        let probs: Vec<f64> = atoms.atoms().iter().map(|a| a.mass / d).collect();
        let total: f64 = probs.iter().sum();
        Self::discrete_atoms(rows, probs.iter().map(|p| p / total).collect())
    }

    /// A generator whose attractor has the given closed-form `l`, when the
    /// family has a known stochastic representation.
    pub fn for_family(family: &Family) -> Option<Generator> {
        let g = match family {
            Family::Independence { dim } => Self::independence(vec![1.0 / *dim as f64; *dim]),
            Family::PerfectDependence { dim } => Self::constant(vec![1.0; *dim]),
            Family::Logistic { theta, dim } if *theta == 1.0 => {
                Self::independence(vec![1.0 / *dim as f64; *dim])
            }
            Family::Logistic { theta, dim } if theta.is_infinite() => Self::constant(vec![1.0; *dim]),
            Family::Logistic { theta, dim } => Self::frechet_stable(*theta, *dim),
            Family::Schlather { rho } => Self::gaussian_pair(*rho),
            Family::HuslerReiss { a } => Self::lognormal_pair(0.0, a / std::f64::consts::SQRT_2),
            Family::DirichletBivariate11 => Self::dirichlet_gamma(vec![1.0, 1.0]),
            Family::MarshallOlkin { alpha, beta } => {
                thinned_pair(Self::constant(vec![1.0, 1.0]).ok()?, *alpha, *beta)
            }
            Family::TawnMixture { theta } => {
                return Self::for_family(&Family::RationalQuadratic { alpha: *theta, beta: *theta })
            }
            Family::RationalQuadratic { alpha, beta } => {
                if *alpha == 0.0 || *beta == 0.0 {
                    return Self::for_family(&Family::Independence { dim: 2 });
                }
                thinned_pair(Self::dirichlet_gamma(vec![1.0, 1.0]).ok()?, *alpha, *beta)
            }
            Family::MultivariateMarshallOlkin(spec) => {
                let subsets = spec
                    .entries()
                    .iter()
                    .map(|&(mask, p)| ((0..spec.dim()).filter(|j| mask & (1 << j) != 0).collect(), p))
                    .collect();
                Self::indicators(
                    Self::constant(vec![1.0; spec.dim()]).ok()?,
                    IndicatorLaw::new(spec.dim(), subsets).ok()?,
                )
            }
            Family::AsymmetricThinning { base, alpha, beta } => {
                if *alpha == 0.0 || *beta == 0.0 {
                    return None;
                }
                thinned_pair(Self::for_family(base)?, *alpha, *beta)
            }
        };
        g.ok()
    }

    /// Restriction to the coordinates `coords`; the per-coordinate
    /// standardization is inherited.
    pub fn marginal(base: Generator, coords: Vec<usize>) -> Result<Self> {
        let coords = crate::dependence::normalize_subset(&coords, base.dim)?;
        if coords.len() == base.dim {
            return Ok(base);
        }
        let dim = coords.len();
        Ok(Self::with_scale(
            GeneratorKind::Marginal { base: Box::new(base), coords },
            dim,
            vec![1.0; dim],
        ))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &GeneratorKind {
        &self.kind
    }

    /// Multipliers applied to the raw draws so that `E[A_j^+] = 1`.
    pub fn standardization(&self) -> &[f64] {
        &self.scale
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            GeneratorKind::Constant { .. } => "constant",
            GeneratorKind::DiscreteAtoms { .. } => "discrete_atoms",
            GeneratorKind::Indicators { .. } => "indicators",
            GeneratorKind::DirichletGamma { .. } => "dirichlet_gamma",
            GeneratorKind::GaussianPair { .. } => "gaussian_pair",
            GeneratorKind::LognormalPair { .. } => "lognormal_pair",
            GeneratorKind::RandomSumExponential { .. } => "random_sum_exponential",
            GeneratorKind::FrechetStable { .. } => "frechet_stable",
            GeneratorKind::Marginal { .. } => "marginal",
        }
    }

    pub fn supports_antithetic(&self) -> bool {
        match &self.kind {
            GeneratorKind::DirichletGamma { .. } => false,
            GeneratorKind::Indicators { base, .. } | GeneratorKind::Marginal { base, .. } => {
                base.supports_antithetic()
            }
            _ => true,
        }
    }

    /// One standardized draw of `A` into `out`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        self.fill_raw(rng, out);
        for (o, s) in out.iter_mut().zip(&self.scale) {
            *o *= s;
        }
    }

    /// An antithetic pair of standardized draws. Each member has the law of `A`.
    ///
    /// Panics for kinds without antithetic support; see [`Self::supports_antithetic`].
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R, a: &mut [f64], b: &mut [f64]) {
        self.fill_raw_pair(rng, a, b);
        for ((x, y), s) in a.iter_mut().zip(b.iter_mut()).zip(&self.scale) {
            *x *= s;
            *y *= s;
        }
    }

    fn fill_raw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match &self.kind {
            GeneratorKind::Constant { a } => out.copy_from_slice(a),
            GeneratorKind::DiscreteAtoms { atoms, cumulative, .. } => {
                let k = invert_cumulative(cumulative, open01(rng));
                out.copy_from_slice(&atoms[k]);
            }
            GeneratorKind::Indicators { base, law } => {
                base.sample(rng, out);
                law.apply(law.draw(open01(rng)), out);
            }
            GeneratorKind::DirichletGamma { gammas, .. } => {
                for (o, g) in out.iter_mut().zip(gammas) {
                    *o = g.sample(rng);
                }
            }
            GeneratorKind::GaussianPair { rho } => {
                let (s, t) = normal_pair(rng, *rho);
                out[0] = s;
                out[1] = t;
            }
            GeneratorKind::LognormalPair { rho, sigma } => {
                let (s, t) = normal_pair(rng, *rho);
                out[0] = lognormal(*sigma, s);
                out[1] = lognormal(*sigma, t);
            }
            GeneratorKind::RandomSumExponential { j_law, k_law } => {
                let u: [f64; 2 + 2 * (RANDOM_SUM_SUPPORT - 1)] = std::array::from_fn(|_| open01(rng));
                let (x, y) = random_sums(j_law, k_law, &u, false);
                out[0] = x;
                out[1] = y;
            }
            GeneratorKind::FrechetStable { theta, .. } => {
                for o in out.iter_mut() {
                    *o = frechet(*theta, open01(rng));
                }
            }
            GeneratorKind::Marginal { base, coords } => {
                let mut full = vec![0.0; base.dim];
                base.sample(rng, &mut full);
                for (o, &j) in out.iter_mut().zip(coords) {
                    *o = full[j];
                }
            }
        }
    }

    fn fill_raw_pair<R: Rng + ?Sized>(&self, rng: &mut R, a: &mut [f64], b: &mut [f64]) {
        match &self.kind {
            GeneratorKind::Constant { a: c } => {
                a.copy_from_slice(c);
                b.copy_from_slice(c);
            }
            GeneratorKind::DiscreteAtoms { atoms, cumulative, .. } => {
                let u = open01(rng);
                a.copy_from_slice(&atoms[invert_cumulative(cumulative, u)]);
                b.copy_from_slice(&atoms[invert_cumulative(cumulative, 1.0 - u)]);
            }
            GeneratorKind::Indicators { base, law } => {
                base.sample_pair(rng, a, b);
                let u = open01(rng);
                law.apply(law.draw(u), a);
                law.apply(law.draw(1.0 - u), b);
            }
            GeneratorKind::GaussianPair { rho } => {
                let (s, t) = normal_pair(rng, *rho);
                a.copy_from_slice(&[s, t]);
                b.copy_from_slice(&[-s, -t]);
            }
            GeneratorKind::LognormalPair { rho, sigma } => {
                let (s, t) = normal_pair(rng, *rho);
                a.copy_from_slice(&[lognormal(*sigma, s), lognormal(*sigma, t)]);
                b.copy_from_slice(&[lognormal(*sigma, -s), lognormal(*sigma, -t)]);
            }
            GeneratorKind::RandomSumExponential { j_law, k_law } => {
                let u: [f64; 2 + 2 * (RANDOM_SUM_SUPPORT - 1)] = std::array::from_fn(|_| open01(rng));
                let (x, y) = random_sums(j_law, k_law, &u, false);
                let (xb, yb) = random_sums(j_law, k_law, &u, true);
                a.copy_from_slice(&[x, y]);
                b.copy_from_slice(&[xb, yb]);
            }
            GeneratorKind::FrechetStable { theta, .. } => {
                for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                    let u = open01(rng);
                    *x = frechet(*theta, u);
                    *y = frechet(*theta, 1.0 - u);
                }
            }
            GeneratorKind::Marginal { base, coords } => {
                let mut fa = vec![0.0; base.dim];
                let mut fb = vec![0.0; base.dim];
                base.sample_pair(rng, &mut fa, &mut fb);
                for (k, &j) in coords.iter().enumerate() {
                    a[k] = fa[j];
                    b[k] = fb[j];
                }
            }
            GeneratorKind::DirichletGamma { .. } => {
                panic!("antithetic sampling is not available for the dirichlet_gamma generator")
            }
        }
    }

    /// The finite law of the standardized `A` as `(row, probability)` pairs,
    /// when `A` is discrete.
    pub fn discrete_law(&self) -> Option<Vec<(Vec<f64>, f64)>> {
        let raw: Vec<(Vec<f64>, f64)> = match &self.kind {
            GeneratorKind::Constant { a } => vec![(a.clone(), 1.0)],
            GeneratorKind::DiscreteAtoms { atoms, probs, .. } => {
                atoms.iter().cloned().zip(probs.iter().copied()).collect()
            }
            GeneratorKind::Indicators { base, law } => {
                let mut out = Vec::new();
                for (row, p) in base.discrete_law()? {
                    for &(mask, q) in law.entries() {
                        if q > 0.0 {
                            let mut r = row.clone();
                            law.apply(mask, &mut r);
                            out.push((r, p * q));
                        }
                    }
                }
                out
            }
            GeneratorKind::Marginal { base, coords } => base
                .discrete_law()?
                .into_iter()
                .map(|(row, p)| (coords.iter().map(|&j| row[j]).collect(), p))
                .collect(),
            _ => return None,
        };
        Some(
            raw.into_iter()
                .map(|(row, p)| (row.iter().zip(&self.scale).map(|(v, s)| v * s).collect(), p))
                .collect(),
        )
    }

    /// `l_A(x) = sum_k p_k max_j (x_j a_kj)^+` for discrete generators.
    pub fn exact_ell(&self, x: &[f64]) -> Option<f64> {
        let law = self.discrete_law()?;
        Some(
            law.iter()
                .map(|(row, p)| p * crate::dependence::positive_weighted_max(x, row))
                .sum(),
        )
    }

    /// The closed-form family whose `l` equals `l_A`, when one is known.
    pub fn closed_form_partner(&self) -> Option<Family> {
        match &self.kind {
            GeneratorKind::Constant { a } => Some(Family::PerfectDependence { dim: a.len() }),
            GeneratorKind::GaussianPair { rho } => Some(Family::Schlather { rho: *rho }),
            GeneratorKind::LognormalPair { rho, sigma } => Some(Family::HuslerReiss {
                a: sigma * (2.0 * (1.0 - rho)).sqrt(),
            }),
            GeneratorKind::DirichletGamma { alpha, .. } if alpha == &[1.0, 1.0] => {
                Some(Family::DirichletBivariate11)
            }
            GeneratorKind::RandomSumExponential { j_law, k_law }
                if j_law == &[0.0, 1.0, 0.0, 0.0] && k_law == j_law =>
            {
                Some(Family::DirichletBivariate11)
            }
            GeneratorKind::FrechetStable { theta, dim } => {
                Some(Family::Logistic { theta: *theta, dim: *dim })
            }
            GeneratorKind::Indicators { base, law } => {
                let inner = base.closed_form_partner()?;
                if self.dim == 2 {
                    let (alpha, beta) = law.pair_thinning()?;
                    if matches!(inner, Family::PerfectDependence { .. }) && alpha > 0.0 && beta > 0.0 {
                        return Some(Family::MarshallOlkin { alpha, beta });
                    }
                    return Some(Family::AsymmetricThinning { base: Box::new(inner), alpha, beta });
                }
                None
            }
            GeneratorKind::Marginal { base, coords } => {
                base.closed_form_partner()?.restrict(coords)
            }
            _ => None,
        }
    }

    /// Exact model with the same `l`, from the discrete law or a closed form.
    pub fn exact_model(&self) -> Option<DependenceModel> {
        if self.discrete_law().is_some() {
            return profile_atoms(self).ok().map(DependenceModel::discrete);
        }
        self.closed_form_partner().and_then(|f| DependenceModel::closed_form(f).ok())
    }

    /// Spectral atoms of a discrete generator; see [`profile_atoms`].
    pub fn spectral_atoms(&self) -> Option<SpectralAtoms> {
        profile_atoms(self).ok()
    }
}

/// Bivariate indicator thinning with coefficients `(alpha, beta)`, using the
/// law with `P[I_1 = I_2 = 0] = 0`: `r = 1 / (1/alpha + 1/beta - 1)`.
fn thinned_pair(base: Generator, alpha: f64, beta: f64) -> Result<Generator> {
    if !(alpha > 0.0 && alpha <= 1.0 && beta > 0.0 && beta <= 1.0) {
        return Err(invalid(format!("thinning alpha={alpha}, beta={beta} must lie in (0, 1]")));
    }
    let r = 1.0 / (1.0 / alpha + 1.0 / beta - 1.0);
    let (p, q) = ((r / alpha).min(1.0), (r / beta).min(1.0));
    indicator_thin_pair_generator(base, p, q, r.min(p).min(q))
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > -1.0 && rho < 1.0) {
        return Err(invalid(format!("correlation {rho} must lie in (-1, 1)")));
    }
    Ok(())
}

#[inline]
fn normal_pair<R: Rng + ?Sized>(rng: &mut R, rho: f64) -> (f64, f64) {
    let s: f64 = StandardNormal.sample(rng);
    let e: f64 = StandardNormal.sample(rng);
    (s, rho * s + (1.0 - rho * rho).sqrt() * e)
}

#[inline]
fn lognormal(sigma: f64, z: f64) -> f64 {
    (sigma * z - 0.5 * sigma * sigma).exp()
}

/// Fréchet(theta) by inversion: `(-log u)^(-1/theta)`.
#[inline]
fn frechet(theta: f64, u: f64) -> f64 {
    (-u.ln()).powf(-1.0 / theta)
}

/// Random sums of unit exponentials driven by the uniforms `u`:
/// `u[0]`, `u[1]` pick `J`, `K`; the rest feed the exponentials by inversion.
fn random_sums(
    j_law: &[f64; RANDOM_SUM_SUPPORT],
    k_law: &[f64; RANDOM_SUM_SUPPORT],
    u: &[f64],
    mirror: bool,
) -> (f64, f64) {
    let m = |v: f64| if mirror { 1.0 - v } else { v };
    let cum = |law: &[f64; RANDOM_SUM_SUPPORT]| {
        let mut c = [0.0; RANDOM_SUM_SUPPORT];
        let mut acc = 0.0;
        for (ci, p) in c.iter_mut().zip(law) {
            acc += p;
            *ci = acc;
        }
        c
    };
    let j = invert_cumulative(&cum(j_law), m(u[0]));
    let k = invert_cumulative(&cum(k_law), m(u[1]));
    let n = RANDOM_SUM_SUPPORT - 1;
    let a: f64 = u[2..2 + j].iter().map(|&v| -m(v).ln()).sum();
    let b: f64 = u[2 + n..2 + n + k].iter().map(|&v| -m(v).ln()).sum();
    (a, b)
}
