//! Closed-form stable tail dependence functions.
//!
//! Bivariate families follow the convention `D(t) = l(1 - t, t)`.

use crate::dependence::{Point, SpectralAtoms, MAX_SUBSET_DIMENSION};
use crate::error::{Error, Result};
use crate::normal::std_normal_cdf;

/// Above this shape the logistic norm is evaluated relative to `max(x)`.
const LOGISTIC_SCALED_THRESHOLD: f64 = 50.0;

/// Parametric max-stable families with an explicit `l`.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Gumbel-Hougaard: `(x_1^theta + ... + x_d^theta)^(1/theta)`, `theta` in `[1, inf]`.
    Logistic { theta: f64, dim: usize },
    /// `x + y - min(alpha x, beta y)`.
    MarshallOlkin { alpha: f64, beta: f64 },
    /// `sum_c p(c) max(x_j / p_j : j in c)`.
    MultivariateMarshallOlkin(MultivariateMOSpec),
    /// `D(t) = 1 - theta t (1 - t)`.
    TawnMixture { theta: f64 },
    /// `D(t) = 1 - alpha beta t (1 - t) / (alpha (1 - t) + beta t)`.
    RationalQuadratic { alpha: f64, beta: f64 },
    Schlather { rho: f64 },
    HuslerReiss { a: f64 },
    /// Dirichlet model with `alpha = (1, 1)`: `x + y - xy / (x + y)`.
    DirichletBivariate11,
    Independence { dim: usize },
    PerfectDependence { dim: usize },
    /// Random-indicator transform of a bivariate base:
    /// `l(alpha x, beta y) + (1 - alpha) x + (1 - beta) y`.
    AsymmetricThinning { base: Box<Family>, alpha: f64, beta: f64 },
}

fn unit_interval_open_left(v: f64) -> bool {
    v > 0.0 && v <= 1.0
}

fn param_error(msg: String) -> Error {
    Error::InvalidParameter(msg)
}

impl Family {
    pub fn validate(&self) -> Result<()> {
        match self {
            Family::Logistic { theta, dim } => {
                if !(*theta >= 1.0) {
                    return Err(param_error(format!("logistic theta {theta} must be >= 1")));
                }
                if *dim == 0 {
                    return Err(param_error("dimension must be positive".into()));
                }
            }
            Family::MarshallOlkin { alpha, beta } | Family::RationalQuadratic { alpha, beta } => {
                if !unit_interval_open_left(*alpha) || !unit_interval_open_left(*beta) {
                    return Err(param_error(format!(
                        "alpha={alpha}, beta={beta} must lie in (0, 1]"
                    )));
                }
            }
            Family::MultivariateMarshallOlkin(_) | Family::DirichletBivariate11 => {}
            Family::TawnMixture { theta } => {
                if !(0.0..=1.0).contains(theta) {
                    return Err(param_error(format!("mixture theta {theta} must lie in [0, 1]")));
                }
            }
            Family::Schlather { rho } => {
                if !(*rho > -1.0 && *rho < 1.0) {
                    return Err(param_error(format!("rho {rho} must lie in (-1, 1)")));
                }
            }
            Family::HuslerReiss { a } => {
                if !(*a > 0.0) || !a.is_finite() {
                    return Err(param_error(format!("Husler-Reiss a={a} must be positive")));
                }
            }
            Family::Independence { dim } | Family::PerfectDependence { dim } => {
                if *dim == 0 {
                    return Err(param_error("dimension must be positive".into()));
                }
            }
            Family::AsymmetricThinning { base, alpha, beta } => {
                base.validate()?;
                if base.dim() != 2 {
                    return Err(param_error("indicator thinning needs a bivariate base".into()));
                }
                if !(0.0..=1.0).contains(alpha) || !(0.0..=1.0).contains(beta) {
                    return Err(param_error(format!(
                        "thinning alpha={alpha}, beta={beta} must lie in [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Family::Logistic { dim, .. }
            | Family::Independence { dim }
            | Family::PerfectDependence { dim } => *dim,
            Family::MultivariateMarshallOlkin(spec) => spec.dim(),
            _ => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Logistic { .. } => "logistic",
            Family::MarshallOlkin { .. } => "marshall_olkin",
            Family::MultivariateMarshallOlkin(_) => "mv_marshall_olkin",
            Family::TawnMixture { .. } => "tawn_mixture",
            Family::RationalQuadratic { .. } => "rational",
            Family::Schlather { .. } => "schlather",
            Family::HuslerReiss { .. } => "husler_reiss",
            Family::DirichletBivariate11 => "dirichlet11",
            Family::Independence { .. } => "independence",
            Family::PerfectDependence { .. } => "perfect_dependence",
            Family::AsymmetricThinning { .. } => "thinned",
        }
    }

    /// `l(x)`; the caller guarantees a validated family and a matching dimension.
    pub fn ell(&self, x: &[f64]) -> f64 {
        match self {
            Family::Logistic { theta, .. } => logistic_value(*theta, x),
            Family::MarshallOlkin { alpha, beta } => x[0] + x[1] - (alpha * x[0]).min(beta * x[1]),
            Family::MultivariateMarshallOlkin(spec) => spec.ell(x),
            Family::TawnMixture { theta } => thinned_dirichlet(*theta, *theta, x[0], x[1]),
            Family::RationalQuadratic { alpha, beta } => {
                thinned_dirichlet(*alpha, *beta, x[0], x[1])
            }
            Family::Schlather { rho } => schlather_value(*rho, x[0], x[1]),
            Family::HuslerReiss { a } => husler_reiss_value(*a, x[0], x[1]),
            Family::DirichletBivariate11 => thinned_dirichlet(1.0, 1.0, x[0], x[1]),
            Family::Independence { .. } => x.iter().sum(),
            Family::PerfectDependence { .. } => x.iter().copied().fold(0.0, f64::max),
            Family::AsymmetricThinning { base, alpha, beta } => {
                base.ell(&[alpha * x[0], beta * x[1]]) + (1.0 - alpha) * x[0] + (1.0 - beta) * x[1]
            }
        }
    }

    /// The spectral measure, when it is discrete.
    pub fn spectral_atoms(&self) -> Option<SpectralAtoms> {
        match self {
            Family::Independence { dim } => Some(SpectralAtoms::independence(*dim)),
            Family::PerfectDependence { dim } => Some(SpectralAtoms::perfect_dependence(*dim)),
            Family::Logistic { theta, dim } if *theta == 1.0 => {
                Some(SpectralAtoms::independence(*dim))
            }
            Family::Logistic { theta, dim } if theta.is_infinite() => {
                Some(SpectralAtoms::perfect_dependence(*dim))
            }
            Family::MultivariateMarshallOlkin(spec) => spec.to_spectral_atoms().ok(),
            Family::MarshallOlkin { alpha, beta } => Family::AsymmetricThinning {
                base: Box::new(Family::PerfectDependence { dim: 2 }),
                alpha: *alpha,
                beta: *beta,
            }
            .spectral_atoms(),
            Family::AsymmetricThinning { base, alpha, beta } => {
                let base = base.spectral_atoms()?;
                let mut atoms = Vec::new();
                for atom in base.atoms() {
                    let w = atom.weight.weights();
                    let r = alpha * w[0] + beta * w[1];
                    if r > 0.0 {
                        atoms.push((vec![alpha * w[0] / r, beta * w[1] / r], atom.mass * r));
                    }
                }
                if *alpha < 1.0 {
                    atoms.push((vec![1.0, 0.0], 1.0 - alpha));
                }
                if *beta < 1.0 {
                    atoms.push((vec![0.0, 1.0], 1.0 - beta));
                }
                SpectralAtoms::new(2, atoms).ok()
            }
            _ => None,
        }
    }

    /// Closed-form family of a margin, when the family is closed under it.
    /// `idx` is sorted, distinct and in range.
    pub fn restrict(&self, idx: &[usize]) -> Option<Family> {
        let k = idx.len();
        if k == self.dim() {
            return Some(self.clone());
        }
        if k == 1 {
            return Some(Family::Independence { dim: 1 });
        }
        match self {
            Family::Logistic { theta, .. } => Some(Family::Logistic { theta: *theta, dim: k }),
            Family::Independence { .. } => Some(Family::Independence { dim: k }),
            Family::PerfectDependence { .. } => Some(Family::PerfectDependence { dim: k }),
            _ => None,
        }
    }
}

fn logistic_value(theta: f64, x: &[f64]) -> f64 {
    let m = x.iter().copied().fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    if theta == 1.0 {
        return x.iter().sum();
    }
    if theta.is_infinite() {
        return m;
    }
    if theta > LOGISTIC_SCALED_THRESHOLD {
        // max(x) * exp(log(sum (x_j / max)^theta) / theta); the sum lies in [1, d].
        let s: f64 = x.iter().map(|v| (theta * (v / m).ln()).exp()).sum();
        return m * (s.ln() / theta).exp();
    }
    x.iter().map(|v| v.powf(theta)).sum::<f64>().powf(1.0 / theta)
}

/// Dirichlet(1,1) model after the random-indicator transform:
/// `x + y - alpha beta x y / (alpha x + beta y)`.
fn thinned_dirichlet(alpha: f64, beta: f64, x: f64, y: f64) -> f64 {
    let denom = alpha * x + beta * y;
    if denom == 0.0 {
        return x + y;
    }
    x + y - alpha * beta * x * y / denom
}

fn schlather_value(rho: f64, x: f64, y: f64) -> f64 {
    let s = x + y;
    if s == 0.0 {
        return 0.0;
    }
    let inner = 1.0 - 2.0 * (rho + 1.0) * x * y / (s * s);
    0.5 * s * (1.0 + inner.max(0.0).sqrt())
}

fn husler_reiss_value(a: f64, x: f64, y: f64) -> f64 {
    if x == 0.0 || y == 0.0 {
        return x + y;
    }
    let log_ratio = (x / y).ln();
    x * std_normal_cdf(a / 2.0 + log_ratio / a) + y * std_normal_cdf(a / 2.0 - log_ratio / a)
}

fn check_pair(x: f64, y: f64) -> Result<()> {
    Point::new(vec![x, y]).map(|_| ())
}

fn check_t(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t={t} must lie in [0, 1]")));
    }
    Ok(())
}

fn validated(f: Family) -> Result<Family> {
    f.validate()?;
    Ok(f)
}

/// Logistic (Gumbel-Hougaard) `l`; `theta = inf` gives `max(x)`.
pub fn logistic_ell(theta: f64, x: &Point) -> Result<f64> {
    validated(Family::Logistic { theta, dim: x.dim() })?;
    Ok(logistic_value(theta, x.coords()))
}

pub fn marshall_olkin_ell(alpha: f64, beta: f64, x: f64, y: f64) -> Result<f64> {
    check_pair(x, y)?;
    Ok(validated(Family::MarshallOlkin { alpha, beta })?.ell(&[x, y]))
}

/// Marshall-Olkin copula `min(u^(1-alpha) v, u v^(1-beta))`.
pub fn marshall_olkin_copula(alpha: f64, beta: f64, u: f64, v: f64) -> Result<f64> {
    validated(Family::MarshallOlkin { alpha, beta })?;
    if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("({u}, {v}) outside the unit square")));
    }
    Ok((u.powf(1.0 - alpha) * v).min(u * v.powf(1.0 - beta)))
}

pub fn mv_marshall_olkin_ell(spec: &MultivariateMOSpec, x: &Point) -> Result<f64> {
    if x.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), got: x.dim() });
    }
    Ok(spec.ell(x.coords()))
}

pub fn schlather_ell(rho: f64, x: f64, y: f64) -> Result<f64> {
    check_pair(x, y)?;
    Ok(validated(Family::Schlather { rho })?.ell(&[x, y]))
}

/// `D_rho(t) = (1 + sqrt(1 - 2 (rho + 1) t (1 - t))) / 2`.
pub fn schlather_d(rho: f64, t: f64) -> Result<f64> {
    check_t(t)?;
    validated(Family::Schlather { rho })?;
    Ok(0.5 * (1.0 + (1.0 - 2.0 * (rho + 1.0) * t * (1.0 - t)).max(0.0).sqrt()))
}

pub fn husler_reiss_ell(a: f64, x: f64, y: f64) -> Result<f64> {
    check_pair(x, y)?;
    Ok(validated(Family::HuslerReiss { a })?.ell(&[x, y]))
}

pub fn tawn_mixture_d(theta: f64, t: f64) -> Result<f64> {
    check_t(t)?;
    validated(Family::TawnMixture { theta })?;
    Ok(1.0 - theta * t * (1.0 - t))
}

pub fn rational_d(alpha: f64, beta: f64, t: f64) -> Result<f64> {
    check_t(t)?;
    validated(Family::RationalQuadratic { alpha, beta })?;
    Ok(1.0 - alpha * beta * t * (1.0 - t) / (alpha * (1.0 - t) + beta * t))
}

pub fn dirichlet11_ell(x: f64, y: f64) -> Result<f64> {
    check_pair(x, y)?;
    Ok(thinned_dirichlet(1.0, 1.0, x, y))
}

/// Law of the active coordinate set in the multivariate Marshall-Olkin model:
/// probabilities `p(c)` on non-empty subsets `c`, stored as bit masks.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateMOSpec {
    dim: usize,
    entries: Vec<(u32, f64)>,
    marginals: Vec<f64>,
}

impl MultivariateMOSpec {
    /// `subsets` holds 0-based coordinate lists with their probabilities.
    pub fn new(dim: usize, subsets: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        if dim == 0 || dim > MAX_SUBSET_DIMENSION {
            return Err(param_error(format!("dimension {dim} must lie in 1..=25")));
        }
        let mut entries: Vec<(u32, f64)> = Vec::with_capacity(subsets.len());
        for (subset, p) in subsets {
            let mask = subset_mask(&subset, dim)?;
            if mask == 0 {
                return Err(param_error("subsets must be non-empty".into()));
            }
            if !(p >= 0.0) || !p.is_finite() {
                return Err(param_error(format!("subset probability {p} is negative")));
            }
            if entries.iter().any(|(m, _)| *m == mask) {
                return Err(param_error(format!("subset {subset:?} listed twice")));
            }
            entries.push((mask, p));
        }
        let total: f64 = entries.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(param_error(format!("subset probabilities sum to {total}, expected 1")));
        }
        let marginals = marginal_probabilities(dim, &entries);
        if let Some(j) = marginals.iter().position(|&p| p <= 0.0) {
            return Err(param_error(format!("coordinate {j} is never active")));
        }
        Ok(MultivariateMOSpec { dim, entries, marginals })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `p_j = sum over c containing j of p(c)`.
    pub fn marginals(&self) -> &[f64] {
        &self.marginals
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    fn ell(&self, x: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(mask, p)| {
                let m = (0..self.dim)
                    .filter(|j| mask & (1 << j) != 0)
                    .map(|j| x[j] / self.marginals[j])
                    .fold(0.0, f64::max);
                p * m
            })
            .sum()
    }

    /// Induced discrete spectral measure: one atom per subset with `p(c) > 0`.
    pub fn to_spectral_atoms(&self) -> Result<SpectralAtoms> {
        let atoms = self
            .entries
            .iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|&(mask, p)| {
                let a: Vec<f64> = (0..self.dim)
                    .map(|j| if mask & (1 << j) != 0 { 1.0 / self.marginals[j] } else { 0.0 })
                    .collect();
                let r: f64 = a.iter().sum();
                (a.iter().map(|v| v / r).collect(), p * r)
            })
            .collect();
        SpectralAtoms::new(self.dim, atoms)
    }
}

pub(crate) fn subset_mask(subset: &[usize], dim: usize) -> Result<u32> {
    let mut mask = 0u32;
    for &j in subset {
        if j >= dim {
            return Err(Error::InvalidSubset(dim));
        }
        mask |= 1 << j;
    }
    Ok(mask)
}

pub(crate) fn marginal_probabilities(dim: usize, entries: &[(u32, f64)]) -> Vec<f64> {
    (0..dim)
        .map(|j| entries.iter().filter(|(m, _)| m & (1 << j) != 0).map(|(_, p)| p).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn logistic_examples() {
        assert_eq!(logistic_ell(1.0, &pt(&[1.0, 2.0, 3.0])).unwrap(), 6.0);
        assert_eq!(logistic_ell(f64::INFINITY, &pt(&[1.0, 2.0, 3.0])).unwrap(), 3.0);
        assert!((logistic_ell(2.0, &pt(&[3.0, 4.0])).unwrap() - 5.0).abs() < 1e-15);
        assert!(logistic_ell(0.9, &pt(&[1.0, 1.0])).is_err());
    }

    #[test]
    fn logistic_large_theta_is_stable() {
        let v = logistic_ell(1e6, &pt(&[1e200, 5e199, 1e-300])).unwrap();
        assert!(v.is_finite());
        assert!((v / 1e200 - 1.0).abs() < 1e-6);
        // both branches agree around the switch
        let x = [0.8, 1.1, 0.95];
        let below = logistic_value(LOGISTIC_SCALED_THRESHOLD, &x);
        let scaled = {
            let m = 1.1f64;
            let s: f64 = x.iter().map(|v| (LOGISTIC_SCALED_THRESHOLD * (v / m).ln()).exp()).sum();
            m * (s.ln() / LOGISTIC_SCALED_THRESHOLD).exp()
        };
        assert!((below - scaled).abs() < 1e-13);
    }

    #[test]
    fn marshall_olkin_examples() {
        assert_eq!(marshall_olkin_ell(1.0, 1.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(marshall_olkin_ell(0.5, 1.0, 1.0, 1.0).unwrap(), 1.5);
        let tiny = marshall_olkin_ell(1e-12, 1e-12, 0.7, 1.3).unwrap();
        assert!((tiny - 2.0).abs() < 1e-11);
        assert!(marshall_olkin_ell(0.0, 0.5, 1.0, 1.0).is_err());
        assert!(marshall_olkin_ell(0.5, 1.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn marshall_olkin_copula_matches_ell() {
        for &(a, b) in &[(0.3, 0.9), (1.0, 0.2), (0.6, 0.6)] {
            for i in 1..10 {
                for k in 1..10 {
                    let (u, v) = (i as f64 / 10.0, k as f64 / 10.0);
                    let from_ell = (-marshall_olkin_ell(a, b, -u.ln(), -v.ln()).unwrap()).exp();
                    let direct = marshall_olkin_copula(a, b, u, v).unwrap();
                    assert!((from_ell - direct).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn mv_marshall_olkin_examples() {
        let singles = MultivariateMOSpec::new(2, vec![(vec![0], 0.5), (vec![1], 0.5)]).unwrap();
        assert!((mv_marshall_olkin_ell(&singles, &pt(&[0.4, 1.1])).unwrap() - 1.5).abs() < 1e-15);
        let joint = MultivariateMOSpec::new(2, vec![(vec![0, 1], 1.0)]).unwrap();
        assert_eq!(mv_marshall_olkin_ell(&joint, &pt(&[0.4, 1.1])).unwrap(), 1.1);
        let mixed = MultivariateMOSpec::new(3, vec![(vec![0, 1], 0.5), (vec![2], 0.5)]).unwrap();
        let x = pt(&[0.3, 0.8, 1.7]);
        assert!((mv_marshall_olkin_ell(&mixed, &x).unwrap() - (0.8 + 1.7)).abs() < 1e-15);
    }

    #[test]
    fn mv_marshall_olkin_errors() {
        assert!(MultivariateMOSpec::new(3, vec![(vec![0, 1], 1.0)]).is_err());
        assert!(MultivariateMOSpec::new(2, vec![(vec![0], 0.5), (vec![1], 0.4)]).is_err());
        assert!(MultivariateMOSpec::new(2, vec![(vec![], 0.5), (vec![0, 1], 0.5)]).is_err());
        assert!(MultivariateMOSpec::new(2, vec![(vec![0, 2], 1.0)]).is_err());
    }

    #[test]
    fn mv_marshall_olkin_matches_spectral_atoms() {
        let spec = MultivariateMOSpec::new(
            3,
            vec![(vec![0, 1, 2], 0.2), (vec![0, 1], 0.3), (vec![2], 0.25), (vec![0], 0.25)],
        )
        .unwrap();
        let atoms = spec.to_spectral_atoms().unwrap();
        for i in 0..6 {
            for k in 0..6 {
                let x = pt(&[i as f64 * 0.4, k as f64 * 0.3, 1.0 - 0.1 * k as f64]);
                let a = mv_marshall_olkin_ell(&spec, &x).unwrap();
                let b = atoms.ell(&x).unwrap();
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn schlather_examples() {
        assert!((schlather_ell(-1.0 + 1e-15, 1.0, 1.0).unwrap() - 2.0).abs() < 1e-7);
        let expected = 1.0 + 0.5f64.sqrt();
        assert!((schlather_ell(0.0, 1.0, 1.0).unwrap() - expected).abs() < 1e-15);
        for rho in [-0.9, 0.0, 0.7] {
            assert_eq!(schlather_ell(rho, 2.3, 0.0).unwrap(), 2.3);
        }
        assert!(schlather_ell(1.0, 1.0, 1.0).is_err());
        assert!(schlather_ell(-1.0, 1.0, 1.0).is_err());
        assert!((schlather_d(0.3, 0.5).unwrap() - 0.5 * (1.0 + (1.0f64 - 0.65).sqrt())).abs() < 1e-15);
    }

    #[test]
    fn husler_reiss_examples() {
        for a in [0.2, 1.0, 3.5] {
            let v = husler_reiss_ell(a, 1.0, 1.0).unwrap();
            assert!((v - 2.0 * std_normal_cdf(a / 2.0)).abs() < 1e-15);
        }
        assert!((husler_reiss_ell(1e8, 1.0, 2.0).unwrap() - 3.0).abs() < 1e-6);
        assert!((husler_reiss_ell(1e-8, 1.0, 2.0).unwrap() - 2.0).abs() < 1e-6);
        assert!(husler_reiss_ell(0.0, 1.0, 1.0).is_err());
        assert_eq!(husler_reiss_ell(0.7, 0.0, 1.25).unwrap(), 1.25);
    }

    #[test]
    fn pickands_polynomial_examples() {
        for t in [0.0, 0.13, 0.5, 0.9, 1.0] {
            assert_eq!(tawn_mixture_d(0.0, t).unwrap(), 1.0);
        }
        assert_eq!(rational_d(1.0, 1.0, 0.5).unwrap(), 0.75);
        assert!((dirichlet11_ell(1.0, 1.0).unwrap() - 1.5).abs() < 1e-15);
        for (a, b) in [(0.3, 0.8), (1.0, 0.5)] {
            assert_eq!(rational_d(a, b, 0.0).unwrap(), 1.0);
            assert_eq!(rational_d(a, b, 1.0).unwrap(), 1.0);
        }
        assert!(tawn_mixture_d(1.2, 0.5).is_err());
        assert!(rational_d(0.0, 0.5, 0.5).is_err());
        assert!(tawn_mixture_d(0.5, 1.5).is_err());
    }

    /// `l(x, y) = 2 int_0^1 max(x v, y (1 - v)) dv` by composite Simpson on
    /// both sides of the kink `v* = y / (x + y)`.
    fn dirichlet11_quadrature(x: f64, y: f64) -> f64 {
        let f = |v: f64| (x * v).max(y * (1.0 - v));
        let simpson = |a: f64, b: f64| {
            let n = 2000;
            let h = (b - a) / n as f64;
            let mut s = f(a) + f(b);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * f(a + i as f64 * h);
            }
            s * h / 3.0
        };
        let kink = y / (x + y);
        2.0 * (simpson(0.0, kink) + simpson(kink, 1.0))
    }

    #[test]
    fn dirichlet11_matches_quadrature() {
        for &(x, y) in &[(1.0, 1.0), (0.3, 1.7), (2.5, 0.4), (1e-3, 1.0)] {
            let q = dirichlet11_quadrature(x, y);
            assert!((dirichlet11_ell(x, y).unwrap() - q).abs() < 1e-12, "({x},{y})");
        }
    }

    #[test]
    fn rational_is_thinned_dirichlet() {
        for (a, b) in [(0.3, 0.9), (0.7, 0.2)] {
            let f = Family::RationalQuadratic { alpha: a, beta: b };
            for i in 0..=20 {
                let t = i as f64 / 20.0;
                let via_ell = f.ell(&[1.0 - t, t]);
                assert!((via_ell - rational_d(a, b, t).unwrap()).abs() < 1e-15);
                let via_transform = dirichlet11_ell(a * (1.0 - t), b * t).unwrap()
                    + (1.0 - a) * (1.0 - t)
                    + (1.0 - b) * t;
                assert!((via_ell - via_transform).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn limit_coherence() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let mut worst: f64 = 0.0;
        for &t in &grid {
            let (x, y) = (1.0 - t, t);
            worst = worst.max((logistic_ell(1e6, &pt(&[x, y])).unwrap() - x.max(y)).abs());
            worst = worst.max((husler_reiss_ell(1e-8, x, y).unwrap() - x.max(y)).abs());
            worst = worst.max((husler_reiss_ell(1e8, x, y).unwrap() - (x + y)).abs());
            worst = worst.max((tawn_mixture_d(0.0, t).unwrap() - 1.0).abs());
        }
        assert!(worst <= 1e-6, "{worst}");
    }

    #[test]
    fn thinning_of_max_is_marshall_olkin() {
        let thinned = Family::AsymmetricThinning {
            base: Box::new(Family::PerfectDependence { dim: 2 }),
            alpha: 0.3,
            beta: 0.9,
        };
        let mo = Family::MarshallOlkin { alpha: 0.3, beta: 0.9 };
        for i in 0..=12 {
            for k in 0..=12 {
                let x = [i as f64 * 0.25, k as f64 * 0.2];
                assert!((thinned.ell(&x) - mo.ell(&x)).abs() < 1e-15);
            }
        }
        let a = thinned.spectral_atoms().unwrap();
        let b = mo.spectral_atoms().unwrap();
        assert_eq!(a, b);
        assert!((a.ell(&pt(&[1.3, 0.6])).unwrap() - mo.ell(&[1.3, 0.6])).abs() < 1e-15);
    }

    #[test]
    fn spectral_atoms_reproduce_closed_forms() {
        let cases = [
            Family::MarshallOlkin { alpha: 0.4, beta: 0.75 },
            Family::MarshallOlkin { alpha: 1.0, beta: 1.0 },
            Family::Logistic { theta: 1.0, dim: 3 },
            Family::Logistic { theta: f64::INFINITY, dim: 3 },
            Family::AsymmetricThinning {
                base: Box::new(Family::Independence { dim: 2 }),
                alpha: 0.5,
                beta: 0.2,
            },
        ];
        for f in cases {
            let atoms = f.spectral_atoms().unwrap();
            let d = f.dim();
            for i in 0..8 {
                let x: Vec<f64> = (0..d).map(|j| ((i * 7 + j * 3) % 11) as f64 * 0.2).collect();
                let diff = (atoms.ell(&pt(&x)).unwrap() - f.ell(&x)).abs();
                assert!(diff < 1e-14, "{} at {x:?}", f.name());
            }
        }
    }

    proptest! {
        #[test]
        fn logistic_nonincreasing_in_theta(
            x in prop::collection::vec(0.0f64..5.0, 2..5),
            t1 in 1.0f64..80.0,
            dt in 0.0f64..40.0,
        ) {
            let p = Point::new(x).unwrap();
            let a = logistic_ell(t1, &p).unwrap();
            let b = logistic_ell(t1 + dt, &p).unwrap();
            prop_assert!(b <= a * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn asymmetric_thinning_tail_copula(
            alpha in 0.0f64..=1.0, beta in 0.0f64..=1.0,
            x in 0.0f64..3.0, y in 0.0f64..3.0,
        ) {
            // R_{alpha,beta}(x, y) = R(alpha x, beta y), R = x + y - l
            for base in [Family::Schlather { rho: 0.4 }, Family::HuslerReiss { a: 1.3 }, Family::DirichletBivariate11] {
                let thinned = Family::AsymmetricThinning { base: Box::new(base.clone()), alpha, beta };
                let lhs = x + y - thinned.ell(&[x, y]);
                let rhs = alpha * x + beta * y - base.ell(&[alpha * x, beta * y]);
                prop_assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }
}
