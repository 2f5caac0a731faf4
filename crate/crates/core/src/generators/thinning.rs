//! Random indicator thinning: `A'_j = p_j^{-1} I_j A_j`.

use super::Generator;
use crate::closed_forms::Family;
use crate::dependence::{DependenceModel, McConfig};
use crate::error::{Error, Result};

/// Joint law of the indicator vector `(I_1, ..., I_d)`, as probabilities of
/// the sets of switched-on coordinates. The empty set is allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorLaw {
    dim: usize,
    entries: Vec<(u32, f64)>,
    cumulative: Vec<f64>,
    marginals: Vec<f64>,
}

impl IndicatorLaw {
    /// `subsets` holds 0-based coordinate sets with their probabilities.
    pub fn new(dim: usize, subsets: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        if dim == 0 || dim > 31 {
            return Err(Error::InvalidParameter(format!("indicator dimension {dim} must lie in 1..=31")));
        }
        if subsets.is_empty() {
            return Err(Error::InvalidParameter("indicator law needs at least one subset".into()));
        }
        let mut entries: Vec<(u32, f64)> = Vec::with_capacity(subsets.len());
        for (set, p) in subsets {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::InvalidParameter(format!("indicator probability {p} is negative")));
            }
            let mut mask = 0u32;
            for j in set {
                if j >= dim {
                    return Err(Error::InvalidSubset(dim));
                }
                mask |= 1 << j;
            }
            if entries.iter().any(|(m, _)| *m == mask) {
                return Err(Error::InvalidParameter("indicator subsets must be distinct".into()));
            }
            entries.push((mask, p));
        }
        let total: f64 = entries.iter().map(|e| e.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("indicator probabilities sum to {total}, expected 1")));
        }
        let marginals: Vec<f64> = (0..dim)
            .map(|j| entries.iter().filter(|(m, _)| m & (1 << j) != 0).map(|e| e.1).sum())
            .collect();
        if let Some(j) = marginals.iter().position(|&p| p <= 0.0) {
            return Err(Error::InvalidParameter(format!("coordinate {j} is never switched on")));
        }
        let mut acc = 0.0;
        let cumulative = entries
            .iter()
            .map(|e| {
                acc += e.1;
                acc
            })
            .collect();
        Ok(IndicatorLaw { dim, entries, cumulative, marginals })
    }

    /// Bivariate law with `P[I_1 = 1] = p`, `P[I_2 = 1] = q`, `P[I_1 = I_2 = 1] = r`.
    pub fn from_pair(p: f64, q: f64, r: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("q", q)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must lie in (0, 1]")));
            }
        }
        let lo = (p + q - 1.0).max(0.0);
        let hi = p.min(q);
        if !(r >= lo - 1e-15 && r <= hi + 1e-15) {
            return Err(Error::InvalidParameter(format!(
                "joint probability {r} must lie in [{lo}, {hi}]"
            )));
        }
        let r = r.clamp(lo, hi);
        Self::new(
            2,
            vec![
                (vec![0, 1], r),
                (vec![0], p - r),
                (vec![1], q - r),
                (vec![], (1.0 - p - q + r).max(0.0)),
            ],
        )
    }

    /// Exchangeable bivariate law whose thinning has `alpha = beta = theta`.
    pub fn symmetric(theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidParameter(format!("theta = {theta} must lie in [0, 1]")));
        }
        let p = 1.0 / (2.0 - theta);
        Self::from_pair(p, p, theta * p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(mask, probability)` pairs; bit `j` of the mask is `I_j`.
    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    /// `p_j = P[I_j = 1]`.
    pub fn marginals(&self) -> &[f64] {
        &self.marginals
    }

    /// `(alpha, beta) = (r/p, r/q)` of a bivariate law.
    pub fn pair_thinning(&self) -> Option<(f64, f64)> {
        if self.dim != 2 {
            return None;
        }
        let r: f64 = self.entries.iter().filter(|(m, _)| *m == 0b11).map(|e| e.1).sum();
        Some((r / self.marginals[0], r / self.marginals[1]))
    }

    pub(crate) fn draw(&self, u: f64) -> u32 {
        let k = self.cumulative.partition_point(|&c| c <= u).min(self.entries.len() - 1);
        self.entries[k].0
    }

    /// Zero the coordinates that are switched off.
    pub(crate) fn apply(&self, mask: u32, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            if mask & (1 << j) == 0 {
                *o = 0.0;
            }
        }
    }
}

fn thinning_coefficients(p: f64, q: f64, r: f64) -> Result<(f64, f64)> {
    IndicatorLaw::from_pair(p, q, r)?
        .pair_thinning()
        .ok_or_else(|| Error::InvalidParameter("bivariate law expected".into()))
}

/// Closed bivariate path: `l(alpha x, beta y) + (1 - alpha) x + (1 - beta) y`
/// with `alpha = r/p`, `beta = r/q`.
pub fn indicator_thin_pair(base: Family, p: f64, q: f64, r: f64) -> Result<DependenceModel> {
    let (alpha, beta) = thinning_coefficients(p, q, r)?;
    thinned_family(base, alpha, beta)
}

/// Closed path with `alpha = beta = theta`.
pub fn indicator_thin_symmetric(base: Family, theta: f64) -> Result<DependenceModel> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidParameter(format!("theta = {theta} must lie in [0, 1]")));
    }
    thinned_family(base, theta, theta)
}

fn thinned_family(base: Family, alpha: f64, beta: f64) -> Result<DependenceModel> {
    if base.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: base.dim() });
    }
    DependenceModel::closed_form(Family::AsymmetricThinning { base: Box::new(base), alpha, beta })
}

/// Bivariate thinned generator.
pub fn indicator_thin_pair_generator(base: Generator, p: f64, q: f64, r: f64) -> Result<Generator> {
    Generator::indicators(base, IndicatorLaw::from_pair(p, q, r)?)
}

/// Generator-backed path for any dimension.
pub fn indicator_thin(base: Generator, law: IndicatorLaw, mc: McConfig) -> Result<DependenceModel> {
    DependenceModel::generator(Generator::indicators(base, law)?, mc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::marshall_olkin_ell;
    use crate::dependence::Point;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn pair_law_validation() {
        assert!(IndicatorLaw::from_pair(0.0, 0.5, 0.0).is_err());
        assert!(IndicatorLaw::from_pair(0.5, 0.4, 0.45).is_err());
        assert!(IndicatorLaw::from_pair(0.8, 0.7, 0.4).is_err());
        let law = IndicatorLaw::from_pair(0.8, 0.7, 0.5).unwrap();
        assert_eq!(law.marginals(), &[0.8, 0.7]);
        assert!(IndicatorLaw::new(2, vec![(vec![0], 1.0)]).is_err());
        assert!(IndicatorLaw::new(2, vec![(vec![0, 1], 0.5), (vec![1, 0], 0.5)]).is_err());
    }

    #[test]
    fn symmetric_law_has_theta() {
        for theta in [0.0, 0.25, 1.0] {
            let (a, b) = IndicatorLaw::symmetric(theta).unwrap().pair_thinning().unwrap();
            assert!((a - theta).abs() < 1e-15 && (b - theta).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_extremes() {
        let base = Family::Logistic { theta: 2.5, dim: 2 };
        let same = indicator_thin_symmetric(base.clone(), 1.0).unwrap();
        let indep = indicator_thin_symmetric(base.clone(), 0.0).unwrap();
        let plain = DependenceModel::closed_form(base).unwrap();
        for (x, y) in [(0.3, 1.2), (1.0, 1.0), (2.0, 0.1)] {
            let p = pt(&[x, y]);
            assert!((same.ell(&p).unwrap().value - plain.ell(&p).unwrap().value).abs() < 1e-15);
            assert!((indep.ell(&p).unwrap().value - (x + y)).abs() < 1e-15);
        }
    }

    #[test]
    fn thinned_max_is_marshall_olkin() {
        let m = indicator_thin_symmetric(Family::PerfectDependence { dim: 2 }, 0.3).unwrap();
        let asym = thinned_family(Family::PerfectDependence { dim: 2 }, 0.3, 0.9).unwrap();
        for (x, y) in [(0.3, 1.2), (1.0, 1.0), (2.0, 0.1)] {
            let p = pt(&[x, y]);
            assert!((m.ell(&p).unwrap().value - marshall_olkin_ell(0.3, 0.3, x, y).unwrap()).abs() < 1e-15);
            assert!((asym.ell(&p).unwrap().value - marshall_olkin_ell(0.3, 0.9, x, y).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn generator_and_closed_paths_agree() {
        let closed = indicator_thin_pair(Family::DirichletBivariate11, 0.7, 0.6, 0.45).unwrap();
        let g = indicator_thin(
            Generator::dirichlet_gamma(vec![1.0, 1.0]).unwrap(),
            IndicatorLaw::from_pair(0.7, 0.6, 0.45).unwrap(),
            McConfig::new(400_000, 2024),
        )
        .unwrap();
        let pts: Vec<Point> = [(0.2, 1.0), (1.0, 1.0), (1.7, 0.4)].iter().map(|&(x, y)| pt(&[x, y])).collect();
        let mc = g.ell_batch(&pts).unwrap();
        for (p, e) in pts.iter().zip(mc) {
            let exact = closed.ell(p).unwrap().value;
            assert!((e.value - exact).abs() <= 3.0 * e.se.unwrap(), "{p:?}: {e:?} vs {exact}");
        }
    }
}
