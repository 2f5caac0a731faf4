//! Limits of the number `N(t)` of coordinates exceeding their `1 - 1/t`
//! quantiles: `t P[N(t) >= k] -> int w_(d-k+1) dH`.

use serde::Serialize;

use crate::closed_forms::Family;
use crate::dependence::{Backend, DependenceModel, Estimate, McConfig, Point, SpectralAtoms, MAX_SUBSET_DIMENSION};
use crate::error::{Error, Result};
use crate::generators::Generator;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientReport {
    pub dim: usize,
    /// `exact` or `monte_carlo`.
    pub method: &'static str,
    /// `l(1, ..., 1)`.
    pub extremal_coefficient: Estimate,
    /// Entry `k - 1` is `lim t P[N(t) >= k] = int w_(d-k+1) dH`.
    pub multi_failure: Vec<Estimate>,
    /// `R(1, ..., 1)`.
    pub all_fail: Estimate,
    /// Entry `k - 1` is `lim E[N(t) - k | N(t) >= k]` for `k = 1..d-1`;
    /// `None` when `multi_failure[k]` vanishes.
    pub excess_mean: Vec<Option<Estimate>>,
}

impl CoefficientReport {
    fn from_exact(dim: usize, mf: Vec<f64>) -> Self {
        let excess_mean = (1..dim)
            .map(|k| {
                let den = mf[k - 1];
                (den > 0.0).then(|| Estimate::exact(mf[k..].iter().sum::<f64>() / den))
            })
            .collect();
        CoefficientReport {
            dim,
            method: "exact",
            extremal_coefficient: Estimate::exact(mf[0]),
            all_fail: Estimate::exact(mf[dim - 1]),
            multi_failure: mf.into_iter().map(Estimate::exact).collect(),
            excess_mean,
        }
    }

    /// `lim t P[N(t) >= k]` for `k = 1..=d`.
    pub fn multi_failure(&self, k: usize) -> Result<Estimate> {
        if k == 0 || k > self.dim {
            return Err(Error::InvalidParameter(format!("k = {k} must lie in 1..={}", self.dim)));
        }
        Ok(self.multi_failure[k - 1])
    }

    /// `lim E[N(t) - k | N(t) >= k]` for `k = 1..d-1`.
    pub fn excess_mean(&self, k: usize) -> Result<Option<Estimate>> {
        if k == 0 || k >= self.dim {
            return Err(Error::InvalidParameter(format!("k = {k} must lie in 1..{}", self.dim)));
        }
        Ok(self.excess_mean[k - 1])
    }
}

/// `int w_(d-k+1) dH` for `k = 1..=d` from the atoms.
pub fn multi_failure_discrete(atoms: &SpectralAtoms) -> Vec<f64> {
    let d = atoms.dim();
    let mut out = vec![0.0; d];
    let mut w = vec![0.0; d];
    for atom in atoms.atoms() {
        w.copy_from_slice(atom.weight.weights());
        w.sort_by(|a, b| b.total_cmp(a));
        for (o, v) in out.iter_mut().zip(&w) {
            *o += atom.mass * v;
        }
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `int w_(d-k+1) dH` from `l` alone: the `m`-th smallest of `w` is
/// `sum_{|T| >= m} (-1)^{|T|-m} C(|T|-1, m-1) max_T w`, and
/// `int max_T w dH = l(1_T)`.
pub fn multi_failure_from_ell<F: Fn(&[f64]) -> f64>(dim: usize, ell: F) -> Result<Vec<f64>> {
    if dim > MAX_SUBSET_DIMENSION {
        return Err(Error::DimensionOverflow(dim));
    }
    let full = (1u32 << dim) - 1;
    let mut by_size = vec![Vec::new(); dim + 1];
    let mut x = vec![0.0; dim];
    for mask in 1..=full {
        for (j, v) in x.iter_mut().enumerate() {
            *v = if mask & (1 << j) != 0 { 1.0 } else { 0.0 };
        }
        by_size[mask.count_ones() as usize].push(ell(&x));
    }
    let sums: Vec<f64> = by_size.iter().map(|v| v.iter().sum()).collect();
    Ok((1..=dim)
        .map(|k| {
            let m = dim - k + 1;
            (m..=dim)
                .map(|s| {
                    let sign = if (s - m).is_multiple_of(2) { 1.0 } else { -1.0 };
                    sign * binomial(s - 1, m - 1) * sums[s]
                })
                .sum()
        })
        .collect())
}

pub fn report_discrete(atoms: &SpectralAtoms) -> CoefficientReport {
    CoefficientReport::from_exact(atoms.dim(), multi_failure_discrete(atoms))
}

pub fn report_family(family: &Family) -> Result<CoefficientReport> {
    if let Some(atoms) = family.spectral_atoms() {
        return Ok(report_discrete(&atoms));
    }
    let mf = multi_failure_from_ell(family.dim(), |x| family.ell(x))?;
    Ok(CoefficientReport::from_exact(family.dim(), mf))
}

/// Monte Carlo report from the order statistics of `A^+`: since
/// `A_j^+ = R W_j`, `int w_(j) dH = E[(A^+)_(j)]`.
pub fn report_generator(gen: &Generator, cfg: &McConfig) -> Result<CoefficientReport> {
    let model = DependenceModel::generator(gen.clone(), *cfg)?;
    report(&model)
}

fn sorted_positive(a: &[f64], buf: &mut Vec<f64>) {
    buf.clear();
    buf.extend(a.iter().map(|v| v.max(0.0)));
    buf.sort_by(|a, b| b.total_cmp(a));
}

pub fn report(model: &DependenceModel) -> Result<CoefficientReport> {
    match model.backend() {
        Backend::ClosedForm(f) => report_family(f),
        Backend::Discrete(atoms) => Ok(report_discrete(atoms)),
        Backend::Generator(g) => {
            let d = model.dim();
            let mf = g.estimate(d, |a, out| {
                let mut buf = Vec::with_capacity(d);
                sorted_positive(a, &mut buf);
                out.copy_from_slice(&buf);
            })?;
            // Ratio standard errors by the delta method: the mean of
            // N_i - rho D_i over the same draws, divided by D.
            let ratios: Vec<Option<f64>> = (1..d)
                .map(|k| {
                    let den = mf[k - 1].value;
                    (den > 0.0).then(|| mf[k..].iter().map(|e| e.value).sum::<f64>() / den)
                })
                .collect();
            let rho: Vec<f64> = ratios.iter().map(|r| r.unwrap_or(0.0)).collect();
            let lin = if d > 1 {
                g.estimate(d - 1, |a, out| {
                    let mut buf = Vec::with_capacity(d);
                    sorted_positive(a, &mut buf);
                    for k in 1..d {
                        let tail: f64 = buf[k..].iter().sum();
                        out[k - 1] = tail - rho[k - 1] * buf[k - 1];
                    }
                })?
            } else {
                Vec::new()
            };
            let excess_mean = ratios
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    r.map(|value| Estimate { value, se: lin[i].se.map(|s| s / mf[i].value) })
                })
                .collect();
            Ok(CoefficientReport {
                dim: d,
                method: "monte_carlo",
                extremal_coefficient: mf[0],
                all_fail: mf[d - 1],
                multi_failure: mf,
                excess_mean,
            })
        }
    }
}

/// `l(1, ..., 1)` straight from the model, for cross-checks.
pub fn extremal_coefficient(model: &DependenceModel) -> Result<Estimate> {
    model.ell(&Point::ones(model.dim()))
}
