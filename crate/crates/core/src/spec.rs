//! Versioned JSON model documents.
//!
//! ```json
//! {"version": 1, "backend": "generator", "family": "lognormal_pair",
//!  "params": {"rho": 0.5, "sigma": 1.2}, "mc": {"samples": 100000, "seed": 7}}
//! ```
//!
//! Coordinate subsets are written 1-based. See the README for every family
//! and its parameters.

use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use crate::closed_forms::{Family, MultivariateMOSpec};
use crate::dependence::{CachePolicy, DependenceModel, McConfig, SpectralAtoms, DEFAULT_SAMPLES, DEFAULT_STREAMS};
use crate::error::{Error, Result};
use crate::generators::{Generator, IndicatorLaw, RANDOM_SUM_SUPPORT};

pub const SPEC_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    ClosedForm,
    Discrete,
    Generator,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    pub streams: Option<usize>,
    #[serde(default)]
    pub antithetic: bool,
    #[serde(default)]
    pub cache: CachePolicy,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

impl Default for McSpec {
    fn default() -> Self {
        McSpec { samples: DEFAULT_SAMPLES, seed: 0, streams: None, antithetic: false, cache: CachePolicy::default() }
    }
}

impl McSpec {
    pub fn config(&self) -> McConfig {
        McConfig {
            samples: self.samples,
            seed: self.seed,
            streams: self.streams.unwrap_or(DEFAULT_STREAMS.min(self.samples.max(1))),
            antithetic: self.antithetic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub weight: Vec<f64>,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub version: u32,
    pub backend: BackendKind,
    #[serde(default)]
    pub family: Option<String>,
    #[serde(default)]
    pub dimension: Option<usize>,
    #[serde(default)]
    pub params: Value,
    #[serde(default)]
    pub atoms: Option<Vec<AtomSpec>>,
    #[serde(default)]
    pub mc: McSpec,
}

fn spec_err(msg: impl Into<String>) -> Error {
    Error::Spec(msg.into())
}

/// Parameter errors found while building are reported as spec errors.
fn as_spec(e: Error) -> Error {
    match e {
        Error::Spec(_) => e,
        other => Error::Spec(other.to_string()),
    }
}

impl ModelSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_str(text).map_err(|e| spec_err(format!("malformed model spec: {e}")))?;
        if spec.version != SPEC_VERSION {
            return Err(spec_err(format!("unsupported spec version {}, expected {SPEC_VERSION}", spec.version)));
        }
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| spec_err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn family_name(&self) -> Result<&str> {
        self.family.as_deref().ok_or_else(|| spec_err("missing \"family\""))
    }

    pub fn build(&self) -> Result<DependenceModel> {
        let model = match self.backend {
            BackendKind::ClosedForm => DependenceModel::closed_form(self.family()?),
            BackendKind::Discrete => Ok(DependenceModel::discrete(self.spectral_atoms()?)),
            BackendKind::Generator => {
                DependenceModel::generator_with_policy(self.generator()?, self.mc.config(), self.mc.cache)
            }
        }
        .map_err(as_spec)?;
        if let Some(d) = self.dimension {
            if d != model.dim() {
                return Err(spec_err(format!("\"dimension\" is {d} but the model has dimension {}", model.dim())));
            }
        }
        Ok(model)
    }

    pub fn family(&self) -> Result<Family> {
        if self.backend != BackendKind::ClosedForm {
            return Err(spec_err("not a closed_form spec"));
        }
        let f = parse_family(self.family_name()?, self.dimension, &self.params)?;
        f.validate().map_err(as_spec)?;
        Ok(f)
    }

    pub fn spectral_atoms(&self) -> Result<SpectralAtoms> {
        let atoms = self.atoms.as_ref().ok_or_else(|| spec_err("discrete backend needs \"atoms\""))?;
        let dim = self
            .dimension
            .or_else(|| atoms.first().map(|a| a.weight.len()))
            .ok_or_else(|| spec_err("empty \"atoms\""))?;
        SpectralAtoms::new(dim, atoms.iter().map(|a| (a.weight.clone(), a.mass)).collect()).map_err(as_spec)
    }

    /// The generator of a generator spec, or a generator with the same `l`
    /// for closed-form and discrete specs.
    pub fn generator(&self) -> Result<Generator> {
        match self.backend {
            BackendKind::Generator => {
                parse_generator(self.family_name()?, self.dimension, &self.params).map_err(as_spec)
            }
            BackendKind::ClosedForm => {
                let f = self.family()?;
                Generator::for_family(&f)
                    .ok_or_else(|| spec_err(format!("no generator is known for the {} family", f.name())))
            }
            BackendKind::Discrete => Generator::from_spectral(&self.spectral_atoms()?).map_err(as_spec),
        }
    }
}

fn field<'a>(params: &'a Value, name: &str) -> Result<&'a Value> {
    params.get(name).ok_or_else(|| spec_err(format!("missing parameter \"{name}\"")))
}

fn number(params: &Value, name: &str) -> Result<f64> {
    let v = field(params, name)?;
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| spec_err(format!("\"{name}\" is not a number"))),
        Value::String(s) if s == "inf" || s == "infinity" => Ok(f64::INFINITY),
        _ => Err(spec_err(format!("\"{name}\" must be a number"))),
    }
}

fn numbers(v: &Value, name: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| spec_err(format!("\"{name}\" must be an array of numbers")))?
        .iter()
        .map(|x| x.as_f64().ok_or_else(|| spec_err(format!("\"{name}\" must be an array of numbers"))))
        .collect()
}

fn require_dim(dim: Option<usize>, family: &str) -> Result<usize> {
    dim.ok_or_else(|| spec_err(format!("the {family} family needs \"dimension\"")))
}

/// `[{"set": [1, 2], "prob": 0.3}, ...]` with 1-based coordinates.
fn subsets(v: &Value, name: &str) -> Result<Vec<(Vec<usize>, f64)>> {
    let arr = v.as_array().ok_or_else(|| spec_err(format!("\"{name}\" must be an array")))?;
    arr.iter()
        .map(|e| {
            let set = field(e, "set")?
                .as_array()
                .ok_or_else(|| spec_err("\"set\" must be an array"))?
                .iter()
                .map(|j| match j.as_u64() {
                    Some(j) if j >= 1 => Ok(j as usize - 1),
                    _ => Err(spec_err("subset coordinates are 1-based positive integers")),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((set, number(e, "prob")?))
        })
        .collect()
}

fn subset_dim(entries: &[(Vec<usize>, f64)], dim: Option<usize>) -> usize {
    dim.unwrap_or_else(|| entries.iter().flat_map(|(s, _)| s.iter().map(|j| j + 1)).max().unwrap_or(0))
}

/// Bivariate thinning coefficients from either `alpha`/`beta` or `p`/`q`/`r`.
fn thinning(params: &Value) -> Result<(f64, f64)> {
    if params.get("alpha").is_some() {
        return Ok((number(params, "alpha")?, number(params, "beta")?));
    }
    IndicatorLaw::from_pair(number(params, "p")?, number(params, "q")?, number(params, "r")?)
        .map_err(as_spec)?
        .pair_thinning()
        .ok_or_else(|| spec_err("thinning needs a bivariate law"))
}

fn nested(params: &Value) -> Result<(String, Option<usize>, Value)> {
    let base = field(params, "base")?;
    let name = field(base, "family")?
        .as_str()
        .ok_or_else(|| spec_err("\"base.family\" must be a string"))?
        .to_string();
    let dim = base.get("dimension").and_then(Value::as_u64).map(|d| d as usize);
    Ok((name, dim, base.get("params").cloned().unwrap_or(Value::Null)))
}

pub fn parse_family(name: &str, dim: Option<usize>, params: &Value) -> Result<Family> {
    Ok(match name {
        "logistic" => Family::Logistic { theta: number(params, "theta")?, dim: dim.unwrap_or(2) },
        "marshall_olkin" => Family::MarshallOlkin { alpha: number(params, "alpha")?, beta: number(params, "beta")? },
        "mv_marshall_olkin" => {
            let entries = subsets(field(params, "subsets")?, "subsets")?;
            let d = subset_dim(&entries, dim);
            Family::MultivariateMarshallOlkin(MultivariateMOSpec::new(d, entries).map_err(as_spec)?)
        }
        "tawn_mixture" => Family::TawnMixture { theta: number(params, "theta")? },
        "rational" => Family::RationalQuadratic { alpha: number(params, "alpha")?, beta: number(params, "beta")? },
        "schlather" => Family::Schlather { rho: number(params, "rho")? },
        "husler_reiss" => Family::HuslerReiss { a: number(params, "a")? },
        "dirichlet11" => Family::DirichletBivariate11,
        "independence" => Family::Independence { dim: require_dim(dim, name)? },
        "perfect_dependence" => Family::PerfectDependence { dim: require_dim(dim, name)? },
        "thinned" => {
            let (base, bdim, bparams) = nested(params)?;
            let (alpha, beta) = thinning(params)?;
            Family::AsymmetricThinning { base: Box::new(parse_family(&base, bdim, &bparams)?), alpha, beta }
        }
        other => return Err(spec_err(format!("unknown closed-form family \"{other}\""))),
    })
}

fn law_array(v: &Value, name: &str) -> Result<[f64; RANDOM_SUM_SUPPORT]> {
    let xs = numbers(v, name)?;
    xs.try_into()
        .map_err(|_| spec_err(format!("\"{name}\" must list {RANDOM_SUM_SUPPORT} probabilities for 0..=3")))
}

pub fn parse_generator(name: &str, dim: Option<usize>, params: &Value) -> Result<Generator> {
    match name {
        "constant" => Generator::constant(numbers(field(params, "a")?, "a")?),
        "discrete_atoms" => {
            let rows = field(params, "atoms")?
                .as_array()
                .ok_or_else(|| spec_err("\"atoms\" must be an array of rows"))?
                .iter()
                .map(|r| numbers(r, "atoms"))
                .collect::<Result<Vec<_>>>()?;
            Generator::discrete_atoms(rows, numbers(field(params, "probs")?, "probs")?)
        }
        "independence" => match params.get("probs") {
            Some(p) => Generator::independence(numbers(p, "probs")?),
            None => {
                let d = require_dim(dim, name)?;
                Generator::independence(vec![1.0 / d as f64; d])
            }
        },
        "indicators" => {
            let (base, bdim, bparams) = nested(params)?;
            let base = parse_generator(&base, bdim, &bparams)?;
            let law = match params.get("law") {
                Some(v) => {
                    let entries = subsets(v, "law")?;
                    IndicatorLaw::new(base.dim(), entries)?
                }
                None => IndicatorLaw::from_pair(number(params, "p")?, number(params, "q")?, number(params, "r")?)?,
            };
            Generator::indicators(base, law)
        }
        "dirichlet_gamma" => Generator::dirichlet_gamma(numbers(field(params, "alpha")?, "alpha")?),
        "gaussian_pair" => Generator::gaussian_pair(number(params, "rho")?),
        "lognormal_pair" => Generator::lognormal_pair(number(params, "rho")?, number(params, "sigma")?),
        "random_sum_exponential" => Generator::random_sum_exponential(
            law_array(field(params, "j_law")?, "j_law")?,
            law_array(field(params, "k_law")?, "k_law")?,
        ),
        "frechet_stable" => Generator::frechet_stable(number(params, "theta")?, dim.unwrap_or(2)),
        other => {
            let family = parse_family(other, dim, params)
                .map_err(|_| spec_err(format!("unknown generator \"{other}\"")))?;
            family.validate()?;
            Generator::for_family(&family)
                .ok_or_else(|| spec_err(format!("no generator is known for the {other} family")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dependence::{Backend, Point};

    fn ell(spec: &str, x: &[f64]) -> f64 {
        ModelSpec::parse(spec).unwrap().build().unwrap().ell(&Point::new(x.to_vec()).unwrap()).unwrap().value
    }

    #[test]
    fn closed_forms() {
        assert_eq!(ell(r#"{"version":1,"backend":"closed_form","family":"logistic","params":{"theta":1}}"#, &[1.0, 1.0]), 2.0);
        assert_eq!(
            ell(r#"{"version":1,"backend":"closed_form","family":"logistic","dimension":3,"params":{"theta":"inf"}}"#, &[1.0, 3.0, 2.0]),
            3.0
        );
        let mo = r#"{"version":1,"backend":"closed_form","family":"mv_marshall_olkin",
            "params":{"subsets":[{"set":[1,2,3],"prob":0.5},{"set":[1],"prob":0.5}]}}"#;
        let m = ModelSpec::parse(mo).unwrap().build().unwrap();
        assert_eq!(m.dim(), 3);
        let thinned = r#"{"version":1,"backend":"closed_form","family":"thinned",
            "params":{"base":{"family":"perfect_dependence","dimension":2},"p":0.5,"q":0.6,"r":0.3}}"#;
        let v = ell(thinned, &[1.0, 2.0]);
        let mo = crate::closed_forms::marshall_olkin_ell(0.6, 0.5, 1.0, 2.0).unwrap();
        assert!((v - mo).abs() < 1e-15);
    }

    #[test]
    fn discrete_and_generators() {
        let d = r#"{"version":1,"backend":"discrete","atoms":[{"weight":[1,0],"mass":1},{"weight":[0,1],"mass":1}]}"#;
        assert_eq!(ell(d, &[1.0, 1.0]), 2.0);
        let g = r#"{"version":1,"backend":"generator","family":"indicators",
            "params":{"base":{"family":"constant","params":{"a":[1,1]}},"law":[{"set":[1,2],"prob":0.4},{"set":[1],"prob":0.3},{"set":[2],"prob":0.3}]},
            "mc":{"samples":1000,"seed":3,"cache":"materialize"}}"#;
        let m = ModelSpec::parse(g).unwrap().build().unwrap();
        match m.backend() {
            Backend::Generator(b) => {
                assert_eq!(b.mc().samples, 1000);
                assert_eq!(b.policy(), CachePolicy::Materialize);
            }
            _ => panic!("generator backend expected"),
        }
        let s = r#"{"version":1,"backend":"generator","family":"dirichlet11","mc":{"samples":10}}"#;
        assert_eq!(ModelSpec::parse(s).unwrap().generator().unwrap().kind_name(), "dirichlet_gamma");
        let rs = r#"{"version":1,"backend":"generator","family":"random_sum_exponential","params":{"j_law":[0,1,0,0],"k_law":[0.5,0,0.5,0]}}"#;
        assert!(ModelSpec::parse(rs).unwrap().build().is_ok());
    }

    #[test]
    fn spec_errors() {
        for bad in [
            "not json",
            r#"{"version":2,"backend":"closed_form","family":"dirichlet11"}"#,
            r#"{"version":1,"backend":"closed_form","family":"nope"}"#,
            r#"{"version":1,"backend":"closed_form","family":"logistic","params":{"theta":0.5}}"#,
            r#"{"version":1,"backend":"closed_form","family":"schlather","params":{}}"#,
            r#"{"version":1,"backend":"closed_form","family":"dirichlet11","dimension":3}"#,
            r#"{"version":1,"backend":"discrete","atoms":[{"weight":[1,0],"mass":1}]}"#,
            r#"{"version":1,"backend":"generator","family":"gaussian_pair","params":{"rho":1}}"#,
            r#"{"version":1,"backend":"closed_form","family":"dirichlet11","extra":1}"#,
        ] {
            let r = ModelSpec::parse(bad).and_then(|s| s.build());
            assert!(matches!(r, Err(Error::Spec(_))), "{bad}: {r:?}");
        }
    }
}
