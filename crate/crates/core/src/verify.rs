//! Invariant battery for a model: bounds, homogeneity, convexity, margins,
//! copula bounds, max-stability, tail copula consistency, margin
//! restriction, spectral constraints and oracle pairing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::closed_forms::Family;
use crate::dependence::{Backend, DependenceModel, Estimate, MarginForm, McConfig, Point, SimplexWeight, SpectralAtoms};
use crate::error::Result;
use crate::generators::{mc_ell, profile_atoms, Generator};
use crate::output::fmt_f64;
use crate::spec::ModelSpec;

/// Tolerance of exact identities.
pub const EXACT_TOLERANCE: f64 = 1e-12;
/// Tolerance of algebraic identities that pass through exp/log.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;
/// Tolerance of the spectral moment constraints.
pub const SPECTRAL_TOLERANCE: f64 = 1e-9;
/// Monte Carlo bands are this many standard errors wide.
pub const SE_BAND: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        }
    }
}

/// One named check. `worst` is the largest violation relative to the
/// allowed tolerance; values above 1 are failures.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub evaluated: usize,
    pub failures: usize,
    pub allowed_failures: usize,
    pub worst: f64,
    pub note: String,
}

impl Check {
    fn skip(name: &'static str, note: &str) -> Self {
        Check {
            name,
            status: Status::Skip,
            evaluated: 0,
            failures: 0,
            allowed_failures: 0,
            worst: 0.0,
            note: note.to_string(),
        }
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "{} {:<20} n={} failures={}/{} worst={}",
            self.status.label(),
            self.name,
            self.evaluated,
            self.failures,
            self.allowed_failures,
            fmt_f64(self.worst)
        );
        if !self.note.is_empty() {
            s.push_str("  ");
            s.push_str(&self.note);
        }
        s
    }
}

/// Accumulates ratios `violation / tolerance`.
struct Tally {
    name: &'static str,
    evaluated: usize,
    failures: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally { name, evaluated: 0, failures: 0, worst: 0.0 }
    }

    /// Records `excess`, the amount by which a quantity exceeds its limit,
    /// against the allowed slack `tol`.
    fn record(&mut self, excess: f64, tol: f64) {
        self.evaluated += 1;
        let ratio = if excess <= 0.0 {
            0.0
        } else if tol > 0.0 {
            excess / tol
        } else {
            f64::INFINITY
        };
        if !(ratio <= 1.0) {
            self.failures += 1;
        }
        if ratio > self.worst || ratio.is_nan() {
            self.worst = ratio;
        }
    }

    fn finish(self, allowed: usize) -> Check {
        Check {
            name: self.name,
            status: if self.failures <= allowed { Status::Pass } else { Status::Fail },
            evaluated: self.evaluated,
            failures: self.failures,
            allowed_failures: allowed,
            worst: self.worst,
            note: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub points: usize,
    pub oracle_points: usize,
    /// Samples for Monte Carlo oracles of closed-form and discrete models.
    pub oracle_samples: usize,
    pub allowed_oracle_failures: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { points: 100, oracle_points: 50, oracle_samples: 100_000, allowed_oracle_failures: 3, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub model: String,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn render(&self) -> String {
        let mut out = format!("model {}\n", self.model);
        for c in &self.checks {
            out.push_str(&c.render());
            out.push('\n');
        }
        out.push_str(if self.passed() { "result PASS\n" } else { "result FAIL\n" });
        out
    }
}

fn slack(e: &Estimate, scale: f64) -> f64 {
    SE_BAND * e.se_or_zero() + EXACT_TOLERANCE * (1.0 + scale)
}

/// Random points in `[0, 2]^d`; about one coordinate in ten is set to 0.
pub fn random_points(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Vec<Point> {
    (0..n)
        .map(|_| {
            let v = (0..d)
                .map(|_| if rng.random::<f64>() < 0.1 { 0.0 } else { 2.0 * rng.random::<f64>() })
                .collect();
            Point::new(v).expect("nonnegative coordinates")
        })
        .collect()
}

fn random_u(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| 0.02 + 0.98 * rng.random::<f64>()).collect()
}

pub fn verify_model(model: &DependenceModel, opts: &VerifyOptions) -> Result<VerifyReport> {
    verify_with_oracle(model, None, opts)
}

/// Runs the battery; closed-form models use `oracle` (or a generator with
/// the same `l`) for the Monte Carlo pairing check.
pub fn verify_with_oracle(
    model: &DependenceModel,
    oracle: Option<&Generator>,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    let d = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(u64::MAX);
    let xs = random_points(&mut rng, d, opts.points);
    let ell = model.ell_batch(&xs)?;
    let mc = model.is_monte_carlo();
    let mut checks = Vec::new();

    let mut t = Tally::new("bounds");
    for (x, e) in xs.iter().zip(&ell) {
        let s = slack(e, x.sum());
        t.record(x.max() - e.value, s);
        t.record(e.value - x.sum(), s);
    }
    checks.push(t.finish(0));

    let mut t = Tally::new("homogeneity");
    for a in [0.25, 2.0, 8.0, 0.7] {
        let scaled: Vec<Point> = xs.iter().map(|x| x.scaled(a)).collect::<Result<_>>()?;
        let es = model.ell_batch(&scaled)?;
        for (e0, e1) in ell.iter().zip(&es) {
            let diff = (e1.value - a * e0.value).abs();
            // Power-of-two scalings are bit-exact under common random numbers.
            let tol = if mc && a != 0.7 { 0.0 } else { EXACT_TOLERANCE * (1.0 + a * e0.value) };
            t.record(if tol == 0.0 && diff == 0.0 { 0.0 } else { diff }, tol);
            if mc && a != 0.7 {
                t.record(if e1.se == e0.se.map(|s| a * s) { 0.0 } else { 1.0 }, 0.0);
            }
        }
    }
    let mut c = t.finish(0);
    if mc {
        c.note = "bit-exact for a in {0.25, 2, 8}".into();
    }
    checks.push(c);

    let mut t = Tally::new("convexity");
    let lambdas: Vec<f64> = (0..xs.len()).map(|_| rng.random::<f64>()).collect();
    let mids: Vec<Point> = xs
        .iter()
        .zip(xs.iter().cycle().skip(1))
        .zip(&lambdas)
        .map(|((x, y), &l)| {
            Point::new(x.coords().iter().zip(y.coords()).map(|(a, b)| l * a + (1.0 - l) * b).collect())
        })
        .collect::<Result<_>>()?;
    let em = model.ell_batch(&mids)?;
    for (i, m) in em.iter().enumerate() {
        let (ex, ey) = (&ell[i], &ell[(i + 1) % ell.len()]);
        let l = lambdas[i];
        let rhs = l * ex.value + (1.0 - l) * ey.value;
        let se_sum = m.se_or_zero() + ex.se_or_zero() + ey.se_or_zero();
        t.record(m.value - rhs, SE_BAND * se_sum + EXACT_TOLERANCE * (1.0 + rhs));
    }
    checks.push(t.finish(0));

    let mut t = Tally::new("unit_margins");
    let units: Vec<Point> = (0..d).map(|j| Point::unit(d, j)).collect();
    for e in model.ell_batch(&units)? {
        t.record((e.value - 1.0).abs(), slack(&e, 1.0));
    }
    checks.push(t.finish(0));

    let mut t = Tally::new("pickands_bounds");
    for x in xs.iter().filter(|x| x.sum() > 0.0).take(opts.points) {
        let w = SimplexWeight::new(x.coords().iter().map(|v| v / x.sum()).collect())?;
        let e = model.pickands(&w)?;
        let top = w.weights().iter().cloned().fold(0.0, f64::max);
        t.record(top - e.value, slack(&e, 1.0));
        t.record(e.value - 1.0, slack(&e, 1.0));
    }
    checks.push(t.finish(0));

    let us: Vec<Vec<f64>> = (0..opts.points).map(|_| random_u(&mut rng, d)).collect();
    let cs = model.copula_batch(&us, MarginForm::Uniform01)?;
    let mut lower = Tally::new("copula_pqd");
    let mut upper = Tally::new("copula_upper");
    for (u, c) in us.iter().zip(&cs) {
        let s = SE_BAND * c.se_or_zero() + EXACT_TOLERANCE;
        lower.record(u.iter().product::<f64>() - c.value, s);
        upper.record(c.value - u.iter().cloned().fold(1.0, f64::min), s);
    }
    checks.push(lower.finish(0));
    checks.push(upper.finish(0));

    let mut t = Tally::new("copula_margins");
    let mut margin_us = Vec::new();
    for u in us.iter().take(20) {
        for j in 0..d {
            let mut v = vec![1.0; d];
            v[j] = u[j];
            margin_us.push(v);
        }
    }
    for (u, c) in margin_us.iter().zip(model.copula_batch(&margin_us, MarginForm::Uniform01)?) {
        let uj = u.iter().cloned().fold(1.0, f64::min);
        t.record((c.value - uj).abs(), SE_BAND * c.se_or_zero() + EXACT_TOLERANCE);
    }
    checks.push(t.finish(0));

    let mut t = Tally::new("max_stability");
    for u in us.iter().take(opts.points) {
        let k = rng.random_range(1..=8u32);
        t.record(model.max_stability_defect(u, k)?, IDENTITY_TOLERANCE);
    }
    checks.push(t.finish(0));

    checks.push(tail_copula_check(model, &xs, &ell)?);
    checks.push(restriction_check(model, &xs)?);
    checks.push(spectral_check(model, &xs)?);
    checks.push(oracle_check(model, oracle, &mut rng, opts)?);

    Ok(VerifyReport { model: model.describe(), checks })
}

fn tail_copula_check(model: &DependenceModel, xs: &[Point], ell: &[Estimate]) -> Result<Check> {
    let d = model.dim();
    if d > 12 {
        return Ok(Check::skip("tail_copula", "dimension above 12"));
    }
    let mut t = Tally::new("tail_copula");
    for (x, e) in xs.iter().zip(ell).take(30) {
        let r = model.tail_copula(x)?;
        let s = slack(&r, x.sum()) + SE_BAND * e.se_or_zero();
        if x.min() == 0.0 {
            t.record(r.value.abs(), 0.0);
            continue;
        }
        t.record(-r.value, s);
        t.record(r.value - x.min(), s);
        if d == 2 {
            t.record((r.value - (x.sum() - e.value)).abs(), s);
        }
    }
    Ok(t.finish(0))
}

fn restriction_check(model: &DependenceModel, xs: &[Point]) -> Result<Check> {
    let d = model.dim();
    if d == 1 {
        return Ok(Check::skip("margin_restrict", "univariate model"));
    }
    let mut subsets: Vec<Vec<usize>> = (0..d).map(|j| vec![j]).collect();
    for i in 0..d.min(4) {
        for j in i + 1..d.min(4) {
            subsets.push(vec![i, j]);
        }
    }
    let mut t = Tally::new("margin_restrict");
    let pts: Vec<&Point> = xs.iter().take(20).collect();
    for s in &subsets {
        let sub = model.margin_restrict(s)?;
        let mut mask = 0u32;
        for &j in s {
            mask |= 1 << j;
        }
        let full: Vec<Point> = pts.iter().map(|x| x.masked(mask)).collect();
        let small: Vec<Point> = pts
            .iter()
            .map(|x| Point::new(s.iter().map(|&j| x.coords()[j]).collect()))
            .collect::<Result<_>>()?;
        for (a, b) in model.ell_batch(&full)?.iter().zip(sub.ell_batch(&small)?) {
            t.record((a.value - b.value).abs(), slack(a, a.value) + SE_BAND * b.se_or_zero());
        }
        if s.len() == 1 {
            for (x, b) in small.iter().zip(sub.ell_batch(&small)?) {
                t.record((b.value - x.coords()[0]).abs(), slack(&b, x.coords()[0]));
            }
        }
    }
    Ok(t.finish(0))
}

fn model_atoms(model: &DependenceModel) -> Option<SpectralAtoms> {
    match model.backend() {
        Backend::ClosedForm(f) => f.spectral_atoms(),
        Backend::Discrete(a) => Some(a.clone()),
        Backend::Generator(g) => profile_atoms(g.generator()).ok(),
    }
}

fn spectral_check(model: &DependenceModel, xs: &[Point]) -> Result<Check> {
    let Some(atoms) = model_atoms(model) else {
        return Ok(Check::skip("spectral", "no discrete spectral measure"));
    };
    let d = atoms.dim() as f64;
    let mut t = Tally::new("spectral");
    t.record((atoms.total_mass() - d).abs(), SPECTRAL_TOLERANCE * d);
    for m in atoms.first_moments() {
        t.record((m - 1.0).abs(), SPECTRAL_TOLERANCE);
    }
    // The atoms reproduce the exact l of the model (or of its discrete law).
    for x in xs {
        let from_atoms = atoms.ell(x)?;
        let exact = match model.backend() {
            Backend::Generator(g) => g.generator().exact_ell(x.coords()).unwrap_or(from_atoms),
            _ => model.ell(x)?.value,
        };
        t.record((from_atoms - exact).abs(), EXACT_TOLERANCE * (1.0 + exact));
    }
    Ok(t.finish(0))
}

/// Monte Carlo estimates against exact values: points outside the
/// `3 SE` band are counted, and up to `allowed` of them are tolerated.
pub fn compare_to_exact(name: &'static str, est: &[Estimate], exact: &[f64], allowed: usize) -> Check {
    let mut t = Tally::new(name);
    for (e, x) in est.iter().zip(exact) {
        t.record((e.value - x).abs(), SE_BAND * e.se_or_zero() + EXACT_TOLERANCE * (1.0 + x.abs()));
    }
    t.finish(allowed)
}

fn oracle_check(
    model: &DependenceModel,
    oracle: Option<&Generator>,
    rng: &mut ChaCha8Rng,
    opts: &VerifyOptions,
) -> Result<Check> {
    let d = model.dim();
    let xs = random_points(rng, d, opts.oracle_points);
    let cfg = McConfig::new(opts.oracle_samples, opts.seed);
    let family_oracle = |f: &Family| oracle.cloned().or_else(|| Generator::for_family(f));
    match model.backend() {
        Backend::ClosedForm(f) => {
            let Some(g) = family_oracle(f) else {
                return Ok(Check::skip("oracle", "no generator for this family"));
            };
            let exact: Vec<f64> = xs.iter().map(|x| f.ell(x.coords())).collect();
            let est = mc_ell(&g, &xs, &cfg)?;
            let mut c = compare_to_exact("oracle", &est, &exact, opts.allowed_oracle_failures);
            c.note = format!("closed form vs {} generator", g.kind_name());
            Ok(c)
        }
        Backend::Discrete(atoms) => {
            let g = oracle.cloned().map_or_else(|| Generator::from_spectral(atoms), Ok)?;
            let exact: Vec<f64> = xs.iter().map(|x| atoms.ell(x)).collect::<Result<_>>()?;
            let est = mc_ell(&g, &xs, &cfg)?;
            let mut c = compare_to_exact("oracle", &est, &exact, opts.allowed_oracle_failures);
            c.note = "spectral sum vs discrete_atoms generator".into();
            Ok(c)
        }
        Backend::Generator(g) => {
            let Some(exact_model) = g.generator().exact_model() else {
                return Ok(Check::skip("oracle", "no exact partner for this generator"));
            };
            let exact: Vec<f64> =
                exact_model.ell_batch(&xs)?.iter().map(|e| e.value).collect();
            let est = model.ell_batch(&xs)?;
            let mut c = compare_to_exact("oracle", &est, &exact, opts.allowed_oracle_failures);
            c.note = format!("generator vs {}", exact_model.describe());
            Ok(c)
        }
    }
}

pub fn verify_spec(spec: &ModelSpec, opts: &VerifyOptions) -> Result<VerifyReport> {
    verify_model(&spec.build()?, opts)
}

/// Named model specs covering every closed-form family and generator kind.
pub fn builtin_specs() -> Vec<(&'static str, String)> {
    let cf = |family: &str, dim: Option<usize>, params: &str| {
        let dim = dim.map_or(String::new(), |d| format!(",\"dimension\":{d}"));
        format!("{{\"version\":1,\"backend\":\"closed_form\",\"family\":\"{family}\"{dim},\"params\":{params}}}")
    };
    let gen = |family: &str, dim: Option<usize>, params: &str| {
        let dim = dim.map_or(String::new(), |d| format!(",\"dimension\":{d}"));
        format!(
            "{{\"version\":1,\"backend\":\"generator\",\"family\":\"{family}\"{dim},\"params\":{params},\"mc\":{{\"samples\":100000,\"seed\":20240611}}}}"
        )
    };
    vec![
        ("logistic", cf("logistic", Some(3), r#"{"theta":2.5}"#)),
        ("marshall_olkin", cf("marshall_olkin", None, r#"{"alpha":0.3,"beta":0.9}"#)),
        (
            "mv_marshall_olkin",
            cf(
                "mv_marshall_olkin",
                Some(3),
                r#"{"subsets":[{"set":[1,2,3],"prob":0.4},{"set":[1,2],"prob":0.2},{"set":[3],"prob":0.1},{"set":[1],"prob":0.3}]}"#,
            ),
        ),
        ("tawn_mixture", cf("tawn_mixture", None, r#"{"theta":0.7}"#)),
        ("rational", cf("rational", None, r#"{"alpha":0.4,"beta":0.9}"#)),
        ("schlather", cf("schlather", None, r#"{"rho":0.3}"#)),
        ("husler_reiss", cf("husler_reiss", None, r#"{"a":1.2}"#)),
        ("dirichlet11", cf("dirichlet11", None, "{}")),
        ("independence", cf("independence", Some(3), "{}")),
        ("perfect_dependence", cf("perfect_dependence", Some(3), "{}")),
        ("gen_constant", gen("constant", None, r#"{"a":[1,2,0.5]}"#)),
        (
            "gen_discrete_atoms",
            gen("discrete_atoms", None, r#"{"atoms":[[1.5,0.5,0],[0.5,1.5,1],[0,-1,2]],"probs":[0.3,0.3,0.4]}"#),
        ),
        (
            "gen_indicators",
            gen(
                "indicators",
                None,
                r#"{"base":{"family":"dirichlet_gamma","params":{"alpha":[1,2,0.5]}},"law":[{"set":[1,2,3],"prob":0.5},{"set":[1],"prob":0.2},{"set":[2,3],"prob":0.2},{"set":[],"prob":0.1}]}"#,
            ),
        ),
        ("gen_dirichlet_gamma", gen("dirichlet_gamma", None, r#"{"alpha":[1,1]}"#)),
        ("gen_gaussian_pair", gen("gaussian_pair", None, r#"{"rho":0.3}"#)),
        ("gen_lognormal_pair", gen("lognormal_pair", None, r#"{"rho":0.5,"sigma":1.2}"#)),
        (
            "gen_random_sum_exponential",
            gen("random_sum_exponential", None, r#"{"j_law":[0,1,0,0],"k_law":[0,1,0,0]}"#),
        ),
        ("gen_frechet_stable", gen("frechet_stable", Some(3), r#"{"theta":6}"#)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_spec_builds() {
        for (name, text) in builtin_specs() {
            let spec = ModelSpec::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
            spec.build().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn closed_form_battery_passes() {
        let opts = VerifyOptions { points: 40, oracle_points: 20, oracle_samples: 50_000, ..Default::default() };
        for f in [Family::Logistic { theta: 1.7, dim: 3 }, Family::DirichletBivariate11, Family::HuslerReiss { a: 0.8 }] {
            let r = verify_model(&DependenceModel::closed_form(f).unwrap(), &opts).unwrap();
            assert!(r.passed(), "{}", r.render());
        }
    }

    #[test]
    fn broken_oracle_is_caught() {
        // A Gaussian generator with the wrong correlation must fail the pairing.
        let opts = VerifyOptions { points: 10, oracle_points: 20, oracle_samples: 200_000, ..Default::default() };
        let model = DependenceModel::closed_form(Family::Schlather { rho: 0.3 }).unwrap();
        let wrong = Generator::gaussian_pair(-0.5).unwrap();
        let r = verify_with_oracle(&model, Some(&wrong), &opts).unwrap();
        assert_eq!(r.check("oracle").unwrap().status, Status::Fail, "{}", r.render());
        assert!(!r.passed());
    }

    #[test]
    fn render_is_deterministic() {
        let opts = VerifyOptions { points: 10, oracle_points: 5, oracle_samples: 1000, ..Default::default() };
        let text = builtin_specs().into_iter().find(|(n, _)| *n == "gen_lognormal_pair").unwrap().1;
        let mut spec = ModelSpec::parse(&text).unwrap();
        spec.mc.samples = 2000;
        let a = verify_spec(&spec, &opts).unwrap().render();
        let b = verify_spec(&spec, &opts).unwrap().render();
        assert_eq!(a, b);
        assert!(a.starts_with("model generator:lognormal_pair\n"));
    }
}
