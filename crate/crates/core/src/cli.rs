//! Command-line front end.
//!
//! Exit codes: 0 success, 1 failed checks, 2 malformed spec or input,
//! 3 numeric domain error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::coefficients;
use crate::dependence::{DependenceModel, MarginForm, Point, SimplexWeight};
use crate::empirical::{default_k, simulate_x, SampleCloud, TailEstimator};
use crate::error::Error;
use crate::output::{fmt_f64, Cell, Table};
use crate::spec::ModelSpec;
use crate::verify::{builtin_specs, verify_spec, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_SPEC: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "maxstable", version, about = "Max-stable dependence models: evaluate, simulate, estimate, verify")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output file; standard output when absent.
    #[arg(long, env = "MAXSTABLE_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv", env = "MAXSTABLE_FORMAT")]
    pub format: Format,
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "MAXSTABLE_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Model spec document (JSON).
    #[arg(long, env = "MAXSTABLE_SPEC")]
    pub spec: PathBuf,
    /// Overrides the spec's Monte Carlo seed.
    #[arg(long, env = "MAXSTABLE_SEED")]
    pub seed: Option<u64>,
    /// Overrides the spec's Monte Carlo sample count.
    #[arg(long, env = "MAXSTABLE_SAMPLES")]
    pub samples: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate l, D and the copula on points or a simplex grid.
    Eval {
        #[command(flatten)]
        model: ModelArgs,
        /// Points as `x1,x2;y1,y2;...`.
        #[arg(long, conflicts_with = "grid")]
        points: Option<String>,
        /// Simplex grid with step 1/N.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value = "uniform01")]
        margin: String,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate a cloud of X = A Z from a model spec.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Rank-based estimates of l and of the exceedance profiles.
    Estimate {
        /// CSV cloud with a header row.
        #[arg(long, env = "MAXSTABLE_INPUT")]
        input: PathBuf,
        /// Number of upper order statistics; floor(sqrt(n)) by default.
        #[arg(long, env = "MAXSTABLE_K")]
        k: Option<usize>,
        /// Target points as `x1,x2;...`; (1, ..., 1) by default.
        #[arg(long)]
        targets: Option<String>,
        /// Also write the k exceedance profiles as CSV.
        #[arg(long)]
        profiles_out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Dependence coefficients of a model.
    Coeffs {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Run the invariant battery on a spec or on the built-in specs.
    Verify {
        #[arg(long, env = "MAXSTABLE_SPEC", required_unless_present = "builtin")]
        spec: Option<PathBuf>,
        /// A built-in spec name, or `all`.
        #[arg(long)]
        builtin: Option<String>,
        #[arg(long, env = "MAXSTABLE_SEED")]
        seed: Option<u64>,
        /// Samples for generator specs and for oracle runs.
        #[arg(long, env = "MAXSTABLE_SAMPLES")]
        samples: Option<usize>,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_spec_error() { EXIT_SPEC } else { EXIT_DOMAIN };
        Failure { code, message: e.to_string() }
    }
}

fn spec_failure(msg: String) -> Failure {
    Failure { code: EXIT_SPEC, message: msg }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure { code: EXIT_DOMAIN, message: format!("{}: {e}", path.display()) }
}

/// `x1,x2;y1,y2` into points.
pub fn parse_points(text: &str) -> Result<Vec<Point>, Failure> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|p| {
            let coords = p
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| spec_failure(format!("'{v}' is not a number"))))
                .collect::<Result<Vec<_>, _>>()?;
            Point::new(coords).map_err(Failure::from)
        })
        .collect()
}

/// All weights `(k_1, ..., k_d) / n` with nonnegative integers summing to `n`,
/// in lexicographic order of `(k_d, ..., k_1)` reversed; for `d = 2` this is
/// `(1 - t, t)` for `t = 0, 1/n, ..., 1`.
pub fn simplex_grid(d: usize, n: usize) -> Vec<Vec<f64>> {
    fn rec(d: usize, left: usize, n: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if prefix.len() == d - 1 {
            let mut w: Vec<f64> = prefix.iter().map(|&k| k as f64 / n as f64).collect();
            w.push(left as f64 / n as f64);
            out.push(w);
            return;
        }
        for k in (0..=left).rev() {
            prefix.push(k);
            rec(d, left - k, n, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if d == 0 || n == 0 {
        return out;
    }
    rec(d, n, n, &mut Vec::new(), &mut out);
    out
}

struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    fn new(command: &str) -> Self {
        let mut m = Manifest { entries: Vec::new() };
        m.push("command", command);
        m.push("tool", concat!("maxstable ", env!("CARGO_PKG_VERSION")));
        m
    }

    fn push(&mut self, k: &str, v: impl ToString) {
        self.entries.push((k.to_string(), v.to_string()));
    }
}

fn load_model(args: &ModelArgs, manifest: &mut Manifest) -> Result<(ModelSpec, DependenceModel), Failure> {
    let mut spec = ModelSpec::load(&args.spec)?;
    if let Some(s) = args.seed {
        spec.mc.seed = s;
    }
    if let Some(n) = args.samples {
        spec.mc.samples = n;
        spec.mc.streams = None;
    }
    let model = spec.build()?;
    manifest.push("spec", args.spec.display());
    manifest.push("model", model.describe());
    if model.is_monte_carlo() {
        let cfg = spec.mc.config();
        manifest.push("seed", cfg.seed);
        manifest.push("samples", cfg.samples);
        manifest.push("streams", cfg.streams);
        manifest.push("antithetic", cfg.antithetic);
    }
    Ok((spec, model))
}

fn write_output(common: &Common, table: &Table, manifest: &Manifest, started: Instant, threads: usize) -> Result<(), Failure> {
    let mut buf = Vec::new();
    match common.format {
        Format::Csv => table.write_csv(&mut buf, &manifest.entries)?,
        Format::Json => {
            let v = table.to_json(&manifest.entries);
            serde_json::to_writer_pretty(&mut buf, &v).map_err(|e| Failure { code: EXIT_DOMAIN, message: e.to_string() })?;
            buf.push(b'\n');
        }
    }
    emit(common.out.as_deref(), &buf)?;
    if let Some(path) = &common.out {
        write_sidecar(path, manifest, started, threads)?;
    }
    Ok(())
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p).map_err(|e| io_failure(p, e))?);
            f.write_all(bytes).and_then(|_| f.flush()).map_err(|e| io_failure(p, e))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).map_err(|e| io_failure(Path::new("<stdout>"), e))
        }
    }
}

/// `<out>.manifest.json`: the run manifest plus wall-clock time, kept out of
/// the output itself so reruns stay byte-identical.
fn write_sidecar(out: &Path, manifest: &Manifest, started: Instant, threads: usize) -> Result<(), Failure> {
    let mut path = out.as_os_str().to_owned();
    path.push(".manifest.json");
    let path = PathBuf::from(path);
    let entries: serde_json::Map<String, serde_json::Value> =
        manifest.entries.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let v = json!({
        "manifest": entries,
        "output": out.display().to_string(),
        "threads": threads,
        "wall_clock_seconds": started.elapsed().as_secs_f64(),
    });
    let text = serde_json::to_string_pretty(&v).expect("serializable manifest") + "\n";
    emit(Some(&path), text.as_bytes())
}

fn margin_coordinate(margin: MarginForm, x: f64) -> Option<f64> {
    // Inverse of the map from the margin scale to the argument of l.
    let u = match margin {
        MarginForm::Uniform01 => (-x).exp(),
        MarginForm::UnitFrechet => 1.0 / x,
        MarginForm::Gumbel => -x.ln(),
        MarginForm::ReverseExponential => -x,
    };
    (u.is_finite() && margin.ell_argument(u).is_ok()).then_some(u)
}

fn cmd_eval(model: &DependenceModel, points: Vec<Point>, margin: MarginForm) -> Result<Table, Failure> {
    let d = model.dim();
    let mut cols: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    cols.extend(["ell", "ell_se", "pickands", "pickands_se"].map(String::from));
    cols.extend((1..=d).map(|j| format!("u{j}")));
    cols.extend(["copula", "copula_se"].map(String::from));
    let mut table = Table::new(cols);
    for p in &points {
        if p.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.dim() }.into());
        }
    }
    let ells = model.ell_batch(&points)?;
    let sums: Vec<Point> = points
        .iter()
        .map(|p| if p.sum() > 0.0 { p.scaled(1.0 / p.sum()) } else { Ok(p.clone()) })
        .collect::<Result<_, _>>()?;
    let ds = model.ell_batch(&sums)?;
    let us: Vec<Option<Vec<f64>>> =
        points.iter().map(|p| p.coords().iter().map(|&x| margin_coordinate(margin, x)).collect()).collect();
    let valid: Vec<Vec<f64>> = us.iter().flatten().cloned().collect();
    let mut cs = model.copula_batch(&valid, margin)?.into_iter();
    for ((p, e), (dv, u)) in points.iter().zip(&ells).zip(ds.iter().zip(&us)) {
        let mut row: Vec<Cell> = p.coords().iter().map(|&v| v.into()).collect();
        row.push(e.value.into());
        row.push(e.se.into());
        if p.sum() > 0.0 {
            row.push(dv.value.into());
            row.push(dv.se.into());
        } else {
            row.extend([Cell::Missing, Cell::Missing]);
        }
        match u {
            Some(u) => {
                let c = cs.next().expect("one copula value per valid row");
                row.extend(u.iter().map(|&v| Cell::from(v)));
                row.push(c.value.into());
                row.push(c.se.into());
            }
            None => row.extend(std::iter::repeat_n(Cell::Missing, d + 2)),
        }
        table.push(row);
    }
    Ok(table)
}

fn cmd_coeffs(model: &DependenceModel) -> Result<Table, Failure> {
    let r = coefficients::report(model)?;
    let mut t = Table::new(["quantity", "k", "value", "se"]);
    t.push(vec!["method".into(), Cell::Missing, Cell::Text(r.method.into()), Cell::Missing]);
    t.push(vec!["extremal_coefficient".into(), Cell::Missing, r.extremal_coefficient.value.into(), r.extremal_coefficient.se.into()]);
    for (k, e) in r.multi_failure.iter().enumerate() {
        t.push(vec!["multi_failure".into(), ((k + 1) as f64).into(), e.value.into(), e.se.into()]);
    }
    t.push(vec!["all_fail".into(), Cell::Missing, r.all_fail.value.into(), r.all_fail.se.into()]);
    for (k, e) in r.excess_mean.iter().enumerate() {
        let (v, s) = e.map_or((Cell::Missing, Cell::Missing), |e| (e.value.into(), e.se.into()));
        t.push(vec!["excess_mean".into(), ((k + 1) as f64).into(), v, s]);
    }
    Ok(t)
}

fn cmd_estimate(cloud: &SampleCloud, k: usize, targets: Vec<Point>) -> Result<(Table, crate::empirical::ProfileSummary), Failure> {
    let est = TailEstimator::new(cloud)?;
    let d = cloud.dim();
    let mut cols: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    cols.extend(["k", "ell_hat", "ell_raw", "clamped"].map(String::from));
    let mut t = Table::new(cols);
    for x in &targets {
        let e = est.ell_hat(x, k)?;
        let mut row: Vec<Cell> = x.coords().iter().map(|&v| v.into()).collect();
        row.push((k as f64).into());
        row.push(e.value.into());
        row.push(e.raw.into());
        row.push(Cell::Text(e.clamped.to_string()));
        t.push(row);
    }
    Ok((t, est.profile_hat(k)?))
}

fn install_threads<T>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure>
where
    T: Send,
{
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| spec_failure(format!("cannot start {n} threads: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Runs a parsed command; returns the exit code.
pub fn execute(cli: Cli) -> i32 {
    let threads = match &cli.command {
        Command::Eval { common, .. }
        | Command::Simulate { common, .. }
        | Command::Estimate { common, .. }
        | Command::Coeffs { common, .. }
        | Command::Verify { common, .. } => common.threads,
    };
    let result = install_threads(threads, || dispatch(cli.command)).and_then(|r| r);
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command) -> Result<i32, Failure> {
    let started = Instant::now();
    let workers = rayon::current_num_threads();
    match command {
        Command::Eval { model, points, grid, margin, common } => {
            let mut manifest = Manifest::new("eval");
            let (_, m) = load_model(&model, &mut manifest)?;
            let margin: MarginForm = margin.parse().map_err(Failure::from)?;
            manifest.push("margin", margin.name());
            let pts = match (points, grid) {
                (Some(p), _) => parse_points(&p)?,
                (None, Some(n)) => {
                    manifest.push("grid", n);
                    simplex_grid(m.dim(), n)
                        .into_iter()
                        .map(|w| SimplexWeight::new(w).map(|w| w.to_point()))
                        .collect::<Result<_, _>>()?
                }
                (None, None) => vec![Point::ones(m.dim())],
            };
            let table = cmd_eval(&m, pts, margin)?;
            write_output(&common, &table, &manifest, started, workers)?;
            Ok(EXIT_OK)
        }
        Command::Simulate { model, common } => {
            let mut manifest = Manifest::new("simulate");
            let (spec, _) = load_model(&model, &mut manifest)?;
            let gen = spec.generator()?;
            let cfg = spec.mc.config();
            if !manifest.entries.iter().any(|(k, _)| k == "seed") {
                manifest.push("seed", cfg.seed);
                manifest.push("samples", cfg.samples);
            }
            manifest.push("generator", gen.kind_name());
            let cloud = simulate_x(&gen, cfg.samples, cfg.seed)?;
            let mut table = Table::new(cloud.names().to_vec());
            for row in cloud.rows() {
                table.push(row.iter().map(|&v| v.into()).collect());
            }
            write_output(&common, &table, &manifest, started, workers)?;
            Ok(EXIT_OK)
        }
        Command::Estimate { input, k, targets, profiles_out, common } => {
            let mut manifest = Manifest::new("estimate");
            let file = File::open(&input).map_err(|e| io_failure(&input, e))?;
            let cloud = SampleCloud::read_csv(file)?;
            let k = k.unwrap_or_else(|| default_k(cloud.n()));
            manifest.push("input", input.display());
            manifest.push("n", cloud.n());
            manifest.push("k", k);
            let targets = match targets {
                Some(t) => parse_points(&t)?,
                None => vec![Point::ones(cloud.dim())],
            };
            let (table, profiles) = cmd_estimate(&cloud, k, targets)?;
            let mean: Vec<String> = profiles.mean.iter().map(|v| fmt_f64(*v)).collect();
            let se: Vec<String> = profiles.se.iter().map(|v| fmt_f64(*v)).collect();
            manifest.push("profile_mean", mean.join(" "));
            manifest.push("profile_se", se.join(" "));
            if let Some(path) = profiles_out {
                let mut pt = Table::new((1..=profiles.dim).map(|j| format!("w{j}")));
                for w in &profiles.profiles {
                    pt.push(w.iter().map(|&v| v.into()).collect());
                }
                let mut buf = Vec::new();
                pt.write_csv(&mut buf, &manifest.entries)?;
                emit(Some(&path), &buf)?;
            }
            write_output(&common, &table, &manifest, started, workers)?;
            Ok(EXIT_OK)
        }
        Command::Coeffs { model, common } => {
            let mut manifest = Manifest::new("coeffs");
            let (_, m) = load_model(&model, &mut manifest)?;
            let table = cmd_coeffs(&m)?;
            write_output(&common, &table, &manifest, started, workers)?;
            Ok(EXIT_OK)
        }
        Command::Verify { spec, builtin, seed, samples, points, common } => {
            let mut opts = VerifyOptions { points, seed: seed.unwrap_or(0), ..Default::default() };
            if let Some(n) = samples {
                opts.oracle_samples = n;
            }
            let mut specs: Vec<(String, ModelSpec)> = Vec::new();
            if let Some(path) = spec {
                specs.push((path.display().to_string(), ModelSpec::load(&path)?));
            }
            if let Some(name) = builtin {
                let all = builtin_specs();
                let chosen: Vec<_> = all.into_iter().filter(|(n, _)| name == "all" || *n == name).collect();
                if chosen.is_empty() {
                    return Err(spec_failure(format!("unknown built-in spec '{name}'")));
                }
                for (n, text) in chosen {
                    specs.push((n.to_string(), ModelSpec::parse(&text)?));
                }
            }
            let mut log = String::new();
            let mut all_passed = true;
            for (name, mut s) in specs {
                if let Some(v) = seed {
                    s.mc.seed = v;
                }
                if let Some(n) = samples {
                    s.mc.samples = n;
                    s.mc.streams = None;
                }
                let report = verify_spec(&s, &opts)?;
                all_passed &= report.passed();
                log.push_str(&format!("spec {name}\n"));
                log.push_str(&report.render());
            }
            log.push_str(if all_passed { "verify PASS\n" } else { "verify FAIL\n" });
            let bytes = match common.format {
                Format::Csv => log.into_bytes(),
                Format::Json => {
                    let v = json!({ "passed": all_passed, "log": log.lines().collect::<Vec<_>>() });
                    (serde_json::to_string_pretty(&v).expect("serializable log") + "\n").into_bytes()
                }
            };
            emit(common.out.as_deref(), &bytes)?;
            Ok(if all_passed { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_SPEC } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shapes() {
        let g = simplex_grid(2, 4);
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], vec![1.0, 0.0]);
        assert_eq!(g[4], vec![0.0, 1.0]);
        assert_eq!(simplex_grid(3, 3).len(), 10);
        assert!(simplex_grid(4, 5).iter().all(|w| (w.iter().sum::<f64>() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn point_parsing() {
        let p = parse_points("1,2; 0.5,0").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[1].coords(), &[0.5, 0.0]);
        assert_eq!(parse_points("1,x").unwrap_err().code, EXIT_SPEC);
        assert_eq!(parse_points("1,-2").unwrap_err().code, EXIT_DOMAIN);
    }

    #[test]
    fn margin_coordinates_invert() {
        for m in [MarginForm::Uniform01, MarginForm::UnitFrechet, MarginForm::Gumbel, MarginForm::ReverseExponential] {
            let u = margin_coordinate(m, 0.7).unwrap();
            assert!((m.ell_argument(u).unwrap() - 0.7).abs() < 1e-15);
        }
        assert!(margin_coordinate(MarginForm::ReverseExponential, 0.0).is_none());
    }
}
