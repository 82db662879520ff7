//! The `m3` command line: `dist`, `features` and `check`.
//!
//! Point files hold one JSON object per line, `{"x": [..3], "n": [..3]}`.
//! Results are written as CSV with a header row and reals in `{:.16e}`
//! format (17 significant digits).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::M3Error;
use crate::features::{pairwise_features, FeatureKind};
use crate::group::PositionOrientation;
use crate::mav::mav_distance;
use crate::metric::MetricParams;
use crate::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_CONSTRAINT: i32 = 4;

const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "m3", version, about = "Invariant metrics and mav distances on position-orientation space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mav distance for every ordered pair (or a chosen subset).
    Dist(DistArgs),
    /// Pairwise invariant features.
    Features(FeaturesArgs),
    /// Run verification suites.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
struct MetricArgs {
    /// Metric weights w1,w2,w3,w4,w5.
    #[arg(long, default_value = "1,1,1,0,0", allow_hyphen_values = true)]
    weights: String,
    /// Reject weights that violate the positivity constraints.
    #[arg(long)]
    strict: bool,
    /// Worker threads for pair evaluation.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct DistArgs {
    points: PathBuf,
    #[command(flatten)]
    metric: MetricArgs,
    /// Only these pairs, as `i:j,i:j,...`.
    #[arg(long)]
    pairs: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Mav,
    Triple,
    Both,
}

impl From<KindArg> for FeatureKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Mav => FeatureKind::Mav,
            KindArg::Triple => FeatureKind::Triple,
            KindArg::Both => FeatureKind::Both,
        }
    }
}

#[derive(Debug, Args)]
struct FeaturesArgs {
    points: PathBuf,
    #[command(flatten)]
    metric: MetricArgs,
    #[arg(long, value_enum, default_value = "both")]
    kind: KindArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    All,
    Invariance,
    Minimality,
    Classification,
    Endpoint,
    Positivity,
    Length,
    Gradient,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: SuiteArg,
    #[arg(long, env = "M3_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long)]
    threads: Option<usize>,
}

/// A command failure carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn parse(message: impl Into<String>) -> Self {
        Self { code: EXIT_PARSE, message: message.into() }
    }
}

#[derive(Debug, Deserialize)]
struct PointRecord {
    x: [f64; 3],
    n: [f64; 3],
}

/// Parses line-delimited point records. Blank lines are skipped; errors
/// carry the 1-based line number.
pub fn parse_points(text: &str) -> Result<Vec<PositionOrientation>, String> {
    let mut points = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let rec: PointRecord = serde_json::from_str(line).map_err(|e| format!("line {}: {e}", k + 1))?;
        let p = PositionOrientation::from_arrays(rec.x, rec.n).map_err(|e| format!("line {}: {e}", k + 1))?;
        points.push(p);
    }
    if points.is_empty() {
        return Err("no points in input".to_string());
    }
    Ok(points)
}

pub fn parse_weights(s: &str) -> Result<[f64; 5], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 5 {
        return Err(format!("expected 5 comma-separated weights, got {}", parts.len()));
    }
    let mut w = [0.0; 5];
    for (slot, part) in w.iter_mut().zip(parts) {
        *slot = part.parse().map_err(|_| format!("invalid weight {part:?}"))?;
    }
    Ok(w)
}

fn parse_pairs(s: &str, n: usize) -> Result<Vec<(usize, usize)>, String> {
    s.split(',')
        .map(|item| {
            let (i, j) = item
                .trim()
                .split_once(':')
                .ok_or_else(|| format!("pair {item:?} is not of the form i:j"))?;
            let i: usize = i.trim().parse().map_err(|_| format!("invalid index in {item:?}"))?;
            let j: usize = j.trim().parse().map_err(|_| format!("invalid index in {item:?}"))?;
            if i >= n || j >= n {
                return Err(format!("pair {i}:{j} out of range for {n} points"));
            }
            Ok((i, j))
        })
        .collect()
}

fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn load_points(path: &Path) -> Result<Vec<PositionOrientation>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
    parse_points(&text).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
}

fn metric(args: &MetricArgs) -> Result<MetricParams, Failure> {
    let w = parse_weights(&args.weights).map_err(Failure::parse)?;
    MetricParams::new(w, args.strict).map_err(|e| match e {
        M3Error::NotPositive(_) => Failure { code: EXIT_CONSTRAINT, message: e.to_string() },
        other => Failure::parse(other.to_string()),
    })
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::parse(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn check_finite<'a>(values: impl IntoIterator<Item = &'a f64>) -> Result<(), Failure> {
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Failure { code: EXIT_NUMERIC, message: "non-finite result".to_string() })
    }
}

fn cmd_dist(args: &DistArgs) -> Result<String, Failure> {
    let points = load_points(&args.points)?;
    let w = metric(&args.metric)?;
    let mut out = String::from("i,j,mu\n");
    match &args.pairs {
        None => {
            let m = with_threads(args.metric.threads, || pairwise_features(&points, &w, FeatureKind::Mav))?;
            check_finite(m.values())?;
            let n = points.len();
            for i in 0..n {
                for j in 0..n {
                    writeln!(out, "{i},{j},{}", fmt_real(m.get(i, j)[0])).expect("string write");
                }
            }
        }
        Some(spec) => {
            let pairs = parse_pairs(spec, points.len()).map_err(Failure::parse)?;
            let values: Vec<f64> = with_threads(args.metric.threads, || {
                pairs.par_iter().map(|&(i, j)| mav_distance(&w, &points[i], &points[j])).collect()
            })?;
            check_finite(&values)?;
            for (&(i, j), v) in pairs.iter().zip(&values) {
                writeln!(out, "{i},{j},{}", fmt_real(*v)).expect("string write");
            }
        }
    }
    Ok(out)
}

fn cmd_features(args: &FeaturesArgs) -> Result<String, Failure> {
    let points = load_points(&args.points)?;
    let w = metric(&args.metric)?;
    let kind = FeatureKind::from(args.kind);
    let m = with_threads(args.metric.threads, || pairwise_features(&points, &w, kind))?;
    check_finite(m.values())?;
    let mut out = String::from("i,j");
    for name in kind.column_names() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    let n = points.len();
    for i in 0..n {
        for j in 0..n {
            write!(out, "{i},{j}").expect("string write");
            for v in m.get(i, j) {
                write!(out, ",{}", fmt_real(*v)).expect("string write");
            }
            out.push('\n');
        }
    }
    Ok(out)
}

fn cmd_check(args: &CheckArgs) -> Result<(String, bool), Failure> {
    if args.trials == 0 {
        return Err(Failure::parse("--trials must be at least 1"));
    }
    let (seed, trials) = (args.seed, args.trials);
    let want = |s: SuiteArg| args.suite == SuiteArg::All || args.suite == s;
    with_threads(args.threads, || {
        let mut lines = Vec::new();
        let mut ok = true;
        let mut push = |r: verify::SuiteReport, lines: &mut Vec<String>| {
            ok &= r.passed();
            lines.push(r.to_string());
        };
        if want(SuiteArg::Invariance) {
            push(verify::run_invariance_suite(seed, trials), &mut lines);
        }
        if want(SuiteArg::Minimality) {
            push(verify::run_minimality_suite(seed, trials), &mut lines);
        }
        let mut dims = None;
        if want(SuiteArg::Classification) {
            let c = verify::run_classification_check(seed, trials);
            push(c.report, &mut lines);
            lines.push(if c.min_dimension == c.max_dimension {
                format!("dimension {}", c.min_dimension)
            } else {
                format!("dimension {}..{}", c.min_dimension, c.max_dimension)
            });
            dims = Some((c.min_dimension, c.max_dimension));
        }
        if want(SuiteArg::Endpoint) {
            push(verify::run_endpoint_suite(seed, trials), &mut lines);
        }
        if want(SuiteArg::Positivity) {
            push(verify::run_positivity_suite(seed, trials), &mut lines);
        }
        if want(SuiteArg::Length) {
            push(verify::run_length_suite(seed, trials), &mut lines);
        }
        if want(SuiteArg::Gradient) {
            push(verify::run_gradient_suite(seed, trials), &mut lines);
        }
        let dims_ok = dims.is_none_or(|d| d == (5, 5));
        let mut out = lines.join("\n");
        out.push('\n');
        (out, ok && dims_ok)
    })
}

/// Runs the CLI with `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let result = match &cli.command {
        Command::Dist(a) => cmd_dist(a).map(|s| (s, true)),
        Command::Features(a) => cmd_features(a).map(|s| (s, true)),
        Command::Check(a) => cmd_check(a),
    };
    match result {
        Ok((text, ok)) => {
            if stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return EXIT_NUMERIC;
            }
            if ok {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}
