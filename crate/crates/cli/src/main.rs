//! `semcert`: build kernels, query transport distances and run property
//! checks from the command line.

mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use semcert_core::diagnostics::{self as diag, LwiParams};
use semcert_core::models::{GaussianWalkSpec, IntervalChainSpec, XiChainSpec};
use semcert_core::reproduce::{gaussian_report, interval_report, xi_chain_report};
use semcert_core::{
    capped_lipschitz_cost, kantorovich_dual_value, max_closeness, maximal_coupling, separating_family, tv_distance,
    wasserstein, CostMatrix,
};

use input::ModelArgs;
use output::{Format, Sink};

#[derive(Debug, Parser)]
#[command(name = "semcert", version, about = "Coupling and regularity diagnostics for finite Markov kernels")]
struct Cli {
    /// Write the report here and print a one-line summary instead.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Tolerance override `name=value`. Known names: check.
    #[arg(long, global = true, value_parser = input::parse_tol)]
    tol: Vec<(String, f64)>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Export a kernel (states, distances, matrix).
    Model(ModelArgs),
    /// Ergodic decomposition of the kernel.
    Decompose(ModelArgs),
    /// Distance between the laws of two states after `t` steps.
    Distance(DistanceArgs),
    /// Run a property check.
    Check(Box<CheckArgs>),
    /// Reproduce a worked example.
    Example(ExampleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DistanceKind {
    Wasserstein,
    Tv,
    Dual,
    Closeness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum CostName {
    Metric,
    Mismatch,
    Capped,
    Separating,
    Threshold,
}

#[derive(Debug, Args)]
struct DistanceArgs {
    #[arg(value_enum)]
    kind: DistanceKind,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
    #[arg(long, default_value_t = 1)]
    t: u32,
    #[arg(long, value_enum, default_value_t = CostName::Metric)]
    cost: CostName,
    /// Sup bound of the capped cost.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Lipschitz bound of the capped cost.
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    /// Index of the separating pseudo-metric.
    #[arg(long, default_value_t = 1)]
    n: u32,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Also write the optimal coupling here.
    #[arg(long)]
    coupling: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Property {
    Asf,
    AsfPlus,
    Lwi,
    A1,
    A2,
    Uniqueness,
    Separation,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(value_enum)]
    property: Property,
    #[command(flatten)]
    model: ModelArgs,
    /// ASF+ certificate (JSON).
    #[arg(long)]
    cert: Option<PathBuf>,
    /// Coupling provider (JSON).
    #[arg(long)]
    provider: Option<PathBuf>,
    /// `x:y,...`; defaults to every pair.
    #[arg(long)]
    pairs: Option<String>,
    /// `A:K,...` grid of capped-cost parameters.
    #[arg(long, default_value = "1:1,1:10")]
    ak: String,
    #[arg(long, default_value = "1")]
    times: String,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Start state of the ASF profile.
    #[arg(long)]
    x: Option<String>,
    #[arg(long = "n-list")]
    n_list: Option<String>,
    #[arg(long)]
    radii: Option<String>,
    /// Envelope F1 as JSON, e.g. `{"type":"constant","c":0.4}`.
    #[arg(long)]
    f1: Option<String>,
    #[arg(long)]
    f2: Option<String>,
    /// Rate r(t) as JSON, e.g. `{"type":"geometric","scale":1,"ratio":0.5}`.
    #[arg(long)]
    rate: Option<String>,
    /// Reference state; defaults to the space's base point.
    #[arg(long)]
    x0: Option<String>,
    /// Write the fitted ASF+ certificate here when A1 passes.
    #[arg(long)]
    fit: Option<PathBuf>,
    /// A2 set: the ball of this radius around the base point.
    #[arg(long, conflicts_with = "states")]
    ball: Option<f64>,
    /// A2 set as explicit states.
    #[arg(long)]
    states: Option<String>,
    /// Indices of the two ergodic classes to separate.
    #[arg(long, default_value = "0,1")]
    classes: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExampleName {
    XiChain,
    Gaussian,
    Interval,
}

#[derive(Debug, Args)]
struct ExampleArgs {
    #[arg(value_enum)]
    name: ExampleName,
    #[arg(long, default_value_t = 0.4)]
    xi: f64,
    #[arg(long, default_value_t = 40)]
    depth: usize,
    #[arg(long, default_value_t = 3001)]
    grid: usize,
    #[arg(long = "half-width", default_value_t = 8.0)]
    half_width: f64,
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let sink = Sink { out: cli.out.clone(), format: cli.format };
    let tol = cli.tol.iter().rev().find(|(n, _)| n == "check").map(|&(_, v)| v);
    match run(cli.command, &sink, tol) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::from(2)
        }
    }
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("SEMCERT_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| anyhow!("SEMCERT_THREADS: expected an integer, got {v:?}"))?;
    #[cfg(feature = "parallel")]
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("SEMCERT_THREADS")?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn verdict_word(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn run(cmd: Command, sink: &Sink, tol: Option<f64>) -> Result<bool> {
    match cmd {
        Command::Model(m) => {
            let l = m.load()?;
            let file = l.kernel.to_file();
            let mut csv = String::from("from,to,p\n");
            let labels = l.kernel.space().labels();
            for i in 0..l.kernel.len() {
                for (j, &p) in l.kernel.row(i).iter().enumerate() {
                    if p > 0.0 {
                        csv.push_str(&format!("{},{},{}\n", labels[i], labels[j], p));
                    }
                }
            }
            sink.emit_with_csv(&file, csv, &format!("{} states", l.kernel.len()))?;
            Ok(true)
        }
        Command::Decompose(m) => {
            let l = m.load()?;
            let d = l.kernel.invariant_measures()?;
            let csv = d.to_csv(l.kernel.space());
            sink.emit_with_csv(&d, csv, &format!("{} ergodic measures", d.len()))?;
            Ok(true)
        }
        Command::Distance(a) => distance(a, sink),
        Command::Check(a) => check(*a, sink, tol),
        Command::Example(a) => example(a, sink),
    }
}

fn distance(a: DistanceArgs, sink: &Sink) -> Result<bool> {
    let l = a.model.load()?;
    let x = l.state(&a.x, "x")?;
    let y = l.state(&a.y, "y")?;
    if a.t == 0 {
        bail!("t: must be positive");
    }
    let space = l.kernel.space();
    let mu = l.kernel.push_point(x, a.t);
    let nu = l.kernel.push_point(y, a.t);
    let cost = || -> Result<CostMatrix> {
        Ok(match a.cost {
            CostName::Metric => CostMatrix::metric(space),
            CostName::Mismatch => CostMatrix::mismatch(space.len()),
            CostName::Capped => capped_lipschitz_cost(space, a.a, a.k)?,
            CostName::Separating => separating_family(space, a.n)?,
            CostName::Threshold => {
                if a.eps.is_nan() || a.eps <= 0.0 {
                    bail!("eps: must be positive");
                }
                CostMatrix::threshold(space, a.eps)
            }
        })
    };
    let (value, coupling, gap) = match a.kind {
        DistanceKind::Wasserstein => {
            let r = wasserstein(&mu, &nu, &cost()?)?;
            (r.value, Some(r.coupling), Some(r.duality_gap))
        }
        DistanceKind::Tv => (tv_distance(&mu, &nu)?, Some(maximal_coupling(&mu, &nu)?), None),
        DistanceKind::Dual => (kantorovich_dual_value(&mu, &nu, &cost()?)?, None, None),
        DistanceKind::Closeness => {
            let (v, c) = max_closeness(&mu, &nu, space, a.eps)?;
            (v, Some(c), None)
        }
    };
    if let Some(path) = &a.coupling {
        let c = coupling.as_ref().ok_or_else(|| anyhow!("coupling: not available for the dual value"))?;
        let text = serde_json::to_string_pretty(&c.to_file(space, space))? + "\n";
        std::fs::write(path, text).with_context(|| format!("coupling: cannot write {}", path.display()))?;
    }
    let kind = match a.kind {
        DistanceKind::Wasserstein => "wasserstein",
        DistanceKind::Tv => "tv",
        DistanceKind::Dual => "dual",
        DistanceKind::Closeness => "closeness",
    };
    let report = json!({
        "distance": kind,
        "x": space.label(x),
        "y": space.label(y),
        "t": a.t,
        "cost": if matches!(a.kind, DistanceKind::Wasserstein | DistanceKind::Dual) { json!(a.cost) } else { json!(null) },
        "eps": if a.kind == DistanceKind::Closeness { json!(a.eps) } else { json!(null) },
        "value": value,
        "duality_gap": gap,
    });
    if sink.out.is_some() {
        sink.emit(&report, &value.to_string())?;
    } else {
        println!("{value}");
    }
    Ok(true)
}

fn require<'a, T>(v: &'a Option<T>, field: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| anyhow!("{field}: required"))
}

fn check(a: CheckArgs, sink: &Sink, tol: Option<f64>) -> Result<bool> {
    let l = a.model.load()?;
    let kernel = &l.kernel;
    let times: Vec<u32> = input::list(&a.times, "times")?;
    let pass = match a.property {
        Property::Asf => {
            let x = l.state(require(&a.x, "x")?, "x")?;
            let n_list: Vec<u32> = input::list(require(&a.n_list, "n-list")?, "n-list")?;
            let radii: Vec<f64> = input::list(require(&a.radii, "radii")?, "radii")?;
            let p = diag::asf_profile(kernel, x, &times, &n_list, &radii)?;
            let tail = p.tail_estimate.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
            sink.emit(&p, &format!("asf profile: tail estimate [{tail}]"))?;
            return Ok(true);
        }
        Property::AsfPlus => {
            let cert = input::certificate(require(&a.cert, "cert")?)?;
            let pairs = l.pairs(a.pairs.as_deref(), "pairs")?;
            let mut r = diag::check_asf_plus(kernel, &cert, &pairs, &input::ak_grid(&a.ak)?)?;
            if let Some(t) = tol {
                r = r.with_tolerance(t);
            }
            let worst = r.worst.as_ref().map_or(0.0, |w| w.margin);
            let s = format!("{} asf-plus: {} records, worst margin {worst}", verdict_word(r.pass), r.records.len());
            sink.emit(&r, &s)?;
            r.pass
        }
        Property::Lwi => {
            let r = diag::check_lwi(kernel, a.radius, a.eps, &times)?;
            let v = r.records.last().map_or(1.0, |x| x.value);
            let s = format!("{} lwi: ball of {} states, value {v} at last time", verdict_word(r.pass), r.ball.len());
            sink.emit(&r, &s)?;
            r.pass
        }
        Property::A1 => {
            let provider = input::provider(require(&a.provider, "provider")?)?;
            let f1 = input::envelope(require(&a.f1, "f1")?, "f1")?;
            let f2 = input::envelope(require(&a.f2, "f2")?, "f2")?;
            let rate = input::rate(require(&a.rate, "rate")?, "rate")?;
            let x0 = match &a.x0 {
                Some(s) => l.state(s, "x0")?,
                None => kernel.space().base_index(),
            };
            let pairs = l.pairs(a.pairs.as_deref(), "pairs")?;
            let mut r = diag::verify_a1(kernel, provider.as_ref(), x0, &f1, &f2, &rate, &pairs, &times)?;
            if let Some(t) = tol {
                r = r.with_tolerance(t);
            }
            if let (Some(path), true) = (&a.fit, r.pass) {
                let cert = diag::fit_asf_plus_envelope(&r)?;
                let text = serde_json::to_string_pretty(&cert)? + "\n";
                std::fs::write(path, text).with_context(|| format!("fit: cannot write {}", path.display()))?;
            }
            let s = format!("{} a1: {} records", verdict_word(r.pass), r.records.len());
            sink.emit(&r, &s)?;
            r.pass
        }
        Property::A2 => {
            let provider = input::provider(require(&a.provider, "provider")?)?;
            let rate = input::rate(require(&a.rate, "rate")?, "rate")?;
            let b = match (&a.states, a.ball) {
                (Some(s), _) => l.states(s, "states")?,
                (None, Some(r)) => kernel.space().base_ball(r),
                (None, None) => bail!("ball: one of --ball or --states is required"),
            };
            let mut r = diag::verify_a2(kernel, provider.as_ref(), &b, a.eps, &rate, &times)?;
            if let Some(t) = tol {
                r = r.with_tolerance(t);
            }
            let s = format!("{} a2: {} records, eps* {}", verdict_word(r.pass), r.records.len(), r.eps_star);
            sink.emit(&r, &s)?;
            r.pass
        }
        Property::Uniqueness => {
            let cert = input::certificate(require(&a.cert, "cert")?)?;
            let pairs = l.pairs(a.pairs.as_deref(), "pairs")?;
            let lwi = LwiParams { radius: a.radius, eps: a.eps, times: &times };
            let mut v = diag::uniqueness_verdict(kernel, &cert, &pairs, &input::ak_grid(&a.ak)?, lwi)?;
            if let Some(t) = tol {
                v = v.with_tolerance(t);
            }
            let s = if v.implied {
                format!("PASS uniqueness: implied, {} ergodic measure(s)", v.decomposition_count)
            } else {
                format!("FAIL uniqueness: not implied ({}), {} ergodic measure(s)", v.reasons.join("; "), v.decomposition_count)
            };
            sink.emit(&v, &s)?;
            v.implied && v.consistent
        }
        Property::Separation => {
            let cert = input::certificate(require(&a.cert, "cert")?)?;
            let idx: Vec<usize> = input::list(&a.classes, "classes")?;
            let [i, j] = idx[..] else { bail!("classes: expected two indices") };
            let d = kernel.invariant_measures()?;
            let get = |k: usize| {
                d.measures.get(k).ok_or_else(|| anyhow!("classes: index {k} out of range ({} ergodic measures)", d.len()))
            };
            let mut r = diag::support_separation(get(i)?, get(j)?, &cert.f, kernel.space(), cert.x0)?;
            if let Some(t) = tol {
                r = r.with_tolerance(t);
            }
            let s = format!("{} separation: min ratio {}", verdict_word(r.pass), r.min_ratio);
            sink.emit(&r, &s)?;
            r.pass
        }
    };
    Ok(pass)
}

fn example(a: ExampleArgs, sink: &Sink) -> Result<bool> {
    let r = match a.name {
        ExampleName::XiChain => xi_chain_report(&XiChainSpec::new(a.xi, a.depth)?)?,
        ExampleName::Gaussian => gaussian_report(&GaussianWalkSpec::new(a.half_width, a.step)?, a.lambda)?,
        ExampleName::Interval => interval_report(&IntervalChainSpec::new(a.grid)?)?,
    };
    let failed = r.rows.iter().filter(|row| !row.pass).count();
    let s = format!("{} {}: {} claims, {failed} failed", verdict_word(r.pass), r.example, r.rows.len());
    sink.emit(&r, &s)?;
    Ok(r.pass)
}
