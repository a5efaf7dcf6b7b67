//! Command-line front end. `run` is the whole program minus process exit,
//! so it can be driven from tests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::experiments::{
    builtin_pattern, calibrate_reps, estimate_rejection, query_sweep, rejection_report_json,
    sweep_csv, GenSpec, Instance, TrialConfig,
};
use crate::graph::{load_graph, Graph};
use crate::oracle::{GraphOracle, Seed};
use crate::pipeline::{reduce_to_layered, PipelineOptions, PipelineOrder};
use crate::sparsity::{treedepth_exact, EXACT_TREEDEPTH_CAP};
use crate::tester::{test_h_freeness, TesterShape};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "htest",
    version,
    about = "Constant-query subgraph-freeness testing in the random neighbor model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate an instance; prints its certificate as JSON.
    Gen(GenArgs),
    /// Run the tester on a graph file; prints the verdict as JSON.
    Test(TestArgs),
    /// Query-count sweep over instance sizes; prints CSV.
    Sweep(SweepArgs),
    /// Run the copy-refinement pipeline; prints a stage report as JSON.
    Pipeline(PipelineArgs),
    /// Exact treedepth with an optimal tree embedding.
    Treedepth(TreedepthArgs),
    /// Compare fast routines against brute force on small graphs.
    Selfcheck(SelfcheckArgs),
}

#[derive(Args, Debug)]
pub struct SeedArg {
    /// Random seed (defaults to HTEST_SEED, then to a fresh value).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Generator: p5, tree, planted:<pattern>, bounded:<pattern>[:cap].
    #[arg(long = "gen")]
    pub generator: String,
    /// Approximate vertex count (first value is used).
    #[arg(long, value_delimiter = ',', default_value = "100")]
    pub sizes: Vec<usize>,
    /// Proximity to check the certificate against.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Graph file to write; embedded in the JSON when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Args, Debug)]
pub struct TestArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Builtin name (triangle, p5, c4, k4) or a graph file.
    #[arg(long)]
    pub pattern: String,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 10)]
    pub reps: u64,
    /// Run this many independent trials and report the rejection rate.
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Include the full query transcript in the verdict.
    #[arg(long)]
    pub transcript: bool,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long = "gen", default_value = "p5")]
    pub generator: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    /// Repetitions; calibrated at the first size when omitted.
    #[arg(long)]
    pub reps: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OrderArg {
    Layered,
    ColorRestrict,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub pattern: String,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Assignment trials for the uniform-coloring stage.
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    #[arg(long, value_enum, default_value = "layered")]
    pub order: OrderArg,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Args, Debug)]
pub struct TreedepthArgs {
    #[arg(long)]
    pub graph: PathBuf,
}

#[derive(Args, Debug)]
pub struct SelfcheckArgs {
    /// Random samples per check.
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    #[command(flatten)]
    pub seed: SeedArg,
}

fn resolve_seed(arg: &SeedArg) -> Seed {
    arg.seed
        .map(Seed)
        .or_else(Seed::from_env)
        .unwrap_or_else(|| Seed(rand::rng().random()))
}

fn read_graph(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Precondition(format!("{}: {e}", path.display())))?;
    load_graph(&text).map_err(|e| Error::Precondition(format!("{}: {e}", path.display())))
}

fn resolve_pattern(spec: &str) -> Result<Graph> {
    match builtin_pattern(spec) {
        Some(g) => Ok(g),
        None if Path::new(spec).exists() => read_graph(Path::new(spec)),
        None => Err(Error::Precondition(format!(
            "unknown pattern {spec:?}: use triangle, p5, c4, k4 or a graph file"
        ))),
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Precondition(format!("{}: {e}", path.display())))
}

fn cmd_gen(a: &GenArgs, out: &mut dyn Write) -> Result<i32> {
    let spec: GenSpec = a.generator.parse()?;
    let seed = resolve_seed(&a.seed);
    let size = a.sizes[0];
    let inst: Instance = spec.build(size, seed)?;
    let eps = a.eps.unwrap_or(inst.eps_bound() / 2.0);
    let mut report = json!({
        "schema": 1,
        "instance": inst.summary(eps),
        "certificate": inst.certificate_json(),
        "seed": seed.0,
    });
    match &a.out {
        Some(p) => {
            write_file(p, &inst.graph.to_text())?;
            report["graph_file"] = json!(p.display().to_string());
        }
        None => report["graph"] = json!(inst.graph.to_text()),
    }
    writeln!(out, "{}", pretty(&report)).ok();
    Ok(EXIT_OK)
}

fn cmd_test(a: &TestArgs, out: &mut dyn Write) -> Result<i32> {
    let g = read_graph(&a.graph)?;
    let h = resolve_pattern(&a.pattern)?;
    let seed = resolve_seed(&a.seed);
    if let Some(trials) = a.trials {
        let cfg = TrialConfig {
            eps: a.eps,
            reps: a.reps,
            trials,
            seed,
            jobs: a.jobs,
        };
        let rep = estimate_rejection(&g, &h, &cfg)?;
        let inst = Instance {
            generator: "file".into(),
            params: json!({ "path": a.graph.display().to_string() }),
            graph: g,
            pattern: h,
            certificate: None,
        };
        writeln!(
            out,
            "{}",
            pretty(&rejection_report_json(
                &inst, &a.pattern, a.eps, a.reps, &rep, seed
            ))
        )
        .ok();
        return Ok(EXIT_OK);
    }
    let mut oracle = GraphOracle::new(&g, seed);
    if a.transcript {
        oracle = oracle.with_transcript();
    }
    let verdict = test_h_freeness(&mut oracle, &h, a.eps, a.reps)?;
    let shape = TesterShape::of(&h);
    let report = json!({
        "schema": 1,
        "verdict": verdict,
        "tester": { "pattern": a.pattern, "n_reps": a.reps, "depth": shape.depth, "breadth": shape.breadth },
        "seed": seed.0,
    });
    writeln!(out, "{}", pretty(&report)).ok();
    Ok(if verdict.is_reject() {
        EXIT_REJECT
    } else {
        EXIT_OK
    })
}

const CALIBRATION_TARGET: f64 = 0.75;
const CALIBRATION_MAX_REPS: u64 = 500;

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let spec: GenSpec = a.generator.parse()?;
    let seed = resolve_seed(&a.seed);
    let base = TrialConfig {
        eps: a.eps,
        reps: 1,
        trials: a.trials,
        seed,
        jobs: a.jobs,
    };
    let reps = match a.reps {
        Some(r) => r,
        None => {
            let inst = spec.build(a.sizes[0], seed)?;
            let cal = calibrate_reps(
                &inst.graph,
                &inst.pattern,
                CALIBRATION_TARGET,
                CALIBRATION_MAX_REPS,
                &base,
            )?;
            let r = cal.reps.ok_or_else(|| {
                Error::Precondition(format!(
                    "no repetition count up to {CALIBRATION_MAX_REPS} reaches rate {CALIBRATION_TARGET} at size {}",
                    a.sizes[0]
                ))
            })?;
            writeln!(
                err,
                "calibrated reps={r} at size {} (seed {})",
                a.sizes[0], seed.0
            )
            .ok();
            r
        }
    };
    let rows = query_sweep(&spec, &a.sizes, &TrialConfig { reps, ..base })?;
    let csv = sweep_csv(&rows);
    match &a.out {
        Some(p) => write_file(p, &csv)?,
        None => write!(out, "{csv}").map_err(|e| Error::Precondition(e.to_string()))?,
    }
    Ok(EXIT_OK)
}

fn cmd_pipeline(a: &PipelineArgs, out: &mut dyn Write) -> Result<i32> {
    let g = read_graph(&a.graph)?;
    let h = resolve_pattern(&a.pattern)?;
    let seed = resolve_seed(&a.seed);
    let opts = PipelineOptions {
        order: match a.order {
            OrderArg::Layered => PipelineOrder::Layered,
            OrderArg::ColorRestrict => PipelineOrder::ColorRestrict,
        },
        coloring_trials: a.trials,
        seed,
        ..PipelineOptions::default()
    };
    let (report, code) = match reduce_to_layered(&g, &h, a.eps, &opts) {
        Ok(o) => (
            json!({
                "schema": 1,
                "ok": true,
                "stages": o.stages,
                "copies": o.copies.len(),
                "layers": o.layered.as_ref().map(|l| l.color_of_level()),
                "stripped_isolated": o.stripped_isolated,
                "seed": seed.0,
            }),
            EXIT_OK,
        ),
        Err(e @ (Error::BoundViolated { .. } | Error::TrialsExhausted { .. })) => (
            json!({ "schema": 1, "ok": false, "error": e.to_string(), "seed": seed.0 }),
            EXIT_REJECT,
        ),
        Err(e) => return Err(e),
    };
    writeln!(out, "{}", pretty(&report)).ok();
    Ok(code)
}

fn cmd_treedepth(a: &TreedepthArgs, out: &mut dyn Write) -> Result<i32> {
    let g = read_graph(&a.graph)?;
    let (td, order) = treedepth_exact(&g).map_err(|e| match e {
        Error::TreedepthCapExceeded { size, cap } => Error::Precondition(format!(
            "a component has {size} vertices; exact treedepth is limited to {cap} (limit {EXACT_TREEDEPTH_CAP})"
        )),
        e => e,
    })?;
    writeln!(out, "td={td}").ok();
    for v in g.vertices() {
        let parent = order
            .parent(v)
            .map(|p| p.to_string())
            .unwrap_or_else(|| "-".into());
        writeln!(out, "{v} {parent} {}", order.level(v)).ok();
    }
    Ok(EXIT_OK)
}

fn cmd_selfcheck(a: &SelfcheckArgs, out: &mut dyn Write) -> Result<i32> {
    let seed = resolve_seed(&a.seed);
    let results = crate::selfcheck::run_all(a.trials, seed);
    let mut all = true;
    for r in &results {
        all &= r.passed;
        writeln!(
            out,
            "{} {} ({})",
            if r.passed { "ok  " } else { "FAIL" },
            r.name,
            r.detail
        )
        .ok();
    }
    writeln!(out, "seed={}", seed.0).ok();
    Ok(if all { EXIT_OK } else { EXIT_REJECT })
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                write!(err, "{text}").ok();
            } else {
                write!(out, "{text}").ok();
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a, out),
        Command::Test(a) => cmd_test(a, out),
        Command::Sweep(a) => cmd_sweep(a, out, err),
        Command::Pipeline(a) => cmd_pipeline(a, out),
        Command::Treedepth(a) => cmd_treedepth(a, out),
        Command::Selfcheck(a) => cmd_selfcheck(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            writeln!(err, "error: {e}").ok();
            EXIT_USAGE
        }
    }
}
