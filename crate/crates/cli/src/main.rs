//! `dsr`: solve, batch, validate and inspect single-step restoration problems.
//!
//! Exit codes: 0 ok, 1 internal error, 2 usage or input error, 3 infeasible,
//! 4 solver limit hit, 5 validation failed.

mod report;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use dsr_core::{
    aggregates_csv, build, builtin_ieee37, default_switch_state, derive_post_outage, load_feeder, records_csv,
    run_batch, solve_scenario, validate_with, BatchSpec, BuildOptions, DsrError, Feeder, OutageScenario, ScenarioFile,
    Topology,
};
use dsr_milp::{export_mps, MilpOptions, SolveStatus};

use report::{PlanDocument, SolveInfo};

const EXIT_INTERNAL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_LIMIT: u8 = 4;
const EXIT_INVALID: u8 = 5;

/// Single-step distribution system restoration.
#[derive(Parser)]
#[command(name = "dsr", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one outage scenario and print the restoration plan.
    Solve(SolveArgs),
    /// Solve seeded random outages for several outage sizes.
    Batch(BatchArgs),
    /// Re-check a plan file written by `solve`.
    Validate(ValidateArgs),
    /// Write the restoration MILP of a scenario as free MPS.
    ExportMps(ExportArgs),
    /// Print the cycles and generator paths of a feeder.
    InspectGraph(InspectArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct FeederSource {
    /// Feeder JSON file.
    #[arg(long, value_name = "PATH")]
    feeder: Option<PathBuf>,
    /// Use the built-in IEEE 37-bus feeder.
    #[arg(long)]
    builtin_ieee37: bool,
}

#[derive(Args)]
struct ScenarioSource {
    /// Scenario JSON file (failed edges, switch positions, solar availability).
    #[arg(long, value_name = "PATH", conflicts_with = "fail")]
    scenario: Option<PathBuf>,
    /// Failed edges by id or label, comma separated (e.g. 713-704,720-706).
    #[arg(long, value_delimiter = ',', value_name = "EDGES")]
    fail: Vec<String>,
}

#[derive(Args)]
struct ModelArgs {
    /// Switching penalty per operation (default: the feeder's, 1e-3 built in).
    #[arg(long)]
    lambda: Option<f64>,
    /// Use flows directly in switched voltage-drop rows (smaller model).
    #[arg(long)]
    tight: bool,
    /// Keep the status rows of buses and edges the scenario already fixes.
    #[arg(long)]
    keep_fixed_rows: bool,
}

#[derive(Args)]
struct SolverArgs {
    /// Wall-clock limit per scenario in seconds.
    #[arg(long, default_value_t = 300.0)]
    time_limit: f64,
    /// Branch-and-bound node limit per scenario.
    #[arg(long)]
    node_limit: Option<usize>,
    /// Relative optimality gap.
    #[arg(long, default_value_t = 1e-6)]
    gap: f64,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    source: FeederSource,
    #[command(flatten)]
    scenario: ScenarioSource,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write the plan document (JSON) here.
    #[arg(long, short, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Print the plan document as JSON instead of a summary.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BatchArgs {
    #[command(flatten)]
    source: FeederSource,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Outage sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    k: Vec<usize>,
    /// Scenarios per outage size.
    #[arg(long, short, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 2019)]
    seed: u64,
    /// Let outages hit switches and regulators too.
    #[arg(long)]
    widen_outages: bool,
    /// Worker threads (default: all cores).
    #[arg(long, env = "DSR_WORKERS")]
    workers: Option<usize>,
    /// Per-scenario CSV output.
    #[arg(long, value_name = "PATH")]
    records: Option<PathBuf>,
    /// Per-k aggregate CSV output.
    #[arg(long, value_name = "PATH")]
    aggregates: Option<PathBuf>,
    /// Write wall-clock columns as 0 so repeated runs compare byte for byte.
    #[arg(long)]
    no_timing: bool,
    /// Print aggregates as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ValidateArgs {
    /// Plan document written by `solve --out`.
    plan: PathBuf,
    /// Absolute tolerance of the checks.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    source: FeederSource,
    #[command(flatten)]
    scenario: ScenarioSource,
    #[command(flatten)]
    model: ModelArgs,
    /// MPS output path (default: stdout).
    #[arg(long, short, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Also write the model (variables, rows, objective) as JSON.
    #[arg(long, value_name = "PATH")]
    dump_model: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    #[command(flatten)]
    source: FeederSource,
    #[arg(long)]
    json: bool,
}

/// A message and the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

impl From<DsrError> for Failure {
    fn from(e: DsrError) -> Self {
        let code = match &e {
            DsrError::Feeder(_) | DsrError::Scenario(_) | DsrError::BadBatch(_) => EXIT_USAGE,
            DsrError::InfeasibleScenario { .. } => EXIT_INFEASIBLE,
            DsrError::ValidationFailed { .. } => EXIT_INVALID,
            _ => EXIT_INTERNAL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::internal(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map_err(|e| Failure::internal(e.to_string()))
}

fn load_source(source: &FeederSource, model: Option<&ModelArgs>) -> Result<Feeder, Failure> {
    let mut feeder = match &source.feeder {
        Some(path) => load_feeder(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?,
        None => builtin_ieee37(),
    };
    if let Some(lambda) = model.and_then(|m| m.lambda) {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Failure::usage(format!(
                "--lambda must be a non-negative number, got {lambda}"
            )));
        }
        feeder.lambda = lambda;
    }
    Ok(feeder)
}

fn load_scenario(feeder: &Feeder, src: &ScenarioSource) -> Result<OutageScenario, Failure> {
    let scenario = match &src.scenario {
        Some(path) => {
            let file =
                ScenarioFile::parse(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            file.derive(feeder)
        }
        None => {
            let failed = src
                .fail
                .iter()
                .map(|label| feeder.resolve_edge(label.trim()))
                .collect::<Result<BTreeSet<_>, _>>()
                .map_err(|e| Failure::usage(e.to_string()))?;
            derive_post_outage(feeder, &failed, &default_switch_state(feeder))
        }
    };
    scenario.map_err(|e| Failure::usage(e.to_string()))
}

fn build_options(m: &ModelArgs) -> BuildOptions {
    BuildOptions {
        tight: m.tight,
        keep_fixed_rows: m.keep_fixed_rows,
    }
}

fn milp_options(s: &SolverArgs) -> Result<MilpOptions, Failure> {
    if !(s.time_limit > 0.0 && s.time_limit.is_finite()) {
        return Err(Failure::usage("--time-limit must be positive"));
    }
    if !(s.gap >= 0.0 && s.gap.is_finite()) {
        return Err(Failure::usage("--gap must be non-negative"));
    }
    Ok(MilpOptions {
        time_limit: Some(Duration::from_secs_f64(s.time_limit)),
        node_limit: s.node_limit,
        gap_tol: s.gap,
        ..MilpOptions::default()
    })
}

fn topology(feeder: &Feeder) -> Result<Topology, Failure> {
    Topology::analyze(feeder).map_err(|e| DsrError::from(e).into())
}

fn feeder_value(feeder: &Feeder) -> Result<serde_json::Value, Failure> {
    serde_json::from_str(&feeder.to_json()).map_err(|e| Failure::internal(e.to_string()))
}

fn cmd_solve(args: &SolveArgs) -> CmdResult {
    let feeder = load_source(&args.source, Some(&args.model))?;
    let scenario = load_scenario(&feeder, &args.scenario)?;
    let milp = milp_options(&args.solver)?;
    let topo = topology(&feeder)?;
    let solved = solve_scenario(&feeder, &topo, &scenario, build_options(&args.model), &milp)?;
    let summary = solved.plan.as_ref().map(|p| report::summarize(&feeder, &scenario, p));
    let doc = PlanDocument {
        feeder: feeder_value(&feeder)?,
        scenario,
        solve: SolveInfo::from(&solved.report),
        plan: solved.plan,
        summary,
        validation: solved.validation,
    };
    let json = to_json(&doc)?;
    if let Some(path) = &args.out {
        write(path, &json)?;
    }
    if args.json {
        println!("{json}");
    } else {
        print!("{}", report::plan_text(&feeder, &doc));
    }
    Ok(match solved.report.status {
        SolveStatus::Infeasible | SolveStatus::Unbounded => EXIT_INFEASIBLE,
        s if s.is_limit() => EXIT_LIMIT,
        _ if doc.validation.as_ref().is_some_and(|v| !v.pass) => EXIT_INVALID,
        _ => 0,
    })
}

fn cmd_batch(args: &BatchArgs) -> CmdResult {
    let feeder = load_source(&args.source, Some(&args.model))?;
    let spec = BatchSpec {
        k_values: args.k.clone(),
        n_per_k: args.n,
        seed: args.seed,
        milp: milp_options(&args.solver)?,
        build: build_options(&args.model),
        lambda: None,
        workers: args.workers,
        widen_outages: args.widen_outages,
    };
    if args.workers == Some(0) {
        return Err(Failure::usage("--workers must be at least 1"));
    }
    let result = run_batch(&feeder, &spec)?;
    let timing = !args.no_timing;
    if let Some(path) = &args.records {
        write(path, &records_csv(&result.records, timing))?;
    }
    if let Some(path) = &args.aggregates {
        write(path, &aggregates_csv(&result.aggregates, timing))?;
    }
    if args.json {
        println!("{}", to_json(&result.aggregates)?);
    } else {
        print!("{}", report::aggregates_text(&result.aggregates));
    }
    let limits = result.records.iter().filter(|r| r.status.is_limit()).count();
    if limits > 0 {
        eprintln!("{limits} scenarios stopped at a solver limit");
        return Ok(EXIT_LIMIT);
    }
    Ok(0)
}

fn cmd_validate(args: &ValidateArgs) -> CmdResult {
    let text = read(&args.plan)?;
    let doc: PlanDocument = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{}: not a plan document: {e}", args.plan.display())))?;
    let feeder = load_feeder(&doc.feeder.to_string()).map_err(|e| Failure::usage(e.to_string()))?;
    let Some(plan) = &doc.plan else {
        return Err(Failure::usage("plan document holds no plan"));
    };
    if !(args.tol > 0.0) {
        return Err(Failure::usage("--tol must be positive"));
    }
    let v = validate_with(&feeder, &doc.scenario, plan, args.tol).map_err(|e| Failure::usage(e.to_string()))?;
    if args.json {
        println!("{}", to_json(&v)?);
    } else {
        println!("{}", report::validation_text(&v));
    }
    Ok(if v.pass { 0 } else { EXIT_INVALID })
}

fn cmd_export(args: &ExportArgs) -> CmdResult {
    let feeder = load_source(&args.source, Some(&args.model))?;
    let scenario = load_scenario(&feeder, &args.scenario)?;
    let topo = topology(&feeder)?;
    let dsr = build(&feeder, &scenario, &topo, build_options(&args.model)).map_err(DsrError::from)?;
    let mps = export_mps(&dsr.model).map_err(|e| Failure::internal(e.to_string()))?;
    match &args.out {
        Some(path) => write(path, &mps)?,
        None => print!("{mps}"),
    }
    if let Some(path) = &args.dump_model {
        write(path, &to_json(&dsr.model)?)?;
    }
    Ok(0)
}

fn cmd_inspect(args: &InspectArgs) -> CmdResult {
    let feeder = load_source(&args.source, None)?;
    let topo = topology(&feeder)?;
    if args.json {
        println!("{}", to_json(&topo)?);
    } else {
        print!("{}", report::topology_text(&feeder, &topo));
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Batch(a) => cmd_batch(a),
        Command::Validate(a) => cmd_validate(a),
        Command::ExportMps(a) => cmd_export(a),
        Command::InspectGraph(a) => cmd_inspect(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
