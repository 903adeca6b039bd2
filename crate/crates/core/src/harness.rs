//! Random outage batches: sampling, solving, validation and CSV output.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use dsr_milp::{solve_milp, MilpOptions, SolveReport, SolveStatus};

use crate::builder::{build, BuildOptions, DsrModel};
use crate::error::{DsrError, ScenarioError};
use crate::feeder::{default_switch_state, derive_post_outage, EdgeId, EdgeKind, Feeder, OutageScenario, ScenarioFile};
use crate::graph::Topology;
use crate::plan::{restored_load_pct, RestorationPlan};
use crate::validator::{validate, ValidationReport};

/// Edges a random outage may hit. By default only in-service lines with a
/// nonzero impedance (zero-impedance ties merely split a bus in two);
/// `widen` adds switches and regulators.
pub fn outage_candidates(feeder: &Feeder, widen: bool) -> Vec<EdgeId> {
    feeder
        .edges
        .iter()
        .filter(|e| match e.kind {
            EdgeKind::InService => e.r != 0.0 || e.x != 0.0,
            EdgeKind::Switch | EdgeKind::Regulator => widen,
            EdgeKind::OutOfService => false,
        })
        .map(|e| e.id)
        .collect()
}

/// Generator for scenario `index` of outage size `k`: ChaCha8 keyed by the
/// batch seed, on stream `(k << 32) | index`.
pub fn scenario_rng(seed: u64, k: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((k as u64) << 32) | index as u64);
    rng
}

/// Draws `k` distinct outage candidates uniformly and a uniform solar
/// availability in `[0, rated]` for every non-black-start unit.
pub fn sample_scenario(
    feeder: &Feeder,
    k: usize,
    rng: &mut impl Rng,
    widen: bool,
) -> Result<OutageScenario, ScenarioError> {
    let candidates = outage_candidates(feeder, widen);
    if k > candidates.len() {
        return Err(ScenarioError::TooManyOutages {
            k,
            available: candidates.len(),
        });
    }
    let failed: BTreeSet<EdgeId> = sample(rng, candidates.len(), k)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    let mut solar = BTreeMap::new();
    for i in feeder.non_black_start() {
        let rated = feeder.buses[i].p_max;
        solar.insert(i, rng.gen::<f64>() * rated);
    }
    derive_post_outage(feeder, &failed, &default_switch_state(feeder))?.with_solar(feeder, solar)
}

/// Everything produced for one scenario.
#[derive(Debug, Clone)]
pub struct Solved {
    pub model: DsrModel,
    pub report: SolveReport,
    pub plan: Option<RestorationPlan>,
    pub validation: Option<ValidationReport>,
}

/// Build, solve, extract and validate.
pub fn solve_scenario(
    feeder: &Feeder,
    topo: &Topology,
    scenario: &OutageScenario,
    build_opts: BuildOptions,
    milp: &MilpOptions,
) -> Result<Solved, DsrError> {
    let model = build(feeder, scenario, topo, build_opts)?;
    let report = solve_milp(&model.model, milp)?;
    let (plan, validation) = match (&report.values, report.objective) {
        (Some(values), Some(obj)) => {
            let plan = RestorationPlan::extract(feeder, scenario, &model, values, obj)?;
            let validation = validate(feeder, scenario, &plan)?;
            (Some(plan), Some(validation))
        }
        _ => (None, None),
    };
    Ok(Solved {
        model,
        report,
        plan,
        validation,
    })
}

#[derive(Debug, Clone)]
pub struct BatchSpec {
    pub k_values: Vec<usize>,
    pub n_per_k: usize,
    pub seed: u64,
    pub milp: MilpOptions,
    pub build: BuildOptions,
    /// Replaces the feeder's switching penalty.
    pub lambda: Option<f64>,
    /// Worker threads; `None` uses the rayon default.
    pub workers: Option<usize>,
    /// Let outages hit switches and regulators too.
    pub widen_outages: bool,
}

impl Default for BatchSpec {
    fn default() -> Self {
        Self {
            k_values: (1..=5).collect(),
            n_per_k: 200,
            seed: 2019,
            milp: MilpOptions::default(),
            build: BuildOptions::default(),
            lambda: None,
            workers: None,
            widen_outages: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioRecord {
    pub k: usize,
    pub index: usize,
    pub failed_edges: Vec<EdgeId>,
    pub restored_pct: f64,
    pub objective: Option<f64>,
    pub switch_changes: usize,
    pub wall_ms: f64,
    pub status: SolveStatus,
    pub valid: bool,
    pub nodes: usize,
    #[serde(skip)]
    pub scenario: OutageScenario,
    #[serde(skip)]
    pub plan: Option<RestorationPlan>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KAggregate {
    pub k: usize,
    pub n: usize,
    pub max_ms: f64,
    pub median_ms: f64,
    pub mean_restored_pct: f64,
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub records: Vec<ScenarioRecord>,
    pub aggregates: Vec<KAggregate>,
}

/// Scenario file reproducing a sampled scenario.
pub fn replay_file(scenario: &OutageScenario, seed: u64) -> ScenarioFile {
    ScenarioFile {
        failed_edges: scenario.failed_edges.iter().copied().collect(),
        switch_state: BTreeMap::new(),
        solar_avail: scenario.solar_avail.clone(),
        seed: Some(seed),
    }
}

fn run_one(
    feeder: &Feeder,
    topo: &Topology,
    spec: &BatchSpec,
    k: usize,
    index: usize,
) -> Result<ScenarioRecord, DsrError> {
    let mut rng = scenario_rng(spec.seed, k, index);
    let scenario = sample_scenario(feeder, k, &mut rng, spec.widen_outages)?;
    let replay = || serde_json::to_string(&replay_file(&scenario, spec.seed)).unwrap_or_default();
    let start = Instant::now();
    let solved = solve_scenario(feeder, topo, &scenario, spec.build, &spec.milp)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    match solved.report.status {
        SolveStatus::Infeasible | SolveStatus::Unbounded => {
            return Err(DsrError::InfeasibleScenario {
                k,
                index,
                scenario: replay(),
            })
        }
        _ => {}
    }
    let valid = match &solved.validation {
        Some(v) if !v.pass => {
            return Err(DsrError::ValidationFailed {
                k,
                index,
                violations: v.summary(),
                scenario: replay(),
            })
        }
        Some(_) => true,
        None => false,
    };
    let (restored_pct, switch_changes) = match &solved.plan {
        Some(plan) => (
            restored_load_pct(feeder, plan),
            plan.switch_changes(feeder, &scenario).len(),
        ),
        None => (0.0, 0),
    };
    Ok(ScenarioRecord {
        k,
        index,
        failed_edges: scenario.failed_edges.iter().copied().collect(),
        restored_pct,
        objective: solved.report.objective,
        switch_changes,
        wall_ms,
        status: solved.report.status,
        valid,
        nodes: solved.report.nodes,
        scenario,
        plan: solved.plan,
    })
}

pub fn run_batch(feeder: &Feeder, spec: &BatchSpec) -> Result<BatchResult, DsrError> {
    if spec.n_per_k == 0 {
        return Err(DsrError::BadBatch("n_per_k must be at least 1".into()));
    }
    if spec.k_values.is_empty() {
        return Err(DsrError::BadBatch("no outage sizes given".into()));
    }
    let available = outage_candidates(feeder, spec.widen_outages).len();
    if let Some(&k) = spec.k_values.iter().find(|&&k| k > available) {
        return Err(ScenarioError::TooManyOutages { k, available }.into());
    }
    let mut feeder = feeder.clone();
    if let Some(lambda) = spec.lambda {
        if !(lambda >= 0.0) {
            return Err(DsrError::BadBatch(format!("lambda must be non-negative, got {lambda}")));
        }
        feeder.lambda = lambda;
    }
    let topo = Topology::analyze(&feeder)?;
    let tasks: Vec<(usize, usize)> = spec
        .k_values
        .iter()
        .flat_map(|&k| (0..spec.n_per_k).map(move |i| (k, i)))
        .collect();
    let work = || -> Vec<Result<ScenarioRecord, DsrError>> {
        tasks
            .par_iter()
            .map(|&(k, i)| run_one(&feeder, &topo, spec, k, i))
            .collect()
    };
    let results = match spec.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| DsrError::BadBatch(e.to_string()))?
            .install(work),
        None => work(),
    };
    let records = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let aggregates = aggregate(&spec.k_values, &records);
    Ok(BatchResult { records, aggregates })
}

fn aggregate(k_values: &[usize], records: &[ScenarioRecord]) -> Vec<KAggregate> {
    k_values
        .iter()
        .map(|&k| {
            let rs: Vec<&ScenarioRecord> = records.iter().filter(|r| r.k == k).collect();
            let mut times: Vec<f64> = rs.iter().map(|r| r.wall_ms).collect();
            times.sort_by(f64::total_cmp);
            KAggregate {
                k,
                n: rs.len(),
                max_ms: times.last().copied().unwrap_or(0.0),
                median_ms: median(&times),
                mean_restored_pct: rs.iter().map(|r| r.restored_pct).sum::<f64>() / rs.len().max(1) as f64,
            }
        })
        .collect()
}

fn median(sorted: &[f64]) -> f64 {
    match sorted.len() {
        0 => 0.0,
        n if n % 2 == 1 => sorted[n / 2],
        n => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
    }
}

/// Per-scenario CSV. With `timing = false` the wall-clock column is written
/// as 0 so that repeated runs compare byte for byte.
pub fn records_csv(records: &[ScenarioRecord], timing: bool) -> String {
    let mut out =
        String::from("k,scenario_index,failed_edges,restored_pct,objective,switch_changes,wall_ms,status,valid\n");
    for r in records {
        let failed: Vec<String> = r.failed_edges.iter().map(ToString::to_string).collect();
        let objective = r.objective.map(|o| format!("{o:.9}")).unwrap_or_default();
        let wall = if timing { r.wall_ms } else { 0.0 };
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{},{},{:.3},{},{}",
            r.k,
            r.index,
            failed.join(";"),
            r.restored_pct,
            objective,
            r.switch_changes,
            wall,
            r.status.as_str(),
            r.valid
        );
    }
    out
}

pub fn aggregates_csv(aggregates: &[KAggregate], timing: bool) -> String {
    let mut out = String::from("k,n,max_ms,median_ms,mean_restored_pct\n");
    for a in aggregates {
        let (max, med) = if timing { (a.max_ms, a.median_ms) } else { (0.0, 0.0) };
        let _ = writeln!(out, "{},{},{:.3},{:.3},{:.6}", a.k, a.n, max, med, a.mean_restored_pct);
    }
    out
}
