//! Plan documents written by `solve` and read back by `validate`, and the
//! human-readable summaries printed by each command.

use std::fmt::Write;

use dsr_core::{
    energized_components, restored_load_pct, tap_ratios, Feeder, GenMode, KAggregate, OutageScenario, RestorationPlan,
    Topology, ValidationReport, ROOT,
};
use dsr_milp::SolveReport;
use serde::{Deserialize, Serialize};

/// Solver outcome stored next to the plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveInfo {
    pub status: String,
    pub objective: Option<f64>,
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub wall_time_s: f64,
}

impl From<&SolveReport> for SolveInfo {
    fn from(r: &SolveReport) -> Self {
        Self {
            status: r.status.as_str().to_string(),
            objective: r.objective,
            bound: r.bound,
            gap: r.gap,
            nodes: r.nodes,
            wall_time_s: r.wall_time_s,
        }
    }
}

/// Derived quantities, with buses and edges given by label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanSummary {
    pub restored_pct: f64,
    pub served_kw: f64,
    pub switch_changes: Vec<String>,
    pub islands: Vec<Vec<String>>,
    pub pv_buses: Vec<String>,
    pub deenergized: Vec<String>,
    pub taps: Vec<(String, usize)>,
}

/// Self-contained plan file: everything `validate` needs to re-check it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanDocument {
    pub feeder: serde_json::Value,
    pub scenario: OutageScenario,
    pub solve: SolveInfo,
    pub plan: Option<RestorationPlan>,
    pub summary: Option<PlanSummary>,
    pub validation: Option<ValidationReport>,
}

pub fn summarize(feeder: &Feeder, scenario: &OutageScenario, plan: &RestorationPlan) -> PlanSummary {
    let bus = |i: usize| feeder.buses[i].label();
    let islands = energized_components(feeder, &plan.x, &plan.y)
        .into_iter()
        .map(|g| g.into_iter().map(bus).collect())
        .collect();
    let switch_changes = plan
        .switch_changes(feeder, scenario)
        .into_iter()
        .map(|e| {
            let action = if plan.y[e] == 1 { "close" } else { "open" };
            format!("{} {action}", feeder.edges[e].label())
        })
        .collect();
    PlanSummary {
        restored_pct: restored_load_pct(feeder, plan),
        served_kw: plan.served_load_kw(feeder),
        switch_changes,
        islands,
        pv_buses: plan.pv_buses().into_iter().map(bus).collect(),
        deenergized: (0..feeder.num_buses()).filter(|&i| plan.x[i] == 0).map(bus).collect(),
        taps: plan.taps.iter().map(|(&e, &k)| (feeder.edges[e].label(), k)).collect(),
    }
}

pub fn plan_text(feeder: &Feeder, doc: &PlanDocument) -> String {
    let mut out = String::new();
    let s = &doc.solve;
    let _ = writeln!(
        out,
        "status: {} ({} nodes, gap {:.1e}, {:.3} s)",
        s.status, s.nodes, s.gap, s.wall_time_s
    );
    let (Some(plan), Some(summary)) = (&doc.plan, &doc.summary) else {
        let _ = writeln!(out, "no plan");
        return out;
    };
    let _ = writeln!(out, "objective: {:.9}", plan.objective);
    let _ = writeln!(
        out,
        "restored load: {:.2} % ({:.1} of {:.1} kW)",
        summary.restored_pct,
        summary.served_kw,
        feeder.total_nominal_load_kw()
    );
    let changes = if summary.switch_changes.is_empty() {
        "none".to_string()
    } else {
        summary.switch_changes.join(", ")
    };
    let _ = writeln!(out, "switch changes: {changes}");
    let _ = writeln!(out, "islands: {}", summary.islands.len());
    let islands = energized_components(feeder, &plan.x, &plan.y);
    for (members, labels) in islands.iter().zip(&summary.islands) {
        let reference = if members.contains(&ROOT) {
            "substation".to_string()
        } else {
            members
                .iter()
                .find(|i| plan.modes.get(i) == Some(&GenMode::Pv))
                .map(|&i| format!("PV {}", feeder.buses[i].label()))
                .unwrap_or_else(|| "no reference".into())
        };
        let _ = writeln!(out, "  [{reference}] {}", labels.join(" "));
    }
    let pv = if summary.pv_buses.is_empty() {
        "none".to_string()
    } else {
        summary.pv_buses.join(", ")
    };
    let _ = writeln!(out, "PV buses: {pv}");
    if !summary.deenergized.is_empty() {
        let _ = writeln!(out, "de-energized: {}", summary.deenergized.join(" "));
    }
    let ratios = tap_ratios(feeder.tap_count, feeder.tap_step);
    for (edge, k) in &summary.taps {
        let _ = writeln!(out, "tap {edge}: {k} (v ratio {:.6})", ratios[k - 1]);
    }
    if let Some(v) = &doc.validation {
        let _ = writeln!(out, "{}", validation_text(v));
    }
    out
}

pub fn validation_text(v: &ValidationReport) -> String {
    if v.pass {
        return "validation: pass".into();
    }
    let mut out = format!("validation: FAIL ({} violations)", v.violations.len());
    for viol in &v.violations {
        let _ = write!(
            out,
            "\n  check {} {:?} at {}: {:.3e}",
            viol.check.number(),
            viol.check,
            viol.entity,
            viol.magnitude
        );
    }
    out
}

pub fn topology_text(feeder: &Feeder, topo: &Topology) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "cycles: {}", topo.cycles.len());
    let _ = writeln!(out, "nbs-paths: {}", topo.nbs_paths.len());
    let _ = writeln!(out, "bs-paths: {}", topo.bs_paths.len());
    let edges = |ids: &[usize]| {
        ids.iter()
            .map(|&e| feeder.edges[e].label())
            .collect::<Vec<_>>()
            .join(" ")
    };
    for c in &topo.cycles {
        let _ = writeln!(out, "  cycle: {}", edges(&c.edges));
    }
    for (name, paths) in [("nbs", &topo.nbs_paths), ("bs", &topo.bs_paths)] {
        for p in paths {
            let (from, to) = (p.source().unwrap_or(ROOT), p.target().unwrap_or(ROOT));
            let _ = writeln!(
                out,
                "  {name} path {} -> {}: {}",
                feeder.buses[from].label(),
                feeder.buses[to].label(),
                edges(&p.edges)
            );
        }
    }
    out
}

pub fn aggregates_text(aggregates: &[KAggregate]) -> String {
    let mut out = String::from("   k     n   max [s]  median [s]  mean restored %\n");
    for a in aggregates {
        let _ = writeln!(
            out,
            "{:>4} {:>5} {:>9.3} {:>11.3} {:>16.2}",
            a.k,
            a.n,
            a.max_ms / 1e3,
            a.median_ms / 1e3,
            a.mean_restored_pct
        );
    }
    out
}
