//! Checks a restoration plan against the operating rules directly — the
//! voltage, flow, topology and coordination laws are re-derived here rather
//! than read off the model rows.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::PlanError;
use crate::feeder::{BusKind, EdgeKind, Feeder, OutageScenario, ROOT};
use crate::graph::{energized_components, is_forest};
use crate::plan::{GenMode, RestorationPlan};

pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Bounds,
    Balance,
    VoltageDrop,
    Regulator,
    Radiality,
    StatusPropagation,
    NbsReachability,
    Coordination,
    NoDeenergization,
    Objective,
}

impl Check {
    pub fn number(self) -> usize {
        self as usize + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub check: Check,
    pub entity: String,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn failed(&self, check: Check) -> bool {
        self.violations.iter().any(|v| v.check == check)
    }

    pub fn summary(&self) -> String {
        self.violations
            .iter()
            .map(|v| format!("{:?} at {} ({:.3e})", v.check, v.entity, v.magnitude))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

struct Collector {
    tol: f64,
    out: Vec<Violation>,
}

impl Collector {
    fn flag(&mut self, check: Check, entity: impl Into<String>, magnitude: f64) {
        self.out.push(Violation {
            check,
            entity: entity.into(),
            magnitude,
        });
    }

    /// Flags `value` outside `[lo, hi]` by more than the tolerance.
    fn range(&mut self, check: Check, entity: impl FnOnce() -> String, value: f64, lo: f64, hi: f64) {
        let excess = (lo - value).max(value - hi);
        if excess > self.tol {
            self.flag(check, entity(), excess);
        }
    }
}

pub fn validate(
    feeder: &Feeder,
    scenario: &OutageScenario,
    plan: &RestorationPlan,
) -> Result<ValidationReport, PlanError> {
    validate_with(feeder, scenario, plan, DEFAULT_TOL)
}

pub fn validate_with(
    feeder: &Feeder,
    scenario: &OutageScenario,
    plan: &RestorationPlan,
    tol: f64,
) -> Result<ValidationReport, PlanError> {
    plan.check_shape(feeder)?;
    if scenario.x0.len() != feeder.num_buses() || scenario.y0.len() != feeder.num_edges() {
        return Err(PlanError::Malformed("scenario does not match the feeder".into()));
    }
    let mut c = Collector { tol, out: Vec::new() };
    let base = feeder.base_kva;
    let pu = |kw: f64| kw / base;
    let (x, y) = (&plan.x, &plan.y);

    // 1. Bounds and status gating.
    for b in &feeder.buses {
        let i = b.id;
        let on = f64::from(x[i]);
        if i == ROOT {
            if x[i] != 1 {
                c.flag(Check::Bounds, "x[root]", 1.0);
            }
            c.range(Check::Bounds, || "v[root]".into(), plan.v[i], feeder.v0, feeder.v0);
        }
        let p_hi = scenario.p_max(b);
        c.range(
            Check::Bounds,
            || format!("v[{i}]"),
            plan.v[i],
            on * b.v_min,
            on * b.v_max,
        );
        c.range(
            Check::Bounds,
            || format!("p[{i}]"),
            pu(plan.p[i]),
            on * pu(b.p_min),
            on * pu(p_hi),
        );
        c.range(
            Check::Bounds,
            || format!("q[{i}]"),
            pu(plan.q[i]),
            on * pu(b.q_min),
            on * pu(b.q_max),
        );
        if b.fix_power_factor {
            let err = pu(plan.q[i]) - b.q_min / b.p_min * pu(plan.p[i]);
            c.range(Check::Bounds, || format!("power_factor[{i}]"), err, 0.0, 0.0);
        }
    }
    for e in &feeder.edges {
        let k = e.id;
        let expected = match scenario.effective_kind(e) {
            EdgeKind::OutOfService => Some(0),
            EdgeKind::InService | EdgeKind::Regulator => Some(1),
            EdgeKind::Switch => None,
        };
        if let Some(s) = expected {
            if y[k] != s {
                c.flag(Check::Bounds, format!("y[{k}]"), 1.0);
            }
        }
        let on = f64::from(y[k]);
        c.range(
            Check::Bounds,
            || format!("P[{k}]"),
            pu(plan.flow_p[k]),
            on * pu(e.p_min),
            on * pu(e.p_max),
        );
        c.range(
            Check::Bounds,
            || format!("Q[{k}]"),
            pu(plan.flow_q[k]),
            on * pu(e.q_min),
            on * pu(e.q_max),
        );
    }

    // 2. Power balance.
    let n = feeder.num_buses();
    let mut net_p = vec![0.0; n];
    let mut net_q = vec![0.0; n];
    for e in &feeder.edges {
        net_p[e.from] += pu(plan.flow_p[e.id]);
        net_p[e.to] -= pu(plan.flow_p[e.id]);
        net_q[e.from] += pu(plan.flow_q[e.id]);
        net_q[e.to] -= pu(plan.flow_q[e.id]);
    }
    for i in 0..n {
        for (name, inj, net) in [("p", pu(plan.p[i]), net_p[i]), ("q", pu(plan.q[i]), net_q[i])] {
            let resid = (inj - net).abs();
            if resid > tol * inj.abs().max(1.0) {
                c.flag(Check::Balance, format!("{name}[{i}]"), resid);
            }
        }
    }

    // 3. Voltage drop along closed lines.
    for e in &feeder.edges {
        if y[e.id] == 1 && scenario.effective_kind(e) != EdgeKind::Regulator {
            let drop =
                plan.v[e.from] - plan.v[e.to] - 2.0 * e.r * pu(plan.flow_p[e.id]) - 2.0 * e.x * pu(plan.flow_q[e.id]);
            c.range(Check::VoltageDrop, || format!("edge {}", e.id), drop, 0.0, 0.0);
        }
    }

    // 4. Regulator law with the selected tap.
    let mid = (feeder.tap_count + 1) / 2;
    for e in &feeder.edges {
        if scenario.effective_kind(e) != EdgeKind::Regulator {
            if plan.taps.contains_key(&e.id) {
                c.flag(
                    Check::Regulator,
                    format!("edge {} (not an active regulator)", e.id),
                    1.0,
                );
            }
            continue;
        }
        match plan.taps.get(&e.id) {
            None => c.flag(Check::Regulator, format!("edge {} (no tap)", e.id), 1.0),
            Some(&k) => {
                let ratio = 1.0 + feeder.tap_step * (k as f64 - mid as f64);
                let err = plan.v[e.to] - ratio * ratio * plan.v[e.from];
                c.range(Check::Regulator, || format!("edge {}", e.id), err, 0.0, 0.0);
            }
        }
    }

    // 5. Radiality.
    if !is_forest(feeder, y) {
        c.flag(Check::Radiality, "closed edges", 1.0);
    }

    // 6. Closed edges join buses of equal status.
    for e in &feeder.edges {
        if y[e.id] == 1 && x[e.from] != x[e.to] {
            c.flag(Check::StatusPropagation, format!("edge {}", e.id), 1.0);
        }
    }

    // 7. Each running non-black-start unit reaches the root or a running
    //    black-start unit through closed edges.
    let adj = feeder.adjacency();
    for i in feeder.non_black_start() {
        if x[i] == 0 {
            continue;
        }
        let mut seen = vec![false; n];
        seen[i] = true;
        let mut queue = VecDeque::from([i]);
        let mut reached = false;
        while let Some(u) = queue.pop_front() {
            let b = &feeder.buses[u];
            if u == ROOT || (b.kind == BusKind::GenBlackStart && x[u] == 1) {
                reached = true;
                break;
            }
            for &(e, w) in &adj[u] {
                if y[e] == 1 && !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        if !reached {
            c.flag(Check::NbsReachability, format!("bus {i}"), 1.0);
        }
    }

    // 8. One voltage reference per island.
    for (&i, &mode) in &plan.modes {
        if (x[i] == 0) != (mode == GenMode::Off) {
            c.flag(
                Check::Coordination,
                format!("bus {i} mode {mode:?} with x = {}", x[i]),
                1.0,
            );
        }
    }
    for i in feeder.black_start() {
        if !plan.modes.contains_key(&i) {
            c.flag(Check::Coordination, format!("bus {i} (no mode)"), 1.0);
        }
    }
    for island in energized_components(feeder, x, y) {
        let gens: Vec<usize> = island
            .iter()
            .copied()
            .filter(|&i| feeder.buses[i].kind == BusKind::GenBlackStart)
            .collect();
        let mode = |i: usize| plan.modes.get(&i).copied();
        if island.contains(&ROOT) {
            for &g in &gens {
                if mode(g) != Some(GenMode::Pq) {
                    c.flag(Check::Coordination, format!("bus {g} (grid-connected, not PQ)"), 1.0);
                }
            }
            continue;
        }
        let Some(&top) = gens
            .iter()
            .find(|&&g| gens.iter().all(|&h| h == g || feeder.bs_outranks(g, h)))
        else {
            c.flag(
                Check::Coordination,
                format!("island at bus {} has no source", island[0]),
                island.len() as f64,
            );
            continue;
        };
        for &g in &gens {
            let want = if g == top { GenMode::Pv } else { GenMode::Pq };
            if mode(g) != Some(want) {
                c.flag(Check::Coordination, format!("bus {g} (expected {want:?})"), 1.0);
            }
        }
        c.range(
            Check::Coordination,
            || format!("v[{top}] (reference)"),
            plan.v[top],
            feeder.v0,
            feeder.v0,
        );
    }

    // 9. Nothing already energized is dropped.
    for i in 0..n {
        if x[i] < scenario.x0[i] {
            c.flag(Check::NoDeenergization, format!("bus {i}"), 1.0);
        }
    }

    // 10. Objective recomputed from the decisions.
    let served: f64 = feeder
        .buses
        .iter()
        .filter(|b| b.kind != BusKind::Root && !b.kind.is_generator())
        .map(|b| pu(plan.p[b.id]))
        .sum();
    let changes = feeder
        .edges
        .iter()
        .filter(|e| scenario.effective_kind(e) == EdgeKind::Switch && y[e.id] != scenario.y0[e.id])
        .count();
    let objective = served + feeder.lambda * changes as f64;
    let err = (objective - plan.objective).abs();
    if err > tol * objective.abs().max(1.0) {
        c.flag(Check::Objective, "objective", err);
    }

    Ok(ValidationReport {
        pass: c.out.is_empty(),
        violations: c.out,
    })
}
