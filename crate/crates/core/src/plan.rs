//! Solved restoration decisions in feeder units.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::builder::DsrModel;
use crate::error::PlanError;
use crate::feeder::{BusId, BusKind, EdgeId, EdgeKind, Feeder, OutageScenario, ROOT};
use crate::graph::energized_components;

/// Rounding tolerance for binaries read back from a solution.
pub const BINARY_TOL: f64 = 1e-6;

/// Injections below this magnitude (kW / kVAr) count as none.
const IDLE_KW: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenMode {
    /// Voltage reference of its island.
    Pv,
    Pq,
    /// De-energized.
    Off,
}

/// Powers in kW / kVAr, voltages squared per-unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestorationPlan {
    pub x: Vec<u8>,
    pub y: Vec<u8>,
    /// Selected tap position (1-based) per in-service regulator edge.
    pub taps: BTreeMap<EdgeId, usize>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    #[serde(rename = "P")]
    pub flow_p: Vec<f64>,
    #[serde(rename = "Q")]
    pub flow_q: Vec<f64>,
    pub modes: BTreeMap<BusId, GenMode>,
    /// Objective in model units: served-load term in per-unit plus the penalty.
    pub objective: f64,
}

fn round_binary(name: &str, value: f64) -> Result<u8, PlanError> {
    let r = value.round();
    if (value - r).abs() > BINARY_TOL || !(r == 0.0 || r == 1.0) {
        return Err(PlanError::Malformed(format!("{name} = {value} is not binary")));
    }
    Ok(r as u8)
}

impl RestorationPlan {
    /// Reads a plan from a solution vector of `dsr`.
    ///
    /// Islands that hold neither the root nor a black-start unit and carry no
    /// injection are reported as de-energized: the model is indifferent to
    /// their status, and a dead bus describes them physically.
    pub fn extract(
        feeder: &Feeder,
        scenario: &OutageScenario,
        dsr: &DsrModel,
        values: &[f64],
        objective: f64,
    ) -> Result<Self, PlanError> {
        let sym = &dsr.symbols;
        let model = &dsr.model;
        if values.len() != model.num_vars() {
            return Err(PlanError::Malformed("solution length does not match model".into()));
        }
        let bin = |v: dsr_milp::VarId| round_binary(&model.var(v).name, values[v.0]);
        let mut x = sym.x.iter().map(|&v| bin(v)).collect::<Result<Vec<_>, _>>()?;
        let y = sym.y.iter().map(|&v| bin(v)).collect::<Result<Vec<_>, _>>()?;
        let base = dsr.base_kva;
        let mut v: Vec<f64> = sym.v.iter().map(|&id| values[id.0]).collect();
        let mut p: Vec<f64> = sym.p.iter().map(|&id| values[id.0] * base).collect();
        let mut q: Vec<f64> = sym.q.iter().map(|&id| values[id.0] * base).collect();
        let flow_p = sym.flow_p.iter().map(|&id| values[id.0] * base).collect();
        let flow_q = sym.flow_q.iter().map(|&id| values[id.0] * base).collect();

        let mut taps = BTreeMap::new();
        for reg in &sym.regulators {
            let mut chosen = None;
            for (k, &t) in reg.t.iter().enumerate() {
                if bin(t)? == 1 {
                    if chosen.is_some() {
                        return Err(PlanError::Malformed(format!("regulator {} has two taps", reg.edge)));
                    }
                    chosen = Some(k + 1);
                }
            }
            let k = chosen.ok_or_else(|| PlanError::Malformed(format!("regulator {} has no tap", reg.edge)))?;
            taps.insert(reg.edge, k);
        }

        for island in energized_components(feeder, &x, &y) {
            let sourced = island
                .iter()
                .any(|&i| i == ROOT || feeder.buses[i].kind == BusKind::GenBlackStart);
            let idle = island.iter().all(|&i| p[i].abs() <= IDLE_KW && q[i].abs() <= IDLE_KW);
            if !sourced && idle && island.iter().all(|&i| scenario.x0[i] == 0) {
                for &i in &island {
                    x[i] = 0;
                    v[i] = 0.0;
                    p[i] = 0.0;
                    q[i] = 0.0;
                }
            }
        }

        let mut modes = BTreeMap::new();
        for (&i, &mode) in &sym.eps_mode {
            let m = if x[i] == 0 {
                GenMode::Off
            } else if bin(mode)? == 1 {
                GenMode::Pq
            } else {
                GenMode::Pv
            };
            modes.insert(i, m);
        }

        Ok(Self {
            x,
            y,
            taps,
            v,
            p,
            q,
            flow_p,
            flow_q,
            modes,
            objective,
        })
    }

    /// Operable switches whose state differs from the post-outage state.
    pub fn switch_changes(&self, feeder: &Feeder, scenario: &OutageScenario) -> Vec<EdgeId> {
        feeder
            .edges
            .iter()
            .filter(|e| scenario.effective_kind(e) == EdgeKind::Switch && self.y[e.id] != scenario.y0[e.id])
            .map(|e| e.id)
            .collect()
    }

    pub fn pv_buses(&self) -> Vec<BusId> {
        self.modes
            .iter()
            .filter(|(_, &m)| m == GenMode::Pv)
            .map(|(&i, _)| i)
            .collect()
    }

    /// Served load magnitude in kW.
    pub fn served_load_kw(&self, feeder: &Feeder) -> f64 {
        feeder
            .buses
            .iter()
            .filter(|b| b.kind.is_load())
            .map(|b| self.p[b.id].abs())
            .sum()
    }

    pub fn check_shape(&self, feeder: &Feeder) -> Result<(), PlanError> {
        let (n, m) = (feeder.num_buses(), feeder.num_edges());
        let ok = [self.x.len(), self.v.len(), self.p.len(), self.q.len()]
            .iter()
            .all(|&l| l == n)
            && [self.y.len(), self.flow_p.len(), self.flow_q.len()]
                .iter()
                .all(|&l| l == m);
        if !ok {
            return Err(PlanError::Malformed(format!(
                "plan vectors do not match a feeder with {n} buses and {m} edges"
            )));
        }
        if let Some(bad) = self.x.iter().chain(&self.y).find(|&&s| s > 1) {
            return Err(PlanError::Malformed(format!("status value {bad} is not binary")));
        }
        for (&e, &k) in &self.taps {
            if e >= m || feeder.edges[e].kind != EdgeKind::Regulator {
                return Err(PlanError::Malformed(format!("tap given for non-regulator edge {e}")));
            }
            if k == 0 || k > feeder.tap_count {
                return Err(PlanError::Malformed(format!("tap {k} on edge {e} out of range")));
            }
        }
        for &i in self.modes.keys() {
            if i >= n || feeder.buses[i].kind != BusKind::GenBlackStart {
                return Err(PlanError::Malformed(format!(
                    "mode given for bus {i}, not a black-start unit"
                )));
            }
        }
        let finite = self
            .v
            .iter()
            .chain(&self.p)
            .chain(&self.q)
            .chain(&self.flow_p)
            .chain(&self.flow_q)
            .all(|v| v.is_finite());
        if !finite || !self.objective.is_finite() {
            return Err(PlanError::Malformed("non-finite value".into()));
        }
        Ok(())
    }
}

/// Percentage of the nominal load that the plan serves.
pub fn restored_load_pct(feeder: &Feeder, plan: &RestorationPlan) -> f64 {
    let total = feeder.total_nominal_load_kw();
    if total <= 0.0 {
        return 100.0;
    }
    (100.0 * plan.served_load_kw(feeder) / total).clamp(0.0, 100.0)
}
