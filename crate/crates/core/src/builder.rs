//! Assembles the restoration MILP for one outage scenario.
//!
//! Powers enter the model in per-unit of the feeder's base kVA so that the
//! switching penalty `lambda` and the served-load term share a scale.

use std::collections::BTreeMap;

use dsr_milp::{add_mccormick, Integrality, MilpModel, Sense, VarId};

use crate::error::BuildError;
use crate::feeder::{BusId, BusKind, EdgeId, EdgeKind, Feeder, OutageScenario, ROOT};
use crate::graph::{EdgeIndicator, IndicatorKind, Topology};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildOptions {
    /// Use `P`, `Q` directly in the switched voltage-drop row instead of
    /// envelope variables for `y*P`, `y*Q` (equivalent, since closed-gating
    /// already pins the flows of an open switch to zero).
    pub tight: bool,
    /// Emit the status-gating rows of buses and edges whose status the
    /// scenario already fixes. By default those rows are folded into the
    /// variable bounds, which describes the same feasible set with fewer rows.
    pub keep_fixed_rows: bool,
}

/// Squared tap ratios `(1 + step*(k - mid))^2` for k = 1..=count.
pub fn tap_ratios(count: usize, step: f64) -> Vec<f64> {
    let mid = (count + 1) / 2;
    (1..=count)
        .map(|k| {
            let r = 1.0 + step * (k as f64 - mid as f64);
            r * r
        })
        .collect()
}

/// The standard 33-position table with 0.625 % steps.
pub fn tap_ratio_table() -> Vec<f64> {
    tap_ratios(33, 0.00625)
}

#[derive(Debug, Clone)]
pub struct RegulatorSymbols {
    pub edge: EdgeId,
    /// One binary per tap position.
    pub t: Vec<VarId>,
    /// Envelope variables `t[k] * v[from]`.
    pub z: Vec<VarId>,
}

/// Envelope variables of a switched edge's voltage-drop row.
#[derive(Debug, Clone, Copy)]
pub struct SwitchedDrop {
    pub yv_from: VarId,
    pub yv_to: VarId,
    pub y_p: VarId,
    pub y_q: VarId,
}

/// Maps feeder entities to model variables.
#[derive(Debug, Clone)]
pub struct Symbols {
    pub x: Vec<VarId>,
    pub v: Vec<VarId>,
    pub p: Vec<VarId>,
    pub q: Vec<VarId>,
    pub y: Vec<VarId>,
    pub flow_p: Vec<VarId>,
    pub flow_q: Vec<VarId>,
    pub regulators: Vec<RegulatorSymbols>,
    pub drops: BTreeMap<EdgeId, SwitchedDrop>,
    /// One per non-black-start path, aligned with `Topology::nbs_paths`.
    pub delta: Vec<VarId>,
    /// One per black-start path, aligned with `Topology::bs_paths`.
    pub eps_path: Vec<VarId>,
    /// PQ indicator per black-start bus (1 = PQ, 0 = PV).
    pub eps_mode: BTreeMap<BusId, VarId>,
    /// Switching-change indicator per operable switch.
    pub s: BTreeMap<EdgeId, VarId>,
}

impl Symbols {
    /// Variable-family prefixes present in the model.
    pub const FAMILIES: [&'static str; 12] = ["x", "y", "v", "p", "q", "P", "Q", "t", "z", "delta", "eps", "s"];
}

#[derive(Debug, Clone)]
pub struct DsrModel {
    pub model: MilpModel,
    pub symbols: Symbols,
    pub base_kva: f64,
}

/// Effective status of every edge under the scenario: `Some(fixed)` or `None`
/// for an operable switch.
pub fn edge_fixings(feeder: &Feeder, scenario: &OutageScenario) -> Vec<Option<u8>> {
    feeder
        .edges
        .iter()
        .map(|e| match scenario.effective_kind(e) {
            EdgeKind::Switch => None,
            EdgeKind::OutOfService => Some(0),
            EdgeKind::InService | EdgeKind::Regulator => Some(1),
        })
        .collect()
}

fn check_inputs(feeder: &Feeder, scenario: &OutageScenario, topo: &Topology) -> Result<(), BuildError> {
    let (n, m) = (feeder.num_buses(), feeder.num_edges());
    if scenario.x0.len() != n || scenario.y0.len() != m {
        return Err(BuildError::Inconsistent(format!(
            "post-outage state has {} bus and {} edge entries, feeder has {n} and {m}",
            scenario.x0.len(),
            scenario.y0.len()
        )));
    }
    if scenario.x0[ROOT] != 1 {
        return Err(BuildError::Inconsistent("root must be energized".into()));
    }
    for &e in &scenario.failed_edges {
        if e >= m {
            return Err(BuildError::Inconsistent(format!("failed edge {e} does not exist")));
        }
        if scenario.y0[e] != 0 {
            return Err(BuildError::FailedEdgeInService(e));
        }
    }
    for (&bus, _) in &scenario.solar_avail {
        if feeder.buses.get(bus).map(|b| b.kind) != Some(BusKind::GenNonBlackStart) {
            return Err(BuildError::Inconsistent(format!("solar availability for bus {bus}")));
        }
    }
    let check = |family: &str, list: &[EdgeIndicator], sources: &[BusId]| {
        for ind in list {
            if ind.edges.iter().any(|&e| e >= m) {
                return Err(BuildError::Inconsistent(format!("{family} refers to a missing edge")));
            }
            if let IndicatorKind::Path { from, .. } = ind.kind {
                if !sources.contains(&from) {
                    return Err(BuildError::Inconsistent(format!("{family} starts at bus {from}")));
                }
            }
        }
        Ok(())
    };
    check("cycle", &topo.cycles, &[])?;
    check("non-black-start path", &topo.nbs_paths, &feeder.non_black_start())?;
    check("black-start path", &topo.bs_paths, &feeder.black_start())?;
    Ok(())
}

pub fn build(
    feeder: &Feeder,
    scenario: &OutageScenario,
    topo: &Topology,
    opts: BuildOptions,
) -> Result<DsrModel, BuildError> {
    check_inputs(feeder, scenario, topo)?;
    let base = feeder.base_kva;
    let v0 = feeder.v0;
    let mut m = MilpModel::new();

    // Bus statuses, voltages and injections.
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    let mut ps = Vec::new();
    let mut qs = Vec::new();
    for b in &feeder.buses {
        let i = b.id;
        let x_lo = if i == ROOT { 1.0 } else { f64::from(scenario.x0[i]) };
        let x = m.add_var(format!("x[{i}]"), x_lo, 1.0, Integrality::Binary)?;
        let (pmin, pmax) = (b.p_min / base, scenario.p_max(b) / base);
        let (qmin, qmax) = (b.q_min / base, b.q_max / base);
        let fixed_on = x_lo == 1.0 && !opts.keep_fixed_rows;
        let v = if i == ROOT {
            m.add_continuous(format!("v[{i}]"), v0, v0)?
        } else if fixed_on {
            m.add_continuous(format!("v[{i}]"), b.v_min, b.v_max)?
        } else {
            m.add_continuous(format!("v[{i}]"), b.v_min.min(0.0), b.v_max)?
        };
        let (p, q) = if fixed_on {
            (
                m.add_continuous(format!("p[{i}]"), pmin, pmax)?,
                m.add_continuous(format!("q[{i}]"), qmin, qmax)?,
            )
        } else {
            (
                m.add_continuous(format!("p[{i}]"), pmin.min(0.0), pmax.max(0.0))?,
                m.add_continuous(format!("q[{i}]"), qmin.min(0.0), qmax.max(0.0))?,
            )
        };
        // var - bound*x within [0, inf) / (-inf, 0]; rows that reduce to the
        // declared variable bound (zero limit) are omitted.
        let gates = [
            (v, b.v_min, Sense::Ge, "v_lo"),
            (v, b.v_max, Sense::Le, "v_hi"),
            (p, pmin, Sense::Ge, "p_lo"),
            (p, pmax, Sense::Le, "p_hi"),
            (q, qmin, Sense::Ge, "q_lo"),
            (q, qmax, Sense::Le, "q_hi"),
        ];
        for (var, limit, sense, tag) in gates {
            if !fixed_on && limit != 0.0 && !(i == ROOT && tag.starts_with('v')) {
                m.add_constraint([(var, 1.0), (x, -limit)], sense, 0.0, format!("{tag}[{i}]"))?;
            }
        }
        if b.fix_power_factor {
            let ratio = b.q_min / b.p_min;
            m.add_constraint([(q, 1.0), (p, -ratio)], Sense::Eq, 0.0, format!("pf[{i}]"))?;
        }
        xs.push(x);
        vs.push(v);
        ps.push(p);
        qs.push(q);
    }

    // Edge statuses and flows.
    let fixings = edge_fixings(feeder, scenario);
    let mut ys = Vec::new();
    let mut fps = Vec::new();
    let mut fqs = Vec::new();
    for e in &feeder.edges {
        let k = e.id;
        let y = match fixings[k] {
            Some(val) => m.add_var(format!("y[{k}]"), f64::from(val), f64::from(val), Integrality::Binary)?,
            None => m.add_binary(format!("y[{k}]"))?,
        };
        let (pmin, pmax, qmin, qmax) = (e.p_min / base, e.p_max / base, e.q_min / base, e.q_max / base);
        // A fixed status scales the flow limits directly.
        let scale = match fixings[k] {
            Some(val) if !opts.keep_fixed_rows => f64::from(val),
            _ => 1.0,
        };
        let fp = m.add_continuous(format!("P[{k}]"), scale * pmin.min(0.0), scale * pmax.max(0.0))?;
        let fq = m.add_continuous(format!("Q[{k}]"), scale * qmin.min(0.0), scale * qmax.max(0.0))?;
        let gates = [
            (fp, pmin, Sense::Ge, "P_lo"),
            (fp, pmax, Sense::Le, "P_hi"),
            (fq, qmin, Sense::Ge, "Q_lo"),
            (fq, qmax, Sense::Le, "Q_hi"),
        ];
        let gated = fixings[k].is_none() || opts.keep_fixed_rows;
        for (var, limit, sense, tag) in gates {
            if gated && limit != 0.0 {
                m.add_constraint([(var, 1.0), (y, -limit)], sense, 0.0, format!("{tag}[{k}]"))?;
            }
        }
        ys.push(y);
        fps.push(fp);
        fqs.push(fq);
    }

    // Nodal balance: injection equals net outgoing flow.
    for b in &feeder.buses {
        let i = b.id;
        for (inj, flows, tag) in [(ps[i], &fps, "balance_p"), (qs[i], &fqs, "balance_q")] {
            let mut terms = vec![(inj, 1.0)];
            for e in &feeder.edges {
                if e.from == i {
                    terms.push((flows[e.id], -1.0));
                } else if e.to == i {
                    terms.push((flows[e.id], 1.0));
                }
            }
            m.add_constraint(terms, Sense::Eq, 0.0, format!("{tag}[{i}]"))?;
        }
    }

    // Voltage drops and regulators.
    let ratios = tap_ratios(feeder.tap_count, feeder.tap_step);
    let mut regulators = Vec::new();
    let mut drops = BTreeMap::new();
    for e in &feeder.edges {
        let k = e.id;
        let (vi, vj) = (vs[e.from], vs[e.to]);
        match (scenario.effective_kind(e), fixings[k]) {
            (EdgeKind::Regulator, _) => {
                let mut t = Vec::new();
                let mut z = Vec::new();
                // With both ends energized for sure, a position whose ratio
                // cannot map the primary band into the secondary band is out.
                let (lo_i, hi_i) = (m.var(vi).lower, m.var(vi).upper);
                let (lo_j, hi_j) = (m.var(vj).lower, m.var(vj).upper);
                let banded = !opts.keep_fixed_rows && lo_i > 0.0 && lo_j > 0.0;
                for (pos, &c) in (1..=feeder.tap_count).zip(&ratios) {
                    let tk = m.add_binary(format!("t[{k},{pos}]"))?;
                    if banded && (c * hi_i < lo_j || c * lo_i > hi_j) {
                        m.fix(tk, 0.0);
                    }
                    z.push(add_mccormick(&mut m, &format!("z_tap[{k},{pos}]"), tk, vi)?);
                    t.push(tk);
                }
                m.add_constraint(t.iter().map(|&tk| (tk, 1.0)), Sense::Eq, 1.0, format!("tap_one[{k}]"))?;
                let mut law = vec![(vj, 1.0)];
                law.extend(z.iter().zip(&ratios).map(|(&zk, &c)| (zk, -c)));
                m.add_constraint(law, Sense::Eq, 0.0, format!("tap_law[{k}]"))?;
                regulators.push(RegulatorSymbols { edge: k, t, z });
            }
            (_, Some(0)) => {}
            (_, Some(_)) => {
                m.add_constraint(
                    [(vi, 1.0), (vj, -1.0), (fps[k], -2.0 * e.r), (fqs[k], -2.0 * e.x)],
                    Sense::Eq,
                    0.0,
                    format!("vdrop[{k}]"),
                )?;
            }
            (_, None) => {
                let y = ys[k];
                let yv_from = add_mccormick(&mut m, &format!("z_yvf[{k}]"), y, vi)?;
                let yv_to = add_mccormick(&mut m, &format!("z_yvt[{k}]"), y, vj)?;
                let (y_p, y_q) = if opts.tight {
                    (fps[k], fqs[k])
                } else {
                    (
                        add_mccormick(&mut m, &format!("z_yP[{k}]"), y, fps[k])?,
                        add_mccormick(&mut m, &format!("z_yQ[{k}]"), y, fqs[k])?,
                    )
                };
                m.add_constraint(
                    [(yv_from, 1.0), (yv_to, -1.0), (y_p, -2.0 * e.r), (y_q, -2.0 * e.x)],
                    Sense::Eq,
                    0.0,
                    format!("vdrop[{k}]"),
                )?;
                drops.insert(
                    k,
                    SwitchedDrop {
                        yv_from,
                        yv_to,
                        y_p,
                        y_q,
                    },
                );
            }
        }
    }

    // No cycle may be fully closed.
    for (c, cycle) in topo.cycles.iter().enumerate() {
        m.add_constraint(
            cycle.edges.iter().map(|&e| (ys[e], 1.0)),
            Sense::Le,
            cycle.len() as f64 - 1.0,
            format!("cycle[{c}]"),
        )?;
    }

    // Closed edges join buses of equal status.
    for e in &feeder.edges {
        let (xi, xj, y) = (xs[e.from], xs[e.to], ys[e.id]);
        if !opts.keep_fixed_rows && [xi, xj, y].iter().all(|&v| m.var(v).is_fixed()) {
            // Both statuses are forced to 1 by x >= x0, so the rows hold.
            continue;
        }
        m.add_constraint(
            [(xi, 1.0), (xj, -1.0), (y, 1.0)],
            Sense::Le,
            1.0,
            format!("status_fwd[{}]", e.id),
        )?;
        m.add_constraint(
            [(xj, 1.0), (xi, -1.0), (y, 1.0)],
            Sense::Le,
            1.0,
            format!("status_rev[{}]", e.id),
        )?;
    }

    // Non-black-start units need a closed path to a source.
    let mut delta = Vec::new();
    for (k, path) in topo.nbs_paths.iter().enumerate() {
        let i = path.source().expect("paths have a source");
        let d = m.add_binary(format!("delta[{i},{k}]"))?;
        let mut terms = vec![(d, path.len() as f64)];
        terms.extend(path.edges.iter().map(|&e| (ys[e], -1.0)));
        m.add_constraint(terms, Sense::Le, 0.0, format!("nbs_path[{i},{k}]"))?;
        delta.push(d);
    }
    for i in feeder.non_black_start() {
        let mut terms = vec![(xs[i], 1.0)];
        for (path, &d) in topo.nbs_paths.iter().zip(&delta) {
            if path.source() == Some(i) {
                terms.push((d, -1.0));
            }
        }
        m.add_constraint(terms, Sense::Le, 0.0, format!("nbs_reach[{i}]"))?;
    }

    // Black-start coordination: a unit connected to a larger one or to the
    // root runs PQ; otherwise it is the island's voltage reference.
    let mut eps_path = Vec::new();
    for (l, path) in topo.bs_paths.iter().enumerate() {
        let i = path.source().expect("paths have a source");
        let eps = m.add_binary(format!("eps_path[{i},{l}]"))?;
        let len = path.len() as f64;
        let mut lo = vec![(eps, 1.0)];
        lo.extend(path.edges.iter().map(|&e| (ys[e], -1.0)));
        m.add_constraint(lo, Sense::Ge, 1.0 - len, format!("bs_path_lo[{i},{l}]"))?;
        let mut hi = vec![(eps, len)];
        hi.extend(path.edges.iter().map(|&e| (ys[e], -1.0)));
        m.add_constraint(hi, Sense::Le, 0.0, format!("bs_path_hi[{i},{l}]"))?;
        eps_path.push(eps);
    }
    let mut eps_mode = BTreeMap::new();
    for i in feeder.black_start() {
        let mode = m.add_binary(format!("eps_mode[{i}]"))?;
        let mine: Vec<VarId> = topo
            .bs_paths
            .iter()
            .zip(&eps_path)
            .filter(|(p, _)| p.source() == Some(i))
            .map(|(_, &e)| e)
            .collect();
        for (l, &e) in mine.iter().enumerate() {
            m.add_constraint([(e, 1.0), (mode, -1.0)], Sense::Le, 0.0, format!("bs_max[{i},{l}]"))?;
        }
        let mut sum = vec![(mode, 1.0)];
        sum.extend(mine.iter().map(|&e| (e, -1.0)));
        m.add_constraint(sum, Sense::Le, 0.0, format!("bs_any[{i}]"))?;
        // |v - v0*x| <= v0*eps
        m.add_constraint(
            [(vs[i], 1.0), (xs[i], -v0), (mode, -v0)],
            Sense::Le,
            0.0,
            format!("pv_hi[{i}]"),
        )?;
        m.add_constraint(
            [(vs[i], 1.0), (xs[i], -v0), (mode, v0)],
            Sense::Ge,
            0.0,
            format!("pv_lo[{i}]"),
        )?;
        eps_mode.insert(i, mode);
    }

    // Switching changes and the objective.
    let mut s = BTreeMap::new();
    for e in &feeder.edges {
        if fixings[e.id].is_none() {
            let k = e.id;
            let y0 = f64::from(scenario.y0[k]);
            let sv = m.add_continuous(format!("s[{k}]"), 0.0, 1.0)?;
            m.add_constraint([(sv, 1.0), (ys[k], -1.0)], Sense::Ge, -y0, format!("change_up[{k}]"))?;
            m.add_constraint([(sv, 1.0), (ys[k], 1.0)], Sense::Ge, y0, format!("change_down[{k}]"))?;
            s.insert(k, sv);
        }
    }
    let mut objective: Vec<(VarId, f64)> = feeder
        .buses
        .iter()
        .filter(|b| b.kind != BusKind::Root && !b.kind.is_generator())
        .map(|b| (ps[b.id], 1.0))
        .collect();
    if feeder.lambda != 0.0 {
        objective.extend(s.values().map(|&sv| (sv, feeder.lambda)));
    }
    m.set_objective(objective)?;

    Ok(DsrModel {
        model: m,
        symbols: Symbols {
            x: xs,
            v: vs,
            p: ps,
            q: qs,
            y: ys,
            flow_p: fps,
            flow_q: fqs,
            regulators,
            drops,
            delta,
            eps_path,
            eps_mode,
            s,
        },
        base_kva: base,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feeder::tests::toy;
    use crate::feeder::{default_switch_state, derive_post_outage};
    use std::collections::BTreeSet;

    #[test]
    fn tap_table_endpoints() {
        let c = tap_ratio_table();
        assert_eq!(c.len(), 33);
        assert_eq!(c[16], 1.0);
        assert!((c[32] - 1.21).abs() < 1e-12);
        assert!((c[0] - 0.81).abs() < 1e-12);
    }

    #[test]
    fn toy_binaries_by_hand() {
        let f = toy();
        let sc = derive_post_outage(&f, &BTreeSet::new(), &default_switch_state(&f)).unwrap();
        let topo = Topology::analyze(&f).unwrap();
        let d = build(&f, &sc, &topo, BuildOptions::default()).unwrap();
        // x0..x2, y0 (fixed), y1 (switch), one black-start path, one mode.
        let bins: Vec<String> = d.model.binaries().map(|v| d.model.var(v).name.clone()).collect();
        assert_eq!(
            bins,
            ["x[0]", "x[1]", "x[2]", "y[0]", "y[1]", "eps_path[2,0]", "eps_mode[2]"]
        );
        let free: Vec<&str> = d
            .model
            .binaries()
            .filter(|&v| !d.model.var(v).is_fixed())
            .map(|v| d.model.var(v).name.as_str())
            .collect();
        assert_eq!(free, ["x[2]", "y[1]", "eps_path[2,0]", "eps_mode[2]"]);
        assert_eq!(d.symbols.drops.len(), 1);
        assert_eq!(d.symbols.s.len(), 1);
    }

    #[test]
    fn rebuild_is_identical() {
        let f = crate::ieee37::builtin_ieee37();
        let sc = derive_post_outage(&f, &BTreeSet::from([5, 20]), &default_switch_state(&f)).unwrap();
        let topo = Topology::analyze(&f).unwrap();
        let a = build(&f, &sc, &topo, BuildOptions::default()).unwrap();
        let b = build(&f, &sc, &topo, BuildOptions::default()).unwrap();
        assert_eq!(a.model.dump(), b.model.dump());
        let tight = build(
            &f,
            &sc,
            &topo,
            BuildOptions {
                tight: true,
                ..BuildOptions::default()
            },
        )
        .unwrap();
        assert!(tight.model.num_vars() < a.model.num_vars());
    }
}
