//! Best-first branch-and-bound over the dual simplex relaxation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::LpError;
use crate::lp::{LpData, LpOptions, Outcome, Tableau};
use crate::model::MilpModel;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MilpOptions {
    /// Relative optimality gap `(obj - bound) / max(1, |obj|)` accepted as optimal.
    pub gap_tol: f64,
    /// Distance from {0, 1} below which a binary counts as integral.
    pub int_tol: f64,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    /// Optional looser gap at which to stop early with [`SolveStatus::GapLimit`].
    pub gap_limit: Option<f64>,
    /// Record the global lower bound at every processed node in
    /// [`SolveReport::bound_trace`].
    pub record_bounds: bool,
    /// Reuse the parent's final tableau at child nodes.
    pub warm_start: bool,
    pub lp: LpOptions,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-6,
            int_tol: 1e-6,
            time_limit: Some(Duration::from_secs(300)),
            node_limit: None,
            gap_limit: None,
            record_bounds: false,
            warm_start: true,
            lp: LpOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    GapLimit,
    NodeLimit,
    TimeLimit,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::GapLimit => "gap_limit",
            SolveStatus::NodeLimit => "node_limit",
            SolveStatus::TimeLimit => "time_limit",
        }
    }

    pub fn is_limit(self) -> bool {
        matches!(
            self,
            SolveStatus::GapLimit | SolveStatus::NodeLimit | SolveStatus::TimeLimit
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Best solution found, if any.
    pub values: Option<Vec<f64>>,
    pub objective: Option<f64>,
    /// Proven lower bound on the optimum.
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub lp_pivots: usize,
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bound_trace: Vec<f64>,
}

pub fn relative_gap(objective: f64, bound: f64) -> f64 {
    ((objective - bound) / objective.abs().max(1.0)).max(0.0)
}

struct Node {
    bound: f64,
    depth: usize,
    seq: u64,
    fixes: Vec<(usize, f64)>,
    warm: Option<Rc<Tableau>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap: the "greatest" node is popped first. Bounds are compared on a
    // fixed grid so that round-off differences count as ties and the search
    // keeps diving instead of alternating between near-equal siblings.
    fn cmp(&self, other: &Self) -> Ordering {
        bound_key(other.bound)
            .total_cmp(&bound_key(self.bound))
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

/// Bounds closer than this are ordered by depth rather than by value.
const BOUND_RESOLUTION: f64 = 1e-9;

fn bound_key(bound: f64) -> f64 {
    (bound / BOUND_RESOLUTION).round()
}

/// Open nodes allowed to hold a parent tableau; beyond this children cold-start.
const MAX_WARM_NODES: usize = 256;

/// Solves `model` to proven optimality (within `opts.gap_tol`) by branch-and-bound.
pub fn solve_milp(model: &MilpModel, opts: &MilpOptions) -> Result<SolveReport, LpError> {
    model.validate()?;
    let start = Instant::now();
    let data = LpData::new(model, &opts.lp);
    let base_lo: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    let base_hi: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
    let binaries: Vec<usize> = model.binaries().map(|v| v.0).collect();

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        depth: 0,
        seq: 0,
        fixes: Vec::new(),
        warm: None,
    });
    let mut seq = 1u64;
    let mut warm_nodes = 0usize;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut nodes = 0usize;
    let mut pivots = 0usize;
    let mut trace = Vec::new();
    let mut stop: Option<SolveStatus> = None;
    let mut unbounded = false;

    while let Some(node) = heap.pop() {
        if node.warm.is_some() {
            warm_nodes -= 1;
        }
        if let Some((inc, _)) = &incumbent {
            let gap = relative_gap(*inc, node.bound);
            if gap <= opts.gap_tol {
                heap.clear();
                break;
            }
            if opts.gap_limit.is_some_and(|g| gap <= g) {
                heap.push(node);
                stop = Some(SolveStatus::GapLimit);
                break;
            }
        }
        if opts.node_limit.is_some_and(|limit| nodes >= limit) {
            heap.push(node);
            stop = Some(SolveStatus::NodeLimit);
            break;
        }
        if opts.time_limit.is_some_and(|limit| start.elapsed() >= limit) {
            heap.push(node);
            stop = Some(SolveStatus::TimeLimit);
            break;
        }
        nodes += 1;
        if opts.record_bounds {
            // Global bound: the weakest open node, this one included.
            let open = heap.iter().map(|n| n.bound).fold(node.bound, f64::min);
            trace.push(open);
        }

        let mut lo = base_lo.clone();
        let mut hi = base_hi.clone();
        for &(v, x) in &node.fixes {
            lo[v] = x;
            hi[v] = x;
        }
        let (lower, upper) = data.bounds_from(model, &lo, &hi);
        let (mut tab, outcome) = solve_node(&data, node.warm.as_deref(), &lower, &upper, &opts.lp)?;
        pivots += tab.pivots;
        if outcome == Outcome::Infeasible {
            continue;
        }
        let sol = data.solution(&tab, outcome, &lower, &upper);
        if sol.status == crate::lp::LpStatus::Unbounded {
            unbounded = true;
            break;
        }
        let obj = sol.objective;
        if let Some((inc, _)) = &incumbent {
            if obj >= inc - opts.gap_tol * inc.abs().max(1.0) {
                continue;
            }
        }

        let mut branch: Option<(usize, f64)> = None;
        for &b in &binaries {
            let x = sol.values[b];
            let frac = (x - x.round()).abs();
            if frac > opts.int_tol && branch.map_or(true, |(_, f)| frac > f) {
                branch = Some((b, frac));
            }
        }

        match branch {
            None => {
                // Re-solve with binaries pinned so continuous values are consistent.
                let mut plo = lo.clone();
                let mut phi = hi.clone();
                for &b in &binaries {
                    let r = sol.values[b].round();
                    plo[b] = r;
                    phi[b] = r;
                }
                let (plower, pupper) = data.bounds_from(model, &plo, &phi);
                tab.pivots = 0;
                let polished = tab.solve(&data, &plower, &pupper, &opts.lp)?;
                pivots += tab.pivots;
                let candidate = if polished == Outcome::Optimal {
                    data.solution(&tab, polished, &plower, &pupper)
                } else {
                    sol
                };
                let mut values = candidate.values;
                for &b in &binaries {
                    values[b] = values[b].round();
                }
                let value = model.objective_value(&values);
                if incumbent.as_ref().map_or(true, |(inc, _)| value < *inc) {
                    incumbent = Some((value, values));
                }
            }
            Some((b, _)) => {
                let bound = node.bound.max(obj);
                let warm = if opts.warm_start && warm_nodes + 2 <= MAX_WARM_NODES {
                    warm_nodes += 2;
                    Some(Rc::new(tab))
                } else {
                    None
                };
                let up_first = sol.values[b] >= 0.5;
                for val in [0.0, 1.0] {
                    let mut fixes = node.fixes.clone();
                    fixes.push((b, val));
                    let first = (val == 1.0) == up_first;
                    heap.push(Node {
                        bound,
                        depth: node.depth + 1,
                        seq: seq + u64::from(!first),
                        fixes,
                        warm: warm.clone(),
                    });
                }
                seq += 2;
            }
        }
    }

    let wall_time_s = start.elapsed().as_secs_f64();
    if unbounded {
        return Ok(SolveReport {
            status: SolveStatus::Unbounded,
            values: None,
            objective: None,
            bound: f64::NEG_INFINITY,
            gap: f64::INFINITY,
            nodes,
            lp_pivots: pivots,
            wall_time_s,
            bound_trace: trace,
        });
    }
    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let report = match (incumbent, stop) {
        (None, None) => SolveReport {
            status: SolveStatus::Infeasible,
            values: None,
            objective: None,
            bound: f64::INFINITY,
            gap: 0.0,
            nodes,
            lp_pivots: pivots,
            wall_time_s,
            bound_trace: trace,
        },
        (None, Some(status)) => SolveReport {
            status,
            values: None,
            objective: None,
            bound: open_bound,
            gap: f64::INFINITY,
            nodes,
            lp_pivots: pivots,
            wall_time_s,
            bound_trace: trace,
        },
        (Some((obj, values)), stop) => {
            let bound = if stop.is_some() {
                open_bound.min(obj)
            } else {
                obj.min(open_bound)
            };
            SolveReport {
                status: stop.unwrap_or(SolveStatus::Optimal),
                values: Some(values),
                objective: Some(obj),
                bound,
                gap: relative_gap(obj, bound),
                nodes,
                lp_pivots: pivots,
                wall_time_s,
                bound_trace: trace,
            }
        }
    };
    Ok(report)
}

fn solve_node(
    data: &LpData,
    warm: Option<&Tableau>,
    lower: &[f64],
    upper: &[f64],
    opts: &LpOptions,
) -> Result<(Tableau, Outcome), LpError> {
    if let Some(parent) = warm {
        let mut tab = parent.clone();
        tab.pivots = 0;
        if let Ok(outcome) = tab.solve(data, lower, upper, opts) {
            return Ok((tab, outcome));
        }
    }
    let mut tab = Tableau::slack_basis(data, lower, upper);
    let outcome = tab.solve(data, lower, upper, opts)?;
    Ok((tab, outcome))
}
