//! Bounded-variable dual simplex on a dense compact tableau.
//!
//! Every row `a_i x` gets a logical variable `w_i = a_i x` carrying the row's
//! activity bounds, so the system is `[A -I] (x, w) = 0` with all variables
//! bounded. Structural variables with an infinite bound are boxed at
//! [`LpOptions::infinity`]; the implied activity range of each row boxes its
//! logical. With every variable boxed, the all-logical basis is dual feasible
//! after putting each structural at the bound favoured by its cost, so the
//! dual simplex needs no phase 1 and a branch-and-bound child can reuse its
//! parent's final tableau after tightening bounds.
//!
//! The tableau stores only the nonbasic columns: `x_B = -T x_N`.

use serde::{Deserialize, Serialize};

use crate::error::LpError;
use crate::model::MilpModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpOptions {
    /// Primal feasibility tolerance on basic variables.
    pub feas_tol: f64,
    /// Dual feasibility tolerance on reduced costs.
    pub opt_tol: f64,
    /// Smallest admissible pivot magnitude.
    pub pivot_tol: f64,
    /// Magnitude used to box infinite structural bounds.
    pub infinity: f64,
    /// Pivots after which selection switches to Bland's smallest-index rule.
    /// `None` means `10 * (rows + cols)`.
    pub bland_after: Option<usize>,
    /// Hard pivot cap; `None` means `200 * (rows + cols)`.
    pub max_pivots: Option<usize>,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            pivot_tol: 1e-9,
            infinity: 1e7,
            bland_after: None,
            max_pivots: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal values per structural variable (empty unless optimal).
    pub values: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

/// Solves the continuous relaxation of `model` (binaries relaxed to their bounds).
pub fn solve_lp(model: &MilpModel) -> Result<LpSolution, LpError> {
    solve_lp_with(model, &LpOptions::default())
}

pub fn solve_lp_with(model: &MilpModel, opts: &LpOptions) -> Result<LpSolution, LpError> {
    model.validate()?;
    let data = LpData::new(model, opts);
    let (lower, upper) = data.bounds(model);
    let mut tab = Tableau::slack_basis(&data, &lower, &upper);
    let outcome = tab.solve(&data, &lower, &upper, opts)?;
    Ok(data.solution(&tab, outcome, &lower, &upper))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Optimal,
    Infeasible,
}

/// Immutable problem data shared by all tableaux of one model.
#[derive(Debug, Clone)]
pub(crate) struct LpData {
    pub m: usize,
    pub n: usize,
    /// Sparse rows of `A`.
    rows: Vec<Vec<(usize, f64)>>,
    /// Costs over structurals then logicals (logicals cost 0).
    cost: Vec<f64>,
    infinity: f64,
}

impl LpData {
    pub fn new(model: &MilpModel, opts: &LpOptions) -> Self {
        let n = model.num_vars();
        let m = model.num_constraints();
        let rows = model
            .constraints
            .iter()
            .map(|c| c.coeffs.iter().map(|&(v, a)| (v.0, a)).collect())
            .collect();
        let mut cost = model.cost_vector();
        cost.resize(n + m, 0.0);
        Self {
            m,
            n,
            rows,
            cost,
            infinity: opts.infinity,
        }
    }

    /// Full bound vectors (structurals then logicals) for the model's own bounds.
    pub fn bounds(&self, model: &MilpModel) -> (Vec<f64>, Vec<f64>) {
        let lower: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
        let upper: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
        self.bounds_from(model, &lower, &upper)
    }

    /// Bound vectors for overridden structural bounds; infinite values are boxed.
    pub fn bounds_from(&self, model: &MilpModel, col_lo: &[f64], col_hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let big = self.infinity;
        let mut lower: Vec<f64> = col_lo.iter().map(|&l| l.max(-big)).collect();
        let mut upper: Vec<f64> = col_hi.iter().map(|&u| u.min(big)).collect();
        for (row, c) in self.rows.iter().zip(&model.constraints) {
            let (mut lo, mut hi) = c.activity_bounds();
            // Box the infinite side at the implied activity range.
            let (mut amin, mut amax) = (0.0, 0.0);
            for &(j, a) in row {
                let (p, q) = (a * lower[j], a * upper[j]);
                amin += p.min(q);
                amax += p.max(q);
            }
            if lo == f64::NEG_INFINITY {
                lo = amin.min(hi) - 1.0;
            }
            if hi == f64::INFINITY {
                hi = amax.max(lo) + 1.0;
            }
            lower.push(lo);
            upper.push(hi);
        }
        (lower, upper)
    }

    pub fn solution(&self, tab: &Tableau, outcome: Outcome, lower: &[f64], upper: &[f64]) -> LpSolution {
        match outcome {
            Outcome::Infeasible => LpSolution {
                status: LpStatus::Infeasible,
                values: Vec::new(),
                objective: f64::INFINITY,
                pivots: tab.pivots,
            },
            Outcome::Optimal => {
                let values = tab.structural_values(self, lower, upper);
                let objective = values.iter().zip(&self.cost).map(|(x, c)| x * c).sum();
                let at_box = values.iter().enumerate().any(|(j, &x)| {
                    let big = self.infinity;
                    (x >= big * (1.0 - 1e-9) && upper[j] >= big) || (x <= -big * (1.0 - 1e-9) && lower[j] <= -big)
                });
                LpSolution {
                    status: if at_box { LpStatus::Unbounded } else { LpStatus::Optimal },
                    values,
                    objective,
                    pivots: tab.pivots,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Basic(usize),
    Nonbasic(usize),
}

/// Basis state plus the compact tableau `T = B^-1 N`.
#[derive(Debug, Clone)]
pub(crate) struct Tableau {
    m: usize,
    n: usize,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    slot: Vec<Slot>,
    at_upper: Vec<bool>,
    t: Vec<f64>,
    d: Vec<f64>,
    xb: Vec<f64>,
    pub pivots: usize,
}

const DROP: f64 = 1e-14;

impl Tableau {
    /// All-logical basis with structurals at the bound their cost prefers.
    pub fn slack_basis(data: &LpData, lower: &[f64], upper: &[f64]) -> Self {
        let (m, n) = (data.m, data.n);
        let mut t = vec![0.0; m * n];
        for (i, row) in data.rows.iter().enumerate() {
            for &(j, a) in row {
                t[i * n + j] = -a;
            }
        }
        let mut slot = Vec::with_capacity(n + m);
        slot.extend((0..n).map(Slot::Nonbasic));
        slot.extend((0..m).map(Slot::Basic));
        let at_upper = (0..n + m).map(|j| j < n && data.cost[j] < 0.0).collect();
        let mut tab = Self {
            m,
            n,
            basic: (n..n + m).collect(),
            nonbasic: (0..n).collect(),
            slot,
            at_upper,
            t,
            d: data.cost[..n].to_vec(),
            xb: vec![0.0; m],
            pivots: 0,
        };
        tab.recompute_xb(lower, upper);
        tab
    }

    fn nonbasic_value(&self, var: usize, lower: &[f64], upper: &[f64]) -> f64 {
        if self.at_upper[var] {
            upper[var]
        } else {
            lower[var]
        }
    }

    fn recompute_xb(&mut self, lower: &[f64], upper: &[f64]) {
        let n = self.n;
        let xn: Vec<f64> = self
            .nonbasic
            .iter()
            .map(|&v| self.nonbasic_value(v, lower, upper))
            .collect();
        for i in 0..self.m {
            let row = &self.t[i * n..(i + 1) * n];
            self.xb[i] = -row.iter().zip(&xn).map(|(a, x)| a * x).sum::<f64>();
        }
    }

    fn recompute_duals(&mut self, data: &LpData) {
        let n = self.n;
        for (j, &v) in self.nonbasic.iter().enumerate() {
            self.d[j] = data.cost[v];
        }
        for i in 0..self.m {
            let cb = data.cost[self.basic[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.t[i * n..(i + 1) * n];
            for (dj, a) in self.d.iter_mut().zip(row) {
                *dj -= cb * a;
            }
        }
    }

    pub fn structural_values(&self, data: &LpData, lower: &[f64], upper: &[f64]) -> Vec<f64> {
        (0..data.n)
            .map(|v| match self.slot[v] {
                Slot::Basic(r) => self.xb[r],
                Slot::Nonbasic(_) => self.nonbasic_value(v, lower, upper),
            })
            .collect()
    }

    /// Largest `|A x - w|` over rows, measuring accumulated tableau error.
    fn residual(&self, data: &LpData, lower: &[f64], upper: &[f64]) -> f64 {
        let value = |v: usize| match self.slot[v] {
            Slot::Basic(r) => self.xb[r],
            Slot::Nonbasic(_) => self.nonbasic_value(v, lower, upper),
        };
        data.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let act: f64 = row.iter().map(|&(j, a)| a * value(j)).sum();
                let scale = 1.0 + row.iter().map(|&(j, a)| (a * value(j)).abs()).fold(0.0, f64::max);
                (act - value(data.n + i)).abs() / scale
            })
            .fold(0.0, f64::max)
    }

    /// Pivots the tableau and reduced costs on `(r, q)`; basis bookkeeping included.
    fn pivot(&mut self, r: usize, q: usize) {
        let n = self.n;
        let alpha = self.t[r * n + q];
        let inv = 1.0 / alpha;
        let mut nz: Vec<usize> = Vec::with_capacity(n);
        {
            let row = &mut self.t[r * n..(r + 1) * n];
            for (j, a) in row.iter_mut().enumerate() {
                if j == q {
                    *a = inv;
                } else {
                    *a *= inv;
                }
                if a.abs() > DROP {
                    nz.push(j);
                } else {
                    *a = 0.0;
                }
            }
        }
        let pivot_row: Vec<(usize, f64)> = nz.iter().map(|&j| (j, self.t[r * n + j])).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * n + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * n..(i + 1) * n];
            row[q] = 0.0;
            for &(j, p) in &pivot_row {
                let v = row[j] - f * p;
                row[j] = if v.abs() > DROP { v } else { 0.0 };
            }
        }
        let f = self.d[q];
        if f != 0.0 {
            self.d[q] = 0.0;
            for &(j, p) in &pivot_row {
                self.d[j] -= f * p;
            }
        }
        let entering = self.nonbasic[q];
        let leaving = self.basic[r];
        self.basic[r] = entering;
        self.nonbasic[q] = leaving;
        self.slot[entering] = Slot::Basic(r);
        self.slot[leaving] = Slot::Nonbasic(q);
        self.pivots += 1;
    }

    /// Rebuilds `T`, `d` and `x_B` from the original rows for the current basis.
    fn reinvert(&mut self, data: &LpData, lower: &[f64], upper: &[f64]) -> Result<(), LpError> {
        let target: Vec<usize> = self.basic.clone();
        let at_upper = self.at_upper.clone();
        let pivots = self.pivots;
        let mut fresh = Tableau::slack_basis(data, lower, upper);
        let n = self.n;
        let mut in_target = vec![false; n + self.m];
        for &v in &target {
            in_target[v] = true;
        }
        let mut structurals: Vec<usize> = target.iter().copied().filter(|&v| v < n).collect();
        structurals.sort_unstable();
        for s in structurals {
            let Slot::Nonbasic(col) = fresh.slot[s] else { continue };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..fresh.m {
                let b = fresh.basic[i];
                if b >= n && !in_target[b] {
                    let a = fresh.t[i * n + col].abs();
                    if a > best.map_or(1e-11, |(_, x)| x) {
                        best = Some((i, a));
                    }
                }
            }
            let Some((r, _)) = best else {
                return Err(LpError::Numerical {
                    detail: "singular basis during reinversion".into(),
                    residual: f64::NAN,
                    pivots,
                });
            };
            fresh.pivot(r, col);
        }
        fresh.at_upper = at_upper;
        fresh.pivots = pivots;
        fresh.recompute_duals(data);
        fresh.recompute_xb(lower, upper);
        *self = fresh;
        Ok(())
    }

    /// Moves nonbasic variables to the bound matching their reduced-cost sign.
    /// Returns whether any variable moved.
    fn restore_dual_feasibility(&mut self, lower: &[f64], upper: &[f64], tol: f64) -> bool {
        let mut moved = false;
        for (j, &v) in self.nonbasic.iter().enumerate() {
            if lower[v] == upper[v] {
                continue;
            }
            let d = self.d[j];
            if !self.at_upper[v] && d < -tol {
                self.at_upper[v] = true;
                moved = true;
            } else if self.at_upper[v] && d > tol {
                self.at_upper[v] = false;
                moved = true;
            }
        }
        moved
    }

    /// Runs the dual simplex from the current basis under the given bounds.
    pub fn solve(&mut self, data: &LpData, lower: &[f64], upper: &[f64], opts: &LpOptions) -> Result<Outcome, LpError> {
        let size = self.m + self.n;
        let bland_after = opts.bland_after.unwrap_or(10 * size);
        let max_pivots = self.pivots + opts.max_pivots.unwrap_or(200 * size).max(1000);
        let start = self.pivots;
        self.restore_dual_feasibility(lower, upper, opts.opt_tol);
        self.recompute_xb(lower, upper);
        let mut since_refresh = 0usize;
        let mut reinversions = 0usize;
        loop {
            if self.pivots >= max_pivots {
                return Err(LpError::Numerical {
                    detail: "pivot limit reached".into(),
                    residual: self.residual(data, lower, upper),
                    pivots: self.pivots,
                });
            }
            if since_refresh >= 100 {
                self.recompute_xb(lower, upper);
                since_refresh = 0;
            }
            let bland = self.pivots - start >= bland_after;
            let Some((r, to_upper)) = self.select_leaving(lower, upper, opts.feas_tol, bland) else {
                // Candidate optimum: verify against the original rows.
                self.recompute_xb(lower, upper);
                if self.select_leaving(lower, upper, opts.feas_tol, bland).is_some() {
                    continue;
                }
                let residual = self.residual(data, lower, upper);
                if residual > 1e-9 {
                    if reinversions >= 3 {
                        return Err(LpError::Numerical {
                            detail: "residual persists after reinversion".into(),
                            residual,
                            pivots: self.pivots,
                        });
                    }
                    reinversions += 1;
                    self.reinvert(data, lower, upper)?;
                    self.restore_dual_feasibility(lower, upper, opts.opt_tol);
                    self.recompute_xb(lower, upper);
                    continue;
                }
                if self.restore_dual_feasibility(lower, upper, opts.opt_tol) {
                    self.recompute_xb(lower, upper);
                    continue;
                }
                return Ok(Outcome::Optimal);
            };
            let leaving = self.basic[r];
            let target = if to_upper { upper[leaving] } else { lower[leaving] };
            let increase = !to_upper;
            let Some(q) = self.select_entering(r, increase, lower, upper, opts, bland) else {
                // Confirm infeasibility on a freshly inverted tableau.
                if reinversions == 0 && self.pivots > start {
                    reinversions += 1;
                    self.reinvert(data, lower, upper)?;
                    self.restore_dual_feasibility(lower, upper, opts.opt_tol);
                    self.recompute_xb(lower, upper);
                    continue;
                }
                return Ok(Outcome::Infeasible);
            };
            let n = self.n;
            let alpha = self.t[r * n + q];
            let entering = self.nonbasic[q];
            let step = (self.xb[r] - target) / alpha;
            let entering_value = self.nonbasic_value(entering, lower, upper) + step;
            if step != 0.0 {
                for i in 0..self.m {
                    let a = self.t[i * n + q];
                    if a != 0.0 {
                        self.xb[i] -= a * step;
                    }
                }
            }
            self.pivot(r, q);
            self.xb[r] = entering_value;
            self.at_upper[leaving] = to_upper;
            self.at_upper[entering] = false;
            since_refresh += 1;
        }
    }

    fn select_leaving(&self, lower: &[f64], upper: &[f64], tol: f64, bland: bool) -> Option<(usize, bool)> {
        let mut best: Option<(usize, bool, f64)> = None;
        for (i, &v) in self.basic.iter().enumerate() {
            let x = self.xb[i];
            let (infeas, to_upper) = if x < lower[v] - tol * (1.0 + lower[v].abs()) {
                (lower[v] - x, false)
            } else if x > upper[v] + tol * (1.0 + upper[v].abs()) {
                (x - upper[v], true)
            } else {
                continue;
            };
            let better = match best {
                None => true,
                Some((bi, _, bv)) => {
                    if bland {
                        v < self.basic[bi]
                    } else {
                        infeas > bv
                    }
                }
            };
            if better {
                best = Some((i, to_upper, infeas));
            }
        }
        best.map(|(i, u, _)| (i, u))
    }

    /// Harris two-pass dual ratio test; Bland mode takes the smallest index among minimal ratios.
    fn select_entering(
        &self,
        r: usize,
        increase: bool,
        lower: &[f64],
        upper: &[f64],
        opts: &LpOptions,
        bland: bool,
    ) -> Option<usize> {
        let n = self.n;
        let row = &self.t[r * n..(r + 1) * n];
        let mut cands: Vec<(usize, f64, f64)> = Vec::new();
        for (j, &a) in row.iter().enumerate() {
            if a.abs() <= opts.pivot_tol {
                continue;
            }
            let v = self.nonbasic[j];
            if lower[v] == upper[v] {
                continue;
            }
            let up = self.at_upper[v];
            // x_B[r] moves by -a per unit increase of x_j.
            let ok = if increase {
                (!up && a < 0.0) || (up && a > 0.0)
            } else {
                (!up && a > 0.0) || (up && a < 0.0)
            };
            if !ok {
                continue;
            }
            let d = if up { (-self.d[j]).max(0.0) } else { self.d[j].max(0.0) };
            cands.push((j, d, a.abs()));
        }
        if cands.is_empty() {
            return None;
        }
        if bland {
            let min_ratio = cands.iter().map(|&(_, d, a)| d / a).fold(f64::INFINITY, f64::min);
            return cands
                .iter()
                .filter(|&&(_, d, a)| d / a <= min_ratio + 1e-12)
                .min_by_key(|&&(j, _, _)| self.nonbasic[j])
                .map(|&(j, _, _)| j);
        }
        let bound = cands
            .iter()
            .map(|&(_, d, a)| (d + opts.opt_tol) / a)
            .fold(f64::INFINITY, f64::min);
        cands
            .iter()
            .filter(|&&(_, d, a)| d / a <= bound)
            .max_by(|x, y| x.2.total_cmp(&y.2).then(y.0.cmp(&x.0)))
            .map(|&(j, _, _)| j)
    }
}
