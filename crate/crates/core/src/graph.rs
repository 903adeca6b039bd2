//! Cycle and path enumeration over the undirected infrastructure graph, plus
//! the radiality and island predicates used when checking plans.

use serde::Serialize;

use crate::error::GraphError;
use crate::feeder::{BusId, EdgeId, Feeder, UnionFind, ROOT};

pub const DEFAULT_CYCLE_LIMIT: usize = 10_000;
pub const DEFAULT_PATH_LIMIT: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IndicatorKind {
    Cycle,
    Path { from: BusId, to: BusId },
}

/// A set of edges forming a simple cycle or a simple path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeIndicator {
    #[serde(flatten)]
    pub kind: IndicatorKind,
    /// Member edges, ascending.
    pub edges: Vec<EdgeId>,
}

impl EdgeIndicator {
    fn new(kind: IndicatorKind, mut edges: Vec<EdgeId>) -> Self {
        edges.sort_unstable();
        Self { kind, edges }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn bits(&self, num_edges: usize) -> Vec<u8> {
        let mut bits = vec![0; num_edges];
        for &e in &self.edges {
            bits[e] = 1;
        }
        bits
    }

    /// Source bus of a path.
    pub fn source(&self) -> Option<BusId> {
        match self.kind {
            IndicatorKind::Path { from, .. } => Some(from),
            IndicatorKind::Cycle => None,
        }
    }

    pub fn target(&self) -> Option<BusId> {
        match self.kind {
            IndicatorKind::Path { to, .. } => Some(to),
            IndicatorKind::Cycle => None,
        }
    }

    /// Number of member edges closed under `y`.
    pub fn closed_count(&self, y: &[u8]) -> usize {
        self.edges.iter().filter(|&&e| y[e] == 1).count()
    }

    pub fn fully_closed(&self, y: &[u8]) -> bool {
        self.closed_count(y) == self.edges.len()
    }
}

/// Every simple cycle, each reported once.
pub fn enumerate_cycles(feeder: &Feeder) -> Result<Vec<EdgeIndicator>, GraphError> {
    enumerate_cycles_with(feeder, DEFAULT_CYCLE_LIMIT)
}

pub fn enumerate_cycles_with(feeder: &Feeder, limit: usize) -> Result<Vec<EdgeIndicator>, GraphError> {
    let adj = feeder.adjacency();
    let n = feeder.num_buses();
    let mut out = Vec::new();
    let mut on_path = vec![false; n];
    let mut edges = Vec::new();

    // Each cycle is rooted at its smallest bus `s` and explored through buses
    // above `s`. Both orientations are met; keep the one whose first edge id is
    // below its closing edge id.
    struct Search<'a> {
        adj: &'a [Vec<(EdgeId, BusId)>],
        start: BusId,
        on_path: &'a mut [bool],
        edges: &'a mut Vec<EdgeId>,
        out: &'a mut Vec<EdgeIndicator>,
        limit: usize,
    }

    impl Search<'_> {
        fn visit(&mut self, u: BusId) -> Result<(), GraphError> {
            for &(e, w) in &self.adj[u] {
                if w == self.start {
                    let first = self.edges[0];
                    if e != first && first < e {
                        if self.out.len() == self.limit {
                            return Err(GraphError::CycleBudget { limit: self.limit });
                        }
                        let mut members = self.edges.clone();
                        members.push(e);
                        self.out.push(EdgeIndicator::new(IndicatorKind::Cycle, members));
                    }
                } else if w > self.start && !self.on_path[w] {
                    self.on_path[w] = true;
                    self.edges.push(e);
                    self.visit(w)?;
                    self.edges.pop();
                    self.on_path[w] = false;
                }
            }
            Ok(())
        }
    }

    for s in 0..n {
        on_path[s] = true;
        let mut search = Search {
            adj: &adj,
            start: s,
            on_path: &mut on_path,
            edges: &mut edges,
            out: &mut out,
            limit,
        };
        for &(e, w) in &adj[s] {
            if w > s {
                search.on_path[w] = true;
                search.edges.push(e);
                search.visit(w)?;
                search.edges.pop();
                search.on_path[w] = false;
            }
        }
        on_path[s] = false;
    }
    out.sort_by(|a, b| a.edges.cmp(&b.edges));
    Ok(out)
}

/// All simple paths from `source` to each of `targets`, sorted by target then
/// by edge set. `budget` counts down the paths still allowed.
fn paths_between(
    adj: &[Vec<(EdgeId, BusId)>],
    source: BusId,
    targets: &[BusId],
    budget: &mut usize,
    limit: usize,
) -> Result<Vec<EdgeIndicator>, GraphError> {
    fn dfs(
        adj: &[Vec<(EdgeId, BusId)>],
        u: BusId,
        target: BusId,
        on_path: &mut [bool],
        edges: &mut Vec<EdgeId>,
        found: &mut Vec<Vec<EdgeId>>,
        budget: &mut usize,
        limit: usize,
    ) -> Result<(), GraphError> {
        if u == target {
            if *budget == 0 {
                return Err(GraphError::PathBudget { limit });
            }
            *budget -= 1;
            found.push(edges.clone());
            return Ok(());
        }
        for &(e, w) in &adj[u] {
            if !on_path[w] {
                on_path[w] = true;
                edges.push(e);
                dfs(adj, w, target, on_path, edges, found, budget, limit)?;
                edges.pop();
                on_path[w] = false;
            }
        }
        Ok(())
    }

    let mut out = Vec::new();
    let mut sorted_targets = targets.to_vec();
    sorted_targets.sort_unstable();
    for &t in &sorted_targets {
        let mut on_path = vec![false; adj.len()];
        on_path[source] = true;
        let mut found = Vec::new();
        dfs(adj, source, t, &mut on_path, &mut Vec::new(), &mut found, budget, limit)?;
        let mut group: Vec<EdgeIndicator> = found
            .into_iter()
            .map(|edges| EdgeIndicator::new(IndicatorKind::Path { from: source, to: t }, edges))
            .collect();
        group.sort_by(|a, b| a.edges.cmp(&b.edges));
        out.extend(group);
    }
    Ok(out)
}

/// Paths from each non-black-start unit to the root and to every black-start unit.
pub fn enumerate_nbs_paths(feeder: &Feeder) -> Result<Vec<EdgeIndicator>, GraphError> {
    enumerate_nbs_paths_with(feeder, DEFAULT_PATH_LIMIT)
}

pub fn enumerate_nbs_paths_with(feeder: &Feeder, limit: usize) -> Result<Vec<EdgeIndicator>, GraphError> {
    let adj = feeder.adjacency();
    let mut targets = feeder.black_start();
    targets.push(ROOT);
    let mut budget = limit;
    let mut out = Vec::new();
    for i in feeder.non_black_start() {
        out.extend(paths_between(&adj, i, &targets, &mut budget, limit)?);
    }
    Ok(out)
}

/// Paths from each black-start unit to the root and to every higher-ranked
/// black-start unit.
pub fn enumerate_bs_paths(feeder: &Feeder) -> Result<Vec<EdgeIndicator>, GraphError> {
    enumerate_bs_paths_with(feeder, DEFAULT_PATH_LIMIT)
}

pub fn enumerate_bs_paths_with(feeder: &Feeder, limit: usize) -> Result<Vec<EdgeIndicator>, GraphError> {
    let adj = feeder.adjacency();
    let bs = feeder.black_start();
    let mut budget = limit;
    let mut out = Vec::new();
    for &i in &bs {
        let mut targets: Vec<BusId> = bs.iter().copied().filter(|&j| feeder.bs_outranks(j, i)).collect();
        targets.push(ROOT);
        out.extend(paths_between(&adj, i, &targets, &mut budget, limit)?);
    }
    Ok(out)
}

/// Cycles and both path families of a feeder, computed once and shared by
/// every scenario on it.
#[derive(Debug, Clone, Serialize)]
pub struct Topology {
    pub cycles: Vec<EdgeIndicator>,
    pub nbs_paths: Vec<EdgeIndicator>,
    pub bs_paths: Vec<EdgeIndicator>,
}

impl Topology {
    pub fn analyze(feeder: &Feeder) -> Result<Self, GraphError> {
        Ok(Self {
            cycles: enumerate_cycles(feeder)?,
            nbs_paths: enumerate_nbs_paths(feeder)?,
            bs_paths: enumerate_bs_paths(feeder)?,
        })
    }
}

/// True when the closed edges contain no cycle.
pub fn is_forest(feeder: &Feeder, y: &[u8]) -> bool {
    let mut uf = UnionFind::new(feeder.num_buses());
    feeder
        .edges
        .iter()
        .filter(|e| y[e.id] == 1)
        .all(|e| uf.union(e.from, e.to))
}

/// Islands: connected components of energized buses over closed edges whose
/// endpoints are both energized. Each island is sorted; islands are ordered
/// by their smallest bus.
pub fn energized_components(feeder: &Feeder, x: &[u8], y: &[u8]) -> Vec<Vec<BusId>> {
    let n = feeder.num_buses();
    let mut uf = UnionFind::new(n);
    for e in &feeder.edges {
        if y[e.id] == 1 && x[e.from] == 1 && x[e.to] == 1 {
            uf.union(e.from, e.to);
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<BusId>> = std::collections::BTreeMap::new();
    for i in (0..n).filter(|&i| x[i] == 1) {
        groups.entry(uf.find(i)).or_default().push(i);
    }
    let mut islands: Vec<Vec<BusId>> = groups.into_values().collect();
    islands.sort_by_key(|g| g[0]);
    islands
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feeder::tests::toy;
    use crate::ieee37::builtin_ieee37;

    #[test]
    fn toy_tree_has_no_cycles() {
        let f = toy();
        assert!(enumerate_cycles(&f).unwrap().is_empty());
        assert!(enumerate_nbs_paths(&f).unwrap().is_empty());
        let bs = enumerate_bs_paths(&f).unwrap();
        assert_eq!(bs.len(), 1);
        assert_eq!(bs[0].edges, vec![0, 1]);
        assert_eq!(bs[0].kind, IndicatorKind::Path { from: 2, to: 0 });
    }

    #[test]
    fn ieee37_counts() {
        let t = Topology::analyze(&builtin_ieee37()).unwrap();
        assert_eq!(t.cycles.len(), 2);
        assert_eq!(t.nbs_paths.len(), 21);
        assert_eq!(t.bs_paths.len(), 8);
    }

    #[test]
    fn budget_is_enforced() {
        let f = builtin_ieee37();
        assert!(matches!(
            enumerate_cycles_with(&f, 1),
            Err(GraphError::CycleBudget { limit: 1 })
        ));
        assert!(matches!(
            enumerate_nbs_paths_with(&f, 5),
            Err(GraphError::PathBudget { limit: 5 })
        ));
    }

    #[test]
    fn islands_of_trivial_states() {
        let f = toy();
        assert_eq!(energized_components(&f, &[1, 0, 0], &[0, 0]), vec![vec![0]]);
        assert_eq!(energized_components(&f, &[1, 1, 1], &[1, 0]), vec![vec![0, 1], vec![2]]);
        assert!(is_forest(&f, &[1, 1]));
    }
}
