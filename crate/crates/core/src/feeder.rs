//! Distribution feeder description and post-outage state.
//!
//! Powers are kW / kVAr (positive = injection), voltages are squared
//! magnitudes in per-unit², impedances per-unit on the header base.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{FeederError, ScenarioError};

pub type BusId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusKind {
    Root,
    LoadFixed,
    LoadElastic,
    GenBlackStart,
    GenNonBlackStart,
    Junction,
}

impl BusKind {
    pub fn is_load(self) -> bool {
        matches!(self, BusKind::LoadFixed | BusKind::LoadElastic)
    }

    pub fn is_generator(self) -> bool {
        matches!(self, BusKind::GenBlackStart | BusKind::GenNonBlackStart)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub kind: BusKind,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    /// Generator rating in kW; orders black-start units for coordination.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<f64>,
    /// Ties reactive to active load at the nominal power factor.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fix_power_factor: bool,
}

impl Bus {
    pub fn label(&self) -> String {
        if self.name.is_empty() {
            self.id.to_string()
        } else {
            self.name.clone()
        }
    }

    /// Generator rating, falling back to `p_max`.
    pub fn rated_kw(&self) -> f64 {
        self.rating.unwrap_or(self.p_max)
    }

    /// Nominal (full) load magnitude in kW; zero for non-load buses.
    pub fn nominal_load_kw(&self) -> f64 {
        if self.kind.is_load() {
            -self.p_min
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    InService,
    OutOfService,
    Switch,
    Regulator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub from: BusId,
    pub to: BusId,
    pub kind: EdgeKind,
    pub r: f64,
    pub x: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    /// Pre-fault state of a switch; ignored for other kinds.
    pub normally_closed: bool,
}

impl Edge {
    pub fn label(&self) -> String {
        if self.name.is_empty() {
            self.id.to_string()
        } else {
            self.name.clone()
        }
    }

    pub fn other(&self, bus: BusId) -> BusId {
        if self.from == bus {
            self.to
        } else {
            self.from
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feeder {
    pub base_kva: f64,
    pub base_kv: f64,
    pub v0: f64,
    pub lambda: f64,
    pub tap_count: usize,
    pub tap_step: f64,
    pub buses: Vec<Bus>,
    pub edges: Vec<Edge>,
}

pub const ROOT: BusId = 0;

// On-disk schema. Edge flow minima default to the negated maxima.

#[derive(Debug, Serialize, Deserialize)]
struct FeederFile {
    header: Header,
    buses: Vec<Bus>,
    edges: Vec<EdgeRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    base_kva: f64,
    base_kv: f64,
    v0: f64,
    lambda: f64,
    #[serde(default = "default_tap_count")]
    tap_count: usize,
    #[serde(default = "default_tap_step")]
    tap_step: f64,
}

fn default_tap_count() -> usize {
    33
}

fn default_tap_step() -> f64 {
    0.00625
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeRecord {
    id: EdgeId,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    name: String,
    from: BusId,
    to: BusId,
    kind: EdgeKind,
    #[serde(default)]
    r: f64,
    #[serde(default)]
    x: f64,
    #[serde(default)]
    p_min: Option<f64>,
    p_max: f64,
    #[serde(default)]
    q_min: Option<f64>,
    q_max: f64,
    #[serde(default = "default_true")]
    normally_closed: bool,
}

/// Parses and validates a feeder description.
pub fn load_feeder(text: &str) -> Result<Feeder, FeederError> {
    let file: FeederFile = serde_json::from_str(text).map_err(|e| FeederError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let edges = file
        .edges
        .into_iter()
        .map(|e| Edge {
            id: e.id,
            name: e.name,
            from: e.from,
            to: e.to,
            kind: e.kind,
            r: e.r,
            x: e.x,
            p_min: e.p_min.unwrap_or(-e.p_max),
            p_max: e.p_max,
            q_min: e.q_min.unwrap_or(-e.q_max),
            q_max: e.q_max,
            normally_closed: e.normally_closed,
        })
        .collect();
    let feeder = Feeder {
        base_kva: file.header.base_kva,
        base_kv: file.header.base_kv,
        v0: file.header.v0,
        lambda: file.header.lambda,
        tap_count: file.header.tap_count,
        tap_step: file.header.tap_step,
        buses: file.buses,
        edges,
    };
    feeder.validate()?;
    Ok(feeder)
}

impl Feeder {
    pub fn to_json(&self) -> String {
        let file = FeederFile {
            header: Header {
                base_kva: self.base_kva,
                base_kv: self.base_kv,
                v0: self.v0,
                lambda: self.lambda,
                tap_count: self.tap_count,
                tap_step: self.tap_step,
            },
            buses: self.buses.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    id: e.id,
                    name: e.name.clone(),
                    from: e.from,
                    to: e.to,
                    kind: e.kind,
                    r: e.r,
                    x: e.x,
                    p_min: Some(e.p_min),
                    p_max: e.p_max,
                    q_min: Some(e.q_min),
                    q_max: e.q_max,
                    normally_closed: e.normally_closed,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("feeder serializes")
    }

    pub fn num_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn bus_by_name(&self, name: &str) -> Option<&Bus> {
        self.buses.iter().find(|b| b.name == name)
    }

    /// Resolves an edge by numeric id or by its name (e.g. `713-704`).
    pub fn resolve_edge(&self, label: &str) -> Result<EdgeId, ScenarioError> {
        let label = label.trim();
        if let Some(e) = self.edges.iter().find(|e| !e.name.is_empty() && e.name == label) {
            return Ok(e.id);
        }
        match label.parse::<usize>() {
            Ok(id) if id < self.edges.len() => Ok(id),
            Ok(id) => Err(ScenarioError::UnknownEdge(id)),
            Err(_) => Err(ScenarioError::UnknownLabel(label.to_string())),
        }
    }

    pub fn edges_of(&self, kind: EdgeKind) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.kind == kind)
    }

    pub fn buses_of(&self, kind: BusKind) -> impl Iterator<Item = &Bus> + '_ {
        self.buses.iter().filter(move |b| b.kind == kind)
    }

    pub fn black_start(&self) -> Vec<BusId> {
        self.buses_of(BusKind::GenBlackStart).map(|b| b.id).collect()
    }

    pub fn non_black_start(&self) -> Vec<BusId> {
        self.buses_of(BusKind::GenNonBlackStart).map(|b| b.id).collect()
    }

    /// Strict coordination order among black-start units: larger rating
    /// first, ties broken towards the smaller bus id.
    pub fn bs_outranks(&self, a: BusId, b: BusId) -> bool {
        let (ra, rb) = (self.buses[a].rated_kw(), self.buses[b].rated_kw());
        ra > rb || (ra == rb && a < b)
    }

    pub fn total_nominal_load_kw(&self) -> f64 {
        self.buses.iter().map(Bus::nominal_load_kw).sum()
    }

    /// Undirected adjacency: per bus, the incident `(edge, neighbour)` pairs in edge order.
    pub fn adjacency(&self) -> Vec<Vec<(EdgeId, BusId)>> {
        let mut adj = vec![Vec::new(); self.buses.len()];
        for e in &self.edges {
            adj[e.from].push((e.id, e.to));
            adj[e.to].push((e.id, e.from));
        }
        adj
    }

    pub fn validate(&self) -> Result<(), FeederError> {
        if !(self.base_kva > 0.0 && self.base_kv > 0.0) {
            return Err(FeederError::invalid("header", "base_kva and base_kv must be positive"));
        }
        if !(self.v0 > 0.0) || !(self.lambda >= 0.0) {
            return Err(FeederError::invalid("header", "need v0 > 0 and lambda >= 0"));
        }
        if self.tap_count == 0 || self.tap_count % 2 == 0 || !(self.tap_step > 0.0) {
            return Err(FeederError::invalid(
                "header",
                "tap_count must be odd and tap_step positive",
            ));
        }
        if self.buses.is_empty() {
            return Err(FeederError::invalid("feeder", "no buses"));
        }
        let roots = self.buses.iter().filter(|b| b.kind == BusKind::Root).count();
        if roots > 1 {
            return Err(FeederError::invalid(
                "feeder",
                format!("{roots} root buses; substations must be merged into bus 0"),
            ));
        }
        for (i, b) in self.buses.iter().enumerate() {
            let ent = format!("bus {}", b.id);
            if b.id != i {
                return Err(FeederError::invalid(
                    ent,
                    format!("ids must be contiguous from 0, expected {i}"),
                ));
            }
            let all = [b.p_min, b.p_max, b.q_min, b.q_max, b.v_min, b.v_max];
            if all.iter().any(|x| !x.is_finite()) {
                return Err(FeederError::invalid(ent, "bounds must be finite"));
            }
            if b.p_min > b.p_max || b.q_min > b.q_max {
                return Err(FeederError::invalid(ent, "injection bounds out of order"));
            }
            if !(b.v_min > 0.0 && b.v_min <= b.v_max) {
                return Err(FeederError::invalid(ent, "need 0 < v_min <= v_max"));
            }
            if (b.kind == BusKind::Root) != (b.id == ROOT) {
                return Err(FeederError::invalid(
                    ent,
                    "the root must be bus 0 and bus 0 must be the root",
                ));
            }
            match b.kind {
                BusKind::Root => {
                    if (b.v_min - self.v0).abs() > 1e-12 || (b.v_max - self.v0).abs() > 1e-12 {
                        return Err(FeederError::invalid(ent, "root voltage bounds must equal v0"));
                    }
                }
                BusKind::LoadFixed | BusKind::LoadElastic => {
                    if b.p_max > 0.0 {
                        return Err(FeederError::invalid(ent, "loads need p_max <= 0"));
                    }
                }
                BusKind::GenBlackStart | BusKind::GenNonBlackStart => {
                    if b.p_min < 0.0 {
                        return Err(FeederError::invalid(ent, "generators need p_min >= 0"));
                    }
                    if b.rating.is_some_and(|r| !(r > 0.0)) {
                        return Err(FeederError::invalid(ent, "rating must be positive"));
                    }
                }
                BusKind::Junction => {
                    if [b.p_min, b.p_max, b.q_min, b.q_max].iter().any(|&x| x != 0.0) {
                        return Err(FeederError::invalid(ent, "junctions carry no injection"));
                    }
                }
            }
            if b.fix_power_factor && !(b.kind.is_load() && b.p_min < 0.0) {
                return Err(FeederError::invalid(
                    ent,
                    "fix_power_factor needs a load with nonzero nominal",
                ));
            }
        }
        if roots == 0 {
            return Err(FeederError::invalid("feeder", "bus 0 must be the root"));
        }
        let n = self.buses.len();
        for (i, e) in self.edges.iter().enumerate() {
            let ent = format!("edge {}", e.id);
            if e.id != i {
                return Err(FeederError::invalid(
                    ent,
                    format!("ids must be contiguous from 0, expected {i}"),
                ));
            }
            if e.from >= n || e.to >= n {
                return Err(FeederError::invalid(ent, "endpoint does not exist"));
            }
            if e.from == e.to {
                return Err(FeederError::invalid(ent, "from and to coincide"));
            }
            let all = [e.r, e.x, e.p_min, e.p_max, e.q_min, e.q_max];
            if all.iter().any(|x| !x.is_finite()) {
                return Err(FeederError::invalid(ent, "impedance and flow bounds must be finite"));
            }
            if e.p_min > e.p_max || e.q_min > e.q_max {
                return Err(FeederError::invalid(ent, "flow bounds out of order"));
            }
            if e.kind == EdgeKind::Regulator && (e.r != 0.0 || e.x != 0.0) {
                return Err(FeederError::invalid(
                    ent,
                    "regulators are ideal (r = x = 0); model losses as a series line",
                ));
            }
        }
        // Connectivity of the infrastructure graph.
        let adj = self.adjacency();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([ROOT]);
        seen[ROOT] = true;
        while let Some(u) = queue.pop_front() {
            for &(_, w) in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        if let Some(bus) = seen.iter().position(|s| !s) {
            return Err(FeederError::Disconnected { bus });
        }
        // Edges that are always closed must not close a loop.
        let mut uf = UnionFind::new(n);
        let mut fixed = Vec::new();
        for e in &self.edges {
            if matches!(e.kind, EdgeKind::InService | EdgeKind::Regulator) {
                fixed.push(e.id);
                if !uf.union(e.from, e.to) {
                    return Err(FeederError::StructuralCycle { edges: fixed });
                }
            }
        }
        Ok(())
    }
}

/// Disjoint sets over bus ids.
#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    /// Returns false when `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Post-fault state the restoration starts from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageScenario {
    pub failed_edges: BTreeSet<EdgeId>,
    /// Bus energization before restoration.
    pub x0: Vec<u8>,
    /// Edge closure before restoration.
    pub y0: Vec<u8>,
    /// Available output of non-black-start units, kW.
    pub solar_avail: BTreeMap<BusId, f64>,
}

impl OutageScenario {
    /// Edge kind after reclassifying failed edges as out of service.
    pub fn effective_kind(&self, edge: &Edge) -> EdgeKind {
        if self.failed_edges.contains(&edge.id) {
            EdgeKind::OutOfService
        } else {
            edge.kind
        }
    }

    /// Replaces the solar availability map after range checks.
    pub fn with_solar(mut self, feeder: &Feeder, avail: BTreeMap<BusId, f64>) -> Result<Self, ScenarioError> {
        for (&bus, &value) in &avail {
            let b = feeder.buses.get(bus).ok_or(ScenarioError::NotSolar(bus))?;
            if b.kind != BusKind::GenNonBlackStart {
                return Err(ScenarioError::NotSolar(bus));
            }
            let rated = b.p_max;
            if !(0.0..=rated).contains(&value) {
                return Err(ScenarioError::SolarRange { bus, value, rated });
            }
        }
        self.solar_avail = avail;
        Ok(self)
    }

    /// Upper active-power bound of a bus under this scenario, kW.
    pub fn p_max(&self, bus: &Bus) -> f64 {
        if bus.kind == BusKind::GenNonBlackStart {
            self.solar_avail.get(&bus.id).copied().unwrap_or(bus.p_max)
        } else {
            bus.p_max
        }
    }
}

/// Pre-fault switch positions: ties open unless flagged normally closed.
pub fn default_switch_state(feeder: &Feeder) -> BTreeMap<EdgeId, u8> {
    feeder
        .edges_of(EdgeKind::Switch)
        .map(|e| (e.id, u8::from(e.normally_closed)))
        .collect()
}

/// Derives `x0`, `y0` from failed edges and switch positions. Buses count as
/// energized only when connected to the root through closed edges.
pub fn derive_post_outage(
    feeder: &Feeder,
    failed: &BTreeSet<EdgeId>,
    switch_state: &BTreeMap<EdgeId, u8>,
) -> Result<OutageScenario, ScenarioError> {
    for &e in failed {
        let edge = feeder.edges.get(e).ok_or(ScenarioError::UnknownEdge(e))?;
        if edge.kind == EdgeKind::OutOfService {
            return Err(ScenarioError::NotFailable(e));
        }
    }
    for (&e, &s) in switch_state {
        let edge = feeder.edges.get(e).ok_or(ScenarioError::UnknownEdge(e))?;
        if edge.kind != EdgeKind::Switch {
            return Err(ScenarioError::NotSwitch(e));
        }
        if s > 1 {
            return Err(ScenarioError::BadSwitchState { edge: e, value: s });
        }
    }
    let y0: Vec<u8> = feeder
        .edges
        .iter()
        .map(|e| {
            if failed.contains(&e.id) {
                return 0;
            }
            match e.kind {
                EdgeKind::InService | EdgeKind::Regulator => 1,
                EdgeKind::OutOfService => 0,
                EdgeKind::Switch => switch_state.get(&e.id).copied().unwrap_or(u8::from(e.normally_closed)),
            }
        })
        .collect();
    let adj = feeder.adjacency();
    let mut x0 = vec![0u8; feeder.num_buses()];
    x0[ROOT] = 1;
    let mut queue = VecDeque::from([ROOT]);
    while let Some(u) = queue.pop_front() {
        for &(e, w) in &adj[u] {
            if y0[e] == 1 && x0[w] == 0 {
                x0[w] = 1;
                queue.push_back(w);
            }
        }
    }
    Ok(OutageScenario {
        failed_edges: failed.clone(),
        x0,
        y0,
        solar_avail: BTreeMap::new(),
    })
}

/// Scenario file: failed edges, switch positions and solar availability.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    #[serde(default)]
    pub failed_edges: Vec<EdgeId>,
    #[serde(default)]
    pub switch_state: BTreeMap<EdgeId, u8>,
    #[serde(default)]
    pub solar_avail: BTreeMap<BusId, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, FeederError> {
        serde_json::from_str(text).map_err(|e| FeederError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    /// Resolves the file against a feeder; missing switches take their default.
    pub fn derive(&self, feeder: &Feeder) -> Result<OutageScenario, ScenarioError> {
        let mut state = default_switch_state(feeder);
        for (&e, &s) in &self.switch_state {
            state.insert(e, s);
        }
        let failed = self.failed_edges.iter().copied().collect();
        derive_post_outage(feeder, &failed, &self.switch_state)
            .and_then(|_| derive_post_outage(feeder, &failed, &state))?
            .with_solar(feeder, self.solar_avail.clone())
    }
}
