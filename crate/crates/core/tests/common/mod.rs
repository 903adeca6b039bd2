//! Helpers shared by the integration tests: small random feeders and a
//! brute-force optimum over every binary assignment.

#![allow(dead_code)]

use std::collections::BTreeSet;

use dsr_core::{Bus, BusKind, Edge, EdgeKind, Feeder, OutageScenario};
use dsr_milp::{solve_lp, Integrality, LpStatus, MilpModel, VarId};
use rand::Rng;

pub fn bus(id: usize, kind: BusKind) -> Bus {
    Bus {
        id,
        name: String::new(),
        kind,
        p_min: 0.0,
        p_max: 0.0,
        q_min: 0.0,
        q_max: 0.0,
        v_min: 0.9409,
        v_max: 1.0609,
        rating: None,
        fix_power_factor: false,
    }
}

pub fn edge(id: usize, from: usize, to: usize, kind: EdgeKind) -> Edge {
    Edge {
        id,
        name: String::new(),
        from,
        to,
        kind,
        r: 0.01,
        x: 0.01,
        p_min: -500.0,
        p_max: 500.0,
        q_min: -500.0,
        q_max: 500.0,
        normally_closed: false,
    }
}

pub fn feeder(buses: Vec<Bus>, edges: Vec<Edge>) -> Feeder {
    let f = Feeder {
        base_kva: 1000.0,
        base_kv: 4.8,
        v0: 1.0,
        lambda: 1e-3,
        tap_count: 33,
        tap_step: 0.00625,
        buses,
        edges,
    };
    f.validate().expect("valid test feeder");
    f
}

/// Feeder over an arbitrary connected multigraph, every edge a switch.
pub fn switch_graph(n: usize, pairs: &[(usize, usize)]) -> Feeder {
    let mut buses: Vec<Bus> = (0..n).map(|i| bus(i, BusKind::Junction)).collect();
    buses[0].kind = BusKind::Root;
    buses[0].v_min = 1.0;
    buses[0].v_max = 1.0;
    let edges = pairs
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| edge(i, a, b, EdgeKind::Switch))
        .collect();
    feeder(buses, edges)
}

fn set_load(b: &mut Bus, kw: f64, elastic: bool) {
    b.kind = if elastic {
        BusKind::LoadElastic
    } else {
        BusKind::LoadFixed
    };
    b.p_min = -kw;
    b.q_min = -kw / 2.0;
    if elastic {
        b.p_max = -kw / 2.0;
        b.q_max = -kw / 4.0;
    } else {
        b.p_max = -kw;
        b.q_max = -kw / 2.0;
    }
}

fn set_gen(b: &mut Bus, kw: f64, black_start: bool) {
    b.kind = if black_start {
        BusKind::GenBlackStart
    } else {
        BusKind::GenNonBlackStart
    };
    b.p_max = kw;
    b.rating = Some(kw);
    if black_start {
        b.q_min = -0.484 * kw;
        b.q_max = 0.484 * kw;
    }
}

/// Random radial feeder with 3..=6 buses, a few switches and ties, and a
/// mix of loads and generators; kW values are whole numbers.
pub fn random_feeder(rng: &mut impl Rng) -> Feeder {
    let n = rng.gen_range(3..=6);
    let mut buses: Vec<Bus> = (0..n).map(|i| bus(i, BusKind::Junction)).collect();
    let root = &mut buses[0];
    root.kind = BusKind::Root;
    root.v_min = 1.0;
    root.v_max = 1.0;
    let cap = f64::from(rng.gen_range(1..=6) * 50);
    root.p_min = -cap;
    root.p_max = cap;
    root.q_min = -cap;
    root.q_max = cap;
    let (mut bs, mut nbs) = (0, 0);
    for b in buses.iter_mut().skip(1) {
        match rng.gen_range(0..10) {
            0..=4 => set_load(b, f64::from(rng.gen_range(1..=10) * 10), rng.gen_bool(0.3)),
            5 | 6 if bs < 2 => {
                set_gen(b, f64::from(rng.gen_range(2..=15) * 10), true);
                bs += 1;
            }
            7 if nbs < 1 => {
                set_gen(b, f64::from(rng.gen_range(1..=6) * 10), false);
                nbs += 1;
            }
            _ => {}
        }
    }
    let mut edges = Vec::new();
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        let kind = if rng.gen_bool(0.3) {
            EdgeKind::Switch
        } else {
            EdgeKind::InService
        };
        let mut e = edge(edges.len(), parent, i, kind);
        e.normally_closed = true;
        e.r = f64::from(rng.gen_range(1..=20)) * 1e-3;
        e.x = f64::from(rng.gen_range(1..=20)) * 1e-3;
        edges.push(e);
    }
    for _ in 0..rng.gen_range(0..=2) {
        let a = rng.gen_range(0..n);
        let b = (a + rng.gen_range(1..n)) % n;
        let id = edges.len();
        edges.push(edge(id, a, b, EdgeKind::Switch));
    }
    feeder(buses, edges)
}

/// Random outage of one or two non-switch lines.
pub fn random_outage(f: &Feeder, rng: &mut impl Rng) -> OutageScenario {
    let lines: Vec<usize> = f.edges_of(EdgeKind::InService).map(|e| e.id).collect();
    let mut failed = BTreeSet::new();
    if !lines.is_empty() {
        for _ in 0..rng.gen_range(1..=2) {
            failed.insert(lines[rng.gen_range(0..lines.len())]);
        }
    }
    let mut solar = std::collections::BTreeMap::new();
    for i in f.non_black_start() {
        solar.insert(i, f64::from(rng.gen_range(0..=4)) * f.buses[i].p_max / 4.0);
    }
    dsr_core::derive_post_outage(f, &failed, &dsr_core::default_switch_state(f))
        .unwrap()
        .with_solar(f, solar)
        .unwrap()
}

pub fn free_binaries(model: &MilpModel) -> Vec<VarId> {
    model.binaries().filter(|&v| !model.var(v).is_fixed()).collect()
}

/// Minimum over all assignments of the free binaries, one LP each.
pub fn brute_force(model: &MilpModel) -> Option<f64> {
    let free = free_binaries(model);
    assert!(free.len() <= 16, "too many binaries for enumeration");
    let mut relaxed = model.clone();
    for v in &mut relaxed.variables {
        v.integrality = Integrality::Continuous;
    }
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << free.len()) {
        let mut m = relaxed.clone();
        for (i, &b) in free.iter().enumerate() {
            m.fix(b, f64::from((mask >> i) & 1));
        }
        let sol = solve_lp(&m).expect("lp");
        if sol.status == LpStatus::Optimal {
            best = Some(best.map_or(sol.objective, |b: f64| b.min(sol.objective)));
        }
    }
    best
}
