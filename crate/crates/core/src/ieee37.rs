//! Built-in single-phase equivalent of the modified IEEE 37-node feeder.
//!
//! Assumptions baked into this data set (the published feeder is three-phase
//! and the modified variant is only shown as a drawing):
//!
//! * Spot loads of the standard test case are summed over phases per bus.
//! * Line impedances use the positive-sequence values of the 72x line
//!   configurations on a 4.8 kV / 1000 kVA base; the 1850 ft line in series
//!   with the substation regulator is dropped so the regulator is ideal.
//! * Existing remotely controlled switches sit on 702-713, 703-727 and
//!   734-737 (closed); normally-open ties join 712-722 and 736-740. This gives
//!   two cycles, 21 non-black-start paths and 8 black-start paths.
//! * Solar units at 718, 730 and 738 share their bus with a load, so each is
//!   placed on a satellite bus (`718g`, `730g`, `738g`) tied by a zero-impedance
//!   line; satellites are pendant and do not change any cycle or path count.

use crate::feeder::{Bus, BusKind, Edge, EdgeKind, Feeder};

const BASE_KVA: f64 = 1000.0;
const BASE_KV: f64 = 4.8;
const FLOW_LIMIT_KW: f64 = 2500.0;
const V_MIN: f64 = 0.97 * 0.97;
const V_MAX: f64 = 1.03 * 1.03;
/// Reactive range of black-start units as a fraction of the rating (0.9 pf).
const BS_Q_FRACTION: f64 = 0.484;

/// Bus names in id order; bus 0 is the substation (799).
const BUS_NAMES: [&str; 40] = [
    "799", "701", "702", "703", "704", "705", "706", "707", "708", "709", "710", "711", "712", "713", "714", "718",
    "720", "722", "724", "725", "727", "728", "729", "730", "731", "732", "733", "734", "735", "736", "737", "738",
    "740", "741", "742", "744", "775", "718g", "730g", "738g",
];

/// Summed spot loads (kW, kVAr, elastic).
const LOADS: [(&str, f64, f64, bool); 25] = [
    ("701", 630.0, 315.0, true),
    ("712", 85.0, 40.0, false),
    ("713", 85.0, 40.0, false),
    ("714", 38.0, 18.0, false),
    ("718", 85.0, 40.0, false),
    ("720", 85.0, 40.0, false),
    ("722", 161.0, 80.0, true),
    ("724", 42.0, 21.0, false),
    ("725", 42.0, 21.0, false),
    ("727", 42.0, 21.0, false),
    ("728", 126.0, 63.0, false),
    ("729", 42.0, 21.0, false),
    ("730", 85.0, 40.0, false),
    ("731", 85.0, 40.0, false),
    ("732", 42.0, 21.0, false),
    ("733", 85.0, 40.0, false),
    ("734", 42.0, 21.0, false),
    ("735", 85.0, 40.0, false),
    ("736", 42.0, 21.0, false),
    ("737", 140.0, 70.0, true),
    ("738", 126.0, 62.0, true),
    ("740", 85.0, 40.0, false),
    ("741", 42.0, 21.0, false),
    ("742", 93.0, 44.0, false),
    ("744", 42.0, 21.0, false),
];

const BLACK_START: [(&str, f64); 2] = [("705", 459.3), ("710", 918.5)];

/// Solar satellite bus and the load bus it is attached to.
const SOLAR: [(&str, &str); 3] = [("718g", "718"), ("730g", "730"), ("738g", "738")];

#[derive(Clone, Copy)]
enum Link {
    Line(u16),
    Switch(u16, bool),
    Transformer,
    Regulator,
}

/// (from, to, length in ft, kind).
const EDGES: [(&str, &str, f64, Link); 38] = [
    ("799", "701", 0.0, Link::Regulator),
    ("701", "702", 960.0, Link::Line(722)),
    ("702", "705", 400.0, Link::Line(724)),
    ("702", "713", 360.0, Link::Switch(723, true)),
    ("702", "703", 1320.0, Link::Line(722)),
    ("703", "727", 240.0, Link::Switch(724, true)),
    ("703", "730", 600.0, Link::Line(723)),
    ("704", "714", 80.0, Link::Line(724)),
    ("704", "720", 800.0, Link::Line(723)),
    ("705", "742", 320.0, Link::Line(724)),
    ("705", "712", 240.0, Link::Line(724)),
    ("706", "725", 280.0, Link::Line(724)),
    ("707", "724", 760.0, Link::Line(724)),
    ("707", "722", 120.0, Link::Line(724)),
    ("708", "733", 320.0, Link::Line(723)),
    ("708", "732", 320.0, Link::Line(724)),
    ("709", "731", 600.0, Link::Line(723)),
    ("709", "708", 320.0, Link::Line(723)),
    ("710", "735", 200.0, Link::Line(724)),
    ("710", "736", 1280.0, Link::Line(724)),
    ("711", "741", 400.0, Link::Line(723)),
    ("711", "740", 200.0, Link::Line(724)),
    ("713", "704", 520.0, Link::Line(723)),
    ("714", "718", 520.0, Link::Line(724)),
    ("720", "707", 920.0, Link::Line(724)),
    ("720", "706", 600.0, Link::Line(723)),
    ("727", "744", 280.0, Link::Line(723)),
    ("730", "709", 200.0, Link::Line(723)),
    ("733", "734", 560.0, Link::Line(723)),
    ("734", "737", 640.0, Link::Switch(723, true)),
    ("734", "710", 520.0, Link::Line(724)),
    ("737", "738", 400.0, Link::Line(723)),
    ("738", "711", 400.0, Link::Line(723)),
    ("744", "728", 200.0, Link::Line(724)),
    ("744", "729", 280.0, Link::Line(724)),
    ("775", "709", 0.0, Link::Transformer),
    ("712", "722", 1000.0, Link::Switch(724, false)),
    ("736", "740", 1000.0, Link::Switch(724, false)),
];

/// Positive-sequence impedance in ohm per mile.
fn config_impedance(config: u16) -> (f64, f64) {
    match config {
        721 => (0.2365, 0.2357),
        722 => (0.3124, 0.3299),
        723 => (0.8066, 0.4602),
        724 => (1.5748, 0.5020),
        other => unreachable!("unknown line configuration {other}"),
    }
}

fn bus_id(name: &str) -> usize {
    BUS_NAMES
        .iter()
        .position(|n| *n == name)
        .unwrap_or_else(|| unreachable!("unknown bus {name}"))
}

pub fn builtin_ieee37() -> Feeder {
    let z_base = BASE_KV * BASE_KV * 1000.0 / BASE_KVA;
    let mut buses: Vec<Bus> = BUS_NAMES
        .iter()
        .enumerate()
        .map(|(id, name)| Bus {
            id,
            name: name.to_string(),
            kind: BusKind::Junction,
            p_min: 0.0,
            p_max: 0.0,
            q_min: 0.0,
            q_max: 0.0,
            v_min: V_MIN,
            v_max: V_MAX,
            rating: None,
            fix_power_factor: false,
        })
        .collect();
    let root = &mut buses[0];
    root.kind = BusKind::Root;
    root.v_min = 1.0;
    root.v_max = 1.0;
    root.p_min = -FLOW_LIMIT_KW;
    root.p_max = FLOW_LIMIT_KW;
    root.q_min = -FLOW_LIMIT_KW;
    root.q_max = FLOW_LIMIT_KW;
    for &(name, p, q, elastic) in &LOADS {
        let b = &mut buses[bus_id(name)];
        b.p_min = -p;
        b.q_min = -q;
        if elastic {
            b.kind = BusKind::LoadElastic;
            b.p_max = -p / 2.0;
            b.q_max = -q / 2.0;
        } else {
            b.kind = BusKind::LoadFixed;
            b.p_max = -p;
            b.q_max = -q;
        }
    }
    for &(name, rating) in &BLACK_START {
        let b = &mut buses[bus_id(name)];
        b.kind = BusKind::GenBlackStart;
        b.p_max = rating;
        b.q_min = -BS_Q_FRACTION * rating;
        b.q_max = BS_Q_FRACTION * rating;
        b.rating = Some(rating);
    }
    let mut solar_limits = Vec::new();
    for &(sat, host) in &SOLAR {
        let rating = -buses[bus_id(host)].p_min / 2.0;
        let b = &mut buses[bus_id(sat)];
        b.kind = BusKind::GenNonBlackStart;
        b.p_max = rating;
        b.rating = Some(rating);
        solar_limits.push(rating);
    }

    let flow = |id: usize, name: String, from: usize, to: usize, kind, r: f64, x: f64, limit: f64, closed| Edge {
        id,
        name,
        from,
        to,
        kind,
        r,
        x,
        p_min: -limit,
        p_max: limit,
        q_min: -limit,
        q_max: limit,
        normally_closed: closed,
    };
    let mut edges = Vec::new();
    for &(from, to, feet, link) in &EDGES {
        let id = edges.len();
        let name = format!("{from}-{to}");
        let (f, t) = (bus_id(from), bus_id(to));
        let line = |config| {
            let (r, x) = config_impedance(config);
            let miles = feet / 5280.0;
            (r * miles / z_base, x * miles / z_base)
        };
        let edge = match link {
            Link::Line(c) => {
                let (r, x) = line(c);
                flow(id, name, f, t, EdgeKind::InService, r, x, FLOW_LIMIT_KW, true)
            }
            Link::Switch(c, closed) => {
                let (r, x) = line(c);
                flow(id, name, f, t, EdgeKind::Switch, r, x, FLOW_LIMIT_KW, closed)
            }
            // 500 kVA, 0.09 + j1.81 % on its own rating.
            Link::Transformer => flow(
                id,
                name,
                f,
                t,
                EdgeKind::InService,
                0.0009 * BASE_KVA / 500.0,
                0.0181 * BASE_KVA / 500.0,
                FLOW_LIMIT_KW,
                true,
            ),
            Link::Regulator => flow(id, name, f, t, EdgeKind::Regulator, 0.0, 0.0, FLOW_LIMIT_KW, true),
        };
        edges.push(edge);
    }
    for (&(sat, host), &limit) in SOLAR.iter().zip(&solar_limits) {
        let id = edges.len();
        edges.push(flow(
            id,
            format!("{host}-{sat}"),
            bus_id(host),
            bus_id(sat),
            EdgeKind::InService,
            0.0,
            0.0,
            limit,
            true,
        ));
    }

    let feeder = Feeder {
        base_kva: BASE_KVA,
        base_kv: BASE_KV,
        v0: 1.0,
        lambda: 1e-3,
        tap_count: 33,
        tap_step: 0.00625,
        buses,
        edges,
    };
    debug_assert!(feeder.validate().is_ok());
    feeder
}

/// Lines cut in the three-outage illustration: 713-704, 720-706, 709-708.
pub const THREE_LINE_OUTAGE: [&str; 3] = ["713-704", "720-706", "709-708"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition() {
        let f = builtin_ieee37();
        f.validate().unwrap();
        assert_eq!(f.edges_of(EdgeKind::Switch).count(), 5);
        assert_eq!(f.edges_of(EdgeKind::Regulator).count(), 1);
        assert_eq!(f.black_start().len(), 2);
        assert_eq!(f.non_black_start().len(), 3);
        let b705 = f.bus_by_name("705").unwrap().id;
        let b710 = f.bus_by_name("710").unwrap().id;
        assert!(f.bs_outranks(b710, b705));
        assert_eq!(f.buses_of(BusKind::LoadElastic).count(), 4);
        assert!((f.total_nominal_load_kw() - 2457.0).abs() < 1e-9);
    }

    #[test]
    fn solar_is_half_the_host_load() {
        let f = builtin_ieee37();
        for (sat, host) in SOLAR {
            let s = f.bus_by_name(sat).unwrap();
            let h = f.bus_by_name(host).unwrap();
            assert_eq!(s.p_max, h.nominal_load_kw() / 2.0);
            assert_eq!((s.q_min, s.q_max), (0.0, 0.0));
        }
    }

    #[test]
    fn outage_labels_resolve() {
        let f = builtin_ieee37();
        for label in THREE_LINE_OUTAGE {
            let e = f.resolve_edge(label).unwrap();
            assert_eq!(f.edges[e].kind, EdgeKind::InService);
        }
    }
}
