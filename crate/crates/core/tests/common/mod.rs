//! Seeded instance generators and a path-enumeration ECMP reference shared by the test targets.
#![allow(dead_code)]

use std::collections::BTreeMap;

use lcmin::hardness_gen::SetCoverInstance;
use lcmin::igp_routing::Rational;
use lcmin::lc_problems::{min_mlu, LcParams};
use lcmin::netmodel::{ArcId, Network, PortGroup, TrafficMatrix, VertexId};
use rand::seq::SliceRandom;
use rand::Rng;

/// Universe of `1..=max_items` items, `1..=max_sets` sets, every item covered.
pub fn random_set_cover<R: Rng>(rng: &mut R, max_items: usize, max_sets: usize) -> SetCoverInstance {
    let nu = rng.gen_range(1..=max_items);
    let sigma = rng.gen_range(1..=max_sets);
    let mut sets: Vec<Vec<usize>> = (0..sigma)
        .map(|_| {
            let size = rng.gen_range(1..=nu);
            let mut items: Vec<usize> = (0..nu).collect();
            items.shuffle(rng);
            items.truncate(size);
            items.sort_unstable();
            items
        })
        .collect();
    for x in 0..nu {
        if !sets.iter().any(|s| s.contains(&x)) {
            let s = rng.gen_range(0..sigma);
            sets[s].push(x);
            sets[s].sort_unstable();
        }
    }
    let universe = (0..nu).map(|i| format!("i{i}")).collect();
    SetCoverInstance::new(universe, sets).expect("every item is covered")
}

pub struct TinyInstance {
    pub network: Network,
    pub demands: TrafficMatrix,
    pub params: LcParams,
}

/// Connected duplex network with at most `max_vertices` routers, `max_links` links and `max_ports` ports per link.
///
/// Demands are scaled so the best fractional routing over all ports reaches
/// between 30% and 95% of the threshold, which keeps every instance feasible.
pub fn random_tiny_instance<R: Rng>(rng: &mut R, max_vertices: usize, max_links: usize, max_ports: usize) -> TinyInstance {
    let n = rng.gen_range(2..=max_vertices);
    let mut net = Network::with_vertices(n);
    let caps = [10.0, 25.0, 40.0];
    let group = |rng: &mut R| {
        let ports = rng.gen_range(1..=max_ports);
        if ports > 1 && rng.gen_bool(0.2) {
            PortGroup::new((0..ports).map(|_| caps[rng.gen_range(0..caps.len())]).collect())
        } else {
            PortGroup::uniform(ports, caps[rng.gen_range(0..caps.len())])
        }
    };
    for v in 1..n {
        let u = rng.gen_range(0..v);
        let g = group(rng);
        net.add_link(u, v, g, rng.gen_range(1..=3));
    }
    let extra = rng.gen_range(0..=max_links.saturating_sub(n - 1));
    for _ in 0..extra {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v {
            let g = group(rng);
            net.add_link(u, v, g, rng.gen_range(1..=3));
        }
    }

    let theta = [0.5, 0.7, 0.7, 1.0][rng.gen_range(0..4)];
    let k = rng.gen_range(1..=4);
    let mut tm = TrafficMatrix::new(n);
    for _ in 0..rng.gen_range(1..=4) {
        let s = rng.gen_range(0..n);
        let d = rng.gen_range(0..n);
        if s != d {
            tm.add(s, d, rng.gen_range(1..=10) as f64).unwrap();
        }
    }
    if !tm.is_empty() {
        let full: Vec<f64> = net.links().iter().map(|l| l.ports.total_capacity()).collect();
        let m = min_mlu(&net, &tm, &full).unwrap().expect("connected network");
        let target = theta * rng.gen_range(0.3..0.95);
        tm = tm.scaled(target / m).unwrap();
    }
    TinyInstance { network: net, demands: tm, params: LcParams::new(theta, k).unwrap() }
}

/// Random weighted graph on up to `max_vertices` routers mixing duplex and one-way links, parallel links allowed.
pub fn random_weighted_graph<R: Rng>(rng: &mut R, max_vertices: usize) -> Network {
    let n = rng.gen_range(2..=max_vertices);
    let mut net = Network::with_vertices(n);
    let links = rng.gen_range(n - 1..=2 * n + 2);
    for _ in 0..links {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u == v {
            continue;
        }
        let w = rng.gen_range(1..=3);
        if rng.gen_bool(0.7) {
            net.add_link(u, v, PortGroup::uniform(1, 1.0), w);
        } else {
            net.add_one_way_link(u, v, PortGroup::uniform(1, 1.0), w);
        }
    }
    net
}

fn simple_paths(net: &Network, at: VertexId, target: VertexId, seen: &mut Vec<bool>, path: &mut Vec<ArcId>, out: &mut Vec<Vec<ArcId>>) {
    if at == target {
        out.push(path.clone());
        return;
    }
    for &a in net.out_arcs(at) {
        let head = net.arc(a).head;
        if !seen[head] {
            seen[head] = true;
            path.push(a);
            simple_paths(net, head, target, seen, path, out);
            path.pop();
            seen[head] = false;
        }
    }
}

/// Fraction of a unit `u -> w` flow on each arc under even per-hop splitting, by enumerating every shortest path.
///
/// A path's share is the product over its routers of one over the number of
/// distinct next arcs that router uses on any shortest path. `None` when `w`
/// is unreachable.
pub fn ecmp_by_paths(net: &Network, u: VertexId, w: VertexId) -> Option<BTreeMap<ArcId, Rational>> {
    if u == w {
        return Some(BTreeMap::new());
    }
    let mut paths = Vec::new();
    let mut seen = vec![false; net.num_vertices()];
    seen[u] = true;
    simple_paths(net, u, w, &mut seen, &mut Vec::new(), &mut paths);
    let length = |p: &Vec<ArcId>| p.iter().map(|&a| net.arc_weight(a)).sum::<u64>();
    let best = paths.iter().map(length).min()?;
    paths.retain(|p| length(p) == best);
    let mut next: BTreeMap<VertexId, Vec<ArcId>> = BTreeMap::new();
    for p in &paths {
        for &a in p {
            let e = next.entry(net.arc(a).tail).or_default();
            if !e.contains(&a) {
                e.push(a);
            }
        }
    }
    let mut frac: BTreeMap<ArcId, Rational> = BTreeMap::new();
    for p in &paths {
        let share = p.iter().fold(Rational::from_integer(1), |acc, &a| acc / Rational::from_integer(next[&net.arc(a).tail].len() as i128));
        for &a in p {
            *frac.entry(a).or_insert_with(|| Rational::from_integer(0)) += share;
        }
    }
    Some(frac)
}
