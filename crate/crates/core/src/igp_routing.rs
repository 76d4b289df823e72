//! Shortest paths with even per-hop ECMP splitting.
//!
//! `F(u, w)` is the share of a unit `u -> w` flow on each directed arc when
//! every router divides traffic for `w` equally over all its outgoing
//! shortest-path arcs (parallel arcs count separately). Fractions are
//! computed in exact rational arithmetic and fall back to floating point if
//! the denominators overflow.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, ToPrimitive, Zero};
use thiserror::Error;

use crate::netmodel::{ArcId, ArcLoads, Network, TrafficMatrix, VertexId};

pub type Rational = Ratio<i128>;

/// Shortest-path DAG rooted at `source`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpDag {
    pub source: VertexId,
    /// `None` for unreachable vertices.
    pub dist: Vec<Option<u64>>,
    /// Arc `a` lies on some shortest path from `source`.
    pub member: Vec<bool>,
}

impl SpDag {
    pub fn member_arcs(&self) -> impl Iterator<Item = ArcId> + '_ {
        self.member.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| ArcId(i))
    }
}

fn dijkstra(net: &Network, root: VertexId, reverse: bool) -> Vec<Option<u64>> {
    let mut dist: Vec<Option<u64>> = vec![None; net.num_vertices()];
    let mut heap = BinaryHeap::new();
    dist[root] = Some(0);
    heap.push(Reverse((0u64, root)));
    while let Some(Reverse((d, x))) = heap.pop() {
        if dist[x].is_some_and(|best| d > best) {
            continue;
        }
        let arcs = if reverse { net.in_arcs(x) } else { net.out_arcs(x) };
        for &a in arcs {
            let arc = net.arc(a);
            let y = if reverse { arc.tail } else { arc.head };
            let nd = d + net.arc_weight(a);
            if dist[y].is_none_or(|old| nd < old) {
                dist[y] = Some(nd);
                heap.push(Reverse((nd, y)));
            }
        }
    }
    dist
}

pub fn shortest_path_dag(net: &Network, source: VertexId) -> SpDag {
    let dist = dijkstra(net, source, false);
    let member = net
        .arcs()
        .iter()
        .enumerate()
        .map(|(i, a)| match (dist[a.tail], dist[a.head]) {
            (Some(dt), Some(dh)) => dt + net.arc_weight(ArcId(i)) == dh,
            _ => false,
        })
        .collect();
    SpDag { source, dist, member }
}

/// Distances from every vertex to `target`.
pub fn distances_to(net: &Network, target: VertexId) -> Vec<Option<u64>> {
    dijkstra(net, target, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("rational overflow")]
pub struct Overflow;

/// All-destination distance table plus the ECMP unit-flow computation on top of it.
#[derive(Debug, Clone)]
pub struct EcmpRouter<'a> {
    net: &'a Network,
    dist_to: Vec<Vec<Option<u64>>>,
}

impl<'a> EcmpRouter<'a> {
    pub fn new(net: &'a Network) -> Self {
        let dist_to = (0..net.num_vertices()).map(|w| distances_to(net, w)).collect();
        EcmpRouter { net, dist_to }
    }

    pub fn distance(&self, u: VertexId, w: VertexId) -> Option<u64> {
        self.dist_to[w][u]
    }

    /// Outgoing arcs of `x` on a shortest path toward `w`.
    pub fn next_hops(&self, x: VertexId, w: VertexId) -> impl Iterator<Item = ArcId> + '_ {
        let dist = &self.dist_to[w];
        self.net.out_arcs(x).iter().copied().filter(move |&a| {
            let head = self.net.arc(a).head;
            match (dist[x], dist[head]) {
                (Some(dx), Some(dh)) => dh + self.net.arc_weight(a) == dx,
                _ => false,
            }
        })
    }

    /// Vertices that can reach `w`, farthest first. Every shortest-path hop moves strictly later in this order.
    fn order_toward(&self, w: VertexId) -> Vec<VertexId> {
        let dist = &self.dist_to[w];
        let mut order: Vec<VertexId> = (0..dist.len()).filter(|&x| dist[x].is_some()).collect();
        order.sort_by_key(|&x| (Reverse(dist[x]), x));
        order
    }

    /// Exact unit-flow fractions, `None` if `w` is unreachable from `u`.
    pub fn unit_flow_exact(&self, u: VertexId, w: VertexId) -> Option<Result<Vec<(ArcId, Rational)>, Overflow>> {
        self.dist_to[w][u]?;
        if u == w {
            return Some(Ok(Vec::new()));
        }
        Some(self.propagate(u, w, Rational::from_integer(1), |flow, hops| {
            flow.checked_div(&Rational::from_integer(hops as i128)).ok_or(Overflow)
        }, |acc, x| acc.checked_add(x).ok_or(Overflow)))
    }

    /// Unit-flow fractions as floats, exact when the rational computation fits.
    pub fn unit_flow(&self, u: VertexId, w: VertexId) -> Option<Vec<(ArcId, f64)>> {
        match self.unit_flow_exact(u, w)? {
            Ok(exact) => Some(exact.into_iter().map(|(a, r)| (a, ratio_to_f64(&r))).collect()),
            Err(Overflow) => Some(
                self.propagate(u, w, 1.0f64, |flow, hops| Ok::<_, Overflow>(flow / hops as f64), |acc, x| Ok(acc + x))
                    .expect("float propagation is total"),
            ),
        }
    }

    fn propagate<T: Clone + Zero>(
        &self,
        u: VertexId,
        w: VertexId,
        one: T,
        split: impl Fn(&T, usize) -> Result<T, Overflow>,
        add: impl Fn(&T, &T) -> Result<T, Overflow>,
    ) -> Result<Vec<(ArcId, T)>, Overflow> {
        let n = self.net.num_vertices();
        let mut inflow: Vec<T> = vec![T::zero(); n];
        inflow[u] = one;
        let mut on_arc: BTreeMap<ArcId, T> = BTreeMap::new();
        let start = self.dist_to[w][u];
        for x in self.order_toward(w) {
            if x == w || self.dist_to[w][x] > start || inflow[x].is_zero() {
                continue;
            }
            let hops: Vec<ArcId> = self.next_hops(x, w).collect();
            let share = split(&inflow[x], hops.len())?;
            for a in hops {
                let head = self.net.arc(a).head;
                inflow[head] = add(&inflow[head], &share)?;
                on_arc.insert(a, share.clone());
            }
        }
        Ok(on_arc.into_iter().collect())
    }
}

fn ratio_to_f64(r: &Rational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) => n / d,
        _ => f64::NAN,
    }
}

/// `F(u, ·)` for every destination, indexed by destination; `None` where unreachable.
pub fn ecmp_fractions(net: &Network, u: VertexId) -> Vec<Option<Vec<(ArcId, f64)>>> {
    let router = EcmpRouter::new(net);
    (0..net.num_vertices()).map(|w| router.unit_flow(u, w)).collect()
}

/// Sparse `F(u, w)` for the vertex pairs a model needs, computed once on the full topology.
#[derive(Debug, Clone, Default)]
pub struct FractionTable {
    entries: HashMap<(VertexId, VertexId), Vec<(ArcId, f64)>>,
}

impl FractionTable {
    pub fn for_pairs(net: &Network, pairs: impl IntoIterator<Item = (VertexId, VertexId)>) -> Self {
        let router = EcmpRouter::new(net);
        let mut entries = HashMap::new();
        for (u, w) in pairs {
            if entries.contains_key(&(u, w)) {
                continue;
            }
            if let Some(f) = router.unit_flow(u, w) {
                entries.insert((u, w), f);
            }
        }
        FractionTable { entries }
    }

    pub fn all_pairs(net: &Network) -> Self {
        let n = net.num_vertices();
        Self::for_pairs(net, (0..n).flat_map(|u| (0..n).map(move |w| (u, w))))
    }

    /// Every `(u, w)` and `(w, v)` needed to route the demands of `tm` over one intermediate.
    pub fn for_demands(net: &Network, tm: &TrafficMatrix) -> Self {
        let n = net.num_vertices();
        let mut pairs = Vec::new();
        for (u, v, _) in tm.iter() {
            for w in 0..n {
                pairs.push((u, w));
                pairs.push((w, v));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        Self::for_pairs(net, pairs)
    }

    /// `None` if `w` is unreachable from `u` (or the pair was not requested).
    pub fn get(&self, u: VertexId, w: VertexId) -> Option<&[(ArcId, f64)]> {
        self.entries.get(&(u, w)).map(Vec::as_slice)
    }

    pub fn fraction(&self, u: VertexId, w: VertexId, a: ArcId) -> Option<f64> {
        let f = self.get(u, w)?;
        Some(f.binary_search_by_key(&a, |&(arc, _)| arc).map_or(0.0, |i| f[i].1))
    }
}

/// Load on `a` from demand `(u, v)` routed via `w`: `d_uv * (F(u, w)(a) + F(w, v)(a))`.
pub fn g_coefficient(tm: &TrafficMatrix, table: &FractionTable, u: VertexId, v: VertexId, w: VertexId, a: ArcId) -> Option<f64> {
    let first = table.fraction(u, w, a)?;
    let second = table.fraction(w, v, a)?;
    Some(tm.get(u, v) * (first + second))
}

/// All nonzero `g` coefficients of one (demand, intermediate) choice, merged per arc.
pub fn g_vector(table: &FractionTable, volume: f64, u: VertexId, v: VertexId, w: VertexId) -> Option<Vec<(ArcId, f64)>> {
    let first = table.get(u, w)?;
    let second = table.get(w, v)?;
    let mut merged: BTreeMap<ArcId, f64> = BTreeMap::new();
    for &(a, f) in first.iter().chain(second) {
        *merged.entry(a).or_insert(0.0) += f * volume;
    }
    Some(merged.into_iter().collect())
}

/// Split of each demand over intermediate segments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SrPolicy {
    pub routes: BTreeMap<(VertexId, VertexId), Vec<(VertexId, f64)>>,
}

impl SrPolicy {
    /// Every demand goes straight along its shortest paths.
    pub fn shortest_path(tm: &TrafficMatrix) -> Self {
        SrPolicy { routes: tm.iter().map(|(u, v, _)| ((u, v), vec![(v, 1.0)])).collect() }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoutingError {
    #[error("demand {u} -> {v} via {w}: no shortest path for a segment")]
    Unreachable { u: VertexId, v: VertexId, w: VertexId },
    #[error("demand {u} -> {v} has no policy entry")]
    MissingPolicy { u: VertexId, v: VertexId },
}

pub fn policy_arc_loads(net: &Network, tm: &TrafficMatrix, policy: &SrPolicy, table: &FractionTable) -> Result<ArcLoads, RoutingError> {
    let mut loads = ArcLoads::zeros(net);
    for (u, v, d) in tm.iter() {
        let route = policy.routes.get(&(u, v)).ok_or(RoutingError::MissingPolicy { u, v })?;
        for &(w, x) in route {
            if x == 0.0 {
                continue;
            }
            let g = g_vector(table, d, u, v, w).ok_or(RoutingError::Unreachable { u, v, w })?;
            for (a, load) in g {
                loads.add(a, load * x);
            }
        }
    }
    Ok(loads)
}

/// Loads when every demand follows plain ECMP shortest paths.
pub fn shortest_path_loads(net: &Network, tm: &TrafficMatrix, table: &FractionTable) -> Result<ArcLoads, RoutingError> {
    let mut loads = ArcLoads::zeros(net);
    for (u, v, d) in tm.iter() {
        let f = table.get(u, v).ok_or(RoutingError::Unreachable { u, v, w: v })?;
        for &(a, x) in f {
            loads.add(a, d * x);
        }
    }
    Ok(loads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::PortGroup;

    fn one() -> PortGroup {
        PortGroup::uniform(1, 1.0)
    }

    fn path() -> Network {
        let mut net = Network::with_vertices(3);
        net.add_link(0, 1, one(), 1);
        net.add_link(1, 2, one(), 1);
        net
    }

    fn diamond() -> Network {
        let mut net = Network::with_vertices(4);
        net.add_one_way_link(0, 1, one(), 1);
        net.add_one_way_link(0, 2, one(), 1);
        net.add_one_way_link(1, 3, one(), 1);
        net.add_one_way_link(2, 3, one(), 1);
        net
    }

    #[test]
    fn dag_on_path() {
        let dag = shortest_path_dag(&path(), 0);
        assert_eq!(dag.dist, vec![Some(0), Some(1), Some(2)]);
        let members: Vec<_> = dag.member_arcs().collect();
        assert_eq!(members, vec![ArcId(0), ArcId(2)]);
    }

    #[test]
    fn dag_on_diamond_and_parallel() {
        let dag = shortest_path_dag(&diamond(), 0);
        assert_eq!(dag.member_arcs().count(), 4);

        let mut par = Network::with_vertices(2);
        par.add_link(0, 1, one(), 1);
        par.add_link(0, 1, one(), 2);
        let dag = shortest_path_dag(&par, 0);
        assert_eq!(dag.member_arcs().collect::<Vec<_>>(), vec![ArcId(0)]);
        assert_eq!(dag.dist[1], Some(1));
    }

    #[test]
    fn unreachable_is_infinite() {
        let mut net = Network::with_vertices(3);
        net.add_one_way_link(0, 1, one(), 1);
        let dag = shortest_path_dag(&net, 1);
        assert_eq!(dag.dist, vec![None, Some(0), None]);
        assert!(EcmpRouter::new(&net).unit_flow(1, 0).is_none());
    }

    #[test]
    fn fractions_on_simple_graphs() {
        let net = path();
        let f = ecmp_fractions(&net, 0);
        assert_eq!(f[2].as_deref(), Some(&[(ArcId(0), 1.0), (ArcId(2), 1.0)][..]));
        assert_eq!(f[0].as_deref(), Some(&[][..]));

        let f = ecmp_fractions(&diamond(), 0);
        assert_eq!(f[3].as_ref().unwrap().iter().map(|x| x.1).collect::<Vec<_>>(), vec![0.5; 4]);

        let mut par = Network::with_vertices(2);
        par.add_one_way_link(0, 1, one(), 3);
        par.add_one_way_link(0, 1, one(), 3);
        let f = EcmpRouter::new(&par).unit_flow_exact(0, 1).unwrap().unwrap();
        assert_eq!(f, vec![(ArcId(0), Rational::new(1, 2)), (ArcId(1), Rational::new(1, 2))]);
    }

    #[test]
    fn g_coefficients() {
        let net = path();
        let mut tm = TrafficMatrix::new(3);
        tm.add(0, 2, 10.0).unwrap();
        tm.add(0, 1, 7.0).unwrap();
        let table = FractionTable::all_pairs(&net);
        // Via the middle vertex: first segment covers arc 0, second covers arc 2.
        assert_eq!(g_coefficient(&tm, &table, 0, 2, 1, ArcId(0)), Some(10.0));
        assert_eq!(g_coefficient(&tm, &table, 0, 2, 1, ArcId(2)), Some(10.0));
        // Via the far end and back: both segments use the arc pair 0-1 in opposite directions.
        assert_eq!(g_coefficient(&tm, &table, 0, 1, 2, ArcId(0)), Some(7.0));
        assert_eq!(g_coefficient(&tm, &table, 0, 1, 2, ArcId(3)), Some(7.0));
        // w = u is one-segment routing.
        assert_eq!(g_coefficient(&tm, &table, 0, 1, 0, ArcId(0)), Some(7.0));
    }

    #[test]
    fn overlapping_segments_add() {
        // Both segments 0 -> 3 and 3 -> 4 send half their flow over 1 -> 2.
        let mut net = Network::with_vertices(7);
        let shared = net.add_one_way_link(1, 2, one(), 1);
        net.add_one_way_link(0, 1, one(), 1);
        net.add_one_way_link(2, 3, one(), 1);
        net.add_one_way_link(0, 5, one(), 1);
        net.add_one_way_link(5, 3, one(), 2);
        net.add_one_way_link(3, 1, one(), 1);
        net.add_one_way_link(2, 4, one(), 1);
        net.add_one_way_link(3, 6, one(), 1);
        net.add_one_way_link(6, 4, one(), 2);
        let a = net.arcs_of_link(shared).next().unwrap();
        let table = FractionTable::all_pairs(&net);
        assert_eq!(table.fraction(0, 3, a), Some(0.5));
        assert_eq!(table.fraction(3, 4, a), Some(0.5));
        let mut tm = TrafficMatrix::new(7);
        tm.add(0, 4, 10.0).unwrap();
        assert_eq!(g_coefficient(&tm, &table, 0, 4, 3, a), Some(10.0));
    }

    #[test]
    fn policy_loads() {
        let net = path();
        let table = FractionTable::all_pairs(&net);
        let mut tm = TrafficMatrix::new(3);
        tm.add(0, 2, 8.0).unwrap();
        let loads = policy_arc_loads(&net, &tm, &SrPolicy::shortest_path(&tm), &table).unwrap();
        assert_eq!(loads.0, vec![8.0, 0.0, 8.0, 0.0]);
        assert_eq!(loads, shortest_path_loads(&net, &tm, &table).unwrap());

        let zero = TrafficMatrix::new(3);
        assert_eq!(policy_arc_loads(&net, &zero, &SrPolicy::default(), &table).unwrap(), ArcLoads::zeros(&net));
    }

    #[test]
    fn split_policy_over_disjoint_paths() {
        let mut net = Network::with_vertices(4);
        net.add_link(0, 1, one(), 1);
        net.add_link(1, 2, one(), 1);
        net.add_link(0, 3, one(), 1);
        net.add_link(3, 2, one(), 1);
        let table = FractionTable::all_pairs(&net);
        let mut tm = TrafficMatrix::new(4);
        tm.add(0, 2, 10.0).unwrap();
        let mut policy = SrPolicy::default();
        policy.routes.insert((0, 2), vec![(1, 0.5), (3, 0.5)]);
        let loads = policy_arc_loads(&net, &tm, &policy, &table).unwrap();
        // Arcs: 0 = 0->1, 2 = 1->2, 4 = 0->3, 6 = 3->2.
        assert_eq!(loads.0, vec![5.0, 0.0, 5.0, 0.0, 5.0, 0.0, 5.0, 0.0]);
    }

    #[test]
    fn unreachable_intermediate_is_an_error() {
        let mut net = Network::with_vertices(3);
        net.add_one_way_link(0, 1, one(), 1);
        let table = FractionTable::all_pairs(&net);
        let mut tm = TrafficMatrix::new(3);
        tm.add(0, 1, 1.0).unwrap();
        let mut policy = SrPolicy::default();
        policy.routes.insert((0, 1), vec![(2, 1.0)]);
        assert!(matches!(policy_arc_loads(&net, &tm, &policy, &table), Err(RoutingError::Unreachable { .. })));
    }
}
