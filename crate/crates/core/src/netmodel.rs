//! Routers, port groups, linecards and traffic.
//!
//! A link between two routers is one [`ArcPair`]: its ports carry traffic in
//! both directions, so switching a port off removes capacity from both
//! directed arcs at once. One-way links exist only to express the directed
//! graphs produced by the set-cover reduction.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub type VertexId = usize;
pub type LinkId = usize;

/// Index into [`Network::arcs`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArcId(pub usize);

impl fmt::Display for ArcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "arc#{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("link {link}: mask has {got} entries, port group has {expected}")]
    MaskLength { link: LinkId, expected: usize, got: usize },
    #[error("expected masks for {expected} links, got {got}")]
    MaskCount { expected: usize, got: usize },
    #[error("{arc} carries load {load} with no active capacity")]
    LoadedDeadArc { arc: ArcId, load: f64 },
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("load vector has {got} entries, network has {expected} arcs")]
    LoadLength { expected: usize, got: usize },
}

/// Per-port capacities of one link.
#[derive(Debug, Clone, PartialEq)]
pub struct PortGroup {
    capacities: Vec<f64>,
}

impl PortGroup {
    pub fn new(capacities: Vec<f64>) -> Self {
        PortGroup { capacities }
    }

    pub fn uniform(ports: usize, capacity: f64) -> Self {
        PortGroup { capacities: vec![capacity; ports] }
    }

    pub fn len(&self) -> usize {
        self.capacities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.capacities.is_empty()
    }

    pub fn capacities(&self) -> &[f64] {
        &self.capacities
    }

    pub fn total_capacity(&self) -> f64 {
        self.capacities.iter().sum()
    }

    /// The common port capacity, if every port has the same one.
    pub fn uniform_capacity(&self) -> Option<f64> {
        let first = *self.capacities.first()?;
        self.capacities.iter().all(|&c| c == first).then_some(first)
    }

    /// Capacity of the ports set in `mask`.
    pub fn active_capacity(&self, mask: &[bool]) -> Option<f64> {
        (mask.len() == self.capacities.len())
            .then(|| self.capacities.iter().zip(mask).filter(|(_, &on)| on).map(|(c, _)| c).sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    Duplex,
    /// Only the `u -> v` arc exists. Ports are still counted at both ends.
    OneWay,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArcPair {
    pub u: VertexId,
    pub v: VertexId,
    pub ports: PortGroup,
    pub weight: u64,
    pub kind: LinkKind,
}

impl ArcPair {
    pub fn other_end(&self, x: VertexId) -> VertexId {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// One direction of a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arc {
    pub link: LinkId,
    pub tail: VertexId,
    pub head: VertexId,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DanglingEndpoint { link: LinkId, vertex: VertexId },
    SelfLoop { link: LinkId },
    NonPositiveWeight { link: LinkId },
    NoPorts { link: LinkId },
    NonPositiveCapacity { link: LinkId, port: usize },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Network {
    names: Vec<String>,
    links: Vec<ArcPair>,
    customer_ports: Vec<u32>,
    arcs: Vec<Arc>,
    link_arcs: Vec<[Option<ArcId>; 2]>,
    out_arcs: Vec<Vec<ArcId>>,
    in_arcs: Vec<Vec<ArcId>>,
    incident: Vec<Vec<LinkId>>,
}

impl Network {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let n = names.len();
        Network {
            names,
            customer_ports: vec![0; n],
            out_arcs: vec![Vec::new(); n],
            in_arcs: vec![Vec::new(); n],
            incident: vec![Vec::new(); n],
            ..Default::default()
        }
    }

    /// Vertices named `0..n`.
    pub fn with_vertices(n: usize) -> Self {
        Network::new((0..n).map(|i| i.to_string()))
    }

    pub fn add_link(&mut self, u: VertexId, v: VertexId, ports: PortGroup, weight: u64) -> LinkId {
        self.push_link(ArcPair { u, v, ports, weight, kind: LinkKind::Duplex })
    }

    pub fn add_one_way_link(&mut self, u: VertexId, v: VertexId, ports: PortGroup, weight: u64) -> LinkId {
        self.push_link(ArcPair { u, v, ports, weight, kind: LinkKind::OneWay })
    }

    fn push_link(&mut self, pair: ArcPair) -> LinkId {
        let id = self.links.len();
        let n = self.names.len();
        let mut ids = [None, None];
        if pair.u < n && pair.v < n {
            let dirs: &[(VertexId, VertexId)] = match pair.kind {
                LinkKind::Duplex => &[(pair.u, pair.v), (pair.v, pair.u)],
                LinkKind::OneWay => &[(pair.u, pair.v)],
            };
            for (slot, &(tail, head)) in dirs.iter().enumerate() {
                let a = ArcId(self.arcs.len());
                self.arcs.push(Arc { link: id, tail, head });
                self.out_arcs[tail].push(a);
                self.in_arcs[head].push(a);
                ids[slot] = Some(a);
            }
            self.incident[pair.u].push(id);
            if pair.v != pair.u {
                self.incident[pair.v].push(id);
            }
        }
        self.link_arcs.push(ids);
        self.links.push(pair);
        id
    }

    pub fn set_customer_ports(&mut self, v: VertexId, ports: u32) {
        self.customer_ports[v] = ports;
    }

    pub fn num_vertices(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, v: VertexId) -> &str {
        &self.names[v]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn links(&self) -> &[ArcPair] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &ArcPair {
        &self.links[id]
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc(&self, a: ArcId) -> &Arc {
        &self.arcs[a.0]
    }

    /// Forward and (for duplex links) backward arc of a link.
    pub fn arcs_of_link(&self, link: LinkId) -> impl Iterator<Item = ArcId> + '_ {
        self.link_arcs[link].iter().flatten().copied()
    }

    pub fn out_arcs(&self, v: VertexId) -> &[ArcId] {
        &self.out_arcs[v]
    }

    pub fn in_arcs(&self, v: VertexId) -> &[ArcId] {
        &self.in_arcs[v]
    }

    pub fn incident_links(&self, v: VertexId) -> &[LinkId] {
        &self.incident[v]
    }

    pub fn customer_ports(&self, v: VertexId) -> u32 {
        self.customer_ports[v]
    }

    pub fn arc_weight(&self, a: ArcId) -> u64 {
        self.links[self.arcs[a.0].link].weight
    }

    /// Backbone ports terminating at `v`.
    pub fn backbone_ports(&self, v: VertexId) -> usize {
        self.incident[v].iter().map(|&l| self.links[l].ports.len()).sum()
    }

    /// Linecards at `v` that carry only backbone ports and can be switched off.
    pub fn deactivatable_linecards(&self, v: VertexId, k: LinecardConfig) -> u64 {
        self.backbone_ports(v) as u64 / k.ports()
    }

    /// Linecards at `v` with every port on.
    pub fn baseline_linecards(&self, v: VertexId, k: LinecardConfig) -> u64 {
        (self.backbone_ports(v) as u64 + u64::from(self.customer_ports[v])).div_ceil(k.ports())
    }
}

/// Ports per linecard.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinecardConfig(u64);

impl LinecardConfig {
    pub fn new(k: u64) -> Option<Self> {
        (k >= 1).then_some(LinecardConfig(k))
    }

    pub fn ports(self) -> u64 {
        self.0
    }

    /// Cards needed for `ports` ports when ports may go on any card.
    pub fn cards_for(self, ports: u64) -> u64 {
        ports.div_ceil(self.0)
    }
}

impl Default for LinecardConfig {
    fn default() -> Self {
        LinecardConfig(8)
    }
}

/// Which ports are switched on, per link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortMasks(pub Vec<Vec<bool>>);

impl PortMasks {
    pub fn all_on(net: &Network) -> Self {
        PortMasks(net.links().iter().map(|l| vec![true; l.ports.len()]).collect())
    }

    pub fn all_off(net: &Network) -> Self {
        PortMasks(net.links().iter().map(|l| vec![false; l.ports.len()]).collect())
    }

    /// Turns on the first `counts[l]` ports of every link `l`.
    pub fn from_counts(net: &Network, counts: &[usize]) -> Self {
        PortMasks(
            net.links()
                .iter()
                .zip(counts)
                .map(|(l, &c)| (0..l.ports.len()).map(|p| p < c).collect())
                .collect(),
        )
    }

    pub fn active_count(&self, link: LinkId) -> usize {
        self.0[link].iter().filter(|&&on| on).count()
    }

    pub fn counts(&self) -> Vec<usize> {
        (0..self.0.len()).map(|l| self.active_count(l)).collect()
    }

    fn check(&self, net: &Network) -> Result<(), NetError> {
        if self.0.len() != net.links().len() {
            return Err(NetError::MaskCount { expected: net.links().len(), got: self.0.len() });
        }
        for (l, (mask, link)) in self.0.iter().zip(net.links()).enumerate() {
            if mask.len() != link.ports.len() {
                return Err(NetError::MaskLength { link: l, expected: link.ports.len(), got: mask.len() });
            }
        }
        Ok(())
    }
}

/// Routed volume per directed arc, indexed by [`ArcId`].
#[derive(Debug, Clone, PartialEq)]
pub struct ArcLoads(pub Vec<f64>);

impl ArcLoads {
    pub fn zeros(net: &Network) -> Self {
        ArcLoads(vec![0.0; net.arcs().len()])
    }

    pub fn get(&self, a: ArcId) -> f64 {
        self.0[a.0]
    }

    pub fn add(&mut self, a: ArcId, volume: f64) {
        self.0[a.0] += volume;
    }
}

/// Demand volumes for ordered router pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrafficMatrix {
    n: usize,
    demands: BTreeMap<(VertexId, VertexId), f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DemandError {
    #[error("demand {0} -> {0} is a self demand")]
    SelfDemand(VertexId),
    #[error("demand {src} -> {dst} references a vertex outside 0..{n}")]
    OutOfRange { src: VertexId, dst: VertexId, n: usize },
    #[error("demand {src} -> {dst} has invalid volume {volume}")]
    BadVolume { src: VertexId, dst: VertexId, volume: f64 },
    #[error("negative scaling factor {0}")]
    NegativeFactor(f64),
}

impl TrafficMatrix {
    pub fn new(n: usize) -> Self {
        TrafficMatrix { n, demands: BTreeMap::new() }
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    /// Adds `volume` to the `src -> dst` demand.
    pub fn add(&mut self, src: VertexId, dst: VertexId, volume: f64) -> Result<(), DemandError> {
        if src >= self.n || dst >= self.n {
            return Err(DemandError::OutOfRange { src, dst, n: self.n });
        }
        if src == dst {
            return Err(DemandError::SelfDemand(src));
        }
        if !volume.is_finite() || volume < 0.0 {
            return Err(DemandError::BadVolume { src, dst, volume });
        }
        if volume > 0.0 {
            *self.demands.entry((src, dst)).or_insert(0.0) += volume;
        }
        Ok(())
    }

    pub fn get(&self, src: VertexId, dst: VertexId) -> f64 {
        self.demands.get(&(src, dst)).copied().unwrap_or(0.0)
    }

    /// Positive demands in `(src, dst)` order.
    pub fn iter(&self) -> impl Iterator<Item = (VertexId, VertexId, f64)> + '_ {
        self.demands.iter().map(|(&(s, d), &v)| (s, d, v))
    }

    pub fn len(&self) -> usize {
        self.demands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demands.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.demands.values().sum()
    }

    pub fn scaled(&self, factor: f64) -> Result<TrafficMatrix, DemandError> {
        if factor < 0.0 || !factor.is_finite() {
            return Err(DemandError::NegativeFactor(factor));
        }
        let mut out = TrafficMatrix::new(self.n);
        for (s, d, v) in self.iter() {
            out.add(s, d, v * factor)?;
        }
        Ok(out)
    }
}

/// Capacity of `link` with the ports in `mask` switched on. Both directions get the same value.
pub fn arc_capacity(net: &Network, link: LinkId, mask: &[bool]) -> Result<f64, NetError> {
    let group = &net.link(link).ports;
    group.active_capacity(mask).ok_or(NetError::MaskLength {
        link,
        expected: group.len(),
        got: mask.len(),
    })
}

/// Active backbone ports at `v`.
pub fn active_ports(net: &Network, v: VertexId, masks: &PortMasks) -> Result<u64, NetError> {
    if v >= net.num_vertices() {
        return Err(NetError::UnknownVertex(v));
    }
    masks.check(net)?;
    Ok(net.incident_links(v).iter().map(|&l| masks.active_count(l) as u64).sum())
}

/// `ceil(active backbone ports / k)`, with ports packed onto as few cards as possible.
pub fn vertex_active_linecards(net: &Network, v: VertexId, masks: &PortMasks, k: LinecardConfig) -> Result<u64, NetError> {
    Ok(k.cards_for(active_ports(net, v, masks)?))
}

pub fn total_active_linecards(net: &Network, masks: &PortMasks, k: LinecardConfig) -> Result<u64, NetError> {
    (0..net.num_vertices()).map(|v| vertex_active_linecards(net, v, masks, k)).sum()
}

/// Maximum over arcs of load / active capacity.
pub fn mlu(net: &Network, loads: &ArcLoads, masks: &PortMasks) -> Result<f64, NetError> {
    masks.check(net)?;
    if loads.0.len() != net.arcs().len() {
        return Err(NetError::LoadLength { expected: net.arcs().len(), got: loads.0.len() });
    }
    let mut worst: f64 = 0.0;
    for (i, arc) in net.arcs().iter().enumerate() {
        let load = loads.0[i];
        let cap = arc_capacity(net, arc.link, &masks.0[arc.link])?;
        if cap <= 0.0 {
            if load > 0.0 {
                return Err(NetError::LoadedDeadArc { arc: ArcId(i), load });
            }
            continue;
        }
        worst = worst.max(load / cap);
    }
    Ok(worst)
}

pub fn validate_network(net: &Network) -> Vec<Violation> {
    let n = net.num_vertices();
    let mut out = Vec::new();
    for (id, link) in net.links().iter().enumerate() {
        for x in [link.u, link.v] {
            if x >= n {
                out.push(Violation::DanglingEndpoint { link: id, vertex: x });
            }
        }
        if link.u == link.v {
            out.push(Violation::SelfLoop { link: id });
        }
        if link.weight == 0 {
            out.push(Violation::NonPositiveWeight { link: id });
        }
        if link.ports.is_empty() {
            out.push(Violation::NoPorts { link: id });
        }
        for (p, &c) in link.ports.capacities().iter().enumerate() {
            if !(c > 0.0 && c.is_finite()) {
                out.push(Violation::NonPositiveCapacity { link: id, port: p });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Network {
        let mut net = Network::with_vertices(3);
        net.add_link(0, 1, PortGroup::uniform(4, 100.0), 1);
        net.add_link(1, 2, PortGroup::uniform(4, 100.0), 1);
        net.add_link(0, 2, PortGroup::uniform(4, 100.0), 1);
        net
    }

    #[test]
    fn capacity_of_masks() {
        let net = triangle();
        assert_eq!(arc_capacity(&net, 0, &[true; 4]).unwrap(), 400.0);
        assert_eq!(arc_capacity(&net, 0, &[true, false, false, false]).unwrap(), 100.0);
        assert!(matches!(arc_capacity(&net, 0, &[true]), Err(NetError::MaskLength { .. })));

        let mut mixed = Network::with_vertices(2);
        mixed.add_link(0, 1, PortGroup::new(vec![100.0, 40.0, 10.0]), 1);
        assert_eq!(arc_capacity(&mixed, 0, &[true, false, true]).unwrap(), 110.0);
    }

    #[test]
    fn linecards_round_up() {
        let mut net = Network::with_vertices(2);
        net.add_link(0, 1, PortGroup::uniform(15, 1.0), 1);
        let k = LinecardConfig::new(8).unwrap();
        let count = |c: usize| vertex_active_linecards(&net, 0, &PortMasks::from_counts(&net, &[c]), k).unwrap();
        assert_eq!(count(15), 2);
        assert_eq!(count(0), 0);
        assert_eq!(count(9), 2);
        assert_eq!(count(8), 1);
        assert_eq!(net.deactivatable_linecards(0, k), 1);
        assert!(LinecardConfig::new(0).is_none());
    }

    #[test]
    fn mlu_examples() {
        let mut net = Network::with_vertices(2);
        net.add_link(0, 1, PortGroup::uniform(4, 100.0), 1);
        let all = PortMasks::all_on(&net);
        assert_eq!(mlu(&net, &ArcLoads::zeros(&net), &all).unwrap(), 0.0);

        let one = PortMasks::from_counts(&net, &[1]);
        assert!((mlu(&net, &ArcLoads(vec![70.0, 0.0]), &one).unwrap() - 0.7).abs() < 1e-15);

        let mut two = Network::with_vertices(3);
        two.add_one_way_link(0, 1, PortGroup::uniform(4, 100.0), 1);
        two.add_one_way_link(1, 2, PortGroup::uniform(2, 100.0), 1);
        let m = mlu(&two, &ArcLoads(vec![50.0, 120.0]), &PortMasks::all_on(&two)).unwrap();
        assert!((m - 0.6).abs() < 1e-15);

        let off = PortMasks::all_off(&net);
        assert!(matches!(mlu(&net, &ArcLoads(vec![1.0, 0.0]), &off), Err(NetError::LoadedDeadArc { .. })));
        assert_eq!(mlu(&net, &ArcLoads::zeros(&net), &off).unwrap(), 0.0);
    }

    #[test]
    fn validation_findings() {
        assert!(validate_network(&triangle()).is_empty());

        let mut net = Network::with_vertices(2);
        net.add_link(0, 1, PortGroup::uniform(1, 1.0), 0);
        assert_eq!(validate_network(&net), vec![Violation::NonPositiveWeight { link: 0 }]);

        let mut net = Network::with_vertices(2);
        net.add_link(0, 5, PortGroup::uniform(1, 1.0), 1);
        assert_eq!(validate_network(&net), vec![Violation::DanglingEndpoint { link: 0, vertex: 5 }]);
        assert!(net.arcs().is_empty());
    }

    #[test]
    fn parallel_links_are_distinct() {
        let mut net = Network::with_vertices(2);
        let a = net.add_link(0, 1, PortGroup::uniform(1, 1.0), 1);
        let b = net.add_link(0, 1, PortGroup::uniform(1, 1.0), 2);
        assert_ne!(a, b);
        assert_eq!(net.arcs().len(), 4);
        assert_eq!(net.incident_links(0), &[0, 1]);
        assert_eq!(net.backbone_ports(1), 2);
    }

    #[test]
    fn traffic_matrix_rules() {
        let mut tm = TrafficMatrix::new(3);
        tm.add(0, 1, 40.0).unwrap();
        tm.add(0, 1, 60.0).unwrap();
        assert_eq!(tm.get(0, 1), 100.0);
        assert!(tm.add(1, 1, 1.0).is_err());
        assert!(tm.add(0, 3, 1.0).is_err());
        assert!(tm.add(0, 2, -1.0).is_err());
        assert_eq!(tm.scaled(0.5).unwrap().get(0, 1), 50.0);
        assert!(tm.scaled(0.0).unwrap().is_empty());
        assert!(tm.scaled(-1.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn duplex_directions_share_capacity(mask in proptest::collection::vec(any::<bool>(), 1..8)) {
                let mut net = Network::with_vertices(2);
                let caps: Vec<f64> = (0..mask.len()).map(|i| 10.0 * (i + 1) as f64).collect();
                net.add_link(0, 1, PortGroup::new(caps), 1);
                let masks = PortMasks(vec![mask]);
                let loads = ArcLoads(vec![1.0, 1.0]);
                if masks.active_count(0) > 0 {
                    let fwd = ArcLoads(vec![1.0, 0.0]);
                    let bwd = ArcLoads(vec![0.0, 1.0]);
                    prop_assert_eq!(mlu(&net, &fwd, &masks).unwrap(), mlu(&net, &bwd, &masks).unwrap());
                    prop_assert!(mlu(&net, &loads, &masks).is_ok());
                }
            }

            #[test]
            fn linecards_monotone_and_exact_on_multiples(ports in 0u64..200, k in 1u64..16, m in 0u64..10) {
                let k = LinecardConfig::new(k).unwrap();
                prop_assert!(k.cards_for(ports) <= k.cards_for(ports + 1));
                prop_assert_eq!(k.cards_for(m * k.ports()), m);
            }

            #[test]
            fn mlu_scales_with_load(l0 in 0.0f64..500.0, l1 in 0.0f64..500.0, s in 0.0f64..4.0) {
                let mut net = Network::with_vertices(2);
                net.add_link(0, 1, PortGroup::uniform(4, 100.0), 1);
                let masks = PortMasks::all_on(&net);
                let base = mlu(&net, &ArcLoads(vec![l0, l1]), &masks).unwrap();
                let scaled = mlu(&net, &ArcLoads(vec![l0 * s, l1 * s]), &masks).unwrap();
                prop_assert!((scaled - s * base).abs() <= 1e-12 * (1.0 + scaled));
            }
        }
    }
}
