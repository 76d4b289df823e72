//! LC-MCFS instances built from Set Cover, and covers read back from solutions.
//!
//! Each item becomes a router `v_u` with one unit of traffic towards a sink
//! `z`. Each set `S` becomes a path `v^0_S -> ... -> v^q_S -> z` of
//! capacity `|U|`, reachable from the routers of its items over unit
//! capacity arcs. The path is long enough that the linecards on it dominate
//! every other term, so a minimum solution activates a minimum cover.

use std::collections::BTreeSet;
use std::fmt;

use log::warn;
use thiserror::Error;

use crate::lc_problems::LcParams;
use crate::netmodel::{LinecardConfig, LinkId, Network, PortGroup, PortMasks, TrafficMatrix, VertexId};
use crate::repetita_io::{topology_of, write_repetita_demands, write_repetita_graph};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetCoverInstance {
    pub universe: Vec<String>,
    /// Item indices into `universe`.
    pub sets: Vec<Vec<usize>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReductionError {
    #[error("the family of sets is empty")]
    EmptyFamily,
    #[error("item `{0}` is covered by no set")]
    Uncovered(String),
    #[error("set {set} refers to item index {item} outside the universe")]
    UnknownItem { set: usize, item: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("linecard size must be at least 1")]
    InvalidK,
    #[error("non-chain degree sum {degrees} is not below chain length {q}")]
    ChainTooShort { degrees: usize, q: usize },
}

impl SetCoverInstance {
    pub fn new(universe: Vec<String>, sets: Vec<Vec<usize>>) -> Result<Self, ReductionError> {
        let sc = SetCoverInstance { universe, sets };
        sc.validate()?;
        Ok(sc)
    }

    /// Builds an instance from item labels; the universe is every label in order of first appearance.
    pub fn from_labels<S: AsRef<str>>(sets: &[Vec<S>]) -> Result<Self, ReductionError> {
        let sc = index_labels(Vec::new(), sets);
        sc.validate()?;
        Ok(sc)
    }

    /// Parses one set per line with whitespace-separated items.
    ///
    /// An optional `U:` line lists the universe explicitly, which allows items
    /// no set covers. Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self, ReductionError> {
        let mut universe: Vec<String> = Vec::new();
        let mut declared = false;
        let mut sets: Vec<Vec<&str>> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line.strip_prefix("U:") {
                Some(_) if declared => {
                    return Err(ReductionError::Parse { line: i + 1, message: "universe declared twice".into() })
                }
                Some(rest) => {
                    declared = true;
                    for item in rest.split_whitespace() {
                        if !universe.iter().any(|u| u == item) {
                            universe.push(item.to_string());
                        }
                    }
                }
                None => sets.push(line.split_whitespace().collect()),
            }
        }
        let declared_len = universe.len();
        let sc = index_labels(universe, &sets);
        if declared && sc.universe.len() > declared_len {
            let item = &sc.universe[declared_len];
            return Err(ReductionError::Parse { line: 0, message: format!("item `{item}` is missing from the declared universe") });
        }
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<(), ReductionError> {
        if self.sets.is_empty() {
            return Err(ReductionError::EmptyFamily);
        }
        let mut covered = vec![false; self.universe.len()];
        for (s, set) in self.sets.iter().enumerate() {
            for &x in set {
                if x >= self.universe.len() {
                    return Err(ReductionError::UnknownItem { set: s, item: x });
                }
                covered[x] = true;
            }
        }
        match covered.iter().position(|c| !c) {
            Some(x) => Err(ReductionError::Uncovered(self.universe[x].clone())),
            None => Ok(()),
        }
    }

    pub fn is_cover(&self, chosen: &[usize]) -> bool {
        let mut covered = vec![false; self.universe.len()];
        for &s in chosen {
            for &x in &self.sets[s] {
                covered[x] = true;
            }
        }
        covered.iter().all(|&c| c)
    }
}

fn index_labels<S: AsRef<str>>(mut universe: Vec<String>, sets: &[Vec<S>]) -> SetCoverInstance {
    let mut out = Vec::with_capacity(sets.len());
    for set in sets {
        let mut ids = Vec::new();
        for item in set {
            let item = item.as_ref();
            let id = universe.iter().position(|u| u == item).unwrap_or_else(|| {
                universe.push(item.to_string());
                universe.len() - 1
            });
            if !ids.contains(&id) {
                ids.push(id);
            }
        }
        out.push(ids);
    }
    SetCoverInstance { universe, sets: out }
}

impl fmt::Display for SetCoverInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "U: {}", self.universe.join(" "))?;
        for set in &self.sets {
            let items: Vec<&str> = set.iter().map(|&x| self.universe[x].as_str()).collect();
            writeln!(f, "{}", items.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ReducedInstance {
    pub network: Network,
    pub demands: TrafficMatrix,
    pub k: LinecardConfig,
    /// Always 1: the construction uses raw capacities.
    pub theta: f64,
    pub duplex: bool,
    pub q: usize,
    /// `v_u` per item.
    pub item_vertices: Vec<VertexId>,
    /// `v^0_S .. v^q_S` per set.
    pub chain_vertices: Vec<Vec<VertexId>>,
    /// The `q + 1` links of `P_S` per set, ending at the sink.
    pub chain_links: Vec<Vec<LinkId>>,
    /// Unit-capacity links `v_u -> v^0_S`.
    pub item_links: Vec<LinkId>,
    pub sink: VertexId,
}

impl ReducedInstance {
    pub fn params(&self) -> LcParams {
        LcParams { theta: self.theta, k: self.k }
    }

    /// GRAPH and DEMANDS file contents.
    pub fn to_repetita(&self) -> (String, String) {
        (write_repetita_graph(&topology_of(&self.network)), write_repetita_demands(&self.demands))
    }
}

/// Chain length used by the construction: one more than the degree sum outside the chains.
pub fn chain_length(sc: &SetCoverInstance) -> usize {
    2 * (sc.sets.len() + sc.sets.iter().map(Vec::len).sum::<usize>()) + 1
}

fn build(sc: &SetCoverInstance, k: u64, duplex: bool) -> Result<ReducedInstance, ReductionError> {
    sc.validate()?;
    let k = LinecardConfig::new(k).ok_or(ReductionError::InvalidK)?;
    let q = chain_length(sc);
    let mut names: Vec<String> = sc.universe.iter().map(|u| format!("u_{u}")).collect();
    for s in 0..sc.sets.len() {
        names.extend((0..=q).map(|i| format!("s{s}_{i}")));
    }
    names.push("z".into());
    let mut net = Network::new(names);
    let nu = sc.universe.len();
    let sink = net.num_vertices() - 1;
    let item_vertices: Vec<VertexId> = (0..nu).collect();
    let chain_vertices: Vec<Vec<VertexId>> = (0..sc.sets.len()).map(|s| (0..=q).map(|i| nu + s * (q + 1) + i).collect()).collect();

    let add = |net: &mut Network, u: VertexId, v: VertexId, cap: f64| {
        if duplex {
            net.add_link(u, v, PortGroup::uniform(1, cap), 1)
        } else {
            net.add_one_way_link(u, v, PortGroup::uniform(1, cap), 1)
        }
    };
    let mut item_links = Vec::new();
    for (s, set) in sc.sets.iter().enumerate() {
        for &x in set {
            item_links.push(add(&mut net, item_vertices[x], chain_vertices[s][0], 1.0));
        }
    }
    let mut chain_links = Vec::new();
    for chain in &chain_vertices {
        let mut links: Vec<LinkId> = chain.windows(2).map(|w| add(&mut net, w[0], w[1], nu as f64)).collect();
        links.push(add(&mut net, chain[q], sink, nu as f64));
        chain_links.push(links);
    }

    let degrees: usize = item_vertices
        .iter()
        .chain(chain_vertices.iter().map(|c| &c[0]))
        .chain(std::iter::once(&sink))
        .map(|&v| net.incident_links(v).len())
        .sum();
    if degrees >= q {
        return Err(ReductionError::ChainTooShort { degrees, q });
    }

    let mut demands = TrafficMatrix::new(net.num_vertices());
    let add_demand = |tm: &mut TrafficMatrix, s: VertexId, d: VertexId, v: f64| tm.add(s, d, v).expect("valid demand");
    for &v in &item_vertices {
        add_demand(&mut demands, v, sink, 1.0);
    }
    if duplex {
        for chain in &chain_vertices {
            for &x in chain {
                for &y in &item_vertices {
                    add_demand(&mut demands, x, y, 1.0);
                }
                add_demand(&mut demands, sink, x, nu as f64);
            }
        }
    }
    Ok(ReducedInstance {
        network: net,
        demands,
        k,
        theta: 1.0,
        duplex,
        q,
        item_vertices,
        chain_vertices,
        chain_links,
        item_links,
        sink,
    })
}

/// The directed construction: every link is one-way.
pub fn reduce_set_cover(sc: &SetCoverInstance, k: u64) -> Result<ReducedInstance, ReductionError> {
    build(sc, k, false)
}

/// Every link is duplex, with demands from each chain router to each item router and from the sink to each chain router.
pub fn reduce_set_cover_duplex(sc: &SetCoverInstance, k: u64) -> Result<ReducedInstance, ReductionError> {
    build(sc, k, true)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveredCover {
    /// Sets whose whole path is active.
    pub sets: Vec<usize>,
    /// Sets whose path is active only in part.
    pub partial: Vec<usize>,
}

/// Reads the cover `{S : every link of P_S active}` from an activation state.
pub fn recover_cover(instance: &ReducedInstance, masks: &PortMasks) -> RecoveredCover {
    let mut sets = Vec::new();
    let mut partial = Vec::new();
    for (s, links) in instance.chain_links.iter().enumerate() {
        let active: BTreeSet<bool> = links.iter().map(|&l| masks.active_count(l) > 0).collect();
        match (active.contains(&true), active.contains(&false)) {
            (true, false) => sets.push(s),
            (true, true) => partial.push(s),
            _ => {}
        }
    }
    if !partial.is_empty() {
        warn!("paths of sets {partial:?} are only partly active");
    }
    RecoveredCover { sets, partial }
}
