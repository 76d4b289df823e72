//! Repetita-style GRAPH / DEMANDS text files and JSON solve reports.
//!
//! ```text
//! NODES 2
//! label x y
//! a 0 0
//! b 1 0
//!
//! EDGES 2
//! label src dest weight bw delay
//! e0 0 1 1 400 10
//! e1 1 0 1 400 10
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::{DemandError, LinecardConfig, LinkKind, Network, PortGroup, TrafficMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn perr(line: usize, message: impl Into<String>) -> ParseError {
    ParseError { line, message: message.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawNode {
    pub label: String,
    pub coords: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawEdge {
    pub label: String,
    pub src: usize,
    pub dest: usize,
    pub weight: u64,
    pub bandwidth: f64,
    pub delay: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawTopology {
    pub nodes: Vec<RawNode>,
    pub edges: Vec<RawEdge>,
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then(|| (i + 1, line.split_whitespace().collect()))
    })
}

fn section_header(line: usize, fields: &[&str], keyword: &str) -> Result<usize, ParseError> {
    match fields {
        [k, n] if k.eq_ignore_ascii_case(keyword) => n
            .parse()
            .map_err(|_| perr(line, format!("bad {keyword} count `{n}`"))),
        _ => Err(perr(line, format!("expected `{keyword} <count>`"))),
    }
}

fn is_column_header(fields: &[&str]) -> bool {
    fields.first().is_some_and(|f| f.eq_ignore_ascii_case("label"))
}

fn num<T: std::str::FromStr>(line: usize, what: &str, s: &str) -> Result<T, ParseError> {
    s.parse().map_err(|_| perr(line, format!("nonnumeric {what} `{s}`")))
}

pub fn parse_repetita_graph(text: &str) -> Result<RawTopology, ParseError> {
    let mut lines = content_lines(text).peekable();
    let (l, f) = lines.next().ok_or_else(|| perr(1, "empty graph file"))?;
    let n_nodes = section_header(l, &f, "NODES")?;
    if lines.peek().is_some_and(|(_, f)| is_column_header(f)) {
        lines.next();
    }
    let mut topo = RawTopology::default();
    for _ in 0..n_nodes {
        let (l, f) = lines.next().ok_or_else(|| perr(0, format!("expected {n_nodes} node rows")))?;
        let coords = match f.len() {
            1 => None,
            2 => return Err(perr(l, "node row needs `<label> <x> <y>`")),
            _ => Some((num(l, "x", f[1])?, num(l, "y", f[2])?)),
        };
        if f.len() > 3 {
            warn!("line {l}: ignoring {} extra node columns", f.len() - 3);
        }
        topo.nodes.push(RawNode { label: f[0].to_string(), coords });
    }
    let (l, f) = lines.next().ok_or_else(|| perr(0, "missing EDGES section"))?;
    let n_edges = section_header(l, &f, "EDGES")?;
    if lines.peek().is_some_and(|(_, f)| is_column_header(f)) {
        lines.next();
    }
    for _ in 0..n_edges {
        let (l, f) = lines.next().ok_or_else(|| perr(0, format!("expected {n_edges} edge rows")))?;
        if f.len() < 6 {
            return Err(perr(l, "edge row needs `<label> <src> <dest> <weight> <bw> <delay>`"));
        }
        if f.len() > 6 {
            warn!("line {l}: ignoring {} extra edge columns", f.len() - 6);
        }
        let src: usize = num(l, "src", f[1])?;
        let dest: usize = num(l, "dest", f[2])?;
        for end in [src, dest] {
            if end >= n_nodes {
                return Err(perr(l, format!("node index {end} out of range 0..{n_nodes}")));
            }
        }
        let weight: u64 = num(l, "weight", f[3])?;
        let bandwidth: f64 = num(l, "bandwidth", f[4])?;
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(perr(l, format!("bandwidth must be positive, got {bandwidth}")));
        }
        topo.edges.push(RawEdge {
            label: f[0].to_string(),
            src,
            dest,
            weight,
            bandwidth,
            delay: num(l, "delay", f[5])?,
        });
    }
    if let Some((l, _)) = lines.next() {
        return Err(perr(l, "unexpected content after EDGES section"));
    }
    Ok(topo)
}

/// Parses a DEMANDS file for a topology with `n_nodes` nodes. Repeated pairs are summed.
pub fn parse_repetita_demands(text: &str, n_nodes: usize) -> Result<TrafficMatrix, ParseError> {
    let mut tm = TrafficMatrix::new(n_nodes);
    let mut lines = content_lines(text).peekable();
    let Some((l, f)) = lines.next() else {
        return Ok(tm);
    };
    let count = section_header(l, &f, "DEMANDS")?;
    if lines.peek().is_some_and(|(_, f)| is_column_header(f)) {
        lines.next();
    }
    let mut seen = 0;
    for (l, f) in lines {
        if f.len() < 4 {
            return Err(perr(l, "demand row needs `<label> <src> <dest> <volume>`"));
        }
        if f.len() > 4 {
            warn!("line {l}: ignoring {} extra demand columns", f.len() - 4);
        }
        let src: usize = num(l, "src", f[1])?;
        let dst: usize = num(l, "dest", f[2])?;
        let vol: f64 = num(l, "volume", f[3])?;
        tm.add(src, dst, vol).map_err(|e| perr(l, e.to_string()))?;
        seen += 1;
    }
    if seen != count {
        warn!("DEMANDS header announces {count} rows, found {seen}");
    }
    Ok(tm)
}

pub fn scale_demands(tm: &TrafficMatrix, factor: f64) -> Result<TrafficMatrix, DemandError> {
    tm.scaled(factor)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpandError {
    #[error("parallel port count must be at least 1")]
    NoPorts,
    #[error("edge `{0}` is a self loop")]
    SelfLoop(String),
    #[error("edge `{0}` has weight 0")]
    ZeroWeight(String),
    #[error("capacity multiplier must be positive, got {0}")]
    BadMultiplier(f64),
}

/// Parallel port counts for individual edges, keyed by edge label.
pub type ParallelOverrides = BTreeMap<String, usize>;

/// Reads `<edge label> <ports>` lines; `#` starts a comment.
pub fn parse_parallel_overrides(text: &str) -> Result<ParallelOverrides, ParseError> {
    let mut out = ParallelOverrides::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split_whitespace();
        let (Some(label), Some(count), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(perr(i + 1, "expected `<edge label> <ports>`"));
        };
        let count: usize = count.parse().map_err(|_| perr(i + 1, format!("bad port count `{count}`")))?;
        if count == 0 {
            return Err(perr(i + 1, "port count must be at least 1"));
        }
        out.insert(label.to_string(), count);
    }
    Ok(out)
}

/// Copy of `raw` with every bandwidth multiplied by `factor`.
pub fn scale_bandwidth(raw: &RawTopology, factor: f64) -> Result<RawTopology, ExpandError> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(ExpandError::BadMultiplier(factor));
    }
    let mut out = raw.clone();
    for e in &mut out.edges {
        e.bandwidth *= factor;
    }
    Ok(out)
}

/// Builds the port-level network: every link gets `parallel` ports splitting its bandwidth.
///
/// An edge and its reverse with equal weight and bandwidth form one duplex link.
/// Edges without such a partner become one-way links. Each router receives
/// enough always-on customer ports to fill its last linecard, so only
/// `floor(backbone ports / k)` of its cards can be switched off.
pub fn expand_to_ports(raw: &RawTopology, parallel: usize, k: LinecardConfig) -> Result<Network, ExpandError> {
    expand_to_ports_with(raw, parallel, &ParallelOverrides::new(), k)
}

/// As [`expand_to_ports`], with per-edge counts from `overrides`; a duplex link takes the override of either direction.
pub fn expand_to_ports_with(raw: &RawTopology, parallel: usize, overrides: &ParallelOverrides, k: LinecardConfig) -> Result<Network, ExpandError> {
    if parallel == 0 {
        return Err(ExpandError::NoPorts);
    }
    let mut net = Network::new(raw.nodes.iter().map(|n| n.label.clone()));
    let mut paired = vec![false; raw.edges.len()];
    let mut one_way = Vec::new();
    for (i, e) in raw.edges.iter().enumerate() {
        if paired[i] {
            continue;
        }
        if e.src == e.dest {
            return Err(ExpandError::SelfLoop(e.label.clone()));
        }
        if e.weight == 0 {
            return Err(ExpandError::ZeroWeight(e.label.clone()));
        }
        paired[i] = true;
        let partner = (i + 1..raw.edges.len()).find(|&j| {
            let r = &raw.edges[j];
            !paired[j] && r.src == e.dest && r.dest == e.src && r.weight == e.weight && r.bandwidth == e.bandwidth
        });
        let count = overrides
            .get(&e.label)
            .or_else(|| partner.and_then(|j| overrides.get(&raw.edges[j].label)))
            .copied()
            .unwrap_or(parallel);
        if count == 0 {
            return Err(ExpandError::NoPorts);
        }
        let ports = PortGroup::uniform(count, e.bandwidth / count as f64);
        match partner {
            Some(j) => {
                paired[j] = true;
                net.add_link(e.src, e.dest, ports, e.weight);
            }
            None => {
                one_way.push(e.label.as_str());
                net.add_one_way_link(e.src, e.dest, ports, e.weight);
            }
        }
    }
    match one_way.as_slice() {
        [] => {}
        [label] => warn!("edge `{label}` has no matching reverse edge; treating it as one-way"),
        [first, ..] => warn!("{} edges (first `{first}`) have no matching reverse edge; treating them as one-way", one_way.len()),
    }
    for v in 0..net.num_vertices() {
        let rem = net.backbone_ports(v) as u64 % k.ports();
        net.set_customer_ports(v, ((k.ports() - rem) % k.ports()) as u32);
    }
    Ok(net)
}

/// Edge records for a network, one per directed arc, with bandwidth equal to the full link capacity.
pub fn topology_of(net: &Network) -> RawTopology {
    let nodes = net.names().iter().map(|n| RawNode { label: n.clone(), coords: None }).collect();
    let edges = net
        .arcs()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let link = net.link(a.link);
            RawEdge {
                label: format!("edge_{i}"),
                src: a.tail,
                dest: a.head,
                weight: link.weight,
                bandwidth: link.ports.total_capacity(),
                delay: 1.0,
            }
        })
        .collect();
    RawTopology { nodes, edges }
}

fn fmt_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

pub fn write_repetita_graph(topo: &RawTopology) -> String {
    let mut out = format!("NODES {}\nlabel x y\n", topo.nodes.len());
    for n in &topo.nodes {
        let (x, y) = n.coords.unwrap_or((0.0, 0.0));
        let _ = writeln!(out, "{} {} {}", n.label, fmt_num(x), fmt_num(y));
    }
    let _ = write!(out, "\nEDGES {}\nlabel src dest weight bw delay\n", topo.edges.len());
    for e in &topo.edges {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {}",
            e.label,
            e.src,
            e.dest,
            e.weight,
            fmt_num(e.bandwidth),
            fmt_num(e.delay)
        );
    }
    out
}

pub fn write_repetita_demands(tm: &TrafficMatrix) -> String {
    let mut out = format!("DEMANDS {}\nlabel src dest bw\n", tm.len());
    for (i, (s, d, v)) in tm.iter().enumerate() {
        let _ = writeln!(out, "demand_{i} {s} {d} {}", fmt_num(v));
    }
    out
}

/// Whether a network only has duplex links; one-way links round-trip as single edge records.
pub fn is_all_duplex(net: &Network) -> bool {
    net.links().iter().all(|l| l.kind == LinkKind::Duplex)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub src: usize,
    pub dest: usize,
    pub active_ports: usize,
    pub total_ports: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEntry {
    pub src: usize,
    pub dst: usize,
    pub via: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReportDocument {
    pub instance: String,
    pub algorithm: String,
    pub status: String,
    pub objective_linecards: u64,
    pub baseline_linecards: u64,
    pub deactivatable_linecards: u64,
    pub inactive_fraction: Option<f64>,
    pub mlu: f64,
    pub theta: f64,
    pub k: u64,
    pub runtime_s: f64,
    pub links: Vec<LinkReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<Vec<PolicyEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_saving_w: Option<f64>,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("invalid report: {0}")]
    Invalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl SolveReportDocument {
    pub fn validate(&self) -> Result<(), ReportError> {
        if let Some(f) = self.inactive_fraction {
            if !(0.0..=1.0).contains(&f) {
                return Err(ReportError::Invalid(format!("inactive_fraction {f} outside [0, 1]")));
            }
        }
        if self.links.iter().any(|l| l.active_ports > l.total_ports) {
            return Err(ReportError::Invalid("link with more active than total ports".into()));
        }
        Ok(())
    }
}

/// Pretty JSON with keys in sorted order.
pub fn write_report(doc: &SolveReportDocument) -> Result<String, ReportError> {
    doc.validate()?;
    let value = serde_json::to_value(doc)?;
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    Ok(text)
}

pub fn read_report(text: &str) -> Result<SolveReportDocument, ReportError> {
    let doc: SolveReportDocument = serde_json::from_str(text)?;
    doc.validate()?;
    Ok(doc)
}
