//! Port activation variables, linecard counters and the shared objective.

use lcmin_milp::{Comparator, Model, VarId};

use super::{LcParams, MLU_REL_TOL};
use crate::netmodel::{ArcId, LinecardConfig, LinkId, LinkKind, Network, TrafficMatrix, VertexId};

/// Activation variables of one link. Links in the same series chain share them.
#[derive(Debug, Clone, PartialEq)]
pub enum PortVars {
    /// Number of active ports; all ports of the link have equal capacity.
    Count(VarId),
    /// One binary per port.
    PerPort(Vec<VarId>),
}

impl PortVars {
    pub fn vars(&self) -> Vec<VarId> {
        match self {
            PortVars::Count(v) => vec![*v],
            PortVars::PerPort(vs) => vs.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortVarMap {
    pub links: Vec<PortVars>,
    /// Integer linecard counter per vertex; `None` for vertices without ports.
    pub linecards: Vec<Option<VarId>>,
    /// Representative link of each link's series chain.
    pub chain_of: Vec<LinkId>,
}

/// Which links may be forced to share activation variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SeriesTies {
    /// Duplex and one-way chains.
    All,
    /// Only one-way chains (a duplex chain vertex could be used for a U-turn).
    OneWayOnly,
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

/// Groups links that pass through a transit router of degree two.
///
/// At such a router (no demand of its own, exactly two links with identical
/// port groups leading to different neighbours) both links carry the same
/// load in every routing without U-turns, so some optimal solution gives
/// them the same active ports.
pub(crate) fn series_chains(net: &Network, tm: &TrafficMatrix, ties: SeriesTies) -> Vec<LinkId> {
    let n = net.num_vertices();
    let mut has_demand = vec![false; n];
    for (s, d, _) in tm.iter() {
        has_demand[s] = true;
        has_demand[d] = true;
    }
    let mut parent: Vec<usize> = (0..net.links().len()).collect();
    for (v, &busy) in has_demand.iter().enumerate() {
        let inc = net.incident_links(v);
        if busy || inc.len() != 2 {
            continue;
        }
        let (a, b) = (net.link(inc[0]), net.link(inc[1]));
        if a.other_end(v) == b.other_end(v) || a.ports != b.ports {
            continue;
        }
        let compatible = match (a.kind, b.kind) {
            (LinkKind::Duplex, LinkKind::Duplex) => ties == SeriesTies::All,
            (LinkKind::OneWay, LinkKind::OneWay) => (a.v == v) != (b.v == v),
            _ => false,
        };
        if compatible {
            let (ra, rb) = (find(&mut parent, inc[0]), find(&mut parent, inc[1]));
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    (0..parent.len()).map(|l| find(&mut parent, l)).collect()
}

/// Variables shared by a whole series chain are branched on first.
const CHAIN_PRIORITY: i32 = 1;

/// Fewest ports whose capacity carries `demand / theta` over `arcs`, largest ports first.
fn min_ports(net: &Network, arcs: &[ArcId], demand: f64, theta: f64) -> usize {
    if demand <= 0.0 {
        return 0;
    }
    let mut caps: Vec<f64> = arcs.iter().flat_map(|&a| net.link(net.arc(a).link).ports.capacities().iter().copied()).collect();
    caps.sort_by(|a, b| b.total_cmp(a));
    let need = demand / (theta * (1.0 + MLU_REL_TOL));
    let mut sum = 0.0;
    for (i, c) in caps.iter().enumerate() {
        sum += c;
        if sum >= need {
            return i + 1;
        }
    }
    caps.len()
}

/// Ports every solution must activate at each router to move its own traffic in and out.
pub(crate) fn required_ports(net: &Network, tm: &TrafficMatrix, theta: f64) -> Vec<usize> {
    let n = net.num_vertices();
    let mut out_dem = vec![0.0; n];
    let mut in_dem = vec![0.0; n];
    for (s, d, v) in tm.iter() {
        out_dem[s] += v;
        in_dem[d] += v;
    }
    (0..n)
        .map(|v| min_ports(net, net.out_arcs(v), out_dem[v], theta).max(min_ports(net, net.in_arcs(v), in_dem[v], theta)))
        .collect()
}

/// Adds port variables, linecard counters and the objective `sum_v L_v`.
///
/// Each router's counter starts at the cards its own traffic needs, which
/// lifts the relaxation well above `sum of ports / k`.
pub(crate) fn add_port_model(model: &mut Model, net: &Network, tm: &TrafficMatrix, params: LcParams, ties: SeriesTies) -> PortVarMap {
    let k = params.k;
    let required = required_ports(net, tm, params.theta);
    let chain_of = series_chains(net, tm, ties);
    let mut links: Vec<PortVars> = Vec::with_capacity(net.links().len());
    for (l, link) in net.links().iter().enumerate() {
        let rep = chain_of[l];
        if rep != l {
            let shared = links[rep].clone();
            links.push(shared);
            continue;
        }
        let n = link.ports.len();
        let vars = if link.ports.uniform_capacity().is_some() {
            let var = if n == 1 {
                model.add_binary(format!("y_l{l}"))
            } else {
                model.add_integer(format!("y_l{l}"), 0.0, n as f64)
            };
            PortVars::Count(var)
        } else {
            PortVars::PerPort((0..n).map(|p| model.add_binary(format!("pi_l{l}_p{p}"))).collect())
        };
        if chain_of.iter().filter(|&&r| r == l).count() > 1 {
            for var in vars.vars() {
                model.var_mut(var).priority = CHAIN_PRIORITY;
            }
        }
        links.push(vars);
    }

    let kk = k.ports() as f64;
    let mut linecards = vec![None; net.num_vertices()];
    for (v, slot) in linecards.iter_mut().enumerate() {
        let ports = net.backbone_ports(v) as u64;
        if ports == 0 {
            continue;
        }
        let floor = k.cards_for(required[v] as u64);
        let lv = model.add_integer(format!("L_v{v}"), floor as f64, k.cards_for(ports) as f64);
        *slot = Some(lv);
        let mut terms = vec![(lv, kk)];
        for (var, _) in port_terms(net, &links, v) {
            terms.push((var, -1.0));
        }
        model.add_constraint(format!("cards_v{v}"), terms, Comparator::Ge, 0.0);
        if required[v] > 0 {
            let terms = port_terms(net, &links, v).into_iter().map(|(var, _)| (var, 1.0));
            model.add_constraint(format!("ports_v{v}"), terms, Comparator::Ge, required[v] as f64);
        }
        add_card_strengthening(model, net, &links, v, lv, k);
    }
    model.set_objective(linecards.iter().flatten().map(|&lv| (lv, 1.0)));
    PortVarMap { links, linecards, chain_of }
}

/// `(variable, ports of its link)` for every port-count term at `v`, with repeats for shared variables.
fn port_terms(net: &Network, links: &[PortVars], v: VertexId) -> Vec<(VarId, usize)> {
    let mut out = Vec::new();
    for &l in net.incident_links(v) {
        match &links[l] {
            PortVars::Count(var) => out.push((*var, net.link(l).ports.len())),
            PortVars::PerPort(vars) => out.extend(vars.iter().map(|&x| (x, 1))),
        }
    }
    out
}

/// `L_v >= y / n` for each link group whose ports at `v` fit on fewer than `k` positions.
fn add_card_strengthening(model: &mut Model, net: &Network, links: &[PortVars], v: VertexId, lv: VarId, k: LinecardConfig) {
    let mut mult: Vec<(VarId, usize, usize)> = Vec::new();
    for (var, n) in port_terms(net, links, v) {
        match mult.iter_mut().find(|(x, _, _)| *x == var) {
            Some(entry) => entry.1 += 1,
            None => mult.push((var, 1, n)),
        }
    }
    for (var, m, n) in mult {
        if ((m * n) as u64) < k.ports() {
            model.add_constraint(
                format!("cards_v{v}_{}", var.0),
                [(lv, n as f64), (var, -1.0)],
                Comparator::Ge,
                0.0,
            );
        }
    }
}

/// `theta * capacity(link)` as terms over the link's port variables, capacities divided by `scale`.
pub(crate) fn capacity_terms(net: &Network, ports: &PortVarMap, link: LinkId, theta: f64, scale: f64) -> Vec<(VarId, f64)> {
    let group = &net.link(link).ports;
    match &ports.links[link] {
        PortVars::Count(var) => {
            let c = group.uniform_capacity().expect("count variables need uniform ports");
            vec![(*var, theta * c / scale)]
        }
        PortVars::PerPort(vars) => vars.iter().zip(group.capacities()).map(|(&x, &c)| (x, theta * c / scale)).collect(),
    }
}

/// Largest single-port capacity, used to bring model coefficients near 1.
pub(crate) fn volume_scale(net: &Network) -> f64 {
    let m = net
        .links()
        .iter()
        .flat_map(|l| l.ports.capacities().iter().copied())
        .fold(0.0f64, f64::max);
    if m > 0.0 {
        m
    } else {
        1.0
    }
}
