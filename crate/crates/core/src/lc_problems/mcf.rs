//! Exact model: aggregated multi-commodity flow plus port activation.

use std::collections::BTreeMap;

use lcmin_milp::{Comparator, Model, VarId};

use super::ports::{add_port_model, capacity_terms, volume_scale, PortVarMap, SeriesTies};
use super::{check_cuts, BuildError, LcParams};
use crate::netmodel::{ArcId, Network, TrafficMatrix, VertexId};

/// Which end of its demands a commodity is rooted at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommoditySide {
    /// All demands leaving `root`.
    Source,
    /// All demands entering `root`.
    Destination,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Commodity {
    pub root: VertexId,
    pub side: CommoditySide,
    pub arcs: Vec<(ArcId, VarId)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowVarMap {
    pub commodities: Vec<Commodity>,
}

#[derive(Debug, Clone)]
pub struct McfModel {
    pub model: Model,
    pub ports: PortVarMap,
    pub flows: FlowVarMap,
    /// Volumes in the model are divided by this.
    pub scale: f64,
}

fn reach(net: &Network, starts: impl IntoIterator<Item = VertexId>, backward: bool) -> Vec<bool> {
    let mut seen = vec![false; net.num_vertices()];
    let mut stack: Vec<VertexId> = starts.into_iter().collect();
    for &s in &stack {
        seen[s] = true;
    }
    while let Some(x) = stack.pop() {
        let arcs = if backward { net.in_arcs(x) } else { net.out_arcs(x) };
        for &a in arcs {
            let arc = net.arc(a);
            let y = if backward { arc.tail } else { arc.head };
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    seen
}

/// Demands grouped per source, or per destination when fewer distinct destinations exist.
fn commodities(tm: &TrafficMatrix) -> (CommoditySide, BTreeMap<VertexId, Vec<(VertexId, f64)>>) {
    let mut by_src: BTreeMap<VertexId, Vec<(VertexId, f64)>> = BTreeMap::new();
    let mut by_dst: BTreeMap<VertexId, Vec<(VertexId, f64)>> = BTreeMap::new();
    for (s, d, v) in tm.iter() {
        by_src.entry(s).or_default().push((d, v));
        by_dst.entry(d).or_default().push((s, v));
    }
    if by_dst.len() < by_src.len() {
        (CommoditySide::Destination, by_dst)
    } else {
        (CommoditySide::Source, by_src)
    }
}

pub fn build_mcf_lc(net: &Network, tm: &TrafficMatrix, params: LcParams) -> Result<McfModel, BuildError> {
    params.validate()?;
    super::check_network(net, tm)?;
    check_cuts(net, tm, params.theta)?;
    let scale = volume_scale(net);
    let mut model = Model::new("mcf-lc");
    let ports = add_port_model(&mut model, net, tm, params, SeriesTies::All);

    let (side, groups) = commodities(tm);
    let mut arc_flows: Vec<Vec<VarId>> = vec![Vec::new(); net.arcs().len()];
    let mut flows = FlowVarMap { commodities: Vec::new() };
    for (root, others) in groups {
        let (fwd, bwd) = match side {
            CommoditySide::Source => (reach(net, [root], false), reach(net, others.iter().map(|o| o.0), true)),
            CommoditySide::Destination => (reach(net, others.iter().map(|o| o.0), false), reach(net, [root], true)),
        };
        for &(other, _) in &others {
            let connected = match side {
                CommoditySide::Source => fwd[other],
                CommoditySide::Destination => bwd[other],
            };
            if !connected {
                let (src, dst) = match side {
                    CommoditySide::Source => (root, other),
                    CommoditySide::Destination => (other, root),
                };
                return Err(BuildError::Disconnected { src, dst });
            }
        }
        // Net outflow required at each vertex.
        let mut supply: BTreeMap<VertexId, f64> = BTreeMap::new();
        let sign = if side == CommoditySide::Source { 1.0 } else { -1.0 };
        for &(other, vol) in &others {
            *supply.entry(root).or_insert(0.0) += sign * vol / scale;
            *supply.entry(other).or_insert(0.0) -= sign * vol / scale;
        }
        let mut rows: BTreeMap<VertexId, Vec<(VarId, f64)>> = supply.keys().map(|&v| (v, Vec::new())).collect();
        let mut arcs = Vec::new();
        for (i, arc) in net.arcs().iter().enumerate() {
            if !(fwd[arc.tail] && bwd[arc.head]) {
                continue;
            }
            let var = model.add_continuous(format!("f_r{root}_a{i}"), 0.0, f64::INFINITY);
            arcs.push((ArcId(i), var));
            arc_flows[i].push(var);
            rows.entry(arc.tail).or_default().push((var, 1.0));
            rows.entry(arc.head).or_default().push((var, -1.0));
        }
        for (v, terms) in rows {
            let rhs = supply.get(&v).copied().unwrap_or(0.0);
            model.add_constraint(format!("flow_r{root}_v{v}"), terms, Comparator::Eq, rhs);
        }
        flows.commodities.push(Commodity { root, side, arcs });
    }

    for (i, vars) in arc_flows.iter().enumerate() {
        if vars.is_empty() {
            continue;
        }
        let link = net.arcs()[i].link;
        let mut terms: Vec<(VarId, f64)> = vars.iter().map(|&f| (f, 1.0)).collect();
        terms.extend(capacity_terms(net, &ports, link, params.theta, scale).into_iter().map(|(v, c)| (v, -c)));
        model.add_constraint(format!("cap_a{i}"), terms, Comparator::Le, 0.0);
    }
    Ok(McfModel { model, ports, flows, scale })
}
