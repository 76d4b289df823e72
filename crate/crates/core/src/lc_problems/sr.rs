//! Two-segment routing model: each demand picks intermediates over fixed ECMP paths.

use lcmin_milp::{Comparator, Model, VarId};

use super::ports::{add_port_model, capacity_terms, volume_scale, PortVarMap, SeriesTies};
use super::{check_cuts, BuildError, LcParams};
use crate::igp_routing::{g_vector, FractionTable};
use crate::netmodel::{ArcId, Network, TrafficMatrix, VertexId};

/// One variable per distinct load pattern; `via` lists every intermediate producing it.
#[derive(Debug, Clone, PartialEq)]
pub struct SrOption {
    pub var: VarId,
    pub via: Vec<VertexId>,
    /// Arcs the pattern loads.
    pub arcs: Vec<ArcId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrDemand {
    pub src: VertexId,
    pub dst: VertexId,
    pub options: Vec<SrOption>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyVarMap {
    pub demands: Vec<SrDemand>,
}

#[derive(Debug, Clone)]
pub struct SrModel {
    pub model: Model,
    pub ports: PortVarMap,
    pub policy: PolicyVarMap,
    pub scale: f64,
}

/// Load vector of an option and the intermediates producing it.
type Pattern = (Vec<(ArcId, f64)>, Vec<VertexId>);

/// True when `q` loads no arc more than `p` does.
fn dominates(q: &[(ArcId, f64)], p: &[(ArcId, f64)]) -> bool {
    q.iter().all(|&(a, lq)| p.iter().any(|&(b, lp)| a == b && lq <= lp + 1e-12))
}

/// Removes patterns that some other pattern undercuts on every arc.
fn drop_dominated(patterns: &mut Vec<Pattern>) {
    let mut keep = vec![true; patterns.len()];
    for i in 0..patterns.len() {
        for j in 0..patterns.len() {
            if i != j && keep[j] && dominates(&patterns[j].0, &patterns[i].0) {
                keep[i] = false;
                break;
            }
        }
    }
    let mut flags = keep.into_iter();
    patterns.retain(|_| flags.next().unwrap_or(true));
}

/// Builds the model over `table`, which must hold `F(u, w)` and `F(w, v)` for every demand `(u, v)`.
///
/// Intermediates range over every `w != u` with both segments routable; `w = v`
/// is plain shortest-path routing. Intermediates with identical load vectors
/// share one variable, and a pattern that loads every arc at least as much as
/// another one is left out.
pub fn build_2sr_lc(net: &Network, tm: &TrafficMatrix, params: LcParams, table: &FractionTable) -> Result<SrModel, BuildError> {
    params.validate()?;
    super::check_network(net, tm)?;
    check_cuts(net, tm, params.theta)?;
    let scale = volume_scale(net);
    let mut model = Model::new("2sr-lc");
    let ports = add_port_model(&mut model, net, tm, params, SeriesTies::OneWayOnly);

    let mut arc_terms: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); net.arcs().len()];
    let mut demands = Vec::new();
    for (u, v, d) in tm.iter() {
        let mut patterns: Vec<Pattern> = Vec::new();
        // w = v first so it represents its pattern.
        let candidates = std::iter::once(v).chain((0..net.num_vertices()).filter(|&w| w != u && w != v));
        for w in candidates {
            let Some(g) = g_vector(table, d / scale, u, v, w) else {
                continue;
            };
            match patterns.iter_mut().find(|(p, _)| *p == g) {
                Some((_, via)) => via.push(w),
                None => patterns.push((g, vec![w])),
            }
        }
        if patterns.is_empty() {
            return Err(BuildError::NoIntermediate { src: u, dst: v });
        }
        drop_dominated(&mut patterns);
        let mut options = Vec::with_capacity(patterns.len());
        for (g, via) in patterns {
            let var = model.add_continuous(format!("x_{u}_{v}_w{}", via[0]), 0.0, 1.0);
            let arcs = g.iter().map(|e| e.0).collect();
            for (a, load) in g {
                arc_terms[a.0].push((var, load));
            }
            options.push(SrOption { var, via, arcs });
        }
        model.add_constraint(format!("split_{u}_{v}"), options.iter().map(|o| (o.var, 1.0)), Comparator::Eq, 1.0);
        demands.push(SrDemand { src: u, dst: v, options });
    }

    for (i, terms) in arc_terms.into_iter().enumerate() {
        if terms.is_empty() {
            continue;
        }
        let link = net.arcs()[i].link;
        let mut row = terms;
        row.extend(capacity_terms(net, &ports, link, params.theta, scale).into_iter().map(|(v, c)| (v, -c)));
        model.add_constraint(format!("cap_a{i}"), row, Comparator::Le, 0.0);
    }
    Ok(SrModel { model, ports, policy: PolicyVarMap { demands }, scale })
}
