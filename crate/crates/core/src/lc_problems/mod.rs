//! Linecard minimization models, solution extraction, verification and metrics.
//!
//! Two models share the port and linecard part: [`build_mcf_lc`] routes
//! traffic as an arbitrary multi-commodity flow and is exact, while
//! [`build_2sr_lc`] restricts every demand to at most one intermediate
//! segment over precomputed ECMP paths. Both minimize the number of active
//! linecards, `sum_v ceil(active ports at v / k)`, subject to every arc
//! staying below `theta` of its active capacity.

mod mcf;
mod ports;
mod sr;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use lcmin_milp::{solve_lp, Budget, Comparator, LpError, LpStatus, MilpError, MilpSolution, MilpSolver, MilpStatus, Model, VarId};
use log::{debug, info};
use thiserror::Error;

pub use mcf::{build_mcf_lc, Commodity, CommoditySide, FlowVarMap, McfModel};
pub use ports::{PortVarMap, PortVars};
pub use sr::{build_2sr_lc, PolicyVarMap, SrDemand, SrModel, SrOption};

pub use crate::igp_routing::SrPolicy;
use crate::igp_routing::{policy_arc_loads, FractionTable};
use crate::netmodel::{
    mlu, total_active_linecards, validate_network, ArcId, ArcLoads, LinecardConfig, NetError, Network, PortMasks,
    TrafficMatrix, VertexId, Violation,
};

/// Watts drawn by one linecard when no other figure is given.
pub const DEFAULT_LINECARD_WATTS: f64 = 1100.0;
/// Values this close to an integer count as integral.
pub const INTEGRALITY_TOL: f64 = 1e-6;
/// Flow values and split fractions below this are solver noise.
pub const FLOW_DUST: f64 = 1e-9;
/// Largest tolerated conservation or policy-sum residual.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Relative slack on the utilization threshold.
pub const MLU_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcParams {
    /// Utilization threshold in `(0, 1]`.
    pub theta: f64,
    pub k: LinecardConfig,
}

impl Default for LcParams {
    fn default() -> Self {
        LcParams { theta: 0.7, k: LinecardConfig::default() }
    }
}

impl LcParams {
    pub fn new(theta: f64, k: u64) -> Result<Self, BuildError> {
        let k = LinecardConfig::new(k).ok_or(BuildError::InvalidK)?;
        let p = LcParams { theta, k };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<(), BuildError> {
        if self.theta > 0.0 && self.theta <= 1.0 {
            Ok(())
        } else {
            Err(BuildError::InvalidTheta(self.theta))
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error("threshold {0} outside (0, 1]")]
    InvalidTheta(f64),
    #[error("ports per linecard must be at least 1")]
    InvalidK,
    #[error("invalid network: {0:?}")]
    InvalidNetwork(Vec<Violation>),
    #[error("traffic matrix has {tm} vertices, network has {net}")]
    SizeMismatch { net: usize, tm: usize },
    #[error("demand {src} -> {dst} connects disconnected routers")]
    Disconnected { src: VertexId, dst: VertexId },
    #[error("router {vertex}: {direction} demand {demand} exceeds {capacity} usable capacity")]
    CutInfeasible { vertex: VertexId, direction: &'static str, demand: f64, capacity: f64 },
    #[error("demand {src} -> {dst} has no routable intermediate")]
    NoIntermediate { src: VertexId, dst: VertexId },
}

impl BuildError {
    /// The instance has no feasible routing at all.
    pub fn is_infeasibility(&self) -> bool {
        matches!(self, BuildError::Disconnected { .. } | BuildError::CutInfeasible { .. } | BuildError::NoIntermediate { .. })
    }
}

fn check_network(net: &Network, tm: &TrafficMatrix) -> Result<(), BuildError> {
    let violations = validate_network(net);
    if !violations.is_empty() {
        return Err(BuildError::InvalidNetwork(violations));
    }
    if tm.num_vertices() != net.num_vertices() {
        return Err(BuildError::SizeMismatch { net: net.num_vertices(), tm: tm.num_vertices() });
    }
    Ok(())
}

/// Every router must be able to push its outgoing (and absorb its incoming) demand through its own links.
fn check_cuts(net: &Network, tm: &TrafficMatrix, theta: f64) -> Result<(), BuildError> {
    let n = net.num_vertices();
    let mut out_dem = vec![0.0; n];
    let mut in_dem = vec![0.0; n];
    for (s, d, v) in tm.iter() {
        out_dem[s] += v;
        in_dem[d] += v;
    }
    for v in 0..n {
        let cap = |arcs: &[ArcId]| -> f64 { arcs.iter().map(|&a| net.link(net.arc(a).link).ports.total_capacity()).sum() };
        for (direction, demand, capacity) in [("outgoing", out_dem[v], cap(net.out_arcs(v))), ("incoming", in_dem[v], cap(net.in_arcs(v)))] {
            if demand > theta * capacity * (1.0 + MLU_REL_TOL) {
                return Err(BuildError::CutInfeasible { vertex: v, direction, demand, capacity: theta * capacity });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommodityFlow {
    pub root: VertexId,
    pub side: CommoditySide,
    /// Volume per arc, indexed by [`ArcId`].
    pub flow: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Routing {
    Flows(Vec<CommodityFlow>),
    Policy(SrPolicy),
}

/// Active ports plus the routing that uses them.
#[derive(Debug, Clone, PartialEq)]
pub struct LcState {
    pub masks: PortMasks,
    pub routing: Routing,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractError {
    #[error("solution has no assignment")]
    NoAssignment,
    #[error("variable {var:?} = {value} is not integral")]
    Fractional { var: VarId, value: f64 },
    #[error("demand {src} -> {dst}: policy sums to {sum}")]
    PolicySum { src: VertexId, dst: VertexId, sum: f64 },
}

/// Rounds an activation value, rejecting anything farther than [`INTEGRALITY_TOL`] from an integer.
pub fn round_activation(var: VarId, value: f64) -> Result<usize, ExtractError> {
    let r = value.round();
    if (value - r).abs() > INTEGRALITY_TOL || r < 0.0 {
        return Err(ExtractError::Fractional { var, value });
    }
    Ok(r as usize)
}

fn extract_masks(net: &Network, ports: &PortVarMap, values: &[f64]) -> Result<PortMasks, ExtractError> {
    let mut masks = Vec::with_capacity(net.links().len());
    for (l, vars) in ports.links.iter().enumerate() {
        let n = net.link(l).ports.len();
        let mask = match vars {
            PortVars::Count(var) => {
                let c = round_activation(*var, values[var.0])?.min(n);
                (0..n).map(|p| p < c).collect()
            }
            PortVars::PerPort(vars) => vars
                .iter()
                .map(|&x| round_activation(x, values[x.0]).map(|c| c >= 1))
                .collect::<Result<Vec<_>, _>>()?,
        };
        masks.push(mask);
    }
    Ok(PortMasks(masks))
}

impl McfModel {
    /// Active ports from rounded activation values and flows in network volume units.
    ///
    /// Solver noise is cleared: flows below [`FLOW_DUST`] and flows on links
    /// without active ports become zero. Anything larger than noise shows up
    /// as a conservation residual in [`verify`].
    pub fn extract(&self, net: &Network, solution: &MilpSolution) -> Result<LcState, ExtractError> {
        if !solution.has_incumbent() {
            return Err(ExtractError::NoAssignment);
        }
        let values = &solution.values;
        let masks = extract_masks(net, &self.ports, values)?;
        let dead: Vec<bool> = masks.0.iter().map(|m| !m.contains(&true)).collect();
        let flows = self
            .flows
            .commodities
            .iter()
            .map(|c| {
                let mut flow = vec![0.0; net.arcs().len()];
                for &(a, var) in &c.arcs {
                    let x = values[var.0];
                    if x > FLOW_DUST && !dead[net.arc(a).link] {
                        flow[a.0] = x * self.scale;
                    }
                }
                CommodityFlow { root: c.root, side: c.side, flow }
            })
            .collect();
        Ok(LcState { masks, routing: Routing::Flows(flows) })
    }
}

impl SrModel {
    /// Active ports and a policy whose fractions are renormalized to sum to exactly one.
    ///
    /// Fractions below [`FLOW_DUST`], and fractions within [`INTEGRALITY_TOL`]
    /// of zero whose paths cross a link without active ports, are dropped first.
    pub fn extract(&self, net: &Network, solution: &MilpSolution) -> Result<LcState, ExtractError> {
        if !solution.has_incumbent() {
            return Err(ExtractError::NoAssignment);
        }
        let values = &solution.values;
        let masks = extract_masks(net, &self.ports, values)?;
        let dead: Vec<bool> = masks.0.iter().map(|m| !m.contains(&true)).collect();
        let mut policy = SrPolicy::default();
        for d in &self.policy.demands {
            let raw: Vec<(VertexId, f64)> = d
                .options
                .iter()
                .map(|o| {
                    let x = values[o.var.0];
                    let blocked = o.arcs.iter().any(|&a| dead[net.arc(a).link]);
                    let keep = x > FLOW_DUST && !(blocked && x <= INTEGRALITY_TOL);
                    (o.via[0], if keep { x } else { 0.0 })
                })
                .collect();
            let route = normalize_policy(d.src, d.dst, raw)?;
            policy.routes.insert((d.src, d.dst), route);
        }
        Ok(LcState { masks, routing: Routing::Policy(policy) })
    }
}

/// Drops zero entries and rescales to sum one; fails if the sum drifted by more than [`RESIDUAL_TOL`].
pub fn normalize_policy(src: VertexId, dst: VertexId, raw: Vec<(VertexId, f64)>) -> Result<Vec<(VertexId, f64)>, ExtractError> {
    let sum: f64 = raw.iter().map(|e| e.1).sum();
    if (sum - 1.0).abs() > RESIDUAL_TOL {
        return Err(ExtractError::PolicySum { src, dst, sum });
    }
    Ok(raw.into_iter().filter(|e| e.1 > 0.0).map(|(w, x)| (w, x / sum)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Finding {
    LoadedDeadArc { arc: ArcId, load: f64 },
    ThresholdExceeded { mlu: f64, theta: f64 },
    ConservationResidual { root: VertexId, vertex: VertexId, residual: f64 },
    NegativeFlow { root: VertexId, arc: ArcId, flow: f64 },
    PolicyResidual { src: VertexId, dst: VertexId, residual: f64 },
    Routing(String),
    Shape(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    /// Largest conservation residual (flows) or policy-sum residual (segment routing), relative to the largest demand.
    pub residual: f64,
    pub loads: ArcLoads,
    /// `None` when a loaded arc has no active capacity.
    pub mlu: Option<f64>,
    pub within_threshold: bool,
    pub linecards: u64,
    pub findings: Vec<Finding>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.findings.is_empty() && self.residual <= RESIDUAL_TOL && self.within_threshold
    }
}

/// Recomputes loads, utilization and linecards from the state alone.
///
/// Segment-routing policies are expanded over ECMP fractions computed afresh
/// on the full topology.
pub fn verify(net: &Network, tm: &TrafficMatrix, params: LcParams, state: &LcState) -> VerificationReport {
    let mut findings = Vec::new();
    let unit = tm.iter().map(|d| d.2).fold(1.0f64, f64::max);
    let mut residual: f64 = 0.0;
    let loads = match &state.routing {
        Routing::Flows(flows) => {
            let mut loads = ArcLoads::zeros(net);
            for c in flows {
                if c.flow.len() != net.arcs().len() {
                    findings.push(Finding::Shape(format!("commodity {} has {} arc entries", c.root, c.flow.len())));
                    continue;
                }
                let mut net_out = vec![0.0; net.num_vertices()];
                for (i, arc) in net.arcs().iter().enumerate() {
                    let f = c.flow[i];
                    if f < 0.0 {
                        let r = -f / unit;
                        residual = residual.max(r);
                        if r > RESIDUAL_TOL {
                            findings.push(Finding::NegativeFlow { root: c.root, arc: ArcId(i), flow: f });
                        }
                    }
                    net_out[arc.tail] += f;
                    net_out[arc.head] -= f;
                    loads.add(ArcId(i), f);
                }
                for (v, &out) in net_out.iter().enumerate() {
                    let expected = match c.side {
                        CommoditySide::Source if v == c.root => (0..tm.num_vertices()).map(|y| tm.get(c.root, y)).sum(),
                        CommoditySide::Source => -tm.get(c.root, v),
                        CommoditySide::Destination if v == c.root => -(0..tm.num_vertices()).map(|x| tm.get(x, c.root)).sum::<f64>(),
                        CommoditySide::Destination => tm.get(v, c.root),
                    };
                    let r = (out - expected).abs() / unit;
                    residual = residual.max(r);
                    if r > RESIDUAL_TOL {
                        findings.push(Finding::ConservationResidual { root: c.root, vertex: v, residual: r });
                    }
                }
            }
            // Every demand must belong to some commodity.
            for (s, d, _) in tm.iter() {
                let covered = flows.iter().any(|c| match c.side {
                    CommoditySide::Source => c.root == s,
                    CommoditySide::Destination => c.root == d,
                });
                if !covered {
                    findings.push(Finding::Routing(format!("demand {s} -> {d} is not routed")));
                }
            }
            loads
        }
        Routing::Policy(policy) => {
            for (s, d, _) in tm.iter() {
                let sum: f64 = policy.routes.get(&(s, d)).map_or(0.0, |r| r.iter().map(|e| e.1).sum());
                let r = (sum - 1.0).abs();
                residual = residual.max(r);
                if r > RESIDUAL_TOL {
                    findings.push(Finding::PolicyResidual { src: s, dst: d, residual: r });
                }
            }
            let table = FractionTable::for_demands(net, tm);
            match policy_arc_loads(net, tm, policy, &table) {
                Ok(loads) => loads,
                Err(e) => {
                    findings.push(Finding::Routing(e.to_string()));
                    ArcLoads::zeros(net)
                }
            }
        }
    };
    let mlu = match mlu(net, &loads, &state.masks) {
        Ok(m) => Some(m),
        Err(NetError::LoadedDeadArc { arc, load }) => {
            findings.push(Finding::LoadedDeadArc { arc, load });
            None
        }
        Err(e) => {
            findings.push(Finding::Shape(e.to_string()));
            None
        }
    };
    let within_threshold = mlu.is_some_and(|m| m <= params.theta * (1.0 + MLU_REL_TOL));
    if let Some(m) = mlu.filter(|_| !within_threshold) {
        findings.push(Finding::ThresholdExceeded { mlu: m, theta: params.theta });
    }
    let linecards = total_active_linecards(net, &state.masks, params.k).unwrap_or(u64::MAX);
    VerificationReport { residual, loads, mlu, within_threshold, linecards, findings }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// `sum_v ceil(active backbone ports / k)`.
    pub active_linecards: u64,
    /// Cards with every port on, customer ports included.
    pub baseline_linecards: u64,
    /// Cards holding only backbone ports.
    pub deactivatable_linecards: u64,
    /// Deactivatable cards still needed by the active ports.
    pub active_deactivatable: u64,
    /// `None` when nothing is deactivatable.
    pub inactive_fraction: Option<f64>,
    pub power_saving_w: f64,
}

/// Linecard accounting for a port state.
///
/// Customer ports are packed first; the cards they need beyond the
/// deactivatable ones stay on and also take the first backbone ports.
pub fn metrics(masks: &PortMasks, net: &Network, k: LinecardConfig, watts_per_linecard: f64) -> Metrics {
    let mut m = Metrics {
        active_linecards: 0,
        baseline_linecards: 0,
        deactivatable_linecards: 0,
        active_deactivatable: 0,
        inactive_fraction: None,
        power_saving_w: 0.0,
    };
    for v in 0..net.num_vertices() {
        let active: u64 = net.incident_links(v).iter().map(|&l| masks.active_count(l) as u64).sum();
        let customer = u64::from(net.customer_ports(v));
        let baseline = net.baseline_linecards(v, k);
        let deact = net.deactivatable_linecards(v, k);
        let pinned = baseline - deact;
        let needed = k.cards_for(active + customer);
        m.active_linecards += k.cards_for(active);
        m.baseline_linecards += baseline;
        m.deactivatable_linecards += deact;
        m.active_deactivatable += needed.saturating_sub(pinned).min(deact);
    }
    let off = m.deactivatable_linecards - m.active_deactivatable;
    if m.deactivatable_linecards > 0 {
        m.inactive_fraction = Some(off as f64 / m.deactivatable_linecards as f64);
    }
    m.power_saving_w = off as f64 * watts_per_linecard;
    m
}

/// Smallest achievable maximum utilization with ports at `capacity[link]`, any fractional routing allowed.
///
/// `Ok(None)` when some demand cannot be routed at all.
pub fn min_mlu(net: &Network, tm: &TrafficMatrix, capacity: &[f64]) -> Result<Option<f64>, LpError> {
    if tm.is_empty() {
        return Ok(Some(0.0));
    }
    let max_cap = capacity.iter().copied().fold(0.0f64, f64::max);
    let scale = if max_cap > 0.0 { max_cap } else { 1.0 };
    let mut model = Model::new("min-mlu");
    let u = model.add_continuous("U", 0.0, f64::INFINITY);
    let mut arc_flows: Vec<Vec<VarId>> = vec![Vec::new(); net.arcs().len()];
    for src in 0..net.num_vertices() {
        let sinks: Vec<(VertexId, f64)> = (0..net.num_vertices()).map(|d| (d, tm.get(src, d))).filter(|e| e.1 > 0.0).collect();
        if sinks.is_empty() {
            continue;
        }
        let mut rows: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); net.num_vertices()];
        for (i, arc) in net.arcs().iter().enumerate() {
            if capacity[arc.link] <= 0.0 {
                continue;
            }
            let f = model.add_continuous(format!("f_{src}_{i}"), 0.0, f64::INFINITY);
            arc_flows[i].push(f);
            rows[arc.tail].push((f, 1.0));
            rows[arc.head].push((f, -1.0));
        }
        let total: f64 = sinks.iter().map(|e| e.1).sum();
        for (v, terms) in rows.into_iter().enumerate() {
            let rhs = if v == src { total } else { -tm.get(src, v) } / scale;
            model.add_constraint(format!("flow_{src}_{v}"), terms, Comparator::Eq, rhs);
        }
    }
    for (i, flows) in arc_flows.into_iter().enumerate() {
        if flows.is_empty() {
            continue;
        }
        let cap = capacity[net.arcs()[i].link] / scale;
        let mut terms: Vec<(VarId, f64)> = flows.into_iter().map(|f| (f, 1.0)).collect();
        terms.push((u, -cap));
        model.add_constraint(format!("cap_{i}"), terms, Comparator::Le, 0.0);
    }
    model.set_objective([(u, 1.0)]);
    let sol = solve_lp(&model)?;
    Ok(match sol.status {
        LpStatus::Optimal => Some(sol.objective),
        _ => None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Mcf,
    TwoSr,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Mcf => "mcf",
            Algorithm::TwoSr => "2sr",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mcf" => Ok(Algorithm::Mcf),
            "2sr" | "sr" => Ok(Algorithm::TwoSr),
            other => Err(format!("unknown algorithm `{other}` (expected mcf or 2sr)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub algorithm: Algorithm,
    pub params: LcParams,
    pub budget: Budget,
    pub watts_per_linecard: f64,
}

impl SolveOptions {
    pub fn new(algorithm: Algorithm, params: LcParams) -> Self {
        SolveOptions { algorithm, params, budget: Budget::default(), watts_per_linecard: DEFAULT_LINECARD_WATTS }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub algorithm: Algorithm,
    pub status: MilpStatus,
    /// Why the instance was declared infeasible before solving.
    pub diagnostic: Option<String>,
    pub state: Option<LcState>,
    pub verification: Option<VerificationReport>,
    pub metrics: Option<Metrics>,
    pub best_bound: f64,
    pub nodes: usize,
    pub runtime: Duration,
}

impl SolveOutcome {
    /// Active linecards of the returned state.
    pub fn objective(&self) -> Option<u64> {
        self.metrics.as_ref().map(|m| m.active_linecards)
    }

    pub fn proven_optimal(&self) -> bool {
        self.status == MilpStatus::Optimal
    }

    pub fn verified(&self) -> bool {
        self.verification.as_ref().is_some_and(VerificationReport::passed)
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("build: {0}")]
    Build(#[from] BuildError),
    #[error("solve: {0}")]
    Milp(#[from] MilpError),
    #[error("extract: {0}")]
    Extract(#[from] ExtractError),
}

enum Built {
    Mcf(McfModel),
    Sr(SrModel),
}

impl Built {
    fn model(&self) -> &Model {
        match self {
            Built::Mcf(m) => &m.model,
            Built::Sr(m) => &m.model,
        }
    }
}

/// Builds, solves, extracts, verifies and measures one instance.
pub fn solve_instance(net: &Network, tm: &TrafficMatrix, opts: &SolveOptions, solver: &dyn MilpSolver) -> Result<SolveOutcome, SolveError> {
    let start = Instant::now();
    let built = match opts.algorithm {
        Algorithm::Mcf => build_mcf_lc(net, tm, opts.params).map(Built::Mcf),
        Algorithm::TwoSr => {
            let table = FractionTable::for_demands(net, tm);
            build_2sr_lc(net, tm, opts.params, &table).map(Built::Sr)
        }
    };
    let built = match built {
        Ok(b) => b,
        Err(e) if e.is_infeasibility() => {
            info!("{}: infeasible before solving: {e}", opts.algorithm);
            return Ok(SolveOutcome {
                algorithm: opts.algorithm,
                status: MilpStatus::Infeasible,
                diagnostic: Some(e.to_string()),
                state: None,
                verification: None,
                metrics: None,
                best_bound: f64::INFINITY,
                nodes: 0,
                runtime: start.elapsed(),
            });
        }
        Err(e) => return Err(e.into()),
    };
    let model = built.model();
    debug!(
        "{}: {} variables ({} integer), {} rows",
        opts.algorithm,
        model.num_vars(),
        model.integer_vars().count(),
        model.constraints().len()
    );
    let mut budget = opts.budget.clone();
    if let Some(limit) = budget.time_limit {
        budget.time_limit = Some(limit.saturating_sub(start.elapsed()));
    }
    let sol = solver.solve(model, &budget)?;
    let mut outcome = SolveOutcome {
        algorithm: opts.algorithm,
        status: sol.status,
        diagnostic: None,
        state: None,
        verification: None,
        metrics: None,
        best_bound: sol.best_bound,
        nodes: sol.nodes,
        runtime: Duration::ZERO,
    };
    if sol.has_incumbent() {
        let state = match &built {
            Built::Mcf(m) => m.extract(net, &sol)?,
            Built::Sr(m) => m.extract(net, &sol)?,
        };
        outcome.verification = Some(verify(net, tm, opts.params, &state));
        outcome.metrics = Some(metrics(&state.masks, net, opts.params.k, opts.watts_per_linecard));
        outcome.state = Some(state);
    }
    outcome.runtime = start.elapsed();
    Ok(outcome)
}
