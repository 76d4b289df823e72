//! Brute-force ground truth for tiny instances.
//!
//! Only the LP solver is shared with the main models; flows, linecard
//! counting and the search over activation vectors are written separately.

use lcmin_milp::{solve_lp, Comparator, LpError, LpStatus, Model, VarId};
use thiserror::Error;

use crate::hardness_gen::SetCoverInstance;
use crate::netmodel::{Network, PortMasks, TrafficMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("instance exceeds the enumeration budget of {0} states")]
    OverBudget(u64),
    #[error("instance is infeasible even with every port active")]
    Infeasible,
    #[error("{0} sets exceed the subset enumeration limit of 20")]
    TooManySets(usize),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Default cap on activation vectors visited by [`brute_force_lc_mcfs`].
pub const DEFAULT_STATE_BUDGET: u64 = 2_000_000;

/// Whether every demand can be routed as a fractional flow within `theta` of the active capacities.
///
/// One commodity per demand pair, so no aggregation is involved.
pub fn mcf_feasible(net: &Network, masks: &PortMasks, tm: &TrafficMatrix, theta: f64) -> Result<bool, LpError> {
    if tm.is_empty() {
        return Ok(true);
    }
    let caps: Vec<f64> = net
        .links()
        .iter()
        .zip(&masks.0)
        .map(|(l, m)| l.ports.capacities().iter().zip(m).filter(|(_, &on)| on).map(|(c, _)| c).sum())
        .collect();
    let scale = caps.iter().copied().fold(0.0f64, f64::max);
    if scale <= 0.0 {
        return Ok(false);
    }
    let mut model = Model::new("oracle-feasibility");
    let mut per_arc: Vec<Vec<VarId>> = vec![Vec::new(); net.arcs().len()];
    for (p, (s, d, vol)) in tm.iter().enumerate() {
        let mut balance: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); net.num_vertices()];
        for (i, arc) in net.arcs().iter().enumerate() {
            if caps[arc.link] <= 0.0 {
                continue;
            }
            let f = model.add_continuous(format!("f{p}_{i}"), 0.0, f64::INFINITY);
            per_arc[i].push(f);
            balance[arc.tail].push((f, 1.0));
            balance[arc.head].push((f, -1.0));
        }
        for (v, terms) in balance.into_iter().enumerate() {
            let rhs = if v == s {
                vol / scale
            } else if v == d {
                -vol / scale
            } else {
                0.0
            };
            if terms.is_empty() && rhs != 0.0 {
                return Ok(false);
            }
            model.add_constraint(format!("b{p}_{v}"), terms, Comparator::Eq, rhs);
        }
    }
    for (i, flows) in per_arc.into_iter().enumerate() {
        if !flows.is_empty() {
            let cap = theta * caps[net.arcs()[i].link] / scale;
            model.add_constraint(format!("c{i}"), flows.into_iter().map(|f| (f, 1.0)), Comparator::Le, cap);
        }
    }
    Ok(solve_lp(&model)?.status == LpStatus::Optimal)
}

/// Masks activating the `count` largest ports of each link.
fn masks_for(net: &Network, counts: &[usize]) -> PortMasks {
    PortMasks(
        net.links()
            .iter()
            .zip(counts)
            .map(|(l, &c)| {
                let mut order: Vec<usize> = (0..l.ports.len()).collect();
                order.sort_by(|&a, &b| l.ports.capacities()[b].total_cmp(&l.ports.capacities()[a]).then(a.cmp(&b)));
                let mut mask = vec![false; l.ports.len()];
                for &p in &order[..c] {
                    mask[p] = true;
                }
                mask
            })
            .collect(),
    )
}

fn vertex_ports(net: &Network, counts: &[usize]) -> Vec<u64> {
    let mut ports = vec![0u64; net.num_vertices()];
    for (l, &c) in counts.iter().enumerate() {
        ports[net.link(l).u] += c as u64;
        ports[net.link(l).v] += c as u64;
    }
    ports
}

struct Search<'a> {
    net: &'a Network,
    k: u64,
    limit: Vec<usize>,
    counts: Vec<usize>,
    ports: Vec<u64>,
    visited: u64,
    budget: u64,
}

impl Search<'_> {
    fn cost(&self) -> u64 {
        self.ports.iter().map(|&p| p.div_ceil(self.k)).sum()
    }

    fn set(&mut self, link: usize, count: usize) {
        let l = self.net.link(link);
        let old = self.counts[link] as u64;
        for v in [l.u, l.v] {
            self.ports[v] = self.ports[v] - old + count as u64;
        }
        self.counts[link] = count;
    }

    /// Whether no single link can gain a port without exceeding `target`.
    fn maximal(&mut self, target: u64) -> bool {
        for l in 0..self.limit.len() {
            let c = self.counts[l];
            if c < self.limit[l] {
                self.set(l, c + 1);
                let over = self.cost() > target;
                self.set(l, c);
                if !over {
                    return false;
                }
            }
        }
        true
    }

    /// Depth-first over links; returns the first feasible maximal vector of cost at most `target`.
    fn dfs(
        &mut self,
        link: usize,
        target: u64,
        feasible: &mut dyn FnMut(&[usize]) -> Result<bool, LpError>,
    ) -> Result<Option<Vec<usize>>, OracleError> {
        if self.cost() > target {
            return Ok(None);
        }
        if link == self.limit.len() {
            self.visited += 1;
            if self.visited > self.budget {
                return Err(OracleError::OverBudget(self.budget));
            }
            if self.maximal(target) && feasible(&self.counts)? {
                return Ok(Some(self.counts.clone()));
            }
            return Ok(None);
        }
        for c in (0..=self.limit[link]).rev() {
            self.set(link, c);
            let found = self.dfs(link + 1, target, feasible);
            self.set(link, 0);
            if let Some(v) = found? {
                return Ok(Some(v));
            }
        }
        Ok(None)
    }
}

/// Minimum total linecards over all activation vectors, with a witness.
///
/// Candidate costs are tried in increasing order. Because adding ports never
/// breaks feasibility, only vectors that cannot gain a port within the cost
/// bound are checked.
pub fn brute_force_lc_mcfs(
    net: &Network,
    tm: &TrafficMatrix,
    theta: f64,
    k: u64,
    budget: u64,
) -> Result<(u64, PortMasks), OracleError> {
    assert!(k >= 1, "linecards hold at least one port");
    let limit: Vec<usize> = net.links().iter().map(|l| l.ports.len()).collect();
    let check = |counts: &[usize]| mcf_feasible(net, &masks_for(net, counts), tm, theta);
    if !check(&limit)? {
        return Err(OracleError::Infeasible);
    }
    let mut search = Search {
        net,
        k,
        limit: limit.clone(),
        counts: vec![0; limit.len()],
        ports: vec![0; net.num_vertices()],
        visited: 0,
        budget,
    };
    let mut feasible = |counts: &[usize]| check(counts);
    let max_cost = vertex_ports(net, &limit).iter().map(|&p| p.div_ceil(k)).sum();
    for target in 0..=max_cost {
        if let Some(mut counts) = search.dfs(0, target, &mut feasible)? {
            // Drop ports that are not needed for feasibility.
            for l in 0..counts.len() {
                while counts[l] > 0 {
                    counts[l] -= 1;
                    if !check(&counts)? {
                        counts[l] += 1;
                        break;
                    }
                }
            }
            let objective = vertex_ports(net, &counts).iter().map(|&p| p.div_ceil(k)).sum();
            return Ok((objective, masks_for(net, &counts)));
        }
    }
    unreachable!("the all-on vector is feasible and maximal at the largest cost")
}

/// Size of a smallest subfamily covering the universe.
pub fn brute_force_set_cover(sc: &SetCoverInstance) -> Result<usize, OracleError> {
    let sigma = sc.sets.len();
    if sigma > 20 {
        return Err(OracleError::TooManySets(sigma));
    }
    let masks: Vec<u32> = sc.sets.iter().map(|s| s.iter().fold(0u32, |m, &x| m | (1 << x))).collect();
    let full: u64 = (1u64 << sc.universe.len()) - 1;
    let best = (0u32..(1 << sigma))
        .filter(|family| {
            let covered = (0..sigma).filter(|&i| family >> i & 1 == 1).fold(0u32, |m, i| m | masks[i]);
            covered as u64 == full
        })
        .map(u32::count_ones)
        .min();
    best.map(|b| b as usize).ok_or(OracleError::Infeasible)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::PortGroup;

    fn tm(n: usize, list: &[(usize, usize, f64)]) -> TrafficMatrix {
        let mut t = TrafficMatrix::new(n);
        for &(s, d, v) in list {
            t.add(s, d, v).unwrap();
        }
        t
    }

    /// 0 -> {1, 2} -> 3, each branch one port of capacity 10.
    fn diamond() -> Network {
        let mut net = Network::with_vertices(4);
        for (u, v) in [(0, 1), (1, 3), (0, 2), (2, 3)] {
            net.add_link(u, v, PortGroup::uniform(1, 10.0), 1);
        }
        net
    }

    #[test]
    fn feasibility() {
        let net = diamond();
        let on = PortMasks::all_on(&net);
        assert!(mcf_feasible(&net, &PortMasks::all_off(&net), &TrafficMatrix::new(4), 0.7).unwrap());
        // Needs both branches.
        assert!(mcf_feasible(&net, &on, &tm(4, &[(0, 3, 1.4 * 0.7 * 10.0)]), 0.7).unwrap());
        let one_branch = PortMasks::from_counts(&net, &[1, 1, 0, 0]);
        assert!(!mcf_feasible(&net, &one_branch, &tm(4, &[(0, 3, 1.4 * 0.7 * 10.0)]), 0.7).unwrap());
        // Beyond the cut at the source.
        assert!(!mcf_feasible(&net, &on, &tm(4, &[(0, 3, 14.5)]), 0.7).unwrap());
    }

    #[test]
    fn two_router_optimum() {
        let mut net = Network::with_vertices(2);
        net.add_link(0, 1, PortGroup::uniform(4, 100.0), 1);
        let (obj, masks) = brute_force_lc_mcfs(&net, &tm(2, &[(0, 1, 65.0)]), 0.7, 8, DEFAULT_STATE_BUDGET).unwrap();
        assert_eq!(obj, 2);
        assert_eq!(masks.counts(), vec![1]);
        let (obj, _) = brute_force_lc_mcfs(&net, &TrafficMatrix::new(2), 0.7, 8, DEFAULT_STATE_BUDGET).unwrap();
        assert_eq!(obj, 0);
        let (obj, masks) = brute_force_lc_mcfs(&net, &tm(2, &[(0, 1, 150.0)]), 0.7, 1, DEFAULT_STATE_BUDGET).unwrap();
        assert_eq!((obj, masks.counts()), (6, vec![3]));
        assert_eq!(
            brute_force_lc_mcfs(&net, &tm(2, &[(0, 1, 300.0)]), 0.7, 8, DEFAULT_STATE_BUDGET).unwrap_err(),
            OracleError::Infeasible
        );
    }

    #[test]
    fn heterogeneous_ports_use_largest_first() {
        let mut net = Network::with_vertices(2);
        net.add_link(0, 1, PortGroup::new(vec![10.0, 40.0, 20.0]), 1);
        let (obj, masks) = brute_force_lc_mcfs(&net, &tm(2, &[(1, 0, 25.0)]), 0.7, 1, DEFAULT_STATE_BUDGET).unwrap();
        assert_eq!(obj, 2);
        assert_eq!(masks.0, vec![vec![false, true, false]]);
    }

    #[test]
    fn budget_refusal() {
        let mut net = Network::with_vertices(5);
        for v in 0..4 {
            net.add_link(v, v + 1, PortGroup::uniform(4, 10.0), 1);
        }
        let err = brute_force_lc_mcfs(&net, &tm(5, &[(0, 4, 20.0)]), 0.7, 8, 3).unwrap_err();
        assert_eq!(err, OracleError::OverBudget(3));
    }

    #[test]
    fn set_cover_sizes() {
        let fig = SetCoverInstance::from_labels(&[vec!["a", "b", "c"], vec!["c", "d"], vec!["b", "c"]]).unwrap();
        assert_eq!(brute_force_set_cover(&fig).unwrap(), 2);
        let whole = SetCoverInstance::from_labels(&[vec!["a", "b", "c"]]).unwrap();
        assert_eq!(brute_force_set_cover(&whole).unwrap(), 1);
        let singles = SetCoverInstance::from_labels(&[vec!["a"], vec!["b"], vec!["c"], vec!["d"]]).unwrap();
        assert_eq!(brute_force_set_cover(&singles).unwrap(), 4);
        let many = SetCoverInstance::new(vec!["a".into()], vec![vec![0]; 21]).unwrap();
        assert_eq!(brute_force_set_cover(&many), Err(OracleError::TooManySets(21)));
    }

    #[test]
    fn more_demand_never_helps() {
        let net = diamond();
        let mut last = 0;
        for d in [0.0, 2.0, 6.0, 7.0, 9.0] {
            let t = tm(4, &[(0, 3, d), (1, 2, d / 2.0)].into_iter().filter(|e| e.2 > 0.0).collect::<Vec<_>>());
            let (obj, _) = brute_force_lc_mcfs(&net, &t, 0.7, 1, DEFAULT_STATE_BUDGET).unwrap();
            assert!(obj >= last, "demand {d}");
            last = obj;
        }
    }
}
