//! Best-first branch-and-bound on top of the simplex engine.
//!
//! Nodes are kept in a priority queue ordered by LP bound. After branching the
//! engine plunges into one child directly, reusing the factorized basis, and
//! queues the sibling together with a basis snapshot for a dual warm start.
//! Branching picks the most fractional integer variable, lowest id on ties.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::model::{Comparator, Model, ModelError};
use crate::simplex::{Basis, LpError, LpStatus, Simplex, StandardForm};

/// Values closer than this to an integer count as integral.
pub const INTEGRALITY_TOL: f64 = 1e-6;
/// Absolute tolerance of the independent incumbent check.
pub const CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Budget {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    /// Relative gap at which the search stops and reports optimality.
    pub rel_gap: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            time_limit: None,
            node_limit: None,
            rel_gap: 1e-6,
        }
    }
}

impl Budget {
    pub fn with_time_limit(limit: Duration) -> Self {
        Budget {
            time_limit: Some(limit),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    /// A limit was hit while an incumbent exists.
    Feasible,
    Infeasible,
    /// A limit was hit before any incumbent was found.
    TimeLimit,
}

impl fmt::Display for MilpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MilpStatus::Optimal => "optimal",
            MilpStatus::Feasible => "feasible",
            MilpStatus::Infeasible => "infeasible",
            MilpStatus::TimeLimit => "time-limit",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: MilpStatus,
    /// Empty unless an incumbent exists.
    pub values: Vec<f64>,
    pub objective: f64,
    pub best_bound: f64,
    pub nodes: usize,
    pub elapsed: Duration,
}

impl MilpSolution {
    pub fn has_incumbent(&self) -> bool {
        !self.values.is_empty()
    }

    pub fn gap(&self) -> f64 {
        if !self.has_incumbent() {
            return f64::INFINITY;
        }
        (self.objective - self.best_bound).abs() / self.objective.abs().max(1.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MilpError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("LP relaxation is unbounded")]
    Unbounded,
}

/// `(variable, lower, upper)` overrides applied on top of the root bounds.
type BoundChanges = Vec<(usize, f64, f64)>;

struct Node {
    bound: f64,
    depth: usize,
    seq: u64,
    changes: BoundChanges,
    basis: Basis,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: smallest bound first, then deeper, then older.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

struct Incumbent {
    objective: f64,
    values: Vec<f64>,
}

pub fn solve_milp(model: &Model, budget: &Budget) -> Result<MilpSolution, MilpError> {
    model.validate()?;
    let start = Instant::now();
    let n = model.num_vars();
    let int_vars: Vec<usize> = model.integer_vars().map(|v| v.0).collect();
    let integral_obj = !int_vars.is_empty() && model.objective_is_integral();

    let mut root_lower: Vec<f64> = model.vars().iter().map(|v| v.lower).collect();
    let mut root_upper: Vec<f64> = model.vars().iter().map(|v| v.upper).collect();
    for &j in &int_vars {
        root_lower[j] = (root_lower[j] - INTEGRALITY_TOL).ceil();
        root_upper[j] = (root_upper[j] + INTEGRALITY_TOL).floor();
        if root_lower[j] > root_upper[j] {
            return Ok(finish(MilpStatus::Infeasible, None, f64::INFINITY, 0, start));
        }
    }

    let sf = StandardForm::from_model(model);
    let mut spx = Simplex::new(&sf);
    for &j in &int_vars {
        spx.set_bounds(j, root_lower[j], root_upper[j]);
    }
    let rounding = Rounding::new(model);

    let mut incumbent: Option<Incumbent> = None;
    let mut queue: BinaryHeap<Node> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut nodes = 0usize;
    // The node currently loaded into `spx`: (bound, depth, path of bound changes).
    let mut current: Option<(f64, usize, BoundChanges)> = Some((f64::NEG_INFINITY, 0, Vec::new()));
    let mut limit_hit = false;
    // Smallest parent bound among nodes whose LP could not be solved.
    let mut abandoned = f64::INFINITY;

    let prunable = |bound: f64, inc: &Option<Incumbent>| -> bool {
        let Some(inc) = inc else { return false };
        if integral_obj {
            (bound - INTEGRALITY_TOL).ceil() >= inc.objective - 0.5
        } else {
            bound >= inc.objective - (budget.rel_gap * inc.objective.abs().max(1.0)).max(1e-9)
        }
    };

    loop {
        let (parent_bound, depth, changes) = match current.take() {
            Some(c) => c,
            None => {
                let Some(node) = queue.pop() else { break };
                if prunable(node.bound, &incumbent) {
                    queue.clear();
                    break;
                }
                let (lo, up) = apply_changes(&root_lower, &root_upper, &node.changes);
                spx.restore(&node.basis, &lo, &up)?;
                (node.bound, node.depth, node.changes)
            }
        };
        if limit_reached(budget, start, nodes) {
            // Put the unexplored node back so the reported bound stays valid.
            queue.push(Node {
                bound: parent_bound,
                depth,
                seq,
                changes,
                basis: spx.snapshot(),
            });
            limit_hit = true;
            break;
        }
        nodes += 1;
        let status = match spx.solve() {
            Ok(st) => st,
            Err(e) => {
                // Cold restart once; a second failure leaves the node open.
                log::warn!("node LP failed ({e}), retrying from a slack basis");
                let (lo, up) = spx_bounds(&spx, n);
                spx.reset(&lo, &up)?;
                match spx.solve() {
                    Ok(st) => st,
                    Err(e) if depth > 0 => {
                        log::warn!("abandoning node at depth {depth}: {e}");
                        abandoned = abandoned.min(parent_bound);
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        };
        match status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                if int_vars.is_empty() || depth == 0 {
                    return Err(MilpError::Unbounded);
                }
                continue;
            }
            LpStatus::Optimal => {}
        }
        let values = spx.structural_values();
        let bound = model.objective_value(&values).max(parent_bound);
        if prunable(bound, &incumbent) {
            continue;
        }

        // Most fractional within the highest priority tier; ties go to the lowest id.
        let mut branch_var: Option<(usize, i32, f64)> = None;
        for &j in &int_vars {
            let x = values[j];
            let dist = (x - x.floor()).min(x.ceil() - x);
            if dist <= INTEGRALITY_TOL {
                continue;
            }
            let tier = model.vars()[j].priority;
            if branch_var.is_none_or(|(_, t, d)| tier > t || (tier == t && dist > d + 1e-12)) {
                branch_var = Some((j, tier, dist));
            }
        }

        let Some((j, _, _)) = branch_var else {
            let mut vals = values;
            for &j in &int_vars {
                vals[j] = vals[j].round();
            }
            offer(model, &mut incumbent, vals);
            continue;
        };

        offer(model, &mut incumbent, rounding.round(model, &values, &spx_bounds(&spx, n)));
        if prunable(bound, &incumbent) {
            continue;
        }

        let x = values[j];
        let (lo, up) = spx.bounds(j);
        let down = (j, lo, x.floor());
        let up_child = (j, x.ceil(), up);
        let (first, second) = if x - x.floor() >= 0.5 {
            (up_child, down)
        } else {
            (down, up_child)
        };
        let mut queued = changes.clone();
        queued.push(second);
        queue.push(Node {
            bound,
            depth: depth + 1,
            seq,
            changes: queued,
            basis: spx.snapshot(),
        });
        seq += 1;
        let mut plunge = changes;
        plunge.push(first);
        spx.set_bounds(first.0, first.1, first.2);
        current = Some((bound, depth + 1, plunge));
    }

    log::debug!("{} simplex iterations over {nodes} nodes", spx.iterations);
    let open_bound = queue.iter().map(|n| n.bound).fold(abandoned, f64::min);
    limit_hit |= abandoned.is_finite();
    Ok(match incumbent {
        Some(inc) => {
            let best_bound = open_bound.min(inc.objective);
            let gap = (inc.objective - best_bound).abs() / inc.objective.abs().max(1.0);
            let closed = !limit_hit
                || gap <= budget.rel_gap
                || (integral_obj && (best_bound - INTEGRALITY_TOL).ceil() >= inc.objective - 0.5);
            let status = if closed {
                MilpStatus::Optimal
            } else {
                MilpStatus::Feasible
            };
            let bound = if closed { inc.objective } else { best_bound };
            finish(status, Some(inc), bound, nodes, start)
        }
        None if limit_hit => finish(MilpStatus::TimeLimit, None, open_bound, nodes, start),
        None => finish(MilpStatus::Infeasible, None, f64::INFINITY, nodes, start),
    })
}

fn finish(status: MilpStatus, inc: Option<Incumbent>, best_bound: f64, nodes: usize, start: Instant) -> MilpSolution {
    let (values, objective) = match inc {
        Some(i) => (i.values, i.objective),
        None => (Vec::new(), f64::NAN),
    };
    log::debug!("branch-and-bound finished: {status} after {nodes} nodes");
    MilpSolution {
        status,
        values,
        objective,
        best_bound,
        nodes,
        elapsed: start.elapsed(),
    }
}

fn limit_reached(budget: &Budget, start: Instant, nodes: usize) -> bool {
    budget.node_limit.is_some_and(|l| nodes >= l) || budget.time_limit.is_some_and(|t| start.elapsed() >= t)
}

fn apply_changes(lower: &[f64], upper: &[f64], changes: &[(usize, f64, f64)]) -> (Vec<f64>, Vec<f64>) {
    let mut lo = lower.to_vec();
    let mut up = upper.to_vec();
    for &(j, l, u) in changes {
        lo[j] = l;
        up[j] = u;
    }
    (lo, up)
}

fn spx_bounds(spx: &Simplex<'_>, n: usize) -> (Vec<f64>, Vec<f64>) {
    (0..n).map(|j| spx.bounds(j)).unzip()
}

/// Accepts `values` as the new incumbent if it passes the independent check and improves.
fn offer(model: &Model, incumbent: &mut Option<Incumbent>, values: Vec<f64>) {
    if !model.check(&values, CHECK_TOL).is_empty() {
        log::trace!("candidate rejected by constraint check");
        return;
    }
    let objective = model.objective_value(&values);
    if incumbent.as_ref().is_none_or(|i| objective < i.objective - 1e-9) {
        log::debug!("new incumbent {objective}");
        *incumbent = Some(Incumbent { objective, values });
    }
}

/// Lock-based rounding: integer variables are rounded in a direction that cannot
/// break any row when possible, then violated rows are repaired by moving
/// variables that are free to move in the repairing direction.
struct Rounding {
    up_locks: Vec<u32>,
    down_locks: Vec<u32>,
    cols: Vec<Vec<(usize, f64)>>,
    int_vars: Vec<usize>,
}

impl Rounding {
    fn new(model: &Model) -> Self {
        let n = model.num_vars();
        let mut up_locks = vec![0u32; n];
        let mut down_locks = vec![0u32; n];
        let mut cols = vec![Vec::new(); n];
        for (i, row) in model.constraints().iter().enumerate() {
            for &(v, c) in &row.terms {
                cols[v.0].push((i, c));
                let (up, down) = match (row.cmp, c > 0.0) {
                    (Comparator::Eq, _) => (true, true),
                    (Comparator::Le, true) | (Comparator::Ge, false) => (true, false),
                    (Comparator::Le, false) | (Comparator::Ge, true) => (false, true),
                };
                up_locks[v.0] += up as u32;
                down_locks[v.0] += down as u32;
            }
        }
        Rounding {
            up_locks,
            down_locks,
            cols,
            int_vars: model.integer_vars().map(|v| v.0).collect(),
        }
    }

    fn round(&self, model: &Model, values: &[f64], bounds: &(Vec<f64>, Vec<f64>)) -> Vec<f64> {
        let (lower, upper) = bounds;
        let mut y = values.to_vec();
        for &j in &self.int_vars {
            let x = y[j];
            if (x - x.round()).abs() <= INTEGRALITY_TOL {
                y[j] = x.round();
            } else if self.down_locks[j] == 0 {
                y[j] = x.floor();
            } else {
                y[j] = x.ceil();
            }
            y[j] = y[j].clamp(lower[j], upper[j]);
        }
        let rows = model.constraints();
        let mut activity: Vec<f64> = rows.iter().map(|r| r.activity(&y)).collect();
        for (i, row) in rows.iter().enumerate() {
            let deficit = match row.cmp {
                Comparator::Ge => row.rhs - activity[i],
                Comparator::Le => activity[i] - row.rhs,
                Comparator::Eq => continue,
            };
            if deficit <= 1e-9 {
                continue;
            }
            let mut remaining = deficit;
            for &(v, c) in &row.terms {
                if remaining <= 1e-9 {
                    break;
                }
                let j = v.0;
                if !model.var(v).kind.is_integral() {
                    continue;
                }
                // Direction that reduces the deficit on this row.
                let increase = (row.cmp == Comparator::Ge) == (c > 0.0);
                let free = if increase {
                    self.up_locks[j] == 0
                } else {
                    self.down_locks[j] == 0
                };
                if !free {
                    continue;
                }
                let step = (remaining / c.abs() - 1e-9).ceil();
                let new = if increase {
                    (y[j] + step).min(upper[j])
                } else {
                    (y[j] - step).max(lower[j])
                };
                let delta = new - y[j];
                if delta == 0.0 {
                    continue;
                }
                y[j] = new;
                for &(r, a) in &self.cols[j] {
                    activity[r] += a * delta;
                }
                remaining -= (c * delta).abs();
            }
        }
        y
    }
}
