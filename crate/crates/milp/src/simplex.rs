//! Bounded-variable revised simplex.
//!
//! Every row `a x (<=|=|>=) b` gets a logical column `s` so that `a x + s = b`,
//! with `s` in `[0, inf)`, `[0, 0]` or `(-inf, 0]`. The basis inverse is kept
//! explicitly (dense, row-major) and refreshed by Gauss-Jordan elimination every
//! [`REFACTOR_EVERY`] pivots. Both a primal (composite phase 1 / phase 2) and a
//! dual method are provided; branch-and-bound re-optimizes children with the dual.

use std::fmt;

use thiserror::Error;

use crate::model::{Comparator, Model};

pub const FEASIBILITY_TOL: f64 = 1e-7;
pub const OPTIMALITY_TOL: f64 = 1e-7;

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;
const DEGENERATE_BEFORE_BLAND: usize = 60;
const DUAL_STALL: usize = 5000;
const COST_PERTURBATION: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("numerical breakdown: {0}")]
    Numerical(String),
    #[error("iteration limit of {0} reached")]
    IterationLimit(usize),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl fmt::Display for LpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Values of the model's variables (empty unless optimal).
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// Solves the LP relaxation of `model` (integrality is ignored).
pub fn solve_lp(model: &Model) -> Result<LpSolution, LpError> {
    model.validate()?;
    let sf = StandardForm::from_model(model);
    let mut spx = Simplex::new(&sf);
    let status = spx.solve()?;
    let values = if status == LpStatus::Optimal {
        spx.structural_values()
    } else {
        Vec::new()
    };
    let objective = if status == LpStatus::Optimal {
        model.objective_value(&values)
    } else {
        f64::NAN
    };
    Ok(LpSolution {
        status,
        values,
        objective,
        iterations: spx.iterations,
    })
}

/// Column-compressed copy of a model plus one logical column per row.
#[derive(Debug, Clone)]
pub(crate) struct StandardForm {
    pub m: usize,
    pub n: usize,
    col_start: Vec<usize>,
    row_idx: Vec<usize>,
    vals: Vec<f64>,
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    rhs: Vec<f64>,
}

impl StandardForm {
    pub fn from_model(model: &Model) -> Self {
        let n = model.num_vars();
        let m = model.num_constraints();
        let mut counts = vec![0usize; n];
        for row in model.constraints() {
            for &(v, _) in &row.terms {
                counts[v.0] += 1;
            }
        }
        let mut col_start = vec![0usize; n + 1];
        for j in 0..n {
            col_start[j + 1] = col_start[j] + counts[j];
        }
        let nnz = col_start[n];
        let mut row_idx = vec![0usize; nnz];
        let mut vals = vec![0.0; nnz];
        let mut fill = col_start.clone();
        for (i, row) in model.constraints().iter().enumerate() {
            for &(v, c) in &row.terms {
                let k = fill[v.0];
                row_idx[k] = i;
                vals[k] = c;
                fill[v.0] += 1;
            }
        }
        let mut cost = vec![0.0; n + m];
        for &(v, c) in model.objective() {
            cost[v.0] += c;
        }
        let mut lower = Vec::with_capacity(n + m);
        let mut upper = Vec::with_capacity(n + m);
        for v in model.vars() {
            lower.push(v.lower);
            upper.push(v.upper);
        }
        let mut rhs = Vec::with_capacity(m);
        for row in model.constraints() {
            let (l, u) = match row.cmp {
                Comparator::Le => (0.0, f64::INFINITY),
                Comparator::Ge => (f64::NEG_INFINITY, 0.0),
                Comparator::Eq => (0.0, 0.0),
            };
            lower.push(l);
            upper.push(u);
            rhs.push(row.rhs);
        }
        StandardForm {
            m,
            n,
            col_start,
            row_idx,
            vals,
            cost,
            lower,
            upper,
            rhs,
        }
    }

    #[inline]
    fn for_each_in_col(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for k in self.col_start[j]..self.col_start[j + 1] {
                f(self.row_idx[k], self.vals[k]);
            }
        } else {
            f(j - self.n, 1.0);
        }
    }

    #[inline]
    fn dot_col(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            let mut s = 0.0;
            for k in self.col_start[j]..self.col_start[j + 1] {
                s += y[self.row_idx[k]] * self.vals[k];
            }
            s
        } else {
            y[j - self.n]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum VarState {
    Basic,
    AtLower,
    AtUpper,
    Free,
}

/// Saved basis used to warm-start a node.
#[derive(Debug, Clone)]
pub(crate) struct Basis {
    basis: Vec<usize>,
    state: Vec<VarState>,
}

pub(crate) struct Simplex<'a> {
    sf: &'a StandardForm,
    lower: Vec<f64>,
    upper: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    x: Vec<f64>,
    /// Working costs; shifted while the dual method runs.
    cost: Vec<f64>,
    binv: Vec<f64>,
    since_refactor: usize,
    /// Pivots and bound flips over the lifetime of this instance.
    pub iterations: usize,
    /// Per call to [`Simplex::solve`].
    iteration_limit: usize,
    solve_start: usize,
}

enum Phase {
    One,
    Two,
}

impl<'a> Simplex<'a> {
    /// Slack basis with every structural at its lower bound (or upper, or 0 when free).
    pub fn new(sf: &'a StandardForm) -> Self {
        let total = sf.n + sf.m;
        let mut state = vec![VarState::AtLower; total];
        for (j, st) in state.iter_mut().enumerate().take(sf.n) {
            *st = nonbasic_state(sf.lower[j], sf.upper[j]);
        }
        let mut basis = Vec::with_capacity(sf.m);
        for i in 0..sf.m {
            state[sf.n + i] = VarState::Basic;
            basis.push(sf.n + i);
        }
        let mut binv = vec![0.0; sf.m * sf.m];
        for i in 0..sf.m {
            binv[i * sf.m + i] = 1.0;
        }
        let mut spx = Simplex {
            sf,
            lower: sf.lower.clone(),
            upper: sf.upper.clone(),
            state,
            basis,
            x: vec![0.0; total],
            cost: sf.cost.clone(),
            binv,
            since_refactor: 0,
            iterations: 0,
            iteration_limit: 200 * (sf.m + sf.n) + 20_000,
            solve_start: 0,
        };
        spx.compute_x();
        spx
    }

    pub fn structural_values(&self) -> Vec<f64> {
        self.x[..self.sf.n].to_vec()
    }

    /// Objective of the current point, without the model offset.
    #[cfg(test)]
    pub fn objective(&self) -> f64 {
        (0..self.sf.n).map(|j| self.sf.cost[j] * self.x[j]).sum()
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    /// Changes the bounds of structural `j`; nonbasic values follow their bound.
    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
        if self.state[j] != VarState::Basic {
            let st = match self.state[j] {
                VarState::AtUpper if upper.is_finite() => VarState::AtUpper,
                _ => nonbasic_state(lower, upper),
            };
            self.state[j] = st;
        }
        self.compute_x();
    }

    pub fn snapshot(&self) -> Basis {
        Basis {
            basis: self.basis.clone(),
            state: self.state.clone(),
        }
    }

    pub fn restore(&mut self, b: &Basis, lower: &[f64], upper: &[f64]) -> Result<(), LpError> {
        self.basis.clone_from(&b.basis);
        self.state.clone_from(&b.state);
        self.lower[..self.sf.n].copy_from_slice(lower);
        self.upper[..self.sf.n].copy_from_slice(upper);
        for j in 0..self.sf.n {
            if self.state[j] != VarState::Basic {
                self.state[j] = match self.state[j] {
                    VarState::AtUpper if upper[j].is_finite() => VarState::AtUpper,
                    _ => nonbasic_state(lower[j], upper[j]),
                };
            }
        }
        self.refactor()?;
        self.compute_x();
        Ok(())
    }

    /// Back to the all-slack basis under new structural bounds.
    pub fn reset(&mut self, lower: &[f64], upper: &[f64]) -> Result<(), LpError> {
        let n = self.sf.n;
        let mut state = vec![VarState::AtLower; n + self.sf.m];
        for (j, st) in state.iter_mut().enumerate().take(n) {
            *st = nonbasic_state(lower[j], upper[j]);
        }
        let basis: Vec<usize> = (n..n + self.sf.m).collect();
        for &j in &basis {
            state[j] = VarState::Basic;
        }
        self.restore(&Basis { basis, state }, lower, upper)
    }

    /// Picks the dual method when the current basis is dual feasible, primal otherwise.
    pub fn solve(&mut self) -> Result<LpStatus, LpError> {
        self.solve_start = self.iterations;
        let mut use_dual = true;
        loop {
            let status = if use_dual && self.max_primal_infeasibility() > PRIMAL_TOL && self.is_dual_feasible() {
                self.perturb_costs();
                let st = self.dual();
                self.cost.clone_from(&self.sf.cost);
                match st? {
                    Some(LpStatus::Optimal) => {
                        // The shifted costs may leave a few wrong-signed reduced costs.
                        if !self.is_dual_feasible() {
                            continue;
                        }
                        LpStatus::Optimal
                    }
                    Some(st) => st,
                    None => {
                        log::debug!("dual simplex stalled after {} iterations, switching to primal", self.iterations - self.solve_start);
                        use_dual = false;
                        continue;
                    }
                }
            } else {
                self.primal()?
            };
            if status != LpStatus::Optimal {
                return Ok(status);
            }
            // Fresh inverse before declaring victory.
            if self.since_refactor > 0 {
                self.refactor()?;
                self.compute_x();
                if self.max_primal_infeasibility() > PRIMAL_TOL || !self.is_dual_feasible() {
                    continue;
                }
            }
            return Ok(LpStatus::Optimal);
        }
    }

    /// Small deterministic cost shifts that keep nonbasic reduced costs on their feasible side.
    fn perturb_costs(&mut self) {
        for j in 0..self.sf.n + self.sf.m {
            if self.lower[j] == self.upper[j] {
                continue;
            }
            let shift = COST_PERTURBATION * (1.0 + self.sf.cost[j].abs()) * (1.0 + (j as f64 * 0.618_033_988_7).fract());
            match self.state[j] {
                VarState::AtLower => self.cost[j] += shift,
                VarState::AtUpper => self.cost[j] -= shift,
                _ => {}
            }
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::AtLower => self.lower[j],
            VarState::AtUpper => self.upper[j],
            VarState::Free => 0.0,
            VarState::Basic => self.x[j],
        }
    }

    fn compute_x(&mut self) {
        let m = self.sf.m;
        let total = self.sf.n + m;
        let mut r = self.sf.rhs.clone();
        for j in 0..total {
            if self.state[j] != VarState::Basic {
                let v = self.nonbasic_value(j);
                self.x[j] = v;
                if v != 0.0 {
                    self.sf.for_each_in_col(j, |i, a| r[i] -= a * v);
                }
            }
        }
        for p in 0..m {
            let row = &self.binv[p * m..(p + 1) * m];
            let v: f64 = row.iter().zip(&r).map(|(a, b)| a * b).sum();
            self.x[self.basis[p]] = v;
        }
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lower[j] {
            self.lower[j] - v
        } else if v > self.upper[j] {
            v - self.upper[j]
        } else {
            0.0
        }
    }

    fn max_primal_infeasibility(&self) -> f64 {
        self.basis.iter().map(|&j| self.infeasibility(j)).fold(0.0, f64::max)
    }

    fn duals(&self, cb: &[f64]) -> Vec<f64> {
        let m = self.sf.m;
        let mut y = vec![0.0; m];
        for (p, &c) in cb.iter().enumerate() {
            if c != 0.0 {
                let row = &self.binv[p * m..(p + 1) * m];
                for (yi, a) in y.iter_mut().zip(row) {
                    *yi += c * a;
                }
            }
        }
        y
    }

    fn phase_two_duals(&self) -> Vec<f64> {
        let cb: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
        self.duals(&cb)
    }

    fn is_dual_feasible(&self) -> bool {
        let y = self.phase_two_duals();
        (0..self.sf.n + self.sf.m).all(|j| {
            let d = self.cost[j] - self.sf.dot_col(j, &y);
            match self.state[j] {
                VarState::Basic => true,
                _ if self.lower[j] == self.upper[j] => true,
                VarState::AtLower => d >= -DUAL_TOL,
                VarState::AtUpper => d <= DUAL_TOL,
                VarState::Free => d.abs() <= DUAL_TOL,
            }
        })
    }

    /// Column `j` expressed in the current basis: `B^-1 a_j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.sf.m;
        let mut out = vec![0.0; m];
        self.sf.for_each_in_col(j, |i, a| {
            for (p, o) in out.iter_mut().enumerate() {
                *o += a * self.binv[p * m + i];
            }
        });
        out
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64]) {
        let m = self.sf.m;
        let piv = alpha[r];
        {
            let row_r = &mut self.binv[r * m..(r + 1) * m];
            for v in row_r.iter_mut() {
                *v /= piv;
            }
        }
        let row_r: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
        for (p, &a) in alpha.iter().enumerate() {
            if p != r && a != 0.0 {
                let row = &mut self.binv[p * m..(p + 1) * m];
                for (v, rr) in row.iter_mut().zip(&row_r) {
                    *v -= a * rr;
                }
            }
        }
        self.basis[r] = q;
        self.state[q] = VarState::Basic;
        self.since_refactor += 1;
        self.iterations += 1;
    }

    /// Rebuilds the basis inverse; dependent columns are swapped for logicals.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.sf.m;
        self.since_refactor = 0;
        if m == 0 {
            return Ok(());
        }
        for attempt in 0..3 {
            match invert(self.sf, &self.basis) {
                Ok(inv) => {
                    self.binv = inv;
                    return Ok(());
                }
                Err(bad) => {
                    if attempt == 2 {
                        break;
                    }
                    self.repair(&bad);
                }
            }
        }
        Err(LpError::Numerical(format!(
            "basis of dimension {m} stays singular after repair"
        )))
    }

    fn repair(&mut self, singular: &SingularBasis) {
        for (&pos, &row) in singular.positions.iter().zip(&singular.free_rows) {
            let out = self.basis[pos];
            self.state[out] = nonbasic_state(self.lower[out], self.upper[out]);
            let slack = self.sf.n + row;
            if self.state[slack] == VarState::Basic {
                continue;
            }
            self.basis[pos] = slack;
            self.state[slack] = VarState::Basic;
        }
        log::debug!("repaired {} singular basis columns", singular.positions.len());
    }

    fn check_iterations(&self) -> Result<(), LpError> {
        if self.iterations - self.solve_start > self.iteration_limit {
            Err(LpError::IterationLimit(self.iteration_limit))
        } else {
            Ok(())
        }
    }

    fn primal(&mut self) -> Result<LpStatus, LpError> {
        let n_total = self.sf.n + self.sf.m;
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            self.check_iterations()?;
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
                self.compute_x();
            }
            let infeasible = self.max_primal_infeasibility() > PRIMAL_TOL;
            let phase = if infeasible { Phase::One } else { Phase::Two };
            let cb: Vec<f64> = match phase {
                Phase::One => self
                    .basis
                    .iter()
                    .map(|&j| {
                        if self.x[j] < self.lower[j] - PRIMAL_TOL {
                            -1.0
                        } else if self.x[j] > self.upper[j] + PRIMAL_TOL {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect(),
                Phase::Two => self.basis.iter().map(|&j| self.cost[j]).collect(),
            };
            let y = self.duals(&cb);

            // Pricing.
            let mut best: Option<(usize, f64, f64)> = None; // (j, direction, score)
            for j in 0..n_total {
                let st = self.state[j];
                if st == VarState::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let cj = match phase {
                    Phase::One => 0.0,
                    Phase::Two => self.cost[j],
                };
                let d = cj - self.sf.dot_col(j, &y);
                let dir = match st {
                    VarState::AtLower if d < -DUAL_TOL => 1.0,
                    VarState::AtUpper if d > DUAL_TOL => -1.0,
                    VarState::Free if d.abs() > DUAL_TOL => -d.signum(),
                    _ => continue,
                };
                let score = d.abs();
                if bland {
                    best = Some((j, dir, score));
                    break;
                }
                if best.is_none_or(|b| score > b.2) {
                    best = Some((j, dir, score));
                }
            }
            let Some((q, dir, _)) = best else {
                return Ok(if infeasible {
                    LpStatus::Infeasible
                } else {
                    LpStatus::Optimal
                });
            };

            let alpha = self.ftran(q);
            // Ratio test: x_B(t) = x_B - t * dir * alpha, x_q(t) = x_q + dir * t.
            let mut t_best = self.upper[q] - self.lower[q];
            let mut leave: Option<(usize, bool)> = None; // (position, leaves at upper)
            let mut best_piv = 0.0;
            for (p, &a) in alpha.iter().enumerate() {
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let j = self.basis[p];
                let rate = dir * a;
                let (xj, lj, uj) = (self.x[j], self.lower[j], self.upper[j]);
                let cand = if rate > 0.0 {
                    if xj > uj + PRIMAL_TOL {
                        Some(((xj - uj) / rate, true))
                    } else if xj < lj - PRIMAL_TOL || lj == f64::NEG_INFINITY {
                        None
                    } else {
                        Some((((xj - lj) / rate).max(0.0), false))
                    }
                } else if xj < lj - PRIMAL_TOL {
                    Some(((lj - xj) / -rate, false))
                } else if xj > uj + PRIMAL_TOL || uj == f64::INFINITY {
                    None
                } else {
                    Some((((uj - xj) / -rate).max(0.0), true))
                };
                let Some((t, at_upper)) = cand else { continue };
                // Ties with a pure bound flip keep the flip.
                let better = if t < t_best - 1e-12 {
                    true
                } else if t <= t_best + 1e-12 {
                    match leave {
                        Some((lp, _)) if bland => j < self.basis[lp],
                        Some(_) => a.abs() > best_piv,
                        None => false,
                    }
                } else {
                    false
                };
                if better {
                    t_best = t;
                    leave = Some((p, at_upper));
                    best_piv = a.abs();
                }
            }
            if t_best == f64::INFINITY {
                return match phase {
                    Phase::Two => Ok(LpStatus::Unbounded),
                    Phase::One => Err(LpError::Numerical(
                        "unbounded ray in phase one".to_string(),
                    )),
                };
            }
            if t_best < 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_BEFORE_BLAND {
                    bland = true;
                }
            } else {
                degenerate = 0;
                bland = false;
            }
            let step = dir * t_best;
            for (p, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    let j = self.basis[p];
                    self.x[j] -= step * a;
                }
            }
            self.x[q] += step;
            match leave {
                None => {
                    // Bound flip.
                    self.state[q] = if dir > 0.0 {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                    self.x[q] = self.nonbasic_value(q);
                    self.iterations += 1;
                }
                Some((r, at_upper)) => {
                    let out = self.basis[r];
                    self.pivot(r, q, &alpha);
                    self.state[out] = if at_upper {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                    if self.lower[out] == f64::NEG_INFINITY && self.upper[out] == f64::INFINITY {
                        self.state[out] = VarState::Free;
                    }
                    self.x[out] = self.nonbasic_value(out);
                }
            }
        }
    }

    /// `None` when a long run of degenerate pivots suggests stalling.
    fn dual(&mut self) -> Result<Option<LpStatus>, LpError> {
        let n_total = self.sf.n + self.sf.m;
        let m = self.sf.m;
        let stall = DUAL_STALL;
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            self.check_iterations()?;
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
                self.compute_x();
            }
            // Leaving row.
            let mut leave: Option<(usize, f64)> = None;
            for p in 0..m {
                let j = self.basis[p];
                let inf = self.infeasibility(j);
                if inf > PRIMAL_TOL {
                    if bland {
                        if leave.is_none_or(|(lp, _)| j < self.basis[lp]) {
                            leave = Some((p, inf));
                        }
                    } else if leave.is_none_or(|(_, v)| inf > v) {
                        leave = Some((p, inf));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Ok(Some(LpStatus::Optimal));
            };
            let out = self.basis[r];
            let to_lower = self.x[out] < self.lower[out];
            let y = self.phase_two_duals();
            let rho = &self.binv[r * m..(r + 1) * m];

            let mut best: Option<(usize, f64, f64)> = None; // (j, ratio, |alpha|)
            for j in 0..n_total {
                let st = self.state[j];
                if st == VarState::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let a = self.sf.dot_col(j, rho);
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let eligible = match (st, to_lower) {
                    (VarState::Free, _) => true,
                    (VarState::AtLower, true) => a < 0.0,
                    (VarState::AtUpper, true) => a > 0.0,
                    (VarState::AtLower, false) => a > 0.0,
                    (VarState::AtUpper, false) => a < 0.0,
                    _ => false,
                };
                if !eligible {
                    continue;
                }
                let d = self.cost[j] - self.sf.dot_col(j, &y);
                let ratio = (d.abs() / a.abs()).max(0.0);
                let better = match best {
                    None => true,
                    Some((bj, br, ba)) => {
                        if ratio < br - 1e-12 {
                            true
                        } else if ratio <= br + 1e-12 {
                            if bland {
                                j < bj
                            } else {
                                a.abs() > ba
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    best = Some((j, ratio, a.abs()));
                }
            }
            let Some((q, ratio, _)) = best else {
                return Ok(Some(LpStatus::Infeasible));
            };
            if ratio < 1e-12 {
                degenerate += 1;
                if degenerate > stall {
                    return Ok(None);
                }
                if degenerate > DEGENERATE_BEFORE_BLAND {
                    bland = true;
                }
            } else {
                degenerate = 0;
                bland = false;
            }
            let alpha = self.ftran(q);
            let target = if to_lower {
                self.lower[out]
            } else {
                self.upper[out]
            };
            let delta = (self.x[out] - target) / alpha[r];
            for (p, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    let j = self.basis[p];
                    self.x[j] -= a * delta;
                }
            }
            self.x[q] += delta;
            self.pivot(r, q, &alpha);
            self.state[out] = if to_lower {
                VarState::AtLower
            } else {
                VarState::AtUpper
            };
            self.x[out] = target;
        }
    }
}

fn nonbasic_state(lower: f64, upper: f64) -> VarState {
    if lower.is_finite() {
        VarState::AtLower
    } else if upper.is_finite() {
        VarState::AtUpper
    } else {
        VarState::Free
    }
}

struct SingularBasis {
    positions: Vec<usize>,
    free_rows: Vec<usize>,
}

/// Gauss-Jordan inversion of the basis matrix with partial pivoting.
/// Logical columns are pivoted first; they need no elimination.
fn invert(sf: &StandardForm, basis: &[usize]) -> Result<Vec<f64>, SingularBasis> {
    let m = sf.m;
    let mut mat = vec![0.0; m * m];
    for (p, &j) in basis.iter().enumerate() {
        sf.for_each_in_col(j, |i, a| mat[i * m + p] = a);
    }
    let mut inv = vec![0.0; m * m];
    for i in 0..m {
        inv[i * m + i] = 1.0;
    }
    let mut row_of_pos = vec![usize::MAX; m];
    let mut row_used = vec![false; m];
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&p| (basis[p] < sf.n, sf_col_len(sf, basis[p])));
    let mut bad = Vec::new();
    for &p in &order {
        let mut piv_row = usize::MAX;
        let mut piv_val = 0.0;
        for i in 0..m {
            if !row_used[i] {
                let v = mat[i * m + p].abs();
                if v > piv_val {
                    piv_val = v;
                    piv_row = i;
                }
            }
        }
        if piv_val < 1e-11 {
            bad.push(p);
            continue;
        }
        row_used[piv_row] = true;
        row_of_pos[p] = piv_row;
        let pv = mat[piv_row * m + p];
        let prow_mat: Vec<f64> = mat[piv_row * m..(piv_row + 1) * m].iter().map(|v| v / pv).collect();
        let prow_inv: Vec<f64> = inv[piv_row * m..(piv_row + 1) * m].iter().map(|v| v / pv).collect();
        mat[piv_row * m..(piv_row + 1) * m].copy_from_slice(&prow_mat);
        inv[piv_row * m..(piv_row + 1) * m].copy_from_slice(&prow_inv);
        let nz_mat: Vec<usize> = (0..m).filter(|&c| prow_mat[c] != 0.0).collect();
        let nz_inv: Vec<usize> = (0..m).filter(|&c| prow_inv[c] != 0.0).collect();
        for i in 0..m {
            if i == piv_row {
                continue;
            }
            let f = mat[i * m + p];
            if f == 0.0 {
                continue;
            }
            for &c in &nz_mat {
                mat[i * m + c] -= f * prow_mat[c];
            }
            mat[i * m + p] = 0.0;
            for &c in &nz_inv {
                inv[i * m + c] -= f * prow_inv[c];
            }
        }
    }
    if !bad.is_empty() {
        let free_rows: Vec<usize> = (0..m).filter(|&i| !row_used[i]).collect();
        return Err(SingularBasis {
            positions: bad,
            free_rows,
        });
    }
    let mut out = vec![0.0; m * m];
    for p in 0..m {
        let r = row_of_pos[p];
        out[p * m..(p + 1) * m].copy_from_slice(&inv[r * m..(r + 1) * m]);
    }
    Ok(out)
}

fn sf_col_len(sf: &StandardForm, j: usize) -> usize {
    if j < sf.n {
        sf.col_start[j + 1] - sf.col_start[j]
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Comparator::*, Model};

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-7
    }

    #[test]
    fn lower_bound_row() {
        let mut m = Model::new("lb");
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        m.add_constraint("c", [(x, 1.0)], Ge, 3.0);
        m.set_objective([(x, 1.0)]);
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(approx(s.values[0], 3.0));
        assert!(approx(s.objective, 3.0));
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut m = Model::new("inf");
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        m.add_constraint("c", [(x, 1.0)], Le, -1.0);
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_direction() {
        let mut m = Model::new("unb");
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        let y = m.add_continuous("y", 0.0, f64::INFINITY);
        m.add_constraint("c", [(x, 1.0), (y, -1.0)], Le, 1.0);
        m.set_objective([(y, -1.0)]);
        assert_eq!(solve_lp(&m).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn no_rows_uses_bounds() {
        let mut m = Model::new("bounds");
        let x = m.add_continuous("x", -2.0, 5.0);
        let y = m.add_continuous("y", 1.0, 4.0);
        m.set_objective([(x, -1.0), (y, 1.0)]);
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.values, vec![5.0, 1.0]);
    }

    #[test]
    fn free_variable_equality_system() {
        // x + y = 4, x - y = 2 with free variables.
        let mut m = Model::new("free");
        let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY);
        let y = m.add_continuous("y", f64::NEG_INFINITY, f64::INFINITY);
        m.add_constraint("a", [(x, 1.0), (y, 1.0)], Eq, 4.0);
        m.add_constraint("b", [(x, 1.0), (y, -1.0)], Eq, 2.0);
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(approx(s.values[0], 3.0) && approx(s.values[1], 1.0));
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut m = Model::new("redundant");
        let x = m.add_continuous("x", 0.0, 10.0);
        let y = m.add_continuous("y", 0.0, 10.0);
        m.add_constraint("a", [(x, 1.0), (y, 1.0)], Eq, 4.0);
        m.add_constraint("b", [(x, 2.0), (y, 2.0)], Eq, 8.0);
        m.set_objective([(x, 1.0), (y, 2.0)]);
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(approx(s.objective, 4.0));
    }

    #[test]
    fn dual_resolve_after_bound_change() {
        let mut m = Model::new("warm");
        let x = m.add_continuous("x", 0.0, 10.0);
        let y = m.add_continuous("y", 0.0, 10.0);
        m.add_constraint("a", [(x, 1.0), (y, 1.0)], Ge, 3.5);
        m.set_objective([(x, 1.0), (y, 1.5)]);
        let sf = StandardForm::from_model(&m);
        let mut spx = Simplex::new(&sf);
        assert_eq!(spx.solve().unwrap(), LpStatus::Optimal);
        assert!(approx(spx.objective(), 3.5));
        spx.set_bounds(0, 0.0, 3.0);
        assert_eq!(spx.solve().unwrap(), LpStatus::Optimal);
        assert!(approx(spx.objective(), 3.0 + 0.75));
        spx.set_bounds(1, 0.0, 0.0);
        assert_eq!(spx.solve().unwrap(), LpStatus::Infeasible);
    }
}
