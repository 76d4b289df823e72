//! A small exact MILP engine.
//!
//! LP relaxations are solved with a bounded-variable revised simplex
//! ([`solve_lp`]); integer programs go through best-first branch-and-bound
//! ([`solve_milp`]). Models can be written in the LP text format understood by
//! mainstream solvers and external solutions read back ([`lp_format`]).

pub mod bnb;
pub mod lp_format;
pub mod model;
pub mod simplex;
pub mod testing;

pub use bnb::{solve_milp, Budget, MilpError, MilpSolution, MilpStatus};
pub use lp_format::{export_lp_text, parse_solution_text, ExportError};
pub use model::{Comparator, Constraint, Model, ModelError, RowId, VarId, VarKind, Variable, Violation};
pub use simplex::{solve_lp, LpError, LpSolution, LpStatus};

/// Anything that can solve a [`Model`] under a [`Budget`].
///
/// Problem builders only talk to this trait, so an external solver fed through
/// LP files can stand in for the built-in engine.
pub trait MilpSolver {
    fn solve(&self, model: &Model, budget: &Budget) -> Result<MilpSolution, MilpError>;
}

/// The built-in branch-and-bound engine.
#[derive(Debug, Default, Clone, Copy)]
pub struct BranchAndBound;

impl MilpSolver for BranchAndBound {
    fn solve(&self, model: &Model, budget: &Budget) -> Result<MilpSolution, MilpError> {
        solve_milp(model, budget)
    }
}
