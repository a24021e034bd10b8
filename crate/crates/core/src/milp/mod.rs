//! MILP representation, an embedded simplex/branch-and-bound solver and LP-format I/O.

pub mod bnb;
pub mod lpfile;
pub mod model;
pub mod simplex;

pub use bnb::{solve, MipSolution, MipStatus, NodeRecord, SolveOptions};
pub use lpfile::{parse_lp, write_lp};
pub use model::{Constraint, MilpModel, Sense, VarId, VarKind, Variable};
pub use simplex::{solve_lp, LpOptions, LpSolution, LpStatus};
