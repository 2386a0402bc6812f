//! Finite element building blocks: quadrature rules, CSR matrices with a
//! reusable assembly pattern, linear solvers, dof spaces over a mesh, and
//! the element kernels shared by the descent subproblems.

pub mod assemble;
pub mod quadrature;
pub mod solver;
pub mod space;
pub mod sparse;

pub use assemble::CellGeom;
pub use quadrature::{quad_rule, QuadPoint, QuadRule};
pub use solver::{linear_solve, set_threads, SolveMethod, SparseLu};
pub use space::{build_space, Space, SpaceKind};
pub use sparse::{Pattern, SparseMatrix};
