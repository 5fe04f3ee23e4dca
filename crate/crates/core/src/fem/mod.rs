//! P1 finite elements: quadrature, sparse storage, assembly and the linear solver.

pub mod assembly;
pub mod field;
pub mod quadrature;
pub mod solver;
pub mod sparse;

pub use assembly::{assemble_damage, assemble_elasticity, assemble_heat, FemSpace, HeatStep, LinearSystem, QuadValues};
pub use field::NodalField;
pub use solver::{cholesky, pcg, SolveStats, SolverMethod, SolverOptions, SymbolicCache};
pub use sparse::{CsrMatrix, Pattern};
