//! Log-determinant semidefinite programs with group norm regularizers,
//! solved through their dual by a spectral projected gradient method.

pub mod format;
pub mod instance;
pub mod model;
pub mod projections;
pub mod solver;
pub mod symmat;

pub use format::{problem_from_json, problem_to_json, trace_to_csv, FormatError, ReportDoc};
pub use instance::{generate, BlockVariant, Family, InstanceError, InstanceSpec};
pub use model::{
    CompositeVar, ConstraintKind, ConstraintMap, KktResiduals, ModelError, NormOrder, Position, Problem, RegularizerTerm,
};
pub use projections::ProjectionError;
pub use solver::{
    solve, solve_pg_baseline, solve_with_method, solve_with_observer, IterationRecord, IterationTrace, Method,
    SolveReport, SolveStatus, SolverConfig, SolverError, StopRule,
};
pub use symmat::{CholeskyFactor, LinalgError, SymmetricMatrix};
