//! Feasibility analysis for linear interference alignment in K-user MIMO
//! interference networks.

pub mod bounds;
pub mod error;
pub mod geometry;
pub mod leakage;
pub mod linalg;
mod lp;
pub mod model;
pub mod polysys;
pub mod proper;
pub mod report;
pub mod solvers;

pub use error::{Error, Result};
pub use model::{parse_system, EquationId, SystemSpec, UserSpec, VariableId};
pub use report::{analyze, AnalyzeOptions, FeasibilityReport, Verdict};
