//! Evaluation, comparison and query generation for event-based ODRL policies.

pub mod comparator;
pub mod eval;
pub mod evaluator;
pub mod matcher;
pub mod model;
pub mod io;
pub mod query;
pub mod reasoner;

pub use evaluator::{evaluate_full, evaluate_lite, is_valid, EvalError, Evaluate, Finding, FindingClass, ViolationReport};
pub use matcher::{check_well_formed, matches, softmatch};
pub use model::*;
pub use reasoner::{Saturate, SaturationConfig};
