//! Rule containment and overlap, policy consistency and normalisation,
//! conflict detection, and the world-enumeration oracle.
//!
//! Every decision reduces to a search over a [`WitnessDomain`]: a finite set
//! of probe values per feature covering every region the compared rules can
//! tell apart.

mod conflict;
mod domain;
mod normalize;
mod oracle;
mod relations;
mod search;

use thiserror::Error;

use crate::matcher::IllFormedRule;

pub use conflict::{
    asymmetric_conflict, asymmetric_conflict_with, symmetric_conflict, symmetric_conflict_with, CompareOptions,
    ConflictCause, ConflictKind, ConflictVerdict, ContainmentFailure, Direction, Method,
};
pub use domain::{ProbeEvents, WitnessDomain};
pub use normalize::{normalize, normalize_with, NormalizeOptions};
pub use oracle::{
    bounded_conflict, bounded_full_counterexample, brute_force_containment, brute_force_counterexample, OracleOptions,
};
pub use relations::{
    check_consistency, containment_counterexample, is_consistent, pairwise_contains, rule_contains, rules_overlap,
    set_contains, Inconsistency,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompareError {
    #[error("search space too large: {what} (limit {limit})")]
    DomainTooLarge { what: String, limit: u128 },
    #[error("normalising rule `{rule}` needs more than {limit} disjuncts")]
    NormalizationBlowup { rule: String, limit: usize },
    #[error("{role} policy is not consistent: {reason}")]
    InconsistentInput { role: &'static str, reason: String },
    #[error(transparent)]
    IllFormedRule(#[from] IllFormedRule),
}

impl CompareError {
    pub fn kind(&self) -> &'static str {
        match self {
            CompareError::DomainTooLarge { .. } => "domain-too-large",
            CompareError::NormalizationBlowup { .. } => "normalization-blowup",
            CompareError::InconsistentInput { .. } => "inconsistent-input",
            CompareError::IllFormedRule(_) => "ill-formed-rule",
        }
    }
}
