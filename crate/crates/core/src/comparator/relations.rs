//! Containment, overlap and consistency.

use std::fmt;

use super::domain::WitnessDomain;
use super::search::{any_of, find_witness, none_of, rule_goal};
use super::CompareError;
use crate::evaluator::gate;
use crate::matcher::check_well_formed;
use crate::model::{Condition, Event, EventRule, FeatureSchema, LitePolicy};

/// A schema plus the probe domain of a fixed rule set; all queries must
/// only involve conditions whose constants the domain was built from.
pub(crate) struct Ctx<'a> {
    pub(crate) schema: &'a FeatureSchema,
    pub(crate) domain: WitnessDomain,
}

impl<'a> Ctx<'a> {
    pub(crate) fn new<'r>(
        rules: impl IntoIterator<Item = &'r EventRule>,
        schema: &'a FeatureSchema,
    ) -> Result<Self, CompareError> {
        Ok(Ctx { schema, domain: WitnessDomain::for_rules(rules, schema)? })
    }

    pub(crate) fn witness(&self, goal: &Condition) -> Option<Event> {
        find_witness(goal, &self.domain, self.schema)
    }

    pub(crate) fn example(&self, rule: &EventRule) -> Option<Event> {
        self.witness(&rule_goal(rule))
    }

    /// An event matching `a` but not `b`.
    pub(crate) fn not_contained(&self, a: &EventRule, b: &EventRule) -> Option<Event> {
        self.witness(&Condition::And(vec![rule_goal(a), Condition::negate(rule_goal(b))]))
    }

    pub(crate) fn contains(&self, a: &EventRule, b: &EventRule) -> bool {
        self.not_contained(a, b).is_none()
    }

    pub(crate) fn implies(&self, a: &EventRule, c: &Condition) -> bool {
        self.witness(&Condition::And(vec![rule_goal(a), Condition::negate(c.clone())])).is_none()
    }

    pub(crate) fn overlaps(&self, a: &EventRule, b: &EventRule) -> bool {
        self.witness(&Condition::And(vec![rule_goal(a), rule_goal(b)])).is_some()
    }

    /// An event matching some rule of `left` and no rule of `right`.
    pub(crate) fn set_not_contained(&self, left: &[EventRule], right: &[EventRule]) -> Option<Event> {
        self.witness(&Condition::And(vec![any_of(left), none_of(right)]))
    }

    pub(crate) fn inconsistency(&self, p: &LitePolicy) -> Option<Inconsistency> {
        for f in p.prohibitions() {
            for r in p.permissions() {
                if self.overlaps(r, f) {
                    return Some(Inconsistency::PermissionOverlapsProhibition {
                        permission: label(r),
                        prohibition: label(f),
                    });
                }
            }
            for o in p.obligations() {
                if self.overlaps(o, f) {
                    return Some(Inconsistency::ObligationOverlapsProhibition {
                        obligation: label(o),
                        prohibition: label(f),
                    });
                }
            }
        }
        for o in p.obligations() {
            if self.set_not_contained(std::slice::from_ref(o), p.permissions()).is_some() {
                return Some(Inconsistency::ObligationNotPermitted { obligation: label(o) });
            }
        }
        None
    }
}

pub(crate) fn label(rule: &EventRule) -> String {
    rule.label().unwrap_or("<unlabelled>").to_string()
}

fn strict(rules: &[&EventRule], schema: &FeatureSchema) -> Result<(), CompareError> {
    for rule in rules {
        if let Some(v) = check_well_formed(rule, schema).violations.into_iter().next() {
            return Err(CompareError::IllFormedRule(v.into()));
        }
    }
    Ok(())
}

/// An event matching `a` but not `b`, if there is one.
pub fn containment_counterexample(
    a: &EventRule,
    b: &EventRule,
    schema: &FeatureSchema,
) -> Result<Option<Event>, CompareError> {
    strict(&[a, b], schema)?;
    Ok(Ctx::new([a, b], schema)?.not_contained(a, b))
}

/// τ ⊑ τ′: every event matching `a` also matches `b`.
pub fn rule_contains(a: &EventRule, b: &EventRule, schema: &FeatureSchema) -> Result<bool, CompareError> {
    Ok(containment_counterexample(a, b, schema)?.is_none())
}

/// Some event matches both rules.
pub fn rules_overlap(a: &EventRule, b: &EventRule, schema: &FeatureSchema) -> Result<bool, CompareError> {
    strict(&[a, b], schema)?;
    Ok(Ctx::new([a, b], schema)?.overlaps(a, b))
}

/// Every rule of `left` is contained in some single rule of `right`.
/// Sound but incomplete for [`set_contains`].
pub fn pairwise_contains(left: &[EventRule], right: &[EventRule], schema: &FeatureSchema) -> Result<bool, CompareError> {
    let all: Vec<&EventRule> = left.iter().chain(right).collect();
    strict(&all, schema)?;
    let ctx = Ctx::new(all, schema)?;
    Ok(left.iter().all(|a| right.iter().any(|b| ctx.contains(a, b))))
}

/// Every event matching some rule of `left` matches some rule of `right`.
pub fn set_contains(left: &[EventRule], right: &[EventRule], schema: &FeatureSchema) -> Result<bool, CompareError> {
    let all: Vec<&EventRule> = left.iter().chain(right).collect();
    strict(&all, schema)?;
    Ok(Ctx::new(all, schema)?.set_not_contained(left, right).is_none())
}

/// The first reason a policy is not consistent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Inconsistency {
    PermissionOverlapsProhibition { permission: String, prohibition: String },
    ObligationOverlapsProhibition { obligation: String, prohibition: String },
    ObligationNotPermitted { obligation: String },
}

impl fmt::Display for Inconsistency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Inconsistency::PermissionOverlapsProhibition { permission, prohibition } => {
                write!(f, "permission `{permission}` overlaps prohibition `{prohibition}`")
            }
            Inconsistency::ObligationOverlapsProhibition { obligation, prohibition } => {
                write!(f, "obligation `{obligation}` overlaps prohibition `{prohibition}`")
            }
            Inconsistency::ObligationNotPermitted { obligation } => {
                write!(f, "obligation `{obligation}` is not covered by the permissions")
            }
        }
    }
}

pub fn check_consistency(p: &LitePolicy, schema: &FeatureSchema) -> Result<Option<Inconsistency>, CompareError> {
    gate(p.rules(), p.is_normal_form(), schema)?;
    Ok(Ctx::new(p.rules(), schema)?.inconsistency(p))
}

/// No permission or obligation overlaps a prohibition, and the permissions
/// cover every obligation.
pub fn is_consistent(p: &LitePolicy, schema: &FeatureSchema) -> Result<bool, CompareError> {
    Ok(check_consistency(p, schema)?.is_none())
}
