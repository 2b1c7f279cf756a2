//! Depth-first search for a probe event satisfying a condition.

use super::domain::WitnessDomain;
use crate::eval::eval_partial;
use crate::model::{Condition, Event, EventRule, FeatureSchema, Value};

/// The lexicographically first probe event on which `goal` holds.
///
/// Features are assigned in index order; a branch is abandoned as soon as the
/// partial assignment already decides the goal false.
pub(crate) fn find_witness(goal: &Condition, domain: &WitnessDomain, schema: &FeatureSchema) -> Option<Event> {
    let mut values: Vec<Option<Value>> = vec![None; domain.len()];
    if descend(goal, domain, schema, &mut values, 0) {
        Some(Event::from_conforming(values.into_iter().map(|v| v.expect("assigned")).collect()))
    } else {
        None
    }
}

fn descend(
    goal: &Condition,
    domain: &WitnessDomain,
    schema: &FeatureSchema,
    values: &mut [Option<Value>],
    feature: usize,
) -> bool {
    match eval_partial(goal, &*values, schema) {
        Some(false) => return false,
        Some(true) => {
            for (f, slot) in values.iter_mut().enumerate().skip(feature) {
                *slot = Some(domain.probes(f)[0].clone());
            }
            return true;
        }
        None => {}
    }
    if feature == values.len() {
        return false;
    }
    for probe in domain.probes(feature) {
        values[feature] = Some(probe.clone());
        if descend(goal, domain, schema, values, feature + 1) {
            return true;
        }
    }
    values[feature] = None;
    false
}

/// Every condition of the rule.
pub(crate) fn rule_goal(rule: &EventRule) -> Condition {
    rule.as_condition()
}

/// Some rule of the set matches.
pub(crate) fn any_of(rules: &[EventRule]) -> Condition {
    Condition::Or(rules.iter().map(EventRule::as_condition).collect())
}

/// No rule of the set matches.
pub(crate) fn none_of(rules: &[EventRule]) -> Condition {
    Condition::negate(any_of(rules))
}
