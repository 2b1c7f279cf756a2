//! Rule-level matching and well-formedness.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::eval::eval_partial;
use crate::model::{Component, Condition, Event, EventRule, FeatureSchema, Operand, Operator, ACTION, DATETIME};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WellFormednessItem {
    /// A condition references a feature the schema does not declare.
    UnknownFeature,
    /// Item 1: the rule names its action with a top-level equality.
    ActionRequired,
    /// Item 2: each core component used is fixed once by a top-level equality.
    CoreComponentEquality,
    /// Item 3: each complex condition stays within one component.
    SingleComponentPerCondition,
}

impl fmt::Display for WellFormednessItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WellFormednessItem::UnknownFeature => "condition references an undeclared feature",
            WellFormednessItem::ActionRequired => "rule has no top-level <Action, =, a> condition",
            WellFormednessItem::CoreComponentEquality => {
                "core component used without a single top-level equality of its own"
            }
            WellFormednessItem::SingleComponentPerCondition => "complex condition mixes features of different components",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WellFormednessViolation {
    pub rule: String,
    pub item: WellFormednessItem,
    pub features: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct WellFormednessReport {
    pub ok: bool,
    pub violations: Vec<WellFormednessViolation>,
}

impl WellFormednessReport {
    fn from_violations(violations: Vec<WellFormednessViolation>) -> Self {
        WellFormednessReport { ok: violations.is_empty(), violations }
    }

    pub fn merge(reports: impl IntoIterator<Item = WellFormednessReport>) -> Self {
        WellFormednessReport::from_violations(reports.into_iter().flat_map(|r| r.violations).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("rule `{rule}` is ill-formed: {item}")]
pub struct IllFormedRule {
    pub rule: String,
    pub item: WellFormednessItem,
    pub features: Vec<usize>,
}

impl From<WellFormednessViolation> for IllFormedRule {
    fn from(v: WellFormednessViolation) -> Self {
        IllFormedRule { rule: v.rule, item: v.item, features: v.features }
    }
}

fn rule_name(rule: &EventRule) -> String {
    rule.label().unwrap_or("<unlabelled>").to_string()
}

fn unknown_features(rule: &EventRule, schema: &FeatureSchema) -> Option<WellFormednessViolation> {
    let unknown: Vec<usize> = rule.features().into_iter().filter(|&i| schema.feature(i).is_none()).collect();
    (!unknown.is_empty()).then(|| WellFormednessViolation {
        rule: rule_name(rule),
        item: WellFormednessItem::UnknownFeature,
        features: unknown,
    })
}

fn has_action_equality(rule: &EventRule) -> bool {
    rule.conditions().iter().any(|c| {
        matches!(c, Condition::Simple(s)
            if s.feature() == ACTION && s.op() == Operator::Eq && matches!(s.operand(), Operand::Scalar(_)))
    })
}

/// Checks the three ODRL well-formedness conditions for an authored rule.
pub fn check_well_formed(rule: &EventRule, schema: &FeatureSchema) -> WellFormednessReport {
    if let Some(v) = unknown_features(rule, schema) {
        return WellFormednessReport::from_violations(vec![v]);
    }
    let mut violations = Vec::new();
    let name = rule_name(rule);

    if !has_action_equality(rule) {
        violations.push(WellFormednessViolation {
            rule: name.clone(),
            item: WellFormednessItem::ActionRequired,
            features: vec![ACTION],
        });
    }

    let core_used: BTreeSet<usize> = rule
        .features()
        .into_iter()
        .filter_map(|i| match schema.component(i) {
            Some(Component::Feature(k)) => Some(k),
            _ => None,
        })
        .collect();
    for k in core_used {
        let fixed = rule.top_level_equality(k).is_some();
        let mentions = rule.conditions().iter().filter(|c| c.features().contains(&k)).count();
        if !fixed || mentions != 1 {
            violations.push(WellFormednessViolation {
                rule: name.clone(),
                item: WellFormednessItem::CoreComponentEquality,
                features: vec![k],
            });
        }
    }

    for c in rule.conditions().iter().filter(|c| !c.is_simple()) {
        let features = c.features();
        let components: BTreeSet<Component> = features.iter().filter_map(|&i| schema.component(i)).collect();
        if components.len() > 1 {
            violations.push(WellFormednessViolation {
                rule: name.clone(),
                item: WellFormednessItem::SingleComponentPerCondition,
                features: features.into_iter().collect(),
            });
        }
    }
    WellFormednessReport::from_violations(violations)
}

/// The relaxed check applied to rules of normalised policies: declared
/// features and a top-level action equality.
pub fn check_normal_form_rule(rule: &EventRule, schema: &FeatureSchema) -> WellFormednessReport {
    if let Some(v) = unknown_features(rule, schema) {
        return WellFormednessReport::from_violations(vec![v]);
    }
    if has_action_equality(rule) {
        return WellFormednessReport::from_violations(Vec::new());
    }
    WellFormednessReport::from_violations(vec![WellFormednessViolation {
        rule: rule_name(rule),
        item: WellFormednessItem::ActionRequired,
        features: vec![ACTION],
    }])
}

/// True when every condition of the rule holds on the event.
///
/// Assumes the rule references only declared features; use
/// [`checked_match`] for unchecked input.
pub fn matches(rule: &EventRule, event: &Event, schema: &FeatureSchema) -> bool {
    rule.conditions()
        .iter()
        .all(|c| eval_partial(c, event, schema).unwrap_or(false))
}

pub fn checked_match(rule: &EventRule, event: &Event, schema: &FeatureSchema) -> Result<bool, IllFormedRule> {
    let report = check_well_formed(rule, schema);
    if let Some(v) = report.violations.into_iter().next() {
        return Err(v.into());
    }
    Ok(matches(rule, event, schema))
}

fn is_deadline(c: &Condition) -> bool {
    matches!(c, Condition::Simple(s) if s.feature() == DATETIME && s.op() == Operator::Lteq)
}

/// Conjuncts of `c` with deadlines dropped. Only conjunctions are entered:
/// under a negation or xor, dropping a conjunct could turn a match into a
/// non-match.
fn strip_deadlines_in(c: &Condition) -> Option<Condition> {
    match c {
        c if is_deadline(c) => None,
        Condition::And(cs) => Some(Condition::And(cs.iter().filter_map(strip_deadlines_in).collect())),
        _ => Some(c.clone()),
    }
}

/// The rule with every conjunctive `<Datetime, <=, t>` condition removed.
pub fn strip_deadlines(rule: &EventRule) -> EventRule {
    let stripped = EventRule::new(rule.conditions().iter().filter_map(strip_deadlines_in));
    match rule.label() {
        Some(l) => stripped.with_label(l),
        None => stripped,
    }
}

/// Time-independent match.
pub fn softmatch(rule: &EventRule, event: &Event, schema: &FeatureSchema) -> bool {
    matches(&strip_deadlines(rule), event, schema)
}
