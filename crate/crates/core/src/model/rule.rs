use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use thiserror::Error;

use super::condition::{Condition, ConditionError, Operand, Operator, SimpleCondition};
use super::schema::FeatureSchema;
use super::value::Value;

/// A conjunction of conditions.
///
/// Conditions are kept sorted and deduplicated so that two rules with the
/// same condition set compare equal. The label is presentation only and
/// takes no part in equality, ordering or hashing.
#[derive(Debug, Clone)]
pub struct EventRule {
    label: Option<String>,
    conditions: Vec<Condition>,
}

impl EventRule {
    pub fn new(conditions: impl IntoIterator<Item = Condition>) -> Self {
        let mut conditions: Vec<Condition> = conditions.into_iter().collect();
        conditions.sort();
        conditions.dedup();
        EventRule { label: None, conditions }
    }

    pub fn labelled(label: impl Into<String>, conditions: impl IntoIterator<Item = Condition>) -> Self {
        EventRule::new(conditions).with_label(label)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub(crate) fn set_label_if_missing(&mut self, label: impl FnOnce() -> String) {
        if self.label.is_none() {
            self.label = Some(label());
        }
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }

    /// I_τ: every feature referenced by any condition.
    pub fn features(&self) -> BTreeSet<usize> {
        self.conditions.iter().flat_map(Condition::features).collect()
    }

    /// The rule extended with additional conjuncts; keeps the label.
    pub fn conjoin(&self, extra: impl IntoIterator<Item = Condition>) -> EventRule {
        let mut rule = EventRule::new(self.conditions.iter().cloned().chain(extra));
        rule.label = self.label.clone();
        rule
    }

    /// The whole rule as one condition.
    pub fn as_condition(&self) -> Condition {
        Condition::And(self.conditions.clone())
    }

    /// The top-level `<feature, =, v>` constant, if the rule has exactly one.
    pub fn top_level_equality(&self, feature: usize) -> Option<&Value> {
        let mut found = self.conditions.iter().filter_map(|c| match c {
            Condition::Simple(s) if s.feature() == feature && s.op() == Operator::Eq => match s.operand() {
                Operand::Scalar(v) => Some(v),
                Operand::Set(_) => None,
            },
            _ => None,
        });
        let first = found.next()?;
        found.next().is_none().then_some(first)
    }

    /// Replaces the constant of the top-level `<feature, =, _>` condition.
    pub(crate) fn replace_top_level_equality(&self, feature: usize, value: Value) -> EventRule {
        let conditions = self.conditions.iter().map(|c| match c {
            Condition::Simple(s) if s.feature() == feature && s.op() == Operator::Eq => Condition::Simple(
                SimpleCondition::from_parts(feature, Operator::Eq, Operand::Scalar(value.clone())),
            ),
            other => other.clone(),
        });
        let mut rule = EventRule::new(conditions);
        rule.label = self.label.clone();
        rule
    }

    pub fn display<'a>(&'a self, schema: &'a FeatureSchema) -> RuleDisplay<'a> {
        RuleDisplay { rule: self, schema }
    }
}

impl PartialEq for EventRule {
    fn eq(&self, other: &Self) -> bool {
        self.conditions == other.conditions
    }
}

impl Eq for EventRule {}

impl PartialOrd for EventRule {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EventRule {
    fn cmp(&self, other: &Self) -> Ordering {
        self.conditions.cmp(&other.conditions)
    }
}

impl Hash for EventRule {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.conditions.hash(state);
    }
}

pub struct RuleDisplay<'a> {
    rule: &'a EventRule,
    schema: &'a FeatureSchema,
}

impl fmt::Display for RuleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(label) = &self.rule.label {
            write!(f, "{label}: ")?;
        }
        if self.rule.conditions.is_empty() {
            return f.write_str("true");
        }
        for (i, c) in self.rule.conditions.iter().enumerate() {
            if i > 0 {
                f.write_str(" and ")?;
            }
            write!(f, "{}", c.display(self.schema))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("no feature named `{0}`")]
    UnknownFeatureName(String),
    #[error("bad literal for feature `{feature}`: {reason}")]
    BadLiteral { feature: String, reason: String },
    #[error(transparent)]
    Condition(#[from] ConditionError),
}

/// Builds a simple condition from a feature name and textual constant(s).
///
/// A literal containing `|` becomes a set operand for set operators.
pub fn simple(schema: &FeatureSchema, feature: &str, op: Operator, literal: &str) -> Result<Condition, BuildError> {
    let index = schema
        .index_of(feature)
        .ok_or_else(|| BuildError::UnknownFeatureName(feature.to_string()))?;
    let datatype = schema.datatype(index).expect("index from schema");
    let bad = |reason: String| BuildError::BadLiteral { feature: feature.to_string(), reason };
    let operand = if op == Operator::IsA {
        Operand::Scalar(Value::Identifier(literal.to_string()))
    } else if op.is_scalar() {
        Operand::Scalar(datatype.parse_scalar(literal).map_err(bad)?)
    } else {
        let members = literal
            .split('|')
            .map(str::trim)
            .filter(|m| !m.is_empty())
            .map(|m| datatype.parse_scalar(m))
            .collect::<Result<BTreeSet<_>, _>>()
            .map_err(bad)?;
        Operand::Set(members)
    };
    Ok(Condition::Simple(SimpleCondition::new(schema, index, op, operand)?))
}

/// Fluent construction of event rules by feature name.
pub struct RuleBuilder<'a> {
    schema: &'a FeatureSchema,
    label: Option<String>,
    conditions: Vec<Condition>,
    error: Option<BuildError>,
}

impl<'a> RuleBuilder<'a> {
    pub fn new(schema: &'a FeatureSchema) -> Self {
        RuleBuilder { schema, label: None, conditions: Vec::new(), error: None }
    }

    pub fn label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn eq(self, feature: &str, literal: &str) -> Self {
        self.when(feature, Operator::Eq, literal)
    }

    pub fn when(mut self, feature: &str, op: Operator, literal: &str) -> Self {
        match simple(self.schema, feature, op, literal) {
            Ok(c) => self.conditions.push(c),
            Err(e) => {
                self.error.get_or_insert(e);
            }
        }
        self
    }

    pub fn condition(mut self, c: Condition) -> Self {
        self.conditions.push(c);
        self
    }

    pub fn build(self) -> Result<EventRule, BuildError> {
        if let Some(e) = self.error {
            return Err(e);
        }
        let rule = EventRule::new(self.conditions);
        Ok(match self.label {
            Some(l) => rule.with_label(l),
            None => rule,
        })
    }
}
