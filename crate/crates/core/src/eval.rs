//! Two-valued evaluation of conditions on a single event.
//!
//! Comparison follows SPARQL filter semantics with every evaluation error
//! (null operand, incomparable types) collapsing to `false`.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::model::{ClassSource, Condition, Event, FeatureSchema, Operand, Operator, SimpleCondition, Value};

/// Read access to feature values. `None` means "not yet assigned", which
/// only partial assignments produce.
pub trait FeatureValues {
    fn value(&self, feature: usize) -> Option<&Value>;
}

impl FeatureValues for Event {
    fn value(&self, feature: usize) -> Option<&Value> {
        self.values().get(feature)
    }
}

impl FeatureValues for [Option<Value>] {
    fn value(&self, feature: usize) -> Option<&Value> {
        self.get(feature).and_then(Option::as_ref)
    }
}

pub fn eval_simple(c: &SimpleCondition, e: &Event, schema: &FeatureSchema) -> bool {
    eval_simple_partial(c, e, schema).unwrap_or(false)
}

/// Evaluates any condition, simple or complex, on a complete event.
pub fn eval_condition(c: &Condition, e: &Event, schema: &FeatureSchema) -> bool {
    eval_partial(c, e, schema).unwrap_or(false)
}

/// Three-valued evaluation over a possibly partial assignment: `None` when
/// the result still depends on unassigned features.
pub(crate) fn eval_partial<V: FeatureValues + ?Sized>(c: &Condition, values: &V, schema: &FeatureSchema) -> Option<bool> {
    match c {
        Condition::Simple(s) => eval_simple_partial(s, values, schema),
        Condition::And(cs) => {
            let mut unknown = false;
            for c in cs {
                match eval_partial(c, values, schema) {
                    Some(false) => return Some(false),
                    Some(true) => {}
                    None => unknown = true,
                }
            }
            (!unknown).then_some(true)
        }
        Condition::Or(cs) => {
            let mut unknown = false;
            for c in cs {
                match eval_partial(c, values, schema) {
                    Some(true) => return Some(true),
                    Some(false) => {}
                    None => unknown = true,
                }
            }
            (!unknown).then_some(false)
        }
        Condition::Not(c) => eval_partial(c, values, schema).map(|b| !b),
        Condition::Xor(a, b) => {
            let a = eval_partial(a, values, schema)?;
            let b = eval_partial(b, values, schema)?;
            Some(a != b)
        }
    }
}

pub(crate) fn eval_simple_partial<V: FeatureValues + ?Sized>(
    c: &SimpleCondition,
    values: &V,
    schema: &FeatureSchema,
) -> Option<bool> {
    let left = values.value(c.feature())?;
    if left.is_null() {
        return Some(false);
    }
    let op = c.op();
    if op == Operator::IsA {
        let Operand::Scalar(class) = c.operand() else {
            return Some(false);
        };
        let Value::Identifier(class) = class else {
            return Some(false);
        };
        return match schema.class_source(c.feature()) {
            None => Some(false),
            Some(ClassSource::Static(classes)) => Some(classes.contains(class)),
            Some(ClassSource::Companion(j)) => match values.value(*j)? {
                Value::IdentifierSet(classes) => Some(classes.contains(class)),
                _ => Some(false),
            },
        };
    }
    if op.is_scalar() {
        return Some(match c.operand() {
            Operand::Scalar(right) => compare_scalar(left, op, right),
            Operand::Set(_) => false,
        });
    }
    Some(compare_sets(left, op, c.operand()))
}

fn compare_scalar(left: &Value, op: Operator, right: &Value) -> bool {
    let ordering = match (left, right) {
        (Value::Timestamp(a), Value::Timestamp(b)) => a.cmp(b),
        (Value::Number(a), Value::Number(b)) => a.cmp(b),
        (Value::Text(a), Value::Text(b)) => a.cmp(b),
        (Value::Identifier(a), Value::Identifier(b)) => {
            return match op {
                Operator::Eq => a == b,
                Operator::Neq => a != b,
                _ => false,
            }
        }
        _ => return false,
    };
    match op {
        Operator::Eq => ordering == Ordering::Equal,
        Operator::Neq => ordering != Ordering::Equal,
        Operator::Gt => ordering == Ordering::Greater,
        Operator::Gteq => ordering != Ordering::Less,
        Operator::Lt => ordering == Ordering::Less,
        Operator::Lteq => ordering != Ordering::Greater,
        _ => false,
    }
}

/// The feature value viewed as a set: identifier sets as themselves, any
/// other non-null scalar as a singleton.
enum Members<'a> {
    Single(&'a Value),
    Many(&'a BTreeSet<String>),
}

impl Members<'_> {
    fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Members::Single(s), v) => *s == v,
            (Members::Many(set), Value::Identifier(id)) => set.contains(id),
            (Members::Many(_), _) => false,
        }
    }

    fn is_subset_of(&self, right: &Operand) -> bool {
        let in_right = |v: &Value| right.constants().any(|r| r == v);
        match self {
            Members::Single(v) => in_right(v),
            Members::Many(set) => set
                .iter()
                .all(|m| right.constants().any(|r| matches!(r, Value::Identifier(id) if id == m))),
        }
    }
}

fn compare_sets(left: &Value, op: Operator, right: &Operand) -> bool {
    let members = match left {
        Value::IdentifierSet(set) => Members::Many(set),
        other => Members::Single(other),
    };
    let superset = || right.constants().all(|r| members.contains(r));
    let intersects = || right.constants().any(|r| members.contains(r));
    match op {
        Operator::HasPart => superset(),
        Operator::IsPartOf => members.is_subset_of(right),
        Operator::IsAllOf => superset() && members.is_subset_of(right),
        Operator::IsAnyOf => intersects(),
        Operator::IsNoneOf => !intersects(),
        _ => false,
    }
}

/// Rewrites every `Xor(a, b)` as `(a and not b) or (not a and b)`.
pub fn desugar_xor(c: &Condition) -> Condition {
    match c {
        Condition::Simple(_) => c.clone(),
        Condition::And(cs) => Condition::And(cs.iter().map(desugar_xor).collect()),
        Condition::Or(cs) => Condition::Or(cs.iter().map(desugar_xor).collect()),
        Condition::Not(inner) => Condition::negate(desugar_xor(inner)),
        Condition::Xor(a, b) => {
            let (a, b) = (desugar_xor(a), desugar_xor(b));
            Condition::Or(vec![
                Condition::And(vec![a.clone(), Condition::negate(b.clone())]),
                Condition::And(vec![Condition::negate(a), b]),
            ])
        }
    }
}

/// ODRL has no negation; `c xor (<i = x> or <i != x>)` expresses `not c`
/// on events where feature `i` is not null.
pub fn negation_via_xor(c: Condition, feature: usize, witness: Value) -> Condition {
    let top = Condition::Or(vec![
        SimpleCondition::from_parts(feature, Operator::Eq, Operand::Scalar(witness.clone())).into(),
        SimpleCondition::from_parts(feature, Operator::Neq, Operand::Scalar(witness)).into(),
    ]);
    Condition::xor(c, top)
}
