//! Finite probe sets that stand in for the infinite value space of each
//! feature.
//!
//! For a fixed set of rules, every simple condition compares a feature
//! against constants. Two values that fall in the same region relative to
//! those constants (equal to the same constant, or strictly between the same
//! adjacent pair) satisfy exactly the same conditions, so one representative
//! per region is enough to decide containment and overlap.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Rational64;

use super::CompareError;
use crate::model::{
    ClassSource, Datatype, Event, EventRule, FeatureSchema, Operator, SimpleCondition, Value, ACTION, DATETIME,
};

/// Largest identifier universe whose power set is enumerated for an
/// identifier-set feature.
const MAX_SET_UNIVERSE: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessDomain {
    probes: Vec<Vec<Value>>,
}

#[derive(Default)]
struct Mentions {
    features: BTreeSet<usize>,
    constants: BTreeMap<usize, BTreeSet<Value>>,
}

impl Mentions {
    fn add(&mut self, feature: usize, values: impl IntoIterator<Item = Value>) {
        self.features.insert(feature);
        self.constants.entry(feature).or_default().extend(values);
    }

    fn simple(&mut self, c: &SimpleCondition, schema: &FeatureSchema) {
        let constants = c.operand().constants().cloned();
        if c.op() == Operator::IsA {
            self.features.insert(c.feature());
            if let Some(ClassSource::Companion(j)) = schema.class_source(c.feature()) {
                self.add(*j, constants);
            }
        } else {
            self.add(c.feature(), constants);
        }
    }
}

fn fresh_identifier(taken: &BTreeSet<String>) -> String {
    let mut name = "_other".to_string();
    while taken.contains(&name) {
        name.push('_');
    }
    name
}

fn timestamp_probes(constants: &BTreeSet<Value>) -> Vec<Value> {
    let ts: Vec<i64> = constants
        .iter()
        .filter_map(|v| match v {
            Value::Timestamp(t) => Some(*t),
            _ => None,
        })
        .collect();
    let (Some(&min), Some(&max)) = (ts.first(), ts.last()) else {
        return vec![Value::Timestamp(0)];
    };
    let mut out = vec![min - 1];
    for w in ts.windows(2) {
        out.push(w[0]);
        if w[1] - w[0] >= 2 {
            out.push(w[0] + 1);
        }
    }
    out.push(max);
    out.push(max + 1);
    out.into_iter().map(Value::Timestamp).collect()
}

fn number_probes(constants: &BTreeSet<Value>) -> Vec<Value> {
    let ns: Vec<Rational64> = constants
        .iter()
        .filter_map(|v| match v {
            Value::Number(n) => Some(*n),
            _ => None,
        })
        .collect();
    let (Some(&min), Some(&max)) = (ns.first(), ns.last()) else {
        return vec![Value::integer(0)];
    };
    let one = Rational64::from_integer(1);
    let two = Rational64::from_integer(2);
    let mut out = vec![min - one];
    for w in ns.windows(2) {
        out.push(w[0]);
        out.push((w[0] + w[1]) / two);
    }
    out.push(max);
    out.push(max + one);
    out.into_iter().map(Value::Number).collect()
}

/// The least string greater than `s`.
fn successor(s: &str) -> String {
    format!("{s}\u{0}")
}

fn text_probes(constants: &BTreeSet<Value>) -> Vec<Value> {
    let ts: Vec<&String> = constants
        .iter()
        .filter_map(|v| match v {
            Value::Text(t) => Some(t),
            _ => None,
        })
        .collect();
    let (Some(min), Some(max)) = (ts.first(), ts.last()) else {
        return vec![Value::Text(String::new())];
    };
    let mut out = Vec::new();
    if !min.is_empty() {
        out.push(String::new());
    }
    for w in ts.windows(2) {
        out.push(w[0].clone());
        let between = successor(w[0]);
        if between.as_str() < w[1].as_str() {
            out.push(between);
        }
    }
    out.push((*max).clone());
    out.push(successor(max));
    out.into_iter().map(Value::Text).collect()
}

fn identifier_names(constants: &BTreeSet<Value>) -> BTreeSet<String> {
    constants
        .iter()
        .filter_map(|v| match v {
            Value::Identifier(id) => Some(id.clone()),
            _ => None,
        })
        .collect()
}

fn identifier_probes(constants: &BTreeSet<Value>) -> Vec<Value> {
    let names = identifier_names(constants);
    let fresh = fresh_identifier(&names);
    names.into_iter().chain([fresh]).map(Value::Identifier).collect()
}

fn set_probes(feature: usize, constants: &BTreeSet<Value>) -> Result<Vec<Value>, CompareError> {
    let mut universe: Vec<String> = identifier_names(constants).into_iter().collect();
    let fresh = fresh_identifier(&universe.iter().cloned().collect());
    universe.push(fresh);
    if universe.len() > MAX_SET_UNIVERSE {
        return Err(CompareError::DomainTooLarge {
            what: format!("identifier-set feature {feature} with {} distinct members", universe.len()),
            limit: MAX_SET_UNIVERSE as u128,
        });
    }
    Ok((0u32..1 << universe.len())
        .map(|mask| {
            Value::IdentifierSet(
                universe
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, m)| m.clone())
                    .collect(),
            )
        })
        .collect())
}

impl WitnessDomain {
    /// Probes covering every region distinguishable by the given rules.
    ///
    /// Features no rule mentions get a single probe: null, or a placeholder
    /// for the timestamp and action, which may not be null.
    pub fn for_rules<'a>(
        rules: impl IntoIterator<Item = &'a EventRule>,
        schema: &FeatureSchema,
    ) -> Result<Self, CompareError> {
        Self::build(rules, schema, std::iter::empty())
    }

    /// As [`WitnessDomain::for_rules`], with extra timestamp constants (used
    /// to place events around duty and consequence deadlines).
    pub fn with_timestamps<'a>(
        rules: impl IntoIterator<Item = &'a EventRule>,
        schema: &FeatureSchema,
        timestamps: impl IntoIterator<Item = i64>,
    ) -> Result<Self, CompareError> {
        Self::build(rules, schema, timestamps)
    }

    fn build<'a>(
        rules: impl IntoIterator<Item = &'a EventRule>,
        schema: &FeatureSchema,
        timestamps: impl IntoIterator<Item = i64>,
    ) -> Result<Self, CompareError> {
        let mut mentions = Mentions::default();
        for rule in rules {
            for c in rule.conditions() {
                c.for_each_simple(&mut |s| mentions.simple(s, schema));
            }
        }
        let extra: Vec<Value> = timestamps.into_iter().map(Value::Timestamp).collect();
        if !extra.is_empty() {
            mentions.add(DATETIME, extra);
        }
        let empty = BTreeSet::new();
        let mut probes = Vec::with_capacity(schema.len());
        for decl in schema.features() {
            let i = decl.id;
            let constants = mentions.constants.get(&i).unwrap_or(&empty);
            let mentioned = mentions.features.contains(&i);
            let mut values = if !mentioned && i != DATETIME && i != ACTION {
                Vec::new()
            } else {
                match decl.datatype {
                    Datatype::Timestamp => timestamp_probes(constants),
                    Datatype::Numeric => number_probes(constants),
                    Datatype::String => text_probes(constants),
                    Datatype::Identifier => identifier_probes(constants),
                    Datatype::IdentifierSet => set_probes(i, constants)?,
                }
            };
            if i != DATETIME && i != ACTION {
                values.insert(0, Value::Null);
            }
            probes.push(values);
        }
        Ok(WitnessDomain { probes })
    }

    pub fn probes(&self, feature: usize) -> &[Value] {
        &self.probes[feature]
    }

    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }

    /// Size of the probe-event product, saturating at `u128::MAX`.
    pub fn event_count(&self) -> u128 {
        self.probes
            .iter()
            .try_fold(1u128, |acc, p| acc.checked_mul(p.len() as u128))
            .unwrap_or(u128::MAX)
    }

    /// Every probe event, in lexicographic order of probe indices with the
    /// timestamp most significant.
    pub fn events(&self) -> ProbeEvents<'_> {
        ProbeEvents { domain: self, next: Some(vec![0; self.probes.len()]) }
    }
}

pub struct ProbeEvents<'a> {
    domain: &'a WitnessDomain,
    next: Option<Vec<usize>>,
}

impl Iterator for ProbeEvents<'_> {
    type Item = Event;

    fn next(&mut self) -> Option<Event> {
        let idx = self.next.as_mut()?;
        let event = Event::from_conforming(
            idx.iter()
                .enumerate()
                .map(|(f, &k)| self.domain.probes[f][k].clone())
                .collect(),
        );
        let mut f = idx.len();
        loop {
            if f == 0 {
                self.next = None;
                break;
            }
            f -= 1;
            idx[f] += 1;
            if idx[f] < self.domain.probes[f].len() {
                break;
            }
            idx[f] = 0;
        }
        Some(event)
    }
}
