use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::schema::{FeatureSchema, ACTION, DATETIME};
use super::value::{Datatype, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EventError {
    #[error("event has {found} values but the schema declares {expected} features")]
    Arity { expected: usize, found: usize },
    #[error("event timestamp (feature 0) must be a non-null timestamp")]
    MissingTimestamp,
    #[error("event action (feature 1) must be a non-null identifier")]
    MissingAction,
    #[error("feature {feature} holds a {found} value but is declared {expected}")]
    KindMismatch { feature: usize, expected: Datatype, found: Datatype },
}

/// One tuple of feature values; slot 0 is the timestamp, slot 1 the action.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    values: Vec<Value>,
}

impl Event {
    pub fn new(schema: &FeatureSchema, values: Vec<Value>) -> Result<Self, EventError> {
        check_values(schema, &values)?;
        Ok(Event { values })
    }

    /// Builds an event from values that are known to conform.
    pub(crate) fn from_conforming(values: Vec<Value>) -> Self {
        Event { values }
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn get(&self, feature: usize) -> &Value {
        &self.values[feature]
    }

    pub fn timestamp(&self) -> i64 {
        match self.values[DATETIME] {
            Value::Timestamp(t) => t,
            _ => unreachable!("validated at construction"),
        }
    }

    pub fn action(&self) -> &str {
        match &self.values[ACTION] {
            Value::Identifier(a) => a,
            _ => unreachable!("validated at construction"),
        }
    }

    pub fn conforms_to(&self, schema: &FeatureSchema) -> Result<(), EventError> {
        check_values(schema, &self.values)
    }
}

fn check_values(schema: &FeatureSchema, values: &[Value]) -> Result<(), EventError> {
    if values.len() != schema.len() {
        return Err(EventError::Arity { expected: schema.len(), found: values.len() });
    }
    if !matches!(values[DATETIME], Value::Timestamp(_)) {
        return Err(EventError::MissingTimestamp);
    }
    if !matches!(values[ACTION], Value::Identifier(_)) {
        return Err(EventError::MissingAction);
    }
    for (decl, value) in schema.features().iter().zip(values) {
        if let Some(found) = value.datatype() {
            if found != decl.datatype {
                return Err(EventError::KindMismatch { feature: decl.id, expected: decl.datatype, found });
            }
        }
    }
    Ok(())
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

/// A state of the world: a finite set of events. Events are kept ordered,
/// which for well-formed events means ordered by timestamp first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct World {
    events: BTreeSet<Event>,
}

impl World {
    pub fn new() -> Self {
        World::default()
    }

    pub fn from_events(schema: &FeatureSchema, events: impl IntoIterator<Item = Event>) -> Result<Self, EventError> {
        let mut world = World::new();
        for e in events {
            world.insert(schema, e)?;
        }
        Ok(world)
    }

    pub(crate) fn from_conforming(events: impl IntoIterator<Item = Event>) -> Self {
        World { events: events.into_iter().collect() }
    }

    /// Inserts an event; returns false when an equal event was already present.
    pub fn insert(&mut self, schema: &FeatureSchema, event: Event) -> Result<bool, EventError> {
        event.conforms_to(schema)?;
        Ok(self.events.insert(event))
    }

    pub fn contains(&self, event: &Event) -> bool {
        self.events.contains(event)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Event> + '_ {
        self.events.iter()
    }

    pub fn conforms_to(&self, schema: &FeatureSchema) -> Result<(), EventError> {
        self.events.iter().try_for_each(|e| e.conforms_to(schema))
    }
}

impl<'a> IntoIterator for &'a World {
    type Item = &'a Event;
    type IntoIter = std::collections::btree_set::Iter<'a, Event>;

    fn into_iter(self) -> Self::IntoIter {
        self.events.iter()
    }
}
