//! Feature schema: the positional layout of events.
//!
//! Feature 0 is always the timestamp and feature 1 the action. Every other
//! feature is either a core component (party or asset, whose component is
//! itself), a refinement of a core component, or a rule-wide constraint.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use super::value::Datatype;

pub const DATETIME: usize = 0;
pub const ACTION: usize = 1;

/// The ODRL component a feature belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Component {
    /// Rule-wide property (constraint) or the timestamp.
    Rho,
    /// Index of the core-component feature; equal to the feature's own index
    /// when the feature is a core component itself.
    Feature(usize),
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Component::Rho => f.write_str("rho"),
            Component::Feature(k) => write!(f, "{k}"),
        }
    }
}

/// Where the class set used by `isA` comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassSource {
    /// The same class set for every event.
    Static(BTreeSet<String>),
    /// Per-event classes held in an identifier-set feature.
    Companion(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureDecl {
    pub id: usize,
    pub name: String,
    pub datatype: Datatype,
    pub component: Component,
    pub classes: Option<ClassSource>,
    /// ODRL term (left operand or party role such as `assignee`) bound to
    /// this feature when ingesting ODRL documents.
    pub odrl_term: Option<String>,
}

impl FeatureDecl {
    pub fn new(id: usize, name: impl Into<String>, datatype: Datatype, component: Component) -> Self {
        FeatureDecl {
            id,
            name: name.into(),
            datatype,
            component,
            classes: None,
            odrl_term: None,
        }
    }

    pub fn with_classes(mut self, classes: ClassSource) -> Self {
        self.classes = Some(classes);
        self
    }

    pub fn with_odrl_term(mut self, term: impl Into<String>) -> Self {
        self.odrl_term = Some(term.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("feature index {0} is declared more than once")]
    DuplicateIndex(usize),
    #[error("feature indices must be contiguous from 0; index {0} is missing")]
    NonContiguous(usize),
    #[error("feature name `{name}` is declared more than once (feature {id})")]
    DuplicateName { id: usize, name: String },
    #[error("feature {feature} refers to component {target}, which is not a core-component feature")]
    BadGammaTarget { feature: usize, target: usize },
    #[error("feature 0 must be the timestamp with a rule-wide component")]
    WrongDatetimeSlot,
    #[error("feature 1 must be the action: an identifier that is its own component")]
    WrongActionSlot,
    #[error("feature {feature} takes classes from feature {companion}, which is not an identifier-set feature")]
    BadClassSource { feature: usize, companion: usize },
    #[error("schema declares fewer than two features")]
    TooFewFeatures,
}

impl SchemaError {
    pub fn kind(&self) -> &'static str {
        match self {
            SchemaError::DuplicateIndex(_) => "duplicate-index",
            SchemaError::NonContiguous(_) => "non-contiguous-index",
            SchemaError::DuplicateName { .. } => "duplicate-name",
            SchemaError::BadGammaTarget { .. } => "bad-gamma-target",
            SchemaError::WrongDatetimeSlot => "wrong-datetime-slot",
            SchemaError::WrongActionSlot => "wrong-action-slot",
            SchemaError::BadClassSource { .. } => "bad-class-source",
            SchemaError::TooFewFeatures => "too-few-features",
        }
    }
}

/// A validated feature schema. Features are stored in index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    features: Vec<FeatureDecl>,
}

/// Validates raw feature declarations into a [`FeatureSchema`].
pub fn validate_schema(raw: Vec<FeatureDecl>) -> Result<FeatureSchema, SchemaError> {
    FeatureSchema::new(raw)
}

impl FeatureSchema {
    pub fn new(mut features: Vec<FeatureDecl>) -> Result<Self, SchemaError> {
        features.sort_by_key(|f| f.id);
        let mut seen = HashSet::new();
        for f in &features {
            if !seen.insert(f.id) {
                return Err(SchemaError::DuplicateIndex(f.id));
            }
        }
        for (expected, f) in features.iter().enumerate() {
            if f.id != expected {
                return Err(SchemaError::NonContiguous(expected));
            }
        }
        if features.len() < 2 {
            return Err(SchemaError::TooFewFeatures);
        }
        let mut names = HashSet::new();
        for f in &features {
            if !names.insert(f.name.as_str()) {
                return Err(SchemaError::DuplicateName { id: f.id, name: f.name.clone() });
            }
        }

        let datetime = &features[DATETIME];
        if datetime.datatype != Datatype::Timestamp || datetime.component != Component::Rho {
            return Err(SchemaError::WrongDatetimeSlot);
        }
        let action = &features[ACTION];
        if action.datatype != Datatype::Identifier || action.component != Component::Feature(ACTION) {
            return Err(SchemaError::WrongActionSlot);
        }

        let is_core = |k: usize| features.get(k).is_some_and(|f| f.component == Component::Feature(k));
        for f in &features {
            if let Component::Feature(target) = f.component {
                if target != f.id && !is_core(target) {
                    return Err(SchemaError::BadGammaTarget { feature: f.id, target });
                }
            }
            if let Some(ClassSource::Companion(j)) = f.classes {
                let ok = features.get(j).is_some_and(|c| c.datatype == Datatype::IdentifierSet);
                if !ok {
                    return Err(SchemaError::BadClassSource { feature: f.id, companion: j });
                }
            }
        }
        Ok(FeatureSchema { features })
    }

    pub fn features(&self) -> &[FeatureDecl] {
        &self.features
    }

    /// Number of features, i.e. the length of every event tuple.
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature(&self, i: usize) -> Option<&FeatureDecl> {
        self.features.get(i)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn datatype(&self, i: usize) -> Option<Datatype> {
        self.feature(i).map(|f| f.datatype)
    }

    /// The component γ of feature `i`.
    pub fn component(&self, i: usize) -> Option<Component> {
        self.feature(i).map(|f| f.component)
    }

    /// True when `i` is a core component (action, asset or party).
    pub fn is_core(&self, i: usize) -> bool {
        self.component(i) == Some(Component::Feature(i))
    }

    pub fn class_source(&self, i: usize) -> Option<&ClassSource> {
        self.feature(i).and_then(|f| f.classes.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("feature {0} is not declared in the schema")]
pub struct UnknownFeature(pub usize);

/// Returns γ for feature `i`.
pub fn feature_component(schema: &FeatureSchema, i: usize) -> Result<Component, UnknownFeature> {
    schema.component(i).ok_or(UnknownFeature(i))
}
