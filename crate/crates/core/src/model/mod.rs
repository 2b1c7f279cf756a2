//! Domain types shared by every part of the engine.

pub mod condition;
pub mod event;
pub mod policy;
pub mod rule;
pub mod schema;
pub mod value;
pub mod vocab;

pub use condition::{Condition, ConditionError, Operand, Operator, SimpleCondition};
pub use event::{Event, EventError, World};
pub use policy::{
    deadlines, Duty, DutyWithConsequence, FullPolicy, LitePolicy, ObligationConsequence, PolicyError, Remedy,
};
pub use rule::{simple, BuildError, EventRule, RuleBuilder};
pub use schema::{
    feature_component, validate_schema, ClassSource, Component, FeatureDecl, FeatureSchema, SchemaError,
    UnknownFeature, ACTION, DATETIME,
};
pub use value::{Datatype, Value};
pub use vocab::{ActionVocabulary, VocabularyError};
