//! File formats: schema, action vocabulary, world logs, native and ODRL
//! policy documents, and JSON reports.

mod json;
mod native;
mod odrl;
mod report;
mod schema_file;
mod vocab_file;
mod world_csv;

use thiserror::Error;

use crate::matcher::IllFormedRule;
use crate::model::{
    BuildError, ConditionError, FeatureSchema, FullPolicy, PolicyError, SchemaError, VocabularyError,
};

pub use native::{parse_native_policy, write_native_policy};
pub use odrl::{parse_odrl_policy, ODRL_CONTEXT};
pub use report::{
    check_report_json, error_json, event_json, verdict_json, violation_report_json, world_json, CHECK_FORMAT,
    ERROR_FORMAT, REPORT_FORMAT, VERDICT_FORMAT,
};
pub use schema_file::{parse_schema, write_schema, SCHEMA_FORMAT};
pub use vocab_file::{parse_vocabulary, write_vocabulary, VOCAB_FORMAT};
pub use world_csv::{parse_world, write_world};

pub const NATIVE_FORMAT: &str = "odrl-native/1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("{0}")]
    Format(String),
    #[error("invalid schema: {0}")]
    Schema(#[from] SchemaError),
    #[error("invalid vocabulary: {0}")]
    Vocabulary(#[from] VocabularyError),
    #[error("header mismatch: {0}")]
    HeaderMismatch(String),
    #[error("row {row}: expected {expected} fields, found {found}")]
    ArityMismatch { row: usize, expected: usize, found: usize },
    #[error("row {row}, column `{column}`: {message}")]
    UnparsableValue { row: usize, column: String, message: String },
    #[error("unknown left operand `{0}`")]
    UnknownLeftOperand(String),
    #[error("unsupported operator `{operator}`: {reason}")]
    UnsupportedOperator { operator: String, reason: String },
    #[error("invalid condition: {0}")]
    Condition(String),
    #[error(transparent)]
    IllFormedRule(#[from] IllFormedRule),
    #[error("duty `{0}` is not among the permissions of the policy")]
    DanglingDuty(String),
    #[error("policy invariant violated: {0}")]
    Policy(#[from] PolicyError),
}

impl ParseError {
    pub fn kind(&self) -> &'static str {
        match self {
            ParseError::Json(_) => "malformed-json",
            ParseError::Format(_) => "unsupported-document",
            ParseError::Schema(e) => e.kind(),
            ParseError::Vocabulary(_) => "cyclic-vocabulary",
            ParseError::HeaderMismatch(_) => "header-mismatch",
            ParseError::ArityMismatch { .. } => "arity-mismatch",
            ParseError::UnparsableValue { .. } => "unparsable-value",
            ParseError::UnknownLeftOperand(_) => "unknown-left-operand",
            ParseError::UnsupportedOperator { .. } => "unsupported-operator",
            ParseError::Condition(_) => "invalid-condition",
            ParseError::IllFormedRule(_) => "ill-formed-rule",
            ParseError::DanglingDuty(_) => "dangling-duty",
            ParseError::Policy(e) => e.kind(),
        }
    }
}

impl From<serde_json::Error> for ParseError {
    fn from(e: serde_json::Error) -> Self {
        ParseError::Json(e.to_string())
    }
}

impl From<ConditionError> for ParseError {
    fn from(e: ConditionError) -> Self {
        ParseError::Condition(e.to_string())
    }
}

impl From<BuildError> for ParseError {
    fn from(e: BuildError) -> Self {
        match e {
            BuildError::UnknownFeatureName(name) => ParseError::UnknownLeftOperand(name),
            other => ParseError::Condition(other.to_string()),
        }
    }
}

/// Reads either policy syntax: documents with an `@context` are ODRL,
/// everything else must be a native document.
pub fn parse_policy(text: &str, schema: &FeatureSchema) -> Result<FullPolicy, ParseError> {
    read_policy(text, schema, true)
}

/// Like [`parse_policy`] but leaves well-formedness to the caller.
pub fn parse_policy_unchecked(text: &str, schema: &FeatureSchema) -> Result<FullPolicy, ParseError> {
    read_policy(text, schema, false)
}

fn read_policy(text: &str, schema: &FeatureSchema, check: bool) -> Result<FullPolicy, ParseError> {
    let raw: serde_json::Value = serde_json::from_str(text)?;
    match raw.get("@context") {
        Some(_) => odrl::parse_odrl_value(&raw, schema, check),
        None => native::parse_native_value(&raw, schema, check),
    }
}
