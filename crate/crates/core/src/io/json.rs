//! Small helpers for walking `serde_json` trees with precise diagnostics.

use serde_json::{Map, Value as Json};

use super::ParseError;
use crate::model::{Datatype, FeatureSchema, Value};

pub(crate) type Object = Map<String, Json>;

pub(crate) fn as_object<'a>(v: &'a Json, what: &str) -> Result<&'a Object, ParseError> {
    v.as_object().ok_or_else(|| ParseError::Format(format!("{what} must be a JSON object")))
}

pub(crate) fn as_array<'a>(v: &'a Json, what: &str) -> Result<&'a [Json], ParseError> {
    v.as_array()
        .map(Vec::as_slice)
        .ok_or_else(|| ParseError::Format(format!("{what} must be a JSON array")))
}

pub(crate) fn as_str<'a>(v: &'a Json, what: &str) -> Result<&'a str, ParseError> {
    v.as_str().ok_or_else(|| ParseError::Format(format!("{what} must be a string")))
}

/// Rejects keys outside `allowed`.
pub(crate) fn only_keys(obj: &Object, allowed: &[&str], what: &str) -> Result<(), ParseError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(ParseError::Format(format!("unknown field `{k}` in {what}"))),
        None => Ok(()),
    }
}

pub(crate) fn check_format(obj: &Object, expected: &str, what: &str) -> Result<(), ParseError> {
    match obj.get("format") {
        Some(Json::String(tag)) if tag == expected => Ok(()),
        Some(Json::String(tag)) => Err(ParseError::Format(format!(
            "{what} has format `{tag}`, expected `{expected}`"
        ))),
        Some(_) => Err(ParseError::Format(format!("{what}: `format` must be a string"))),
        None => Err(ParseError::Format(format!("{what} lacks a `format` field (expected `{expected}`)"))),
    }
}

/// Textual form of a JSON scalar used as a literal; numbers keep their source spelling.
pub(crate) fn literal_text(v: &Json, what: &str) -> Result<String, ParseError> {
    match v {
        Json::String(s) => Ok(s.clone()),
        Json::Number(n) => Ok(n.to_string()),
        Json::Bool(b) => Ok(b.to_string()),
        _ => Err(ParseError::Format(format!("{what} must be a string or number"))),
    }
}

/// Parses a constant for a condition on `feature`.
pub(crate) fn constant(schema: &FeatureSchema, feature: usize, raw: &str) -> Result<Value, ParseError> {
    let datatype = schema.datatype(feature).unwrap_or(Datatype::String);
    datatype.parse_scalar(raw).map_err(|reason| {
        let name = schema.feature(feature).map(|f| f.name.as_str()).unwrap_or("?");
        ParseError::Condition(format!("bad constant for feature `{name}`: {reason}"))
    })
}

/// JSON rendering of a feature value: null, a number, or a string.
pub(crate) fn value_json(v: &Value) -> Json {
    match v {
        Value::Null => Json::Null,
        Value::Timestamp(t) => Json::from(*t),
        Value::Number(n) if n.is_integer() => Json::from(*n.numer()),
        other => Json::String(other.to_string()),
    }
}
