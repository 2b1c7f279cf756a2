use std::collections::BTreeSet;
use std::fmt;

use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Declared datatype of an event feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Datatype {
    Timestamp,
    Numeric,
    String,
    Identifier,
    IdentifierSet,
}

impl Datatype {
    /// Whether `<`, `<=`, `>`, `>=` are defined on values of this type.
    pub fn is_ordered(self) -> bool {
        matches!(self, Datatype::Timestamp | Datatype::Numeric | Datatype::String)
    }

    pub fn name(self) -> &'static str {
        match self {
            Datatype::Timestamp => "timestamp",
            Datatype::Numeric => "numeric",
            Datatype::String => "string",
            Datatype::Identifier => "identifier",
            Datatype::IdentifierSet => "identifier-set",
        }
    }

    /// Parses a textual literal of this datatype. `null` is handled by the caller.
    ///
    /// Timestamps accept integer ticks, RFC 3339 date-times and plain
    /// `YYYY-MM-DD` dates; the latter two map to seconds since the Unix epoch.
    pub fn parse_literal(self, raw: &str) -> Result<Value, String> {
        match self {
            Datatype::Timestamp => parse_timestamp(raw.trim()).map(Value::Timestamp),
            Datatype::Numeric => parse_number(raw.trim())
                .map(Value::Number)
                .ok_or_else(|| format!("`{raw}` is not a number")),
            Datatype::String => Ok(Value::Text(raw.to_string())),
            Datatype::Identifier => {
                let raw = raw.trim();
                if raw.is_empty() {
                    Err("empty identifier".to_string())
                } else {
                    Ok(Value::Identifier(raw.to_string()))
                }
            }
            Datatype::IdentifierSet => Ok(Value::IdentifierSet(
                raw.split('|')
                    .map(str::trim)
                    .filter(|m| !m.is_empty())
                    .map(str::to_string)
                    .collect(),
            )),
        }
    }

    /// Parses a member of a set operand or a scalar operand for a feature of this type.
    /// Members of identifier-set features are identifiers.
    pub fn parse_scalar(self, raw: &str) -> Result<Value, String> {
        match self {
            Datatype::IdentifierSet => Datatype::Identifier.parse_literal(raw),
            other => other.parse_literal(raw),
        }
    }
}

impl fmt::Display for Datatype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A feature value: null, a constant, or a finite set of identifiers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Null,
    Timestamp(i64),
    Number(Rational64),
    Text(String),
    Identifier(String),
    IdentifierSet(BTreeSet<String>),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn datatype(&self) -> Option<Datatype> {
        Some(match self {
            Value::Null => return None,
            Value::Timestamp(_) => Datatype::Timestamp,
            Value::Number(_) => Datatype::Numeric,
            Value::Text(_) => Datatype::String,
            Value::Identifier(_) => Datatype::Identifier,
            Value::IdentifierSet(_) => Datatype::IdentifierSet,
        })
    }

    pub fn identifier(s: impl Into<String>) -> Value {
        Value::Identifier(s.into())
    }

    pub fn integer(n: i64) -> Value {
        Value::Number(Rational64::from_integer(n))
    }

    pub fn identifier_set<I, S>(members: I) -> Value
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Value::IdentifierSet(members.into_iter().map(Into::into).collect())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("null"),
            Value::Timestamp(t) => write!(f, "{t}"),
            Value::Number(n) => f.write_str(&format_number(n)),
            Value::Text(s) | Value::Identifier(s) => f.write_str(s),
            Value::IdentifierSet(members) => {
                let joined: Vec<&str> = members.iter().map(String::as_str).collect();
                f.write_str(&joined.join("|"))
            }
        }
    }
}

fn parse_timestamp(raw: &str) -> Result<i64, String> {
    if let Ok(ticks) = raw.parse::<i64>() {
        return Ok(ticks);
    }
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(raw) {
        return Ok(dt.timestamp());
    }
    if let Ok(dt) = chrono::NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S") {
        return Ok(dt.and_utc().timestamp());
    }
    if let Ok(d) = chrono::NaiveDate::parse_from_str(raw, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp());
    }
    Err(format!("`{raw}` is neither integer ticks nor an ISO-8601 date-time"))
}

/// Parses a plain decimal literal (`-12`, `3.25`, `.5`) or a fraction
/// (`1/3`) into an exact rational.
pub fn parse_number(raw: &str) -> Option<Rational64> {
    if let Some((n, d)) = raw.split_once('/') {
        let numer: i64 = n.trim().parse().ok()?;
        let denom: i64 = d.trim().parse().ok()?;
        return (denom != 0).then(|| Rational64::new(numer, denom));
    }
    let (negative, digits) = match raw.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, raw.strip_prefix('+').unwrap_or(raw)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let scale = 10i64.checked_pow(u32::try_from(frac_part.len()).ok()?)?;
    let int_value: i64 = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
    let frac_value: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().ok()? };
    let numer = int_value.checked_mul(scale)?.checked_add(frac_value)?;
    let value = Rational64::new(numer, scale);
    Some(if negative { -value } else { value })
}

/// Renders a rational as an exact decimal when its denominator has only the
/// prime factors 2 and 5, and as `n/d` otherwise.
pub fn format_number(n: &Rational64) -> String {
    if n.is_integer() {
        return n.numer().to_string();
    }
    let mut denom = *n.denom();
    let mut twos = 0u32;
    let mut fives = 0u32;
    while denom % 2 == 0 {
        denom /= 2;
        twos += 1;
    }
    while denom % 5 == 0 {
        denom /= 5;
        fives += 1;
    }
    if denom != 1 {
        return format!("{}/{}", n.numer(), n.denom());
    }
    let places = twos.max(fives);
    let Some(scale) = 10i64.checked_pow(places) else {
        return format!("{}/{}", n.numer(), n.denom());
    };
    let Some(scaled) = (n * Rational64::from_integer(scale)).to_integer().checked_abs() else {
        return format!("{}/{}", n.numer(), n.denom());
    };
    let sign = if n.is_negative() { "-" } else { "" };
    let int_part = scaled / scale;
    let frac_part = scaled % scale;
    format!("{sign}{int_part}.{frac_part:0width$}", width = places as usize)
}

/// Lossy conversion used only for serialising numbers into JSON.
pub(crate) fn number_to_f64(n: &Rational64) -> f64 {
    if n.is_zero() {
        return 0.0;
    }
    n.to_f64().unwrap_or(f64::NAN)
}
