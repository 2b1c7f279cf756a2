use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::schema::FeatureSchema;
use super::value::{Datatype, Value};

/// The twelve supported ODRL comparison operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operator {
    Eq,
    Neq,
    Gt,
    Gteq,
    Lt,
    Lteq,
    IsA,
    HasPart,
    IsPartOf,
    IsAllOf,
    IsAnyOf,
    IsNoneOf,
}

impl Operator {
    pub const ALL: [Operator; 12] = [
        Operator::Eq,
        Operator::Neq,
        Operator::Gt,
        Operator::Gteq,
        Operator::Lt,
        Operator::Lteq,
        Operator::IsA,
        Operator::HasPart,
        Operator::IsPartOf,
        Operator::IsAllOf,
        Operator::IsAnyOf,
        Operator::IsNoneOf,
    ];

    /// Operators comparing the feature value against a single constant.
    pub fn is_scalar(self) -> bool {
        matches!(
            self,
            Operator::Eq | Operator::Neq | Operator::Gt | Operator::Gteq | Operator::Lt | Operator::Lteq
        )
    }

    pub fn is_ordering(self) -> bool {
        matches!(self, Operator::Gt | Operator::Gteq | Operator::Lt | Operator::Lteq)
    }

    /// ODRL vocabulary term, without the `odrl:` prefix.
    pub fn odrl_name(self) -> &'static str {
        match self {
            Operator::Eq => "eq",
            Operator::Neq => "neq",
            Operator::Gt => "gt",
            Operator::Gteq => "gteq",
            Operator::Lt => "lt",
            Operator::Lteq => "lteq",
            Operator::IsA => "isA",
            Operator::HasPart => "hasPart",
            Operator::IsPartOf => "isPartOf",
            Operator::IsAllOf => "isAllOf",
            Operator::IsAnyOf => "isAnyOf",
            Operator::IsNoneOf => "isNoneOf",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Operator::Eq => "=",
            Operator::Neq => "!=",
            Operator::Gt => ">",
            Operator::Gteq => ">=",
            Operator::Lt => "<",
            Operator::Lteq => "<=",
            other => other.odrl_name(),
        }
    }

    /// Parses an ODRL operator name, with or without the `odrl:` prefix.
    /// `rdf:type` is accepted as a synonym of `isA`, `equals` of `eq`.
    pub fn from_odrl(name: &str) -> Option<Operator> {
        if name == "rdf:type" {
            return Some(Operator::IsA);
        }
        let bare = name
            .strip_prefix("odrl:")
            .or_else(|| name.strip_prefix("http://www.w3.org/ns/odrl/2/"))
            .unwrap_or(name);
        match bare {
            "equals" => Some(Operator::Eq),
            _ => Operator::ALL.into_iter().find(|op| op.odrl_name() == bare),
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Right operand of a simple condition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operand {
    Scalar(Value),
    Set(BTreeSet<Value>),
}

impl Operand {
    /// All constants mentioned by the operand.
    pub fn constants(&self) -> impl Iterator<Item = &Value> + '_ {
        let (one, many) = match self {
            Operand::Scalar(v) => (Some(v), None),
            Operand::Set(s) => (None, Some(s.iter())),
        };
        one.into_iter().chain(many.into_iter().flatten())
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Scalar(v) => write!(f, "{v}"),
            Operand::Set(members) => {
                f.write_str("{")?;
                for (i, m) in members.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{m}")?;
                }
                f.write_str("}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConditionError {
    #[error("feature {0} is not declared in the schema")]
    UnknownFeature(usize),
    #[error("operator {op} takes a single constant, not a set")]
    SetOperandForScalarOperator { op: Operator },
    #[error("operator isA takes a single class identifier")]
    BadClassOperand,
    #[error("operand `{value}` is not a valid {expected} constant for feature {feature}")]
    OperandKind { feature: usize, expected: Datatype, value: String },
}

/// A triple ⟨feature, operator, operand⟩.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimpleCondition {
    feature: usize,
    op: Operator,
    operand: Operand,
}

impl SimpleCondition {
    /// Validates the operand against the feature's datatype and the operator's arity.
    pub fn new(schema: &FeatureSchema, feature: usize, op: Operator, operand: Operand) -> Result<Self, ConditionError> {
        let datatype = schema.datatype(feature).ok_or(ConditionError::UnknownFeature(feature))?;
        if op.is_scalar() && matches!(operand, Operand::Set(_)) {
            return Err(ConditionError::SetOperandForScalarOperator { op });
        }
        if op == Operator::IsA {
            return match operand {
                Operand::Scalar(Value::Identifier(_)) => Ok(SimpleCondition { feature, op, operand }),
                _ => Err(ConditionError::BadClassOperand),
            };
        }
        let member_type = match datatype {
            Datatype::IdentifierSet => Datatype::Identifier,
            other => other,
        };
        for constant in operand.constants() {
            if constant.datatype() != Some(member_type) {
                return Err(ConditionError::OperandKind {
                    feature,
                    expected: member_type,
                    value: constant.to_string(),
                });
            }
        }
        Ok(SimpleCondition { feature, op, operand })
    }

    pub(crate) fn from_parts(feature: usize, op: Operator, operand: Operand) -> Self {
        SimpleCondition { feature, op, operand }
    }

    pub fn feature(&self) -> usize {
        self.feature
    }

    pub fn op(&self) -> Operator {
        self.op
    }

    pub fn operand(&self) -> &Operand {
        &self.operand
    }

    /// Features whose values decide this condition: the feature itself and,
    /// for `isA` backed by a companion class feature, that feature too.
    pub fn dependencies(&self, schema: &FeatureSchema) -> Vec<usize> {
        let mut deps = vec![self.feature];
        if self.op == Operator::IsA {
            if let Some(super::schema::ClassSource::Companion(j)) = schema.class_source(self.feature) {
                deps.push(*j);
            }
        }
        deps
    }
}

/// A simple condition or a boolean combination of conditions.
///
/// `And(vec![])` is true and `Or(vec![])` is false.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    Simple(SimpleCondition),
    And(Vec<Condition>),
    Or(Vec<Condition>),
    Not(Box<Condition>),
    Xor(Box<Condition>, Box<Condition>),
}

impl From<SimpleCondition> for Condition {
    fn from(c: SimpleCondition) -> Self {
        Condition::Simple(c)
    }
}

impl Condition {
    pub fn truth() -> Condition {
        Condition::And(Vec::new())
    }

    pub fn falsity() -> Condition {
        Condition::Or(Vec::new())
    }

    pub fn negate(c: Condition) -> Condition {
        Condition::Not(Box::new(c))
    }

    pub fn xor(a: Condition, b: Condition) -> Condition {
        Condition::Xor(Box::new(a), Box::new(b))
    }

    pub fn is_simple(&self) -> bool {
        matches!(self, Condition::Simple(_))
    }

    /// Visits every simple condition in the tree.
    pub fn for_each_simple<'a>(&'a self, f: &mut impl FnMut(&'a SimpleCondition)) {
        match self {
            Condition::Simple(s) => f(s),
            Condition::And(cs) | Condition::Or(cs) => cs.iter().for_each(|c| c.for_each_simple(f)),
            Condition::Not(c) => c.for_each_simple(f),
            Condition::Xor(a, b) => {
                a.for_each_simple(f);
                b.for_each_simple(f);
            }
        }
    }

    pub fn simple_conditions(&self) -> Vec<&SimpleCondition> {
        let mut out = Vec::new();
        self.for_each_simple(&mut |s| out.push(s));
        out
    }

    /// The features appearing in the condition (I_C).
    pub fn features(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.for_each_simple(&mut |s| {
            out.insert(s.feature);
        });
        out
    }

    pub fn display<'a>(&'a self, schema: &'a FeatureSchema) -> ConditionDisplay<'a> {
        ConditionDisplay { condition: self, schema: Some(schema) }
    }
}

pub struct ConditionDisplay<'a> {
    condition: &'a Condition,
    schema: Option<&'a FeatureSchema>,
}

impl ConditionDisplay<'_> {
    fn write(&self, c: &Condition, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, cs: &[Condition], sep: &str| -> fmt::Result {
            f.write_str("(")?;
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                self.write(c, f)?;
            }
            f.write_str(")")
        };
        match c {
            Condition::Simple(s) => {
                let name = self
                    .schema
                    .and_then(|sc| sc.feature(s.feature))
                    .map(|d| d.name.clone())
                    .unwrap_or_else(|| format!("#{}", s.feature));
                write!(f, "<{name} {} {}>", s.op, s.operand)
            }
            Condition::And(cs) if cs.is_empty() => f.write_str("true"),
            Condition::Or(cs) if cs.is_empty() => f.write_str("false"),
            Condition::And(cs) => join(f, cs, " and "),
            Condition::Or(cs) => join(f, cs, " or "),
            Condition::Not(c) => {
                f.write_str("not ")?;
                self.write(c, f)
            }
            Condition::Xor(a, b) => {
                f.write_str("(")?;
                self.write(a, f)?;
                f.write_str(" xor ")?;
                self.write(b, f)?;
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for ConditionDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.condition, f)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        ConditionDisplay { condition: self, schema: None }.write(self, f)
    }
}
