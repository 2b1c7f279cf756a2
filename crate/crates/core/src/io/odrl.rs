//! A fixed profile of the ODRL JSON-LD serialisation.
//!
//! Documents must be compacted against the standard ODRL context and must
//! not carry local context definitions. Supported:
//!
//! - policy-level `assigner`, `assignee`, `target` and `action`, inherited by
//!   every rule that lacks its own;
//! - `permission`, `prohibition` and `obligation` rules with `action`,
//!   `target`, `assigner`, `assignee` and `constraint`;
//! - refined actions (`{"rdf:value": {"@id": "Print"}, "refinement": [...]}`),
//!   `AssetCollection` and `PartyCollection` objects with `source` and `refinement`;
//! - logical constraints `and`, `or` and `xone`;
//! - `duty` (with optional `consequence`) inside permissions, `remedy` inside
//!   prohibitions and `consequence` inside obligations.
//!
//! Identifiers are taken verbatim. Left operands resolve against the schema
//! by `odrl_term`, then by feature name (case-insensitive, also matching the
//! part after the last `.`), preferring features of the enclosing component.

use serde_json::Value as Json;

use super::json::{as_array, as_object, as_str, constant, literal_text, only_keys, Object};
use super::ParseError;
use crate::matcher::check_well_formed;
use crate::model::{
    Component, Condition, Duty, DutyWithConsequence, EventRule, FeatureSchema, FullPolicy, LitePolicy,
    ObligationConsequence, Operand, Operator, Remedy, SimpleCondition, Value, ACTION,
};

pub const ODRL_CONTEXT: &str = "http://www.w3.org/ns/odrl.jsonld";

const ODRL_NS: &str = "http://www.w3.org/ns/odrl/2/";

const POLICY_TYPES: &[&str] = &[
    "Policy", "Set", "Offer", "Agreement", "Request", "Ticket", "Assertion", "Privacy",
];

fn strip_ns(term: &str) -> &str {
    term.strip_prefix("odrl:")
        .or_else(|| term.strip_prefix(ODRL_NS))
        .unwrap_or(term)
}

fn check_context(doc: &Object) -> Result<(), ParseError> {
    let ok = |s: &str| s == ODRL_CONTEXT || s == ODRL_CONTEXT.replacen("http:", "https:", 1);
    match doc.get("@context") {
        Some(Json::String(s)) if ok(s) => Ok(()),
        Some(Json::Array(items)) if !items.is_empty() && items.iter().all(|i| i.as_str().is_some_and(ok)) => Ok(()),
        Some(_) => Err(ParseError::Format(format!(
            "`@context` must be exactly `{ODRL_CONTEXT}`; local or remote context definitions are not processed"
        ))),
        None => Err(ParseError::Format("document lacks `@context`".into())),
    }
}

#[derive(Default, Clone)]
struct Inherited<'a> {
    assigner: Option<&'a Json>,
    assignee: Option<&'a Json>,
    target: Option<&'a Json>,
    action: Option<&'a Json>,
}

struct Reader<'s> {
    schema: &'s FeatureSchema,
}

pub fn parse_odrl_policy(text: &str, schema: &FeatureSchema) -> Result<FullPolicy, ParseError> {
    let raw: Json = serde_json::from_str(text)?;
    parse_odrl_value(&raw, schema, true)
}

pub(crate) fn parse_odrl_value(raw: &Json, schema: &FeatureSchema, check: bool) -> Result<FullPolicy, ParseError> {
    let doc = as_object(raw, "ODRL document")?;
    check_context(doc)?;
    only_keys(
        doc,
        &[
            "@context", "@type", "type", "@id", "uid", "profile", "assigner", "assignee", "target", "action",
            "permission", "prohibition", "obligation",
        ],
        "policy",
    )?;
    if let Some(t) = doc.get("@type").or_else(|| doc.get("type")) {
        let t = strip_ns(as_str(t, "policy type")?);
        if !POLICY_TYPES.contains(&t) {
            return Err(ParseError::Format(format!("unsupported policy type `{t}`")));
        }
    }
    let inherited = Inherited {
        assigner: doc.get("assigner"),
        assignee: doc.get("assignee"),
        target: doc.get("target"),
        action: doc.get("action"),
    };
    let reader = Reader { schema };
    let list = |key: &str| -> Result<&[Json], ParseError> {
        match doc.get(key) {
            None => Ok(&[]),
            Some(v) => as_array(v, key),
        }
    };

    let mut permissions = Vec::new();
    let mut duties = Vec::new();
    let mut duty_consequences = Vec::new();
    for p in list("permission")? {
        let obj = as_object(p, "permission")?;
        let rule = reader.rule(obj, &inherited, &["duty"], "permission")?;
        for d in nested(obj, "duty")? {
            let dobj = as_object(d, "duty")?;
            let duty = reader.rule(dobj, &inherited, &["consequence"], "duty")?;
            let consequences = nested(dobj, "consequence")?;
            if consequences.is_empty() {
                duties.push(Duty { permission: rule.clone(), duty });
            } else {
                for c in consequences {
                    let consequence = reader.rule(as_object(c, "consequence")?, &inherited, &[], "consequence")?;
                    duty_consequences.push(DutyWithConsequence {
                        permission: rule.clone(),
                        duty: duty.clone(),
                        consequence,
                    });
                }
            }
        }
        permissions.push(rule);
    }

    let mut prohibitions = Vec::new();
    let mut remedies = Vec::new();
    for f in list("prohibition")? {
        let obj = as_object(f, "prohibition")?;
        let rule = reader.rule(obj, &inherited, &["remedy"], "prohibition")?;
        let remedy_rules = nested(obj, "remedy")?;
        if remedy_rules.is_empty() {
            prohibitions.push(rule);
        } else {
            for r in remedy_rules {
                let remedy = reader.rule(as_object(r, "remedy")?, &inherited, &[], "remedy")?;
                remedies.push(Remedy { prohibition: rule.clone(), remedy });
            }
        }
    }

    let mut obligations = Vec::new();
    let mut obligation_consequences = Vec::new();
    for o in list("obligation")? {
        let obj = as_object(o, "obligation")?;
        let rule = reader.rule(obj, &inherited, &["consequence"], "obligation")?;
        let consequences = nested(obj, "consequence")?;
        if consequences.is_empty() {
            obligations.push(rule);
        } else {
            for c in consequences {
                let consequence = reader.rule(as_object(c, "consequence")?, &inherited, &[], "consequence")?;
                obligation_consequences.push(ObligationConsequence { obligation: rule.clone(), consequence });
            }
        }
    }

    for rule in permissions
        .iter()
        .chain(&prohibitions)
        .chain(&obligations)
        .chain(duties.iter().map(|d| &d.duty))
        .chain(duty_consequences.iter().flat_map(|d| [&d.duty, &d.consequence]))
        .chain(remedies.iter().flat_map(|r| [&r.prohibition, &r.remedy]))
        .chain(obligation_consequences.iter().flat_map(|o| [&o.obligation, &o.consequence]))
        .filter(|_| check)
    {
        if let Some(v) = check_well_formed(rule, schema).violations.into_iter().next() {
            return Err(ParseError::IllFormedRule(v.into()));
        }
    }
    for rule in duties
        .iter()
        .map(|d| &d.duty)
        .chain(duty_consequences.iter().flat_map(|d| [&d.duty, &d.consequence]))
    {
        if !permissions.contains(rule) {
            return Err(ParseError::DanglingDuty(rule.label().unwrap_or("<unlabelled>").to_string()));
        }
    }

    let lite = LitePolicy::new(permissions, prohibitions, obligations);
    Ok(FullPolicy::new(lite, duties, duty_consequences, remedies, obligation_consequences)?)
}

fn nested<'a>(obj: &'a Object, key: &str) -> Result<&'a [Json], ParseError> {
    match obj.get(key) {
        None => Ok(&[]),
        Some(Json::Array(items)) => Ok(items),
        Some(single @ Json::Object(_)) => Ok(std::slice::from_ref(single)),
        Some(_) => Err(ParseError::Format(format!("`{key}` must be a rule object or an array of them"))),
    }
}

/// Items of a JSON array or of a `{"@list": [...]}` wrapper.
fn items<'a>(v: &'a Json, what: &str) -> Result<&'a [Json], ParseError> {
    match v {
        Json::Object(o) if o.len() == 1 && o.contains_key("@list") => as_array(&o["@list"], what),
        Json::Object(_) => Ok(std::slice::from_ref(v)),
        other => as_array(other, what),
    }
}

/// The identifier of `v`: a string, or an object's `@id`/`uid`/`source`.
fn identifier(v: &Json, what: &str) -> Result<String, ParseError> {
    match v {
        Json::String(s) => Ok(s.clone()),
        Json::Object(o) => ["source", "@id", "uid"]
            .iter()
            .find_map(|k| o.get(*k))
            .map(|id| identifier(id, what))
            .unwrap_or_else(|| Err(ParseError::Format(format!("{what} object has no identifier")))),
        _ => Err(ParseError::Format(format!("{what} must be a string or an object"))),
    }
}

impl Reader<'_> {
    fn rule(&self, obj: &Object, inherited: &Inherited, extra: &[&str], what: &str) -> Result<EventRule, ParseError> {
        let mut allowed = vec![
            "uid", "@id", "@type", "type", "action", "target", "assigner", "assignee", "constraint",
        ];
        allowed.extend_from_slice(extra);
        only_keys(obj, &allowed, what)?;

        let mut conditions = Vec::new();
        if let Some(action) = obj.get("action").or(inherited.action) {
            self.component(action, ACTION, "action", &mut conditions)?;
        }
        for (role, fallback) in [
            ("target", inherited.target),
            ("assigner", inherited.assigner),
            ("assignee", inherited.assignee),
        ] {
            if let Some(v) = obj.get(role).or(fallback) {
                let feature = self.core_feature(role)?;
                self.component(v, feature, role, &mut conditions)?;
            }
        }
        if let Some(cs) = obj.get("constraint") {
            for c in items(cs, "constraint")? {
                conditions.push(self.constraint(c, Component::Rho)?);
            }
        }
        let rule = EventRule::new(conditions);
        Ok(match obj.get("uid").or_else(|| obj.get("@id")) {
            Some(id) => rule.with_label(as_str(id, "rule uid")?),
            None => rule,
        })
    }

    fn core_feature(&self, term: &str) -> Result<usize, ParseError> {
        let features = self.schema.features();
        let core = |i: usize| self.schema.is_core(i);
        features
            .iter()
            .find(|f| core(f.id) && f.odrl_term.as_deref() == Some(term))
            .or_else(|| features.iter().find(|f| core(f.id) && f.name.eq_ignore_ascii_case(term)))
            .map(|f| f.id)
            .ok_or_else(|| ParseError::UnknownLeftOperand(term.to_string()))
    }

    /// Equality on a core component plus its refinements.
    fn component(&self, v: &Json, feature: usize, what: &str, out: &mut Vec<Condition>) -> Result<(), ParseError> {
        if v.is_array() {
            return Err(ParseError::Format(format!("{what} must be a single value, not an array")));
        }
        let (id, refinement) = match v {
            Json::Object(o) if feature == ACTION => {
                only_keys(o, &["rdf:value", "@id", "refinement"], what)?;
                let id = match o.get("rdf:value").or_else(|| o.get("@id")) {
                    Some(inner) => identifier(inner, what)?,
                    None => return Err(ParseError::Format("refined action lacks `rdf:value`".into())),
                };
                (id, o.get("refinement"))
            }
            Json::Object(o) => {
                only_keys(o, &["@id", "uid", "@type", "type", "source", "refinement"], what)?;
                (identifier(v, what)?, o.get("refinement"))
            }
            other => (identifier(other, what)?, None),
        };
        let id = if feature == ACTION { strip_ns(&id).to_string() } else { id };
        let value = constant(self.schema, feature, &id)?;
        out.push(Condition::Simple(SimpleCondition::new(
            self.schema,
            feature,
            Operator::Eq,
            Operand::Scalar(value),
        )?));
        if let Some(r) = refinement {
            for c in items(r, "refinement")? {
                out.push(self.constraint(c, Component::Feature(feature))?);
            }
        }
        Ok(())
    }

    fn constraint(&self, v: &Json, scope: Component) -> Result<Condition, ParseError> {
        let obj = as_object(v, "constraint")?;
        for (key, _) in obj.iter() {
            if strip_ns(key) == "andSequence" {
                return Err(ParseError::UnsupportedOperator {
                    operator: "andSequence".into(),
                    reason: "ordered conjunction has no interpretation over single events and is excluded from the supported fragment".into(),
                });
            }
        }
        for logical in ["and", "or", "xone"] {
            if let Some(operands) = obj.get(logical) {
                only_keys(obj, &[logical, "uid", "@id", "@type", "type"], "logical constraint")?;
                let parts = items(operands, logical)?
                    .iter()
                    .map(|c| self.constraint(c, scope))
                    .collect::<Result<Vec<_>, _>>()?;
                return Ok(match logical {
                    "and" => Condition::And(parts),
                    "or" => Condition::Or(parts),
                    _ => exactly_one(parts),
                });
            }
        }
        only_keys(
            obj,
            &["leftOperand", "operator", "rightOperand", "dataType", "uid", "@id", "@type", "type"],
            "constraint",
        )?;
        let left = match obj.get("leftOperand") {
            Some(l) => identifier(l, "leftOperand")?,
            None => return Err(ParseError::Format("constraint lacks `leftOperand`".into())),
        };
        let feature = self.left_operand(strip_ns(&left), scope)?;
        let op_name = match obj.get("operator") {
            Some(o) => identifier(o, "operator")?,
            None => return Err(ParseError::Format("constraint lacks `operator`".into())),
        };
        let op = Operator::from_odrl(&op_name).ok_or_else(|| ParseError::UnsupportedOperator {
            operator: op_name.clone(),
            reason: "not one of the twelve supported operators".into(),
        })?;
        let right = obj
            .get("rightOperand")
            .ok_or_else(|| ParseError::Format("constraint lacks `rightOperand`".into()))?;
        let mut literals = match right {
            Json::Array(members) => members.iter().map(right_literal).collect::<Result<Vec<_>, _>>()?,
            Json::Object(o) if o.contains_key("@list") => {
                items(right, "rightOperand")?.iter().map(right_literal).collect::<Result<Vec<_>, _>>()?
            }
            scalar => vec![right_literal(scalar)?],
        };
        let operand = if op == Operator::IsA {
            if literals.len() != 1 {
                return Err(ParseError::Condition("isA takes a single class".into()));
            }
            Operand::Scalar(Value::Identifier(literals.remove(0)))
        } else if op.is_scalar() && literals.len() == 1 {
            Operand::Scalar(constant(self.schema, feature, &literals[0])?)
        } else {
            Operand::Set(
                literals
                    .iter()
                    .map(|l| constant(self.schema, feature, l))
                    .collect::<Result<_, _>>()?,
            )
        };
        Ok(Condition::Simple(SimpleCondition::new(self.schema, feature, op, operand)?))
    }

    fn left_operand(&self, term: &str, scope: Component) -> Result<usize, ParseError> {
        let named = |name: &str| {
            name.eq_ignore_ascii_case(term) || name.rsplit('.').next().is_some_and(|tail| tail.eq_ignore_ascii_case(term))
        };
        let features = self.schema.features();
        let by_term = |scoped: bool| {
            features
                .iter()
                .find(|f| (!scoped || f.component == scope) && f.odrl_term.as_deref() == Some(term))
        };
        let by_name = |scoped: bool| features.iter().find(|f| (!scoped || f.component == scope) && named(&f.name));
        by_term(true)
            .or_else(|| by_name(true))
            .or_else(|| by_term(false))
            .or_else(|| by_name(false))
            .map(|f| f.id)
            .ok_or_else(|| ParseError::UnknownLeftOperand(term.to_string()))
    }
}

fn right_literal(v: &Json) -> Result<String, ParseError> {
    match v {
        Json::Object(o) => {
            only_keys(o, &["@value", "@type", "@id"], "rightOperand")?;
            match o.get("@value").or_else(|| o.get("@id")) {
                Some(inner) => literal_text(inner, "rightOperand"),
                None => Err(ParseError::Format("rightOperand object lacks `@value` or `@id`".into())),
            }
        }
        other => literal_text(other, "rightOperand"),
    }
}

/// `xone`: exactly one operand holds.
fn exactly_one(mut parts: Vec<Condition>) -> Condition {
    match parts.len() {
        1 => parts.remove(0),
        2 => {
            let b = parts.pop().expect("two");
            let a = parts.pop().expect("two");
            Condition::xor(a, b)
        }
        _ => Condition::Or(
            (0..parts.len())
                .map(|i| {
                    Condition::And(
                        parts
                            .iter()
                            .enumerate()
                            .map(|(j, c)| if i == j { c.clone() } else { Condition::negate(c.clone()) })
                            .collect(),
                    )
                })
                .collect(),
        ),
    }
}
