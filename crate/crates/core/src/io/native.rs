//! The native policy document: a direct rendering of a policy with rules
//! spelled out condition by condition.
//!
//! ```json
//! {"format": "odrl-native/1",
//!  "permissions": [{"label": "p1", "conditions": [
//!      {"feature": "Actor", "op": "eq", "value": "Alice"},
//!      {"or": [{"feature": "Datetime", "op": "lt", "value": 3},
//!              {"not": {"feature": "Asset", "op": "isAnyOf", "value": ["Book", "Map"]}}]}]}],
//!  "prohibitions": [], "obligations": [],
//!  "duties": [{"permission": "p1", "duty": "p2"}],
//!  "remedies": [{"prohibition": {"conditions": []}, "remedy": "p3"}]}
//! ```
//!
//! Rules inside duty tuples refer to permissions by label, or repeat them
//! inline. Remedied prohibitions and consequence-bearing obligations are
//! always inline since they sit outside F and O.

use serde_json::{json, Value as Json};

use super::json::{as_array, as_object, as_str, check_format, constant, literal_text, only_keys, Object};
use super::{ParseError, NATIVE_FORMAT};
use crate::matcher::{check_normal_form_rule, check_well_formed};
use crate::model::{
    Condition, Duty, DutyWithConsequence, EventRule, FeatureSchema, FullPolicy, LitePolicy, ObligationConsequence,
    Operand, Operator, Remedy, SimpleCondition,
};

pub fn parse_native_policy(text: &str, schema: &FeatureSchema) -> Result<FullPolicy, ParseError> {
    let raw: Json = serde_json::from_str(text)?;
    parse_native_value(&raw, schema, true)
}

pub(crate) fn parse_native_value(raw: &Json, schema: &FeatureSchema, check: bool) -> Result<FullPolicy, ParseError> {
    let doc = as_object(raw, "policy document")?;
    check_format(doc, NATIVE_FORMAT, "policy document")?;
    only_keys(
        doc,
        &[
            "format",
            "normal_form",
            "permissions",
            "prohibitions",
            "obligations",
            "duties",
            "duty_consequences",
            "remedies",
            "obligation_consequences",
        ],
        "policy document",
    )?;
    let normal_form = match doc.get("normal_form") {
        None => false,
        Some(Json::Bool(b)) => *b,
        Some(_) => return Err(ParseError::Format("`normal_form` must be a boolean".into())),
    };
    let rules = |key: &str| -> Result<Vec<EventRule>, ParseError> {
        match doc.get(key) {
            None => Ok(Vec::new()),
            Some(v) => as_array(v, key)?.iter().map(|r| parse_rule(r, schema, key)).collect(),
        }
    };
    let permissions = rules("permissions")?;
    let prohibitions = rules("prohibitions")?;
    let obligations = rules("obligations")?;
    let tuples = |key: &str| -> Result<Vec<&Object>, ParseError> {
        match doc.get(key) {
            None => Ok(Vec::new()),
            Some(v) => as_array(v, key)?.iter().map(|t| as_object(t, key)).collect(),
        }
    };
    let reference = |obj: &Object, field: &str, what: &str| -> Result<EventRule, ParseError> {
        let v = obj
            .get(field)
            .ok_or_else(|| ParseError::Format(format!("{what} lacks `{field}`")))?;
        match v {
            Json::String(label) => permissions
                .iter()
                .find(|p| p.label() == Some(label))
                .cloned()
                .ok_or_else(|| ParseError::DanglingDuty(label.clone())),
            other => {
                let rule = parse_rule(other, schema, what)?;
                match permissions.iter().find(|p| **p == rule) {
                    Some(p) => Ok(p.clone()),
                    None => Err(ParseError::DanglingDuty(rule.label().unwrap_or("<inline>").to_string())),
                }
            }
        }
    };

    let mut duties = Vec::new();
    for t in tuples("duties")? {
        only_keys(t, &["permission", "duty"], "duty")?;
        duties.push(Duty { permission: reference(t, "permission", "duty")?, duty: reference(t, "duty", "duty")? });
    }
    let mut duty_consequences = Vec::new();
    for t in tuples("duty_consequences")? {
        only_keys(t, &["permission", "duty", "consequence"], "duty consequence")?;
        duty_consequences.push(DutyWithConsequence {
            permission: reference(t, "permission", "duty consequence")?,
            duty: reference(t, "duty", "duty consequence")?,
            consequence: reference(t, "consequence", "duty consequence")?,
        });
    }
    let mut remedies = Vec::new();
    for t in tuples("remedies")? {
        only_keys(t, &["prohibition", "remedy"], "remedy")?;
        let prohibition = t
            .get("prohibition")
            .ok_or_else(|| ParseError::Format("remedy lacks `prohibition`".into()))?;
        remedies.push(Remedy {
            prohibition: parse_rule(prohibition, schema, "remedy")?,
            remedy: reference(t, "remedy", "remedy")?,
        });
    }
    let mut obligation_consequences = Vec::new();
    for t in tuples("obligation_consequences")? {
        only_keys(t, &["obligation", "consequence"], "obligation consequence")?;
        let obligation = t
            .get("obligation")
            .ok_or_else(|| ParseError::Format("obligation consequence lacks `obligation`".into()))?;
        obligation_consequences.push(ObligationConsequence {
            obligation: parse_rule(obligation, schema, "obligation consequence")?,
            consequence: reference(t, "consequence", "obligation consequence")?,
        });
    }

    let mut lite = LitePolicy::new(permissions, prohibitions, obligations);
    if normal_form {
        lite = lite.mark_normal_form();
    }
    let policy = FullPolicy::new(lite, duties, duty_consequences, remedies, obligation_consequences)?;
    for rule in policy.rules().filter(|_| check) {
        let report = if normal_form {
            check_normal_form_rule(rule, schema)
        } else {
            check_well_formed(rule, schema)
        };
        if let Some(v) = report.violations.into_iter().next() {
            return Err(ParseError::IllFormedRule(v.into()));
        }
    }
    Ok(policy)
}

fn parse_rule(v: &Json, schema: &FeatureSchema, what: &str) -> Result<EventRule, ParseError> {
    let obj = as_object(v, &format!("rule in {what}"))?;
    only_keys(obj, &["label", "conditions"], "rule")?;
    let conditions = match obj.get("conditions") {
        None => Vec::new(),
        Some(cs) => as_array(cs, "conditions")?
            .iter()
            .map(|c| parse_condition(c, schema))
            .collect::<Result<Vec<_>, _>>()?,
    };
    let rule = EventRule::new(conditions);
    Ok(match obj.get("label") {
        None => rule,
        Some(l) => rule.with_label(as_str(l, "rule label")?),
    })
}

fn parse_condition(v: &Json, schema: &FeatureSchema) -> Result<Condition, ParseError> {
    let obj = as_object(v, "condition")?;
    let list = |key: &str| -> Result<Vec<Condition>, ParseError> {
        as_array(&obj[key], key)?.iter().map(|c| parse_condition(c, schema)).collect()
    };
    if obj.contains_key("and") {
        only_keys(obj, &["and"], "condition")?;
        return Ok(Condition::And(list("and")?));
    }
    if obj.contains_key("or") {
        only_keys(obj, &["or"], "condition")?;
        return Ok(Condition::Or(list("or")?));
    }
    if obj.contains_key("not") {
        only_keys(obj, &["not"], "condition")?;
        return Ok(Condition::negate(parse_condition(&obj["not"], schema)?));
    }
    if obj.contains_key("xor") {
        only_keys(obj, &["xor"], "condition")?;
        let mut parts = list("xor")?;
        if parts.len() != 2 {
            return Err(ParseError::Format("`xor` takes exactly two conditions".into()));
        }
        let b = parts.pop().expect("two parts");
        let a = parts.pop().expect("two parts");
        return Ok(Condition::xor(a, b));
    }
    only_keys(obj, &["feature", "op", "value"], "condition")?;
    let name = as_str(
        obj.get("feature").ok_or_else(|| ParseError::Format("condition lacks `feature`".into()))?,
        "condition feature",
    )?;
    let feature = schema
        .index_of(name)
        .ok_or_else(|| ParseError::UnknownLeftOperand(name.to_string()))?;
    let op_name = as_str(
        obj.get("op").ok_or_else(|| ParseError::Format("condition lacks `op`".into()))?,
        "condition op",
    )?;
    let op = Operator::from_odrl(op_name).ok_or_else(|| ParseError::UnsupportedOperator {
        operator: op_name.to_string(),
        reason: "not one of the twelve supported operators".into(),
    })?;
    let value = obj.get("value").ok_or_else(|| ParseError::Format("condition lacks `value`".into()))?;
    let operand = match value {
        Json::Array(items) => Operand::Set(
            items
                .iter()
                .map(|m| constant(schema, feature, &literal_text(m, "set member")?))
                .collect::<Result<_, _>>()?,
        ),
        scalar if op == Operator::IsA => {
            Operand::Scalar(crate::model::Value::Identifier(literal_text(scalar, "class")?))
        }
        scalar => Operand::Scalar(constant(schema, feature, &literal_text(scalar, "value")?)?),
    };
    Ok(Condition::Simple(SimpleCondition::new(schema, feature, op, operand)?))
}

fn condition_json(c: &Condition, schema: &FeatureSchema) -> Json {
    match c {
        Condition::Simple(s) => {
            let name = schema.feature(s.feature()).map(|f| f.name.clone()).unwrap_or_default();
            let value = match s.operand() {
                Operand::Scalar(v) => Json::String(v.to_string()),
                Operand::Set(members) => Json::Array(members.iter().map(|m| Json::String(m.to_string())).collect()),
            };
            json!({"feature": name, "op": s.op().odrl_name(), "value": value})
        }
        Condition::And(cs) => json!({"and": cs.iter().map(|c| condition_json(c, schema)).collect::<Vec<_>>()}),
        Condition::Or(cs) => json!({"or": cs.iter().map(|c| condition_json(c, schema)).collect::<Vec<_>>()}),
        Condition::Not(c) => json!({"not": condition_json(c, schema)}),
        Condition::Xor(a, b) => json!({"xor": [condition_json(a, schema), condition_json(b, schema)]}),
    }
}

pub(crate) fn rule_json(rule: &EventRule, schema: &FeatureSchema) -> Json {
    let conditions: Vec<Json> = rule.conditions().iter().map(|c| condition_json(c, schema)).collect();
    match rule.label() {
        Some(label) => json!({"label": label, "conditions": conditions}),
        None => json!({"conditions": conditions}),
    }
}

pub(crate) fn native_policy_json(policy: &FullPolicy, schema: &FeatureSchema) -> Json {
    let lite = policy.lite();
    let rules = |rs: &[EventRule]| Json::Array(rs.iter().map(|r| rule_json(r, schema)).collect());
    let reference = |r: &EventRule| match lite.permissions().iter().find(|p| *p == r).and_then(|p| p.label()) {
        Some(label) => Json::String(label.to_string()),
        None => rule_json(r, schema),
    };
    let mut doc = serde_json::Map::new();
    doc.insert("format".into(), json!(NATIVE_FORMAT));
    if lite.is_normal_form() {
        doc.insert("normal_form".into(), json!(true));
    }
    doc.insert("permissions".into(), rules(lite.permissions()));
    doc.insert("prohibitions".into(), rules(lite.prohibitions()));
    doc.insert("obligations".into(), rules(lite.obligations()));
    if !policy.duties().is_empty() {
        let v = policy
            .duties()
            .iter()
            .map(|d| json!({"permission": reference(&d.permission), "duty": reference(&d.duty)}))
            .collect();
        doc.insert("duties".into(), Json::Array(v));
    }
    if !policy.duty_consequences().is_empty() {
        let v = policy
            .duty_consequences()
            .iter()
            .map(|d| {
                json!({
                    "permission": reference(&d.permission),
                    "duty": reference(&d.duty),
                    "consequence": reference(&d.consequence),
                })
            })
            .collect();
        doc.insert("duty_consequences".into(), Json::Array(v));
    }
    if !policy.remedies().is_empty() {
        let v = policy
            .remedies()
            .iter()
            .map(|r| json!({"prohibition": rule_json(&r.prohibition, schema), "remedy": reference(&r.remedy)}))
            .collect();
        doc.insert("remedies".into(), Json::Array(v));
    }
    if !policy.obligation_consequences().is_empty() {
        let v = policy
            .obligation_consequences()
            .iter()
            .map(|o| json!({"obligation": rule_json(&o.obligation, schema), "consequence": reference(&o.consequence)}))
            .collect();
        doc.insert("obligation_consequences".into(), Json::Array(v));
    }
    Json::Object(doc)
}

pub fn write_native_policy(policy: &FullPolicy, schema: &FeatureSchema) -> String {
    serde_json::to_string_pretty(&native_policy_json(policy, schema)).expect("policy serialises")
}
