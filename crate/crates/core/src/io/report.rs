//! JSON renderings of reports, verdicts and errors. Every document carries a
//! top-level `format` tag.

use serde_json::{json, Map, Value as Json};

use crate::comparator::ConflictVerdict;
use crate::evaluator::ViolationReport;
use crate::matcher::WellFormednessReport;
use crate::model::value::number_to_f64;
use crate::model::{Event, FeatureSchema, Value, World};

pub const REPORT_FORMAT: &str = "odrl-eval-report/1";
pub const VERDICT_FORMAT: &str = "odrl-conflict-verdict/1";
pub const CHECK_FORMAT: &str = "odrl-check-report/1";
pub const ERROR_FORMAT: &str = "odrl-error/1";

fn feature_value(v: &Value) -> Json {
    match v {
        Value::Number(n) if !n.is_integer() && !crate::model::value::format_number(n).contains('/') => {
            json!(number_to_f64(n))
        }
        other => super::json::value_json(other),
    }
}

/// An event as an object keyed by feature name, in schema order.
pub fn event_json(event: &Event, schema: &FeatureSchema) -> Json {
    let mut obj = Map::new();
    for (decl, value) in schema.features().iter().zip(event.values()) {
        obj.insert(decl.name.clone(), feature_value(value));
    }
    Json::Object(obj)
}

pub fn world_json(world: &World, schema: &FeatureSchema) -> Json {
    Json::Array(world.iter().map(|e| event_json(e, schema)).collect())
}

fn events_json<'a>(events: impl IntoIterator<Item = &'a Event>, schema: &FeatureSchema) -> Json {
    Json::Array(events.into_iter().map(|e| event_json(e, schema)).collect())
}

pub fn violation_report_json(report: &ViolationReport, schema: &FeatureSchema) -> Json {
    let findings: Vec<Json> = report
        .findings
        .iter()
        .map(|f| {
            json!({
                "clause": f.class.name(),
                "rules": f.rules,
                "witnesses": events_json(&f.witnesses, schema),
                "missing": f.missing,
            })
        })
        .collect();
    let fulfilled: Vec<Json> = report
        .fulfilled_obligations
        .iter()
        .map(|f| json!({"rule": f.rule, "witnesses": events_json(&f.witnesses, schema)}))
        .collect();
    json!({
        "format": REPORT_FORMAT,
        "valid": report.is_valid(),
        "findings": findings,
        "fulfilled_obligations": fulfilled,
    })
}

pub fn verdict_json(verdict: &ConflictVerdict, schema: &FeatureSchema) -> Json {
    let failures: Vec<Json> = verdict
        .failures
        .iter()
        .map(|f| {
            json!({
                "direction": f.direction,
                "cause": f.cause,
                "rule": f.rule,
                "witnesses": world_json(&f.witnesses, schema),
            })
        })
        .collect();
    json!({
        "format": VERDICT_FORMAT,
        "kind": verdict.kind,
        "method": verdict.method,
        "normalized": verdict.normalized,
        "conflict": verdict.conflict(),
        "cause": verdict.cause(),
        "failures": failures,
    })
}

pub fn check_report_json(report: &WellFormednessReport, schema: &FeatureSchema) -> Json {
    let violations: Vec<Json> = report
        .violations
        .iter()
        .map(|v| {
            let names: Vec<String> = v
                .features
                .iter()
                .map(|&i| schema.feature(i).map(|f| f.name.clone()).unwrap_or_else(|| format!("#{i}")))
                .collect();
            json!({"rule": v.rule, "item": v.item, "message": v.item.to_string(), "features": names})
        })
        .collect();
    json!({"format": CHECK_FORMAT, "ok": report.ok, "violations": violations})
}

pub fn error_json(kind: &str, message: &str) -> Json {
    json!({"format": ERROR_FORMAT, "error": {"kind": kind, "message": message}})
}
