//! Violation and validity of policies on a state of the world.
//!
//! Every clause is checked and every finding reported; [`is_valid`] is the
//! yes/no view of the same report.

use serde::Serialize;
use thiserror::Error;

use crate::matcher::{check_normal_form_rule, check_well_formed, matches, softmatch, IllFormedRule};
use crate::model::{deadlines, Event, EventError, EventRule, FeatureSchema, FullPolicy, LitePolicy, World};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("world does not conform to the schema: {0}")]
    SchemaMismatch(#[from] EventError),
    #[error(transparent)]
    IllFormedRule(#[from] IllFormedRule),
}

impl EvalError {
    pub fn kind(&self) -> &'static str {
        match self {
            EvalError::SchemaMismatch(_) => "schema-mismatch",
            EvalError::IllFormedRule(_) => "ill-formed-rule",
        }
    }
}

/// Which violation clause a finding comes from. Variant order is report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FindingClass {
    Permissions,
    Prohibitions,
    Obligations,
    PermissionDuties,
    PermissionDutiesWithConsequences,
    ProhibitionRemedies,
    ObligationConsequences,
}

impl FindingClass {
    pub fn name(self) -> &'static str {
        match self {
            FindingClass::Permissions => "permissions",
            FindingClass::Prohibitions => "prohibitions",
            FindingClass::Obligations => "obligations",
            FindingClass::PermissionDuties => "permission-duties",
            FindingClass::PermissionDutiesWithConsequences => "permission-duties-with-consequences",
            FindingClass::ProhibitionRemedies => "prohibition-remedies",
            FindingClass::ObligationConsequences => "obligation-consequences",
        }
    }
}

/// One violated clause instance.
///
/// Existential clauses carry witness events; universal ones (obligations,
/// obligation consequences) describe the event that is missing instead.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Finding {
    pub class: FindingClass,
    pub rules: Vec<String>,
    pub witnesses: Vec<Event>,
    pub missing: Option<String>,
}

/// An obligation that was met, with the events that meet it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fulfilment {
    pub rule: String,
    pub witnesses: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ViolationReport {
    pub findings: Vec<Finding>,
    pub fulfilled_obligations: Vec<Fulfilment>,
}

impl ViolationReport {
    pub fn is_valid(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn findings_of(&self, class: FindingClass) -> impl Iterator<Item = &Finding> + '_ {
        self.findings.iter().filter(move |f| f.class == class)
    }

    /// Witness events of all findings in one class, in report order.
    pub fn witnesses_of(&self, class: FindingClass) -> Vec<&Event> {
        self.findings_of(class).flat_map(|f| f.witnesses.iter()).collect()
    }
}

fn label(rule: &EventRule) -> String {
    rule.label().unwrap_or("<unlabelled>").to_string()
}

/// Policies that can be evaluated on a world.
pub trait Evaluate {
    fn evaluate(&self, world: &World, schema: &FeatureSchema) -> Result<ViolationReport, EvalError>;
}

impl Evaluate for LitePolicy {
    fn evaluate(&self, world: &World, schema: &FeatureSchema) -> Result<ViolationReport, EvalError> {
        evaluate_lite(self, world, schema)
    }
}

impl Evaluate for FullPolicy {
    fn evaluate(&self, world: &World, schema: &FeatureSchema) -> Result<ViolationReport, EvalError> {
        evaluate_full(self, world, schema)
    }
}

pub fn is_valid<P: Evaluate + ?Sized>(policy: &P, world: &World, schema: &FeatureSchema) -> Result<bool, EvalError> {
    Ok(policy.evaluate(world, schema)?.is_valid())
}

pub(crate) fn gate<'a>(
    rules: impl IntoIterator<Item = &'a EventRule>,
    normal_form: bool,
    schema: &FeatureSchema,
) -> Result<(), IllFormedRule> {
    for rule in rules {
        let report = if normal_form {
            check_normal_form_rule(rule, schema)
        } else {
            check_well_formed(rule, schema)
        };
        if let Some(v) = report.violations.into_iter().next() {
            return Err(v.into());
        }
    }
    Ok(())
}

/// Checks the three ODRL Lite clauses.
pub fn evaluate_lite(policy: &LitePolicy, world: &World, schema: &FeatureSchema) -> Result<ViolationReport, EvalError> {
    world.conforms_to(schema)?;
    gate(policy.rules(), policy.is_normal_form(), schema)?;
    let mut report = lite_clauses(policy, world, schema);
    report.findings.sort();
    Ok(report)
}

fn lite_clauses(policy: &LitePolicy, world: &World, schema: &FeatureSchema) -> ViolationReport {
    let mut findings = Vec::new();
    for e in world {
        if !policy.permissions().iter().any(|p| matches(p, e, schema)) {
            findings.push(Finding {
                class: FindingClass::Permissions,
                rules: Vec::new(),
                witnesses: vec![e.clone()],
                missing: None,
            });
        }
        for f in policy.prohibitions().iter().filter(|f| matches(f, e, schema)) {
            findings.push(Finding {
                class: FindingClass::Prohibitions,
                rules: vec![label(f)],
                witnesses: vec![e.clone()],
                missing: None,
            });
        }
    }
    let mut fulfilled_obligations = Vec::new();
    for o in policy.obligations() {
        let witnesses: Vec<Event> = world.iter().filter(|e| matches(o, e, schema)).cloned().collect();
        if witnesses.is_empty() {
            findings.push(Finding {
                class: FindingClass::Obligations,
                rules: vec![label(o)],
                witnesses: Vec::new(),
                missing: Some(format!("no event matches obligation `{}`", label(o))),
            });
        } else {
            fulfilled_obligations.push(Fulfilment { rule: label(o), witnesses });
        }
    }
    ViolationReport { findings, fulfilled_obligations }
}

/// Checks the Lite clauses plus duties, duties with consequences, remedies
/// and obligation consequences.
///
/// "Prior" and "subsequent" are inclusive: an event at the same tick as the
/// permission event counts as both.
pub fn evaluate_full(policy: &FullPolicy, world: &World, schema: &FeatureSchema) -> Result<ViolationReport, EvalError> {
    world.conforms_to(schema)?;
    gate(policy.rules(), policy.lite().is_normal_form(), schema)?;
    let mut report = lite_clauses(policy.lite(), world, schema);

    let exists = |rule: &EventRule, pred: &dyn Fn(&Event) -> bool| world.iter().any(|e| pred(e) && matches(rule, e, schema));

    for d in policy.duties() {
        for e in world.iter().filter(|e| matches(&d.permission, e, schema)) {
            let t = e.timestamp();
            if !exists(&d.duty, &|x| x.timestamp() <= t) {
                report.findings.push(Finding {
                    class: FindingClass::PermissionDuties,
                    rules: vec![label(&d.permission), label(&d.duty)],
                    witnesses: vec![e.clone()],
                    missing: Some(format!("duty `{}` not performed at or before {t}", label(&d.duty))),
                });
            }
        }
    }

    for d in policy.duty_consequences() {
        for e in world.iter().filter(|e| matches(&d.permission, e, schema)) {
            let t = e.timestamp();
            let prior_duty = exists(&d.duty, &|x| x.timestamp() <= t);
            let later_duty = exists(&d.duty, &|x| x.timestamp() >= t);
            let later_consequence = exists(&d.consequence, &|x| x.timestamp() >= t);
            if !prior_duty && (!later_duty || !later_consequence) {
                let missing = match (later_duty, later_consequence) {
                    (false, false) => "neither the duty nor the consequence followed",
                    (false, true) => "the duty never followed",
                    _ => "the consequence never followed",
                };
                report.findings.push(Finding {
                    class: FindingClass::PermissionDutiesWithConsequences,
                    rules: vec![label(&d.permission), label(&d.duty), label(&d.consequence)],
                    witnesses: vec![e.clone()],
                    missing: Some(format!("duty `{}` not performed before {t} and {missing}", label(&d.duty))),
                });
            }
        }
    }

    for r in policy.remedies() {
        for e in world.iter().filter(|e| matches(&r.prohibition, e, schema)) {
            let t = e.timestamp();
            if !exists(&r.remedy, &|x| x.timestamp() >= t) {
                report.findings.push(Finding {
                    class: FindingClass::ProhibitionRemedies,
                    rules: vec![label(&r.prohibition), label(&r.remedy)],
                    witnesses: vec![e.clone()],
                    missing: Some(format!("remedy `{}` not performed at or after {t}", label(&r.remedy))),
                });
            }
        }
    }

    for oc in policy.obligation_consequences() {
        let fulfilled = exists(&oc.obligation, &|_| true);
        let late = world.iter().any(|e| softmatch(&oc.obligation, e, schema));
        for t in deadlines(&oc.obligation) {
            let consequence = exists(&oc.consequence, &|x| x.timestamp() >= t);
            if !fulfilled && !(late && consequence) {
                report.findings.push(Finding {
                    class: FindingClass::ObligationConsequences,
                    rules: vec![label(&oc.obligation), label(&oc.consequence)],
                    witnesses: Vec::new(),
                    missing: Some(format!(
                        "obligation `{}` not met by {t}, and no late fulfilment followed by consequence `{}` at or after {t}",
                        label(&oc.obligation),
                        label(&oc.consequence)
                    )),
                });
                break;
            }
        }
    }

    report.findings.sort();
    Ok(report)
}
