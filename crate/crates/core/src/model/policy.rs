use thiserror::Error;

use super::condition::{Condition, Operand, Operator};
use super::rule::EventRule;
use super::schema::DATETIME;
use super::value::Value;

/// ⟨P, F, O⟩: permissions, prohibitions and obligations.
///
/// `normal_form` marks policies produced by normalisation. Their rules may
/// negate core-component equalities and disjoin across components, which
/// authored ODRL rules cannot do; the evaluator checks them with a relaxed
/// well-formedness test.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LitePolicy {
    permissions: Vec<EventRule>,
    prohibitions: Vec<EventRule>,
    obligations: Vec<EventRule>,
    normal_form: bool,
}

fn dedup_labelled(rules: impl IntoIterator<Item = EventRule>, prefix: &str) -> Vec<EventRule> {
    let mut out: Vec<EventRule> = Vec::new();
    for rule in rules {
        if !out.contains(&rule) {
            out.push(rule);
        }
    }
    for (i, rule) in out.iter_mut().enumerate() {
        rule.set_label_if_missing(|| format!("{prefix}{}", i + 1));
    }
    out
}

impl LitePolicy {
    /// Rule sets are deduplicated; unlabelled rules are named `p1`, `f1`, `o1`, ...
    pub fn new(
        permissions: impl IntoIterator<Item = EventRule>,
        prohibitions: impl IntoIterator<Item = EventRule>,
        obligations: impl IntoIterator<Item = EventRule>,
    ) -> Self {
        LitePolicy {
            permissions: dedup_labelled(permissions, "p"),
            prohibitions: dedup_labelled(prohibitions, "f"),
            obligations: dedup_labelled(obligations, "o"),
            normal_form: false,
        }
    }

    pub fn empty() -> Self {
        LitePolicy::default()
    }

    pub(crate) fn into_normal_form(mut self) -> Self {
        self.normal_form = true;
        self
    }

    /// Restores the normal-form marker when reading back a serialised policy.
    pub fn mark_normal_form(self) -> Self {
        self.into_normal_form()
    }

    pub fn permissions(&self) -> &[EventRule] {
        &self.permissions
    }

    pub fn prohibitions(&self) -> &[EventRule] {
        &self.prohibitions
    }

    pub fn obligations(&self) -> &[EventRule] {
        &self.obligations
    }

    pub fn is_normal_form(&self) -> bool {
        self.normal_form
    }

    pub fn rules(&self) -> impl Iterator<Item = &EventRule> + '_ {
        self.permissions.iter().chain(&self.prohibitions).chain(&self.obligations)
    }

    pub(crate) fn with_permissions(&self, permissions: Vec<EventRule>) -> Self {
        LitePolicy {
            permissions: dedup_labelled(permissions, "p"),
            prohibitions: self.prohibitions.clone(),
            obligations: self.obligations.clone(),
            normal_form: self.normal_form,
        }
    }
}

/// ⟨τ, τ′⟩ ∈ DP: `duty` must precede any exercise of `permission`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Duty {
    pub permission: EventRule,
    pub duty: EventRule,
}

/// ⟨τ, τ′, τ″⟩ ∈ DPC: a duty whose late fulfilment requires `consequence`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DutyWithConsequence {
    pub permission: EventRule,
    pub duty: EventRule,
    pub consequence: EventRule,
}

/// ⟨τ, τ′⟩ ∈ FR: `remedy` must follow any event matching `prohibition`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Remedy {
    pub prohibition: EventRule,
    pub remedy: EventRule,
}

/// ⟨τ, τ′⟩ ∈ OC: `consequence` is due when `obligation` misses its deadline.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObligationConsequence {
    pub obligation: EventRule,
    pub consequence: EventRule,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("{role} rule `{label}` of a duty tuple is not among the permissions")]
    NotPermitted { role: &'static str, label: String },
    #[error("remedied prohibition `{0}` must not also be in the prohibition set")]
    RemediedProhibitionInF(String),
    #[error("obligation `{0}` with a consequence must not also be in the obligation set")]
    ConsequenceObligationInO(String),
    #[error("obligation `{0}` with a consequence has no <Datetime, <=, t> deadline")]
    MissingDeadline(String),
}

impl PolicyError {
    pub fn kind(&self) -> &'static str {
        match self {
            PolicyError::NotPermitted { .. } => "dangling-duty",
            PolicyError::RemediedProhibitionInF(_) => "policy-invariant-violation",
            PolicyError::ConsequenceObligationInO(_) => "policy-invariant-violation",
            PolicyError::MissingDeadline(_) => "policy-invariant-violation",
        }
    }
}

/// Deadlines `t` of the top-level `<Datetime, <=, t>` conditions of a rule.
pub fn deadlines(rule: &EventRule) -> Vec<i64> {
    rule.conditions()
        .iter()
        .filter_map(|c| match c {
            Condition::Simple(s) if s.feature() == DATETIME && s.op() == Operator::Lteq => match s.operand() {
                Operand::Scalar(Value::Timestamp(t)) => Some(*t),
                _ => None,
            },
            _ => None,
        })
        .collect()
}

/// ⟨P, F, O, DP, DPC, FR, OC⟩.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FullPolicy {
    lite: LitePolicy,
    duties: Vec<Duty>,
    duty_consequences: Vec<DutyWithConsequence>,
    remedies: Vec<Remedy>,
    obligation_consequences: Vec<ObligationConsequence>,
}

fn label_of(rule: &EventRule) -> String {
    rule.label().unwrap_or("<unlabelled>").to_string()
}

impl FullPolicy {
    pub fn new(
        lite: LitePolicy,
        duties: Vec<Duty>,
        duty_consequences: Vec<DutyWithConsequence>,
        remedies: Vec<Remedy>,
        obligation_consequences: Vec<ObligationConsequence>,
    ) -> Result<Self, PolicyError> {
        let mut policy = FullPolicy {
            lite,
            duties: dedup(duties),
            duty_consequences: dedup(duty_consequences),
            remedies: dedup(remedies),
            obligation_consequences: dedup(obligation_consequences),
        };
        policy.label_tuple_rules();
        policy.check()?;
        Ok(policy)
    }

    pub fn from_lite(lite: LitePolicy) -> Self {
        FullPolicy { lite, ..FullPolicy::default() }
    }

    fn check(&self) -> Result<(), PolicyError> {
        let permitted = |role: &'static str, r: &EventRule| {
            if self.lite.permissions().contains(r) {
                Ok(())
            } else {
                Err(PolicyError::NotPermitted { role, label: label_of(r) })
            }
        };
        for d in &self.duties {
            permitted("permission", &d.permission)?;
            permitted("duty", &d.duty)?;
        }
        for d in &self.duty_consequences {
            permitted("permission", &d.permission)?;
            permitted("duty", &d.duty)?;
            permitted("consequence", &d.consequence)?;
        }
        for r in &self.remedies {
            if self.lite.prohibitions().contains(&r.prohibition) {
                return Err(PolicyError::RemediedProhibitionInF(label_of(&r.prohibition)));
            }
            permitted("remedy", &r.remedy)?;
        }
        for oc in &self.obligation_consequences {
            if self.lite.obligations().contains(&oc.obligation) {
                return Err(PolicyError::ConsequenceObligationInO(label_of(&oc.obligation)));
            }
            if deadlines(&oc.obligation).is_empty() {
                return Err(PolicyError::MissingDeadline(label_of(&oc.obligation)));
            }
            permitted("consequence", &oc.consequence)?;
        }
        Ok(())
    }

    /// Rules inside tuples take the label of the equal permission when there
    /// is one; remaining unlabelled rules get positional names.
    fn label_tuple_rules(&mut self) {
        let permissions = self.lite.permissions().to_vec();
        let from_p = |r: &mut EventRule, fallback: String| {
            if let Some(label) = permissions.iter().find(|p| *p == r).and_then(|p| p.label()) {
                *r = r.clone().with_label(label);
            } else {
                r.set_label_if_missing(|| fallback);
            }
        };
        for (i, d) in self.duties.iter_mut().enumerate() {
            from_p(&mut d.permission, format!("dp{}-permission", i + 1));
            from_p(&mut d.duty, format!("dp{}-duty", i + 1));
        }
        for (i, d) in self.duty_consequences.iter_mut().enumerate() {
            from_p(&mut d.permission, format!("dpc{}-permission", i + 1));
            from_p(&mut d.duty, format!("dpc{}-duty", i + 1));
            from_p(&mut d.consequence, format!("dpc{}-consequence", i + 1));
        }
        for (i, r) in self.remedies.iter_mut().enumerate() {
            r.prohibition.set_label_if_missing(|| format!("fr{}", i + 1));
            from_p(&mut r.remedy, format!("fr{}-remedy", i + 1));
        }
        for (i, oc) in self.obligation_consequences.iter_mut().enumerate() {
            oc.obligation.set_label_if_missing(|| format!("oc{}", i + 1));
            from_p(&mut oc.consequence, format!("oc{}-consequence", i + 1));
        }
    }

    pub fn lite(&self) -> &LitePolicy {
        &self.lite
    }

    pub fn duties(&self) -> &[Duty] {
        &self.duties
    }

    pub fn duty_consequences(&self) -> &[DutyWithConsequence] {
        &self.duty_consequences
    }

    pub fn remedies(&self) -> &[Remedy] {
        &self.remedies
    }

    pub fn obligation_consequences(&self) -> &[ObligationConsequence] {
        &self.obligation_consequences
    }

    /// True when DP, DPC, FR and OC are all empty.
    pub fn is_lite(&self) -> bool {
        self.duties.is_empty()
            && self.duty_consequences.is_empty()
            && self.remedies.is_empty()
            && self.obligation_consequences.is_empty()
    }

    /// Every rule mentioned anywhere in the policy.
    pub fn rules(&self) -> impl Iterator<Item = &EventRule> + '_ {
        self.lite
            .rules()
            .chain(self.duties.iter().flat_map(|d| [&d.permission, &d.duty]))
            .chain(self.duty_consequences.iter().flat_map(|d| [&d.permission, &d.duty, &d.consequence]))
            .chain(self.remedies.iter().flat_map(|r| [&r.prohibition, &r.remedy]))
            .chain(self.obligation_consequences.iter().flat_map(|o| [&o.obligation, &o.consequence]))
    }
}

fn dedup<T: PartialEq>(items: Vec<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        if !out.contains(&item) {
            out.push(item);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rule::RuleBuilder;
    use crate::model::schema::{Component, FeatureDecl, FeatureSchema};
    use crate::model::value::Datatype;

    fn schema() -> FeatureSchema {
        FeatureSchema::new(vec![
            FeatureDecl::new(0, "Datetime", Datatype::Timestamp, Component::Rho),
            FeatureDecl::new(1, "Action", Datatype::Identifier, Component::Feature(1)),
            FeatureDecl::new(2, "Actor", Datatype::Identifier, Component::Feature(2)),
        ])
        .unwrap()
    }

    fn rule(s: &FeatureSchema, actor: &str, action: &str) -> EventRule {
        RuleBuilder::new(s).eq("Actor", actor).eq("Action", action).build().unwrap()
    }

    #[test]
    fn lite_policy_dedups_and_labels() {
        let s = schema();
        let p = LitePolicy::new([rule(&s, "Alice", "Print"), rule(&s, "Alice", "Print")], [], []);
        assert_eq!(p.permissions().len(), 1);
        assert_eq!(p.permissions()[0].label(), Some("p1"));
    }

    #[test]
    fn duty_must_be_permitted() {
        let s = schema();
        let print = rule(&s, "Alice", "Print");
        let read = rule(&s, "Bob", "Read");
        let lite = LitePolicy::new([print.clone()], [], []);
        let err = FullPolicy::new(
            lite,
            vec![Duty { permission: print.clone(), duty: read.clone() }],
            vec![],
            vec![],
            vec![],
        );
        assert!(matches!(err, Err(PolicyError::NotPermitted { role: "duty", .. })));

        let lite = LitePolicy::new([print.clone(), read.clone()], [], []);
        let ok = FullPolicy::new(lite, vec![Duty { permission: print, duty: read }], vec![], vec![], vec![]).unwrap();
        assert_eq!(ok.duties()[0].duty.label(), Some("p2"));
    }

    #[test]
    fn remedied_prohibition_cannot_be_in_f() {
        let s = schema();
        let f = rule(&s, "Bob", "Share");
        let pay = rule(&s, "Bob", "Pay");
        let lite = LitePolicy::new([pay.clone()], [f.clone()], []);
        let err = FullPolicy::new(lite, vec![], vec![], vec![Remedy { prohibition: f, remedy: pay }], vec![]);
        assert!(matches!(err, Err(PolicyError::RemediedProhibitionInF(_))));
    }

    #[test]
    fn obligation_consequence_needs_deadline_and_not_in_o() {
        let s = schema();
        let pay = rule(&s, "Bob", "Pay");
        let read = rule(&s, "Bob", "Read");
        let lite = LitePolicy::new([pay.clone()], [], []);
        let err = FullPolicy::new(
            lite.clone(),
            vec![],
            vec![],
            vec![],
            vec![ObligationConsequence { obligation: read.clone(), consequence: pay.clone() }],
        );
        assert!(matches!(err, Err(PolicyError::MissingDeadline(_))));

        let timed = RuleBuilder::new(&s)
            .eq("Actor", "Bob")
            .eq("Action", "Read")
            .when("Datetime", Operator::Lteq, "2")
            .build()
            .unwrap();
        assert_eq!(deadlines(&timed), vec![2]);
        let in_o = LitePolicy::new([pay.clone()], [], [timed.clone()]);
        let err = FullPolicy::new(
            in_o,
            vec![],
            vec![],
            vec![],
            vec![ObligationConsequence { obligation: timed.clone(), consequence: pay.clone() }],
        );
        assert!(matches!(err, Err(PolicyError::ConsequenceObligationInO(_))));
        assert!(FullPolicy::new(
            lite,
            vec![],
            vec![],
            vec![],
            vec![ObligationConsequence { obligation: timed, consequence: pay }],
        )
        .is_ok());
    }
}
