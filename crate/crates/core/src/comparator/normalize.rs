//! Rewriting a Lite policy into an equivalent consistent one.
//!
//! Permissions lose every part a prohibition forbids; obligations are
//! restricted to what the remaining permissions allow. Prohibitions are then
//! redundant and dropped.

use std::collections::BTreeMap;

use super::relations::{label, Ctx};
use super::search::any_of;
use super::CompareError;
use crate::evaluator::gate;
use crate::model::{Component, Condition, EventRule, FeatureSchema, LitePolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormalizeOptions {
    /// Most pieces a single permission may split into.
    pub max_disjuncts: usize,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions { max_disjuncts: 256 }
    }
}

pub fn normalize(p: &LitePolicy, schema: &FeatureSchema) -> Result<LitePolicy, CompareError> {
    normalize_with(p, schema, NormalizeOptions::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Group {
    Component(Component),
    /// A condition spanning several components stays on its own.
    Lone(usize),
}

/// Conditions of a rule grouped by the component they constrain.
fn groups(rule: &EventRule, schema: &FeatureSchema) -> BTreeMap<Group, Vec<Condition>> {
    let mut out: BTreeMap<Group, Vec<Condition>> = BTreeMap::new();
    for (i, c) in rule.conditions().iter().enumerate() {
        let mut components = c.features().into_iter().filter_map(|f| schema.component(f));
        let key = match components.next() {
            Some(first) if components.all(|k| k == first) => Group::Component(first),
            _ => Group::Lone(i),
        };
        out.entry(key).or_default().push(c.clone());
    }
    out
}

fn conjunction(mut cs: Vec<Condition>) -> Condition {
    if cs.len() == 1 {
        cs.pop().expect("one element")
    } else {
        Condition::And(cs)
    }
}

/// `rule ∧ ¬forbidden` as a list of satisfiable rules: one per component
/// group of `forbidden` whose complement is compatible with `rule`.
fn subtract(rule: &EventRule, forbidden: &EventRule, ctx: &Ctx) -> Vec<EventRule> {
    if !ctx.overlaps(rule, forbidden) {
        return vec![rule.clone()];
    }
    let mut pieces = Vec::new();
    for group in groups(forbidden, ctx.schema).into_values() {
        let open: Vec<Condition> = group.into_iter().filter(|c| !ctx.implies(rule, c)).collect();
        if open.is_empty() {
            continue;
        }
        let piece = rule.conjoin([Condition::negate(conjunction(open))]);
        if ctx.example(&piece).is_some() {
            pieces.push(piece);
        }
    }
    pieces
}

pub fn normalize_with(
    p: &LitePolicy,
    schema: &FeatureSchema,
    options: NormalizeOptions,
) -> Result<LitePolicy, CompareError> {
    gate(p.rules(), p.is_normal_form(), schema)?;
    let ctx = Ctx::new(p.rules(), schema)?;

    let mut permissions = Vec::new();
    for rule in p.permissions() {
        let mut pieces = vec![rule.clone()];
        for f in p.prohibitions() {
            pieces = pieces.iter().flat_map(|piece| subtract(piece, f, &ctx)).collect();
            if pieces.len() > options.max_disjuncts {
                return Err(CompareError::NormalizationBlowup { rule: label(rule), limit: options.max_disjuncts });
            }
        }
        if pieces.len() == 1 && pieces[0] == *rule {
            permissions.push(rule.clone());
        } else if pieces.len() == 1 {
            permissions.push(pieces.remove(0).with_label(label(rule)));
        } else {
            let base = label(rule);
            permissions.extend(pieces.into_iter().enumerate().map(|(k, r)| r.with_label(format!("{base}.{}", k + 1))));
        }
    }

    let mut obligations = Vec::new();
    for o in p.obligations() {
        if ctx.example(o).is_none() || ctx.set_not_contained(std::slice::from_ref(o), &permissions).is_none() {
            obligations.push(o.clone());
            continue;
        }
        let mut allowed: Vec<EventRule> = permissions.iter().filter(|q| ctx.overlaps(o, q)).cloned().collect();
        // An obligation nothing permits can never be met; it stays as an
        // unsatisfiable rule so the policy remains unsatisfiable.
        let extra = match allowed.len() {
            0 => vec![Condition::falsity()],
            1 => allowed.remove(0).conditions().to_vec(),
            _ => vec![any_of(&allowed)],
        };
        obligations.push(o.conjoin(extra));
    }

    Ok(LitePolicy::new(permissions, [], obligations).into_normal_form())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comparator::is_consistent;
    use crate::evaluator::evaluate_lite;
    use crate::model::{simple, Datatype, Event, FeatureDecl, Operator, RuleBuilder, Value, World};

    fn schema() -> FeatureSchema {
        FeatureSchema::new(vec![
            FeatureDecl::new(0, "Datetime", Datatype::Timestamp, Component::Rho),
            FeatureDecl::new(1, "Action", Datatype::Identifier, Component::Feature(1)),
            FeatureDecl::new(2, "Actor", Datatype::Identifier, Component::Feature(2)),
            FeatureDecl::new(3, "Asset", Datatype::Identifier, Component::Feature(3)),
            FeatureDecl::new(4, "Print.Resolution", Datatype::Numeric, Component::Feature(1)),
        ])
        .unwrap()
    }

    fn alice_prints(s: &FeatureSchema) -> EventRule {
        RuleBuilder::new(s).eq("Actor", "Alice").eq("Action", "Print").eq("Asset", "Picture").build().unwrap()
    }

    fn print(s: &FeatureSchema, resolution: Option<i64>) -> Event {
        Event::new(
            s,
            vec![
                Value::Timestamp(1),
                Value::identifier("Print"),
                Value::identifier("Alice"),
                Value::identifier("Picture"),
                resolution.map(Value::integer).unwrap_or(Value::Null),
            ],
        )
        .unwrap()
    }

    #[test]
    fn consistent_policy_only_loses_prohibitions() {
        let s = schema();
        let bob = RuleBuilder::new(&s).eq("Actor", "Bob").eq("Action", "Read").eq("Asset", "Book").build().unwrap();
        let p = LitePolicy::new([alice_prints(&s)], [bob], []);
        let n = normalize(&p, &s).unwrap();
        assert_eq!(n.permissions(), p.permissions());
        assert!(n.prohibitions().is_empty());
        assert!(n.is_normal_form());
    }

    #[test]
    fn forbidden_resolutions_are_carved_out() {
        let s = schema();
        let high = alice_prints(&s).conjoin([simple(&s, "Print.Resolution", Operator::Gt, "1000").unwrap()]);
        let p = LitePolicy::new([alice_prints(&s)], [high], []);
        let n = normalize(&p, &s).unwrap();
        assert_eq!(n.permissions().len(), 1);
        assert!(is_consistent(&n, &s).unwrap());
        for (resolution, valid) in [(Some(500), true), (Some(1000), true), (Some(1001), false), (None, true)] {
            let w = World::from_events(&s, [print(&s, resolution)]).unwrap();
            assert_eq!(evaluate_lite(&n, &w, &s).unwrap().is_valid(), valid, "{resolution:?}");
            assert_eq!(evaluate_lite(&p, &w, &s).unwrap().is_valid(), valid);
        }
    }

    #[test]
    fn unpermitted_obligation_becomes_unsatisfiable() {
        let s = schema();
        let bob = RuleBuilder::new(&s).eq("Actor", "Bob").eq("Action", "Read").eq("Asset", "Book").build().unwrap();
        let p = LitePolicy::new([], [], [bob]);
        let n = normalize(&p, &s).unwrap();
        assert!(is_consistent(&n, &s).unwrap());
        assert_eq!(n.obligations().len(), 1);
        let ctx = Ctx::new(n.rules(), &s).unwrap();
        assert!(ctx.example(&n.obligations()[0]).is_none());
        assert!(!evaluate_lite(&n, &World::new(), &s).unwrap().is_valid());
    }

    #[test]
    fn partly_permitted_obligation_is_restricted() {
        let s = schema();
        let low = alice_prints(&s).conjoin([simple(&s, "Print.Resolution", Operator::Lteq, "400").unwrap()]);
        let p = LitePolicy::new([low.clone()], [], [alice_prints(&s)]);
        let n = normalize(&p, &s).unwrap();
        assert!(is_consistent(&n, &s).unwrap());
        let w = World::from_events(&s, [print(&s, Some(300))]).unwrap();
        assert!(evaluate_lite(&n, &w, &s).unwrap().is_valid());
        let w = World::from_events(&s, [print(&s, Some(500))]).unwrap();
        assert!(!evaluate_lite(&n, &w, &s).unwrap().is_valid());
    }

    #[test]
    fn blowup_is_reported() {
        let s = schema();
        let fs: Vec<EventRule> = (0..4)
            .map(|k| {
                RuleBuilder::new(&s)
                    .eq("Action", "Print")
                    .when("Print.Resolution", Operator::Eq, &k.to_string())
                    .build()
                    .unwrap()
            })
            .collect();
        let p = LitePolicy::new([alice_prints(&s)], fs, []);
        assert!(normalize(&p, &s).is_ok());
        let err = normalize_with(&p, &s, NormalizeOptions { max_disjuncts: 0 }).unwrap_err();
        assert_eq!(err.kind(), "normalization-blowup");
    }
}
