//! Fixtures and seeded random generators shared by the integration suites.
#![allow(dead_code)]

pub mod checks;

use std::collections::BTreeSet;

use num_rational::Rational64;
use odrl_core::comparator::is_consistent;
use odrl_core::{
    simple, Component, Condition, Datatype, Event, EventRule, FeatureDecl, FeatureSchema, LitePolicy, Operand,
    Operator, RuleBuilder, SimpleCondition, Value, World,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Datetime, Action, Actor, Asset, Print.Resolution (refines the action),
/// Book.Pages (refines the asset).
pub fn library_schema() -> FeatureSchema {
    FeatureSchema::new(vec![
        FeatureDecl::new(0, "Datetime", Datatype::Timestamp, Component::Rho).with_odrl_term("dateTime"),
        FeatureDecl::new(1, "Action", Datatype::Identifier, Component::Feature(1)),
        FeatureDecl::new(2, "Actor", Datatype::Identifier, Component::Feature(2)).with_odrl_term("assignee"),
        FeatureDecl::new(3, "Asset", Datatype::Identifier, Component::Feature(3)).with_odrl_term("target"),
        FeatureDecl::new(4, "Print.Resolution", Datatype::Numeric, Component::Feature(1)),
        FeatureDecl::new(5, "Book.Pages", Datatype::Numeric, Component::Feature(3)),
    ])
    .unwrap()
}

/// The library schema plus a rule-wide string feature and an identifier-set refinement
/// of the asset.
pub fn rich_schema() -> FeatureSchema {
    FeatureSchema::new(vec![
        FeatureDecl::new(0, "Datetime", Datatype::Timestamp, Component::Rho),
        FeatureDecl::new(1, "Action", Datatype::Identifier, Component::Feature(1)),
        FeatureDecl::new(2, "Actor", Datatype::Identifier, Component::Feature(2)),
        FeatureDecl::new(3, "Asset", Datatype::Identifier, Component::Feature(3)),
        FeatureDecl::new(4, "Print.Resolution", Datatype::Numeric, Component::Feature(1)),
        FeatureDecl::new(5, "Book.Pages", Datatype::Numeric, Component::Feature(3)),
        FeatureDecl::new(6, "Asset.Tags", Datatype::IdentifierSet, Component::Feature(3)),
        FeatureDecl::new(7, "Purpose", Datatype::String, Component::Rho),
    ])
    .unwrap()
}

/// Datetime, Action, Actor, Asset only.
pub fn core_schema() -> FeatureSchema {
    FeatureSchema::new(vec![
        FeatureDecl::new(0, "Datetime", Datatype::Timestamp, Component::Rho),
        FeatureDecl::new(1, "Action", Datatype::Identifier, Component::Feature(1)),
        FeatureDecl::new(2, "Actor", Datatype::Identifier, Component::Feature(2)),
        FeatureDecl::new(3, "Asset", Datatype::Identifier, Component::Feature(3)),
    ])
    .unwrap()
}

pub fn library_world(schema: &FeatureSchema) -> World {
    let row = |t: i64, action: &str, actor: &str, asset: &str, res: Option<i64>, pages: Option<i64>| {
        let num = |v: Option<i64>| v.map(Value::integer).unwrap_or(Value::Null);
        Event::new(
            schema,
            vec![
                Value::Timestamp(t),
                Value::identifier(action),
                Value::identifier(actor),
                Value::identifier(asset),
                num(res),
                num(pages),
            ],
        )
        .unwrap()
    };
    World::from_events(
        schema,
        [
            row(1, "Print", "Alice", "Picture", Some(500), None),
            row(2, "Read", "Bob", "Book", None, Some(450)),
            row(3, "Print", "Alice", "Book", Some(600), Some(300)),
        ],
    )
    .unwrap()
}

/// The policy of the running example: p1, f1, o1.
pub fn lending_policy(schema: &FeatureSchema) -> LitePolicy {
    let p1 = RuleBuilder::new(schema)
        .label("p1")
        .eq("Actor", "Alice")
        .eq("Action", "Print")
        .eq("Asset", "Picture")
        .build()
        .unwrap();
    let window = Condition::And(vec![
        simple(schema, "Datetime", Operator::Lteq, "5").unwrap(),
        simple(schema, "Datetime", Operator::Gteq, "3").unwrap(),
    ]);
    let f1 = RuleBuilder::new(schema)
        .label("f1")
        .eq("Actor", "Bob")
        .eq("Action", "Read")
        .eq("Asset", "Book")
        .condition(window)
        .when("Book.Pages", Operator::Gt, "250")
        .build()
        .unwrap();
    let o1 = RuleBuilder::new(schema)
        .label("o1")
        .eq("Actor", "Bob")
        .eq("Action", "Read")
        .eq("Asset", "Book")
        .when("Datetime", Operator::Lt, "3")
        .build()
        .unwrap();
    LitePolicy::new([p1], [f1], [o1])
}

/// Which optional features generated rules may constrain.
#[derive(Debug, Clone, Copy)]
pub struct GenOptions {
    pub datetime: bool,
    pub numeric: bool,
    pub sets: bool,
    pub strings: bool,
    pub complex: bool,
    pub max_permissions: usize,
    pub max_prohibitions: usize,
    pub max_obligations: usize,
}

impl GenOptions {
    /// For `library_schema`.
    pub fn numeric() -> Self {
        GenOptions {
            datetime: true,
            numeric: true,
            sets: false,
            strings: false,
            complex: true,
            max_permissions: 3,
            max_prohibitions: 2,
            max_obligations: 2,
        }
    }

    /// For `rich_schema`.
    pub fn rich() -> Self {
        GenOptions { sets: true, strings: true, ..GenOptions::numeric() }
    }
}

pub const ACTIONS: &[&str] = &["Print", "Read"];
pub const ACTORS: &[&str] = &["Alice", "Bob"];
pub const ASSETS: &[&str] = &["Book", "Picture"];
const RESOLUTIONS: &[&str] = &["300", "450.5", "500", "600"];
const PAGES: &[&str] = &["250", "300", "450"];
const TAGS: &[&str] = &["blue", "green", "red"];
const PURPOSES: &[&str] = &["ads", "research"];
const ORDERED: &[Operator] = &[Operator::Eq, Operator::Neq, Operator::Gt, Operator::Gteq, Operator::Lt, Operator::Lteq];
const SET_OPS: &[Operator] =
    &[Operator::IsAnyOf, Operator::IsAllOf, Operator::IsNoneOf, Operator::HasPart, Operator::IsPartOf];

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    items.choose(rng).expect("non-empty")
}

fn tag_set(rng: &mut ChaCha8Rng) -> Operand {
    let members: BTreeSet<Value> = TAGS.iter().filter(|_| rng.gen_bool(0.5)).map(|t| Value::identifier(*t)).collect();
    Operand::Set(members)
}

/// A simple condition on a feature of the given component group.
fn group_simple(rng: &mut ChaCha8Rng, schema: &FeatureSchema, group: Component, opts: &GenOptions) -> Option<Condition> {
    let mut choices: Vec<u8> = Vec::new();
    match group {
        Component::Rho => {
            if opts.datetime {
                choices.push(0);
            }
            if opts.strings {
                choices.push(7);
            }
        }
        Component::Feature(1) => {
            if opts.numeric {
                choices.push(4);
            }
        }
        Component::Feature(3) => {
            if opts.numeric {
                choices.push(5);
            }
            if opts.sets {
                choices.push(6);
            }
        }
        _ => {}
    }
    let feature = *choices.choose(rng)?;
    let op = *pick(rng, ORDERED);
    Some(match feature {
        0 => simple(schema, "Datetime", op, &rng.gen_range(0..=5).to_string()).unwrap(),
        4 => simple(schema, "Print.Resolution", op, pick(rng, RESOLUTIONS)).unwrap(),
        5 => simple(schema, "Book.Pages", op, pick(rng, PAGES)).unwrap(),
        6 => {
            let op = *pick(rng, SET_OPS);
            Condition::Simple(SimpleCondition::new(schema, 6, op, tag_set(rng)).unwrap())
        }
        _ => simple(schema, "Purpose", op, pick(rng, PURPOSES)).unwrap(),
    })
}

fn group_condition(rng: &mut ChaCha8Rng, schema: &FeatureSchema, group: Component, opts: &GenOptions) -> Option<Condition> {
    let first = group_simple(rng, schema, group, opts)?;
    if !opts.complex || rng.gen_bool(0.6) {
        return Some(first);
    }
    let second = group_simple(rng, schema, group, opts)?;
    Some(match rng.gen_range(0..4) {
        0 => Condition::And(vec![first, second]),
        1 => Condition::Or(vec![first, second]),
        2 => Condition::negate(first),
        _ => Condition::xor(first, second),
    })
}

/// A condition on one component group, possibly complex; `None` when the
/// options leave nothing to constrain there.
pub fn random_condition(rng: &mut ChaCha8Rng, schema: &FeatureSchema, opts: &GenOptions) -> Option<Condition> {
    let group = *pick(rng, &[Component::Rho, Component::Feature(1), Component::Feature(3)]);
    let c = group_condition(rng, schema, group, opts)?;
    if rng.gen_bool(0.3) {
        if let Some(d) = group_condition(rng, schema, group, opts) {
            return Some(Condition::xor(c, Condition::negate(d)));
        }
    }
    Some(c)
}

/// A well-formed rule: an action, optional actor and asset, and up to two
/// refinements or constraints.
pub fn random_rule(rng: &mut ChaCha8Rng, schema: &FeatureSchema, opts: &GenOptions) -> EventRule {
    let mut conditions = vec![simple(schema, "Action", Operator::Eq, pick(rng, ACTIONS)).unwrap()];
    if rng.gen_bool(0.6) {
        conditions.push(simple(schema, "Actor", Operator::Eq, pick(rng, ACTORS)).unwrap());
    }
    let has_asset = rng.gen_bool(0.6);
    if has_asset {
        conditions.push(simple(schema, "Asset", Operator::Eq, pick(rng, ASSETS)).unwrap());
    }
    let mut groups = vec![Component::Rho, Component::Feature(1)];
    if has_asset {
        groups.push(Component::Feature(3));
    }
    for _ in 0..rng.gen_range(0..=2) {
        let group = *pick(rng, &groups);
        if let Some(c) = group_condition(rng, schema, group, opts) {
            conditions.push(c);
        }
    }
    EventRule::new(conditions)
}

/// A Lite policy; obligations usually refine a permission so that many
/// generated policies are consistent.
pub fn random_policy(rng: &mut ChaCha8Rng, schema: &FeatureSchema, opts: &GenOptions) -> LitePolicy {
    let permissions: Vec<EventRule> =
        (0..rng.gen_range(1..=opts.max_permissions)).map(|_| random_rule(rng, schema, opts)).collect();
    let prohibitions: Vec<EventRule> =
        (0..rng.gen_range(0..=opts.max_prohibitions)).map(|_| random_rule(rng, schema, opts)).collect();
    let obligations: Vec<EventRule> = (0..rng.gen_range(0..=opts.max_obligations))
        .map(|_| {
            if rng.gen_bool(0.8) {
                let base = pick(rng, &permissions).clone();
                let extra = group_condition(rng, schema, Component::Rho, opts);
                EventRule::new(base.conditions().iter().cloned().chain(extra))
            } else {
                random_rule(rng, schema, opts)
            }
        })
        .collect();
    LitePolicy::new(permissions, prohibitions, obligations)
}

pub fn random_consistent_policy(rng: &mut ChaCha8Rng, schema: &FeatureSchema, opts: &GenOptions) -> LitePolicy {
    loop {
        let p = random_policy(rng, schema, opts);
        if is_consistent(&p, schema).unwrap() {
            return p;
        }
    }
}

fn random_value(rng: &mut ChaCha8Rng, datatype: Datatype, feature: &str) -> Value {
    match (datatype, feature) {
        (Datatype::Timestamp, _) => Value::Timestamp(rng.gen_range(0..=6)),
        (Datatype::Identifier, "Action") => Value::identifier(*pick(rng, &["Print", "Read", "Play"])),
        (Datatype::Identifier, "Actor") => Value::identifier(*pick(rng, &["Alice", "Bob", "Carol"])),
        (Datatype::Identifier, _) => Value::identifier(*pick(rng, &["Book", "Picture", "Map"])),
        (Datatype::Numeric, "Print.Resolution") => {
            Value::Number(Rational64::new(*pick(rng, &[598, 600, 900, 1000, 1001, 1200, 901]), 2))
        }
        (Datatype::Numeric, _) => Value::integer(*pick(rng, &[100, 250, 251, 300, 450, 500])),
        (Datatype::IdentifierSet, _) => {
            Value::identifier_set(["blue", "green", "red", "black"].into_iter().filter(|_| rng.gen_bool(0.4)))
        }
        (Datatype::String, _) => Value::Text(pick(rng, &["", "ads", "adz", "research", "zzz"]).to_string()),
    }
}

pub fn random_event(rng: &mut ChaCha8Rng, schema: &FeatureSchema) -> Event {
    let values = schema
        .features()
        .iter()
        .map(|f| {
            if f.id > 1 && rng.gen_bool(0.2) {
                Value::Null
            } else {
                random_value(rng, f.datatype, &f.name)
            }
        })
        .collect();
    Event::new(schema, values).unwrap()
}

pub fn random_world(rng: &mut ChaCha8Rng, schema: &FeatureSchema, max_events: usize) -> World {
    let n = rng.gen_range(0..=max_events);
    World::from_events(schema, (0..n).map(|_| random_event(rng, schema))).unwrap()
}

/// Base rules of the exhaustive sweep: an action with optional actor and asset.
pub fn sweep_rules(schema: &FeatureSchema) -> Vec<EventRule> {
    let mut out = Vec::new();
    for action in ACTIONS {
        for actor in [None, Some("Alice"), Some("Bob")] {
            for asset in [None, Some("Book"), Some("Picture")] {
                let mut b = RuleBuilder::new(schema).eq("Action", action);
                if let Some(a) = actor {
                    b = b.eq("Actor", a);
                }
                if let Some(a) = asset {
                    b = b.eq("Asset", a);
                }
                out.push(b.build().unwrap());
            }
        }
    }
    out
}

/// Every consistent policy with at most one permission, one prohibition and
/// one obligation drawn from the sweep rules, where the obligation is a
/// permission restricted to before or after one of three timestamps.
pub fn sweep_policies(schema: &FeatureSchema) -> Vec<LitePolicy> {
    let rules = sweep_rules(schema);
    let optional: Vec<Option<&EventRule>> = std::iter::once(None).chain(rules.iter().map(Some)).collect();
    let mut out = Vec::new();
    for p in &optional {
        let mut obligations: Vec<Option<EventRule>> = vec![None];
        if let Some(p) = p {
            for t in 1..=3 {
                for op in [Operator::Lteq, Operator::Gteq] {
                    let c = simple(schema, "Datetime", op, &t.to_string()).unwrap();
                    obligations.push(Some(p.conjoin([c])));
                }
            }
        }
        for f in &optional {
            for o in &obligations {
                let policy = LitePolicy::new(p.cloned(), f.cloned(), o.clone());
                if is_consistent(&policy, schema).unwrap() {
                    out.push(policy);
                }
            }
        }
    }
    out
}

/// A pair of consistent policies, often related so that both outcomes occur.
pub fn random_pair(rng: &mut ChaCha8Rng, schema: &FeatureSchema, opts: &GenOptions) -> (LitePolicy, LitePolicy) {
    let p = random_consistent_policy(rng, schema, opts);
    let q = match rng.gen_range(0..10) {
        0 | 1 => p.clone(),
        2..=4 => loop {
            let extra = random_rule(rng, schema, opts);
            let perms = p.permissions().iter().cloned().chain([extra]);
            let q = LitePolicy::new(perms, p.prohibitions().to_vec(), p.obligations().to_vec());
            if is_consistent(&q, schema).unwrap() {
                break q;
            }
        },
        5 => {
            let keep = p.obligations().len().saturating_sub(1);
            LitePolicy::new(p.permissions().to_vec(), p.prohibitions().to_vec(), p.obligations()[..keep].to_vec())
        }
        _ => random_consistent_policy(rng, schema, opts),
    };
    (p, q)
}

/// Compares the decision procedure with world enumeration on one pair and
/// replays every reported witness world. Returns whether a conflict was found.
pub fn check_conflict_pair(p: &LitePolicy, q: &LitePolicy, schema: &FeatureSchema) -> Result<bool, String> {
    use odrl_core::comparator::{asymmetric_conflict, brute_force_containment};
    let verdict = asymmetric_conflict(p, q, schema).map_err(|e| e.to_string())?;
    let contained = brute_force_containment(p, q, schema).map_err(|e| e.to_string())?;
    if verdict.conflict() == contained {
        return Err(format!(
            "procedure says conflict={} but enumeration says contained={contained}\np = {p:?}\nq = {q:?}",
            verdict.conflict()
        ));
    }
    check_witnesses(&verdict, p, q, schema)?;
    Ok(verdict.conflict())
}

/// Every failure's world must be valid under its left policy and invalid
/// under its right one.
pub fn check_witnesses(
    verdict: &odrl_core::comparator::ConflictVerdict,
    first: &LitePolicy,
    second: &LitePolicy,
    schema: &FeatureSchema,
) -> Result<(), String> {
    use odrl_core::comparator::Direction;
    use odrl_core::evaluate_lite;
    for f in &verdict.failures {
        let (left, right) = match f.direction {
            Direction::Forward => (first, second),
            Direction::Backward => (second, first),
        };
        let lv = evaluate_lite(left, &f.witnesses, schema).map_err(|e| e.to_string())?.is_valid();
        let rv = evaluate_lite(right, &f.witnesses, schema).map_err(|e| e.to_string())?.is_valid();
        if !lv || rv {
            return Err(format!("witness world does not replay: left valid={lv}, right valid={rv}: {f:?}"));
        }
    }
    Ok(())
}
