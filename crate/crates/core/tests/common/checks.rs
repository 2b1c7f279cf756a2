//! One checker per acceptance criterion. Each returns a short summary on
//! success and a description of the first disagreement otherwise. The topic
//! suites call these with smaller budgets than the acceptance target.

use std::collections::HashMap;
use std::time::Instant;

use odrl_core::comparator::{
    asymmetric_conflict_with, containment_counterexample, is_consistent, normalize, rule_contains,
    symmetric_conflict_with, CompareOptions, WitnessDomain,
};
use odrl_core::eval::{desugar_xor, eval_condition, eval_simple};
use odrl_core::io::{parse_policy, parse_schema, parse_world, write_native_policy, write_schema, write_world};
use odrl_core::matcher::strip_deadlines;
use odrl_core::model::value::{format_number, parse_number};
use odrl_core::query::{emit_violation_queries, emit_world_inserts};
use odrl_core::{
    check_well_formed, evaluate_full, evaluate_lite, matches, softmatch, ActionVocabulary, Condition, Duty,
    Event, EventRule, FeatureSchema, FindingClass, FullPolicy, LitePolicy, RuleBuilder, Saturate, Value, World,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::Rng;
use rusqlite::Connection;

use super::*;

pub type Check = Result<String, String>;

fn fail(msg: impl Into<String>) -> Check {
    Err(msg.into())
}

fn valid(p: &LitePolicy, w: &World, schema: &FeatureSchema) -> Result<bool, String> {
    evaluate_lite(p, w, schema).map(|r| r.is_valid()).map_err(|e| e.to_string())
}

fn times(events: &[&Event]) -> Vec<i64> {
    events.iter().map(|e| e.timestamp()).collect()
}

pub fn running_report() -> Check {
    let start = Instant::now();
    let schema = library_schema();
    let report = evaluate_lite(&lending_policy(&schema), &library_world(&schema), &schema).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let perm = times(&report.witnesses_of(FindingClass::Permissions));
    if perm != [2, 3] {
        return fail(format!("permission witnesses at {perm:?}, expected [2, 3]"));
    }
    if report.findings_of(FindingClass::Prohibitions).count() != 0 {
        return fail("prohibitions clause fired");
    }
    if report.findings_of(FindingClass::Obligations).count() != 0 {
        return fail("obligation reported unmet");
    }
    match report.fulfilled_obligations.as_slice() {
        [f] if f.rule == "o1" && times(&f.witnesses.iter().collect::<Vec<_>>()) == [2] => {}
        other => return fail(format!("fulfilled obligations {other:?}")),
    }
    if elapsed.as_secs_f64() >= 1.0 {
        return fail(format!("took {elapsed:?}"));
    }
    Ok(format!("permission witnesses at 2 and 3, o1 met at 2, {elapsed:?}"))
}

pub fn match_matrix() -> Check {
    let schema = library_schema();
    let policy = lending_policy(&schema);
    let world = library_world(&schema);
    let expected = [("p1", [true, false, false]), ("f1", [false, false, false]), ("o1", [false, true, false])];
    for (label, row) in expected {
        let rule = policy.rules().find(|r| r.label() == Some(label)).ok_or(format!("no rule {label}"))?;
        let got: Vec<bool> = world.iter().map(|e| matches(rule, e, &schema)).collect();
        if got != row {
            return fail(format!("{label}: got {got:?}, expected {row:?}"));
        }
    }
    Ok("p1 T/F/F, f1 F/F/F, o1 F/T/F".into())
}

pub fn duty_scenario() -> Check {
    let schema = library_schema();
    let print = RuleBuilder::new(&schema).label("print").eq("Actor", "Alice").eq("Action", "Print").eq("Asset", "Book");
    let print = print.build().unwrap();
    let read = RuleBuilder::new(&schema).label("read").eq("Actor", "Bob").eq("Action", "Read").eq("Asset", "Book");
    let read = read.build().unwrap();
    let policy = FullPolicy::new(
        LitePolicy::new([print.clone(), read.clone()], [], []),
        vec![Duty { permission: print, duty: read }],
        vec![],
        vec![],
        vec![],
    )
    .map_err(|e| e.to_string())?;
    let world = |print_at: i64, read_at: i64| {
        let event = |t: i64, action: &str, actor: &str| {
            Event::new(
                &schema,
                vec![
                    Value::Timestamp(t),
                    Value::identifier(action),
                    Value::identifier(actor),
                    Value::identifier("Book"),
                    Value::Null,
                    Value::Null,
                ],
            )
            .unwrap()
        };
        World::from_events(&schema, [event(print_at, "Print", "Alice"), event(read_at, "Read", "Bob")]).unwrap()
    };
    let late = evaluate_full(&policy, &world(1, 2), &schema).map_err(|e| e.to_string())?;
    let duty_witnesses = times(&late.witnesses_of(FindingClass::PermissionDuties));
    if duty_witnesses != [1] || late.findings.len() != 1 {
        return fail(format!("duty after use: {:?}", late.findings));
    }
    let early = evaluate_full(&policy, &world(2, 1), &schema).map_err(|e| e.to_string())?;
    if !early.is_valid() {
        return fail(format!("duty before use: {:?}", early.findings));
    }
    Ok("late duty flagged at 1, swapped timestamps clean".into())
}

pub fn saturation_case() -> Check {
    let schema = core_schema();
    let play = RuleBuilder::new(&schema).eq("Action", "Play").eq("Actor", "Alice").eq("Asset", "Movie").build().unwrap();
    let policy = LitePolicy::new([play], [], []);
    let display = Event::new(
        &schema,
        vec![Value::Timestamp(1), Value::identifier("Display"), Value::identifier("Alice"), Value::identifier("Movie")],
    )
    .unwrap();
    let world = World::from_events(&schema, [display]).unwrap();
    let plain = evaluate_lite(&policy, &world, &schema).map_err(|e| e.to_string())?;
    if plain.findings_of(FindingClass::Permissions).count() != 1 || plain.findings.len() != 1 {
        return fail(format!("without vocabulary: {:?}", plain.findings));
    }
    let vocab = ActionVocabulary::new([("Display", "Play")]).map_err(|e| e.to_string())?;
    let saturated = policy.saturate(&vocab);
    if !valid(&saturated, &world, &schema)? {
        return fail("Display still unpermitted after saturation");
    }
    Ok("Display violates without the vocabulary, permitted with it".into())
}

/// Procedure against enumeration over every `stride`-th pair of the sweep.
pub fn conflict_sweep(stride: usize) -> Check {
    let schema = core_schema();
    let family = sweep_policies(&schema);
    let start = Instant::now();
    let (mut pairs, mut conflicts) = (0usize, 0usize);
    for (i, p) in family.iter().enumerate() {
        for (j, q) in family.iter().enumerate() {
            if (i * family.len() + j) % stride != 0 {
                continue;
            }
            conflicts += usize::from(check_conflict_pair(p, q, &schema)?);
            pairs += 1;
        }
    }
    Ok(format!(
        "{pairs} sweep pairs over {} policies, {conflicts} conflicts, 0 disagreements, {:.1?}",
        family.len(),
        start.elapsed()
    ))
}

pub fn conflict_random(n: usize, seed: u64) -> Check {
    let schema = library_schema();
    let opts = GenOptions::numeric();
    let mut rng = rng(seed);
    let mut conflicts = 0;
    for _ in 0..n {
        let (p, q) = random_pair(&mut rng, &schema, &opts);
        conflicts += usize::from(check_conflict_pair(&p, &q, &schema)?);
    }
    Ok(format!("{n} random numeric pairs, {conflicts} conflicts, 0 disagreements"))
}

/// What Lite validity of a world depends on, per event, for two policies.
#[derive(Clone, PartialEq, Eq, Hash)]
struct Signature {
    allowed: [bool; 2],
    covers: [Vec<bool>; 2],
}

fn allowed(p: &LitePolicy, e: &Event, schema: &FeatureSchema) -> bool {
    p.permissions().iter().any(|r| matches(r, e, schema)) && !p.prohibitions().iter().any(|r| matches(r, e, schema))
}

fn for_each_subset(n: usize, k: usize, visit: &mut dyn FnMut(&[usize]) -> Result<(), String>) -> Result<(), String> {
    fn go(start: usize, n: usize, k: usize, chosen: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize]) -> Result<(), String>) -> Result<(), String> {
        visit(chosen)?;
        if chosen.len() == k {
            return Ok(());
        }
        for i in start..n {
            chosen.push(i);
            go(i + 1, n, k, chosen, visit)?;
            chosen.pop();
        }
        Ok(())
    }
    go(0, n, k, &mut Vec::new(), visit)
}

/// Input and normalised policy agree on every world of at most |O| + 2
/// probe events. Validity depends on an event only through its signature,
/// and repeating a signature changes nothing, so one world per set of at
/// most |O| + 2 signatures stands for all of them.
fn check_normalized(p: &LitePolicy, schema: &FeatureSchema) -> Result<usize, String> {
    let n = normalize(p, schema).map_err(|e| e.to_string())?;
    if !is_consistent(&n, schema).map_err(|e| e.to_string())? {
        return Err(format!("normalised policy is inconsistent\ninput = {p:?}\noutput = {n:?}"));
    }
    small_world_agreement(p, &n, schema)
}

/// Worlds checked, or the first world of at most |O| + 2 events on which
/// the two policies disagree. `n` must have as many obligations as `p`.
pub fn small_world_agreement(p: &LitePolicy, n: &LitePolicy, schema: &FeatureSchema) -> Result<usize, String> {
    let domain = WitnessDomain::for_rules(p.rules().chain(n.rules()), schema).map_err(|e| e.to_string())?;
    let mut reps: HashMap<Signature, Event> = HashMap::new();
    for e in domain.events() {
        let sig = Signature {
            allowed: [allowed(p, &e, schema), allowed(n, &e, schema)],
            covers: [p, n].map(|x| x.obligations().iter().map(|o| matches(o, &e, schema)).collect()),
        };
        reps.entry(sig).or_insert(e);
    }
    let reps: Vec<Event> = reps.into_values().collect();
    let mut worlds = 0;
    for_each_subset(reps.len(), p.obligations().len() + 2, &mut |chosen| {
        let world = World::from_events(schema, chosen.iter().map(|&i| reps[i].clone())).unwrap();
        worlds += 1;
        if valid(p, &world, schema)? != valid(n, &world, schema)? {
            return Err(format!("disagreement\ninput = {p:?}\noutput = {n:?}\nworld = {world:?}"));
        }
        Ok(())
    })?;
    Ok(worlds)
}

pub fn normalization(n: usize, seed: u64) -> Check {
    let schema = library_schema();
    let opts = GenOptions::numeric();
    let mut rng = rng(seed);
    let (mut inconsistent, mut worlds) = (0, 0);
    for _ in 0..n {
        let p = random_policy(&mut rng, &schema, &opts);
        inconsistent += usize::from(!is_consistent(&p, &schema).unwrap());
        worlds += check_normalized(&p, &schema)?;
    }
    Ok(format!("{n} policies ({inconsistent} inconsistent), {worlds} signature worlds, 0 disagreements"))
}

fn sql_rows(conn: &Connection, sql: &str, columns: &[&str]) -> Result<Vec<Vec<String>>, String> {
    let mut stmt = conn.prepare(sql.trim().trim_end_matches(';')).map_err(|e| format!("{e}\n{sql}"))?;
    let names: Vec<String> = stmt.column_names().iter().map(|s| s.to_string()).collect();
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| names.iter().position(|n| n == c).ok_or(format!("no column {c} in {names:?}")))
        .collect::<Result<_, _>>()?;
    let rows = stmt
        .query_map([], |row| {
            idx.iter()
                .map(|&i| {
                    let v: rusqlite::types::Value = row.get(i)?;
                    Ok(match v {
                        rusqlite::types::Value::Integer(n) => n.to_string(),
                        rusqlite::types::Value::Text(s) => s,
                        other => format!("{other:?}"),
                    })
                })
                .collect::<Result<Vec<String>, _>>()
        })
        .map_err(|e| e.to_string())?;
    let mut out: Vec<Vec<String>> = rows.collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    out.sort();
    Ok(out)
}

fn check_sql(p: &LitePolicy, world: &World, schema: &FeatureSchema) -> Result<(), String> {
    let queries = emit_violation_queries(p, schema).map_err(|e| e.to_string())?;
    let conn = Connection::open_in_memory().map_err(|e| e.to_string())?;
    conn.execute_batch(&queries.ddl).map_err(|e| format!("{e}\n{}", queries.ddl))?;
    conn.execute_batch(&emit_world_inserts(world, schema).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;

    let report = evaluate_lite(p, world, schema).map_err(|e| e.to_string())?;
    let events: Vec<&Event> = world.iter().collect();
    let id = |e: &Event| (events.iter().position(|x| *x == e).unwrap() + 1).to_string();
    let expect = |class: FindingClass, with_rule: bool, with_event: bool| {
        let mut rows: Vec<Vec<String>> = Vec::new();
        for f in report.findings_of(class) {
            let rules = if with_rule { f.rules.iter().map(|r| Some(r.clone())).collect() } else { vec![None] };
            let ids: Vec<Option<String>> =
                if with_event { f.witnesses.iter().map(|e| Some(id(e))).collect() } else { vec![None] };
            for r in &rules {
                for e in &ids {
                    rows.push(r.iter().chain(e).cloned().collect());
                }
            }
        }
        rows.sort();
        rows
    };
    let clauses = [
        ("permissions", &queries.permissions, vec!["event_id"], expect(FindingClass::Permissions, false, true)),
        ("prohibitions", &queries.prohibitions, vec!["rule_label", "event_id"], expect(FindingClass::Prohibitions, true, true)),
        ("obligations", &queries.obligations, vec!["rule_label"], expect(FindingClass::Obligations, true, false)),
    ];
    for (name, sql, columns, expected) in clauses {
        let got = sql_rows(&conn, sql, &columns)?;
        if got != expected {
            return Err(format!("{name}: sql {got:?}, evaluator {expected:?}\npolicy = {p:?}\nworld = {world:?}\n{sql}"));
        }
    }
    Ok(())
}

pub fn differential_sql(n: usize, seed: u64) -> Check {
    let schema = rich_schema();
    let opts = GenOptions::rich();
    let mut rng = rng(seed);
    let mut findings = 0;
    for _ in 0..n {
        let p = random_policy(&mut rng, &schema, &opts);
        let w = random_world(&mut rng, &schema, 6);
        check_sql(&p, &w, &schema)?;
        findings += evaluate_lite(&p, &w, &schema).unwrap().findings.len();
    }
    Ok(format!("{n} policy/world pairs, {findings} findings, 0 disagreements"))
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() })
}

fn run<S: Strategy>(
    name: &str,
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner(cases).run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

fn tc(e: impl std::fmt::Display) -> TestCaseError {
    TestCaseError::fail(e.to_string())
}

pub fn null_dominance(cases: u32) -> Check {
    let schema = rich_schema();
    let opts = GenOptions::rich();
    run("null dominance", cases, any::<u64>(), |seed| {
        let mut rng = rng(seed);
        let rule = random_rule(&mut rng, &schema, &opts);
        let event = random_event(&mut rng, &schema);
        for c in rule.conditions() {
            for s in c.simple_conditions() {
                let f = s.feature();
                if f <= 1 {
                    continue;
                }
                let mut values = event.values().to_vec();
                values[f] = Value::Null;
                let nulled = Event::new(&schema, values).map_err(tc)?;
                prop_assert!(!eval_simple(s, &nulled, &schema), "{s:?} holds on null");
                if c.is_simple() {
                    prop_assert!(!matches(&rule, &nulled, &schema));
                }
            }
        }
        Ok(())
    })?;
    Ok(format!("{cases} cases"))
}

pub fn softmatch_monotone(cases: u32) -> Check {
    let schema = library_schema();
    let opts = GenOptions::numeric();
    run("match implies softmatch", cases, any::<u64>(), |seed| {
        let mut rng = rng(seed);
        let rule = random_rule(&mut rng, &schema, &opts);
        let rule = if rng.gen_bool(0.5) {
            let t = rng.gen_range(0..=5).to_string();
            rule.conjoin([simple(&schema, "Datetime", Operator::Lteq, &t).unwrap()])
        } else {
            rule
        };
        for _ in 0..8 {
            let e = random_event(&mut rng, &schema);
            let (m, s) = (matches(&rule, &e, &schema), softmatch(&rule, &e, &schema));
            prop_assert!(!m || s, "match without softmatch: {rule:?} {e:?}");
            prop_assert_eq!(s, matches(&strip_deadlines(&rule), &e, &schema));
        }
        Ok(())
    })?;
    Ok(format!("{cases} cases x 8 events"))
}

pub fn containment_preorder(cases: u32) -> Check {
    let schema = library_schema();
    let opts = GenOptions::numeric();
    run("containment preorder", cases, any::<u64>(), |seed| {
        let mut rng = rng(seed);
        let b = random_rule(&mut rng, &schema, &opts);
        let extra: Vec<Condition> = (0..2).filter_map(|_| random_condition(&mut rng, &schema, &opts)).collect();
        let a = b.conjoin(extra);
        let kept: Vec<Condition> =
            b.conditions().iter().enumerate().filter(|(i, _)| *i == 0 || rng.gen_bool(0.5)).map(|(_, c)| c.clone()).collect();
        let c = EventRule::new(kept);
        // dropping a core equality or adding a refinement of an absent
        // component can make a rule ill-formed; fall back to `b` then
        let well_formed = |r: EventRule| if check_well_formed(&r, &schema).ok { r } else { b.clone() };
        let (a, c) = (well_formed(a), well_formed(c));
        let contains = |x: &EventRule, y: &EventRule| rule_contains(x, y, &schema).map_err(tc);
        for r in [&a, &b, &c] {
            prop_assert!(contains(r, r)?, "not reflexive: {r:?}");
        }
        prop_assert!(contains(&a, &b)? && contains(&b, &c)? && contains(&a, &c)?);

        // unrelated rules: a reported counterexample is one, and a reported
        // containment survives every probe event
        let x = random_rule(&mut rng, &schema, &opts);
        let y = random_rule(&mut rng, &schema, &opts);
        match containment_counterexample(&x, &y, &schema).map_err(tc)? {
            Some(e) => prop_assert!(matches(&x, &e, &schema) && !matches(&y, &e, &schema)),
            None => {
                let domain = WitnessDomain::for_rules([&x, &y], &schema).map_err(tc)?;
                for e in domain.events() {
                    prop_assert!(!matches(&x, &e, &schema) || matches(&y, &e, &schema));
                }
            }
        }
        Ok(())
    })?;
    Ok(format!("{cases} cases"))
}

pub fn xor_desugaring(cases: u32) -> Check {
    let schema = rich_schema();
    let opts = GenOptions::rich();
    run("xor desugaring", cases, any::<u64>(), |seed| {
        let mut rng = rng(seed);
        let Some(c) = random_condition(&mut rng, &schema, &opts) else { return Ok(()) };
        let c = Condition::xor(c.clone(), Condition::Or(vec![c, random_condition(&mut rng, &schema, &opts).unwrap_or_else(Condition::falsity)]));
        let d = desugar_xor(&c);
        let mut has_xor = false;
        fn scan(c: &Condition, found: &mut bool) {
            match c {
                Condition::Xor(..) => *found = true,
                Condition::And(cs) | Condition::Or(cs) => cs.iter().for_each(|c| scan(c, found)),
                Condition::Not(c) => scan(c, found),
                Condition::Simple(_) => {}
            }
        }
        scan(&d, &mut has_xor);
        prop_assert!(!has_xor);
        for _ in 0..8 {
            let e = random_event(&mut rng, &schema);
            prop_assert_eq!(eval_condition(&c, &e, &schema), eval_condition(&d, &e, &schema));
        }
        Ok(())
    })?;
    Ok(format!("{cases} cases x 8 events"))
}

pub fn round_trips(cases: u32) -> Check {
    let schema = rich_schema();
    let opts = GenOptions::rich();
    run("policy and world round trip", cases, any::<u64>(), |seed| {
        let mut rng = rng(seed);
        let policy = FullPolicy::from_lite(random_policy(&mut rng, &schema, &opts));
        let text = write_native_policy(&policy, &schema);
        let back = parse_policy(&text, &schema).map_err(|e| tc(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &policy);
        prop_assert_eq!(write_native_policy(&back, &schema), text);

        let world = random_world(&mut rng, &schema, 5);
        let text = write_world(&world, &schema);
        let back = parse_world(&text, &schema).map_err(|e| tc(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &world);
        prop_assert_eq!(write_world(&back, &schema), text);
        Ok(())
    })?;
    run("number round trip", cases, (-100_000i64..100_000, 1i64..1000), |(n, d)| {
        let x = num_rational::Rational64::new(n, d);
        prop_assert_eq!(parse_number(&format_number(&x)), Some(x));
        Ok(())
    })?;
    for schema in [library_schema(), rich_schema(), core_schema()] {
        let text = write_schema(&schema);
        let back = parse_schema(&text).map_err(|e| e.to_string())?;
        if back != schema || write_schema(&back) != text {
            return fail(format!("schema round trip changed:\n{text}"));
        }
    }
    Ok(format!("{cases} policies and worlds, {cases} numbers, 3 schemas"))
}

pub fn witness_replay(cases: u32) -> Check {
    let schema = rich_schema();
    let opts = GenOptions::rich();
    run("witness replay", cases, any::<u64>(), |seed| {
        let mut rng = rng(seed);
        let (p, q) = if rng.gen_bool(0.3) {
            (random_policy(&mut rng, &schema, &opts), random_policy(&mut rng, &schema, &opts))
        } else {
            random_pair(&mut rng, &schema, &opts)
        };
        let options = CompareOptions { normalize: true, ..CompareOptions::default() };
        for verdict in [
            asymmetric_conflict_with(&p, &q, &schema, &options).map_err(tc)?,
            symmetric_conflict_with(&p, &q, &schema, &options).map_err(tc)?,
        ] {
            prop_assert_eq!(verdict.conflict(), !verdict.failures.is_empty());
            check_witnesses(&verdict, &p, &q, &schema).map_err(tc)?;
        }
        Ok(())
    })?;
    Ok(format!("{cases} pairs, both modes"))
}
