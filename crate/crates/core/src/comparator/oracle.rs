//! Containment by enumerating small worlds.
//!
//! For Lite policies a counterexample to p ⊑ p′, when one exists, needs at
//! most one event per obligation of p plus one more, so enumerating worlds up
//! to that size over the probe domain decides containment. The search shares
//! nothing with the conflict procedure beyond rule matching, which makes it a
//! cross-check for it.
//!
//! Full policies get the same enumeration with extra timestamps around their
//! constants; the result there is best effort only.

use std::collections::{BTreeSet, HashMap};

use super::conflict::{ConflictCause, ConflictKind, ConflictVerdict, ContainmentFailure, Direction, Method};
use super::domain::WitnessDomain;
use super::CompareError;
use crate::evaluator::{evaluate_full, evaluate_lite, gate, FindingClass};
use crate::matcher::{matches, softmatch};
use crate::model::{Event, EventRule, FeatureSchema, FullPolicy, LitePolicy, World, DATETIME};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleOptions {
    /// Most probe events enumerated.
    pub max_events: u128,
    /// Most candidate worlds checked.
    pub max_worlds: u128,
    /// World size bound for full policies; Lite policies always use |O| + 1.
    pub max_world_size: Option<usize>,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { max_events: 2_000_000, max_worlds: 20_000_000, max_world_size: None }
    }
}

fn too_large(what: String, limit: u128) -> CompareError {
    CompareError::DomainTooLarge { what, limit }
}

fn check_events(domain: &WitnessDomain, options: &OracleOptions) -> Result<(), CompareError> {
    let count = domain.event_count();
    if count > options.max_events {
        return Err(too_large(format!("{count} probe events"), options.max_events));
    }
    Ok(())
}

/// Visits index subsets of `0..n` of size at most `k`, smallest first, in
/// lexicographic order. Stops early when `visit` returns true.
fn subsets(n: usize, k: usize, mut visit: impl FnMut(&[usize]) -> bool) -> bool {
    fn go(start: usize, n: usize, k: usize, size: usize, chosen: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if chosen.len() == size {
            return visit(chosen);
        }
        for i in start..n {
            if n - i < size - chosen.len() {
                break;
            }
            chosen.push(i);
            if go(i + 1, n, k, size, chosen, visit) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    let mut chosen = Vec::with_capacity(k);
    (0..=k.min(n)).any(|size| go(0, n, k, size, &mut chosen, &mut visit))
}

fn binomial_sum(n: usize, k: usize) -> u128 {
    let mut total = 0u128;
    let mut c = 1u128;
    for i in 0..=k.min(n) {
        total = total.saturating_add(c);
        c = c.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    total
}

/// What the Lite validity of a world depends on, for one event.
#[derive(Clone, PartialEq, Eq, Hash)]
struct LiteClass {
    allowed_right: bool,
    obligations_left: Vec<bool>,
    obligations_right: Vec<bool>,
}

fn allowed(p: &LitePolicy, e: &Event, schema: &FeatureSchema) -> bool {
    p.permissions().iter().any(|r| matches(r, e, schema)) && !p.prohibitions().iter().any(|r| matches(r, e, schema))
}

fn covers(bits: &[&[bool]], n: usize) -> bool {
    (0..n).all(|i| bits.iter().any(|b| b[i]))
}

/// A world of at most |O| + 1 probe events on which `p` is valid and `q` is
/// not, if there is one.
pub fn brute_force_counterexample(
    p: &LitePolicy,
    q: &LitePolicy,
    schema: &FeatureSchema,
    options: &OracleOptions,
) -> Result<Option<World>, CompareError> {
    gate(p.rules(), p.is_normal_form(), schema)?;
    gate(q.rules(), q.is_normal_form(), schema)?;
    let domain = WitnessDomain::for_rules(p.rules().chain(q.rules()), schema)?;
    check_events(&domain, options)?;

    // One representative per class of events valid-relevant to both policies;
    // events `p` does not allow can never appear in a world where `p` holds.
    let mut index: HashMap<LiteClass, usize> = HashMap::new();
    let mut classes: Vec<(LiteClass, Event)> = Vec::new();
    for e in domain.events() {
        if !allowed(p, &e, schema) {
            continue;
        }
        let class = LiteClass {
            allowed_right: allowed(q, &e, schema),
            obligations_left: p.obligations().iter().map(|o| matches(o, &e, schema)).collect(),
            obligations_right: q.obligations().iter().map(|o| matches(o, &e, schema)).collect(),
        };
        index.entry(class.clone()).or_insert_with(|| {
            classes.push((class, e));
            classes.len() - 1
        });
    }

    let size = p.obligations().len() + 1;
    let candidates = binomial_sum(classes.len(), size);
    if candidates > options.max_worlds {
        return Err(too_large(format!("{candidates} candidate worlds"), options.max_worlds));
    }
    let (nl, nr) = (p.obligations().len(), q.obligations().len());
    let mut found = None;
    subsets(classes.len(), size, |chosen| {
        let left: Vec<&[bool]> = chosen.iter().map(|&i| classes[i].0.obligations_left.as_slice()).collect();
        if !covers(&left, nl) {
            return false;
        }
        let right: Vec<&[bool]> = chosen.iter().map(|&i| classes[i].0.obligations_right.as_slice()).collect();
        let right_valid = chosen.iter().all(|&i| classes[i].0.allowed_right) && covers(&right, nr);
        if right_valid {
            return false;
        }
        found = Some(World::from_conforming(chosen.iter().map(|&i| classes[i].1.clone())));
        true
    });

    if let Some(w) = &found {
        debug_assert!(evaluate_lite(p, w, schema).map(|r| r.is_valid()).unwrap_or(false));
        debug_assert!(!evaluate_lite(q, w, schema).map(|r| r.is_valid()).unwrap_or(true));
    }
    Ok(found)
}

/// p ⊑ p′ decided by world enumeration.
pub fn brute_force_containment(p: &LitePolicy, q: &LitePolicy, schema: &FeatureSchema) -> Result<bool, CompareError> {
    Ok(brute_force_counterexample(p, q, schema, &OracleOptions::default())?.is_none())
}

fn temporal_constants(policies: [&FullPolicy; 2]) -> BTreeSet<i64> {
    let mut ts = BTreeSet::from([0, 1, 2]);
    for p in policies {
        for r in p.rules() {
            for c in r.conditions() {
                c.for_each_simple(&mut |s| {
                    if s.feature() == DATETIME {
                        for v in s.operand().constants() {
                            if let crate::model::Value::Timestamp(t) = v {
                                ts.extend([t - 2, t - 1, *t, t + 1, t + 2]);
                            }
                        }
                    }
                });
            }
        }
    }
    ts
}

fn default_full_size(p: &FullPolicy) -> usize {
    let tuples = p.duties().len() + p.duty_consequences().len() + p.remedies().len() + p.obligation_consequences().len();
    (p.lite().obligations().len() + tuples + 1).min(4)
}

/// A world of bounded size on which `p` is valid and `q` is not. Only
/// searches worlds up to the size bound, so `None` is not a proof of
/// containment.
pub fn bounded_full_counterexample(
    p: &FullPolicy,
    q: &FullPolicy,
    schema: &FeatureSchema,
    options: &OracleOptions,
) -> Result<Option<World>, CompareError> {
    gate(p.rules(), p.lite().is_normal_form(), schema)?;
    gate(q.rules(), q.lite().is_normal_form(), schema)?;
    let domain = WitnessDomain::with_timestamps(p.rules().chain(q.rules()), schema, temporal_constants([p, q]))?;
    check_events(&domain, options)?;

    let rules: Vec<&EventRule> = p.rules().chain(q.rules()).collect();
    let soft: Vec<&EventRule> = p
        .obligation_consequences()
        .iter()
        .chain(q.obligation_consequences())
        .map(|oc| &oc.obligation)
        .collect();
    let mut seen = HashMap::new();
    let mut classes: Vec<Event> = Vec::new();
    for e in domain.events() {
        if !allowed(p.lite(), &e, schema) {
            continue;
        }
        let signature: (i64, Vec<bool>, Vec<bool>) = (
            e.timestamp(),
            rules.iter().map(|r| matches(r, &e, schema)).collect(),
            soft.iter().map(|r| softmatch(r, &e, schema)).collect(),
        );
        if seen.insert(signature, ()).is_none() {
            classes.push(e);
        }
    }

    let size = options.max_world_size.unwrap_or_else(|| default_full_size(p));
    let candidates = binomial_sum(classes.len(), size);
    if candidates > options.max_worlds {
        return Err(too_large(format!("{candidates} candidate worlds"), options.max_worlds));
    }
    let mut found = None;
    let mut failure = None;
    subsets(classes.len(), size, |chosen| {
        let w = World::from_conforming(chosen.iter().map(|&i| classes[i].clone()));
        match (evaluate_full(p, &w, schema), evaluate_full(q, &w, schema)) {
            (Ok(a), Ok(b)) if a.is_valid() && !b.is_valid() => {
                found = Some(w);
                true
            }
            (Err(e), _) | (_, Err(e)) => {
                failure = Some(e);
                true
            }
            _ => false,
        }
    });
    if let Some(e) = failure {
        return Err(CompareError::IllFormedRule(match e {
            crate::evaluator::EvalError::IllFormedRule(r) => r,
            crate::evaluator::EvalError::SchemaMismatch(_) => unreachable!("probe events conform to the schema"),
        }));
    }
    Ok(found)
}

fn full_failure(
    p: &FullPolicy,
    q: &FullPolicy,
    schema: &FeatureSchema,
    options: &OracleOptions,
    direction: Direction,
) -> Result<Option<ContainmentFailure>, CompareError> {
    let Some(witnesses) = bounded_full_counterexample(p, q, schema, options)? else {
        return Ok(None);
    };
    let report = evaluate_full(q, &witnesses, schema).expect("checked during the search");
    let first = report.findings.first().expect("q is violated");
    let cause = match first.class {
        FindingClass::Permissions | FindingClass::Prohibitions => ConflictCause::PermissionsNotContained,
        FindingClass::Obligations => ConflictCause::ObligationNotAgreed,
        _ => ConflictCause::TemporalClauses,
    };
    Ok(Some(ContainmentFailure { direction, cause, rule: first.rules.first().cloned(), witnesses }))
}

/// Conflict check for full policies by bounded enumeration.
pub fn bounded_conflict(
    first: &FullPolicy,
    second: &FullPolicy,
    schema: &FeatureSchema,
    kind: ConflictKind,
    options: &OracleOptions,
) -> Result<ConflictVerdict, CompareError> {
    let mut failures: Vec<ContainmentFailure> =
        full_failure(first, second, schema, options, Direction::Forward)?.into_iter().collect();
    if kind == ConflictKind::Symmetric {
        failures.extend(full_failure(second, first, schema, options, Direction::Backward)?);
    }
    Ok(ConflictVerdict { kind, method: Method::BoundedOracle, normalized: false, failures })
}
