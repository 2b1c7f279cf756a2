//! Symmetric and asymmetric conflicts between Lite policies.
//!
//! For consistent policies p and p′, p ⋢ p′ holds exactly when p's
//! permissions are not contained in p′'s, or some obligation of p′ contains
//! no obligation of p. Each failure comes with a world on which p is valid
//! and p′ is not.

use serde::Serialize;

use super::normalize::{normalize_with, NormalizeOptions};
use super::relations::{label, Ctx};
use super::CompareError;
use crate::evaluator::gate;
use crate::matcher::matches;
use crate::model::{Event, FeatureSchema, LitePolicy, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConflictKind {
    Symmetric,
    Asymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConflictCause {
    /// Some event permitted by the first policy is not permitted by the second.
    PermissionsNotContained,
    /// The second policy has an obligation the first does not agree to.
    ObligationNotAgreed,
    /// Only found by the bounded oracle on full policies: a duty, remedy or
    /// consequence clause fails.
    TemporalClauses,
}

/// Which containment failed. `Forward` is first ⋢ second (requester ⋢
/// provider in the asymmetric case); `Backward` is second ⋢ first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Complete decision for Lite policies.
    Decision,
    /// Enumeration of small worlds; best effort for full policies.
    BoundedOracle,
}

/// A failed containment with a counterexample world: valid under the policy
/// on the left of the direction, violating under the one on the right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContainmentFailure {
    pub direction: Direction,
    pub cause: ConflictCause,
    /// The uncovered permission or the unagreed obligation.
    pub rule: Option<String>,
    pub witnesses: World,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictVerdict {
    pub kind: ConflictKind,
    pub method: Method,
    /// Whether either input had to be normalised first.
    pub normalized: bool,
    pub failures: Vec<ContainmentFailure>,
}

impl ConflictVerdict {
    pub fn conflict(&self) -> bool {
        !self.failures.is_empty()
    }

    pub fn cause(&self) -> Option<ConflictCause> {
        self.failures.first().map(|f| f.cause)
    }

    pub fn witnesses(&self) -> Option<&World> {
        self.failures.first().map(|f| &f.witnesses)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CompareOptions {
    /// Normalise inconsistent inputs instead of rejecting them.
    pub normalize: bool,
    pub normalize_options: NormalizeOptions,
}

fn prepare(
    p: &LitePolicy,
    role: &'static str,
    schema: &FeatureSchema,
    options: &CompareOptions,
) -> Result<(LitePolicy, bool), CompareError> {
    gate(p.rules(), p.is_normal_form(), schema)?;
    let Some(problem) = Ctx::new(p.rules(), schema)?.inconsistency(p) else {
        return Ok((p.clone(), false));
    };
    if options.normalize {
        Ok((normalize_with(p, schema, options.normalize_options)?, true))
    } else {
        Err(CompareError::InconsistentInput { role, reason: problem.to_string() })
    }
}

fn world(events: impl IntoIterator<Item = Event>) -> World {
    World::from_conforming(events)
}

/// Decides `left ⊑ right` for consistent policies.
fn containment_failure(
    left: &LitePolicy,
    right: &LitePolicy,
    ctx: &Ctx,
    direction: Direction,
) -> Option<ContainmentFailure> {
    // With an unsatisfiable obligation `left` is valid on no world at all.
    let mut examples = Vec::with_capacity(left.obligations().len());
    for o in left.obligations() {
        examples.push(ctx.example(o)?);
    }

    for theirs in right.obligations() {
        if left.obligations().iter().any(|ours| ctx.contains(ours, theirs)) {
            continue;
        }
        let events = left
            .obligations()
            .iter()
            .map(|ours| ctx.not_contained(ours, theirs).expect("not contained"));
        return Some(ContainmentFailure {
            direction,
            cause: ConflictCause::ObligationNotAgreed,
            rule: Some(label(theirs)),
            witnesses: world(events),
        });
    }

    let extra = ctx.set_not_contained(left.permissions(), right.permissions())?;
    let rule = left.permissions().iter().find(|p| matches(p, &extra, ctx.schema)).map(label);
    Some(ContainmentFailure {
        direction,
        cause: ConflictCause::PermissionsNotContained,
        rule,
        witnesses: world(examples.into_iter().chain([extra])),
    })
}

/// Whether the requester's policy fails to be contained in the provider's.
///
/// Both policies must be consistent; see [`asymmetric_conflict_with`] to
/// normalise them on the way in.
pub fn asymmetric_conflict(
    requester: &LitePolicy,
    provider: &LitePolicy,
    schema: &FeatureSchema,
) -> Result<ConflictVerdict, CompareError> {
    asymmetric_conflict_with(requester, provider, schema, &CompareOptions::default())
}

pub fn asymmetric_conflict_with(
    requester: &LitePolicy,
    provider: &LitePolicy,
    schema: &FeatureSchema,
    options: &CompareOptions,
) -> Result<ConflictVerdict, CompareError> {
    let (left, n1) = prepare(requester, "requester", schema, options)?;
    let (right, n2) = prepare(provider, "provider", schema, options)?;
    let ctx = Ctx::new(left.rules().chain(right.rules()), schema)?;
    Ok(ConflictVerdict {
        kind: ConflictKind::Asymmetric,
        method: Method::Decision,
        normalized: n1 || n2,
        failures: containment_failure(&left, &right, &ctx, Direction::Forward).into_iter().collect(),
    })
}

/// Whether the two policies are not equivalent; reports each failing
/// direction.
pub fn symmetric_conflict(
    first: &LitePolicy,
    second: &LitePolicy,
    schema: &FeatureSchema,
) -> Result<ConflictVerdict, CompareError> {
    symmetric_conflict_with(first, second, schema, &CompareOptions::default())
}

pub fn symmetric_conflict_with(
    first: &LitePolicy,
    second: &LitePolicy,
    schema: &FeatureSchema,
    options: &CompareOptions,
) -> Result<ConflictVerdict, CompareError> {
    let (left, n1) = prepare(first, "first", schema, options)?;
    let (right, n2) = prepare(second, "second", schema, options)?;
    let ctx = Ctx::new(left.rules().chain(right.rules()), schema)?;
    let failures = containment_failure(&left, &right, &ctx, Direction::Forward)
        .into_iter()
        .chain(containment_failure(&right, &left, &ctx, Direction::Backward))
        .collect();
    Ok(ConflictVerdict { kind: ConflictKind::Symmetric, method: Method::Decision, normalized: n1 || n2, failures })
}
