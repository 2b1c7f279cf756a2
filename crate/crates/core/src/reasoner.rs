//! Materialisation of permissions implied by the action hierarchy.
//!
//! Only permissions are expanded. A permission whose rule carries a top-level
//! `<Action, =, a>` gains one copy per action included (transitively) in `a`.
//! Cycles are rejected when the [`ActionVocabulary`] is built, so saturation
//! itself cannot fail.

use crate::model::{ActionVocabulary, Duty, DutyWithConsequence, EventRule, FullPolicy, LitePolicy, Value, ACTION};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SaturationConfig {
    pub enabled: bool,
}

impl Default for SaturationConfig {
    fn default() -> Self {
        SaturationConfig { enabled: true }
    }
}

/// Policies whose permissions can be saturated.
pub trait Saturate: Sized {
    fn saturate_with(&self, vocab: &ActionVocabulary, config: SaturationConfig) -> Self;

    fn saturate(&self, vocab: &ActionVocabulary) -> Self {
        self.saturate_with(vocab, SaturationConfig::default())
    }
}

/// The copies of one permission for each sub-action of its action.
fn specialise(rule: &EventRule, vocab: &ActionVocabulary) -> Vec<EventRule> {
    let Some(Value::Identifier(action)) = rule.top_level_equality(ACTION) else {
        return Vec::new();
    };
    vocab
        .sub_actions(action)
        .into_iter()
        .map(|sub| {
            let label = format!("{}[{sub}]", rule.label().unwrap_or("permission"));
            rule.replace_top_level_equality(ACTION, Value::Identifier(sub)).with_label(label)
        })
        .collect()
}

fn saturate_lite(policy: &LitePolicy, vocab: &ActionVocabulary) -> LitePolicy {
    let originals = policy.permissions();
    let copies = originals.iter().flat_map(|p| specialise(p, vocab));
    policy.with_permissions(originals.iter().cloned().chain(copies).collect())
}

impl Saturate for LitePolicy {
    fn saturate_with(&self, vocab: &ActionVocabulary, config: SaturationConfig) -> Self {
        if !config.enabled || vocab.is_empty() {
            return self.clone();
        }
        saturate_lite(self, vocab)
    }
}

impl Saturate for FullPolicy {
    fn saturate_with(&self, vocab: &ActionVocabulary, config: SaturationConfig) -> Self {
        if !config.enabled || vocab.is_empty() {
            return self.clone();
        }
        let lite = saturate_lite(self.lite(), vocab);
        let mut duties = self.duties().to_vec();
        for d in self.duties() {
            for permission in specialise(&d.permission, vocab) {
                duties.push(Duty { permission, duty: d.duty.clone() });
            }
        }
        let mut duty_consequences = self.duty_consequences().to_vec();
        for d in self.duty_consequences() {
            for permission in specialise(&d.permission, vocab) {
                duty_consequences.push(DutyWithConsequence {
                    permission,
                    duty: d.duty.clone(),
                    consequence: d.consequence.clone(),
                });
            }
        }
        FullPolicy::new(
            lite,
            duties,
            duty_consequences,
            self.remedies().to_vec(),
            self.obligation_consequences().to_vec(),
        )
        .expect("saturation keeps every tuple permission inside P")
    }
}
