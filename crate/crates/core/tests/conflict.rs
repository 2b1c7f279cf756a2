//! The conflict procedure against world enumeration. The acceptance target
//! runs the complete sweep; these tests cover a strided part of it plus
//! random pairs.

mod common;

use odrl_core::comparator::{asymmetric_conflict, symmetric_conflict, Direction};

#[test]
fn strided_sweep_agrees_with_enumeration() {
    let schema = common::core_schema();
    let family = common::sweep_policies(&schema);
    let mut conflicts = 0;
    let mut total = 0;
    for p in family.iter().step_by(11) {
        for q in family.iter().skip(3).step_by(13) {
            conflicts += usize::from(common::check_conflict_pair(p, q, &schema).unwrap());
            total += 1;
        }
    }
    assert!(conflicts > 0 && conflicts < total, "{conflicts} of {total}");
}

#[test]
fn random_numeric_pairs_agree_with_enumeration() {
    let schema = common::library_schema();
    let opts = common::GenOptions::numeric();
    let mut rng = common::rng(0x7e0);
    let mut conflicts = 0;
    for _ in 0..250 {
        let (p, q) = common::random_pair(&mut rng, &schema, &opts);
        conflicts += usize::from(common::check_conflict_pair(&p, &q, &schema).unwrap());
    }
    assert!(conflicts > 20 && conflicts < 230, "{conflicts}");
}

#[test]
fn symmetric_is_both_directions() {
    let schema = common::library_schema();
    let opts = common::GenOptions::numeric();
    let mut rng = common::rng(0x5e);
    for _ in 0..150 {
        let (p, q) = common::random_pair(&mut rng, &schema, &opts);
        let forward = asymmetric_conflict(&p, &q, &schema).unwrap().conflict();
        let backward = asymmetric_conflict(&q, &p, &schema).unwrap().conflict();
        let sym = symmetric_conflict(&p, &q, &schema).unwrap();
        assert_eq!(sym.conflict(), forward || backward);
        let dirs: Vec<Direction> = sym.failures.iter().map(|f| f.direction).collect();
        assert_eq!(dirs.contains(&Direction::Forward), forward);
        assert_eq!(dirs.contains(&Direction::Backward), backward);
        common::check_witnesses(&sym, &p, &q, &schema).unwrap();
    }
}

#[test]
fn a_policy_never_conflicts_with_itself() {
    let schema = common::rich_schema();
    let opts = common::GenOptions::rich();
    let mut rng = common::rng(0x1d);
    for _ in 0..100 {
        let p = common::random_consistent_policy(&mut rng, &schema, &opts);
        assert!(!symmetric_conflict(&p, &p, &schema).unwrap().conflict(), "{p:?}");
    }
}
