//! Worked examples, each confirmed by a second, independent computation.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tfnp_core::game::{self, apply_partition, apply_pick, larger_group_pick, new_game, Roles};
use tfnp_core::gen::{gen_one, random_self_map, GenKind};
use tfnp_core::harness::{roundtrip_test, RoundTripOptions};
use tfnp_core::lc::{check_solutions, QP_TO_CLC};
use tfnp_core::model::{domain, iterate_from, Element, EvaluableMap, FiniteSet};
use tfnp_core::oracles::{check_equivalence, enumerate_solutions, solve_localopt_walk, solve_qp_walk};
use tfnp_core::problems::{
    verify_solution, LocalOptInstance, PigeonInstance, ProblemInstance, QuotientPigeonInstance, SolutionCertificate,
};
use tfnp_core::reductions::{
    apply_pullback, double_domain_defixing, localopt_normalize, localopt_to_qp, redirect_vstar_class,
    reduce_pigeon_to_qp, ReductionArtifact,
};

fn el(v: u32) -> Element {
    Element::new(v).unwrap()
}

fn map(n: u32, values: &[u32]) -> EvaluableMap {
    EvaluableMap::unary_from_values(n, n, values).unwrap()
}

fn qp_eq(n: u32, c: &[u32], v: u32) -> QuotientPigeonInstance {
    QuotientPigeonInstance::new(n, map(n, c), EvaluableMap::equality(n), el(v)).unwrap()
}

fn accepts(inst: &ProblemInstance, sol: &SolutionCertificate) -> bool {
    verify_solution(inst, sol).unwrap().is_accept()
}

/// Pulls every reduced solution back and checks it on the original.
fn exhaustive_roundtrip(art: &ReductionArtifact) -> usize {
    let sols = enumerate_solutions(&art.reduced, usize::MAX).unwrap();
    for s in &sols {
        let back = apply_pullback(art, s).unwrap();
        assert!(accepts(&art.original, &back), "{s:?} ↦ {back:?}");
    }
    sols.len()
}

fn localopt(kind: GenKind, n: u32, m: Option<u32>, seed: u64) -> LocalOptInstance {
    match gen_one(kind, n, m, seed).unwrap() {
        ProblemInstance::LocalOpt(i) => i,
        _ => unreachable!(),
    }
}

#[test]
fn seed_7_table_and_circuit_agree() {
    let f = random_self_map(&mut ChaCha8Rng::seed_from_u64(7), 3);
    let both = f.clone().with_synthesized_circuit().unwrap();
    let table = f.table().unwrap();
    for x in domain(3) {
        assert_eq!(both.apply(x).code(), table[x.code() as usize]);
    }
    assert_eq!(both.apply(el(5)).code(), table[4]);
}

#[test]
fn four_cycle_iterates() {
    let f = map(2, &[2, 3, 4, 1]);
    assert_eq!(iterate_from(&f, el(1), 3).unwrap(), el(4));
    let mut x = el(1);
    for _ in 0..3 {
        x = f.apply(x);
    }
    assert_eq!(x, el(4));
}

#[test]
fn qp_walk_collides_at_one_three() {
    let inst = qp_eq(2, &[2, 3, 2, 1], 1);
    let r = solve_qp_walk(&inst).unwrap();
    let t = r.trace.unwrap();
    assert_eq!(t.sequence, vec![el(1), el(2), el(3), el(2)]);
    assert_eq!(t.collision, Some((1, 3)));
    assert_eq!(r.certificate, SolutionCertificate::QpType1 { x: el(3), y: el(1) });
    let all = enumerate_solutions(&ProblemInstance::QuotientPigeon(inst), usize::MAX).unwrap();
    assert!(all.contains(&r.certificate));
}

#[test]
fn constant_map_walk() {
    let inst = qp_eq(2, &[3, 3, 3, 3], 1);
    assert_eq!(solve_qp_walk(&inst).unwrap().certificate, SolutionCertificate::QpType1 { x: el(3), y: el(1) });
}

#[test]
fn chain_walk_ends_at_three() {
    let inst = LocalOptInstance::new(2, 2, map(2, &[2, 3, 3, 4]), EvaluableMap::identity(2)).unwrap();
    assert_eq!(solve_localopt_walk(&inst, el(1)).unwrap(), SolutionCertificate::LocalOpt { x: el(3) });
}

#[test]
fn seed_9_playout_is_a_long_choice_solution() {
    let inst = gen_one(GenKind::LongChoiceRandom, 3, None, 9).unwrap();
    let ProblemInstance::LongChoice(lc) = &inst else { unreachable!() };
    let s = game::playout(lc).unwrap();
    assert_eq!(s.picks.len(), 4);
    let sol = SolutionCertificate::LongChoiceSequence { sequence: s.picks.clone() };
    assert!(accepts(&inst, &sol));
    // feasibility straight from the definition
    for i in 0..lc.predicates().len() {
        for j in i + 2..4 {
            let a = lc.eval_predicate(i, &s.picks[..=i], s.picks[j]);
            let b = lc.eval_predicate(i, &s.picks[..=i], s.picks[i + 1]);
            assert_eq!(a, b);
        }
    }
}

#[test]
fn seed_3_enumeration_matches_brute_force() {
    let inst = gen_one(GenKind::RandomTable, 3, None, 3).unwrap();
    let listed: BTreeSet<SolutionCertificate> = enumerate_solutions(&inst, usize::MAX).unwrap().into_iter().collect();
    let mut brute = BTreeSet::new();
    for x in domain(3) {
        for c in [SolutionCertificate::QpType2 { x }, SolutionCertificate::QpType4 { x }] {
            if accepts(&inst, &c) {
                brute.insert(c);
            }
        }
        for y in domain(3) {
            for c in [
                SolutionCertificate::QpType1 { x, y },
                SolutionCertificate::QpType3 { x, y },
                SolutionCertificate::QpType5 { x, y },
            ] {
                if accepts(&inst, &c) {
                    brute.insert(c);
                }
            }
            for z in domain(3) {
                let c = SolutionCertificate::QpType6 { x, y, z };
                if accepts(&inst, &c) {
                    brute.insert(c);
                }
            }
        }
    }
    assert!(!brute.is_empty());
    assert_eq!(listed, brute);
}

#[test]
fn pigeon_collision_pulls_back() {
    let pigeon = PigeonInstance::new(2, map(2, &[2, 2, 1, 3]), el(4)).unwrap();
    let art = reduce_pigeon_to_qp(&pigeon).unwrap();
    let sol = SolutionCertificate::QpType1 { x: el(1), y: el(2) };
    assert!(accepts(&art.reduced, &sol));
    let back = apply_pullback(&art, &sol).unwrap();
    assert_eq!(back, SolutionCertificate::PigeonCollision { x: el(1), y: el(2) });
    assert!(accepts(&art.original, &back));
    exhaustive_roundtrip(&art);
}

#[test]
fn redirect_sends_five_to_u_star() {
    let inst = qp_eq(3, &[2, 3, 4, 5, 1, 7, 8, 6], 1);
    let art = redirect_vstar_class(&inst, Some(el(2))).unwrap();
    let ProblemInstance::QuotientPigeon(red) = &art.reduced else { unreachable!() };
    let changed: Vec<Element> = domain(3).filter(|&x| red.image(x) != inst.image(x)).collect();
    assert_eq!(changed, vec![el(5)]);
    assert_eq!(red.image(el(5)), el(2));
    // C'(5) = C'(1) = 2 is a reduced collision involving 5
    let sol = SolutionCertificate::QpType1 { x: el(5), y: el(1) };
    assert!(accepts(&art.reduced, &sol));
    assert_eq!(apply_pullback(&art, &sol).unwrap(), SolutionCertificate::QpType2 { x: el(5) });
    exhaustive_roundtrip(&art);
}

#[test]
fn seed_11_defixing_leaves_no_fixed_class() {
    let ProblemInstance::QuotientPigeon(inst) = gen_one(GenKind::KernelEquivalence, 2, None, 11).unwrap() else {
        unreachable!()
    };
    let art = double_domain_defixing(&inst).unwrap();
    let ProblemInstance::QuotientPigeon(red) = &art.reduced else { unreachable!() };
    assert!(domain(red.n()).all(|x| !red.related(red.image(x), x)));
    let n = exhaustive_roundtrip(&art);
    assert!(n > 0);
}

#[test]
fn seed_5_localopt_to_qp_roundtrip() {
    let inst = localopt(GenKind::LocaloptRandom, 3, Some(3), 5);
    assert!(exhaustive_roundtrip(&localopt_to_qp(&inst).unwrap()) > 0);
}

#[test]
fn seed_13_normalization_roundtrip() {
    let inst = localopt(GenKind::LocaloptRandom, 3, None, 13);
    let art = localopt_normalize(&inst).unwrap();
    let ProblemInstance::LocalOpt(norm) = &art.reduced else { unreachable!() };
    // unit steps: every active vertex raises the potential by exactly one
    for x in domain(norm.n()) {
        if !norm.is_solution(x) {
            assert_eq!(norm.potential(norm.step(x)), norm.potential(x) + 1);
        }
    }
    assert!(exhaustive_roundtrip(&art) > 0);
}

#[test]
fn seed_21_pipeline_roundtrip() {
    let inst = gen_one(GenKind::LocaloptDag, 3, None, 21).unwrap();
    let r = roundtrip_test("localopt_to_qp", &inst, &RoundTripOptions::default()).unwrap();
    assert_eq!(r.failures, 0);
    assert_eq!(r.successes, r.solutions);
}

#[test]
fn seed_42_kernel_is_an_equivalence() {
    let ProblemInstance::QuotientPigeon(inst) = gen_one(GenKind::KernelEquivalence, 3, None, 42).unwrap() else {
        unreachable!()
    };
    assert_eq!(check_equivalence(inst.e(), 3).unwrap(), None);
}

#[test]
fn equality_with_injective_images_has_no_check_solution() {
    let inst = qp_eq(2, &[2, 3, 4, 2], 1);
    assert_eq!(check_solutions(&[el(1), el(2), el(3)], &inst), None);
}

#[test]
fn engine_takes_the_larger_group() {
    let s = new_game(2, Roles::default()).unwrap();
    let s = apply_pick(&s, el(1)).unwrap();
    let s = apply_partition(&s, &FiniteSet::from_elements(2, [el(2)]).unwrap()).unwrap();
    assert_eq!(larger_group_pick(&s).unwrap(), el(3));
}

#[test]
fn harness_roundtrips() {
    let opts = RoundTripOptions::default();
    let pigeon = gen_one(GenKind::PigeonRandom, 3, None, 1).unwrap();
    assert_eq!(roundtrip_test("pigeon_to_qp", &pigeon, &opts).unwrap().failures, 0);

    let lo = gen_one(GenKind::LocaloptRandom, 3, None, 2).unwrap();
    assert_eq!(roundtrip_test("localopt_to_qp", &lo, &opts).unwrap().failures, 0);

    let qp = gen_one(GenKind::ClcReadyKernel, 3, None, 3).unwrap();
    let r = roundtrip_test(QP_TO_CLC, &qp, &opts).unwrap();
    println!("qp_to_clc kernel n=3 seed 3: {} of {} sequences fail", r.failures, r.solutions);
    assert_eq!(r.successes + r.failures, r.solutions);
    for f in &r.failure_examples {
        assert!(f.error.contains("FAILURE") || f.error.to_lowercase().contains("fail"), "{}", f.error);
    }
}
