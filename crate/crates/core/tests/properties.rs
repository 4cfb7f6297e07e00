use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tfnp_core::game::{self, apply_partition, apply_pick, new_game, Phase, Roles};
use tfnp_core::gen::{gen_one, random_self_map, GenKind};
use tfnp_core::harness::{roundtrip_test, RoundTripOptions};
use tfnp_core::lc::{self, beta_run, build_sets};
use tfnp_core::model::{domain, domain_size, iterate_from, Element, FiniteSet};
use tfnp_core::oracles::{enumerate_solutions, solve_localopt_walk, solve_qp_walk, walk_from};
use tfnp_core::problems::{
    verify_solution, ConstrainedLongChoiceInstance, ProblemInstance, QuotientPigeonInstance, SolutionCertificate,
};
use tfnp_core::reductions::{apply_pullback, localopt_normalize, reduce_localopt_to_qp, localopt_to_qp};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn subset(n: u32, mask: u64) -> FiniteSet {
    FiniteSet::from_elements(n, domain(n).filter(|e| mask >> e.code() & 1 == 1)).unwrap()
}

fn qp(kind: GenKind, n: u32, seed: u64) -> QuotientPigeonInstance {
    try_qp(kind, n, seed).unwrap()
}

/// `None` where the family has no instances of size `n`.
fn try_qp(kind: GenKind, n: u32, seed: u64) -> Option<QuotientPigeonInstance> {
    match gen_one(kind, n, None, seed).ok()? {
        ProblemInstance::QuotientPigeon(q) => Some(q),
        _ => unreachable!(),
    }
}

fn qp_kind() -> impl Strategy<Value = GenKind> {
    prop_oneof![
        Just(GenKind::RandomTable),
        Just(GenKind::KernelEquivalence),
        Just(GenKind::EqualityEquivalence),
        Just(GenKind::ClcReadyKernel),
        Just(GenKind::ClcReadyRandom),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unfilled_is_a_subset_and_loses_at_most_one_per_point(n in 1u32..=4, mask: u64, seed: u64, k in 0usize..6) {
        let mut r = rng(seed);
        let f = random_self_map(&mut r, n);
        let x = subset(n, mask);
        let points: Vec<Element> = (0..k).map(|_| Element::from_code(r.random_range(0..1 << n))).collect();
        let u = x.unfilled(&points, &f).unwrap();
        prop_assert!(u.is_subset(&x));
        prop_assert!(u.len() + points.len() >= x.len());
        for p in &points {
            prop_assert!(!u.contains(f.apply(*p)));
        }
    }

    #[test]
    fn k_smallest_is_a_monotone_prefix(n in 1u32..=5, mask: u64) {
        let x = subset(n, mask);
        let mut prev = FiniteSet::empty(n);
        for k in 0..=x.len() {
            let s = x.k_smallest(k).unwrap();
            prop_assert_eq!(s.len(), k);
            prop_assert!(prev.is_subset(&s) && s.is_subset(&x));
            if let (Some(top), Some(rest)) = (s.iter().next_back(), x.difference(&s).min()) {
                prop_assert!(top < rest);
            }
            prev = s;
        }
        prop_assert!(x.k_smallest(x.len() + 1).is_err());
    }

    #[test]
    fn iterate_from_composes(n in 1u32..=5, seed: u64, a in 0usize..40, b in 0usize..40) {
        let mut r = rng(seed);
        let f = random_self_map(&mut r, n);
        let x = Element::from_code(r.random_range(0..1 << n));
        let mid = iterate_from(&f, x, a).unwrap();
        prop_assert_eq!(iterate_from(&f, x, a + b).unwrap(), iterate_from(&f, mid, b).unwrap());
    }

    #[test]
    fn table_and_circuit_backends_agree(n in 1u32..=4, seed: u64) {
        let f = random_self_map(&mut rng(seed), n);
        let both = f.clone().with_synthesized_circuit().unwrap();
        both.check_coherence().unwrap();
        for x in domain(n) {
            prop_assert_eq!(f.apply(x), both.apply(x));
        }
    }

    #[test]
    fn constrained_verifier_is_unconstrained_plus_head(seed in 0u64..500, picks in prop::collection::vec(1u32..=4, 1..5), a0 in 1u32..=4) {
        let ProblemInstance::LongChoice(base) = gen_one(GenKind::LongChoiceRandom, 2, None, seed).unwrap() else { unreachable!() };
        let a0 = Element::new(a0).unwrap();
        let clc = ProblemInstance::ConstrainedLongChoice(ConstrainedLongChoiceInstance::new(base.clone(), a0).unwrap());
        let lc = ProblemInstance::LongChoice(base);
        let sequence: Vec<Element> = picks.into_iter().map(|v| Element::new(v).unwrap()).collect();
        let head = sequence.first() == Some(&a0);
        let sol = SolutionCertificate::LongChoiceSequence { sequence };
        let plain = verify_solution(&lc, &sol).unwrap().is_accept();
        prop_assert_eq!(verify_solution(&clc, &sol).unwrap().is_accept(), plain && head);
    }

    #[test]
    fn walk_stops_at_the_first_collision(kind in qp_kind(), n in 2u32..=4, seed: u64, steps in 1usize..20) {
        let Some(inst) = try_qp(kind, n, seed) else { return Ok(()) };
        let t = walk_from(&inst, inst.v_star(), steps);
        let u = &t.sequence;
        let last = t.collision.map_or(u.len(), |(_, i)| i);
        for i in 1..last {
            for j in 0..i {
                prop_assert!(!inst.related(u[i], u[j]));
            }
        }
        if let Some((j, i)) = t.collision {
            prop_assert!(j < i && i == u.len() - 1 && inst.related(u[i], u[j]));
        }
    }

    #[test]
    fn walk_certificates_are_enumerated(kind in qp_kind(), n in 1u32..=3, seed: u64) {
        let Some(inst) = try_qp(kind, n, seed) else { return Ok(()) };
        let cert = solve_qp_walk(&inst).unwrap().certificate;
        let all = enumerate_solutions(&ProblemInstance::QuotientPigeon(inst), usize::MAX).unwrap();
        prop_assert!(all.contains(&cert));
    }

    #[test]
    fn localopt_walk_certificates_are_enumerated(n in 1u32..=4, seed: u64, start in 0u32..16) {
        let kind = if seed % 2 == 0 { GenKind::LocaloptDag } else { GenKind::LocaloptRandom };
        let ProblemInstance::LocalOpt(inst) = gen_one(kind, n, None, seed).unwrap() else { unreachable!() };
        let cert = solve_localopt_walk(&inst, Element::from_code(start % (1 << n))).unwrap();
        let all = enumerate_solutions(&ProblemInstance::LocalOpt(inst), usize::MAX).unwrap();
        prop_assert!(all.contains(&cert));
    }

    #[test]
    fn pipeline_pullback_equals_stagewise(n in 1u32..=3, seed: u64) {
        let ProblemInstance::LocalOpt(inst) = gen_one(GenKind::LocaloptRandom, n, Some(2), seed).unwrap() else { unreachable!() };
        let whole = localopt_to_qp(&inst).unwrap();
        let norm = localopt_normalize(&inst).unwrap();
        let ProblemInstance::LocalOpt(mid) = &norm.reduced else { unreachable!() };
        let last = reduce_localopt_to_qp(mid).unwrap();
        prop_assert_eq!(&whole.reduced, &last.reduced);
        for sol in enumerate_solutions(&whole.reduced, 64).unwrap() {
            let direct = apply_pullback(&whole, &sol).unwrap();
            let staged = apply_pullback(&norm, &apply_pullback(&last, &sol).unwrap()).unwrap();
            prop_assert_eq!(direct, staged);
        }
    }

    #[test]
    fn localopt_to_qp_roundtrips(n in 1u32..=3, seed: u64) {
        let inst = gen_one(GenKind::LocaloptDag, n, Some(2), seed).unwrap();
        let r = roundtrip_test("localopt_to_qp", &inst, &RoundTripOptions::default()).unwrap();
        prop_assert_eq!(r.failures, 0);
        prop_assert!(r.solutions > 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn beta_is_prefix_closed(kind in prop_oneof![Just(GenKind::ClcReadyKernel), Just(GenKind::ClcReadyRandom)], seed: u64, perm_seed: u64) {
        let inst = qp(kind, 3, seed);
        let v = inst.v_star();
        let mut rest: Vec<Element> = domain(3).filter(|&x| x != v).collect();
        let mut r = rng(perm_seed);
        for i in (1..rest.len()).rev() {
            rest.swap(i, r.random_range(0..=i));
        }
        let a: Vec<Element> = std::iter::once(v).chain(rest.into_iter().take(3)).collect();
        if let Ok(full) = beta_run(&a, &inst) {
            for k in 1..a.len() {
                let part = beta_run(&a[..k], &inst).unwrap();
                prop_assert_eq!(&part.outputs[..], &full.outputs[..k]);
            }
            let sets = build_sets(&full.outputs, &inst).unwrap();
            prop_assert!(sets.is_monotone());
            let probe = lc::probe_key_properties(&full, &sets, &inst);
            prop_assert!(probe.sub_procedure.holds);
        }
    }

    #[test]
    fn game_conserves_stones_and_replays(n in 2u32..=5, choices in prop::collection::vec(any::<u64>(), 0..24)) {
        let mut s = new_game(n, Roles::default()).unwrap();
        for c in choices {
            s = match s.phase {
                Phase::Finished => break,
                Phase::AwaitingPick => {
                    let alive = s.alive.to_vec();
                    if alive.is_empty() { break; }
                    apply_pick(&s, alive[(c as usize) % alive.len()]).unwrap()
                }
                Phase::AwaitingPartition => apply_partition(&s, &subset(n, c).difference(&s.discarded).difference(&FiniteSet::from_elements(n, s.picks.iter().copied()).unwrap())).unwrap(),
            };
            let picked = FiniteSet::from_elements(n, s.picks.iter().copied()).unwrap();
            prop_assert_eq!(picked.len(), s.picks.len());
            prop_assert_eq!(s.alive.len() + s.discarded.len() + picked.len(), domain_size(n));
            prop_assert!(picked.difference(&s.alive).len() == picked.len());
            prop_assert!(s.discarded.difference(&s.alive).len() == s.discarded.len());
            if let Some((g0, g1)) = &s.pending_partition {
                prop_assert_eq!(g0.len() + g1.len(), s.alive.len());
            }
        }
        let again = game::replay(n, s.roles, &s.transcript).unwrap();
        prop_assert_eq!(&again, &s);
        let json = serde_json::to_string(&s).unwrap();
        prop_assert_eq!(serde_json::from_str::<game::GameState>(&json).unwrap(), s);
    }

    #[test]
    fn timings_survive_json(ms in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let t = tfnp_core::harness::Timing { elapsed_ms: ms };
        let back: tfnp_core::harness::Timing = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn instances_and_certificates_roundtrip_through_json(kind_idx in 0usize..10, n in 1u32..=3, seed: u64) {
        let kind = GenKind::ALL[kind_idx];
        let Ok(inst) = gen_one(kind, n, None, seed) else { return Ok(()) };
        let json = serde_json::to_string(&inst).unwrap();
        let back: ProblemInstance = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(&back, &inst);
        for sol in enumerate_solutions(&inst, 16).unwrap_or_default() {
            let j = serde_json::to_string(&sol).unwrap();
            prop_assert_eq!(serde_json::from_str::<SolutionCertificate>(&j).unwrap(), sol);
        }
    }
}

#[test]
fn reports_roundtrip_through_json() {
    let inst = gen_one(GenKind::PigeonRandom, 2, None, 4).unwrap();
    let r = roundtrip_test("pigeon_to_qp", &inst, &RoundTripOptions::default()).unwrap();
    let back: tfnp_core::harness::RoundTripReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back, r);

    let q = qp(GenKind::ClcReadyKernel, 3, 0);
    let a = lc::analyze_sequence(&q, &[q.v_star(), Element::from_code(0), Element::from_code(1), Element::from_code(2)]);
    if let Some(p) = &a.probe {
        let back: lc::ProbeReport = serde_json::from_str(&serde_json::to_string(p).unwrap()).unwrap();
        assert_eq!(&back, p);
    }

    let cfg = lc::hunt::HuntConfig::new(GenKind::ClcReadyKernel, vec![3], (0..40).collect());
    let report = lc::hunt::hunt_counterexamples(&cfg).unwrap();
    assert!(!report.records.is_empty());
    for rec in &report.records {
        let back: lc::hunt::HuntRecord = serde_json::from_str(&serde_json::to_string(rec).unwrap()).unwrap();
        assert_eq!(&back, rec);
    }
}

#[test]
fn generated_localopt_instances_have_solutions() {
    for seed in 0..50 {
        for kind in [GenKind::LocaloptDag, GenKind::LocaloptRandom] {
            let inst = gen_one(kind, 3, None, seed).unwrap();
            assert!(!enumerate_solutions(&inst, 1).unwrap().is_empty());
        }
    }
}
