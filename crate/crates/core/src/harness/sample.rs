use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::Rng;

use super::HarnessError;
use crate::gen::random_element;
use crate::model::{domain, Element};
use crate::oracles::{predicate_bits, sample_feasible, solve_localopt_walk, solve_qp_walk};
use crate::problems::{verify_solution, ProblemInstance, SolutionCertificate};

const ATTEMPTS_PER_SOLUTION: usize = 200;

/// Up to `count` distinct verified solutions drawn with `rng`.
pub fn sample_solutions(
    inst: &ProblemInstance,
    count: usize,
    rng: &mut impl Rng,
) -> Result<Vec<SolutionCertificate>, HarnessError> {
    let n = inst.n();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut keep = |s: SolutionCertificate, out: &mut Vec<SolutionCertificate>| {
        if out.len() < count && seen.insert(serde_json::to_string(&s).expect("certificates serialize")) {
            out.push(s);
        }
    };
    match inst {
        ProblemInstance::LocalOpt(l) => {
            for _ in 0..count * 4 {
                keep(solve_localopt_walk(l, random_element(rng, n))?, &mut out);
            }
        }
        ProblemInstance::Pigeon(p) => {
            let mut by_image: BTreeMap<Element, Vec<Element>> = BTreeMap::new();
            for x in domain(n) {
                by_image.entry(p.c().apply(x)).or_default().push(x);
            }
            let hits = by_image.get(&p.v_star()).cloned().unwrap_or_default();
            let groups: Vec<Vec<Element>> = by_image.into_values().filter(|g| g.len() > 1).collect();
            for _ in 0..count * 4 {
                if !hits.is_empty() && (groups.is_empty() || rng.random_bool(0.5)) {
                    keep(SolutionCertificate::PigeonHit { x: *hits.choose(rng).expect("non-empty") }, &mut out);
                } else if let Some(g) = groups.choose(rng) {
                    let pair: Vec<&Element> = g.choose_multiple(rng, 2).collect();
                    keep(SolutionCertificate::PigeonCollision { x: *pair[0], y: *pair[1] }, &mut out);
                }
            }
        }
        ProblemInstance::QuotientPigeon(q) => {
            keep(solve_qp_walk(q)?.certificate, &mut out);
            for _ in 0..count * ATTEMPTS_PER_SOLUTION {
                if out.len() >= count {
                    break;
                }
                let (x, y, z) = (random_element(rng, n), random_element(rng, n), random_element(rng, n));
                use SolutionCertificate::*;
                let candidates = [
                    QpType1 { x, y },
                    QpType2 { x },
                    QpType3 { x, y },
                    QpType4 { x },
                    QpType5 { x, y },
                    QpType6 { x, y, z },
                ];
                for c in candidates {
                    if verify_solution(inst, &c)?.is_accept() {
                        keep(c, &mut out);
                    }
                }
            }
        }
        ProblemInstance::LongChoice(_) | ProblemInstance::ConstrainedLongChoice(_) => {
            let (lc, head) = match inst {
                ProblemInstance::LongChoice(l) => (l, None),
                ProblemInstance::ConstrainedLongChoice(c) => (c.base(), Some(c.a0())),
                _ => unreachable!(),
            };
            for _ in 0..count * 4 {
                let sequence = sample_feasible(n, head, |i, p| predicate_bits(lc, i, p), rng);
                keep(SolutionCertificate::LongChoiceSequence { sequence }, &mut out);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{gen_one, GenKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_are_verified_and_distinct() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for kind in [
            GenKind::LocaloptRandom,
            GenKind::PigeonRandom,
            GenKind::RandomTable,
            GenKind::KernelEquivalence,
            GenKind::LongChoiceRandom,
        ] {
            let inst = gen_one(kind, 4, None, 7).unwrap();
            let s = sample_solutions(&inst, 10, &mut rng).unwrap();
            assert!(!s.is_empty(), "{kind}");
            assert!(s.len() <= 10);
            for c in &s {
                assert!(verify_solution(&inst, c).unwrap().is_accept(), "{kind}: {c:?}");
            }
            let mut d = s.clone();
            d.dedup();
            assert_eq!(d.len(), s.len());
        }
    }
}
