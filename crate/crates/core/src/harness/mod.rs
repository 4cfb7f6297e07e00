//! Round-trip testing of reductions, instance digests and the criteria suite.

pub mod criteria;
mod sample;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use sample::sample_solutions;

use crate::lc::{self, QP_TO_CLC};
use crate::oracles::{enumerate_solutions, OracleError};
use crate::problems::{ProblemError, ProblemInstance, SolutionCertificate};
use crate::reductions::{apply_pullback, reduce_sound, ReductionArtifact, ReductionError, SOUND_REDUCTIONS};

/// Every reduction id, sound ones first.
pub const ALL_REDUCTIONS: [&str; 5] = [
    SOUND_REDUCTIONS[0],
    SOUND_REDUCTIONS[1],
    SOUND_REDUCTIONS[2],
    SOUND_REDUCTIONS[3],
    QP_TO_CLC,
];

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Config(String),
}

/// SHA-256 of the compact JSON serialization, in hex.
pub fn digest<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Either one instance or an array of them.
pub fn parse_instances(text: &str) -> Result<Vec<ProblemInstance>, serde_json::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        Many(Vec<ProblemInstance>),
        One(Box<ProblemInstance>),
    }
    Ok(match serde_json::from_str(text)? {
        OneOrMany::Many(v) => v,
        OneOrMany::One(i) => vec![*i],
    })
}

/// Any reduction by id, including the flawed `qp_to_clc`.
pub fn reduce_any(id: &str, inst: &ProblemInstance) -> Result<ReductionArtifact, ReductionError> {
    match (id, inst) {
        (QP_TO_CLC, ProblemInstance::QuotientPigeon(q)) => lc::reduce_qp_to_clc(q),
        (QP_TO_CLC, other) => Err(ReductionError::WrongKind {
            reduction: id.into(),
            found: other.kind().to_string(),
        }),
        _ => reduce_sound(id, inst),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionMode {
    Exhaustive,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTripOptions {
    /// Enumerate every reduced solution when the original has `n` at most this.
    pub exhaustive_max_n: u32,
    pub sample: usize,
    pub seed: u64,
    /// Cap on enumerated solutions.
    pub limit: usize,
}

impl Default for RoundTripOptions {
    fn default() -> Self {
        RoundTripOptions {
            exhaustive_max_n: 4,
            sample: 100,
            seed: 0,
            limit: 1 << 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PullbackFailure {
    pub solution: SolutionCertificate,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTripReport {
    pub reduction: String,
    pub instance_digest: String,
    pub original_n: u32,
    pub reduced_n: u32,
    pub mode: SolutionMode,
    pub solutions: usize,
    pub successes: usize,
    pub failures: usize,
    /// The first few failures, for inspection.
    pub failure_examples: Vec<PullbackFailure>,
    pub timing: Timing,
}

const FAILURE_EXAMPLES: usize = 5;

/// Reduced-instance solutions: all of them when small enough, else a seeded sample.
pub fn reduced_solutions(
    art: &ReductionArtifact,
    opts: &RoundTripOptions,
) -> Result<(SolutionMode, Vec<SolutionCertificate>), HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let exhaustive = art.original.n() <= opts.exhaustive_max_n;
    if art.id() == QP_TO_CLC {
        let ProblemInstance::QuotientPigeon(q) = &art.original else {
            unreachable!("qp_to_clc starts from Quotient Pigeon");
        };
        let cfg = lc::hunt::HuntConfig {
            sample: opts.sample,
            enumerate_max_n: opts.exhaustive_max_n,
            ..lc::hunt::HuntConfig::new(crate::gen::GenKind::ClcReadyKernel, vec![], vec![])
        };
        let sols = lc::hunt::feasible_sequences(q, &cfg, opts.seed)
            .into_iter()
            .map(|sequence| SolutionCertificate::LongChoiceSequence { sequence })
            .collect();
        let mode = if exhaustive { SolutionMode::Exhaustive } else { SolutionMode::Sampled };
        return Ok((mode, sols));
    }
    if exhaustive {
        match enumerate_solutions(&art.reduced, opts.limit) {
            Ok(s) => return Ok((SolutionMode::Exhaustive, s)),
            Err(OracleError::SizeGuard { .. }) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok((SolutionMode::Sampled, sample_solutions(&art.reduced, opts.sample, &mut rng)?))
}

/// Reduces `inst`, pulls every examined reduced solution back and verifies it on `inst`.
pub fn roundtrip_test(
    id: &str,
    inst: &ProblemInstance,
    opts: &RoundTripOptions,
) -> Result<RoundTripReport, HarnessError> {
    let start = Instant::now();
    let art = reduce_any(id, inst)?;
    let (mode, sols) = reduced_solutions(&art, opts)?;
    let mut report = RoundTripReport {
        reduction: id.to_string(),
        instance_digest: digest(inst)?,
        original_n: inst.n(),
        reduced_n: art.reduced.n(),
        mode,
        solutions: sols.len(),
        successes: 0,
        failures: 0,
        failure_examples: Vec::new(),
        timing: Timing { elapsed_ms: 0.0 },
    };
    for sol in sols {
        match apply_pullback(&art, &sol) {
            Ok(_) => report.successes += 1,
            Err(e) => {
                report.failures += 1;
                if report.failure_examples.len() < FAILURE_EXAMPLES {
                    report.failure_examples.push(PullbackFailure {
                        solution: sol,
                        error: e.to_string(),
                    });
                }
            }
        }
    }
    report.timing.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{gen_one, GenKind};

    #[test]
    fn digest_is_stable_and_content_sensitive() {
        let a = gen_one(GenKind::EqualityEquivalence, 2, None, 0).unwrap();
        let b = gen_one(GenKind::EqualityEquivalence, 2, None, 0).unwrap();
        let c = gen_one(GenKind::EqualityEquivalence, 2, None, 1).unwrap();
        assert_eq!(digest(&a).unwrap(), digest(&b).unwrap());
        assert_ne!(digest(&a).unwrap(), digest(&c).unwrap());
        assert_eq!(digest(&a).unwrap().len(), 64);
    }

    #[test]
    fn parse_one_or_many() {
        let a = gen_one(GenKind::PigeonRandom, 2, None, 3).unwrap();
        let one = serde_json::to_string(&a).unwrap();
        let many = serde_json::to_string(&vec![a.clone(), a.clone()]).unwrap();
        assert_eq!(parse_instances(&one).unwrap(), vec![a.clone()]);
        assert_eq!(parse_instances(&many).unwrap().len(), 2);
    }

    #[test]
    fn roundtrips() {
        let p = gen_one(GenKind::PigeonRandom, 3, None, 1).unwrap();
        let r = roundtrip_test("pigeon_to_qp", &p, &RoundTripOptions::default()).unwrap();
        assert_eq!((r.mode, r.failures), (SolutionMode::Exhaustive, 0));
        assert_eq!(r.successes + r.failures, r.solutions);
        assert!(r.solutions > 0);

        let l = gen_one(GenKind::LocaloptRandom, 3, Some(2), 2).unwrap();
        let r = roundtrip_test("localopt_to_qp", &l, &RoundTripOptions::default()).unwrap();
        assert_eq!(r.failures, 0);
        assert!(r.solutions > 0);

        let q = gen_one(GenKind::ClcReadyKernel, 3, None, 3).unwrap();
        let r = roundtrip_test(QP_TO_CLC, &q, &RoundTripOptions::default()).unwrap();
        assert_eq!(r.successes + r.failures, r.solutions);

        assert!(matches!(
            roundtrip_test("pigeon_to_qp", &l, &RoundTripOptions::default()),
            Err(HarnessError::Reduction(ReductionError::WrongKind { .. }))
        ));
    }

    #[test]
    fn sampling_kicks_in_above_the_enumeration_size() {
        let l = gen_one(GenKind::LocaloptDag, 5, Some(3), 4).unwrap();
        let opts = RoundTripOptions {
            sample: 20,
            ..Default::default()
        };
        let r = roundtrip_test("localopt_to_qp", &l, &opts).unwrap();
        assert_eq!(r.mode, SolutionMode::Sampled);
        assert_eq!(r.failures, 0);
        assert!(r.solutions > 0);
    }
}
