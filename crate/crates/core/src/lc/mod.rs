//! The attempted Quotient Pigeon → Constrained Long Choice reduction, with probes into why it can fail.

mod beta;
mod check;
pub mod hunt;
mod probe;
mod sets;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

pub use beta::{beta_run, beta_step, has_linked_pair, linked, BetaBranch, BetaError, BetaTrace};
pub use check::{check_solutions, check_solutions_as_printed};
pub use probe::{probe_key_properties, ProbeReport, PropertyCheck};
pub use sets::{build_sets, expected_unfilled, next_level, LevelRule, SetLevel, SetSystem};

use crate::model::{Element, EvaluableMap, ModelError, Signature};
use crate::oracles::walk_prefix;
use crate::problems::{
    ConstrainedLongChoiceInstance, LongChoiceInstance, ProblemInstance, QuotientPigeonInstance,
    SolutionCertificate,
};
use crate::reductions::{recover_from_prefix_collision, PullbackError, ReductionArtifact, ReductionError, Provenance};

pub const QP_TO_CLC: &str = "qp_to_clc";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PredicateError {
    #[error("P_{k} takes a prefix of length {expected}, got {found}")]
    PrefixLength { k: usize, expected: usize, found: usize },
    #[error(transparent)]
    Beta(#[from] BetaError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// β outputs and the top set level for a fixed prefix `a_0 … a_k`; answers `P_k(a_0 … a_k, x)` for any `x`.
#[derive(Clone, Debug)]
pub struct PredicateState {
    prefix: Vec<Element>,
    outputs: Vec<Element>,
    level: SetLevel,
}

impl PredicateState {
    pub fn new(prefix: &[Element], inst: &QuotientPigeonInstance) -> Result<Self, PredicateError> {
        let trace = beta::beta_run_unchecked(prefix, inst)?;
        let sets = build_sets(&trace.outputs, inst)?;
        Ok(PredicateState {
            prefix: prefix.to_vec(),
            outputs: trace.outputs,
            level: sets.levels.into_iter().last().expect("one level per output"),
        })
    }

    /// `None` when `x` repeats a prefix element or the ℓ search runs out.
    pub fn bit(&self, x: Element, inst: &QuotientPigeonInstance) -> Option<bool> {
        if self.prefix.contains(&x) {
            return None;
        }
        let (b, _) = beta_step(inst, &self.outputs, self.prefix[0], x).ok()?;
        Some(self.level.f.contains(inst.image(b)))
    }
}

/// `P_k(a_0 … a_k, x) = [C(b_{k+1}) ∈ F_k]` with `b = β(a_0 … a_k, x)`.
pub fn predicate_eval(
    k: usize,
    prefix: &[Element],
    x: Element,
    inst: &QuotientPigeonInstance,
) -> Result<bool, PredicateError> {
    if prefix.len() != k + 1 {
        return Err(PredicateError::PrefixLength {
            k,
            expected: k + 1,
            found: prefix.len(),
        });
    }
    let mut a = prefix.to_vec();
    a.push(x);
    let trace = beta_run(&a, inst)?;
    let sets = build_sets(&trace.outputs[..=k], inst)?;
    Ok(sets.levels[k].f.contains(inst.image(trace.outputs[k + 1])))
}

/// `P_i(prefix, x)` for every `x`, for the feasible-sequence oracles.
pub fn predicate_bits(inst: &QuotientPigeonInstance, prefix: &[Element]) -> Vec<bool> {
    let all = crate::model::domain(inst.n());
    match PredicateState::new(prefix, inst) {
        Ok(s) => all.map(|x| s.bit(x, inst).unwrap_or(false)).collect(),
        Err(_) => all.map(|_| false).collect(),
    }
}

fn predicate_map(inst: Arc<QuotientPigeonInstance>, k: usize) -> Result<EvaluableMap, ModelError> {
    let sig = Signature::predicate(inst.n(), k + 2);
    EvaluableMap::derived(sig, format!("{QP_TO_CLC}_p{k}"), move |codes| {
        let args: Vec<Element> = codes.iter().map(|&c| Element::from_code(c)).collect();
        let (x, prefix) = args.split_last().expect("arity ≥ 2");
        if (1..args.len()).any(|j| args[..j].contains(&args[j])) {
            return 0;
        }
        PredicateState::new(prefix, &inst)
            .ok()
            .and_then(|s| s.bit(*x, &inst))
            .unwrap_or(false) as u32
    })
}

/// The instance is de-fixed (`C(x)` never linked to `x`) and its 2n-step walk from `v*` has no linked pair.
pub fn check_preconditions(inst: &QuotientPigeonInstance) -> Result<(), ReductionError> {
    crate::model::check_exhaustive(inst.n())?;
    if let Some(x) = crate::model::domain(inst.n()).find(|&x| linked(inst, x, inst.image(x))) {
        return Err(ReductionError::Precondition(format!(
            "not de-fixed: C({x}) = {} is linked to {x}",
            inst.image(x)
        )));
    }
    let walk = walk_prefix(inst);
    let u = &walk.sequence;
    for i in 0..u.len() {
        if let Some(j) = (0..i).find(|&j| linked(inst, u[i], u[j])) {
            return Err(ReductionError::Precondition(format!(
                "walk from v* repeats a class: u_{j} = {} and u_{i} = {}",
                u[j], u[i]
            )));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureDiagnostic {
    pub reason: String,
    pub sequence: Vec<Element>,
    pub beta: Option<BetaTrace>,
    pub sets: Option<SetSystem>,
    pub probe: Option<ProbeReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum PullbackOutcome {
    Solved {
        certificate: SolutionCertificate,
        /// `check_solutions` or `prefix_collision`.
        via: String,
    },
    Failure(Box<FailureDiagnostic>),
}

/// Everything the hunter records about one feasible sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceAnalysis {
    pub outcome: PullbackOutcome,
    pub beta: Option<BetaTrace>,
    pub sets: Option<SetSystem>,
    pub probe: Option<ProbeReport>,
}

pub fn analyze_sequence(inst: &QuotientPigeonInstance, seq: &[Element]) -> SequenceAnalysis {
    let failure = |reason: String, beta: Option<BetaTrace>, sets: Option<SetSystem>, probe: Option<ProbeReport>| {
        PullbackOutcome::Failure(Box::new(FailureDiagnostic {
            reason,
            sequence: seq.to_vec(),
            beta,
            sets,
            probe,
        }))
    };
    let trace = match beta_run(seq, inst) {
        Ok(t) => t,
        Err(BetaError::EllExhausted { partial, walk, .. }) => {
            let outcome = match recover_from_prefix_collision(inst, &walk) {
                Ok(certificate) => PullbackOutcome::Solved {
                    certificate,
                    via: "prefix_collision".into(),
                },
                Err(e) => failure(format!("ℓ search exhausted and the walk gives nothing: {e}"), Some((*partial).clone()), None, None),
            };
            return SequenceAnalysis {
                outcome,
                beta: Some(*partial),
                sets: None,
                probe: None,
            };
        }
        Err(e) => {
            return SequenceAnalysis {
                outcome: failure(e.to_string(), None, None, None),
                beta: None,
                sets: None,
                probe: None,
            }
        }
    };
    let sets = match build_sets(&trace.outputs, inst) {
        Ok(s) => s,
        Err(e) => {
            return SequenceAnalysis {
                outcome: failure(e.to_string(), Some(trace.clone()), None, None),
                beta: Some(trace),
                sets: None,
                probe: None,
            }
        }
    };
    let probe = probe_key_properties(&trace, &sets, inst);
    let outcome = match check_solutions(&trace.outputs, inst) {
        Some(certificate) => PullbackOutcome::Solved {
            certificate,
            via: "check_solutions".into(),
        },
        None => failure(
            "CheckSolutions finds no solution among b_0 … b_n".into(),
            Some(trace.clone()),
            Some(sets.clone()),
            Some(probe.clone()),
        ),
    };
    SequenceAnalysis {
        outcome,
        beta: Some(trace),
        sets: Some(sets),
        probe: Some(probe),
    }
}

pub fn pullback_detailed(inst: &QuotientPigeonInstance, seq: &[Element]) -> PullbackOutcome {
    analyze_sequence(inst, seq).outcome
}

/// The reduced instance `⟨P_0, …, P_{n−2}, v*⟩`. Its pull-back returns `PullbackError::Failure` where the construction breaks.
pub fn reduce_qp_to_clc(inst: &QuotientPigeonInstance) -> Result<ReductionArtifact, ReductionError> {
    let n = inst.n();
    if n < 2 {
        return Err(ReductionError::Precondition("Long Choice needs n ≥ 2".into()));
    }
    check_preconditions(inst)?;
    let shared = Arc::new(inst.clone());
    let predicates = (0..n as usize - 1)
        .map(|k| predicate_map(shared.clone(), k))
        .collect::<Result<Vec<_>, _>>()?;
    let base = LongChoiceInstance::new(n, predicates)?;
    let reduced = ConstrainedLongChoiceInstance::new(base, inst.v_star())?;
    Ok(ReductionArtifact::new(
        ProblemInstance::QuotientPigeon(inst.clone()),
        reduced.into(),
        Provenance::new(QP_TO_CLC),
        move |sol| {
            let SolutionCertificate::LongChoiceSequence { sequence } = sol else {
                return Err(PullbackError::Unreachable {
                    reduction: QP_TO_CLC.into(),
                    certificate: sol.clone(),
                });
            };
            match pullback_detailed(&shared, sequence) {
                PullbackOutcome::Solved { certificate, .. } => Ok(certificate),
                PullbackOutcome::Failure(d) => Err(PullbackError::Failure {
                    reduction: QP_TO_CLC.into(),
                    reason: d.reason.clone(),
                    diagnostic: Box::new(serde_json::to_value(&*d).unwrap_or_else(|e| json!({ "error": e.to_string() }))),
                }),
            }
        },
    ))
}
