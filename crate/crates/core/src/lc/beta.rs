//! The sequence-rewriting sub-procedure β.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::check::check_solutions;
use crate::model::Element;
use crate::oracles::{walk_from, WalkTrace};
use crate::problems::QuotientPigeonInstance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "branch", rename_all = "snake_case")]
pub enum BetaBranch {
    /// `b_0 = a_0`
    Base,
    /// The earlier outputs already contain a related pair.
    DuplicateClass,
    /// `a_{k+1}` is unrelated to every earlier output.
    Fresh,
    /// CheckSolutions accepted `(b_0, …, b_k, a_{k+1})`.
    CheckTrue,
    /// `b_{k+1} = C^ℓ(a_0)`.
    EllSubstitute { ell: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BetaTrace {
    pub inputs: Vec<Element>,
    pub outputs: Vec<Element>,
    pub branches: Vec<BetaBranch>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum BetaError {
    #[error("β needs a non-empty input")]
    Empty,
    #[error("β inputs must be pairwise distinct; position {0} repeats an earlier element")]
    Repeated(usize),
    #[error("β takes at most n + 1 inputs, got {0}")]
    TooLong(usize),
    #[error("no ℓ in [1, 2n] gives C^ℓ(a_0) unrelated to every output at step {step}")]
    EllExhausted {
        step: usize,
        partial: Box<BetaTrace>,
        walk: Box<WalkTrace>,
    },
}

/// `x` and `y` related in either direction.
pub fn linked(inst: &QuotientPigeonInstance, x: Element, y: Element) -> bool {
    inst.related(x, y) || inst.related(y, x)
}

/// Whether some pair of positions `i < j` is linked.
pub fn has_linked_pair(inst: &QuotientPigeonInstance, seq: &[Element]) -> bool {
    (0..seq.len()).any(|j| (0..j).any(|i| linked(inst, seq[i], seq[j])))
}

/// One step: `b_{k+1}` from `b_0 … b_k` and `a_{k+1}`. On failure returns the 2n-step walk from `a_0`.
pub fn beta_step(
    inst: &QuotientPigeonInstance,
    outputs: &[Element],
    a0: Element,
    next: Element,
) -> Result<(Element, BetaBranch), WalkTrace> {
    if has_linked_pair(inst, outputs) {
        return Ok((next, BetaBranch::DuplicateClass));
    }
    if outputs.iter().all(|&b| !linked(inst, next, b)) {
        return Ok((next, BetaBranch::Fresh));
    }
    let mut probe = outputs.to_vec();
    probe.push(next);
    if check_solutions(&probe, inst).is_some() {
        return Ok((next, BetaBranch::CheckTrue));
    }
    let mut u = a0;
    for ell in 1..=2 * inst.n() as usize {
        u = inst.image(u);
        if outputs.iter().all(|&b| !linked(inst, u, b)) {
            return Ok((u, BetaBranch::EllSubstitute { ell }));
        }
    }
    Err(walk_from(inst, a0, 2 * inst.n() as usize))
}

/// β applied to `a_0 … a_{k+1}`; the output at every position depends only on the input prefix.
pub fn beta_run(a: &[Element], inst: &QuotientPigeonInstance) -> Result<BetaTrace, BetaError> {
    if a.is_empty() {
        return Err(BetaError::Empty);
    }
    if a.len() > inst.n() as usize + 1 {
        return Err(BetaError::TooLong(a.len()));
    }
    if let Some(j) = (1..a.len()).find(|&j| a[..j].contains(&a[j])) {
        return Err(BetaError::Repeated(j));
    }
    beta_run_unchecked(a, inst)
}

/// β without the input-shape checks, for total predicate evaluation.
pub(crate) fn beta_run_unchecked(a: &[Element], inst: &QuotientPigeonInstance) -> Result<BetaTrace, BetaError> {
    let mut trace = BetaTrace {
        inputs: a.to_vec(),
        outputs: vec![a[0]],
        branches: vec![BetaBranch::Base],
    };
    for (step, &next) in a.iter().enumerate().skip(1) {
        match beta_step(inst, &trace.outputs, a[0], next) {
            Ok((b, branch)) => {
                trace.outputs.push(b);
                trace.branches.push(branch);
            }
            Err(walk) => {
                trace.inputs.truncate(step);
                return Err(BetaError::EllExhausted {
                    step,
                    partial: Box::new(trace),
                    walk: Box::new(walk),
                });
            }
        }
    }
    Ok(trace)
}
