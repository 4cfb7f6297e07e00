//! Brute-force and constructive solvers. These are the ground truth every round trip is checked against.

use std::ops::ControlFlow;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{check_exhaustive, domain, domain_size, Element, EvaluableMap, ModelError};
use crate::problems::{
    ConstrainedLongChoiceInstance, LocalOptInstance, LongChoiceInstance, ProblemError,
    ProblemInstance, QuotientPigeonInstance, SolutionCertificate,
};

/// Largest `n` for pair and triple scans.
pub const MAX_SCAN_N: u32 = 6;
/// Largest `n` for Long Choice sequence enumeration.
pub const MAX_SEQUENCE_N: u32 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("{what} needs n <= {max}, got {n}")]
    SizeGuard { what: &'static str, n: u32, max: u32 },
    #[error("internal invariant failed: {0}")]
    Invariant(String),
}

fn guard(what: &'static str, n: u32, max: u32) -> Result<(), OracleError> {
    if n > max {
        return Err(OracleError::SizeGuard { what, n, max });
    }
    Ok(())
}

/// A binary relation on `[2^n]` as row and column bitsets.
#[derive(Clone, Debug)]
pub struct Relation {
    size: usize,
    words: usize,
    rows: Vec<u64>,
    cols: Vec<u64>,
}

impl Relation {
    pub fn from_map(e: &EvaluableMap, n: u32) -> Result<Self, OracleError> {
        check_exhaustive(n)?;
        e.expect_signature(crate::model::Signature::predicate(n, 2))?;
        let size = domain_size(n);
        let words = size.div_ceil(64);
        let mut rows = vec![0u64; size * words];
        let mut cols = vec![0u64; size * words];
        for x in 0..size {
            for y in 0..size {
                if e.eval_codes(&[x as u32, y as u32]) == 1 {
                    rows[x * words + y / 64] |= 1 << (y % 64);
                    cols[y * words + x / 64] |= 1 << (x % 64);
                }
            }
        }
        Ok(Relation {
            size,
            words,
            rows,
            cols,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.rows[x * self.words + y / 64] >> (y % 64) & 1 == 1
    }

    fn row(&self, x: usize) -> &[u64] {
        &self.rows[x * self.words..(x + 1) * self.words]
    }

    fn col(&self, x: usize) -> &[u64] {
        &self.cols[x * self.words..(x + 1) * self.words]
    }
}

fn first_bit(words: impl Iterator<Item = u64>) -> Option<usize> {
    for (i, w) in words.enumerate() {
        if w != 0 {
            return Some(i * 64 + w.trailing_zeros() as usize);
        }
    }
    None
}

/// First violation of reflexivity, then symmetry, then transitivity, each in lexicographic order.
/// `None` iff `E` is an equivalence relation.
pub fn check_equivalence(e: &EvaluableMap, n: u32) -> Result<Option<SolutionCertificate>, OracleError> {
    let r = Relation::from_map(e, n)?;
    Ok(equivalence_violation(&r))
}

pub fn equivalence_violation(r: &Relation) -> Option<SolutionCertificate> {
    let el = |c: usize| Element::from_code(c as u32);
    if let Some(x) = (0..r.size).find(|&x| !r.get(x, x)) {
        return Some(SolutionCertificate::QpType4 { x: el(x) });
    }
    for x in 0..r.size {
        let diff = r.row(x).iter().zip(r.col(x)).map(|(a, b)| a ^ b);
        if let Some(y) = first_bit(diff) {
            return Some(SolutionCertificate::QpType5 { x: el(x), y: el(y) });
        }
    }
    // Reflexive and symmetric from here on, so x ∼ y with differing rows pins the violation.
    for x in 0..r.size {
        for y in 0..r.size {
            if y == x || !r.get(x, y) || r.row(x) == r.row(y) {
                continue;
            }
            let cand = r.row(y).iter().zip(r.row(x)).enumerate().map(|(w, (ry, rx))| {
                let mut m = ry & !rx;
                for skip in [x, y] {
                    if skip / 64 == w {
                        m &= !(1u64 << (skip % 64));
                    }
                }
                m
            });
            if let Some(z) = first_bit(cand) {
                return Some(SolutionCertificate::QpType6 {
                    x: el(x),
                    y: el(y),
                    z: el(z),
                });
            }
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkEnd {
    Collision,
    StepLimit,
}

/// `u_0 = v*`, `u_{k+1} = C(u_k)`, stopped at the first `u_i ∼ u_j` with `j < i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkTrace {
    pub sequence: Vec<Element>,
    /// `(j, i)` with `j < i` and `E(u_i, u_j) = 1`.
    pub collision: Option<(usize, usize)>,
    pub end: WalkEnd,
}

/// Walks from `start` for at most `steps` applications of `C`.
pub fn walk_from(inst: &QuotientPigeonInstance, start: Element, steps: usize) -> WalkTrace {
    let mut seq = vec![start];
    for i in 1..=steps {
        let u = inst.image(seq[i - 1]);
        seq.push(u);
        if let Some(j) = (0..i).find(|&j| inst.related(u, seq[j])) {
            return WalkTrace {
                sequence: seq,
                collision: Some((j, i)),
                end: WalkEnd::Collision,
            };
        }
    }
    WalkTrace {
        sequence: seq,
        collision: None,
        end: WalkEnd::StepLimit,
    }
}

/// The `2n`-step prefix `v*, C(v*), …, C^{2n}(v*)`.
pub fn walk_prefix(inst: &QuotientPigeonInstance) -> WalkTrace {
    walk_from(inst, inst.v_star(), 2 * inst.n() as usize)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpWalkResult {
    pub certificate: SolutionCertificate,
    /// Absent when `E` itself is not an equivalence and the violation is returned.
    pub trace: Option<WalkTrace>,
}

/// The totality argument for Quotient Pigeon as an algorithm.
pub fn solve_qp_walk(inst: &QuotientPigeonInstance) -> Result<QpWalkResult, OracleError> {
    if let Some(v) = check_equivalence(inst.e(), inst.n())? {
        return Ok(QpWalkResult {
            certificate: v,
            trace: None,
        });
    }
    let trace = walk_from(inst, inst.v_star(), domain_size(inst.n()));
    let (j, i) = trace
        .collision
        .ok_or_else(|| OracleError::Invariant("walk exceeded 2^n steps without a collision".into()))?;
    let u = &trace.sequence;
    let certificate = if j == 0 {
        SolutionCertificate::QpType2 { x: u[i - 1] }
    } else {
        SolutionCertificate::QpType1 {
            x: u[i - 1],
            y: u[j - 1],
        }
    };
    Ok(QpWalkResult {
        certificate,
        trace: Some(trace),
    })
}

/// Follows `f` from `start` while the potential strictly increases.
pub fn solve_localopt_walk(
    inst: &LocalOptInstance,
    start: Element,
) -> Result<SolutionCertificate, OracleError> {
    if !start.in_domain(inst.n()) {
        return Err(ModelError::OutOfDomain {
            value: start.value(),
            n: inst.n(),
        }
        .into());
    }
    let mut x = start;
    for _ in 0..=domain_size(inst.m()) {
        if inst.is_solution(x) {
            return Ok(SolutionCertificate::LocalOpt { x });
        }
        x = inst.step(x);
    }
    Err(OracleError::Invariant("potential increased more than 2^m times".into()))
}

fn long_choice_parts(inst: &ProblemInstance) -> Result<(&LongChoiceInstance, Option<Element>), OracleError> {
    match inst {
        ProblemInstance::LongChoice(i) => Ok((i, None)),
        ProblemInstance::ConstrainedLongChoice(i) => Ok((i.base(), Some(i.a0()))),
        other => Err(ProblemError::Invalid(format!("{} is not a long choice instance", other.kind())).into()),
    }
}

/// Min-first picks, keeping the majority side of each predicate (ties keep the 0-side).
pub fn solve_long_choice_majority(inst: &ProblemInstance) -> Result<SolutionCertificate, OracleError> {
    let (lc, head) = long_choice_parts(inst)?;
    let n = lc.n();
    let mut alive: Vec<Element> = domain(n).collect();
    let mut picks: Vec<Element> = Vec::with_capacity(n as usize + 1);
    for i in 0..=n as usize {
        let a = match (i, head) {
            (0, Some(a0)) => a0,
            _ => *alive
                .first()
                .ok_or_else(|| OracleError::Invariant(format!("no candidates left at pick {i}")))?,
        };
        alive.retain(|&x| x != a);
        picks.push(a);
        if i + 2 <= n as usize {
            let (ones, zeros): (Vec<Element>, Vec<Element>) =
                alive.iter().partition(|&&x| lc.eval_predicate(i, &picks, x));
            alive = if ones.len() > zeros.len() { ones } else { zeros };
        }
    }
    Ok(SolutionCertificate::LongChoiceSequence { sequence: picks })
}

/// Depth-first enumeration of feasible Long Choice sequences in ascending lexicographic order.
///
/// `bits(i, prefix)` returns `P_i(prefix, x)` for every code `x`; it is called once per prefix.
pub fn for_each_feasible(
    n: u32,
    head: Option<Element>,
    mut bits: impl FnMut(usize, &[Element]) -> Vec<bool>,
    mut visit: impl FnMut(&[Element]) -> ControlFlow<()>,
) {
    let size = domain_size(n);
    let mut seq: Vec<Element> = Vec::with_capacity(n as usize + 1);
    let mut used = vec![false; size];
    let mut caches: Vec<Vec<bool>> = Vec::new();
    let heads: Vec<Element> = match head {
        Some(h) => vec![h],
        None => domain(n).collect(),
    };
    for h in heads {
        seq.push(h);
        used[h.code() as usize] = true;
        let flow = dfs(n, &mut seq, &mut used, &mut caches, &mut bits, &mut visit);
        used[h.code() as usize] = false;
        seq.pop();
        if flow.is_break() {
            return;
        }
    }
}

fn dfs(
    n: u32,
    seq: &mut Vec<Element>,
    used: &mut [bool],
    caches: &mut Vec<Vec<bool>>,
    bits: &mut impl FnMut(usize, &[Element]) -> Vec<bool>,
    visit: &mut impl FnMut(&[Element]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let len = seq.len();
    if len == n as usize + 1 {
        return visit(seq);
    }
    // Predicate P_{len-1} is indexed by the full current prefix.
    let pushed = len < n as usize;
    if pushed {
        let b = bits(len - 1, seq);
        caches.push(b);
    }
    let mut flow = ControlFlow::Continue(());
    for x in domain(n) {
        let c = x.code() as usize;
        if used[c] {
            continue;
        }
        // For each i ≤ len − 2, x must agree with a_{i+1} on P_i.
        let ok = (0..len.saturating_sub(1)).all(|i| caches[i][c] == caches[i][seq[i + 1].code() as usize]);
        if !ok {
            continue;
        }
        used[c] = true;
        seq.push(x);
        flow = dfs(n, seq, used, caches, bits, visit);
        seq.pop();
        used[c] = false;
        if flow.is_break() {
            break;
        }
    }
    if pushed {
        caches.pop();
    }
    flow
}

/// One random feasible sequence: random picks, random sides among those that keep the majority bound.
pub fn sample_feasible(
    n: u32,
    head: Option<Element>,
    mut bits: impl FnMut(usize, &[Element]) -> Vec<bool>,
    rng: &mut impl Rng,
) -> Vec<Element> {
    let mut alive: Vec<Element> = domain(n).collect();
    let mut seq = Vec::with_capacity(n as usize + 1);
    for i in 0..=n as usize {
        let a = match (i, head) {
            (0, Some(h)) => h,
            _ => *alive.choose(rng).expect("sides are kept large enough to finish"),
        };
        alive.retain(|&x| x != a);
        seq.push(a);
        if i + 2 <= n as usize {
            let b = bits(i, &seq);
            let (ones, zeros): (Vec<Element>, Vec<Element>) =
                alive.iter().partition(|x| b[x.code() as usize]);
            // Majority play keeps at least 2^{n-i-1} candidates after this split.
            let need = 1usize << (n as usize - i - 1);
            let both = ones.len() >= need && zeros.len() >= need;
            alive = if both {
                if rng.random_bool(0.5) {
                    ones
                } else {
                    zeros
                }
            } else if ones.len() > zeros.len() {
                ones
            } else {
                zeros
            };
        }
    }
    seq
}

/// `P_i(prefix, x)` for every `x` of a Long Choice instance.
pub fn predicate_bits(lc: &LongChoiceInstance, i: usize, prefix: &[Element]) -> Vec<bool> {
    domain(lc.n()).map(|x| lc.eval_predicate(i, prefix, x)).collect()
}

/// Every certificate `verify_solution` accepts, ordered by (solution type, witnesses), truncated at `limit`.
pub fn enumerate_solutions(
    inst: &ProblemInstance,
    limit: usize,
) -> Result<Vec<SolutionCertificate>, OracleError> {
    let n = inst.n();
    let mut out = Vec::new();
    let full = |out: &Vec<SolutionCertificate>| out.len() >= limit;
    match inst {
        ProblemInstance::LocalOpt(i) => {
            check_exhaustive(n)?;
            for x in domain(n) {
                if full(&out) {
                    break;
                }
                if i.is_solution(x) {
                    out.push(SolutionCertificate::LocalOpt { x });
                }
            }
        }
        ProblemInstance::Pigeon(i) => {
            guard("pigeon pair scan", n, MAX_SCAN_N)?;
            'pairs: for x in domain(n) {
                for y in domain(n) {
                    if full(&out) {
                        break 'pairs;
                    }
                    if x != y && i.c().apply(x) == i.c().apply(y) {
                        out.push(SolutionCertificate::PigeonCollision { x, y });
                    }
                }
            }
            for x in domain(n) {
                if full(&out) {
                    break;
                }
                if i.c().apply(x) == i.v_star() {
                    out.push(SolutionCertificate::PigeonHit { x });
                }
            }
        }
        ProblemInstance::QuotientPigeon(i) => {
            guard("quotient pigeon scan", n, MAX_SCAN_N)?;
            enumerate_qp(i, limit, &mut out)?;
        }
        ProblemInstance::LongChoice(_) | ProblemInstance::ConstrainedLongChoice(_) => {
            guard("long choice enumeration", n, MAX_SEQUENCE_N)?;
            let (lc, head) = long_choice_parts(inst)?;
            for_each_feasible(
                n,
                head,
                |k, prefix| predicate_bits(lc, k, prefix),
                |seq| {
                    out.push(SolutionCertificate::LongChoiceSequence {
                        sequence: seq.to_vec(),
                    });
                    if out.len() >= limit {
                        ControlFlow::Break(())
                    } else {
                        ControlFlow::Continue(())
                    }
                },
            );
        }
    }
    Ok(out)
}

fn enumerate_qp(
    inst: &QuotientPigeonInstance,
    limit: usize,
    out: &mut Vec<SolutionCertificate>,
) -> Result<(), OracleError> {
    let n = inst.n();
    let r = Relation::from_map(inst.e(), n)?;
    let size = r.size();
    let c: Vec<usize> = domain(n).map(|x| inst.image(x).code() as usize).collect();
    let v = inst.v_star().code() as usize;
    let el = |k: usize| Element::from_code(k as u32);
    macro_rules! push {
        ($cert:expr) => {{
            if out.len() >= limit {
                return Ok(());
            }
            out.push($cert);
        }};
    }
    for x in 0..size {
        for y in 0..size {
            if !r.get(x, y) && r.get(c[x], c[y]) {
                push!(SolutionCertificate::QpType1 { x: el(x), y: el(y) });
            }
        }
    }
    for x in 0..size {
        if r.get(c[x], v) {
            push!(SolutionCertificate::QpType2 { x: el(x) });
        }
    }
    for x in 0..size {
        for y in 0..size {
            if r.get(x, y) && !r.get(c[x], c[y]) {
                push!(SolutionCertificate::QpType3 { x: el(x), y: el(y) });
            }
        }
    }
    for x in 0..size {
        if !r.get(x, x) {
            push!(SolutionCertificate::QpType4 { x: el(x) });
        }
    }
    for x in 0..size {
        for y in 0..size {
            if r.get(x, y) != r.get(y, x) {
                push!(SolutionCertificate::QpType5 { x: el(x), y: el(y) });
            }
        }
    }
    for x in 0..size {
        for y in 0..size {
            if y == x || !r.get(x, y) {
                continue;
            }
            for z in 0..size {
                if z != x && z != y && r.get(y, z) && !r.get(x, z) {
                    push!(SolutionCertificate::QpType6 {
                        x: el(x),
                        y: el(y),
                        z: el(z),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Constrained instances reuse the unconstrained solver with the head forced.
pub fn solve_constrained_majority(
    inst: &ConstrainedLongChoiceInstance,
) -> Result<SolutionCertificate, OracleError> {
    solve_long_choice_majority(&ProblemInstance::ConstrainedLongChoice(inst.clone()))
}
