//! Sound reductions and normalizations, each paired with its solution pull-back.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::model::{
    domain, synthesize, Circuit, CircuitBuilder, Construction, Element, EvaluableMap, ModelError,
    Signature,
};
use crate::oracles::WalkTrace;
use crate::problems::{
    verify_solution, LocalOptInstance, PigeonInstance, ProblemError, ProblemInstance,
    QuotientPigeonInstance, Rejection, SolutionCertificate, Verdict,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReductionError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("walk trace has no collision")]
    NoCollision,
    #[error("unknown reduction id {0:?}")]
    UnknownReduction(String),
    #[error("reduction {reduction} does not apply to {found} instances")]
    WrongKind { reduction: String, found: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PullbackError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("certificate is not a solution of the reduced instance ({:?})", .0.code)]
    NotAccepted(Rejection),
    #[error("{reduction}: pulled-back {certificate:?} is rejected by the original instance")]
    Unsound {
        reduction: String,
        certificate: SolutionCertificate,
        rejection: Rejection,
    },
    #[error("{reduction}: no candidate among {candidates:?} solves the original instance")]
    NoCandidate {
        reduction: String,
        candidates: Vec<SolutionCertificate>,
    },
    #[error("{reduction}: {certificate:?} should be impossible for this reduced instance")]
    Unreachable {
        reduction: String,
        certificate: SolutionCertificate,
    },
    #[error("{reduction}: FAILURE ({reason})")]
    Failure {
        reduction: String,
        reason: String,
        diagnostic: Box<Value>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub id: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stages: Vec<Provenance>,
}

impl Provenance {
    pub fn new(id: &str) -> Self {
        Provenance {
            id: id.to_string(),
            params: BTreeMap::new(),
            stages: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: Value) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }
}

pub type PullbackFn =
    Arc<dyn Fn(&SolutionCertificate) -> Result<SolutionCertificate, PullbackError> + Send + Sync>;

/// A reduced instance together with the procedure that maps its solutions back.
#[derive(Clone)]
pub struct ReductionArtifact {
    pub original: ProblemInstance,
    pub reduced: ProblemInstance,
    pub provenance: Provenance,
    pullback: PullbackFn,
}

impl fmt::Debug for ReductionArtifact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReductionArtifact")
            .field("provenance", &self.provenance)
            .field("original", &self.original.kind())
            .field("reduced", &self.reduced.kind())
            .finish_non_exhaustive()
    }
}

impl ReductionArtifact {
    pub fn new(
        original: ProblemInstance,
        reduced: ProblemInstance,
        provenance: Provenance,
        pullback: impl Fn(&SolutionCertificate) -> Result<SolutionCertificate, PullbackError>
            + Send
            + Sync
            + 'static,
    ) -> Self {
        ReductionArtifact {
            original,
            reduced,
            provenance,
            pullback: Arc::new(pullback),
        }
    }

    pub fn id(&self) -> &str {
        &self.provenance.id
    }

    /// The stage's pull-back without any verification around it.
    pub fn raw_pullback(&self, sol: &SolutionCertificate) -> Result<SolutionCertificate, PullbackError> {
        (self.pullback)(sol)
    }
}

/// Checks `sol` on the reduced instance, pulls it back, and checks the result on the original.
pub fn apply_pullback(
    art: &ReductionArtifact,
    sol: &SolutionCertificate,
) -> Result<SolutionCertificate, PullbackError> {
    if let Verdict::Reject(r) = verify_solution(&art.reduced, sol)? {
        return Err(PullbackError::NotAccepted(r));
    }
    let out = (art.pullback)(sol)?;
    match verify_solution(&art.original, &out)? {
        Verdict::Accept => Ok(out),
        Verdict::Reject(rejection) => Err(PullbackError::Unsound {
            reduction: art.id().to_string(),
            certificate: out,
            rejection,
        }),
    }
}

/// `first` then `second`; the composite pulls back through `second` and then `first`.
pub fn compose(id: &str, first: ReductionArtifact, second: ReductionArtifact) -> ReductionArtifact {
    let mut provenance = Provenance::new(id);
    for stage in [&first, &second] {
        if stage.provenance.stages.is_empty() {
            provenance.stages.push(stage.provenance.clone());
        } else {
            provenance.stages.extend(stage.provenance.stages.iter().cloned());
        }
    }
    let original = first.original.clone();
    let reduced = second.reduced.clone();
    ReductionArtifact::new(original, reduced, provenance, move |sol| {
        let mid = apply_pullback(&second, sol)?;
        apply_pullback(&first, &mid)
    })
}

/// First candidate the original instance accepts.
fn first_verified(
    original: &ProblemInstance,
    reduction: &str,
    candidates: Vec<SolutionCertificate>,
) -> Result<SolutionCertificate, PullbackError> {
    for c in &candidates {
        if verify_solution(original, c)?.is_accept() {
            return Ok(c.clone());
        }
    }
    Err(PullbackError::NoCandidate {
        reduction: reduction.to_string(),
        candidates,
    })
}

fn unreachable_type(reduction: &str, sol: &SolutionCertificate) -> PullbackError {
    PullbackError::Unreachable {
        reduction: reduction.to_string(),
        certificate: sol.clone(),
    }
}

fn expect_qp(inst: &ProblemInstance, reduction: &str) -> Result<QuotientPigeonInstance, ReductionError> {
    match inst {
        ProblemInstance::QuotientPigeon(q) => Ok(q.clone()),
        other => Err(ReductionError::WrongKind {
            reduction: reduction.into(),
            found: other.kind().to_string(),
        }),
    }
}

fn constant_bits(b: &mut CircuitBuilder, code: u32, width: u32) -> Vec<usize> {
    (0..width).map(|t| b.constant(code >> t & 1 == 1)).collect()
}

/// Pigeon as Quotient Pigeon under equality.
pub fn reduce_pigeon_to_qp(inst: &PigeonInstance) -> Result<ReductionArtifact, ReductionError> {
    const ID: &str = "pigeon_to_qp";
    let n = inst.n();
    let mut e = EvaluableMap::equality(n);
    if inst.c().circuit().is_some() {
        e = e.with_circuit(synthesize(&Construction::Equality { width: n as usize })?)?;
    }
    let reduced = QuotientPigeonInstance::new(n, inst.c().clone(), e, inst.v_star())?;
    Ok(ReductionArtifact::new(
        inst.clone().into(),
        reduced.into(),
        Provenance::new(ID),
        |sol| match *sol {
            SolutionCertificate::QpType1 { x, y } => Ok(SolutionCertificate::PigeonCollision { x, y }),
            SolutionCertificate::QpType2 { x } => Ok(SolutionCertificate::PigeonHit { x }),
            _ => Err(unreachable_type(ID, sol)),
        },
    ))
}

/// Smallest element unrelated to `v*`, else the smallest element other than `v*`.
pub fn default_u_star(inst: &QuotientPigeonInstance) -> Element {
    let v = inst.v_star();
    domain(inst.n())
        .find(|&u| u != v && !inst.related(u, v))
        .or_else(|| domain(inst.n()).find(|&u| u != v))
        .expect("domain has at least two elements")
}

/// `C(x) := u*` whenever `C(x) ∼ v*`.
pub fn redirect_vstar_class(
    inst: &QuotientPigeonInstance,
    u_star: Option<Element>,
) -> Result<ReductionArtifact, ReductionError> {
    const ID: &str = "redirect_vstar_class";
    let n = inst.n();
    let v = inst.v_star();
    let u = u_star.unwrap_or_else(|| default_u_star(inst));
    if u == v {
        return Err(ReductionError::Precondition("u* must differ from v*".into()));
    }
    if !u.in_domain(n) {
        return Err(ModelError::OutOfDomain { value: u.value(), n }.into());
    }
    let hits = |x: Element| inst.related(inst.image(x), v);
    let codes: Vec<u32> = domain(n)
        .map(|x| if hits(x) { u.code() } else { inst.image(x).code() })
        .collect();
    let mut c = EvaluableMap::from_codes(Signature::unary(n, n), codes)?;
    if let (Some(cc), Some(ec)) = (inst.c().circuit(), inst.e().circuit()) {
        let mut b = CircuitBuilder::new(n as usize);
        let x = b.inputs(0..n as usize);
        let img = b.embed(cc, &x);
        let mut e_in = constant_bits(&mut b, v.code(), n);
        e_in.extend_from_slice(&img);
        let sel = b.embed(ec, &e_in)[0];
        let ub = constant_bits(&mut b, u.code(), n);
        let out = (0..n as usize).map(|t| b.mux(sel, ub[t], img[t])).collect();
        c = c.with_circuit(b.finish(out))?;
    }
    let reduced = QuotientPigeonInstance::new(n, c, inst.e().clone(), v)?;
    let orig = inst.clone();
    Ok(ReductionArtifact::new(
        inst.clone().into(),
        reduced.into(),
        Provenance::new(ID).with("u_star", json!(u.value())),
        move |sol| {
            if sol.qp_type().is_some_and(|t| t <= 3) {
                let redirected = sol
                    .witnesses()
                    .into_iter()
                    .find(|&w| orig.related(orig.image(w), orig.v_star()));
                if let Some(x) = redirected {
                    return Ok(SolutionCertificate::QpType2 { x });
                }
            }
            Ok(sol.clone())
        },
    ))
}

/// `(b, x) ↦ (1 − b, C(x))` and `E'((b, x), (c, y)) = [b = c]·E(x, y)` over `{0,1} × [2^n]`, `b` the high bit.
pub fn double_domain_defixing(inst: &QuotientPigeonInstance) -> Result<ReductionArtifact, ReductionError> {
    const ID: &str = "double_domain_defixing";
    let n = inst.n();
    let w = n + 1;
    let low = (1u32 << n) - 1;
    let mut c = EvaluableMap::tabulate(Signature::unary(w, w), |a| {
        let (b, x) = (a[0] >> n, a[0] & low);
        let cx = inst.c().eval_codes(&[x]);
        ((1 - b) << n) | cx
    })?;
    if let Some(cc) = inst.c().circuit() {
        c = c.with_circuit(synthesize(&Construction::PrependFlippedBit { inner: cc.clone() })?)?;
    }
    let mut e = EvaluableMap::tabulate(Signature::predicate(w, 2), |a| {
        let (b, x) = (a[0] >> n, a[0] & low);
        let (bb, y) = (a[1] >> n, a[1] & low);
        (b == bb && inst.e().eval_codes(&[x, y]) == 1) as u32
    })?;
    if let Some(ec) = inst.e().circuit() {
        e = e.with_circuit(defixed_relation_circuit(ec, n as usize))?;
    }
    let v = inst.v_star();
    let reduced = QuotientPigeonInstance::new(w, c, e, Element::pair(Element::from_code(0), v, n))?;
    Ok(ReductionArtifact::new(
        inst.clone().into(),
        reduced.into(),
        Provenance::new(ID).with("v_star", json!(v.value())),
        move |sol| Ok(sol.map_witnesses(|xi| xi.unpair(n).1)),
    ))
}

fn defixed_relation_circuit(e: &Circuit, n: usize) -> Circuit {
    // Second argument (c, y) occupies bits 0..=n, first argument (b, x) bits n+1..=2n+1.
    let mut b = CircuitBuilder::new(2 * (n + 1));
    let y = b.inputs(0..n);
    let c = b.input(n);
    let x = b.inputs(n + 1..2 * n + 1);
    let bit = b.input(2 * n + 1);
    let mut wires = y;
    wires.extend(x);
    let rel = b.embed(e, &wires)[0];
    let d = b.xor(bit, c);
    let same = b.not(d);
    let out = b.and(same, rel);
    b.finish(vec![out])
}

/// Turns a walk collision `(j, i)` into a solution: `Type2(u_{i−1})` when `j = 0`, else `Type1(u_{i−1}, u_{j−1})`.
pub fn recover_from_prefix_collision(
    inst: &QuotientPigeonInstance,
    trace: &WalkTrace,
) -> Result<SolutionCertificate, ReductionError> {
    let (j, i) = trace.collision.ok_or(ReductionError::NoCollision)?;
    let u = &trace.sequence;
    if j >= i || i >= u.len() || !inst.related(u[i], u[j]) {
        return Err(ReductionError::Precondition(format!(
            "({j}, {i}) is not a collision of the trace"
        )));
    }
    Ok(if j == 0 {
        SolutionCertificate::QpType2 { x: u[i - 1] }
    } else {
        SolutionCertificate::QpType1 {
            x: u[i - 1],
            y: u[j - 1],
        }
    })
}

/// `p'(1) = 1`, with `f'` rerouting preimages of 1 to `f(1)`.
pub fn normalize_unit_potential(inst: &LocalOptInstance) -> Result<ReductionArtifact, ReductionError> {
    const ID: &str = "normalize_unit_potential";
    let (n, m) = (inst.n(), inst.m());
    let one = Element::from_code(0);
    let f1 = inst.step(one);
    let f = EvaluableMap::tabulate(Signature::unary(n, n), |a| {
        let fx = inst.f().eval_codes(a);
        if fx == 0 {
            f1.code()
        } else {
            fx
        }
    })?;
    let p = EvaluableMap::tabulate(Signature::unary(n, m), |a| {
        if a[0] == 0 {
            0
        } else {
            inst.p().eval_codes(a)
        }
    })?;
    let reduced = LocalOptInstance::new(n, m, f, p)?;
    let orig = inst.clone();
    let original: ProblemInstance = inst.clone().into();
    let check = original.clone();
    Ok(ReductionArtifact::new(original, reduced.into(), Provenance::new(ID), move |sol| {
        let SolutionCertificate::LocalOpt { x } = *sol else {
            return Err(unreachable_type(ID, sol));
        };
        let candidates = [x, orig.step(x), one]
            .into_iter()
            .map(|x| SolutionCertificate::LocalOpt { x })
            .collect();
        first_verified(&check, ID, candidates)
    }))
}

/// Rebuilds a unit-potential instance over `[2^m] × [2^n]` so every move raises the potential by exactly one.
///
/// Columns `x` with `p'(x) ≥ p'(f'(x))` are fixed pointwise with `P(i, x) = i`. In the other columns the
/// active band `p'(x) ≤ i < p'(f'(x))` climbs one level per step and ends at `(p'(f'(x)), f'(x))`;
/// rows below the band enter it at `(p'(x), x)` and rows above it jump to `(p'(f'(x)), f'(x))`.
pub fn normalize_unit_step(inst: &LocalOptInstance) -> Result<ReductionArtifact, ReductionError> {
    const ID: &str = "normalize_unit_step";
    let (n, m) = (inst.n(), inst.m());
    let one = Element::from_code(0);
    if inst.potential(one) != 1 {
        return Err(ReductionError::Precondition(
            "the instance must have unit potential at 1".into(),
        ));
    }
    let w = m + n;
    let low = (1u32 << n) - 1;
    // Both maps work on 1-based potentials; `i` is the row's 1-based index.
    let step = |code: u32| -> (u32, u32) {
        let (i, x) = ((code >> n) + 1, code & low);
        let fx = inst.f().eval_codes(&[x]);
        let (lo, hi) = (inst.p().eval_codes(&[x]) + 1, inst.p().eval_codes(&[fx]) + 1);
        let node = |i: u32, x: u32| ((i - 1) << n) | x;
        if lo >= hi {
            (node(i, x), i)
        } else if i < lo {
            (node(lo, x), lo - 1)
        } else if i + 1 < hi {
            (node(i + 1, x), i)
        } else if i + 1 == hi {
            (node(hi, fx), i)
        } else {
            (node(hi, fx), hi - 1)
        }
    };
    let f = EvaluableMap::tabulate(Signature::unary(w, w), |a| step(a[0]).0)?;
    let p = EvaluableMap::tabulate(Signature::unary(w, m), |a| step(a[0]).1 - 1)?;
    let reduced = LocalOptInstance::new(w, m, f, p)?;
    let orig = inst.clone();
    let original: ProblemInstance = inst.clone().into();
    let check = original.clone();
    Ok(ReductionArtifact::new(
        original,
        reduced.into(),
        Provenance::new(ID).with("v_star", json!(1)).with("n", json!(n)).with("m", json!(m)),
        move |sol| {
            let SolutionCertificate::LocalOpt { x: xi } = *sol else {
                return Err(unreachable_type(ID, sol));
            };
            let x = xi.unpair(n).1;
            let candidates = [x, orig.step(x)]
                .into_iter()
                .map(|x| SolutionCertificate::LocalOpt { x })
                .collect();
            first_verified(&check, ID, candidates)
        },
    ))
}

/// `C = f`, `E` the kernel of `p`, `v* = 1`.
pub fn reduce_localopt_to_qp(inst: &LocalOptInstance) -> Result<ReductionArtifact, ReductionError> {
    const ID: &str = "localopt_to_qp";
    let n = inst.n();
    let e = EvaluableMap::tabulate(Signature::predicate(n, 2), |a| {
        (inst.p().eval_codes(&a[..1]) == inst.p().eval_codes(&a[1..])) as u32
    })?;
    let reduced = QuotientPigeonInstance::new(n, inst.f().clone(), e, Element::from_code(0))?;
    let orig = inst.clone();
    let original: ProblemInstance = inst.clone().into();
    let check = original.clone();
    Ok(ReductionArtifact::new(original, reduced.into(), Provenance::new(ID), move |sol| {
        let mut ws = match *sol {
            SolutionCertificate::QpType1 { x, y } | SolutionCertificate::QpType3 { x, y } => vec![x, y],
            SolutionCertificate::QpType2 { x } => vec![x],
            _ => return Err(unreachable_type(ID, sol)),
        };
        if sol.qp_type() == Some(3) {
            // The fixed point of f, if any, goes first.
            ws.sort_by_key(|&w| orig.step(w) != w);
        }
        let candidates = ws.into_iter().map(|x| SolutionCertificate::LocalOpt { x }).collect();
        first_verified(&check, ID, candidates)
    }))
}

/// Redirect `v*`'s class, then double the domain.
pub fn qp_defix(inst: &QuotientPigeonInstance) -> Result<ReductionArtifact, ReductionError> {
    let redirect = redirect_vstar_class(inst, None)?;
    let mid = expect_qp(&redirect.reduced, "qp_defix")?;
    let doubled = double_domain_defixing(&mid)?;
    Ok(compose("qp_defix", redirect, doubled))
}

pub fn localopt_normalize(inst: &LocalOptInstance) -> Result<ReductionArtifact, ReductionError> {
    let unit = normalize_unit_potential(inst)?;
    let ProblemInstance::LocalOpt(mid) = &unit.reduced else {
        unreachable!("normalize_unit_potential yields LocalOPT");
    };
    let step = normalize_unit_step(mid)?;
    Ok(compose("localopt_normalize", unit, step))
}

pub fn localopt_to_qp(inst: &LocalOptInstance) -> Result<ReductionArtifact, ReductionError> {
    let norm = localopt_normalize(inst)?;
    let ProblemInstance::LocalOpt(mid) = &norm.reduced else {
        unreachable!("normalization yields LocalOPT");
    };
    let qp = reduce_localopt_to_qp(mid)?;
    Ok(compose("localopt_to_qp", norm, qp))
}

/// The sound reductions by their stable ids.
pub const SOUND_REDUCTIONS: [&str; 4] = ["pigeon_to_qp", "qp_defix", "localopt_normalize", "localopt_to_qp"];

pub fn reduce_sound(id: &str, inst: &ProblemInstance) -> Result<ReductionArtifact, ReductionError> {
    let wrong = || ReductionError::WrongKind {
        reduction: id.to_string(),
        found: inst.kind().to_string(),
    };
    match (id, inst) {
        ("pigeon_to_qp", ProblemInstance::Pigeon(i)) => reduce_pigeon_to_qp(i),
        ("qp_defix", ProblemInstance::QuotientPigeon(i)) => qp_defix(i),
        ("localopt_normalize", ProblemInstance::LocalOpt(i)) => localopt_normalize(i),
        ("localopt_to_qp", ProblemInstance::LocalOpt(i)) => localopt_to_qp(i),
        (id, _) if SOUND_REDUCTIONS.contains(&id) => Err(wrong()),
        (id, _) => Err(ReductionError::UnknownReduction(id.to_string())),
    }
}
