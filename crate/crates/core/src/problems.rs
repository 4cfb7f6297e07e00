//! Instances and solution certificates of the five search problems, and the verifier.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{domain_size, Element, EvaluableMap, ModelError, Signature};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Invalid(String),
    #[error("certificate {certificate} cannot solve a {instance} instance")]
    KindMismatch {
        instance: ProblemKind,
        certificate: &'static str,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    LocalOpt,
    Pigeon,
    QuotientPigeon,
    LongChoice,
    ConstrainedLongChoice,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::LocalOpt => "local_opt",
            ProblemKind::Pigeon => "pigeon",
            ProblemKind::QuotientPigeon => "quotient_pigeon",
            ProblemKind::LongChoice => "long_choice",
            ProblemKind::ConstrainedLongChoice => "constrained_long_choice",
        })
    }
}

fn check_element(e: Element, n: u32, what: &str) -> Result<(), ProblemError> {
    if !e.in_domain(n) {
        return Err(ProblemError::Invalid(format!("{what} = {e} is outside [2^{n}]")));
    }
    Ok(())
}

/// `f : [2^n] → [2^n]`, `p : [2^n] → [2^m]`; find `x` with `p(x) ≥ p(f(x))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLocalOpt")]
pub struct LocalOptInstance {
    n: u32,
    m: u32,
    f: EvaluableMap,
    p: EvaluableMap,
}

#[derive(Deserialize)]
struct RawLocalOpt {
    n: u32,
    m: u32,
    f: EvaluableMap,
    p: EvaluableMap,
}

impl TryFrom<RawLocalOpt> for LocalOptInstance {
    type Error = ProblemError;
    fn try_from(r: RawLocalOpt) -> Result<Self, Self::Error> {
        LocalOptInstance::new(r.n, r.m, r.f, r.p)
    }
}

impl LocalOptInstance {
    pub fn new(n: u32, m: u32, f: EvaluableMap, p: EvaluableMap) -> Result<Self, ProblemError> {
        f.expect_unary_self_map(n)?;
        p.expect_signature(Signature::unary(n, m))?;
        Ok(LocalOptInstance { n, m, f, p })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn f(&self) -> &EvaluableMap {
        &self.f
    }

    pub fn p(&self) -> &EvaluableMap {
        &self.p
    }

    pub fn step(&self, x: Element) -> Element {
        self.f.apply(x)
    }

    /// 1-based potential value.
    pub fn potential(&self, x: Element) -> u32 {
        self.p.apply(x).value()
    }

    pub fn is_solution(&self, x: Element) -> bool {
        self.potential(x) >= self.potential(self.step(x))
    }
}

/// `C : [2^n] → [2^n]` and `v*`; find a collision or a preimage of `v*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPigeon")]
pub struct PigeonInstance {
    n: u32,
    #[serde(rename = "C")]
    c: EvaluableMap,
    v_star: Element,
}

#[derive(Deserialize)]
struct RawPigeon {
    n: u32,
    #[serde(rename = "C")]
    c: EvaluableMap,
    v_star: Element,
}

impl TryFrom<RawPigeon> for PigeonInstance {
    type Error = ProblemError;
    fn try_from(r: RawPigeon) -> Result<Self, Self::Error> {
        PigeonInstance::new(r.n, r.c, r.v_star)
    }
}

impl PigeonInstance {
    pub fn new(n: u32, c: EvaluableMap, v_star: Element) -> Result<Self, ProblemError> {
        c.expect_unary_self_map(n)?;
        check_element(v_star, n, "v_star")?;
        Ok(PigeonInstance { n, c, v_star })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn c(&self) -> &EvaluableMap {
        &self.c
    }

    pub fn v_star(&self) -> Element {
        self.v_star
    }
}

/// Pigeon modulo the relation computed by `E`. `E` is not assumed to be an equivalence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawQp")]
pub struct QuotientPigeonInstance {
    n: u32,
    #[serde(rename = "C")]
    c: EvaluableMap,
    #[serde(rename = "E")]
    e: EvaluableMap,
    v_star: Element,
}

#[derive(Deserialize)]
struct RawQp {
    n: u32,
    #[serde(rename = "C")]
    c: EvaluableMap,
    #[serde(rename = "E")]
    e: EvaluableMap,
    v_star: Element,
}

impl TryFrom<RawQp> for QuotientPigeonInstance {
    type Error = ProblemError;
    fn try_from(r: RawQp) -> Result<Self, Self::Error> {
        QuotientPigeonInstance::new(r.n, r.c, r.e, r.v_star)
    }
}

impl QuotientPigeonInstance {
    pub fn new(
        n: u32,
        c: EvaluableMap,
        e: EvaluableMap,
        v_star: Element,
    ) -> Result<Self, ProblemError> {
        c.expect_unary_self_map(n)?;
        e.expect_signature(Signature::predicate(n, 2))?;
        check_element(v_star, n, "v_star")?;
        Ok(QuotientPigeonInstance { n, c, e, v_star })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn c(&self) -> &EvaluableMap {
        &self.c
    }

    pub fn e(&self) -> &EvaluableMap {
        &self.e
    }

    pub fn v_star(&self) -> Element {
        self.v_star
    }

    pub fn image(&self, x: Element) -> Element {
        self.c.apply(x)
    }

    /// `x ∼_E y`, i.e. `E(x, y) = 1`.
    pub fn related(&self, x: Element, y: Element) -> bool {
        self.e.related(x, y)
    }
}

/// `n − 1` predicates `P_i : ([2^n])^{i+2} → {0, 1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLongChoice")]
pub struct LongChoiceInstance {
    n: u32,
    predicates: Vec<EvaluableMap>,
}

#[derive(Deserialize)]
struct RawLongChoice {
    n: u32,
    predicates: Vec<EvaluableMap>,
}

impl TryFrom<RawLongChoice> for LongChoiceInstance {
    type Error = ProblemError;
    fn try_from(r: RawLongChoice) -> Result<Self, Self::Error> {
        LongChoiceInstance::new(r.n, r.predicates)
    }
}

impl LongChoiceInstance {
    pub fn new(n: u32, predicates: Vec<EvaluableMap>) -> Result<Self, ProblemError> {
        if n == 0 {
            return Err(ProblemError::Invalid("long choice needs n >= 1".into()));
        }
        if predicates.len() != n as usize - 1 {
            return Err(ProblemError::Invalid(format!(
                "expected {} predicates, got {}",
                n - 1,
                predicates.len()
            )));
        }
        for (i, p) in predicates.iter().enumerate() {
            p.expect_signature(Signature::predicate(n, i + 2))?;
        }
        Ok(LongChoiceInstance { n, predicates })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn predicates(&self) -> &[EvaluableMap] {
        &self.predicates
    }

    /// `P_i(prefix, x)` where `prefix = a_0 … a_i`.
    pub fn eval_predicate(&self, i: usize, prefix: &[Element], x: Element) -> bool {
        debug_assert_eq!(prefix.len(), i + 1);
        let mut args: Vec<Element> = Vec::with_capacity(i + 2);
        args.extend_from_slice(prefix);
        args.push(x);
        self.predicates[i].test(&args)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConstrained")]
pub struct ConstrainedLongChoiceInstance {
    #[serde(flatten)]
    base: LongChoiceInstance,
    a0: Element,
}

#[derive(Deserialize)]
struct RawConstrained {
    n: u32,
    predicates: Vec<EvaluableMap>,
    a0: Element,
}

impl TryFrom<RawConstrained> for ConstrainedLongChoiceInstance {
    type Error = ProblemError;
    fn try_from(r: RawConstrained) -> Result<Self, Self::Error> {
        ConstrainedLongChoiceInstance::new(LongChoiceInstance::new(r.n, r.predicates)?, r.a0)
    }
}

impl ConstrainedLongChoiceInstance {
    pub fn new(base: LongChoiceInstance, a0: Element) -> Result<Self, ProblemError> {
        check_element(a0, base.n, "a0")?;
        Ok(ConstrainedLongChoiceInstance { base, a0 })
    }

    pub fn base(&self) -> &LongChoiceInstance {
        &self.base
    }

    pub fn a0(&self) -> Element {
        self.a0
    }

    pub fn n(&self) -> u32 {
        self.base.n
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemInstance {
    LocalOpt(LocalOptInstance),
    Pigeon(PigeonInstance),
    QuotientPigeon(QuotientPigeonInstance),
    LongChoice(LongChoiceInstance),
    ConstrainedLongChoice(ConstrainedLongChoiceInstance),
}

impl ProblemInstance {
    pub fn kind(&self) -> ProblemKind {
        match self {
            ProblemInstance::LocalOpt(_) => ProblemKind::LocalOpt,
            ProblemInstance::Pigeon(_) => ProblemKind::Pigeon,
            ProblemInstance::QuotientPigeon(_) => ProblemKind::QuotientPigeon,
            ProblemInstance::LongChoice(_) => ProblemKind::LongChoice,
            ProblemInstance::ConstrainedLongChoice(_) => ProblemKind::ConstrainedLongChoice,
        }
    }

    /// Domain exponent of the instance's element type. For LocalOPT this is `n`.
    pub fn n(&self) -> u32 {
        match self {
            ProblemInstance::LocalOpt(i) => i.n,
            ProblemInstance::Pigeon(i) => i.n,
            ProblemInstance::QuotientPigeon(i) => i.n,
            ProblemInstance::LongChoice(i) => i.n,
            ProblemInstance::ConstrainedLongChoice(i) => i.base.n,
        }
    }
}

impl From<LocalOptInstance> for ProblemInstance {
    fn from(i: LocalOptInstance) -> Self {
        ProblemInstance::LocalOpt(i)
    }
}
impl From<PigeonInstance> for ProblemInstance {
    fn from(i: PigeonInstance) -> Self {
        ProblemInstance::Pigeon(i)
    }
}
impl From<QuotientPigeonInstance> for ProblemInstance {
    fn from(i: QuotientPigeonInstance) -> Self {
        ProblemInstance::QuotientPigeon(i)
    }
}
impl From<LongChoiceInstance> for ProblemInstance {
    fn from(i: LongChoiceInstance) -> Self {
        ProblemInstance::LongChoice(i)
    }
}
impl From<ConstrainedLongChoiceInstance> for ProblemInstance {
    fn from(i: ConstrainedLongChoiceInstance) -> Self {
        ProblemInstance::ConstrainedLongChoice(i)
    }
}

/// Claimed solutions. The six `Qp*` variants follow the Quotient Pigeon output list in order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolutionCertificate {
    LocalOpt { x: Element },
    PigeonCollision { x: Element, y: Element },
    PigeonHit { x: Element },
    /// `x ≁ y` and `C(x) ∼ C(y)`
    QpType1 { x: Element, y: Element },
    /// `C(x) ∼ v*`
    QpType2 { x: Element },
    /// `x ∼ y` and `C(x) ≁ C(y)`
    QpType3 { x: Element, y: Element },
    /// `E(x, x) = 0`
    QpType4 { x: Element },
    /// `E(x, y) ≠ E(y, x)`
    QpType5 { x: Element, y: Element },
    /// pairwise distinct, `x ∼ y`, `y ∼ z`, `x ≁ z`
    QpType6 { x: Element, y: Element, z: Element },
    LongChoiceSequence { sequence: Vec<Element> },
}

impl SolutionCertificate {
    pub fn name(&self) -> &'static str {
        match self {
            SolutionCertificate::LocalOpt { .. } => "local_opt",
            SolutionCertificate::PigeonCollision { .. } => "pigeon_collision",
            SolutionCertificate::PigeonHit { .. } => "pigeon_hit",
            SolutionCertificate::QpType1 { .. } => "qp_type1",
            SolutionCertificate::QpType2 { .. } => "qp_type2",
            SolutionCertificate::QpType3 { .. } => "qp_type3",
            SolutionCertificate::QpType4 { .. } => "qp_type4",
            SolutionCertificate::QpType5 { .. } => "qp_type5",
            SolutionCertificate::QpType6 { .. } => "qp_type6",
            SolutionCertificate::LongChoiceSequence { .. } => "long_choice_sequence",
        }
    }

    /// Quotient Pigeon solution type 1–6, if this is a Quotient Pigeon certificate.
    pub fn qp_type(&self) -> Option<u8> {
        Some(match self {
            SolutionCertificate::QpType1 { .. } => 1,
            SolutionCertificate::QpType2 { .. } => 2,
            SolutionCertificate::QpType3 { .. } => 3,
            SolutionCertificate::QpType4 { .. } => 4,
            SolutionCertificate::QpType5 { .. } => 5,
            SolutionCertificate::QpType6 { .. } => 6,
            _ => return None,
        })
    }

    pub fn witnesses(&self) -> Vec<Element> {
        use SolutionCertificate::*;
        match self {
            LocalOpt { x } | PigeonHit { x } | QpType2 { x } | QpType4 { x } => vec![*x],
            PigeonCollision { x, y }
            | QpType1 { x, y }
            | QpType3 { x, y }
            | QpType5 { x, y } => vec![*x, *y],
            QpType6 { x, y, z } => vec![*x, *y, *z],
            LongChoiceSequence { sequence } => sequence.clone(),
        }
    }

    /// Same shape with every witness passed through `f`.
    pub fn map_witnesses(&self, f: impl Fn(Element) -> Element) -> SolutionCertificate {
        use SolutionCertificate::*;
        match self {
            LocalOpt { x } => LocalOpt { x: f(*x) },
            PigeonHit { x } => PigeonHit { x: f(*x) },
            QpType2 { x } => QpType2 { x: f(*x) },
            QpType4 { x } => QpType4 { x: f(*x) },
            PigeonCollision { x, y } => PigeonCollision { x: f(*x), y: f(*y) },
            QpType1 { x, y } => QpType1 { x: f(*x), y: f(*y) },
            QpType3 { x, y } => QpType3 { x: f(*x), y: f(*y) },
            QpType5 { x, y } => QpType5 { x: f(*x), y: f(*y) },
            QpType6 { x, y, z } => QpType6 {
                x: f(*x),
                y: f(*y),
                z: f(*z),
            },
            LongChoiceSequence { sequence } => LongChoiceSequence {
                sequence: sequence.iter().map(|&e| f(e)).collect(),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectCode {
    OutOfDomain,
    /// LocalOPT: `p(x) < p(f(x))`
    PotentialIncreases,
    /// Pigeon collision with `x = y`
    NotDistinct,
    /// Pigeon: `C(x) ≠ C(y)`
    NoCollision,
    /// Pigeon: `C(x) ≠ v*`
    NotPreimage,
    /// QP: inputs related where they must not be
    InputsRelated,
    /// QP: inputs unrelated where they must be related
    InputsUnrelated,
    ImagesUnrelated,
    ImagesRelated,
    ImageUnrelatedToVStar,
    Reflexive,
    Symmetric,
    /// Type 6: the triple is transitive or not pairwise distinct
    NotTransitivityViolation,
    WrongLength,
    RepeatedElement,
    PredicateNotConstant,
    WrongHead,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub code: RejectCode,
    /// The values the failed condition was evaluated on.
    pub witnesses: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject(Rejection),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }

    fn reject(code: RejectCode, witnesses: impl IntoIterator<Item = u32>) -> Verdict {
        Verdict::Reject(Rejection {
            code,
            witnesses: witnesses.into_iter().collect(),
        })
    }
}

/// Checks `sol` against the literal defining condition of `inst`'s problem.
///
/// A certificate of the wrong family is an error, not a rejection.
pub fn verify_solution(
    inst: &ProblemInstance,
    sol: &SolutionCertificate,
) -> Result<Verdict, ProblemError> {
    let mismatch = || ProblemError::KindMismatch {
        instance: inst.kind(),
        certificate: sol.name(),
    };
    let n = inst.n();
    if let Some(bad) = sol.witnesses().into_iter().find(|w| !w.in_domain(n)) {
        return match (inst, sol) {
            (ProblemInstance::LocalOpt(_), SolutionCertificate::LocalOpt { .. })
            | (
                ProblemInstance::Pigeon(_),
                SolutionCertificate::PigeonCollision { .. } | SolutionCertificate::PigeonHit { .. },
            )
            | (
                ProblemInstance::LongChoice(_) | ProblemInstance::ConstrainedLongChoice(_),
                SolutionCertificate::LongChoiceSequence { .. },
            ) => Ok(Verdict::reject(RejectCode::OutOfDomain, [bad.value()])),
            (ProblemInstance::QuotientPigeon(_), s) if s.qp_type().is_some() => {
                Ok(Verdict::reject(RejectCode::OutOfDomain, [bad.value()]))
            }
            _ => Err(mismatch()),
        };
    }
    match (inst, sol) {
        (ProblemInstance::LocalOpt(i), SolutionCertificate::LocalOpt { x }) => {
            let fx = i.step(*x);
            let (px, pfx) = (i.potential(*x), i.potential(fx));
            Ok(if px >= pfx {
                Verdict::Accept
            } else {
                Verdict::reject(RejectCode::PotentialIncreases, [x.value(), fx.value(), px, pfx])
            })
        }
        (ProblemInstance::Pigeon(i), SolutionCertificate::PigeonCollision { x, y }) => {
            let (cx, cy) = (i.c.apply(*x), i.c.apply(*y));
            Ok(if x == y {
                Verdict::reject(RejectCode::NotDistinct, [x.value(), y.value()])
            } else if cx != cy {
                Verdict::reject(RejectCode::NoCollision, [cx.value(), cy.value()])
            } else {
                Verdict::Accept
            })
        }
        (ProblemInstance::Pigeon(i), SolutionCertificate::PigeonHit { x }) => {
            let cx = i.c.apply(*x);
            Ok(if cx == i.v_star {
                Verdict::Accept
            } else {
                Verdict::reject(RejectCode::NotPreimage, [x.value(), cx.value()])
            })
        }
        (ProblemInstance::QuotientPigeon(i), s) if s.qp_type().is_some() => Ok(verify_qp(i, s)),
        (ProblemInstance::LongChoice(i), SolutionCertificate::LongChoiceSequence { sequence }) => {
            Ok(verify_long_choice(i, sequence))
        }
        (
            ProblemInstance::ConstrainedLongChoice(i),
            SolutionCertificate::LongChoiceSequence { sequence },
        ) => {
            let v = verify_long_choice(&i.base, sequence);
            if !v.is_accept() {
                return Ok(v);
            }
            Ok(if sequence[0] == i.a0 {
                Verdict::Accept
            } else {
                Verdict::reject(RejectCode::WrongHead, [sequence[0].value(), i.a0.value()])
            })
        }
        _ => Err(mismatch()),
    }
}

fn verify_qp(i: &QuotientPigeonInstance, sol: &SolutionCertificate) -> Verdict {
    use SolutionCertificate::*;
    let rel = |a: Element, b: Element| i.related(a, b);
    let img = |a: Element| i.image(a);
    let vals = |es: &[Element]| es.iter().map(|e| e.value()).collect::<Vec<_>>();
    match *sol {
        QpType1 { x, y } => {
            if rel(x, y) {
                Verdict::reject(RejectCode::InputsRelated, vals(&[x, y]))
            } else if !rel(img(x), img(y)) {
                Verdict::reject(RejectCode::ImagesUnrelated, vals(&[img(x), img(y)]))
            } else {
                Verdict::Accept
            }
        }
        QpType2 { x } => {
            if rel(img(x), i.v_star) {
                Verdict::Accept
            } else {
                Verdict::reject(RejectCode::ImageUnrelatedToVStar, vals(&[x, img(x)]))
            }
        }
        QpType3 { x, y } => {
            if !rel(x, y) {
                Verdict::reject(RejectCode::InputsUnrelated, vals(&[x, y]))
            } else if rel(img(x), img(y)) {
                Verdict::reject(RejectCode::ImagesRelated, vals(&[img(x), img(y)]))
            } else {
                Verdict::Accept
            }
        }
        QpType4 { x } => {
            if rel(x, x) {
                Verdict::reject(RejectCode::Reflexive, vals(&[x]))
            } else {
                Verdict::Accept
            }
        }
        QpType5 { x, y } => {
            if rel(x, y) == rel(y, x) {
                Verdict::reject(RejectCode::Symmetric, vals(&[x, y]))
            } else {
                Verdict::Accept
            }
        }
        QpType6 { x, y, z } => {
            let distinct = x != y && y != z && x != z;
            if distinct && rel(x, y) && rel(y, z) && !rel(x, z) {
                Verdict::Accept
            } else {
                Verdict::reject(RejectCode::NotTransitivityViolation, vals(&[x, y, z]))
            }
        }
        _ => unreachable!("caller matched a Quotient Pigeon certificate"),
    }
}

fn verify_long_choice(i: &LongChoiceInstance, seq: &[Element]) -> Verdict {
    let n = i.n as usize;
    if seq.len() != n + 1 {
        return Verdict::reject(RejectCode::WrongLength, [seq.len() as u32, n as u32 + 1]);
    }
    for a in 0..seq.len() {
        for b in a + 1..seq.len() {
            if seq[a] == seq[b] {
                return Verdict::reject(RejectCode::RepeatedElement, [seq[a].value()]);
            }
        }
    }
    for k in 0..n.saturating_sub(1) {
        let prefix = &seq[..=k];
        let first = i.eval_predicate(k, prefix, seq[k + 1]);
        for j in k + 2..=n {
            if i.eval_predicate(k, prefix, seq[j]) != first {
                return Verdict::reject(RejectCode::PredicateNotConstant, [k as u32, j as u32]);
            }
        }
    }
    Verdict::Accept
}

/// Number of elements of the instance's element domain, `2^n`.
pub fn domain_len(inst: &ProblemInstance) -> usize {
    domain_size(inst.n())
}
