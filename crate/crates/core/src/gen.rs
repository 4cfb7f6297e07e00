//! Seeded instance generators.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    check_exhaustive, domain, domain_size, Circuit, Element, EvaluableMap, Gate, ModelError,
    Signature,
};
use crate::problems::{
    LocalOptInstance, LongChoiceInstance, PigeonInstance, ProblemError, ProblemInstance,
    QuotientPigeonInstance,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("{kind} does not support n = {n}: {why}")]
    Unsupported { kind: GenKind, n: u32, why: &'static str },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenKind {
    /// Quotient Pigeon with independent random `C` and `E` tables.
    RandomTable,
    /// Quotient Pigeon whose `E` is the kernel of a random labelling.
    KernelEquivalence,
    /// Quotient Pigeon with `E` = equality.
    EqualityEquivalence,
    /// LocalOPT where `f` moves to a random higher-potential point or stays.
    LocaloptDag,
    /// LocalOPT with independent random `f` and `p`.
    LocaloptRandom,
    PigeonRandom,
    /// Long Choice with random predicates: tables up to 16 input bits, random circuits beyond.
    LongChoiceRandom,
    /// De-fixed Quotient Pigeon with `2n` distinct classes along the walk from `v*`, `E` = equality.
    ClcReadyEquality,
    /// As above with a kernel `E`.
    ClcReadyKernel,
    /// As above with a kernel `E` whose off-diagonal entries are flipped with probability 1/8.
    ClcReadyRandom,
}

impl GenKind {
    pub const ALL: [GenKind; 10] = [
        GenKind::RandomTable,
        GenKind::KernelEquivalence,
        GenKind::EqualityEquivalence,
        GenKind::LocaloptDag,
        GenKind::LocaloptRandom,
        GenKind::PigeonRandom,
        GenKind::LongChoiceRandom,
        GenKind::ClcReadyEquality,
        GenKind::ClcReadyKernel,
        GenKind::ClcReadyRandom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GenKind::RandomTable => "random_table",
            GenKind::KernelEquivalence => "kernel_equivalence",
            GenKind::EqualityEquivalence => "equality_equivalence",
            GenKind::LocaloptDag => "localopt_dag",
            GenKind::LocaloptRandom => "localopt_random",
            GenKind::PigeonRandom => "pigeon_random",
            GenKind::LongChoiceRandom => "long_choice_random",
            GenKind::ClcReadyEquality => "clc_ready_equality",
            GenKind::ClcReadyKernel => "clc_ready_kernel",
            GenKind::ClcReadyRandom => "clc_ready_random",
        }
    }

    pub fn parse(s: &str) -> Option<GenKind> {
        GenKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl std::fmt::Display for GenKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub kind: GenKind,
    pub n: u32,
    /// Potential width for LocalOPT kinds; defaults to `n`.
    #[serde(default)]
    pub m: Option<u32>,
    pub seed: u64,
    pub count: usize,
}

/// Instance `j` of a config uses seed `seed + j`, so any single instance can be regenerated alone.
pub fn gen_instances(cfg: &GeneratorConfig) -> Result<Vec<ProblemInstance>, GenError> {
    (0..cfg.count as u64)
        .map(|j| gen_one(cfg.kind, cfg.n, cfg.m, cfg.seed.wrapping_add(j)))
        .collect()
}

pub fn gen_one(kind: GenKind, n: u32, m: Option<u32>, seed: u64) -> Result<ProblemInstance, GenError> {
    check_exhaustive(n)?;
    if n == 0 {
        return Err(GenError::Unsupported { kind, n, why: "n must be positive" });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rng = &mut rng;
    let m = m.unwrap_or(n);
    Ok(match kind {
        GenKind::RandomTable => {
            let c = random_self_map(rng, n);
            let e = random_relation(rng, n);
            QuotientPigeonInstance::new(n, c, e, random_element(rng, n))?.into()
        }
        GenKind::KernelEquivalence => {
            let c = random_self_map(rng, n);
            let classes = rng.random_range(1..=domain_size(n) as u32);
            let labels: Vec<u32> = domain(n).map(|_| rng.random_range(0..classes)).collect();
            QuotientPigeonInstance::new(n, c, kernel(n, &labels)?, random_element(rng, n))?.into()
        }
        GenKind::EqualityEquivalence => {
            let c = random_self_map(rng, n);
            QuotientPigeonInstance::new(n, c, EvaluableMap::equality(n), random_element(rng, n))?.into()
        }
        GenKind::LocaloptDag => {
            let p: Vec<u32> = domain(n).map(|_| rng.random_range(0..1u32 << m)).collect();
            let f: Vec<u32> = (0..domain_size(n))
                .map(|x| {
                    let up: Vec<u32> = (0..domain_size(n) as u32).filter(|&y| p[y as usize] > p[x]).collect();
                    match up.choose(rng) {
                        Some(&y) if rng.random_bool(0.75) => y,
                        _ => x as u32,
                    }
                })
                .collect();
            LocalOptInstance::new(
                n,
                m,
                EvaluableMap::from_codes(Signature::unary(n, n), f)?,
                EvaluableMap::from_codes(Signature::unary(n, m), p)?,
            )?
            .into()
        }
        GenKind::LocaloptRandom => {
            let f = random_self_map(rng, n);
            let p: Vec<u32> = domain(n).map(|_| rng.random_range(0..1u32 << m)).collect();
            LocalOptInstance::new(n, m, f, EvaluableMap::from_codes(Signature::unary(n, m), p)?)?.into()
        }
        GenKind::PigeonRandom => PigeonInstance::new(n, random_self_map(rng, n), random_element(rng, n))?.into(),
        GenKind::LongChoiceRandom => {
            let preds = (0..n as usize - 1)
                .map(|i| random_predicate(rng, n, i + 2))
                .collect::<Result<Vec<_>, _>>()?;
            LongChoiceInstance::new(n, preds)?.into()
        }
        GenKind::ClcReadyEquality | GenKind::ClcReadyKernel | GenKind::ClcReadyRandom => {
            clc_ready(kind, n, rng)?.into()
        }
    })
}

pub fn random_element(rng: &mut impl Rng, n: u32) -> Element {
    Element::from_code(rng.random_range(0..domain_size(n) as u32))
}

pub fn random_self_map(rng: &mut impl Rng, n: u32) -> EvaluableMap {
    let t = (0..domain_size(n)).map(|_| rng.random_range(0..domain_size(n) as u32)).collect();
    EvaluableMap::from_codes(Signature::unary(n, n), t).expect("random table has the right shape")
}

fn random_relation(rng: &mut impl Rng, n: u32) -> EvaluableMap {
    let sig = Signature::predicate(n, 2);
    let t = (0..sig.table_len()).map(|_| rng.random_range(0..2)).collect();
    EvaluableMap::from_codes(sig, t).expect("random relation has the right shape")
}

/// `E(x, y) = [label(x) = label(y)]`, indexed by code.
pub fn kernel(n: u32, labels: &[u32]) -> Result<EvaluableMap, ModelError> {
    EvaluableMap::tabulate(Signature::predicate(n, 2), |a| {
        (labels[a[0] as usize] == labels[a[1] as usize]) as u32
    })
}

const TABLE_PREDICATE_BITS: u32 = 16;

fn random_predicate(rng: &mut impl Rng, n: u32, arity: usize) -> Result<EvaluableMap, ModelError> {
    let sig = Signature::predicate(n, arity);
    if sig.input_bits() <= TABLE_PREDICATE_BITS {
        let t = (0..sig.table_len()).map(|_| rng.random_range(0..2)).collect();
        return EvaluableMap::from_codes(sig, t);
    }
    EvaluableMap::from_circuit(sig, random_circuit(rng, sig.input_bits() as usize))
}

/// A random single-output circuit; XOR-heavy so the output stays roughly balanced.
pub fn random_circuit(rng: &mut impl Rng, inputs: usize) -> Circuit {
    let count = 3 * inputs;
    let mut gates = Vec::with_capacity(count);
    for g in 0..count {
        let nodes = inputs + g;
        let a = rng.random_range(0..nodes);
        let b = rng.random_range(0..nodes);
        gates.push(match rng.random_range(0..10) {
            0..=2 => Gate::And { a, b },
            3..=5 => Gate::Or { a, b },
            _ => Gate::Xor { a, b },
        });
    }
    Circuit::new(inputs, gates, vec![inputs + count - 1]).expect("operands precede their gates")
}

fn clc_ready(kind: GenKind, n: u32, rng: &mut impl Rng) -> Result<QuotientPigeonInstance, GenError> {
    let size = domain_size(n);
    let chain_len = 2 * n as usize + 1;
    if chain_len > size {
        return Err(GenError::Unsupported {
            kind,
            n,
            why: "needs 2n + 1 distinct classes, so n >= 3",
        });
    }
    let mut order: Vec<u32> = (0..size as u32).collect();
    for i in (1..size).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let chain = &order[..chain_len];
    let mut labels = vec![0u32; size];
    let classes = match kind {
        GenKind::ClcReadyEquality => size as u32,
        _ => rng.random_range(chain_len as u32..=size as u32),
    };
    for (x, label) in labels.iter_mut().enumerate() {
        *label = match chain.iter().position(|&c| c as usize == x) {
            Some(i) => i as u32,
            None if kind == GenKind::ClcReadyEquality => x as u32 + size as u32,
            None => rng.random_range(0..classes),
        };
    }
    let v = chain[0] as usize;
    let mut c = vec![0u32; size];
    for x in 0..size {
        c[x] = match chain[..chain_len - 1].iter().position(|&u| u as usize == x) {
            Some(i) => chain[i + 1],
            None => {
                let ok: Vec<u32> = (0..size as u32)
                    .filter(|&y| labels[y as usize] != labels[x] && labels[y as usize] != labels[v])
                    .collect();
                *ok.choose(rng).expect("at least 2n + 1 classes exist")
            }
        };
    }
    let mut rel: Vec<u32> = (0..size * size)
        .map(|k| (labels[k / size] == labels[k % size]) as u32)
        .collect();
    if kind == GenKind::ClcReadyRandom {
        for x in 0..size {
            for y in 0..size {
                if x != y && rng.random_bool(0.125) {
                    rel[x * size + y] ^= 1;
                }
            }
        }
        // Keep the instance de-fixed and its 2n-step walk collision-free in both directions.
        for x in 0..size {
            let cx = c[x] as usize;
            rel[cx * size + x] = 0;
            rel[x * size + cx] = 0;
        }
        for (i, &a) in chain.iter().enumerate() {
            for &b in &chain[..i] {
                rel[a as usize * size + b as usize] = 0;
                rel[b as usize * size + a as usize] = 0;
            }
        }
    }
    let cmap = EvaluableMap::from_codes(Signature::unary(n, n), c)?;
    let e = EvaluableMap::from_codes(Signature::predicate(n, 2), rel)?;
    Ok(QuotientPigeonInstance::new(n, cmap, e, Element::from_code(v as u32))?)
}
