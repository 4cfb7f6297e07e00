//! The nested sets `B_k ⊇ F_k` that the predicates split on.

use serde::{Deserialize, Serialize};

use crate::model::{Element, FiniteSet, ModelError};
use crate::problems::QuotientPigeonInstance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelRule {
    /// `B_0 = [2^n] \ {v*}`
    Base,
    /// `B_{k−1}` is a singleton, so `B_k = F_k = B_{k−1}`.
    Singleton,
    /// `C(b_k) ∈ F_{k−1}`, so `B_k = F_{k−1}`.
    Inside,
    /// `C(b_k) ∉ F_{k−1}`, so `B_k = B_{k−1} \ F_{k−1}`.
    Outside,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetLevel {
    pub b: FiniteSet,
    pub f: FiniteSet,
    pub kappa: usize,
    pub rule: LevelRule,
    /// `Unfilled(B_k; b_0 … b_k; C)`
    pub unfilled: FiniteSet,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetSystem {
    pub levels: Vec<SetLevel>,
}

impl SetSystem {
    /// Levels whose unfilled set came out empty; their `F` is empty too.
    pub fn degenerate_levels(&self) -> Vec<usize> {
        (0..self.levels.len()).filter(|&k| self.levels[k].unfilled.is_empty()).collect()
    }

    pub fn is_monotone(&self) -> bool {
        let nested = self.levels.windows(2).all(|w| w[1].b.is_subset(&w[0].b));
        nested && self.levels.iter().all(|l| l.f.is_subset(&l.b))
    }
}

/// Smallest κ with `|B[κ] ∩ U| = ⌈|U| / 2⌉`.
fn split(b: &FiniteSet, unfilled: &FiniteSet) -> Result<(FiniteSet, usize), ModelError> {
    let target = unfilled.len().div_ceil(2);
    let mut hit = 0;
    let mut kappa = 0;
    for x in b.iter() {
        if hit == target {
            break;
        }
        kappa += 1;
        if unfilled.contains(x) {
            hit += 1;
        }
    }
    Ok((b.k_smallest(kappa)?, kappa))
}

/// Level `k = prefix.len() − 1`, given the levels for `b_0 … b_{k−1}`.
pub fn next_level(
    prev: Option<&SetLevel>,
    prefix: &[Element],
    inst: &QuotientPigeonInstance,
) -> Result<SetLevel, ModelError> {
    let n = inst.n();
    let bk = *prefix.last().expect("non-empty b prefix");
    let (b, rule) = match prev {
        None => {
            let mut b0 = FiniteSet::full(n);
            b0.remove(inst.v_star());
            (b0, LevelRule::Base)
        }
        Some(p) if p.b.len() == 1 => {
            let unfilled = p.b.unfilled(prefix, inst.c())?;
            return Ok(SetLevel {
                b: p.b.clone(),
                f: p.b.clone(),
                kappa: 1,
                rule: LevelRule::Singleton,
                unfilled,
            });
        }
        Some(p) if p.f.contains(inst.image(bk)) => (p.f.clone(), LevelRule::Inside),
        Some(p) => (p.b.difference(&p.f), LevelRule::Outside),
    };
    let unfilled = b.unfilled(prefix, inst.c())?;
    let (f, kappa) = split(&b, &unfilled)?;
    Ok(SetLevel {
        b,
        f,
        kappa,
        rule,
        unfilled,
    })
}

/// One level per element of `b_seq`.
pub fn build_sets(b_seq: &[Element], inst: &QuotientPigeonInstance) -> Result<SetSystem, ModelError> {
    let mut sys = SetSystem::default();
    for k in 0..b_seq.len() {
        let level = next_level(sys.levels.last(), &b_seq[..=k], inst)?;
        sys.levels.push(level);
    }
    Ok(sys)
}

/// `|Unfilled(B_k)|` the key-property count expects at level `k`: `2^{n−k} − 2`.
pub fn expected_unfilled(n: u32, k: usize) -> Option<usize> {
    (k < n as usize).then(|| (1usize << (n as usize - k)) - 2)
}
