//! Elements of `[2^n]` and finite subsets of them.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{EvaluableMap, ModelError};

/// Largest domain exponent accepted by exhaustive operations.
pub const MAX_EXHAUSTIVE_N: u32 = 10;

/// A point of `[2^n]`, stored with the 1-based value it has in every external format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Element(u32);

impl TryFrom<u32> for Element {
    type Error = ModelError;
    fn try_from(value: u32) -> Result<Self, ModelError> {
        Element::new(value)
    }
}

impl From<Element> for u32 {
    fn from(e: Element) -> u32 {
        e.0
    }
}

impl Element {
    /// Wraps a 1-based value. Zero is not an element of any domain.
    pub fn new(value: u32) -> Result<Self, ModelError> {
        if value == 0 {
            return Err(ModelError::ZeroElement);
        }
        Ok(Element(value))
    }

    /// Element with 0-based index `code`.
    pub fn from_code(code: u32) -> Self {
        Element(code + 1)
    }

    pub fn value(self) -> u32 {
        self.0
    }

    /// 0-based index, the internal encoding used by tables and circuits.
    pub fn code(self) -> u32 {
        self.0 - 1
    }

    pub fn in_domain(self, n: u32) -> bool {
        (self.0 as u64) <= domain_size(n) as u64
    }

    /// Flattens `(first, second)` of `[2^hi] × [2^lo]` into `[2^(hi+lo)]`, first coordinate in the high bits.
    pub fn pair(first: Element, second: Element, lo_width: u32) -> Element {
        Element::from_code((first.code() << lo_width) | second.code())
    }

    /// Inverse of [`Element::pair`].
    pub fn unpair(self, lo_width: u32) -> (Element, Element) {
        let mask = (1u32 << lo_width) - 1;
        (
            Element::from_code(self.code() >> lo_width),
            Element::from_code(self.code() & mask),
        )
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn domain_size(n: u32) -> usize {
    1usize << n
}

/// All elements of `[2^n]` in ascending order.
pub fn domain(n: u32) -> impl DoubleEndedIterator<Item = Element> + ExactSizeIterator + Clone {
    (0..domain_size(n) as u32).map(Element::from_code)
}

pub fn check_exhaustive(n: u32) -> Result<(), ModelError> {
    if n > MAX_EXHAUSTIVE_N {
        return Err(ModelError::DomainTooLarge {
            n,
            max: MAX_EXHAUSTIVE_N,
        });
    }
    Ok(())
}

/// An ordered, duplicate-free subset of `[2^n]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FiniteSet {
    n: u32,
    members: BTreeSet<Element>,
}

impl FiniteSet {
    pub fn empty(n: u32) -> Self {
        FiniteSet {
            n,
            members: BTreeSet::new(),
        }
    }

    pub fn full(n: u32) -> Self {
        FiniteSet {
            n,
            members: domain(n).collect(),
        }
    }

    pub fn from_elements(
        n: u32,
        elements: impl IntoIterator<Item = Element>,
    ) -> Result<Self, ModelError> {
        let mut members = BTreeSet::new();
        for e in elements {
            if !e.in_domain(n) {
                return Err(ModelError::OutOfDomain { value: e.value(), n });
            }
            members.insert(e);
        }
        Ok(FiniteSet { n, members })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, e: Element) -> bool {
        self.members.contains(&e)
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = Element> + '_ {
        self.members.iter().copied()
    }

    pub fn min(&self) -> Option<Element> {
        self.members.first().copied()
    }

    pub fn insert(&mut self, e: Element) -> bool {
        debug_assert!(e.in_domain(self.n));
        self.members.insert(e)
    }

    pub fn remove(&mut self, e: Element) -> bool {
        self.members.remove(&e)
    }

    pub fn is_subset(&self, other: &FiniteSet) -> bool {
        self.members.is_subset(&other.members)
    }

    pub fn difference(&self, other: &FiniteSet) -> FiniteSet {
        FiniteSet {
            n: self.n,
            members: self.members.difference(&other.members).copied().collect(),
        }
    }

    pub fn to_vec(&self) -> Vec<Element> {
        self.iter().collect()
    }

    /// `X \ {f(ξ_0), …, f(ξ_k)}` for a unary self-map `f` on the set's domain.
    pub fn unfilled(&self, points: &[Element], f: &EvaluableMap) -> Result<FiniteSet, ModelError> {
        f.expect_unary_self_map(self.n)?;
        let mut out = self.clone();
        for &p in points {
            if !p.in_domain(self.n) {
                return Err(ModelError::OutOfDomain { value: p.value(), n: self.n });
            }
            out.members.remove(&f.apply(p));
        }
        Ok(out)
    }

    /// The `kappa` smallest members, `X[κ]`.
    pub fn k_smallest(&self, kappa: usize) -> Result<FiniteSet, ModelError> {
        if kappa > self.len() {
            return Err(ModelError::KappaTooLarge {
                kappa,
                size: self.len(),
            });
        }
        Ok(FiniteSet {
            n: self.n,
            members: self.members.iter().take(kappa).copied().collect(),
        })
    }
}

impl<'a> IntoIterator for &'a FiniteSet {
    type Item = &'a Element;
    type IntoIter = std::collections::btree_set::Iter<'a, Element>;

    fn into_iter(self) -> Self::IntoIter {
        self.members.iter()
    }
}

/// `f` applied `t` times to `x0`.
pub fn iterate_from(f: &EvaluableMap, x0: Element, t: usize) -> Result<Element, ModelError> {
    let n = f.signature().in_width;
    f.expect_unary_self_map(n)?;
    if !x0.in_domain(n) {
        return Err(ModelError::OutOfDomain { value: x0.value(), n });
    }
    let mut x = x0;
    for _ in 0..t {
        x = f.apply(x);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: u32, vals: &[u32]) -> FiniteSet {
        FiniteSet::from_elements(n, vals.iter().map(|&v| Element::new(v).unwrap())).unwrap()
    }

    fn vals(s: &FiniteSet) -> Vec<u32> {
        s.iter().map(Element::value).collect()
    }

    #[test]
    fn zero_does_not_deserialize() {
        assert!(serde_json::from_str::<Element>("0").is_err());
        assert_eq!(serde_json::from_str::<Element>("3").unwrap(), Element::new(3).unwrap());
        assert_eq!(serde_json::to_string(&Element::new(3).unwrap()).unwrap(), "3");
    }

    #[test]
    fn unfilled_identity_removes_images() {
        let id = EvaluableMap::identity(2);
        let x = set(2, &[1, 2, 3, 4]);
        let pts = [Element::new(1).unwrap(), Element::new(2).unwrap()];
        assert_eq!(vals(&x.unfilled(&pts, &id).unwrap()), vec![3, 4]);
    }

    #[test]
    fn unfilled_constant_map() {
        let two = EvaluableMap::constant(2, Element::new(2).unwrap());
        let x = set(2, &[1, 2, 3]);
        assert_eq!(vals(&x.unfilled(&[Element::new(1).unwrap()], &two).unwrap()), vec![1, 3]);
        assert_eq!(vals(&set(2, &[1, 2]).unfilled(&[], &two).unwrap()), vec![1, 2]);
    }

    #[test]
    fn unfilled_rejects_foreign_domain() {
        let id = EvaluableMap::identity(3);
        assert!(set(2, &[1]).unfilled(&[], &id).is_err());
    }

    #[test]
    fn k_smallest_cases() {
        assert_eq!(vals(&set(4, &[5, 2, 9]).k_smallest(2).unwrap()), vec![2, 5]);
        assert_eq!(vals(&set(2, &[1, 2, 3]).k_smallest(3).unwrap()), vec![1, 2, 3]);
        assert!(set(3, &[4, 7]).k_smallest(0).unwrap().is_empty());
        assert!(matches!(
            set(3, &[4, 7]).k_smallest(3),
            Err(ModelError::KappaTooLarge { kappa: 3, size: 2 })
        ));
    }

    #[test]
    fn iterate_cycle_and_fixed_point() {
        let cyc = EvaluableMap::unary_from_values(2, 2, &[2, 3, 4, 1]).unwrap();
        let one = Element::new(1).unwrap();
        assert_eq!(iterate_from(&cyc, one, 3).unwrap().value(), 4);
        assert_eq!(iterate_from(&cyc, one, 0).unwrap(), one);
        let id = EvaluableMap::identity(2);
        assert_eq!(iterate_from(&id, Element::new(3).unwrap(), 100).unwrap().value(), 3);
    }

    #[test]
    fn pair_flattening_puts_first_coordinate_high() {
        let a = Element::new(2).unwrap();
        let b = Element::new(3).unwrap();
        let p = Element::pair(a, b, 2);
        assert_eq!(p.value(), 4 + 3);
        assert_eq!(p.unpair(2), (a, b));
    }

    #[test]
    fn zero_is_not_an_element() {
        assert!(Element::new(0).is_err());
        assert!(!Element::new(5).unwrap().in_domain(2));
    }
}
