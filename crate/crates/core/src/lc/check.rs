//! The six-clause solution detector run on a short sequence of elements.

use crate::model::Element;
use crate::problems::{QuotientPigeonInstance, SolutionCertificate};

/// Runs the six solution tests in order over the elements of `seq` and returns the first
/// certificate found. Pairs are ordered pairs of distinct positions.
pub fn check_solutions(seq: &[Element], inst: &QuotientPigeonInstance) -> Option<SolutionCertificate> {
    let rel = |a: Element, b: Element| inst.related(a, b);
    let img: Vec<Element> = seq.iter().map(|&x| inst.image(x)).collect();
    let pairs = || {
        (0..seq.len()).flat_map(move |i| (0..seq.len()).filter(move |&j| j != i).map(move |j| (i, j)))
    };
    if let Some((i, j)) = pairs().find(|&(i, j)| !rel(seq[i], seq[j]) && rel(img[i], img[j])) {
        return Some(SolutionCertificate::QpType1 { x: seq[i], y: seq[j] });
    }
    if let Some(i) = (0..seq.len()).find(|&i| rel(img[i], inst.v_star())) {
        return Some(SolutionCertificate::QpType2 { x: seq[i] });
    }
    if let Some((i, j)) = pairs().find(|&(i, j)| rel(seq[i], seq[j]) && !rel(img[i], img[j])) {
        return Some(SolutionCertificate::QpType3 { x: seq[i], y: seq[j] });
    }
    if let Some(&x) = seq.iter().find(|&&x| !rel(x, x)) {
        return Some(SolutionCertificate::QpType4 { x });
    }
    if let Some((i, j)) = pairs().find(|&(i, j)| rel(seq[i], seq[j]) != rel(seq[j], seq[i])) {
        return Some(SolutionCertificate::QpType5 { x: seq[i], y: seq[j] });
    }
    for &x in seq {
        for &y in seq {
            for &z in seq {
                if x != y && y != z && x != z && rel(x, y) && rel(y, z) && !rel(x, z) {
                    return Some(SolutionCertificate::QpType6 { x, y, z });
                }
            }
        }
    }
    None
}

/// The tests exactly as the printed algorithm states them: its first clause asks for related
/// inputs and its fifth for equal `E` values. Returns the 1-based index of the first clause that fires.
pub fn check_solutions_as_printed(seq: &[Element], inst: &QuotientPigeonInstance) -> Option<u8> {
    let rel = |a: Element, b: Element| inst.related(a, b);
    let img: Vec<Element> = seq.iter().map(|&x| inst.image(x)).collect();
    let pairs: Vec<(usize, usize)> = (0..seq.len())
        .flat_map(|i| (0..seq.len()).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let any_pair = |p: &dyn Fn(usize, usize) -> bool| pairs.iter().any(|&(i, j)| p(i, j));
    if any_pair(&|i, j| rel(seq[i], seq[j]) && rel(img[i], img[j])) {
        return Some(1);
    }
    if img.iter().any(|&c| rel(c, inst.v_star())) {
        return Some(2);
    }
    if any_pair(&|i, j| rel(seq[i], seq[j]) && !rel(img[i], img[j])) {
        return Some(3);
    }
    if seq.iter().any(|&x| !rel(x, x)) {
        return Some(4);
    }
    if any_pair(&|i, j| rel(seq[i], seq[j]) == rel(seq[j], seq[i])) {
        return Some(5);
    }
    let six = seq.iter().any(|&x| {
        seq.iter().any(|&y| {
            seq.iter()
                .any(|&z| x != y && y != z && x != z && rel(x, y) && rel(y, z) && !rel(x, z))
        })
    });
    six.then_some(6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EvaluableMap, Signature};
    use crate::problems::verify_solution;

    fn el(v: u32) -> Element {
        Element::new(v).unwrap()
    }

    fn seq(v: &[u32]) -> Vec<Element> {
        v.iter().map(|&x| el(x)).collect()
    }

    #[test]
    fn equality_injective_sequence_is_clean() {
        let c = EvaluableMap::unary_from_values(3, 3, &[2, 3, 4, 5, 6, 7, 8, 2]).unwrap();
        let inst = QuotientPigeonInstance::new(3, c, EvaluableMap::equality(3), el(1)).unwrap();
        assert_eq!(check_solutions(&seq(&[1, 2, 3, 4]), &inst), None);
        // 1 and 8 collide on 2.
        assert_eq!(
            check_solutions(&seq(&[1, 2, 8]), &inst),
            Some(SolutionCertificate::QpType1 { x: el(1), y: el(8) })
        );
        // Printed clause 5 fires on any pair once E is symmetric.
        assert_eq!(check_solutions_as_printed(&seq(&[1, 2, 3, 4]), &inst), Some(5));
    }

    #[test]
    fn clause_two_and_four() {
        let c = EvaluableMap::unary_from_values(2, 2, &[2, 3, 1, 4]).unwrap();
        let inst = QuotientPigeonInstance::new(2, c, EvaluableMap::equality(2), el(1)).unwrap();
        let got = check_solutions(&seq(&[2, 3]), &inst).unwrap();
        assert_eq!(got, SolutionCertificate::QpType2 { x: el(3) });
        assert!(verify_solution(&inst.clone().into(), &got).unwrap().is_accept());

        let zero = EvaluableMap::tabulate(Signature::predicate(2, 2), |_| 0).unwrap();
        let c = EvaluableMap::unary_from_values(2, 2, &[2, 3, 4, 1]).unwrap();
        let inst = QuotientPigeonInstance::new(2, c, zero, el(1)).unwrap();
        assert_eq!(check_solutions(&seq(&[3, 1]), &inst), Some(SolutionCertificate::QpType4 { x: el(3) }));
    }
}
