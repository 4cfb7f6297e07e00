//! Runtime checks of the key properties the reduction's correctness argument leans on.

use serde::{Deserialize, Serialize};

use super::beta::{has_linked_pair, BetaTrace};
use super::check::check_solutions;
use super::sets::{expected_unfilled, SetSystem};
use crate::problems::QuotientPigeonInstance;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub holds: bool,
    /// Number of individual conditions evaluated.
    pub checked: usize,
    /// Indices of the first violation.
    pub violation: Option<Vec<usize>>,
}

impl PropertyCheck {
    fn run(conditions: impl IntoIterator<Item = (Vec<usize>, bool)>) -> Self {
        let mut out = PropertyCheck {
            holds: true,
            ..Default::default()
        };
        for (at, ok) in conditions {
            out.checked += 1;
            if !ok {
                out.holds = false;
                out.violation = Some(at);
                break;
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeReport {
    /// CheckSolutions found nothing on the full `b` sequence, which is the case the argument covers.
    pub premise: bool,
    /// `C(b_j) ∈ B_i` for all `i < j`. `violation = [i, j]`.
    pub property1: PropertyCheck,
    /// `|Unfilled(B_i; b_0 … b_i; C)| = 2^{n−i} − 2` for `i ≤ n − 2`, at levels whose prefix CheckSolutions rejects.
    /// `violation = [i, actual, expected]`.
    pub property2: PropertyCheck,
    /// A linked pair in `b_0 … b_m` makes CheckSolutions succeed. `violation = [m]`.
    pub sub_procedure: PropertyCheck,
}

impl ProbeReport {
    /// Property (1) fails while its premise holds.
    pub fn property1_counterexample(&self) -> bool {
        self.premise && !self.property1.holds
    }
}

pub fn probe_key_properties(trace: &BetaTrace, sets: &SetSystem, inst: &QuotientPigeonInstance) -> ProbeReport {
    let b = &trace.outputs;
    let n = inst.n();
    let levels = sets.levels.len().min(b.len());
    let premise = check_solutions(b, inst).is_none();

    let property1 = PropertyCheck::run((0..levels).flat_map(|i| {
        (i + 1..b.len()).map(move |j| (vec![i, j], sets.levels[i].b.contains(inst.image(b[j]))))
    }));

    let property2 = PropertyCheck::run(
        (0..levels)
            .filter(|&i| i + 2 <= n as usize && check_solutions(&b[..=i], inst).is_none())
            .map(|i| {
                let actual = sets.levels[i].unfilled.len();
                let expected = expected_unfilled(n, i).expect("i < n");
                (vec![i, actual, expected], actual == expected)
            }),
    );

    let sub_procedure = PropertyCheck::run(
        (2..=b.len())
            .filter(|&m| has_linked_pair(inst, &b[..m]))
            .map(|m| (vec![m - 1], check_solutions(&b[..m], inst).is_some())),
    );

    ProbeReport {
        premise,
        property1,
        property2,
        sub_procedure,
    }
}
