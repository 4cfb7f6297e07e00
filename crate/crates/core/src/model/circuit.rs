//! Gate-level Boolean circuits over the basis {AND, OR, NOT, XOR, CONST0, CONST1}.
//!
//! Node ids `0..input_count` are the input bits; gate `g` is node `input_count + g`.
//! Every operand refers to a strictly smaller node id, so the gate list is a
//! topological order by construction. Multi-bit values are little-endian:
//! bit `t` of a value is node `outputs[t]` (or input `t`).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Gate {
    And { a: usize, b: usize },
    Or { a: usize, b: usize },
    Xor { a: usize, b: usize },
    Not { a: usize },
    Const0,
    Const1,
}

impl Gate {
    fn operands(&self) -> impl Iterator<Item = usize> {
        let (a, b) = match *self {
            Gate::And { a, b } | Gate::Or { a, b } | Gate::Xor { a, b } => (Some(a), Some(b)),
            Gate::Not { a } => (Some(a), None),
            Gate::Const0 | Gate::Const1 => (None, None),
        };
        a.into_iter().chain(b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    inputs: usize,
    gates: Vec<Gate>,
    outputs: Vec<usize>,
}

impl Circuit {
    pub fn new(inputs: usize, gates: Vec<Gate>, outputs: Vec<usize>) -> Result<Self, ModelError> {
        for (g, gate) in gates.iter().enumerate() {
            let id = inputs + g;
            if let Some(bad) = gate.operands().find(|&op| op >= id) {
                return Err(ModelError::CyclicGate { gate: id, operand: bad });
            }
        }
        let nodes = inputs + gates.len();
        if let Some(&bad) = outputs.iter().find(|&&o| o >= nodes) {
            return Err(ModelError::BadOutput { node: bad, nodes });
        }
        Ok(Circuit {
            inputs,
            gates,
            outputs,
        })
    }

    pub fn input_count(&self) -> usize {
        self.inputs
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    /// Evaluates on the little-endian input word `input`, returning the little-endian output word.
    pub fn eval_word(&self, input: u64) -> u64 {
        let mut val = Vec::with_capacity(self.inputs + self.gates.len());
        val.extend((0..self.inputs).map(|t| (input >> t) & 1 == 1));
        for gate in &self.gates {
            let v = match *gate {
                Gate::And { a, b } => val[a] & val[b],
                Gate::Or { a, b } => val[a] | val[b],
                Gate::Xor { a, b } => val[a] ^ val[b],
                Gate::Not { a } => !val[a],
                Gate::Const0 => false,
                Gate::Const1 => true,
            };
            val.push(v);
        }
        self.outputs
            .iter()
            .enumerate()
            .fold(0u64, |acc, (t, &o)| acc | ((val[o] as u64) << t))
    }

    /// Re-checks the acyclicity invariant; used by property tests on synthesized circuits.
    pub fn is_acyclic(&self) -> bool {
        self.gates
            .iter()
            .enumerate()
            .all(|(g, gate)| gate.operands().all(|op| op < self.inputs + g))
            && self.outputs.iter().all(|&o| o < self.inputs + self.gates.len())
    }
}

/// Incremental circuit construction with constant folding and structural hashing.
#[derive(Debug)]
pub struct CircuitBuilder {
    inputs: usize,
    gates: Vec<Gate>,
    cache: HashMap<Gate, usize>,
}

impl CircuitBuilder {
    pub fn new(inputs: usize) -> Self {
        CircuitBuilder {
            inputs,
            gates: Vec::new(),
            cache: HashMap::new(),
        }
    }

    pub fn input(&self, t: usize) -> usize {
        assert!(t < self.inputs, "input {t} out of range");
        t
    }

    pub fn inputs(&self, range: std::ops::Range<usize>) -> Vec<usize> {
        range.map(|t| self.input(t)).collect()
    }

    fn push(&mut self, gate: Gate) -> usize {
        if let Some(&id) = self.cache.get(&gate) {
            return id;
        }
        let id = self.inputs + self.gates.len();
        self.gates.push(gate);
        self.cache.insert(gate, id);
        id
    }

    fn const_of(&self, node: usize) -> Option<bool> {
        node.checked_sub(self.inputs)
            .and_then(|g| match self.gates[g] {
                Gate::Const0 => Some(false),
                Gate::Const1 => Some(true),
                _ => None,
            })
    }

    pub fn constant(&mut self, bit: bool) -> usize {
        self.push(if bit { Gate::Const1 } else { Gate::Const0 })
    }

    pub fn not(&mut self, a: usize) -> usize {
        match self.const_of(a) {
            Some(c) => self.constant(!c),
            None => self.push(Gate::Not { a }),
        }
    }

    pub fn and(&mut self, a: usize, b: usize) -> usize {
        match (self.const_of(a), self.const_of(b)) {
            (Some(false), _) | (_, Some(false)) => self.constant(false),
            (Some(true), _) => b,
            (_, Some(true)) => a,
            _ if a == b => a,
            _ => self.push(Gate::And { a: a.min(b), b: a.max(b) }),
        }
    }

    pub fn or(&mut self, a: usize, b: usize) -> usize {
        match (self.const_of(a), self.const_of(b)) {
            (Some(true), _) | (_, Some(true)) => self.constant(true),
            (Some(false), _) => b,
            (_, Some(false)) => a,
            _ if a == b => a,
            _ => self.push(Gate::Or { a: a.min(b), b: a.max(b) }),
        }
    }

    pub fn xor(&mut self, a: usize, b: usize) -> usize {
        match (self.const_of(a), self.const_of(b)) {
            (Some(x), Some(y)) => self.constant(x ^ y),
            (Some(false), _) => b,
            (_, Some(false)) => a,
            (Some(true), _) => self.not(b),
            (_, Some(true)) => self.not(a),
            _ if a == b => self.constant(false),
            _ => self.push(Gate::Xor { a: a.min(b), b: a.max(b) }),
        }
    }

    /// `sel ? a : b`
    pub fn mux(&mut self, sel: usize, a: usize, b: usize) -> usize {
        if a == b {
            return a;
        }
        match self.const_of(sel) {
            Some(true) => a,
            Some(false) => b,
            None => {
                let hi = self.and(sel, a);
                let nsel = self.not(sel);
                let lo = self.and(nsel, b);
                self.or(hi, lo)
            }
        }
    }

    /// Bitwise equality of two equal-length words.
    pub fn equal(&mut self, x: &[usize], y: &[usize]) -> usize {
        assert_eq!(x.len(), y.len());
        let mut acc = self.constant(true);
        for (&a, &b) in x.iter().zip(y) {
            let d = self.xor(a, b);
            let same = self.not(d);
            acc = self.and(acc, same);
        }
        acc
    }

    /// Unsigned `x ≤ y` on little-endian words.
    pub fn leq(&mut self, x: &[usize], y: &[usize]) -> usize {
        assert_eq!(x.len(), y.len());
        // Scan from the least significant bit: at bit t, x ≤ y on bits 0..=t iff
        // (x_t < y_t) or (x_t == y_t and x ≤ y on bits 0..t).
        let mut acc = self.constant(true);
        for (&a, &b) in x.iter().zip(y) {
            let na = self.not(a);
            let lt = self.and(na, b);
            let d = self.xor(a, b);
            let eq = self.not(d);
            let keep = self.and(eq, acc);
            acc = self.or(lt, keep);
        }
        acc
    }

    /// Copies `circuit` into this builder with its inputs wired to `wires`; returns its outputs.
    pub fn embed(&mut self, circuit: &Circuit, wires: &[usize]) -> Vec<usize> {
        assert_eq!(wires.len(), circuit.inputs, "embed arity mismatch");
        let mut map: Vec<usize> = wires.to_vec();
        for gate in &circuit.gates {
            let id = match *gate {
                Gate::And { a, b } => self.and(map[a], map[b]),
                Gate::Or { a, b } => self.or(map[a], map[b]),
                Gate::Xor { a, b } => self.xor(map[a], map[b]),
                Gate::Not { a } => self.not(map[a]),
                Gate::Const0 => self.constant(false),
                Gate::Const1 => self.constant(true),
            };
            map.push(id);
        }
        circuit.outputs.iter().map(|&o| map[o]).collect()
    }

    pub fn finish(self, outputs: Vec<usize>) -> Circuit {
        Circuit::new(self.inputs, self.gates, outputs).expect("builder emits acyclic circuits")
    }
}

/// Gate-level constructions used by reductions that synthesize new maps.
#[derive(Clone, Debug)]
pub enum Construction {
    /// `outer ∘ inner`. At most `|inner| + |outer|` gates.
    Compose { outer: Circuit, inner: Circuit },
    /// `x ↦ (first(x), second(x))`, first in the high bits. At most `|first| + |second|` gates.
    Pair { first: Circuit, second: Circuit },
    /// `cond(x) ? then(x) : otherwise(x)`. At most `|cond| + |then| + |otherwise| + 3·w + 1` gates.
    Select {
        cond: Circuit,
        then: Circuit,
        otherwise: Circuit,
    },
    /// `[x = y]` for two `width`-bit words, `x` in the high bits. At most `3·width + 1` gates.
    Equality { width: usize },
    /// `(b, x) ↦ (1 − b, inner(x))`, `b` the high input bit. At most `|inner| + 1` gates.
    PrependFlippedBit { inner: Circuit },
    /// The constant `value` on `width` output bits. At most 2 gates.
    Constant {
        inputs: usize,
        width: usize,
        value: u64,
    },
    /// `[x ≤ y]` for two `width`-bit words, `x` in the high bits. At most `6·width + 1` gates.
    CompareLeq { width: usize },
}

impl Construction {
    /// Documented gate-count bound for the synthesized circuit.
    pub fn gate_bound(&self) -> usize {
        match self {
            Construction::Compose { outer, inner } => outer.gate_count() + inner.gate_count(),
            Construction::Pair { first, second } => first.gate_count() + second.gate_count(),
            Construction::Select {
                cond,
                then,
                otherwise,
            } => cond.gate_count() + then.gate_count() + otherwise.gate_count() + 3 * then.output_count() + 1,
            Construction::Equality { width } => 3 * width + 1,
            Construction::PrependFlippedBit { inner } => inner.gate_count() + 1,
            Construction::Constant { .. } => 2,
            Construction::CompareLeq { width } => 6 * width + 1,
        }
    }
}

pub fn synthesize(spec: &Construction) -> Result<Circuit, ModelError> {
    match spec {
        Construction::Compose { outer, inner } => {
            if inner.output_count() != outer.input_count() {
                return Err(ModelError::WidthMismatch {
                    expected: outer.input_count(),
                    found: inner.output_count(),
                });
            }
            let mut b = CircuitBuilder::new(inner.input_count());
            let ins = b.inputs(0..inner.input_count());
            let mid = b.embed(inner, &ins);
            let out = b.embed(outer, &mid);
            Ok(b.finish(out))
        }
        Construction::Pair { first, second } => {
            same_inputs(first, second)?;
            let mut b = CircuitBuilder::new(first.input_count());
            let ins = b.inputs(0..first.input_count());
            let mut out = b.embed(second, &ins);
            out.extend(b.embed(first, &ins));
            Ok(b.finish(out))
        }
        Construction::Select {
            cond,
            then,
            otherwise,
        } => {
            same_inputs(cond, then)?;
            same_inputs(then, otherwise)?;
            if cond.output_count() != 1 {
                return Err(ModelError::WidthMismatch {
                    expected: 1,
                    found: cond.output_count(),
                });
            }
            if then.output_count() != otherwise.output_count() {
                return Err(ModelError::WidthMismatch {
                    expected: then.output_count(),
                    found: otherwise.output_count(),
                });
            }
            let mut b = CircuitBuilder::new(cond.input_count());
            let ins = b.inputs(0..cond.input_count());
            let c = b.embed(cond, &ins)[0];
            let t = b.embed(then, &ins);
            let o = b.embed(otherwise, &ins);
            let out = t.iter().zip(&o).map(|(&x, &y)| b.mux(c, x, y)).collect();
            Ok(b.finish(out))
        }
        Construction::Equality { width } => {
            let mut b = CircuitBuilder::new(2 * width);
            let y = b.inputs(0..*width);
            let x = b.inputs(*width..2 * width);
            let eq = b.equal(&x, &y);
            Ok(b.finish(vec![eq]))
        }
        Construction::PrependFlippedBit { inner } => {
            let w = inner.input_count();
            let mut b = CircuitBuilder::new(w + 1);
            let x = b.inputs(0..w);
            let mut out = b.embed(inner, &x);
            let hi = b.input(w);
            let flipped = b.not(hi);
            out.push(flipped);
            Ok(b.finish(out))
        }
        Construction::Constant {
            inputs,
            width,
            value,
        } => {
            let mut b = CircuitBuilder::new(*inputs);
            let out = (0..*width).map(|t| b.constant((value >> t) & 1 == 1)).collect();
            Ok(b.finish(out))
        }
        Construction::CompareLeq { width } => {
            let mut b = CircuitBuilder::new(2 * width);
            let y = b.inputs(0..*width);
            let x = b.inputs(*width..2 * width);
            let le = b.leq(&x, &y);
            Ok(b.finish(vec![le]))
        }
    }
}

fn same_inputs(a: &Circuit, b: &Circuit) -> Result<(), ModelError> {
    if a.input_count() != b.input_count() {
        return Err(ModelError::WidthMismatch {
            expected: a.input_count(),
            found: b.input_count(),
        });
    }
    Ok(())
}

/// Shannon-expansion circuit for a truth table of `inputs` bits and `width` output bits.
/// Identical sub-tables share one node.
pub fn circuit_from_table(inputs: usize, width: usize, table: &[u32]) -> Circuit {
    assert_eq!(table.len(), 1usize << inputs);
    let mut b = CircuitBuilder::new(inputs);
    let mut memo: HashMap<Vec<bool>, usize> = HashMap::new();
    let mut out = Vec::with_capacity(width);
    for t in 0..width {
        let bits: Vec<bool> = table.iter().map(|&v| (v >> t) & 1 == 1).collect();
        out.push(expand(&mut b, &mut memo, &bits, inputs));
    }
    b.finish(out)
}

/// `bits` is the truth table over the low `vars` inputs.
fn expand(
    b: &mut CircuitBuilder,
    memo: &mut HashMap<Vec<bool>, usize>,
    bits: &[bool],
    vars: usize,
) -> usize {
    if bits.iter().all(|&x| x) {
        return b.constant(true);
    }
    if bits.iter().all(|&x| !x) {
        return b.constant(false);
    }
    if let Some(&id) = memo.get(bits) {
        return id;
    }
    let half = bits.len() / 2;
    let lo = expand(b, memo, &bits[..half], vars - 1);
    let hi = expand(b, memo, &bits[half..], vars - 1);
    let sel = b.input(vars - 1);
    let id = b.mux(sel, hi, lo);
    memo.insert(bits.to_vec(), id);
    id
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_table(seed: u64, inputs: usize, width: usize) -> Vec<u32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..1usize << inputs).map(|_| rng.random_range(0..1u32 << width)).collect()
    }

    #[test]
    fn rejects_forward_references() {
        let err = Circuit::new(1, vec![Gate::Not { a: 1 }], vec![1]).unwrap_err();
        assert!(matches!(err, ModelError::CyclicGate { gate: 1, operand: 1 }));
        assert!(Circuit::new(1, vec![], vec![3]).is_err());
    }

    #[test]
    fn equality_is_reflexive_and_exact() {
        let eq = synthesize(&Construction::Equality { width: 2 }).unwrap();
        for x in 0..4u64 {
            for y in 0..4u64 {
                assert_eq!(eq.eval_word((x << 2) | y), (x == y) as u64);
            }
        }
        assert!(eq.gate_count() <= Construction::Equality { width: 2 }.gate_bound());
    }

    #[test]
    fn compare_leq_matches_integers() {
        for w in 1..=4usize {
            let spec = Construction::CompareLeq { width: w };
            let c = synthesize(&spec).unwrap();
            assert!(c.gate_count() <= spec.gate_bound());
            for x in 0..1u64 << w {
                for y in 0..1u64 << w {
                    assert_eq!(c.eval_word((x << w) | y), (x <= y) as u64, "w={w} x={x} y={y}");
                }
            }
        }
    }

    #[test]
    fn select_with_false_condition_is_else_branch() {
        let cond = synthesize(&Construction::Constant { inputs: 3, width: 1, value: 0 }).unwrap();
        let a = circuit_from_table(3, 3, &random_table(1, 3, 3));
        let other = random_table(2, 3, 3);
        let b = circuit_from_table(3, 3, &other);
        let spec = Construction::Select { cond, then: a, otherwise: b };
        let sel = synthesize(&spec).unwrap();
        assert!(sel.gate_count() <= spec.gate_bound());
        for x in 0..8u64 {
            assert_eq!(sel.eval_word(x), other[x as usize] as u64);
        }
    }

    #[test]
    fn compose_agrees_with_table_composition() {
        let f = random_table(3, 3, 3);
        let g = random_table(4, 3, 3);
        let spec = Construction::Compose {
            outer: circuit_from_table(3, 3, &g),
            inner: circuit_from_table(3, 3, &f),
        };
        let c = synthesize(&spec).unwrap();
        assert!(c.gate_count() <= spec.gate_bound());
        for x in 0..8usize {
            assert_eq!(c.eval_word(x as u64), g[f[x] as usize] as u64);
        }
    }

    #[test]
    fn pair_and_prepend() {
        let f = random_table(5, 2, 2);
        let g = random_table(6, 2, 2);
        let pair = synthesize(&Construction::Pair {
            first: circuit_from_table(2, 2, &f),
            second: circuit_from_table(2, 2, &g),
        })
        .unwrap();
        let pre = synthesize(&Construction::PrependFlippedBit {
            inner: circuit_from_table(2, 2, &f),
        })
        .unwrap();
        for x in 0..4usize {
            assert_eq!(pair.eval_word(x as u64), ((f[x] << 2) | g[x]) as u64);
            for bit in 0..2u64 {
                let out = pre.eval_word((bit << 2) | x as u64);
                assert_eq!(out, ((1 - bit) << 2) | f[x] as u64);
            }
        }
    }

    #[test]
    fn width_mismatch_is_reported() {
        let a = circuit_from_table(2, 1, &[0, 1, 1, 0]);
        let b = circuit_from_table(3, 1, &[0; 8]);
        assert!(matches!(
            synthesize(&Construction::Pair { first: a.clone(), second: b.clone() }),
            Err(ModelError::WidthMismatch { .. })
        ));
        assert!(synthesize(&Construction::Compose { outer: b, inner: a }).is_err());
    }

    proptest! {
        #[test]
        fn table_circuits_agree_and_stay_acyclic(seed in any::<u64>(), inputs in 1usize..7, width in 1usize..4) {
            let t = random_table(seed, inputs, width);
            let c = circuit_from_table(inputs, width, &t);
            prop_assert!(c.is_acyclic());
            prop_assert!(c.gate_count() <= width * 3 * (1 << inputs));
            for x in 0..t.len() {
                prop_assert_eq!(c.eval_word(x as u64), t[x] as u64);
            }
        }
    }
}
