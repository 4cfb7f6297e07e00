use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::circuit::{circuit_from_table, Circuit, Gate};
use super::{Element, ModelError};

/// Largest `arity · in_width` for which a dense table is built.
pub const MAX_TABLE_BITS: u32 = 24;

/// What a map's outputs mean: 1-based elements of `[2^out_width]`, or raw bits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Codomain {
    #[default]
    Element,
    Bit,
}

impl Codomain {
    fn is_element(&self) -> bool {
        *self == Codomain::Element
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    pub arity: usize,
    pub in_width: u32,
    pub out_width: u32,
    pub codomain: Codomain,
}

impl Signature {
    pub fn unary(n: u32, out_width: u32) -> Self {
        Signature {
            arity: 1,
            in_width: n,
            out_width,
            codomain: Codomain::Element,
        }
    }

    /// `([2^n])^arity → {0, 1}`
    pub fn predicate(n: u32, arity: usize) -> Self {
        Signature {
            arity,
            in_width: n,
            out_width: 1,
            codomain: Codomain::Bit,
        }
    }

    pub fn input_bits(&self) -> u32 {
        self.arity as u32 * self.in_width
    }

    pub fn table_len(&self) -> usize {
        1usize << self.input_bits()
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.codomain == Codomain::Bit && self.out_width != 1 {
            return Err(ModelError::BadSignature("bit codomain needs out_width 1".into()));
        }
        if self.out_width == 0 || self.out_width > 31 {
            return Err(ModelError::BadSignature(format!("out_width {}", self.out_width)));
        }
        if self.arity == 0 {
            return Err(ModelError::BadSignature("arity 0".into()));
        }
        Ok(())
    }

    fn code_to_value(&self, code: u32) -> u32 {
        match self.codomain {
            Codomain::Element => code + 1,
            Codomain::Bit => code,
        }
    }

    fn value_to_code(&self, value: u32) -> Result<u32, ModelError> {
        let code = match self.codomain {
            Codomain::Element => value.checked_sub(1),
            Codomain::Bit => Some(value),
        };
        match code {
            Some(c) if c < (1u32 << self.out_width) => Ok(c),
            _ => Err(ModelError::OutputOutOfRange {
                value,
                out_width: self.out_width,
            }),
        }
    }
}

type DerivedFn = dyn Fn(&[u32]) -> u32 + Send + Sync;

/// A map computed on demand by a named construction over other maps.
#[derive(Clone)]
pub struct Derived {
    name: String,
    func: Arc<DerivedFn>,
}

impl fmt::Debug for Derived {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Derived").field("name", &self.name).finish()
    }
}

#[derive(Clone, Debug)]
enum Backend {
    Table {
        table: Arc<[u32]>,
        circuit: Option<Arc<Circuit>>,
    },
    Circuit(Arc<Circuit>),
    Derived(Derived),
}

/// A total function between explicit finite domains.
///
/// Internally every argument and output is a 0-based code; [`EvaluableMap::eval`]
/// speaks the external 1-based (or bit) values.
#[derive(Clone, Debug)]
pub struct EvaluableMap {
    sig: Signature,
    backend: Backend,
}

impl EvaluableMap {
    /// Table of output codes indexed by the flattened argument tuple (first argument high).
    pub fn from_codes(sig: Signature, table: Vec<u32>) -> Result<Self, ModelError> {
        sig.validate()?;
        if sig.input_bits() > MAX_TABLE_BITS {
            return Err(ModelError::TableTooLarge { bits: sig.input_bits() });
        }
        if table.len() != sig.table_len() {
            return Err(ModelError::TableLength {
                expected: sig.table_len(),
                found: table.len(),
            });
        }
        if let Some(&bad) = table.iter().find(|&&c| c >= 1u32 << sig.out_width) {
            return Err(ModelError::OutputOutOfRange {
                value: sig.code_to_value(bad),
                out_width: sig.out_width,
            });
        }
        Ok(EvaluableMap {
            sig,
            backend: Backend::Table {
                table: table.into(),
                circuit: None,
            },
        })
    }

    /// Table of external values (1-based elements or bits).
    pub fn from_values(sig: Signature, values: &[u32]) -> Result<Self, ModelError> {
        let codes = values
            .iter()
            .map(|&v| sig.value_to_code(v))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_codes(sig, codes)
    }

    pub fn unary_from_values(n: u32, out_width: u32, values: &[u32]) -> Result<Self, ModelError> {
        Self::from_values(Signature::unary(n, out_width), values)
    }

    /// Tabulates `f` over the whole domain; `f` receives argument codes.
    pub fn tabulate(sig: Signature, f: impl Fn(&[u32]) -> u32) -> Result<Self, ModelError> {
        sig.validate()?;
        if sig.input_bits() > MAX_TABLE_BITS {
            return Err(ModelError::TableTooLarge { bits: sig.input_bits() });
        }
        let mut args = vec![0u32; sig.arity];
        let mask = (1u32 << sig.in_width) - 1;
        let table = (0..sig.table_len())
            .map(|flat| {
                for (i, a) in args.iter_mut().enumerate() {
                    let shift = sig.in_width as usize * (sig.arity - 1 - i);
                    *a = ((flat >> shift) as u32) & mask;
                }
                f(&args)
            })
            .collect();
        Self::from_codes(sig, table)
    }

    pub fn identity(n: u32) -> Self {
        Self::tabulate(Signature::unary(n, n), |a| a[0]).expect("identity within limits")
    }

    pub fn constant(n: u32, value: Element) -> Self {
        Self::tabulate(Signature::unary(n, n), |_| value.code()).expect("constant within limits")
    }

    /// `E(x, y) = [x = y]` on `[2^n]`.
    pub fn equality(n: u32) -> Self {
        Self::tabulate(Signature::predicate(n, 2), |a| (a[0] == a[1]) as u32)
            .expect("equality within limits")
    }

    pub fn from_circuit(sig: Signature, circuit: Circuit) -> Result<Self, ModelError> {
        sig.validate()?;
        check_circuit_shape(&sig, &circuit)?;
        Ok(EvaluableMap {
            sig,
            backend: Backend::Circuit(Arc::new(circuit)),
        })
    }

    pub fn derived(
        sig: Signature,
        name: impl Into<String>,
        func: impl Fn(&[u32]) -> u32 + Send + Sync + 'static,
    ) -> Result<Self, ModelError> {
        sig.validate()?;
        Ok(EvaluableMap {
            sig,
            backend: Backend::Derived(Derived {
                name: name.into(),
                func: Arc::new(func),
            }),
        })
    }

    /// Attaches a gate-level companion to a table-backed map. The table stays authoritative.
    pub fn with_circuit(self, circuit: Circuit) -> Result<Self, ModelError> {
        check_circuit_shape(&self.sig, &circuit)?;
        match self.backend {
            Backend::Table { table, .. } => Ok(EvaluableMap {
                sig: self.sig,
                backend: Backend::Table {
                    table,
                    circuit: Some(Arc::new(circuit)),
                },
            }),
            _ => Err(ModelError::BadSignature("circuit companion requires a table backend".into())),
        }
    }

    /// Attaches the Shannon-expansion circuit of this map's table.
    pub fn with_synthesized_circuit(self) -> Result<Self, ModelError> {
        let table = self.table().ok_or_else(|| ModelError::BadSignature("no table".into()))?;
        let circuit = circuit_from_table(
            self.sig.input_bits() as usize,
            self.sig.out_width as usize,
            table,
        );
        self.with_circuit(circuit)
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn backend_name(&self) -> &str {
        match &self.backend {
            Backend::Table { .. } => "table",
            Backend::Circuit(_) => "circuit",
            Backend::Derived(d) => &d.name,
        }
    }

    pub fn table(&self) -> Option<&[u32]> {
        match &self.backend {
            Backend::Table { table, .. } => Some(table),
            _ => None,
        }
    }

    pub fn circuit(&self) -> Option<&Circuit> {
        match &self.backend {
            Backend::Table { circuit, .. } => circuit.as_deref(),
            Backend::Circuit(c) => Some(c),
            Backend::Derived(_) => None,
        }
    }

    fn flat_index(&self, codes: &[u32]) -> usize {
        codes
            .iter()
            .fold(0usize, |acc, &c| (acc << self.sig.in_width) | c as usize)
    }

    /// Evaluates on argument codes, returning the output code. Arity and ranges are the caller's contract.
    pub fn eval_codes(&self, codes: &[u32]) -> u32 {
        debug_assert_eq!(codes.len(), self.sig.arity);
        match &self.backend {
            Backend::Table { table, .. } => table[self.flat_index(codes)],
            Backend::Circuit(c) => c.eval_word(self.flat_index(codes) as u64) as u32,
            Backend::Derived(d) => (d.func)(codes),
        }
    }

    /// Checked evaluation on external values; returns the external output value.
    pub fn eval(&self, args: &[Element]) -> Result<u32, ModelError> {
        if args.len() != self.sig.arity {
            return Err(ModelError::ArityMismatch {
                expected: self.sig.arity,
                found: args.len(),
            });
        }
        if let Some(bad) = args.iter().find(|a| !a.in_domain(self.sig.in_width)) {
            return Err(ModelError::OutOfDomain {
                value: bad.value(),
                n: self.sig.in_width,
            });
        }
        let codes: Vec<u32> = args.iter().map(|a| a.code()).collect();
        Ok(self.sig.code_to_value(self.eval_codes(&codes)))
    }

    /// Unary element-valued evaluation.
    pub fn apply(&self, x: Element) -> Element {
        debug_assert_eq!(self.sig.arity, 1);
        debug_assert_eq!(self.sig.codomain, Codomain::Element);
        Element::from_code(self.eval_codes(&[x.code()]))
    }

    /// Bit-valued evaluation.
    pub fn test(&self, args: &[Element]) -> bool {
        debug_assert_eq!(self.sig.codomain, Codomain::Bit);
        let codes: smallvec_codes::Codes = args.iter().map(|a| a.code()).collect();
        self.eval_codes(&codes) == 1
    }

    /// Binary relation `x ∼ y`, i.e. `E(x, y) = 1`.
    pub fn related(&self, x: Element, y: Element) -> bool {
        debug_assert_eq!(self.sig.arity, 2);
        self.eval_codes(&[x.code(), y.code()]) == 1
    }

    pub fn expect_unary_self_map(&self, n: u32) -> Result<(), ModelError> {
        let s = self.sig;
        if s.arity != 1 || s.in_width != n || s.out_width != n || s.codomain != Codomain::Element {
            return Err(ModelError::DomainMismatch {
                expected: format!("[2^{n}] -> [2^{n}]"),
                found: format!("{s:?}"),
            });
        }
        Ok(())
    }

    pub fn expect_signature(&self, expected: Signature) -> Result<(), ModelError> {
        if self.sig != expected {
            return Err(ModelError::DomainMismatch {
                expected: format!("{expected:?}"),
                found: format!("{:?}", self.sig),
            });
        }
        Ok(())
    }

    /// Converts any backend into a dense table.
    pub fn materialize(&self) -> Result<EvaluableMap, ModelError> {
        match &self.backend {
            Backend::Table { .. } => Ok(self.clone()),
            _ => Self::tabulate(self.sig, |codes| self.eval_codes(codes)),
        }
    }

    /// Exhaustively compares the table with its circuit companion, if any.
    /// Returns the first disagreeing flattened input.
    pub fn check_coherence(&self) -> Result<(), ModelError> {
        if let Backend::Table {
            table,
            circuit: Some(c),
        } = &self.backend
        {
            if let Some(i) = (0..table.len()).find(|&i| c.eval_word(i as u64) as u32 != table[i]) {
                return Err(ModelError::Incoherent { input: i });
            }
        }
        Ok(())
    }
}

fn check_circuit_shape(sig: &Signature, c: &Circuit) -> Result<(), ModelError> {
    if c.input_count() != sig.input_bits() as usize {
        return Err(ModelError::WidthMismatch {
            expected: sig.input_bits() as usize,
            found: c.input_count(),
        });
    }
    if c.output_count() != sig.out_width as usize {
        return Err(ModelError::WidthMismatch {
            expected: sig.out_width as usize,
            found: c.output_count(),
        });
    }
    Ok(())
}

impl PartialEq for EvaluableMap {
    fn eq(&self, other: &Self) -> bool {
        if self.sig != other.sig {
            return false;
        }
        match (&self.backend, &other.backend) {
            (Backend::Table { table: a, .. }, Backend::Table { table: b, .. }) => a == b,
            (Backend::Circuit(a), Backend::Circuit(b)) => a == b,
            (Backend::Derived(a), Backend::Derived(b)) => Arc::ptr_eq(&a.func, &b.func),
            _ => false,
        }
    }
}

mod smallvec_codes {
    /// Stack buffer for argument codes; predicates never exceed this arity at desk scale.
    pub struct Codes {
        buf: [u32; 16],
        len: usize,
    }

    impl FromIterator<u32> for Codes {
        fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
            let mut c = Codes { buf: [0; 16], len: 0 };
            for v in iter {
                c.buf[c.len] = v;
                c.len += 1;
            }
            c
        }
    }

    impl std::ops::Deref for Codes {
        type Target = [u32];
        fn deref(&self) -> &[u32] {
            &self.buf[..self.len]
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case", deny_unknown_fields)]
enum MapRepr {
    Table {
        arity: usize,
        in_width: u32,
        out_width: u32,
        #[serde(default, skip_serializing_if = "Codomain::is_element")]
        codomain: Codomain,
        table: Vec<u32>,
    },
    Circuit {
        arity: usize,
        in_width: u32,
        out_width: u32,
        #[serde(default, skip_serializing_if = "Codomain::is_element")]
        codomain: Codomain,
        inputs: usize,
        gates: Vec<Gate>,
        outputs: Vec<usize>,
    },
}

impl Serialize for EvaluableMap {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let s = self.sig;
        let repr = match &self.backend {
            Backend::Circuit(c) => MapRepr::Circuit {
                arity: s.arity,
                in_width: s.in_width,
                out_width: s.out_width,
                codomain: s.codomain,
                inputs: c.input_count(),
                gates: c.gates().to_vec(),
                outputs: c.outputs().to_vec(),
            },
            _ => {
                let m = self.materialize().map_err(serde::ser::Error::custom)?;
                MapRepr::Table {
                    arity: s.arity,
                    in_width: s.in_width,
                    out_width: s.out_width,
                    codomain: s.codomain,
                    table: m
                        .table()
                        .expect("materialized")
                        .iter()
                        .map(|&c| s.code_to_value(c))
                        .collect(),
                }
            }
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for EvaluableMap {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let map = match MapRepr::deserialize(deserializer)? {
            MapRepr::Table {
                arity,
                in_width,
                out_width,
                codomain,
                table,
            } => EvaluableMap::from_values(
                Signature {
                    arity,
                    in_width,
                    out_width,
                    codomain,
                },
                &table,
            ),
            MapRepr::Circuit {
                arity,
                in_width,
                out_width,
                codomain,
                inputs,
                gates,
                outputs,
            } => Circuit::new(inputs, gates, outputs).and_then(|c| {
                EvaluableMap::from_circuit(
                    Signature {
                        arity,
                        in_width,
                        out_width,
                        codomain,
                    },
                    c,
                )
            }),
        };
        map.map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::domain;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn el(v: u32) -> Element {
        Element::new(v).unwrap()
    }

    #[test]
    fn identity_and_constant_circuit() {
        assert_eq!(EvaluableMap::identity(2).eval(&[el(3)]).unwrap(), 3);
        let sig = Signature::unary(2, 2);
        let c = crate::model::synthesize(&crate::model::Construction::Constant {
            inputs: 2,
            width: 2,
            value: 0,
        })
        .unwrap();
        let one = EvaluableMap::from_circuit(sig, c).unwrap();
        assert_eq!(one.eval(&[el(4)]).unwrap(), 1);
    }

    #[test]
    fn random_table_circuit_agrees_on_every_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let values: Vec<u32> = (0..8).map(|_| rng.random_range(1..=8)).collect();
        let m = EvaluableMap::unary_from_values(3, 3, &values)
            .unwrap()
            .with_synthesized_circuit()
            .unwrap();
        m.check_coherence().unwrap();
        let circuit_only = EvaluableMap::from_circuit(m.signature(), m.circuit().unwrap().clone()).unwrap();
        for x in domain(3) {
            let direct = values[x.code() as usize];
            assert_eq!(m.eval(&[x]).unwrap(), direct);
            assert_eq!(circuit_only.eval(&[x]).unwrap(), direct);
        }
        assert_eq!(m.eval(&[el(5)]).unwrap(), values[4]);
    }

    #[test]
    fn eval_rejects_bad_arguments() {
        let id = EvaluableMap::identity(2);
        assert!(matches!(id.eval(&[]), Err(ModelError::ArityMismatch { expected: 1, found: 0 })));
        assert!(matches!(id.eval(&[el(5)]), Err(ModelError::OutOfDomain { value: 5, n: 2 })));
    }

    #[test]
    fn table_validation() {
        assert!(matches!(
            EvaluableMap::unary_from_values(2, 2, &[1, 2, 3]),
            Err(ModelError::TableLength { expected: 4, found: 3 })
        ));
        assert!(EvaluableMap::unary_from_values(2, 2, &[1, 2, 3, 5]).is_err());
        assert!(EvaluableMap::unary_from_values(2, 2, &[0, 1, 1, 1]).is_err());
    }

    #[test]
    fn binary_tables_put_first_argument_high() {
        let sig = Signature::predicate(2, 2);
        let m = EvaluableMap::tabulate(sig, |a| (a[0] < a[1]) as u32).unwrap();
        assert_eq!(m.eval(&[el(1), el(2)]).unwrap(), 1);
        assert_eq!(m.eval(&[el(2), el(1)]).unwrap(), 0);
        assert_eq!(m.table().unwrap()[1], 1);
    }

    #[test]
    fn serde_round_trip_table_and_circuit() {
        let e = EvaluableMap::equality(2);
        let json = serde_json::to_string(&e).unwrap();
        assert!(json.contains("\"codomain\":\"bit\""));
        let back: EvaluableMap = serde_json::from_str(&json).unwrap();
        assert_eq!(back, e);

        let f = EvaluableMap::unary_from_values(2, 2, &[2, 3, 4, 1]).unwrap();
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(json, r#"{"backend":"table","arity":1,"in_width":2,"out_width":2,"table":[2,3,4,1]}"#);

        let c = EvaluableMap::from_circuit(
            f.signature(),
            f.clone().with_synthesized_circuit().unwrap().circuit().unwrap().clone(),
        )
        .unwrap();
        let back: EvaluableMap = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        for x in domain(2) {
            assert_eq!(back.apply(x), f.apply(x));
        }
    }

    #[test]
    fn derived_maps_serialize_as_tables() {
        let d = EvaluableMap::derived(Signature::predicate(2, 2), "lt", |a| (a[0] < a[1]) as u32).unwrap();
        let back: EvaluableMap = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back.backend_name(), "table");
        assert!(back.test(&[el(1), el(3)]));
    }
}
