//! Element domains, evaluable maps with table and circuit backends, and the set operators.

mod circuit;
mod element;
mod map;

use thiserror::Error;

pub use circuit::{circuit_from_table, synthesize, Circuit, CircuitBuilder, Construction, Gate};
pub use element::{
    check_exhaustive, domain, domain_size, iterate_from, Element, FiniteSet, MAX_EXHAUSTIVE_N,
};
pub use map::{Codomain, EvaluableMap, Signature, MAX_TABLE_BITS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("0 is not an element; elements are 1-based")]
    ZeroElement,
    #[error("element {value} is outside [2^{n}]")]
    OutOfDomain { value: u32, n: u32 },
    #[error("n = {n} exceeds the exhaustive limit {max}")]
    DomainTooLarge { n: u32, max: u32 },
    #[error("expected {expected} arguments, got {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("expected {expected}, found {found}")]
    DomainMismatch { expected: String, found: String },
    #[error("width mismatch: expected {expected}, found {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("table length {found}, expected {expected}")]
    TableLength { expected: usize, found: usize },
    #[error("a table over {bits} input bits is too large")]
    TableTooLarge { bits: u32 },
    #[error("output value {value} does not fit out_width {out_width}")]
    OutputOutOfRange { value: u32, out_width: u32 },
    #[error("invalid signature: {0}")]
    BadSignature(String),
    #[error("gate {gate} reads node {operand}, which does not precede it")]
    CyclicGate { gate: usize, operand: usize },
    #[error("output node {node} out of range ({nodes} nodes)")]
    BadOutput { node: usize, nodes: usize },
    #[error("kappa {kappa} exceeds set size {size}")]
    KappaTooLarge { kappa: usize, size: usize },
    #[error("table and circuit disagree on flattened input {input}")]
    Incoherent { input: usize },
}
