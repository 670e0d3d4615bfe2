//! Private verification of tabular-expression designs.
//!
//! A developer encrypts a table graph as universal-circuit programs under a
//! homomorphic scheme; a verifier drives test inputs through the encrypted
//! graph and compares against a public specification. Every session yields a
//! certificate that third parties can replay.

pub mod audit;
pub mod bitstr;
pub mod circuit;
pub mod commitment;
pub mod demo;
pub mod he;
pub mod protocol;
pub mod simharness;
pub mod symcrypto;
pub mod table;
pub mod vga;

pub use table::{
    parse_graph, transform, evaluate_plain, consistent_order, OutputValue, TableGraph, TaggedValue,
    TransformedGraph, StructureGraph, Value, Ty,
};
