//! Verifier-side test generation: path enumeration over the public structure,
//! input sampling from the specification's domains, and coverage reports.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::protocol::{EncodeAnswer, InputResult, Inputs, QueryKind, Record};
use crate::table::{Domain, OutputValue, StructureGraph, TableGraph, TransformedGraph};

pub const DEFAULT_BUDGET: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VgaError {
    #[error("specification inputs {spec:?} differ from structure inputs {structure:?}")]
    Inputs { spec: Vec<String>, structure: Vec<String> },
}

/// Which generator produced the suite, with its deterministic parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VgaConfig {
    pub name: String,
    pub seed: u64,
    pub budget: usize,
}

impl VgaConfig {
    pub fn paths(seed: u64, budget: usize) -> VgaConfig {
        VgaConfig {
            name: "paths".into(),
            seed,
            budget,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suite {
    pub paths: Vec<Vec<usize>>,
    /// One input per path, same order.
    pub inputs: Vec<Inputs>,
}

/// Simple paths from a node reading an external input to a node feeding an
/// external output, in lexicographic node order, at most `budget` of them.
pub fn enumerate_paths(s: &StructureGraph, budget: usize) -> Vec<Vec<usize>> {
    fn walk(s: &StructureGraph, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>, budget: usize) {
        if out.len() >= budget {
            return;
        }
        let last = *path.last().expect("non-empty");
        if s.is_external_output(last) {
            out.push(path.clone());
        }
        for next in s.successors(last) {
            if !path.contains(&next) {
                path.push(next);
                walk(s, path, out, budget);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    for start in 0..s.len() {
        let reads_input = s.nodes[start]
            .ports
            .iter()
            .any(|p| matches!(p, crate::table::NodeSource::External(_)));
        if reads_input {
            walk(s, &mut vec![start], &mut out, budget);
        }
    }
    out
}

/// Product domain of the specification's external inputs, in the
/// structure's input order.
pub fn spec_domain(s: &StructureGraph, spec: &TableGraph) -> Result<(Vec<String>, Domain), VgaError> {
    let mut a: Vec<String> = s.inputs.iter().map(|i| i.name.clone()).collect();
    let mut b: Vec<String> = spec.inputs.iter().map(|i| i.name.clone()).collect();
    a.sort();
    b.sort();
    if a != b {
        return Err(VgaError::Inputs {
            spec: b,
            structure: a,
        });
    }
    let h = s.width / 2;
    let names: Vec<String> = s.inputs.iter().map(|i| i.name.clone()).collect();
    let dom = names
        .iter()
        .map(|n| spec.input(n).expect("checked").domain(h))
        .collect();
    Ok((names, Domain(dom)))
}

/// Deterministic suite: one uniform specification-domain sample per path.
pub fn generate_suite(
    s: &StructureGraph,
    spec: &TableGraph,
    seed: u64,
    budget: usize,
) -> Result<Suite, VgaError> {
    let (names, dom) = spec_domain(s, spec)?;
    let paths = enumerate_paths(s, budget);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let inputs = paths
        .iter()
        .map(|_| names.iter().cloned().zip(dom.sample(&mut rng)).collect())
        .collect();
    Ok(Suite { paths, inputs })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coverage {
    /// Some query for the table was answered ⊤.
    Covered,
    /// Queried, never ⊤.
    AntiCovered,
    Unreached,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub tables: BTreeMap<String, Coverage>,
}

impl CoverageReport {
    pub fn covered(&self) -> Vec<String> {
        self.with(Coverage::Covered)
    }

    pub fn with(&self, c: Coverage) -> Vec<String> {
        self.tables
            .iter()
            .filter(|(_, v)| **v == c)
            .map(|(k, _)| k.clone())
            .collect()
    }
}

pub fn coverage_report(s: &StructureGraph, records: &[Record]) -> CoverageReport {
    let mut cov = vec![Coverage::Unreached; s.len()];
    for r in records {
        if !matches!(r.query.kind, QueryKind::Q2 { .. }) || r.query.table >= s.len() {
            continue;
        }
        let c = &mut cov[r.query.table];
        match r.answer {
            EncodeAnswer::Top | EncodeAnswer::Payload(_) => *c = Coverage::Covered,
            EncodeAnswer::Bottom if *c == Coverage::Unreached => *c = Coverage::AntiCovered,
            _ => {}
        }
    }
    CoverageReport {
        tables: cov
            .into_iter()
            .enumerate()
            .map(|(i, c)| (TransformedGraph::node_name(i), c))
            .collect(),
    }
}

/// An input with its required outputs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub input: Inputs,
    pub output: BTreeMap<String, OutputValue>,
}

/// Whether some evaluated input equals each critical point's input and
/// produced exactly its outputs.
pub fn check_critical_points(cps: &[CriticalPoint], results: &[InputResult]) -> Vec<bool> {
    cps.iter()
        .map(|cp| {
            results
                .iter()
                .any(|r| r.input == cp.input && cp.output.iter().all(|(k, v)| r.outputs.get(k) == Some(v)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{parse_graph, transform};

    const DIAMOND: &str = "
        input a: int[0..9]
        output y
        table A { inputs: a: int; outputs: y: int; rows: [(a > 4, 1), (a <= 4, 2)] }
        table B { inputs: a: int; outputs: y: int; rows: [(true, a + 1)] }
        edges: Input.a -> A.a; A.y -> B.a; B.y -> Output.y
    ";

    #[test]
    fn paths_are_simple_and_end_at_sinks() {
        let g = parse_graph(DIAMOND).unwrap();
        let tg = transform(&g, 16).unwrap();
        let s = &tg.structure;
        let paths = enumerate_paths(s, 100);
        assert_eq!(paths, vec![vec![0, 2], vec![1, 2]]);
        assert_eq!(enumerate_paths(s, 1).len(), 1);
        assert!(enumerate_paths(s, 0).is_empty());
    }

    #[test]
    fn suite_is_deterministic_and_in_domain() {
        let g = parse_graph(DIAMOND).unwrap();
        let tg = transform(&g, 16).unwrap();
        let a = generate_suite(&tg.structure, &g, 7, 10).unwrap();
        assert_eq!(a, generate_suite(&tg.structure, &g, 7, 10).unwrap());
        for x in &a.inputs {
            assert!((0..=9).contains(&x["a"].as_int()));
        }
    }
}
