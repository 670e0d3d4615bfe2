//! The bundled eight-row-table example, run end to end in general mode.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use crate::audit::{audit, Certificate};
use crate::protocol::wire::Direct;
use crate::protocol::{
    verify_session, vs_encrypt, EncryptOptions, Inputs, Mode, ProtocolError, Verifier, VerifierOptions,
};
use crate::table::{evaluate_plain, parse_graph, transform, OutputValue, TransformedGraph, Value};

pub const GRAPH: &str = include_str!("../data/demo.tbl");
pub const SPEC: &str = include_str!("../data/demo_spec.tbl");
pub const SECURITY: u32 = 16;

/// The input the worked example is stated for.
pub fn worked_input() -> Inputs {
    [("a".to_string(), Value::Int(46)), ("b".to_string(), Value::Bool(true))].into()
}

/// Extra inputs for the demo session: the worked input first, then inputs
/// that together fire every row table.
pub fn demo_inputs() -> Vec<Inputs> {
    [(46, true), (40, false), (30, true), (20, false), (56, true)]
        .into_iter()
        .map(|(a, b)| [("a".to_string(), Value::Int(a)), ("b".to_string(), Value::Bool(b))].into())
        .collect()
}

/// What the written description of the example states for the worked
/// input, kept verbatim next to the evaluator's answer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkedExampleClaim {
    /// `Y = (True, ⊥, ⊥, 2, ⊥)`.
    pub y: Vec<String>,
    pub covered: Vec<String>,
}

impl Default for WorkedExampleClaim {
    fn default() -> Self {
        WorkedExampleClaim {
            y: ["True", "⊥", "⊥", "2", "⊥"].map(String::from).to_vec(),
            covered: ["PT1", "PT5", "PT7"].map(String::from).to_vec(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DemoReport {
    pub input: Inputs,
    pub claim: WorkedExampleClaim,
    /// Plaintext evaluator on the worked input.
    pub ground_truth: BTreeMap<String, OutputValue>,
    pub ground_truth_covered: Vec<String>,
    /// Encrypted session on the worked input.
    pub encrypted: BTreeMap<String, OutputValue>,
    pub claim_matches: bool,
    pub accepted: bool,
    /// Tables whose predicates held on some session input.
    pub fired: Vec<String>,
    pub coverage_matches: bool,
    pub audit: u8,
}

/// Row tables whose output is ⊤ for `x`.
pub fn fired_tables(tg: &TransformedGraph, x: &Inputs) -> Result<BTreeSet<String>, ProtocolError> {
    let enc = tg
        .structure
        .encode_inputs(x)
        .map_err(|e| ProtocolError::Spec(e.to_string()))?;
    Ok(evaluate_plain(tg, &enc)
        .trace
        .into_iter()
        .filter(|e| e.output.is_some_and(|o| o.is_top()))
        .map(|e| TransformedGraph::node_name(e.node))
        .collect())
}

/// Encrypts the example, runs a general-mode session against it and
/// re-audits the certificate from its JSON form.
pub fn run(seed: u64, opts: &EncryptOptions) -> Result<(DemoReport, Certificate), ProtocolError> {
    let g = parse_graph(GRAPH)?;
    let mut dev = vs_encrypt(SECURITY, &g, opts, &mut ChaCha20Rng::seed_from_u64(seed))?;
    let v = Verifier::new(
        dev.params(),
        SPEC,
        VerifierOptions {
            mode: Mode::General,
            seed,
            session: seed.wrapping_add(1),
            path_requests: true,
            extra_inputs: demo_inputs(),
            ..Default::default()
        },
    )?;
    let cert = verify_session(&v, &mut Direct(&mut dev))?;

    let tg = transform(&g, opts.width)?;
    let x = worked_input();
    let enc = tg
        .structure
        .encode_inputs(&x)
        .map_err(|e| ProtocolError::Spec(e.to_string()))?;
    let ground_truth = evaluate_plain(&tg, &enc).outputs;
    let ground_truth_covered: Vec<String> = fired_tables(&tg, &x)?.into_iter().collect();
    let encrypted = cert
        .results
        .iter()
        .find(|r| r.input == x)
        .map(|r| r.outputs.clone())
        .unwrap_or_default();

    let mut fired = BTreeSet::new();
    for r in &cert.results {
        fired.extend(fired_tables(&tg, &r.input)?);
    }
    let coverage_matches = cert.coverage.covered().into_iter().collect::<BTreeSet<_>>() == fired;
    let reloaded = Certificate::from_json(&cert.to_json()).map_err(|e| ProtocolError::Replay(e.to_string()))?;
    let claim = WorkedExampleClaim::default();
    let claim_matches = claim.covered == ground_truth_covered;
    let report = DemoReport {
        input: x,
        claim,
        ground_truth,
        ground_truth_covered,
        encrypted,
        claim_matches,
        accepted: cert.accepted(),
        fired: fired.into_iter().collect(),
        coverage_matches,
        audit: audit(&reloaded).result(),
    };
    Ok((report, cert))
}
