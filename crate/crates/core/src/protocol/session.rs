//! The verifier's session logic, written against an [`Oracle`] so that the
//! live verifier and the auditor's replay execute the very same steps.

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

use super::{
    CheckerExchange, CheckerQuery, EncodeAnswer, EncodeQuery, Inputs, Mode, ProtocolError, PublicParams,
    QueryKind,
};
use crate::commitment::{block_count, choose_challenge, BlockTranscript, CommitMessage, RevealMessage, Transcript};
use crate::he::Ciphertext;
use crate::symcrypto::{se_dec, SeKey};
use crate::table::{
    consistent_order, evaluate_plain, resolve_output, NodeSource, OutputValue, TableGraph, TaggedValue,
    TransformedGraph, Ty, Value,
};
use crate::vga::{check_critical_points, generate_suite, CriticalPoint, VgaConfig};

/// Which part of a word a checker round re-encrypts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slice {
    Full,
    Tag,
    Payload,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckerRecord {
    /// No checkable content (null or malformed answer).
    pub skipped: bool,
    pub slice: Option<Slice>,
    pub y: Vec<Ciphertext>,
    #[serde(with = "crate::bitstr::many")]
    pub challenges: Vec<Vec<bool>>,
    pub commits: Option<Vec<CommitMessage>>,
    pub reveals: Option<Vec<RevealMessage>>,
    /// Opened data; empty when the commitment failed to open.
    #[serde(with = "crate::bitstr")]
    pub d: Vec<bool>,
    pub passed: bool,
}

impl CheckerRecord {
    fn skipped() -> CheckerRecord {
        CheckerRecord {
            skipped: true,
            slice: None,
            y: Vec::new(),
            challenges: Vec::new(),
            commits: None,
            reveals: None,
            d: Vec::new(),
            passed: true,
        }
    }
}

/// One encode exchange, with its checker round in general mode.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    /// Index into the session's evaluated inputs.
    pub input: usize,
    pub query: EncodeQuery,
    pub answer: EncodeAnswer,
    pub checker: Option<CheckerRecord>,
    /// Hash-chain link, filled when a certificate is sealed.
    #[serde(default)]
    pub hash: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathRecord {
    pub tables: Vec<usize>,
    pub answer: Option<Inputs>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputSource {
    Suite,
    Path,
    Extra,
    Critical,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputResult {
    pub source: InputSource,
    pub input: Inputs,
    pub outputs: BTreeMap<String, OutputValue>,
    pub expected: BTreeMap<String, OutputValue>,
    /// Tables answered ⊤ for this input.
    pub fired: Vec<usize>,
}

impl InputResult {
    pub fn matches(&self) -> bool {
        self.expected.iter().all(|(k, v)| self.outputs.get(k) == Some(v))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub accept: bool,
    pub evaluation_failures: Vec<String>,
    pub checker_failures: Vec<String>,
}

/// Per-table outcome of one evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TableOutcome {
    Null,
    Bottom,
    Top(Vec<Ciphertext>),
    Payload(Vec<Ciphertext>, Value),
}

impl TableOutcome {
    fn fired(&self) -> Option<&[Ciphertext]> {
        match self {
            TableOutcome::Top(v) | TableOutcome::Payload(v, _) => Some(v),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionPlan {
    pub mode: Mode,
    pub vga: VgaConfig,
    pub path_requests: bool,
    pub extra_inputs: Vec<Inputs>,
    pub critical_points: Vec<CriticalPoint>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionOutcome {
    pub paths: Vec<PathRecord>,
    pub records: Vec<Record>,
    pub results: Vec<InputResult>,
    pub verdict: Verdict,
}

pub(crate) struct SessionContext<'a> {
    pub params: &'a PublicParams,
    pub spec_graph: &'a TableGraph,
    pub spec: &'a TransformedGraph,
    pub spec_source: &'a str,
    pub session: u64,
    pub sk: Option<&'a SeKey>,
    pub ct_sk: Option<&'a [Ciphertext]>,
}

/// The developer as seen by the session logic.
pub(crate) trait Oracle {
    fn path(&mut self, tables: &[usize]) -> Result<Option<Inputs>, ProtocolError>;
    fn encode(&mut self, q: &EncodeQuery) -> Result<EncodeAnswer, ProtocolError>;
    /// Runs one checker round. `challenges` are the verifier's fresh picks;
    /// a replay returns the recorded ones instead.
    fn checker(
        &mut self,
        q: &CheckerQuery,
        challenges: Vec<Vec<bool>>,
        ct_sk: &[Ciphertext],
    ) -> Result<CheckerExchange, ProtocolError>;
}

struct Engine<'a, 'o> {
    ctx: &'a SessionContext<'a>,
    oracle: &'o mut dyn Oracle,
    rng: &'o mut dyn RngCore,
    records: Vec<Record>,
    verdict: Verdict,
}

/// Validates an input assignment against the specification's declared
/// inputs (names, types, ranges).
pub(crate) fn check_input(spec: &TableGraph, x: &Inputs) -> Result<(), String> {
    if x.len() != spec.inputs.len() {
        return Err(format!("expected {} inputs, got {}", spec.inputs.len(), x.len()));
    }
    for i in &spec.inputs {
        let v = x.get(&i.name).ok_or_else(|| format!("missing input `{}`", i.name))?;
        if v.ty() != i.ty {
            return Err(format!("input `{}` has the wrong type", i.name));
        }
        if let (Value::Int(v), Some((lo, hi))) = (v, i.range) {
            if *v < lo || *v > hi {
                return Err(format!("input `{}` = {v} outside {lo}..{hi}", i.name));
            }
        }
    }
    Ok(())
}

/// Expected outputs under the specification.
pub(crate) fn expected_outputs(spec: &TransformedGraph, x: &Inputs) -> Result<BTreeMap<String, OutputValue>, String> {
    let enc = spec.structure.encode_inputs(x).map_err(|e| e.to_string())?;
    Ok(evaluate_plain(spec, &enc).outputs)
}

/// Seed of the generated suite. It covers the whole session context, so
/// a certificate edited in any of these fields replays different inputs.
pub(crate) fn suite_seed(plan: &SessionPlan, session: u64, spec_source: &str) -> u64 {
    let mut h = Sha256::new();
    for part in [b"suite".as_slice(), plan.vga.name.as_bytes(), spec_source.as_bytes()] {
        h.update((part.len() as u64).to_be_bytes());
        h.update(part);
    }
    for n in [plan.vga.seed, plan.vga.budget as u64, session] {
        h.update(n.to_be_bytes());
    }
    let d = h.finalize();
    u64::from_be_bytes(d[..8].try_into().expect("8 bytes"))
}

pub(crate) fn run_session(
    ctx: &SessionContext<'_>,
    plan: &SessionPlan,
    oracle: &mut dyn Oracle,
    rng: &mut dyn RngCore,
) -> Result<SessionOutcome, ProtocolError> {
    if plan.mode == Mode::General && (ctx.sk.is_none() || ctx.ct_sk.is_none()) {
        return Err(ProtocolError::Protocol("general mode needs sk and ct_sk".into()));
    }
    let s = &ctx.params.structure;
    let suite = generate_suite(s, ctx.spec_graph, suite_seed(plan, ctx.session, ctx.spec_source), plan.vga.budget)
        .map_err(|e| ProtocolError::Spec(e.to_string()))?;

    let mut inputs: Vec<(InputSource, Inputs)> = suite.inputs.iter().map(|x| (InputSource::Suite, x.clone())).collect();
    let mut paths = Vec::new();
    let mut eng = Engine {
        ctx,
        oracle,
        rng,
        records: Vec::new(),
        verdict: Verdict::default(),
    };
    if plan.path_requests {
        for p in &suite.paths {
            let answer = eng.oracle.path(p)?;
            if let Some(x) = &answer {
                inputs.push((InputSource::Path, x.clone()));
            }
            paths.push(PathRecord {
                tables: p.clone(),
                answer,
            });
        }
    }
    inputs.extend(plan.extra_inputs.iter().map(|x| (InputSource::Extra, x.clone())));
    inputs.extend(plan.critical_points.iter().map(|c| (InputSource::Critical, c.input.clone())));

    let mut results = Vec::with_capacity(inputs.len());
    for (n, (source, x)) in inputs.into_iter().enumerate() {
        if let Err(e) = check_input(ctx.spec_graph, &x) {
            eng.verdict
                .evaluation_failures
                .push(format!("input #{n} ({source:?}) is invalid: {e}"));
            continue;
        }
        let expected = expected_outputs(ctx.spec, &x).map_err(ProtocolError::Spec)?;
        let (outputs, fired) = eng.evaluate(n, &x)?;
        let r = InputResult {
            source,
            input: x,
            outputs,
            expected,
            fired,
        };
        if !r.matches() {
            for (k, want) in &r.expected {
                let got = r.outputs.get(k).copied().unwrap_or(OutputValue::Null);
                if got != *want {
                    eng.verdict
                        .evaluation_failures
                        .push(format!("input #{n}: output `{k}` is {got}, specification gives {want}"));
                }
            }
        }
        results.push(r);
    }
    for (i, ok) in check_critical_points(&plan.critical_points, &results).into_iter().enumerate() {
        if !ok {
            eng.verdict
                .evaluation_failures
                .push(format!("critical point #{i} not met"));
        }
    }
    let mut verdict = eng.verdict;
    verdict.accept = verdict.evaluation_failures.is_empty() && verdict.checker_failures.is_empty();
    Ok(SessionOutcome {
        paths,
        records: eng.records,
        results,
        verdict,
    })
}

impl Engine<'_, '_> {
    fn violation(&mut self, n: usize, table: usize, what: impl std::fmt::Display) {
        self.verdict.evaluation_failures.push(format!(
            "input #{n}: {}: {what}",
            TransformedGraph::node_name(table)
        ));
    }

    /// Drives one input through the encrypted graph in consistent order.
    fn evaluate(&mut self, n: usize, x: &Inputs) -> Result<(BTreeMap<String, OutputValue>, Vec<usize>), ProtocolError> {
        let p = self.ctx.params;
        let s = &p.structure;
        let m = p.width();
        let mut out: Vec<TableOutcome> = vec![TableOutcome::Null; s.len()];
        for i in consistent_order(s) {
            let mut xi: Vec<Ciphertext> = Vec::with_capacity(s.nodes[i].ports.len() * m);
            let mut null = false;
            for (port, src) in s.nodes[i].ports.iter().enumerate() {
                match src {
                    NodeSource::External(name) => {
                        let v = x[name];
                        let word = TaggedValue::top(v, m as u32)
                            .map_err(|e| ProtocolError::Spec(e.to_string()))?
                            .to_bits(m as u32);
                        let q = EncodeQuery {
                            table: i,
                            kind: QueryKind::Q1 { port, word: word.clone() },
                        };
                        let a = self.oracle.encode(&q)?;
                        let w = match &a {
                            EncodeAnswer::Word(w) if w.len() == m && w.iter().all(|c| p.hpk.check(c).is_ok()) => {
                                Some(w.clone())
                            }
                            EncodeAnswer::Null => None,
                            other => {
                                self.violation(n, i, format_args!("malformed answer {} to an input query", kind(other)));
                                None
                            }
                        };
                        let checker = w.as_ref().map(|w| (w.clone(), Slice::Full, word));
                        self.record(n, i, q, a, checker)?;
                        match w {
                            Some(w) => xi.extend(w),
                            None => {
                                null = true;
                                break;
                            }
                        }
                    }
                    NodeSource::Tables(c) => {
                        let fired: Vec<&[Ciphertext]> = c.iter().filter_map(|&j| out[j].fired()).collect();
                        match fired.len() {
                            1 => xi.extend_from_slice(fired[0]),
                            0 => {
                                null = true;
                                break;
                            }
                            _ => {
                                self.violation(n, i, format_args!("port {port} has {} producers answering top", fired.len()));
                                null = true;
                                break;
                            }
                        }
                    }
                }
            }
            if null {
                continue;
            }
            let v = p.eval_table(i, &xi)?;
            let q = EncodeQuery {
                table: i,
                kind: QueryKind::Q2 { u: xi, v: v.clone() },
            };
            let a = self.oracle.encode(&q)?;
            let h = m / 2;
            let sink_ty: Option<Ty> = s.sinks_of(i).first().map(|o| o.ty);
            let (outcome, checker) = match (&a, sink_ty) {
                (EncodeAnswer::Null, _) => (TableOutcome::Null, None),
                (EncodeAnswer::Bottom, _) => (
                    TableOutcome::Bottom,
                    Some((v[..h].to_vec(), Slice::Tag, TaggedValue::BOTTOM.tag_bits(m as u32))),
                ),
                (EncodeAnswer::Top, None) => (
                    TableOutcome::Top(v.clone()),
                    Some((v[..h].to_vec(), Slice::Tag, top_tag(m))),
                ),
                (EncodeAnswer::Payload(bits), Some(ty)) if bits.len() == h => {
                    let raw = crate::table::bits_word(bits);
                    let val = Value::from_payload(ty, raw, h as u32);
                    if val.to_payload(h as u32) == raw {
                        (
                            TableOutcome::Payload(v.clone(), val),
                            Some((v[h..].to_vec(), Slice::Payload, bits.clone())),
                        )
                    } else {
                        self.violation(n, i, "non-canonical payload");
                        (TableOutcome::Null, None)
                    }
                }
                (other, _) => {
                    self.violation(n, i, format_args!("answer {} not allowed here", kind(other)));
                    (TableOutcome::Null, None)
                }
            };
            self.record(n, i, q, a, checker)?;
            out[i] = outcome;
        }
        let outputs = s
            .outputs
            .iter()
            .map(|o| {
                let values = o
                    .producers
                    .iter()
                    .filter(|&&j| matches!(out[j], TableOutcome::Payload(..)))
                    .count();
                let v = if values > 1 {
                    OutputValue::Null
                } else {
                    resolve_output(&o.producers, |j| match &out[j] {
                        TableOutcome::Payload(_, v) => OutputValue::Value(*v),
                        TableOutcome::Bottom => OutputValue::Bottom,
                        _ => OutputValue::Null,
                    })
                };
                (o.name.clone(), v, values)
            })
            .collect::<Vec<_>>();
        for (name, _, values) in &outputs {
            if *values > 1 {
                self.verdict
                    .evaluation_failures
                    .push(format!("input #{n}: output `{name}` has {values} producers answering a value"));
            }
        }
        let fired = (0..s.len()).filter(|&j| out[j].fired().is_some()).collect();
        Ok((outputs.into_iter().map(|(k, v, _)| (k, v)).collect(), fired))
    }

    /// Appends a record, running the checker round in general mode.
    fn record(
        &mut self,
        n: usize,
        table: usize,
        query: EncodeQuery,
        answer: EncodeAnswer,
        check: Option<(Vec<Ciphertext>, Slice, Vec<bool>)>,
    ) -> Result<(), ProtocolError> {
        let checker = match (self.ctx.sk, self.ctx.ct_sk) {
            (Some(sk), Some(ct_sk)) => Some(match check {
                None => CheckerRecord::skipped(),
                Some((p, slice, expected)) => {
                    let rec = self.check(table, p, slice, sk, ct_sk)?;
                    let opened = !rec.d.is_empty();
                    let ok = opened && se_dec(sk, &rec.d).is_ok_and(|d| d == expected);
                    if !ok {
                        self.verdict.checker_failures.push(format!(
                            "input #{n}: {}: {}",
                            TransformedGraph::node_name(table),
                            if opened { "re-encrypted answer disagrees" } else { "commitment did not open" }
                        ));
                    }
                    CheckerRecord { passed: ok, ..rec }
                }
            }),
            _ => None,
        };
        self.records.push(Record {
            input: n,
            query,
            answer,
            checker,
            hash: String::new(),
        });
        Ok(())
    }

    fn check(
        &mut self,
        table: usize,
        p: Vec<Ciphertext>,
        slice: Slice,
        _sk: &SeKey,
        ct_sk: &[Ciphertext],
    ) -> Result<CheckerRecord, ProtocolError> {
        let params = self.ctx.params;
        let code = &params.code;
        let y = params.eval_se(ct_sk, &p)?;
        let width = p.len();
        let challenges = (0..block_count(width, code))
            .map(|_| choose_challenge(code.length, self.rng))
            .collect();
        let q = CheckerQuery { table, p, y };
        let ex = self.oracle.checker(&q, challenges, ct_sk)?;
        let d = match (&ex.commits, &ex.reveals) {
            (Some(c), Some(r)) if c.len() == ex.challenges.len() && r.len() == c.len() => Transcript {
                len: width,
                blocks: ex
                    .challenges
                    .iter()
                    .zip(c)
                    .zip(r)
                    .map(|((ch, c), r)| BlockTranscript {
                        challenge: ch.clone(),
                        commit: c.clone(),
                        reveal: r.clone(),
                    })
                    .collect(),
            }
            .open(code),
            _ => None,
        };
        Ok(CheckerRecord {
            skipped: false,
            slice: Some(slice),
            y: q.y,
            challenges: ex.challenges,
            commits: ex.commits,
            reveals: ex.reveals,
            d: d.unwrap_or_default(),
            passed: false,
        })
    }
}

fn top_tag(m: usize) -> Vec<bool> {
    TaggedValue::top(Value::Bool(false), m as u32)
        .expect("bool fits")
        .tag_bits(m as u32)
}

fn kind(a: &EncodeAnswer) -> &'static str {
    match a {
        EncodeAnswer::Null => "null",
        EncodeAnswer::Word(_) => "word",
        EncodeAnswer::Top => "top",
        EncodeAnswer::Bottom => "bottom",
        EncodeAnswer::Payload(_) => "payload",
    }
}
