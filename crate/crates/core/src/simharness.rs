//! Executable simulators and oracles: a fake-graph generator (S₁), an
//! encode oracle that never decrypts (O₁), an independent path oracle (O₂),
//! a checker oracle that knows the verifier's SE key (O₃), seeded adversary
//! scripts, and real/ideal experiments over them.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::sync::Arc;

use crate::circuit::{encode_program, Builder, Circuit, ProgramString};
use crate::commitment::{block_count, choose_challenge, commit_many, gen_code, CommitMessage, RevealMessage};
use crate::he::{keygen, Ciphertext};
use crate::protocol::wire::{
    CheckerBody, CommitBody, Direct, Frame, FrameKind, Link, PathAnswer, PathBody, RevealBody, Service,
};
use crate::protocol::{
    derive_rng, universal_cached, CheckerQuery, Developer, EncodeAnswer, EncodeQuery, EncryptOptions, Inputs,
    ProtocolError, PublicParams, QueryKind, UniversalSpec,
};
use crate::symcrypto::{se_enc, se_keygen, SeKey};
use crate::table::{
    consistent_order, Domain, NodeSource, Source, StructureGraph, TableGraph, TaggedValue, TransformedGraph, Value,
};
use crate::vga::enumerate_paths;

const PATH_EXHAUSTIVE: u64 = 1 << 16;
const PATH_SAMPLES: usize = 1 << 12;

/// G̃: the target's structure with arbitrary tables of matching widths.
#[derive(Clone, Debug)]
pub struct SimGraph {
    pub structure: StructureGraph,
    pub circuits: Vec<Circuit>,
}

#[derive(Clone, Debug)]
pub struct Simulated {
    pub graph: SimGraph,
    pub programs: Vec<ProgramString>,
    /// G″ with its own keys.
    pub params: Arc<PublicParams>,
}

/// S₁: builds a random graph over `structure` and encrypts it exactly as
/// the developer would, under the size hints of the real U.
pub fn s1_simulate<R: RngCore + ?Sized>(
    k: u32,
    structure: &StructureGraph,
    hints: &UniversalSpec,
    opts: &EncryptOptions,
    rng: &mut R,
) -> Result<Simulated, ProtocolError> {
    let m = structure.width as usize;
    let u = universal_cached(hints.n_in, hints.slots, hints.m)?;
    let circuits: Vec<Circuit> = structure
        .nodes
        .iter()
        .map(|n| {
            let inputs = n.ports.len() * m;
            let mut b = Builder::new(inputs);
            let outs: Vec<_> = (0..m)
                .map(|_| {
                    if inputs == 0 {
                        return crate::circuit::Bit::Const(rng.gen());
                    }
                    let x = b.input(rng.gen_range(0..inputs));
                    let y = b.input(rng.gen_range(0..inputs));
                    b.gate(rng.gen_range(0..16), x, y)
                })
                .collect();
            b.finish(&outs)
        })
        .collect();
    let programs = circuits
        .iter()
        .map(|c| encode_program(c, &u))
        .collect::<Result<Vec<_>, _>>()?;
    let keys = keygen(&opts.backend, k, rng)?;
    let encrypted = programs.iter().map(|p| keys.pk.enc_word(&p.0, rng)).collect();
    let code = gen_code(opts.code_bits, opts.epsilon, k, rng.next_u64())?;
    let params = PublicParams::assemble(k, structure.clone(), encrypted, keys.pk, u, code);
    Ok(Simulated {
        graph: SimGraph {
            structure: structure.clone(),
            circuits,
        },
        programs,
        params: Arc::new(params),
    })
}

/// One entry of the oracle state `M`: ciphertexts next to the real
/// plaintexts they stand for.
#[derive(Clone, Debug)]
pub enum MEntry {
    Input {
        table: usize,
        port: usize,
        w: Vec<Ciphertext>,
        z: TaggedValue,
    },
    Eval {
        table: usize,
        u: Vec<Ciphertext>,
        v: Vec<Ciphertext>,
        e: Vec<TaggedValue>,
        out: TaggedValue,
    },
}

#[derive(Clone, Debug)]
struct Pending {
    p: Vec<Ciphertext>,
    y: Vec<Ciphertext>,
    reveals: Vec<RevealMessage>,
}

/// The ideal developer: answers through O₁, O₂ and O₃ from real plaintext
/// tables and `M` alone; it holds no HE secret key.
#[derive(Clone, Debug)]
pub struct OracleDeveloper {
    params: Arc<PublicParams>,
    real: TransformedGraph,
    graph: TableGraph,
    /// The verifier's SE key, known to O₃.
    sk: Option<SeKey>,
    seed: u64,
    session: Option<u64>,
    rng: ChaCha20Rng,
    pub state: Vec<MEntry>,
    log: Vec<(EncodeQuery, EncodeAnswer)>,
    pending: Option<Pending>,
}

impl OracleDeveloper {
    /// `params` is the graph the adversary sees (G′ or G″); `graph` is the
    /// real design. `seed` fixes the per-session randomness.
    pub fn new(params: Arc<PublicParams>, graph: &TableGraph, seed: u64, sk: Option<SeKey>) -> Result<Self, ProtocolError> {
        let real = crate::table::transform(graph, params.structure.width)?;
        Ok(OracleDeveloper {
            params,
            real,
            graph: graph.clone(),
            sk,
            seed,
            session: None,
            rng: derive_rng("developer", &[seed]),
            state: Vec::new(),
            log: Vec::new(),
            pending: None,
        })
    }

    pub fn start_session(&mut self, id: u64) {
        self.session = Some(id);
        self.rng = Developer::session_rng(self.seed, id);
        self.state.clear();
        self.log.clear();
        self.pending = None;
    }

    pub fn oracle_o1(&mut self, q: &EncodeQuery) -> EncodeAnswer {
        let a = self.o1(q);
        self.log.push((q.clone(), a.clone()));
        a
    }

    fn o1(&mut self, q: &EncodeQuery) -> EncodeAnswer {
        let p = self.params.clone();
        let s = &p.structure;
        let m = p.width();
        let Some(node) = s.nodes.get(q.table) else {
            return EncodeAnswer::Null;
        };
        match &q.kind {
            QueryKind::Q1 { port, word } => {
                let Ok(z) = TaggedValue::from_bits(word, m as u32) else {
                    return EncodeAnswer::Null;
                };
                if !z.is_top() || !matches!(node.ports.get(*port), Some(NodeSource::External(_))) {
                    return EncodeAnswer::Null;
                }
                let w = p.hpk.enc_word(word, &mut self.rng);
                self.state.push(MEntry::Input {
                    table: q.table,
                    port: *port,
                    w: w.clone(),
                    z,
                });
                EncodeAnswer::Word(w)
            }
            QueryKind::Q2 { u, v } => {
                if u.len() != node.ports.len() * m || v.len() != m {
                    return EncodeAnswer::Null;
                }
                if u.iter().chain(v).any(|c| p.hpk.check(c).is_err()) {
                    return EncodeAnswer::Null;
                }
                let mut e = Vec::with_capacity(node.ports.len());
                for (port, src) in node.ports.iter().enumerate() {
                    let x = &u[port * m..(port + 1) * m];
                    let found = self.state.iter().find_map(|entry| match (entry, src) {
                        (MEntry::Input { table, port: pp, w, z }, NodeSource::External(_))
                            if *table == q.table && *pp == port && w == x =>
                        {
                            Some(*z)
                        }
                        (MEntry::Eval { table, v, out, .. }, NodeSource::Tables(c)) if c.contains(table) && v == x => {
                            Some(*out)
                        }
                        _ => None,
                    });
                    match found {
                        Some(t) if t.is_top() => e.push(t),
                        _ => return EncodeAnswer::Null,
                    }
                }
                match p.eval_table(q.table, u) {
                    Ok(s) if s == *v => {}
                    _ => return EncodeAnswer::Null,
                }
                let out = self.real.tables[q.table].apply(&e, m as u32);
                self.state.push(MEntry::Eval {
                    table: q.table,
                    u: u.clone(),
                    v: v.clone(),
                    e,
                    out,
                });
                if !out.is_top() {
                    EncodeAnswer::Bottom
                } else if s.is_external_output(q.table) {
                    EncodeAnswer::Payload(out.payload_bits(m as u32))
                } else {
                    EncodeAnswer::Top
                }
            }
        }
    }

    /// O₂: searches the original graph (row selection per table) in the
    /// same domain order as the developer.
    pub fn oracle_o2(&self, tables: &[usize]) -> Option<Inputs> {
        let s = &self.params.structure;
        if tables.is_empty()
            || tables.iter().any(|&t| t >= s.len())
            || tables.windows(2).any(|w| !s.has_edge(w[0], w[1]))
        {
            return None;
        }
        let h = s.width / 2;
        let names: Vec<String> = s.inputs.iter().map(|i| i.name.clone()).collect();
        let dom = Domain(s.inputs.iter().map(|i| i.domain(h)).collect());
        let origins: Vec<(usize, usize)> = tables
            .iter()
            .map(|&t| {
                let o = &self.real.tables[t].origin;
                (self.graph.table_index(&o.table).expect("origin exists"), o.row)
            })
            .collect();
        let fires = |x: &[Value]| -> Option<Inputs> {
            let x: Inputs = names.iter().cloned().zip(x.iter().copied()).collect();
            let rows = selected_rows(&self.graph, &x, h);
            origins.iter().all(|&(t, r)| rows[t] == Some(r)).then_some(x)
        };
        if dom.size() <= PATH_EXHAUSTIVE {
            (0..dom.size()).find_map(|i| fires(&dom.point(i)))
        } else {
            let mut rng = derive_rng("path", &tables.iter().map(|&t| t as u64).collect::<Vec<_>>());
            (0..PATH_SAMPLES).find_map(|_| fires(&dom.sample(&mut rng)))
        }
    }

    /// O₃ step 1: commits to `SE.Enc(sk, a)` where `a` is the real answer
    /// behind `p`.
    pub fn oracle_o3(&mut self, q: &CheckerQuery, challenges: &[Vec<bool>]) -> Option<Vec<CommitMessage>> {
        self.pending = None;
        let p = self.params.clone();
        let (m, h) = (p.width(), p.half());
        let sk = self.sk.clone()?;
        let a: Vec<bool> = self.log.iter().find_map(|(qe, ae)| match (&qe.kind, ae) {
            (QueryKind::Q1 { word, .. }, EncodeAnswer::Word(w)) if *w == q.p => Some(word.clone()),
            (QueryKind::Q2 { v, .. }, EncodeAnswer::Top | EncodeAnswer::Payload(_)) if v[..h] == q.p[..] => {
                Some(TaggedValue::top(Value::Bool(false), m as u32).ok()?.tag_bits(m as u32))
            }
            (QueryKind::Q2 { v, .. }, EncodeAnswer::Bottom) if v[..h] == q.p[..] => {
                Some(TaggedValue::BOTTOM.tag_bits(m as u32))
            }
            (QueryKind::Q2 { v, .. }, EncodeAnswer::Payload(b)) if v[h..] == q.p[..] => Some(b.clone()),
            _ => None,
        })?;
        if q.y.len() != a.len() || q.y.iter().any(|c| p.hpk.check(c).is_err()) {
            return None;
        }
        if challenges.len() != block_count(a.len(), &p.code) {
            return None;
        }
        let d = se_enc(&sk, &a).ok()?;
        let (commits, reveals) = commit_many(&d, challenges, &p.code, &mut self.rng).ok()?;
        self.pending = Some(Pending {
            p: q.p.clone(),
            y: q.y.clone(),
            reveals,
        });
        Some(commits)
    }

    /// O₃ step 2.
    pub fn oracle_o3_proof(&mut self, ct_sk: &[Ciphertext]) -> Option<Vec<RevealMessage>> {
        let pending = self.pending.take()?;
        let p = self.params.clone();
        if ct_sk.len() != p.se.key_bits as usize || ct_sk.iter().any(|c| p.hpk.check(c).is_err()) {
            return None;
        }
        match p.eval_se(ct_sk, &pending.p) {
            Ok(y) if y == pending.y => Some(pending.reveals),
            _ => None,
        }
    }
}

impl Service for OracleDeveloper {
    fn handle(&mut self, req: &Frame) -> Frame {
        if self.session != Some(req.session) {
            self.start_session(req.session);
        }
        let id = req.session;
        let resp = match req.kind {
            FrameKind::Encode => req.expect::<EncodeQuery>(FrameKind::Encode).map(|q| self.oracle_o1(&q).frame(id)),
            FrameKind::Path => req
                .expect::<PathBody>(FrameKind::Path)
                .map(|b| Frame::new(FrameKind::Path, id, &PathAnswer { input: self.oracle_o2(&b.tables) })),
            FrameKind::Checker => req.expect::<CheckerBody>(FrameKind::Checker).map(|b| match b {
                CheckerBody::Query { query, challenges } => Frame::new(
                    FrameKind::Commit,
                    id,
                    &CommitBody {
                        commits: self.oracle_o3(&query, &challenges),
                    },
                ),
                CheckerBody::Proof { ct_sk } => Frame::new(
                    FrameKind::Reveal,
                    id,
                    &RevealBody {
                        reveals: self.oracle_o3_proof(&ct_sk),
                    },
                ),
            }),
            FrameKind::Result => Ok(Frame::new(FrameKind::Result, id, &serde_json::json!({ "ack": true }))),
            other => Ok(Frame::error(id, format!("unexpected {other:?} request"))),
        };
        resp.unwrap_or_else(|e| Frame::error(id, e.to_string()))
    }
}

/// Row selected by each original table, `None` when the table is not
/// evaluated or no predicate holds.
pub fn selected_rows(g: &TableGraph, x: &Inputs, bits: u32) -> Vec<Option<usize>> {
    let mut rows = vec![None; g.tables.len()];
    let mut produced: Vec<Option<Vec<Value>>> = vec![None; g.tables.len()];
    for &t in &g.order {
        let args: Option<Vec<Value>> = g.wiring[t]
            .iter()
            .map(|s| match s {
                Source::External(n) => x.get(n).copied(),
                Source::Table { table, output } => produced[*table].as_ref().map(|v| v[*output]),
            })
            .collect();
        let Some(args) = args else { continue };
        let table = &g.tables[t];
        if let Some(r) = table.select_row(&args, bits) {
            rows[t] = Some(r);
            produced[t] = Some(table.rows[r].outputs.iter().map(|f| f.eval(&args, bits)).collect());
        }
    }
    rows
}

/// Adversary-visible bytes of one run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub exchanges: Vec<(String, String)>,
}

struct Recorder<'a> {
    link: &'a mut dyn Link,
    transcript: Transcript,
}

impl Recorder<'_> {
    fn call(&mut self, req: Frame) -> Result<Frame, ProtocolError> {
        let resp = self.link.call(&req)?;
        self.transcript.exchanges.push((
            String::from_utf8(req.to_bytes()).expect("json"),
            String::from_utf8(resp.to_bytes()).expect("json"),
        ));
        Ok(resp)
    }

    fn encode(&mut self, session: u64, q: EncodeQuery) -> Result<EncodeAnswer, ProtocolError> {
        self.call(Frame::encode(&q, session))?.expect(FrameKind::Encode)
    }
}

/// A seeded adversary: evaluates random inputs in consistent order, mixes
/// in malformed and unrecorded queries, path queries, and checker rounds
/// (some with a wrong proof). Every checker `y` is computed honestly from
/// the script's own SE key, so a query sequence is always valid for O₃.
#[derive(Clone, Debug)]
pub struct AdversaryScript {
    pub seed: u64,
    pub inputs: usize,
    pub session: u64,
}

impl AdversaryScript {
    pub fn new(seed: u64) -> AdversaryScript {
        AdversaryScript {
            seed,
            inputs: 2,
            session: seed,
        }
    }

    /// The SE key this script uses for checker rounds.
    pub fn se_key(&self, params: &PublicParams) -> SeKey {
        se_keygen(params.se.key_bits, &mut derive_rng("adversary-key", &[self.seed])).expect("valid key length")
    }

    pub fn run(&self, params: &PublicParams, link: &mut dyn Link) -> Result<Transcript, ProtocolError> {
        let mut rng = derive_rng("adversary", &[self.seed]);
        let sk = self.se_key(params);
        let ct_sk = params.hpk.enc_word(sk.bits(), &mut rng);
        let s = &params.structure;
        let (m, h) = (params.width(), params.half());
        let id = self.session;
        let mut r = Recorder {
            link,
            transcript: Transcript::default(),
        };
        let paths = enumerate_paths(s, 16);
        for _ in 0..2 {
            let tables = if !paths.is_empty() && rng.gen_bool(0.7) {
                paths[rng.gen_range(0..paths.len())].clone()
            } else {
                (0..rng.gen_range(1..4)).map(|_| rng.gen_range(0..s.len())).collect()
            };
            r.call(Frame::new(FrameKind::Path, id, &PathBody { tables }))?;
        }
        let dom = Domain(s.inputs.iter().map(|i| i.domain(h as u32)).collect());
        // (p, a-kind) pairs available for checker rounds
        let mut checkable: Vec<Vec<Ciphertext>> = Vec::new();
        for _ in 0..self.inputs {
            let x: Inputs = s.inputs.iter().map(|i| i.name.clone()).zip(dom.sample(&mut rng)).collect();
            let mut fired: Vec<Option<Vec<Ciphertext>>> = vec![None; s.len()];
            for i in consistent_order(s) {
                let mut u = Vec::new();
                let mut null = false;
                for (port, src) in s.nodes[i].ports.iter().enumerate() {
                    match src {
                        NodeSource::External(n) => {
                            let word = TaggedValue::top(x[n], m as u32).expect("in domain").to_bits(m as u32);
                            if rng.gen_bool(0.1) {
                                // bottom-tagged word
                                r.encode(id, EncodeQuery { table: i, kind: QueryKind::Q1 { port, word: vec![false; m] } })?;
                            }
                            match r.encode(id, EncodeQuery { table: i, kind: QueryKind::Q1 { port, word } })? {
                                EncodeAnswer::Word(w) => {
                                    checkable.push(w.clone());
                                    u.extend(w);
                                }
                                _ => null = true,
                            }
                        }
                        NodeSource::Tables(c) => match c.iter().find_map(|&j| fired[j].clone()) {
                            Some(v) => u.extend(v),
                            None => null = true,
                        },
                    }
                }
                if null {
                    continue;
                }
                let v = params.eval_table(i, &u)?;
                match rng.gen_range(0..10) {
                    0 => {
                        let mut forged = v.clone();
                        forged.swap(0, m - 1);
                        r.encode(id, EncodeQuery { table: i, kind: QueryKind::Q2 { u: u.clone(), v: forged } })?;
                    }
                    1 => {
                        let fresh: Vec<Ciphertext> = params.hpk.enc_word(&vec![true; u.len()], &mut rng);
                        let fv = params.eval_table(i, &fresh)?;
                        r.encode(id, EncodeQuery { table: i, kind: QueryKind::Q2 { u: fresh, v: fv } })?;
                    }
                    _ => {}
                }
                let a = r.encode(id, EncodeQuery { table: i, kind: QueryKind::Q2 { u, v: v.clone() } })?;
                match a {
                    EncodeAnswer::Top => {
                        checkable.push(v[..h].to_vec());
                        fired[i] = Some(v);
                    }
                    EncodeAnswer::Payload(_) => {
                        checkable.push(v[..h].to_vec());
                        checkable.push(v[h..].to_vec());
                        fired[i] = Some(v);
                    }
                    EncodeAnswer::Bottom => checkable.push(v[..h].to_vec()),
                    _ => {}
                }
            }
        }
        let rounds = checkable.len().min(4);
        for _ in 0..rounds {
            let p = match rng.gen_range(0..8) {
                // unmatched p
                0 => params.hpk.enc_word(&vec![false; h], &mut rng),
                _ => checkable[rng.gen_range(0..checkable.len())].clone(),
            };
            let y = params.eval_se(&ct_sk, &p)?;
            let challenges: Vec<Vec<bool>> = (0..block_count(p.len(), &params.code))
                .map(|_| choose_challenge(params.code.length, &mut rng))
                .collect();
            let query = CheckerQuery { table: 0, p, y };
            let c = r.call(Frame::new(FrameKind::Checker, id, &CheckerBody::Query { query, challenges }))?;
            if c.expect::<CommitBody>(FrameKind::Commit)?.commits.is_some() {
                let proof = if rng.gen_bool(0.2) { ct_sk[1..].to_vec() } else { ct_sk.clone() };
                r.call(Frame::new(FrameKind::Checker, id, &CheckerBody::Proof { ct_sk: proof }))?;
            }
        }
        Ok(r.transcript)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Real,
    Ideal,
}

#[derive(Clone, Debug)]
pub struct ExperimentRun {
    pub params: Arc<PublicParams>,
    pub transcript: Transcript,
}

/// Real: the adversary talks to the developer over G′. Ideal: S₁ builds
/// G″ and the oracles answer over it.
pub fn run_experiment(
    kind: Experiment,
    graph: &TableGraph,
    k: u32,
    script: &AdversaryScript,
    seed: u64,
) -> Result<ExperimentRun, ProtocolError> {
    let opts = EncryptOptions::default();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut dev = crate::protocol::vs_encrypt(k, graph, &opts, &mut rng)?;
    let real = dev.params();
    match kind {
        Experiment::Real => {
            let transcript = script.run(&real, &mut Direct(&mut dev))?;
            Ok(ExperimentRun {
                params: real,
                transcript,
            })
        }
        Experiment::Ideal => {
            let mut srng = derive_rng("s1", &[seed]);
            let sim = s1_simulate(k, &real.structure, &real.universal, &opts, &mut srng)?;
            let mut o = OracleDeveloper::new(sim.params.clone(), graph, srng.next_u64(), Some(script.se_key(&sim.params)))?;
            let transcript = script.run(&sim.params, &mut Direct(&mut o))?;
            Ok(ExperimentRun {
                params: sim.params,
                transcript,
            })
        }
    }
}

/// Answers with ciphertext bytes removed: what remains must agree between
/// the real and the ideal world.
pub fn normalized_answers(t: &Transcript) -> Vec<String> {
    t.exchanges
        .iter()
        .map(|(_, resp)| {
            let f = Frame::from_bytes(resp.as_bytes()).expect("recorded frame");
            match f.kind {
                FrameKind::Encode => match f.expect::<EncodeAnswer>(FrameKind::Encode) {
                    Ok(EncodeAnswer::Word(w)) => format!("word/{}", w.len()),
                    Ok(a) => serde_json::to_string(&a).expect("json"),
                    Err(e) => e.to_string(),
                },
                FrameKind::Commit => match f.expect::<CommitBody>(FrameKind::Commit) {
                    Ok(b) => format!("commit/{}", b.commits.map_or(0, |c| c.len())),
                    Err(e) => e.to_string(),
                },
                FrameKind::Reveal => match f.expect::<RevealBody>(FrameKind::Reveal) {
                    Ok(b) => format!(
                        "reveal/{:?}",
                        b.reveals.map(|r| r.into_iter().map(|x| crate::bitstr::to_string(&x.data)).collect::<Vec<_>>())
                    ),
                    Err(e) => e.to_string(),
                },
                _ => f.body.to_string(),
            }
        })
        .collect()
}

/// Public metadata with every ciphertext replaced by its length.
pub fn metadata_shape(p: &PublicParams, t: &Transcript) -> String {
    let lens: Vec<Vec<usize>> = p.programs.iter().map(|w| w.iter().map(|c| c.0.len()).collect()).collect();
    let frames: Vec<(usize, usize)> = t.exchanges.iter().map(|(a, b)| (a.len(), b.len())).collect();
    serde_json::json!({
        "structure": p.structure,
        "universal": p.universal,
        "lambda": p.lambda,
        "se": p.se,
        "code": [p.code.message_bits, p.code.length, p.code.min_distance],
        "programs": lens,
        "pk": p.hpk.to_bytes().len(),
        "frames": frames,
    })
    .to_string()
}

/// A fixed distinguisher over metadata: one bit of its hash.
pub fn metadata_distinguisher(shape: &str) -> bool {
    Sha256::digest(shape.as_bytes())[0] & 1 == 1
}
