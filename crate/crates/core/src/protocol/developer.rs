//! The developer: owns the design and the HE secret key, answers encode,
//! path and checker queries, and keeps the per-session memory `M`.

use rand::RngCore;
use rand_chacha::ChaCha20Rng;
use std::collections::HashMap;
use std::sync::Arc;

use super::session::Slice;
use super::wire::{
    CheckerBody, CommitBody, Frame, FrameKind, PathAnswer, PathBody, RevealBody, Service,
};
use super::{
    derive_rng, universal_cached, CheckerQuery, EncodeAnswer, EncodeQuery, Inputs, ProtocolError, PublicParams,
    QueryKind,
};
use crate::circuit::{compile, encode_program, ProgramString};
use crate::commitment::{
    block_count, commit_many, gen_code, RevealMessage, DEFAULT_EPSILON, DEFAULT_MESSAGE_BITS,
};
use crate::he::{digest, keygen, BackendConfig, Ciphertext, SecretKey};
use crate::table::{evaluate_plain, transform, Domain, TableGraph, TaggedValue, TransformedGraph, DEFAULT_WIDTH};

/// Domains up to this size are searched exhaustively by path queries.
const PATH_EXHAUSTIVE: u64 = 1 << 16;
const PATH_SAMPLES: usize = 1 << 12;

#[derive(Clone, Debug)]
pub struct EncryptOptions {
    pub width: u32,
    pub backend: BackendConfig,
    pub code_bits: usize,
    pub epsilon: f64,
    /// Fixed `(n_in, slots)` for U; sized to the design when `None`.
    pub budget: Option<(usize, usize)>,
}

impl Default for EncryptOptions {
    fn default() -> Self {
        EncryptOptions {
            width: DEFAULT_WIDTH,
            backend: BackendConfig::Transparent,
            code_bits: DEFAULT_MESSAGE_BITS,
            epsilon: DEFAULT_EPSILON,
            budget: None,
        }
    }
}

#[derive(Clone, Debug, Default)]
struct Memory {
    /// Digest of a q1 answer word to the `(table, port)` it was issued for.
    q1: HashMap<[u8; 32], Vec<(usize, usize)>>,
    /// Digest of a stored q2 output to its table.
    q2: HashMap<[u8; 32], Vec<usize>>,
    /// Digests of slices a checker query may refer to.
    slices: HashMap<[u8; 32], Slice>,
}

#[derive(Clone, Debug)]
struct Pending {
    p: Vec<Ciphertext>,
    y: Vec<Ciphertext>,
    reveals: Vec<RevealMessage>,
}

#[derive(Clone, Debug)]
pub struct Developer {
    graph: TableGraph,
    transformed: TransformedGraph,
    programs: Vec<ProgramString>,
    hsk: SecretKey,
    params: Arc<PublicParams>,
    seed: u64,
    session: Option<u64>,
    rng: ChaCha20Rng,
    memory: Memory,
    log: Vec<(EncodeQuery, EncodeAnswer)>,
    pending: Option<Pending>,
}

/// Transforms and compiles `g`, sizes U, encrypts one program per table,
/// and fixes the commitment code.
pub fn vs_encrypt<R: RngCore + ?Sized>(
    k: u32,
    g: &TableGraph,
    opts: &EncryptOptions,
    rng: &mut R,
) -> Result<Developer, ProtocolError> {
    let m = opts.width;
    let tg = transform(g, m)?;
    let circuits = tg
        .tables
        .iter()
        .map(|t| compile(t, m))
        .collect::<Result<Vec<_>, _>>()?;
    let u = match opts.budget {
        Some((n_in, slots)) => universal_cached(n_in, slots, m as usize)?,
        None => {
            let n_in = circuits.iter().map(|c| c.inputs()).max().unwrap_or(0);
            let slots = circuits.iter().map(|c| c.gates().len()).max().unwrap_or(0);
            if let Some(c) = circuits.iter().find(|c| c.outputs().len() != m as usize) {
                return Err(ProtocolError::Params(format!("circuit with {} outputs", c.outputs().len())));
            }
            universal_cached(n_in, slots, m as usize)?
        }
    };
    let programs = circuits
        .iter()
        .map(|c| encode_program(c, &u))
        .collect::<Result<Vec<_>, _>>()?;
    let keys = keygen(&opts.backend, k, rng)?;
    let encrypted = programs.iter().map(|p| keys.pk.enc_word(&p.0, rng)).collect();
    let code = gen_code(opts.code_bits, opts.epsilon, k, rng.next_u64())?;
    let params = PublicParams::assemble(k, tg.structure.clone(), encrypted, keys.pk, u, code);
    let seed = rng.next_u64();
    Ok(Developer {
        graph: g.clone(),
        transformed: tg,
        programs,
        hsk: keys.sk,
        params: Arc::new(params),
        seed,
        session: None,
        rng: derive_rng("developer", &[seed]),
        memory: Memory::default(),
        log: Vec::new(),
        pending: None,
    })
}

impl Developer {
    pub fn params(&self) -> Arc<PublicParams> {
        self.params.clone()
    }

    pub fn graph(&self) -> &TableGraph {
        &self.graph
    }

    pub fn transformed(&self) -> &TransformedGraph {
        &self.transformed
    }

    /// The plaintext program strings `S_C`.
    pub fn programs(&self) -> &[ProgramString] {
        &self.programs
    }

    pub fn secret_key(&self) -> &SecretKey {
        &self.hsk
    }

    pub fn session(&self) -> Option<u64> {
        self.session
    }

    /// Encode queries and answers of the current session.
    pub fn log(&self) -> &[(EncodeQuery, EncodeAnswer)] {
        &self.log
    }

    /// Seed of the developer's randomness in session `id`.
    pub fn session_rng(seed: u64, id: u64) -> ChaCha20Rng {
        derive_rng("developer-session", &[seed, id])
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Starts session `id`, wiping `M` and the logs.
    pub fn start_session(&mut self, id: u64) {
        self.session = Some(id);
        self.rng = Self::session_rng(self.seed, id);
        self.memory = Memory::default();
        self.log.clear();
        self.pending = None;
    }

    fn decrypt_tagged(&self, w: &[Ciphertext]) -> Option<TaggedValue> {
        let bits = self.hsk.dec_word(w).ok()?;
        TaggedValue::from_bits(&bits, self.params.structure.width).ok()
    }

    pub fn vs_encode(&mut self, q: &EncodeQuery) -> EncodeAnswer {
        let a = self.encode_inner(q);
        self.log.push((q.clone(), a.clone()));
        a
    }

    fn encode_inner(&mut self, q: &EncodeQuery) -> EncodeAnswer {
        let p = self.params.clone();
        let s = &p.structure;
        let m = p.width();
        let h = m / 2;
        let Some(node) = s.nodes.get(q.table) else {
            return EncodeAnswer::Null;
        };
        match &q.kind {
            QueryKind::Q1 { port, word } => {
                let external = matches!(node.ports.get(*port), Some(crate::table::NodeSource::External(_)));
                let top = TaggedValue::from_bits(word, m as u32).is_ok_and(|t| t.is_top());
                if !external || !top {
                    return EncodeAnswer::Null;
                }
                let w = p.hpk.enc_word(word, &mut self.rng);
                let d = digest(&w);
                self.memory.q1.entry(d).or_default().push((q.table, *port));
                self.memory.slices.insert(d, Slice::Full);
                EncodeAnswer::Word(w)
            }
            QueryKind::Q2 { u, v } => {
                if u.len() != node.ports.len() * m || v.len() != m {
                    return EncodeAnswer::Null;
                }
                if u.iter().chain(v).any(|c| p.hpk.check(c).is_err()) {
                    return EncodeAnswer::Null;
                }
                for (port, src) in node.ports.iter().enumerate() {
                    let word = &u[port * m..(port + 1) * m];
                    let d = digest(word);
                    let ok = match src {
                        crate::table::NodeSource::External(_) => self
                            .memory
                            .q1
                            .get(&d)
                            .is_some_and(|e| e.contains(&(q.table, port))),
                        crate::table::NodeSource::Tables(c) => {
                            self.memory.q2.get(&d).is_some_and(|e| e.iter().any(|t| c.contains(t)))
                                && self.decrypt_tagged(word).is_some_and(|t| t.is_top())
                        }
                    };
                    if !ok {
                        return EncodeAnswer::Null;
                    }
                }
                match p.eval_table(q.table, u) {
                    Ok(s) if s == *v => {}
                    _ => return EncodeAnswer::Null,
                }
                let t = self.decrypt_tagged(v).unwrap_or(TaggedValue::BOTTOM);
                let vd = digest(v);
                self.memory.q2.entry(vd).or_default().push(q.table);
                self.memory.slices.insert(digest(&v[..h]), Slice::Tag);
                if !t.is_top() {
                    EncodeAnswer::Bottom
                } else if s.is_external_output(q.table) {
                    self.memory.slices.insert(digest(&v[h..]), Slice::Payload);
                    EncodeAnswer::Payload(t.payload_bits(m as u32))
                } else {
                    EncodeAnswer::Top
                }
            }
        }
    }

    /// An input whose plaintext trace fires every listed table, if the
    /// tables form a path and such an input is found.
    pub fn vs_path(&self, tables: &[usize]) -> Option<Inputs> {
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
        let fires = |x: &[crate::table::Value]| -> Option<Inputs> {
            let x: Inputs = names.iter().cloned().zip(x.iter().copied()).collect();
            let enc = s.encode_inputs(&x).ok()?;
            let fired = evaluate_plain(&self.transformed, &enc).fired();
            tables.iter().all(|t| fired.contains(t)).then_some(x)
        };
        if dom.size() <= PATH_EXHAUSTIVE {
            (0..dom.size()).find_map(|i| fires(&dom.point(i)))
        } else {
            let mut rng = derive_rng("path", &tables.iter().map(|&t| t as u64).collect::<Vec<_>>());
            (0..PATH_SAMPLES).find_map(|_| fires(&dom.sample(&mut rng)))
        }
    }

    /// Checker step 1: commits to `Dec(y)` against the challenges.
    pub fn checker_query(&mut self, q: &CheckerQuery, challenges: &[Vec<bool>]) -> Option<Vec<crate::commitment::CommitMessage>> {
        self.pending = None;
        let p = self.params.clone();
        let slice = *self.memory.slices.get(&digest(&q.p))?;
        let width = match slice {
            Slice::Full => p.width(),
            Slice::Tag | Slice::Payload => p.half(),
        };
        if q.p.len() != width || q.y.len() != width || q.y.iter().any(|c| p.hpk.check(c).is_err()) {
            return None;
        }
        if challenges.len() != block_count(width, &p.code) {
            return None;
        }
        let d = self.hsk.dec_word(&q.y).ok()?;
        let (commits, reveals) = commit_many(&d, challenges, &p.code, &mut self.rng).ok()?;
        self.pending = Some(Pending {
            p: q.p.clone(),
            y: q.y.clone(),
            reveals,
        });
        Some(commits)
    }

    /// Checker step 2: opens the commitments once `y` is shown to be the
    /// encryption of `p` under the key encrypted in `ct_sk`.
    pub fn checker_proof(&mut self, ct_sk: &[Ciphertext]) -> Option<Vec<RevealMessage>> {
        let pending = self.pending.take()?;
        let p = self.params.clone();
        if ct_sk.len() != p.se.key_bits as usize || ct_sk.iter().any(|c| p.hpk.check(c).is_err()) {
            return None;
        }
        self.hsk.dec_word(ct_sk).ok()?;
        match p.eval_se(ct_sk, &pending.p) {
            Ok(y) if y == pending.y => Some(pending.reveals),
            _ => None,
        }
    }

    fn dispatch(&mut self, req: &Frame) -> Result<Frame, ProtocolError> {
        if self.session != Some(req.session) {
            self.start_session(req.session);
        }
        let id = req.session;
        Ok(match req.kind {
            FrameKind::Encode => {
                let q: EncodeQuery = req.expect(FrameKind::Encode)?;
                self.vs_encode(&q).frame(id)
            }
            FrameKind::Path => {
                let b: PathBody = req.expect(FrameKind::Path)?;
                Frame::new(FrameKind::Path, id, &PathAnswer { input: self.vs_path(&b.tables) })
            }
            FrameKind::Checker => match req.expect::<CheckerBody>(FrameKind::Checker)? {
                CheckerBody::Query { query, challenges } => Frame::new(
                    FrameKind::Commit,
                    id,
                    &CommitBody {
                        commits: self.checker_query(&query, &challenges),
                    },
                ),
                CheckerBody::Proof { ct_sk } => Frame::new(
                    FrameKind::Reveal,
                    id,
                    &RevealBody {
                        reveals: self.checker_proof(&ct_sk),
                    },
                ),
            },
            FrameKind::Result => Frame::new(FrameKind::Result, id, &serde_json::json!({ "ack": true })),
            other => Frame::error(id, format!("unexpected {other:?} request")),
        })
    }
}

impl Service for Developer {
    fn handle(&mut self, req: &Frame) -> Frame {
        self.dispatch(req)
            .unwrap_or_else(|e| Frame::error(req.session, e.to_string()))
    }
}
