//! Session certificates and third-party auditing.
//!
//! A certificate carries the public parameters, the specification text, the
//! session plan and every exchange. Records form a hash chain rooted at the
//! parameter hash, and the whole document is sealed with one more hash.
//! Auditing replays the verifier against the recorded answers: any
//! difference in queries, checker rounds, results or verdict fails the audit.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use std::sync::Arc;

use crate::commitment::{BlockTranscript, Transcript};
use crate::he::Ciphertext;
use crate::protocol::{
    CheckerExchange, CheckerQuery, EncodeAnswer, EncodeQuery, Inputs, Mode, PathRecord, ProtocolError, PublicParams,
    Record, SessionOutcome, SessionPlan, Verdict, Verifier, VerifierOptions,
};
use crate::protocol::{InputResult, Oracle};
use crate::symcrypto::{se_dec, SeKey};
use crate::vga::{coverage_report, CoverageReport};

pub const CERT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CertError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed certificate: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("unsupported certificate version {0} (expected {CERT_VERSION})")]
    Version(u32),
    #[error("certificate is corrupted: {0}")]
    Corrupt(String),
}

/// General-mode key material, disclosed in the certificate so that the
/// auditor can check every checker round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralPart {
    #[serde(with = "crate::bitstr")]
    pub sk: Vec<bool>,
    pub ct_seed: u64,
    pub ct_sk: Vec<Ciphertext>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certificate {
    pub version: u32,
    pub mode: Mode,
    pub session: u64,
    pub plan: SessionPlan,
    /// Specification source text.
    pub spec: String,
    pub params: PublicParams,
    pub params_hash: String,
    pub paths: Vec<PathRecord>,
    pub records: Vec<Record>,
    pub results: Vec<InputResult>,
    pub coverage: CoverageReport,
    pub verdict: Verdict,
    pub general: Option<GeneralPart>,
    #[serde(default)]
    pub seal: String,
}

fn sha_hex(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    hex::encode(h.finalize())
}

fn record_hash(prev: &str, r: &Record) -> String {
    let mut r = r.clone();
    r.hash.clear();
    sha_hex(&[prev.as_bytes(), &serde_json::to_vec(&r).expect("serializable")])
}

impl Certificate {
    pub(crate) fn new(
        v: &Verifier,
        plan: SessionPlan,
        outcome: SessionOutcome,
        general: Option<GeneralPart>,
    ) -> Certificate {
        let params: &PublicParams = v.params();
        let coverage = coverage_report(&params.structure, &outcome.records);
        let mut c = Certificate {
            version: CERT_VERSION,
            mode: plan.mode,
            session: v.options().session,
            plan,
            spec: v.spec_source().to_string(),
            params_hash: hex::encode(params.hash()),
            params: params.clone(),
            paths: outcome.paths,
            records: outcome.records,
            results: outcome.results,
            coverage,
            verdict: outcome.verdict,
            general,
            seal: String::new(),
        };
        c.reseal();
        c
    }

    /// Recomputes the record chain and the seal after an edit.
    pub fn reseal(&mut self) {
        let mut prev = self.params_hash.clone();
        for r in &mut self.records {
            r.hash = record_hash(&prev, r);
            prev = r.hash.clone();
        }
        self.seal = self.compute_seal();
    }

    fn compute_seal(&self) -> String {
        let mut c = serde_json::to_value(self).expect("serializable");
        c["seal"] = serde_json::Value::String(String::new());
        sha_hex(&[&serde_json::to_vec(&c).expect("serializable")])
    }

    /// Checks the record chain and the seal.
    pub fn check_integrity(&self) -> Result<(), CertError> {
        if self.version != CERT_VERSION {
            return Err(CertError::Version(self.version));
        }
        let mut prev = self.params_hash.clone();
        for (i, r) in self.records.iter().enumerate() {
            if r.hash != record_hash(&prev, r) {
                return Err(CertError::Corrupt(format!("record {i} breaks the hash chain")));
            }
            prev = r.hash.clone();
        }
        if self.seal != self.compute_seal() {
            return Err(CertError::Corrupt("seal mismatch".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Certificate, CertError> {
        let v: serde_json::Value = serde_json::from_str(s)?;
        match v.get("version").and_then(|v| v.as_u64()) {
            Some(x) if x == u64::from(CERT_VERSION) => {}
            Some(x) => return Err(CertError::Version(x as u32)),
            None => return Err(CertError::Corrupt("missing version".into())),
        }
        let c: Certificate = serde_json::from_value(v)?;
        c.check_integrity()?;
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<(), CertError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Certificate, CertError> {
        Certificate::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn accepted(&self) -> bool {
        self.verdict.accept
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub pass: bool,
    pub reason: Option<String>,
}

impl AuditReport {
    fn fail(reason: impl Into<String>) -> AuditReport {
        AuditReport {
            pass: false,
            reason: Some(reason.into()),
        }
    }

    /// 1 when the certificate is upheld, 0 otherwise.
    pub fn result(&self) -> u8 {
        u8::from(self.pass)
    }
}

/// Serves recorded answers, insisting that the replayed verifier asks
/// exactly the recorded questions.
struct ReplayOracle<'a> {
    paths: &'a [PathRecord],
    records: &'a [Record],
    next_path: usize,
    next: usize,
}

impl Oracle for ReplayOracle<'_> {
    fn path(&mut self, tables: &[usize]) -> Result<Option<Inputs>, ProtocolError> {
        let i = self.next_path;
        let r = self
            .paths
            .get(i)
            .ok_or_else(|| ProtocolError::Replay(format!("path query {i} not recorded")))?;
        if r.tables != tables {
            return Err(ProtocolError::Replay(format!("path query {i} differs")));
        }
        self.next_path += 1;
        Ok(r.answer.clone())
    }

    fn encode(&mut self, q: &EncodeQuery) -> Result<EncodeAnswer, ProtocolError> {
        let i = self.next;
        let r = self
            .records
            .get(i)
            .ok_or_else(|| ProtocolError::Replay(format!("query {i} not recorded")))?;
        if r.query != *q {
            return Err(ProtocolError::Replay(format!("query {i} differs from the recomputed one")));
        }
        self.next += 1;
        Ok(r.answer.clone())
    }

    fn checker(
        &mut self,
        q: &CheckerQuery,
        _challenges: Vec<Vec<bool>>,
        _ct_sk: &[Ciphertext],
    ) -> Result<CheckerExchange, ProtocolError> {
        let i = self.next.wrapping_sub(1);
        let c = self
            .records
            .get(i)
            .and_then(|r| r.checker.as_ref())
            .filter(|c| !c.skipped)
            .ok_or_else(|| ProtocolError::Replay(format!("checker round for query {i} not recorded")))?;
        if c.y != q.y {
            return Err(ProtocolError::Replay(format!("checker query {i} differs")));
        }
        Ok(CheckerExchange {
            challenges: c.challenges.clone(),
            commits: c.commits.clone(),
            reveals: c.reveals.clone(),
        })
    }
}

fn strip_hashes(rs: &[Record]) -> Vec<Record> {
    rs.iter()
        .map(|r| Record {
            hash: String::new(),
            ..r.clone()
        })
        .collect()
}

fn replay(cert: &Certificate, general: Option<&GeneralPart>) -> Result<(), String> {
    cert.check_integrity().map_err(|e| e.to_string())?;
    if cert.mode != cert.plan.mode {
        return Err("mode field disagrees with the plan".into());
    }
    if cert.params_hash != hex::encode(cert.params.hash()) {
        return Err("parameter hash mismatch".into());
    }
    let opts = VerifierOptions {
        mode: cert.plan.mode,
        seed: cert.plan.vga.seed,
        budget: cert.plan.vga.budget,
        session: cert.session,
        path_requests: cert.plan.path_requests,
        extra_inputs: cert.plan.extra_inputs.clone(),
        critical_points: cert.plan.critical_points.clone(),
    };
    let v = Verifier::new(Arc::new(cert.params.clone()), &cert.spec, opts).map_err(|e| e.to_string())?;
    let mut oracle = ReplayOracle {
        paths: &cert.paths,
        records: &cert.records,
        next_path: 0,
        next: 0,
    };
    let out = v
        .replay(&cert.plan, general, &mut oracle)
        .map_err(|e| e.to_string())?;
    if oracle.next_path != cert.paths.len() || out.paths != cert.paths {
        return Err("path records differ from the replay".into());
    }
    if oracle.next != cert.records.len() {
        return Err(format!("{} recorded queries were never asked", cert.records.len() - oracle.next));
    }
    if out.records != strip_hashes(&cert.records) {
        let i = out
            .records
            .iter()
            .zip(strip_hashes(&cert.records))
            .position(|(a, b)| *a != b)
            .unwrap_or(0);
        return Err(format!("record {i} differs from the replay"));
    }
    if out.results != cert.results {
        return Err("recorded outputs differ from the replay".into());
    }
    if coverage_report(&cert.params.structure, &out.records) != cert.coverage {
        return Err("coverage report differs from the replay".into());
    }
    if out.verdict != cert.verdict {
        return Err("recorded verdict differs from the replay".into());
    }
    Ok(())
}

/// Audits an honest-mode certificate.
pub fn vs_eval_honest(cert: &Certificate) -> AuditReport {
    if cert.mode != Mode::Honest || cert.general.is_some() {
        return AuditReport::fail("not an honest-mode certificate");
    }
    match replay(cert, None) {
        Ok(()) => AuditReport {
            pass: true,
            reason: None,
        },
        Err(e) => AuditReport::fail(e),
    }
}

/// Audits a general-mode certificate: the replay plus a direct check of
/// every checker round against the disclosed key.
pub fn vs_eval_general(cert: &Certificate) -> AuditReport {
    let Some(g) = cert.general.as_ref().filter(|_| cert.mode == Mode::General) else {
        return AuditReport::fail("not a general-mode certificate");
    };
    let Ok(sk) = SeKey::from_bits(g.sk.clone()) else {
        return AuditReport::fail("SE key has an invalid length");
    };
    if sk.len() != cert.params.se.key_bits as usize {
        return AuditReport::fail("SE key length differs from the parameters");
    }
    match crate::protocol::general_keys(&cert.params, cert.plan.vga.seed, cert.session) {
        Ok(d) if d == *g => {}
        _ => return AuditReport::fail("SE key material is not derived from the session seed"),
    }
    if crate::protocol::encrypt_key(&cert.params, &sk, g.ct_seed) != g.ct_sk {
        return AuditReport::fail("ct_sk is not the encryption of sk under the recorded seed");
    }
    if !cert.params.code.is_reproducible() {
        return AuditReport::fail("commitment code does not match its seed");
    }
    for (i, r) in cert.records.iter().enumerate() {
        let Some(c) = &r.checker else {
            return AuditReport::fail(format!("record {i} has no checker round"));
        };
        let null = matches!(r.answer, EncodeAnswer::Null);
        if null && !c.skipped {
            return AuditReport::fail(format!("record {i}: null answer with a checker round"));
        }
        if c.skipped {
            continue;
        }
        let Some(slice) = c.slice else {
            return AuditReport::fail(format!("record {i}: checker round without a slice"));
        };
        let p: Vec<Ciphertext> = match (&r.query.kind, &r.answer, slice) {
            (_, EncodeAnswer::Word(w), crate::protocol::Slice::Full) => w.clone(),
            (crate::protocol::QueryKind::Q2 { v, .. }, _, crate::protocol::Slice::Tag) => v[..v.len() / 2].to_vec(),
            (crate::protocol::QueryKind::Q2 { v, .. }, _, crate::protocol::Slice::Payload) => v[v.len() / 2..].to_vec(),
            _ => return AuditReport::fail(format!("record {i}: slice does not fit the answer")),
        };
        match cert.params.eval_se(&g.ct_sk, &p) {
            Ok(y) if y == c.y => {}
            _ => return AuditReport::fail(format!("record {i}: y is not Eval(SE.Enc, ct_sk, p)")),
        }
        if c.passed {
            let opened = match (&c.commits, &c.reveals) {
                (Some(cm), Some(rv)) if cm.len() == c.challenges.len() && rv.len() == cm.len() => Transcript {
                    len: p.len(),
                    blocks: c
                        .challenges
                        .iter()
                        .zip(cm)
                        .zip(rv)
                        .map(|((ch, cm), rv)| BlockTranscript {
                            challenge: ch.clone(),
                            commit: cm.clone(),
                            reveal: rv.clone(),
                        })
                        .collect(),
                }
                .open(&cert.params.code),
                _ => None,
            };
            if opened.as_deref() != Some(&c.d[..]) {
                return AuditReport::fail(format!("record {i}: commitment does not open to d"));
            }
            if se_dec(&sk, &c.d).is_err() {
                return AuditReport::fail(format!("record {i}: d cannot be decrypted"));
            }
        }
    }
    match replay(cert, Some(g)) {
        Ok(()) => AuditReport {
            pass: true,
            reason: None,
        },
        Err(e) => AuditReport::fail(e),
    }
}

/// Dispatches on the certificate's mode.
pub fn audit(cert: &Certificate) -> AuditReport {
    match cert.mode {
        Mode::Honest => vs_eval_honest(cert),
        Mode::General => vs_eval_general(cert),
    }
}
