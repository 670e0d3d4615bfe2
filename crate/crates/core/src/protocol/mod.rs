//! Developer and verifier state machines, public parameters, and the wire
//! protocol connecting them.

mod developer;
mod malicious;
mod session;
mod verifier;
pub mod wire;

use rand_chacha::ChaCha20Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::circuit::{build_universal, Circuit, CircuitError, UniversalCircuit};
use crate::commitment::{CodeSpec, CommitError, CommitMessage, RevealMessage};
use crate::he::{Ciphertext, HeError, PublicKey};
use crate::symcrypto::{se_enc_circuit, SeError, ROUNDS};
use crate::table::{StructureGraph, TableError, Value};

pub use developer::{vs_encrypt, Developer, EncryptOptions};
pub use malicious::{MaliciousDeveloper, Strategy};
pub(crate) use session::Oracle;
pub use session::{
    CheckerRecord, InputResult, InputSource, PathRecord, Record, SessionOutcome, SessionPlan, Slice,
    TableOutcome, Verdict,
};
pub(crate) use verifier::{encrypt_key, general_keys};
pub use verifier::{eval_encrypted, verify_session, Verifier, VerifierOptions};

pub const PARAMS_VERSION: u32 = 1;

/// External input assignment.
pub type Inputs = BTreeMap<String, Value>;

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error(transparent)]
    He(#[from] HeError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Se(#[from] SeError),
    #[error(transparent)]
    Commit(#[from] CommitError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid public parameters: {0}")]
    Params(String),
    #[error("specification does not match the structure: {0}")]
    Spec(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("channel closed")]
    Closed,
    #[error("transcript replay diverged: {0}")]
    Replay(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Honest,
    General,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "honest" => Ok(Mode::Honest),
            "general" => Ok(Mode::General),
            _ => Err(format!("unknown mode `{s}` (honest | general)")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Honest => "honest",
            Mode::General => "general",
        })
    }
}

/// U is published as its budget plus a fingerprint; anyone rebuilds it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniversalSpec {
    pub n_in: usize,
    pub slots: usize,
    pub m: usize,
    pub program_len: usize,
    pub gates: usize,
    pub and_depth: usize,
    pub fingerprint: String,
}

impl UniversalSpec {
    pub fn of(u: &UniversalCircuit) -> UniversalSpec {
        UniversalSpec {
            n_in: u.n_in(),
            slots: u.slots(),
            m: u.m(),
            program_len: u.program_len(),
            gates: u.circuit().gates().len(),
            and_depth: u.circuit().and_depth(),
            fingerprint: hex::encode(u.circuit().fingerprint()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeSpec {
    pub key_bits: u32,
    pub rounds: usize,
    /// Slice widths: half word (tag or payload) and full word.
    pub widths: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodeQuery {
    pub table: usize,
    #[serde(flatten)]
    pub kind: QueryKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "q", rename_all = "lowercase")]
pub enum QueryKind {
    /// Encode the plaintext word of external port `port`.
    Q1 {
        port: usize,
        #[serde(with = "crate::bitstr")]
        word: Vec<bool>,
    },
    /// Validate and decode `v = T'_table(u)`.
    Q2 { u: Vec<Ciphertext>, v: Vec<Ciphertext> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum EncodeAnswer {
    Null,
    Word(Vec<Ciphertext>),
    Top,
    Bottom,
    Payload(#[serde(with = "crate::bitstr")] Vec<bool>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckerQuery {
    pub table: usize,
    pub p: Vec<Ciphertext>,
    pub y: Vec<Ciphertext>,
}

/// Developer's replies during one checker round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckerExchange {
    #[serde(with = "crate::bitstr::many")]
    pub challenges: Vec<Vec<bool>>,
    pub commits: Option<Vec<CommitMessage>>,
    pub reveals: Option<Vec<RevealMessage>>,
}

#[derive(Debug, Default)]
struct Cache {
    universal: OnceLock<Arc<UniversalCircuit>>,
    se: OnceLock<[Circuit; 2]>,
}

impl Clone for Cache {
    fn clone(&self) -> Self {
        Cache {
            universal: self.universal.clone(),
            se: self.se.clone(),
        }
    }
}

/// Everything the developer publishes: the encrypted graph G′ (structure
/// plus one encrypted program per table), hpk, U, and protocol constants.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PublicParams {
    pub version: u32,
    pub security: u32,
    pub structure: StructureGraph,
    pub programs: Vec<Vec<Ciphertext>>,
    pub hpk: PublicKey,
    pub universal: UniversalSpec,
    pub lambda: usize,
    pub se: SeSpec,
    pub code: CodeSpec,
    #[serde(skip)]
    cache: Cache,
}

impl PublicParams {
    pub(crate) fn assemble(
        k: u32,
        structure: StructureGraph,
        programs: Vec<Vec<Ciphertext>>,
        hpk: PublicKey,
        u: Arc<UniversalCircuit>,
        code: CodeSpec,
    ) -> PublicParams {
        let m = structure.width as usize;
        let p = PublicParams {
            version: PARAMS_VERSION,
            security: k,
            structure,
            programs,
            lambda: hpk.lambda(),
            hpk,
            universal: UniversalSpec::of(&u),
            se: SeSpec {
                key_bits: k,
                rounds: ROUNDS,
                widths: [m / 2, m],
            },
            code,
            cache: Cache::default(),
        };
        let _ = p.cache.universal.set(u);
        p
    }

    pub fn width(&self) -> usize {
        self.structure.width as usize
    }

    pub fn half(&self) -> usize {
        self.width() / 2
    }

    /// Rebuilds U and checks it against the published fingerprint.
    pub fn universal(&self) -> Result<Arc<UniversalCircuit>, ProtocolError> {
        if let Some(u) = self.cache.universal.get() {
            return Ok(u.clone());
        }
        let s = &self.universal;
        let u = universal_cached(s.n_in, s.slots, s.m)?;
        if UniversalSpec::of(&u) != *s {
            return Err(ProtocolError::Params("universal circuit fingerprint mismatch".into()));
        }
        Ok(self.cache.universal.get_or_init(|| u).clone())
    }

    /// SE circuit for a slice width (`m/2` or `m`).
    pub fn se_circuit(&self, width: usize) -> Result<&Circuit, ProtocolError> {
        if self.cache.se.get().is_none() {
            let [h, m] = self.se.widths;
            let pair = [se_enc_circuit(self.se.key_bits, h)?, se_enc_circuit(self.se.key_bits, m)?];
            let _ = self.cache.se.set(pair);
        }
        let [h, m] = self.se.widths;
        let pair = self.cache.se.get().expect("initialized");
        if width == h {
            Ok(&pair[0])
        } else if width == m {
            Ok(&pair[1])
        } else {
            Err(ProtocolError::Se(SeError::UnsupportedWidth(width)))
        }
    }

    /// SHA-256 over the canonical JSON form.
    pub fn hash(&self) -> [u8; 32] {
        Sha256::digest(serde_json::to_vec(self).expect("serializable")).into()
    }

    /// Structural checks a verifier runs before a session.
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |m: String| Err(ProtocolError::Params(m));
        if self.version != PARAMS_VERSION {
            return bad(format!("version {} != {PARAMS_VERSION}", self.version));
        }
        self.structure.validate().map_err(ProtocolError::Params)?;
        let m = self.width();
        if self.universal.m != m {
            return bad(format!("U has {} outputs, word width is {m}", self.universal.m));
        }
        if self.programs.len() != self.structure.len() {
            return bad(format!(
                "{} programs for {} tables",
                self.programs.len(),
                self.structure.len()
            ));
        }
        if let Some((i, p)) = self
            .programs
            .iter()
            .enumerate()
            .find(|(_, p)| p.len() != self.universal.program_len)
        {
            return bad(format!("program {i} has {} bits", p.len()));
        }
        if let Some((i, n)) = self
            .structure
            .nodes
            .iter()
            .enumerate()
            .find(|(_, n)| n.ports.len() * m > self.universal.n_in)
        {
            return bad(format!("table {i} has {} ports, U takes {}", n.ports.len(), self.universal.n_in));
        }
        if self.lambda != self.hpk.lambda() {
            return bad(format!("lambda {} != key's {}", self.lambda, self.hpk.lambda()));
        }
        if self.se.widths != [m / 2, m] || self.se.rounds != ROUNDS {
            return bad("SE widths or rounds".into());
        }
        if !self.code.is_reproducible() {
            return bad("commitment code does not match its seed".into());
        }
        for p in &self.programs {
            for c in p {
                self.hpk.check(c)?;
            }
        }
        self.universal()?;
        Ok(())
    }

    /// `E_C ∥ x` padded to U's input width with noiseless zeros.
    pub fn universal_input(&self, table: usize, x: &[Ciphertext]) -> Vec<Ciphertext> {
        let mut v = Vec::with_capacity(self.universal.program_len + self.universal.n_in);
        v.extend_from_slice(&self.programs[table]);
        v.extend_from_slice(x);
        let zero = self.hpk.trivial(false);
        v.resize(self.universal.program_len + self.universal.n_in, zero);
        v
    }

    /// `T'_i(x) = Eval(hpk, U, E_C_i, x)`, all `m` projections at once.
    pub fn eval_table(&self, table: usize, x: &[Ciphertext]) -> Result<Vec<Ciphertext>, ProtocolError> {
        let u = self.universal()?;
        Ok(self.hpk.eval_many(u.circuit(), &self.universal_input(table, x))?)
    }

    /// `Eval(hpk, SE.Enc, ct_sk, slice)`.
    pub fn eval_se(&self, ct_sk: &[Ciphertext], slice: &[Ciphertext]) -> Result<Vec<Ciphertext>, ProtocolError> {
        let c = self.se_circuit(slice.len())?;
        let mut x = ct_sk.to_vec();
        x.extend_from_slice(slice);
        Ok(self.hpk.eval_many(c, &x)?)
    }
}

/// U for a budget, built once per process.
pub fn universal_cached(n_in: usize, slots: usize, m: usize) -> Result<Arc<UniversalCircuit>, CircuitError> {
    static CACHE: Mutex<BTreeMap<(usize, usize, usize), Arc<UniversalCircuit>>> = Mutex::new(BTreeMap::new());
    let key = (n_in, slots, m);
    if let Some(u) = CACHE.lock().expect("not poisoned").get(&key) {
        return Ok(u.clone());
    }
    let u = Arc::new(build_universal(n_in, slots, m)?);
    CACHE.lock().expect("not poisoned").insert(key, u.clone());
    Ok(u)
}

/// Deterministic RNG from labelled parts.
pub fn derive_rng(label: &str, parts: &[u64]) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(label.as_bytes());
    for p in parts {
        h.update(p.to_be_bytes());
    }
    ChaCha20Rng::from_seed(h.finalize().into())
}

pub fn derive_seed(label: &str, parts: &[u64]) -> u64 {
    use rand::RngCore;
    derive_rng(label, parts).next_u64()
}
