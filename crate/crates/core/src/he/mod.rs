//! Bit-level homomorphic encryption with two interchangeable backends.
//!
//! `transparent` carries the plaintext bit next to a nonce and is used as a
//! functional oracle; `integer-she` is a toy somewhat-homomorphic scheme over
//! the integers with an enforced multiplicative depth budget.

mod container;
mod integer;
mod transparent;

use base64::Engine;
use rand::RngCore;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use std::fmt;

use crate::circuit::Circuit;

pub use container::{ContainerKind, CONTAINER_VERSION};
pub use integer::IntegerParams;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HeError {
    #[error("security parameter K={0} below the floor of 8")]
    SecurityParameter(u32),
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("malformed ciphertext: {0}")]
    Malformed(String),
    #[error("ciphertext or key belongs to a different backend")]
    BackendMismatch,
    #[error("circuit needs multiplicative depth {needed}, budget is {budget}")]
    DepthBudgetExceeded { needed: usize, budget: usize },
    #[error("noise estimate {bits:.1} bits exceeds limit {limit} bits")]
    NoiseBudgetExceeded { bits: f64, limit: u32 },
    #[error("circuit expects {want} ciphertexts, got {got}")]
    Width { got: usize, want: usize },
    #[error("circuit {index} has {got} inputs, previous stage yields {want}")]
    Incompatible { index: usize, got: usize, want: usize },
    #[error("eval expects a single-output circuit, got {0} outputs")]
    NotSingleOutput(usize),
    #[error("container: {0}")]
    Container(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Transparent,
    IntegerShe,
}

impl BackendKind {
    pub fn tag(self) -> u8 {
        match self {
            BackendKind::Transparent => 1,
            BackendKind::IntegerShe => 2,
        }
    }

    pub fn from_tag(t: u8) -> Option<BackendKind> {
        match t {
            1 => Some(BackendKind::Transparent),
            2 => Some(BackendKind::IntegerShe),
            _ => None,
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Transparent => "transparent",
            BackendKind::IntegerShe => "integer-she",
        })
    }
}

impl std::str::FromStr for BackendKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "transparent" => Ok(BackendKind::Transparent),
            "integer-she" | "integer" => Ok(BackendKind::IntegerShe),
            _ => Err(format!("unknown backend `{s}` (transparent | integer-she)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackendConfig {
    Transparent,
    IntegerShe(IntegerParams),
}

impl BackendConfig {
    pub fn kind(&self) -> BackendKind {
        match self {
            BackendConfig::Transparent => BackendKind::Transparent,
            BackendConfig::IntegerShe(_) => BackendKind::IntegerShe,
        }
    }

    pub fn default_for(kind: BackendKind) -> BackendConfig {
        match kind {
            BackendKind::Transparent => BackendConfig::Transparent,
            BackendKind::IntegerShe => BackendConfig::IntegerShe(IntegerParams::default()),
        }
    }
}

/// A single-bit ciphertext: opaque bytes of fixed length per key pair.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ciphertext(pub Vec<u8>);

impl Ciphertext {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    /// Length in bits (λ).
    pub fn bits(&self) -> usize {
        self.0.len() * 8
    }
}

impl fmt::Debug for Ciphertext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = Sha256::digest(&self.0);
        write!(f, "Ciphertext({}B #{:02x}{:02x}{:02x}{:02x})", self.0.len(), h[0], h[1], h[2], h[3])
    }
}

impl Serialize for Ciphertext {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&base64::engine::general_purpose::STANDARD.encode(&self.0))
    }
}

impl<'de> Deserialize<'de> for Ciphertext {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        base64::engine::general_purpose::STANDARD
            .decode(s)
            .map(Ciphertext)
            .map_err(serde::de::Error::custom)
    }
}

/// Hash of a ciphertext sequence, used for compact transcript references.
pub fn digest(cts: &[Ciphertext]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((cts.len() as u64).to_be_bytes());
    for c in cts {
        h.update((c.0.len() as u32).to_be_bytes());
        h.update(&c.0);
    }
    h.finalize().into()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PublicKey {
    Transparent(transparent::PublicKey),
    Integer(integer::PublicKey),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SecretKey {
    Transparent(transparent::SecretKey),
    Integer(integer::SecretKey),
}

#[derive(Clone, Debug)]
pub struct HeKeyPair {
    pub pk: PublicKey,
    pub sk: SecretKey,
}

pub fn keygen<R: RngCore + ?Sized>(
    cfg: &BackendConfig,
    k: u32,
    rng: &mut R,
) -> Result<HeKeyPair, HeError> {
    if k < 8 {
        return Err(HeError::SecurityParameter(k));
    }
    Ok(match cfg {
        BackendConfig::Transparent => {
            let (pk, sk) = transparent::keygen(k, rng);
            HeKeyPair {
                pk: PublicKey::Transparent(pk),
                sk: SecretKey::Transparent(sk),
            }
        }
        BackendConfig::IntegerShe(p) => {
            let (pk, sk) = integer::keygen(p, rng)?;
            HeKeyPair {
                pk: PublicKey::Integer(pk),
                sk: SecretKey::Integer(sk),
            }
        }
    })
}

impl PublicKey {
    pub fn kind(&self) -> BackendKind {
        match self {
            PublicKey::Transparent(_) => BackendKind::Transparent,
            PublicKey::Integer(_) => BackendKind::IntegerShe,
        }
    }

    /// Ciphertext length λ in bits.
    pub fn lambda(&self) -> usize {
        self.ct_bytes() * 8
    }

    pub fn ct_bytes(&self) -> usize {
        match self {
            PublicKey::Transparent(k) => k.ct_bytes(),
            PublicKey::Integer(k) => k.ct_bytes(),
        }
    }

    /// Multiplicative depth a fresh ciphertext can absorb; `None` means
    /// unbounded.
    pub fn depth_budget(&self) -> Option<usize> {
        match self {
            PublicKey::Transparent(_) => None,
            PublicKey::Integer(k) => Some(k.params().depth_budget()),
        }
    }

    pub fn enc<R: RngCore + ?Sized>(&self, b: bool, rng: &mut R) -> Ciphertext {
        match self {
            PublicKey::Transparent(k) => k.enc(b, rng),
            PublicKey::Integer(k) => k.enc(b, rng),
        }
    }

    pub fn enc_word<R: RngCore + ?Sized>(&self, bits: &[bool], rng: &mut R) -> Vec<Ciphertext> {
        bits.iter().map(|&b| self.enc(b, rng)).collect()
    }

    /// Noiseless encryption of a public constant.
    pub fn trivial(&self, b: bool) -> Ciphertext {
        match self {
            PublicKey::Transparent(k) => k.trivial(b),
            PublicKey::Integer(k) => k.trivial(b),
        }
    }

    /// Checks length and backend framing.
    pub fn check(&self, c: &Ciphertext) -> Result<(), HeError> {
        match self {
            PublicKey::Transparent(k) => k.check(c),
            PublicKey::Integer(k) => k.parse(c).map(|_| ()),
        }
    }

    /// Evaluates a single-output circuit.
    pub fn eval(&self, c: &Circuit, cts: &[Ciphertext]) -> Result<Ciphertext, HeError> {
        if c.outputs().len() != 1 {
            return Err(HeError::NotSingleOutput(c.outputs().len()));
        }
        Ok(self.eval_many(c, cts)?.remove(0))
    }

    /// Evaluates every output of `c`. Output `k` is byte-identical to
    /// `eval(c.project(k), cts)`.
    pub fn eval_many(&self, c: &Circuit, cts: &[Ciphertext]) -> Result<Vec<Ciphertext>, HeError> {
        if cts.len() != c.inputs() {
            return Err(HeError::Width {
                got: cts.len(),
                want: c.inputs(),
            });
        }
        match self {
            PublicKey::Transparent(k) => k.eval(c, cts),
            PublicKey::Integer(k) => k.eval(c, cts),
        }
    }

    /// Multi-hop evaluation `f_t ∘ … ∘ f_1` over a compatible sequence.
    pub fn eval_star(&self, fs: &[Circuit], c0: &[Ciphertext]) -> Result<Vec<Ciphertext>, HeError> {
        let mut want = c0.len();
        for (i, f) in fs.iter().enumerate() {
            if f.inputs() != want {
                return Err(HeError::Incompatible {
                    index: i,
                    got: f.inputs(),
                    want,
                });
            }
            want = f.outputs().len();
        }
        let mut cur = c0.to_vec();
        for f in fs {
            cur = self.eval_many(f, &cur)?;
        }
        Ok(cur)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        container::write_public(self)
    }

    pub fn from_bytes(b: &[u8]) -> Result<PublicKey, HeError> {
        container::read_public(b)
    }

    pub fn fingerprint(&self) -> [u8; 32] {
        Sha256::digest(self.to_bytes()).into()
    }
}

impl Serialize for PublicKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&base64::engine::general_purpose::STANDARD.encode(self.to_bytes()))
    }
}

impl<'de> Deserialize<'de> for PublicKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(s)
            .map_err(serde::de::Error::custom)?;
        PublicKey::from_bytes(&bytes).map_err(serde::de::Error::custom)
    }
}

impl SecretKey {
    pub fn kind(&self) -> BackendKind {
        match self {
            SecretKey::Transparent(_) => BackendKind::Transparent,
            SecretKey::Integer(_) => BackendKind::IntegerShe,
        }
    }

    pub fn dec(&self, c: &Ciphertext) -> Result<bool, HeError> {
        match self {
            SecretKey::Transparent(k) => k.dec(c),
            SecretKey::Integer(k) => k.dec(c),
        }
    }

    pub fn dec_word(&self, cts: &[Ciphertext]) -> Result<Vec<bool>, HeError> {
        cts.iter().map(|c| self.dec(c)).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        container::write_secret(self)
    }

    pub fn from_bytes(b: &[u8]) -> Result<SecretKey, HeError> {
        container::read_secret(b)
    }
}

pub fn enc<R: RngCore + ?Sized>(pk: &PublicKey, b: bool, rng: &mut R) -> Ciphertext {
    pk.enc(b, rng)
}

pub fn enc_word<R: RngCore + ?Sized>(pk: &PublicKey, bits: &[bool], rng: &mut R) -> Vec<Ciphertext> {
    pk.enc_word(bits, rng)
}

pub fn dec(sk: &SecretKey, c: &Ciphertext) -> Result<bool, HeError> {
    sk.dec(c)
}

pub fn eval(pk: &PublicKey, c: &Circuit, cts: &[Ciphertext]) -> Result<Ciphertext, HeError> {
    pk.eval(c, cts)
}

pub fn eval_star(pk: &PublicKey, fs: &[Circuit], c0: &[Ciphertext]) -> Result<Vec<Ciphertext>, HeError> {
    pk.eval_star(fs, c0)
}

pub use container::{read_ciphertexts, write_ciphertexts};
