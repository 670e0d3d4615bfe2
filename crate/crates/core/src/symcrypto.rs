//! Deterministic private-key encryption (a small balanced Feistel network),
//! its boolean circuit, and a counter-mode PRG built on the same permutation.
//!
//! Blocks and keys are MSB-first bit vectors. Internally a block is a word
//! whose high half is `L` and low half is `R`. Round `r` maps `(L, R)` to
//! `(R, L ^ F_r(R))` with
//! `F_r(x) = chi(x ^ k_r) ^ rotl(x, 3) ^ c_r` and
//! `chi(t)_j = t_j ^ (!t_{j+1} & t_{j+2})`, indices mod the half width.
//! Round keys are a linear schedule over the key bits, so every round costs
//! exactly one multiplicative level.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::circuit::{Bit, Builder, Circuit};

pub const ROUNDS: usize = 8;
pub const PRG_BLOCK: usize = 32;
const MAX_KEY_BITS: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeError {
    #[error("key length {0} outside 8..=64")]
    KeyLength(u32),
    #[error("block has {got} bits, expected {want}")]
    Width { got: usize, want: usize },
    #[error("unsupported block width {0} (even, 4..=64)")]
    UnsupportedWidth(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeKey(pub Vec<bool>);

impl SeKey {
    pub fn from_bits(bits: Vec<bool>) -> Result<SeKey, SeError> {
        check_key_len(bits.len() as u32)?;
        Ok(SeKey(bits))
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn word(&self) -> u64 {
        to_word(&self.0)
    }
}

fn check_key_len(k: u32) -> Result<(), SeError> {
    if (8..=MAX_KEY_BITS).contains(&k) {
        Ok(())
    } else {
        Err(SeError::KeyLength(k))
    }
}

fn check_width(b: usize) -> Result<(), SeError> {
    if (4..=64).contains(&b) && b.is_multiple_of(2) {
        Ok(())
    } else {
        Err(SeError::UnsupportedWidth(b))
    }
}

fn to_word(bits: &[bool]) -> u64 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | u64::from(b))
}

fn from_word(w: u64, n: usize) -> Vec<bool> {
    (0..n).rev().map(|i| (w >> i) & 1 == 1).collect()
}

fn mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Key bit (LSB index) feeding bit `j` of round key `r`.
fn key_index(r: usize, j: usize, h: usize, k: usize) -> usize {
    (r * (h + 5) + j) % k
}

fn round_constant(r: usize, h: usize) -> u64 {
    0x9e37_79b9_7f4a_7c15u64.rotate_left(7 * r as u32 + 1) & mask(h)
}

fn round_key(key: u64, k: usize, r: usize, h: usize) -> u64 {
    (0..h).fold(0, |acc, j| acc | (((key >> key_index(r, j, h, k)) & 1) << j))
}

fn rotl(x: u64, s: usize, h: usize) -> u64 {
    let s = s % h;
    ((x << s) | (x >> (h - s))) & mask(h)
}

fn rotr(x: u64, s: usize, h: usize) -> u64 {
    rotl(x, h - s % h, h)
}

fn round_f(x: u64, rk: u64, rc: u64, h: usize) -> u64 {
    let t = x ^ rk;
    let chi = t ^ (!rotr(t, 1, h) & rotr(t, 2, h) & mask(h));
    chi ^ rotl(x, 3, h) ^ rc
}

fn keyed_rounds(key: &SeKey, h: usize) -> Vec<(u64, u64)> {
    let (kw, k) = (key.word(), key.len());
    (0..ROUNDS)
        .map(|r| (round_key(kw, k, r, h), round_constant(r, h)))
        .collect()
}

fn enc_word(rounds: &[(u64, u64)], w: u64, b: usize) -> u64 {
    let h = b / 2;
    let (mut l, mut r) = (w >> h, w & mask(h));
    for &(rk, rc) in rounds {
        (l, r) = (r, l ^ round_f(r, rk, rc, h));
    }
    (l << h) | r
}

fn dec_word(rounds: &[(u64, u64)], w: u64, b: usize) -> u64 {
    let h = b / 2;
    let (mut l, mut r) = (w >> h, w & mask(h));
    for &(rk, rc) in rounds.iter().rev() {
        (l, r) = (r ^ round_f(l, rk, rc, h), l);
    }
    (l << h) | r
}

pub fn se_keygen<R: RngCore + ?Sized>(k: u32, rng: &mut R) -> Result<SeKey, SeError> {
    check_key_len(k)?;
    let w = rng.next_u64();
    Ok(SeKey(from_word(w, k as usize)))
}

pub fn se_enc(sk: &SeKey, m: &[bool]) -> Result<Vec<bool>, SeError> {
    check_width(m.len())?;
    let rounds = keyed_rounds(sk, m.len() / 2);
    Ok(from_word(enc_word(&rounds, to_word(m), m.len()), m.len()))
}

pub fn se_dec(sk: &SeKey, c: &[bool]) -> Result<Vec<bool>, SeError> {
    check_width(c.len())?;
    let rounds = keyed_rounds(sk, c.len() / 2);
    Ok(from_word(dec_word(&rounds, to_word(c), c.len()), c.len()))
}

/// Circuit over `key (k bits) ∥ message (b bits)` computing `se_enc`.
pub fn se_enc_circuit(k: u32, b: usize) -> Result<Circuit, SeError> {
    check_key_len(k)?;
    check_width(b)?;
    let (k, h) = (k as usize, b / 2);
    let mut bld = Builder::new(k + b);
    // LSB-indexed views of the MSB-first input layout
    let key: Vec<Bit> = (0..k).map(|i| bld.input(k - 1 - i)).collect();
    let msg: Vec<Bit> = (0..b).map(|i| bld.input(k + b - 1 - i)).collect();
    let mut r: Vec<Bit> = msg[..h].to_vec();
    let mut l: Vec<Bit> = msg[h..].to_vec();
    for round in 0..ROUNDS {
        let rc = round_constant(round, h);
        let t: Vec<Bit> = (0..h)
            .map(|j| bld.xor(r[j], key[key_index(round, j, h, k)]))
            .collect();
        let mut f = Vec::with_capacity(h);
        for j in 0..h {
            let n1 = bld.not(t[(j + 1) % h]);
            let a = bld.and(n1, t[(j + 2) % h]);
            let chi = bld.xor(t[j], a);
            let lin = bld.xor(chi, r[(j + 3 * h - 3) % h]);
            f.push(if (rc >> j) & 1 == 1 { bld.not(lin) } else { lin });
        }
        let new_r: Vec<Bit> = (0..h).map(|j| bld.xor(l[j], f[j])).collect();
        l = std::mem::replace(&mut r, new_r);
    }
    let out: Vec<Bit> = l.iter().rev().chain(r.iter().rev()).copied().collect();
    Ok(bld.finish(&out))
}

fn prg_rounds(seed: &[bool]) -> Vec<(u64, u64)> {
    // seeds shorter than 8 bits are zero-extended; longer than 64 are folded
    let mut bits = seed.to_vec();
    if bits.len() < 8 {
        bits.resize(8, false);
    }
    if bits.len() > 64 {
        let mut folded = vec![false; 64];
        for (i, b) in bits.iter().enumerate() {
            folded[i % 64] ^= b;
        }
        bits = folded;
    }
    keyed_rounds(&SeKey(bits), PRG_BLOCK / 2)
}

/// `n` pseudorandom bits: block `i` is the Feistel encryption of counter `i`
/// under the seed; bits are taken MSB first.
pub fn prg(seed: &[bool], n: usize) -> Vec<bool> {
    let rounds = prg_rounds(seed);
    let mut out = Vec::with_capacity(n);
    let mut ctr = 0u64;
    while out.len() < n {
        let w = enc_word(&rounds, ctr, PRG_BLOCK);
        let take = (n - out.len()).min(PRG_BLOCK);
        out.extend(from_word(w, PRG_BLOCK).into_iter().take(take));
        ctr += 1;
    }
    out
}

/// Bit `i` of the PRG stream.
pub fn bit_at(seed: &[bool], i: usize) -> bool {
    let rounds = prg_rounds(seed);
    let w = enc_word(&rounds, (i / PRG_BLOCK) as u64, PRG_BLOCK);
    (w >> (PRG_BLOCK - 1 - i % PRG_BLOCK)) & 1 == 1
}
