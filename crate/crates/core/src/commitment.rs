//! Naor-style commitment to many bits.
//!
//! The receiver picks `R` (length `2q`, weight `q`). The committer encodes
//! its data `D` with a linear code `E` of length `q`, masks it with the PRG
//! bits of seed `s` at the one-positions of `R`, and exposes the PRG bits at
//! the zero-positions. Opening reveals `s` and `D`.

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::symcrypto::prg;

pub const DEFAULT_EPSILON: f64 = 0.25;
pub const DEFAULT_MESSAGE_BITS: usize = 8;
const MAX_MESSAGE_BITS: usize = 16;
const CODE_RETRIES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CommitError {
    #[error("message block of {0} bits outside 1..=16")]
    MessageBits(usize),
    #[error("relative distance {0} outside (0, 1]")]
    Epsilon(String),
    #[error("no code with relative distance {eps} found for m_c={m_c}, q={q}")]
    Unsatisfiable { m_c: usize, q: usize, eps: String },
    #[error("challenge must have length {len} and weight {weight}")]
    Challenge { len: usize, weight: usize },
    #[error("data block has {got} bits, code expects {want}")]
    Width { got: usize, want: usize },
    #[error("{got} challenges for {want} blocks")]
    Blocks { got: usize, want: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeSpec {
    pub message_bits: usize,
    pub length: usize,
    pub epsilon: f64,
    pub security: u32,
    /// Generator rows, one `length`-bit codeword per message bit.
    #[serde(with = "crate::bitstr::many")]
    pub generator: Vec<Vec<bool>>,
    pub min_distance: usize,
    pub seed: u64,
}


/// Smallest `q` with `q · log2(2 / (2 − ε)) ≥ 3K`.
pub fn min_length(eps: f64, k: u32) -> usize {
    (3.0 * k as f64 / (2.0 / (2.0 - eps)).log2()).ceil() as usize
}

fn xor_into(acc: &mut [bool], row: &[bool]) {
    for (a, &b) in acc.iter_mut().zip(row) {
        *a ^= b;
    }
}

impl CodeSpec {
    /// `q / m_c`.
    pub fn expansion(&self) -> usize {
        self.length / self.message_bits
    }

    pub fn encode(&self, d: &[bool]) -> Result<Vec<bool>, CommitError> {
        if d.len() != self.message_bits {
            return Err(CommitError::Width {
                got: d.len(),
                want: self.message_bits,
            });
        }
        let mut c = vec![false; self.length];
        for (row, &bit) in self.generator.iter().zip(d) {
            if bit {
                xor_into(&mut c, row);
            }
        }
        Ok(c)
    }

    /// Messages whose codeword equals `c`.
    pub fn decode_exact(&self, c: &[bool]) -> Option<Vec<bool>> {
        (0..1u32 << self.message_bits).find_map(|v| {
            let d: Vec<bool> = (0..self.message_bits).map(|i| (v >> i) & 1 == 1).collect();
            (self.encode(&d).ok()?.as_slice() == c).then_some(d)
        })
    }

    /// Brute-force minimum distance (minimum nonzero codeword weight).
    pub fn compute_min_distance(&self) -> usize {
        (1..1u32 << self.message_bits)
            .map(|v| {
                let d: Vec<bool> = (0..self.message_bits).map(|i| (v >> i) & 1 == 1).collect();
                self.encode(&d).expect("width").iter().filter(|&&b| b).count()
            })
            .min()
            .unwrap_or(self.length)
    }

    /// Re-derives the code from its seed and compares (used by auditors).
    pub fn is_reproducible(&self) -> bool {
        gen_code(self.message_bits, self.epsilon, self.security, self.seed).as_ref() == Ok(self)
    }
}

pub fn gen_code(m_c: usize, eps: f64, k: u32, seed: u64) -> Result<CodeSpec, CommitError> {
    if m_c == 0 || m_c > MAX_MESSAGE_BITS {
        return Err(CommitError::MessageBits(m_c));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(CommitError::Epsilon(eps.to_string()));
    }
    let q = min_length(eps, k).max(1).div_ceil(m_c) * m_c;
    let need = (eps * q as f64).ceil() as usize;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let tries = if m_c == 1 { 1 } else { CODE_RETRIES };
    for _ in 0..tries {
        let generator: Vec<Vec<bool>> = if m_c == 1 {
            vec![vec![true; q]]
        } else {
            (0..m_c).map(|_| (0..q).map(|_| rng.gen()).collect()).collect()
        };
        let mut code = CodeSpec {
            message_bits: m_c,
            length: q,
            epsilon: eps,
            security: k,
            generator,
            min_distance: 0,
            seed,
        };
        code.min_distance = code.compute_min_distance();
        if code.min_distance >= need {
            return Ok(code);
        }
    }
    Err(CommitError::Unsatisfiable {
        m_c,
        q,
        eps: eps.to_string(),
    })
}

/// Uniform `2q`-bit vector of weight `q`.
pub fn choose_challenge<R: RngCore + ?Sized>(q: usize, rng: &mut R) -> Vec<bool> {
    let mut r = vec![false; 2 * q];
    for i in sample(rng, 2 * q, q) {
        r[i] = true;
    }
    r
}

fn check_challenge(r: &[bool], q: usize) -> Result<(), CommitError> {
    if r.len() == 2 * q && r.iter().filter(|&&b| b).count() == q {
        Ok(())
    } else {
        Err(CommitError::Challenge {
            len: 2 * q,
            weight: q,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitMessage {
    #[serde(with = "crate::bitstr")]
    pub e: Vec<bool>,
    /// PRG bits at the zero-positions of `R`, in position order.
    #[serde(with = "crate::bitstr")]
    pub exposed: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevealMessage {
    #[serde(with = "crate::bitstr")]
    pub seed: Vec<bool>,
    #[serde(with = "crate::bitstr")]
    pub data: Vec<bool>,
}

fn split_stream(r: &[bool], g: &[bool]) -> (Vec<bool>, Vec<bool>) {
    let mut mask = Vec::new();
    let mut exposed = Vec::new();
    for (&ri, &gi) in r.iter().zip(g) {
        if ri {
            mask.push(gi);
        } else {
            exposed.push(gi);
        }
    }
    (mask, exposed)
}

pub fn commit_respond(
    d: &[bool],
    r: &[bool],
    seed: &[bool],
    code: &CodeSpec,
) -> Result<CommitMessage, CommitError> {
    check_challenge(r, code.length)?;
    let mut e = code.encode(d)?;
    let (mask, exposed) = split_stream(r, &prg(seed, r.len()));
    xor_into(&mut e, &mask);
    Ok(CommitMessage { e, exposed })
}

pub fn verify_reveal(commit: &CommitMessage, reveal: &RevealMessage, r: &[bool], code: &CodeSpec) -> bool {
    if check_challenge(r, code.length).is_err() {
        return false;
    }
    let Ok(mut c) = code.encode(&reveal.data) else {
        return false;
    };
    let (mask, exposed) = split_stream(r, &prg(&reveal.seed, r.len()));
    xor_into(&mut c, &mask);
    exposed == commit.exposed && c == commit.e
}

/// One committed block with its full transcript.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockTranscript {
    #[serde(with = "crate::bitstr")]
    pub challenge: Vec<bool>,
    pub commit: CommitMessage,
    pub reveal: RevealMessage,
}

/// Commitment to data longer than one block: zero-padded `m_c`-bit chunks,
/// each committed independently.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub len: usize,
    pub blocks: Vec<BlockTranscript>,
}

pub fn block_count(len: usize, code: &CodeSpec) -> usize {
    len.div_ceil(code.message_bits).max(1)
}

pub fn chunk(data: &[bool], code: &CodeSpec) -> Vec<Vec<bool>> {
    (0..block_count(data.len(), code))
        .map(|i| {
            let mut b: Vec<bool> = data.iter().skip(i * code.message_bits).take(code.message_bits).copied().collect();
            b.resize(code.message_bits, false);
            b
        })
        .collect()
}

/// Committer side: commits every block against the receiver's challenges.
/// Returns the commit messages and the (still private) openings.
pub fn commit_many<R: RngCore + ?Sized>(
    data: &[bool],
    challenges: &[Vec<bool>],
    code: &CodeSpec,
    rng: &mut R,
) -> Result<(Vec<CommitMessage>, Vec<RevealMessage>), CommitError> {
    let blocks = chunk(data, code);
    if blocks.len() != challenges.len() {
        return Err(CommitError::Blocks {
            got: challenges.len(),
            want: blocks.len(),
        });
    }
    let mut commits = Vec::with_capacity(blocks.len());
    let mut reveals = Vec::with_capacity(blocks.len());
    for (d, r) in blocks.into_iter().zip(challenges) {
        let seed: Vec<bool> = (0..code.security).map(|_| rng.gen()).collect();
        commits.push(commit_respond(&d, r, &seed, code)?);
        reveals.push(RevealMessage { seed, data: d });
    }
    Ok((commits, reveals))
}

impl Transcript {
    /// Checks every block and returns the opened data, or `None` on any
    /// inconsistency (including nonzero padding).
    pub fn open(&self, code: &CodeSpec) -> Option<Vec<bool>> {
        if self.blocks.len() != block_count(self.len, code) {
            return None;
        }
        let mut out = Vec::with_capacity(self.blocks.len() * code.message_bits);
        for b in &self.blocks {
            if !verify_reveal(&b.commit, &b.reveal, &b.challenge, code) {
                return None;
            }
            out.extend_from_slice(&b.reveal.data);
        }
        if out[self.len..].iter().any(|&b| b) {
            return None;
        }
        out.truncate(self.len);
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_length() {
        assert_eq!(min_length(0.25, 16), 250);
        let c = gen_code(8, 0.25, 16, 1).unwrap();
        assert_eq!(c.length, 256);
        assert_eq!(c.expansion(), 32);
        assert!(c.min_distance >= 64);
        assert!(c.is_reproducible());
    }

    #[test]
    fn repetition_and_unsatisfiable() {
        let c = gen_code(1, 0.25, 16, 0).unwrap();
        assert_eq!(c.min_distance, c.length);
        assert!(matches!(gen_code(2, 1.0, 16, 0), Err(CommitError::Unsatisfiable { .. })));
        assert!(gen_code(17, 0.25, 16, 0).is_err());
    }

    #[test]
    fn challenge_shape() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mut seen = [false; 2];
        for _ in 0..100 {
            let r = choose_challenge(1, &mut rng);
            assert_eq!(r.iter().filter(|&&b| b).count(), 1);
            seen[usize::from(r[0])] = true;
            let r = choose_challenge(40, &mut rng);
            assert_eq!((r.len(), r.iter().filter(|&&b| b).count()), (80, 40));
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn honest_and_tampered() {
        let code = gen_code(4, 0.25, 16, 2).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let r = choose_challenge(code.length, &mut rng);
        let seed: Vec<bool> = (0..16).map(|_| rng.gen()).collect();
        let zero = vec![false; 4];
        let cm = commit_respond(&zero, &r, &seed, &code).unwrap();
        let (mask, _) = split_stream(&r, &prg(&seed, r.len()));
        assert_eq!(cm.e, mask);
        assert_eq!(cm.exposed.len(), code.length);
        let reveal = RevealMessage { seed: seed.clone(), data: zero };
        assert!(verify_reveal(&cm, &reveal, &r, &code));
        let mut bad = cm.clone();
        bad.exposed[5] = !bad.exposed[5];
        assert!(!verify_reveal(&bad, &reveal, &r, &code));
        let other = RevealMessage { seed, data: vec![true, false, false, false] };
        assert!(!verify_reveal(&cm, &other, &r, &code));
    }

    #[test]
    fn multi_block_round_trip() {
        let code = gen_code(8, 0.25, 16, 5).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let data: Vec<bool> = (0..19).map(|_| rng.gen()).collect();
        let challenges: Vec<Vec<bool>> = (0..3).map(|_| choose_challenge(code.length, &mut rng)).collect();
        let (commits, reveals) = commit_many(&data, &challenges, &code, &mut rng).unwrap();
        let t = Transcript {
            len: data.len(),
            blocks: challenges
                .into_iter()
                .zip(commits)
                .zip(reveals)
                .map(|((challenge, commit), reveal)| BlockTranscript { challenge, commit, reveal })
                .collect(),
        };
        assert_eq!(t.open(&code), Some(data));
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<Transcript>(&json).unwrap(), t);
    }
}
