//! Functional oracle backend: `[bit][nonce]`. Not secure; eval simulates on
//! plaintexts and derives output nonces deterministically.

use rand::RngCore;
use sha2::{Digest, Sha256};

use super::{Ciphertext, HeError};
use crate::circuit::Circuit;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicKey {
    pub(super) k: u32,
    pub(super) id: [u8; 32],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecretKey {
    pub(super) k: u32,
    pub(super) id: [u8; 32],
}

pub(super) fn nonce_len(k: u32) -> usize {
    (k as usize).div_ceil(8).clamp(8, 32)
}

pub(super) fn keygen<R: RngCore + ?Sized>(k: u32, rng: &mut R) -> (PublicKey, SecretKey) {
    let mut id = [0u8; 32];
    rng.fill_bytes(&mut id);
    (PublicKey { k, id }, SecretKey { k, id })
}

impl PublicKey {
    pub(super) fn ct_bytes(&self) -> usize {
        1 + nonce_len(self.k)
    }

    pub(super) fn enc<R: RngCore + ?Sized>(&self, b: bool, rng: &mut R) -> Ciphertext {
        let mut v = vec![0u8; self.ct_bytes()];
        v[0] = u8::from(b);
        rng.fill_bytes(&mut v[1..]);
        Ciphertext(v)
    }

    pub(super) fn trivial(&self, b: bool) -> Ciphertext {
        let mut v = vec![0u8; self.ct_bytes()];
        v[0] = u8::from(b);
        Ciphertext(v)
    }

    pub(super) fn check(&self, c: &Ciphertext) -> Result<(), HeError> {
        check(c, self.ct_bytes())
    }

    pub(super) fn eval(&self, c: &Circuit, cts: &[Ciphertext]) -> Result<Vec<Ciphertext>, HeError> {
        for ct in cts {
            self.check(ct)?;
        }
        let x: Vec<bool> = cts.iter().map(|ct| ct.0[0] == 1).collect();
        let out = c.simulate(&x).expect("width checked by caller");
        let mut h = Sha256::new();
        for ct in cts {
            h.update(&ct.0);
        }
        let inputs: [u8; 32] = h.finalize().into();
        let n = nonce_len(self.k);
        Ok(out
            .into_iter()
            .zip(c.outputs())
            .map(|(bit, &wire)| {
                let mut h = Sha256::new();
                h.update(b"transparent-eval");
                h.update(self.id);
                h.update(c.fingerprint());
                h.update(wire.to_be_bytes());
                h.update(inputs);
                let nonce = h.finalize();
                let mut v = Vec::with_capacity(1 + n);
                v.push(u8::from(bit));
                v.extend_from_slice(&nonce[..n]);
                Ciphertext(v)
            })
            .collect())
    }
}

fn check(c: &Ciphertext, len: usize) -> Result<(), HeError> {
    if c.0.len() != len {
        return Err(HeError::Malformed(format!("length {} != {len}", c.0.len())));
    }
    if c.0[0] > 1 {
        return Err(HeError::Malformed(format!("bit byte {}", c.0[0])));
    }
    Ok(())
}

impl SecretKey {
    pub(super) fn dec(&self, c: &Ciphertext) -> Result<bool, HeError> {
        check(c, 1 + nonce_len(self.k))?;
        Ok(c.0[0] == 1)
    }
}
