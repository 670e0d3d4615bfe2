//! Somewhat-homomorphic encryption over the integers (DGHV style, toy
//! parameters). A ciphertext is `[level u8][noise bits u16][c]` with `c`
//! a fixed-width big-endian integer below `x0`.

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{Ciphertext, HeError};
use crate::circuit::{tt, Circuit};

const HEADER: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegerParams {
    /// Bit length of the secret odd modulus `p`.
    pub eta: u32,
    /// Bit length of fresh noise.
    pub rho: u32,
    /// Number of public encryptions of zero.
    pub tau: u32,
    /// Bit length of ciphertexts.
    pub gamma: u32,
}

impl Default for IntegerParams {
    fn default() -> Self {
        IntegerParams {
            eta: 5120,
            rho: 4,
            tau: 16,
            gamma: 5120 + 256,
        }
    }
}

impl IntegerParams {
    /// Upper bound, in bits, on `|m + 2r + 2Σ r_i|` for a fresh ciphertext.
    pub fn fresh_noise_bits(&self) -> f64 {
        self.rho as f64 + ((2 * self.tau + 3) as f64).log2()
    }

    /// Decryption stays correct while the noise is below this many bits.
    pub fn noise_limit(&self) -> u32 {
        self.eta.saturating_sub(3)
    }

    /// Number of multiplicative levels that fit under the noise limit, with
    /// 8 bits of headroom per level for the additions in a gate.
    pub fn depth_budget(&self) -> usize {
        let limit = self.noise_limit() as f64;
        let mut n = self.fresh_noise_bits();
        let mut d = 0;
        loop {
            let next = 2.0 * n + 8.0;
            if next > limit || d == u8::MAX as usize {
                return d;
            }
            n = next;
            d += 1;
        }
    }

    pub fn ct_bytes(&self) -> usize {
        HEADER + (self.gamma as usize).div_ceil(8)
    }

    fn validate(&self) -> Result<(), HeError> {
        if self.rho == 0 || self.tau == 0 {
            return Err(HeError::Infeasible("rho and tau must be positive".into()));
        }
        if self.gamma <= self.eta + 1 {
            return Err(HeError::Infeasible("gamma must exceed eta".into()));
        }
        if self.eta > u16::MAX as u32 {
            return Err(HeError::Infeasible("eta too large for the noise header".into()));
        }
        if self.depth_budget() == 0 {
            return Err(HeError::Infeasible("depth budget is 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicKey {
    pub(super) params: IntegerParams,
    pub(super) x0: BigUint,
    pub(super) xs: Vec<BigUint>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecretKey {
    pub(super) params: IntegerParams,
    pub(super) p: BigUint,
}

pub(super) fn keygen<R: RngCore + ?Sized>(
    params: &IntegerParams,
    rng: &mut R,
) -> Result<(PublicKey, SecretKey), HeError> {
    params.validate()?;
    let top = |bits: u32| BigUint::one() << (bits - 1);
    let p = rng.gen_biguint(params.eta as u64) | top(params.eta) | BigUint::one();
    let qbits = params.gamma - params.eta;
    let q0 = rng.gen_biguint(qbits as u64) | top(qbits) | BigUint::one();
    let x0 = &p * &q0;
    let bound = 1i64 << params.rho;
    let xs = (0..params.tau)
        .map(|_| {
            let q = rng.gen_biguint_range(&BigUint::one(), &q0);
            let r: i64 = rng.gen_range(1 - bound..bound);
            let x = BigInt::from(&p * q) + r;
            x.to_biguint().expect("p*q exceeds the noise")
        })
        .collect();
    Ok((PublicKey { params: *params, x0, xs }, SecretKey { params: *params, p }))
}

#[derive(Clone)]
pub(super) struct Parsed {
    pub value: BigUint,
    pub level: usize,
    pub noise: f64,
}

fn parse_raw(c: &Ciphertext, params: &IntegerParams) -> Result<Parsed, HeError> {
    if c.0.len() != params.ct_bytes() {
        return Err(HeError::Malformed(format!(
            "length {} != {}",
            c.0.len(),
            params.ct_bytes()
        )));
    }
    let noise = u16::from_be_bytes([c.0[1], c.0[2]]);
    Ok(Parsed {
        value: BigUint::from_bytes_be(&c.0[HEADER..]),
        level: c.0[0] as usize,
        noise: noise as f64,
    })
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (1.0 + (lo - hi).exp2()).log2()
}

impl PublicKey {
    pub fn params(&self) -> &IntegerParams {
        &self.params
    }

    pub(super) fn ct_bytes(&self) -> usize {
        self.params.ct_bytes()
    }

    pub(super) fn parse(&self, c: &Ciphertext) -> Result<Parsed, HeError> {
        let p = parse_raw(c, &self.params)?;
        if p.value >= self.x0 {
            return Err(HeError::Malformed("value not reduced".into()));
        }
        if p.noise > self.params.noise_limit() as f64 {
            return Err(HeError::NoiseBudgetExceeded {
                bits: p.noise,
                limit: self.params.noise_limit(),
            });
        }
        Ok(p)
    }

    fn serialize(&self, v: &BigUint, level: usize, noise: f64) -> Ciphertext {
        let mut out = vec![0u8; self.ct_bytes()];
        out[0] = level as u8;
        out[1..HEADER].copy_from_slice(&(noise.max(0.0).ceil() as u16).to_be_bytes());
        let bytes = v.to_bytes_be();
        let n = out.len();
        out[n - bytes.len()..].copy_from_slice(&bytes);
        Ciphertext(out)
    }

    pub(super) fn enc<R: RngCore + ?Sized>(&self, b: bool, rng: &mut R) -> Ciphertext {
        let bound = 1i64 << self.params.rho;
        let r: i64 = rng.gen_range(1 - bound..bound);
        let mut sum = BigUint::zero();
        for x in &self.xs {
            if rng.gen::<bool>() {
                sum += x;
            }
        }
        let c: BigInt = (BigInt::from(sum) << 1) + BigInt::from(2 * r + i64::from(b));
        let c = c.mod_floor(&BigInt::from(self.x0.clone()));
        let (_, mag) = c.into_parts();
        self.serialize(&mag, 0, self.params.fresh_noise_bits())
    }

    pub(super) fn trivial(&self, b: bool) -> Ciphertext {
        self.serialize(&BigUint::from(u8::from(b)), 0, 0.0)
    }

    pub(super) fn eval(&self, c: &Circuit, cts: &[Ciphertext]) -> Result<Vec<Ciphertext>, HeError> {
        let inputs: Vec<Parsed> = cts.iter().map(|ct| self.parse(ct)).collect::<Result<_, _>>()?;
        let live = c.live_gates();
        let n = c.inputs();
        let budget = self.params.depth_budget();

        // static depth check before any big-number work
        let mut level: Vec<usize> = inputs.iter().map(|p| p.level).collect();
        level.resize(c.wires(), 0);
        for (k, g) in c.gates().iter().enumerate() {
            if !live[k] {
                continue;
            }
            let [_, ca, cb, cab] = tt::anf(g.tt);
            let la = if ca || cab { level[g.a as usize] } else { 0 };
            let lb = if cb || cab { level[g.b as usize] } else { 0 };
            level[n + k] = la.max(lb) + usize::from(cab);
        }
        let needed = c.outputs().iter().map(|&o| level[o as usize]).max().unwrap_or(0);
        if needed > budget {
            return Err(HeError::DepthBudgetExceeded { needed, budget });
        }

        let limit = self.params.noise_limit();
        let mut wires: Vec<Option<Parsed>> = inputs.into_iter().map(Some).collect();
        wires.resize(c.wires(), None);
        for (k, g) in c.gates().iter().enumerate() {
            if !live[k] {
                continue;
            }
            let [c0, ca, cb, cab] = tt::anf(g.tt);
            // operands the ANF ignores may be pruned
            let a = || wires[g.a as usize].as_ref().expect("topological order");
            let b = || wires[g.b as usize].as_ref().expect("topological order");
            let mut v = BigUint::from(u8::from(c0));
            let mut noise = if c0 { 0.0 } else { f64::NEG_INFINITY };
            if ca {
                v += &a().value;
                noise = log_add(noise, a().noise);
            }
            if cb {
                v += &b().value;
                noise = log_add(noise, b().noise);
            }
            if cab {
                v += &a().value * &b().value;
                noise = log_add(noise, a().noise + b().noise);
            }
            let noise = noise.max(0.0);
            if noise > limit as f64 {
                return Err(HeError::NoiseBudgetExceeded { bits: noise, limit });
            }
            wires[n + k] = Some(Parsed {
                value: v % &self.x0,
                level: level[n + k],
                noise,
            });
        }
        Ok(c.outputs()
            .iter()
            .map(|&o| {
                let w = wires[o as usize].as_ref().expect("output computed");
                self.serialize(&w.value, w.level, w.noise)
            })
            .collect())
    }
}

impl SecretKey {
    pub fn params(&self) -> &IntegerParams {
        &self.params
    }

    pub(super) fn dec(&self, c: &Ciphertext) -> Result<bool, HeError> {
        let parsed = parse_raw(c, &self.params)?;
        let r = parsed.value % &self.p;
        let half = &self.p >> 1;
        let centered = if r > half { &self.p - &r } else { r };
        Ok(centered.bit(0))
    }
}

pub(super) fn biguint_bytes(v: &BigUint) -> Vec<u8> {
    v.to_bytes_be()
}

pub(super) fn biguint_from(b: &[u8]) -> BigUint {
    BigUint::from_bytes_be(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn default_budget_is_eight() {
        assert_eq!(IntegerParams::default().depth_budget(), 8);
    }

    #[test]
    fn infeasible_rejected() {
        let p = IntegerParams {
            eta: 16,
            rho: 4,
            tau: 16,
            gamma: 64,
        };
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert!(matches!(keygen(&p, &mut rng), Err(HeError::Infeasible(_))));
    }

    #[test]
    fn depth_limit_is_enforced_not_silent() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let (pk, sk) = keygen(&IntegerParams::default(), &mut rng).unwrap();
        // chain of ANDs: x0 & x1 & ... each gate one level deeper
        let inputs = 12;
        let mut gates = vec![crate::circuit::Gate { a: 0, b: 1, tt: tt::AND }];
        for i in 2..inputs as u32 {
            gates.push(crate::circuit::Gate {
                a: inputs as u32 + i - 2,
                b: i,
                tt: tt::AND,
            });
        }
        let x: Vec<Ciphertext> = (0..inputs).map(|_| pk.enc(true, &mut rng)).collect();
        for depth in 1..inputs {
            let c = Circuit::new(inputs, gates.clone(), vec![(inputs + depth - 1) as u32]).unwrap();
            let r = pk.eval(&c, &x);
            if depth <= 8 {
                assert!(sk.dec(&r.unwrap()[0]).unwrap(), "depth {depth}");
            } else {
                assert_eq!(
                    r.unwrap_err(),
                    HeError::DepthBudgetExceeded {
                        needed: depth,
                        budget: 8
                    }
                );
            }
        }
    }
}
