//! Boolean circuits over two-input gates with arbitrary truth tables.

mod builder;
mod compile;
mod universal;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::sync::{Arc, OnceLock};

pub use builder::{Bit, Builder};
pub use compile::{compile, compile_expr};
pub use universal::{build_universal, encode_program, ProgramString, Slot, UniversalCircuit};

/// Truth tables index their bits by `(a << 1) | b`.
pub mod tt {
    pub const ZERO: u8 = 0b0000;
    pub const AND: u8 = 0b1000;
    pub const XOR: u8 = 0b0110;
    pub const OR: u8 = 0b1110;
    pub const NOT_A: u8 = 0b0011;
    pub const PASS_A: u8 = 0b1100;
    pub const PASS_B: u8 = 0b1010;
    pub const ONE: u8 = 0b1111;

    pub fn apply(t: u8, a: bool, b: bool) -> bool {
        (t >> ((usize::from(a) << 1) | usize::from(b))) & 1 == 1
    }

    /// Algebraic normal form `c0 ^ ca·a ^ cb·b ^ cab·a·b`.
    pub fn anf(t: u8) -> [bool; 4] {
        let bit = |i: u8| (t >> i) & 1 == 1;
        let (t0, t1, t2, t3) = (bit(0), bit(1), bit(2), bit(3));
        [t0, t0 ^ t2, t0 ^ t1, t0 ^ t1 ^ t2 ^ t3]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gate {
    pub a: u32,
    pub b: u32,
    pub tt: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CircuitError {
    #[error("input has {got} bits, circuit expects {want}")]
    Width { got: usize, want: usize },
    #[error("gate {gate} reads wire {wire} which is not defined before it")]
    Topology { gate: usize, wire: u32 },
    #[error("output wire {0} does not exist")]
    Output(u32),
    #[error("circuit needs {needed} {what}, budget allows {budget}")]
    Budget {
        what: &'static str,
        needed: usize,
        budget: usize,
    },
    #[error("invalid program: {0}")]
    Program(String),
    #[error(transparent)]
    Table(#[from] crate::table::TableError),
}

/// Wires `0..inputs` are inputs; wire `inputs + k` is the output of gate `k`.
#[derive(Debug)]
pub struct Circuit {
    inputs: usize,
    gates: Arc<[Gate]>,
    outputs: Vec<u32>,
    fp: OnceLock<[u8; 32]>,
}

impl Clone for Circuit {
    fn clone(&self) -> Self {
        Circuit {
            inputs: self.inputs,
            gates: self.gates.clone(),
            outputs: self.outputs.clone(),
            fp: self.fp.clone(),
        }
    }
}

impl PartialEq for Circuit {
    fn eq(&self, other: &Self) -> bool {
        self.inputs == other.inputs && self.gates == other.gates && self.outputs == other.outputs
    }
}

impl Eq for Circuit {}

impl Circuit {
    pub fn new(inputs: usize, gates: Vec<Gate>, outputs: Vec<u32>) -> Result<Circuit, CircuitError> {
        for (k, g) in gates.iter().enumerate() {
            for w in [g.a, g.b] {
                if w as usize >= inputs + k {
                    return Err(CircuitError::Topology { gate: k, wire: w });
                }
            }
        }
        if let Some(&o) = outputs.iter().find(|&&o| o as usize >= inputs + gates.len()) {
            return Err(CircuitError::Output(o));
        }
        Ok(Circuit {
            inputs,
            gates: gates.into(),
            outputs,
            fp: OnceLock::new(),
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn outputs(&self) -> &[u32] {
        &self.outputs
    }

    pub fn wires(&self) -> usize {
        self.inputs + self.gates.len()
    }

    /// SHA-256 over the input count and gate list (not the outputs), so a
    /// projection shares its parent's fingerprint.
    pub fn fingerprint(&self) -> [u8; 32] {
        *self.fp.get_or_init(|| {
            let mut h = Sha256::new();
            h.update(b"circuit");
            h.update((self.inputs as u64).to_be_bytes());
            h.update((self.gates.len() as u64).to_be_bytes());
            for g in self.gates.iter() {
                h.update(g.a.to_be_bytes());
                h.update(g.b.to_be_bytes());
                h.update([g.tt]);
            }
            h.finalize().into()
        })
    }

    pub fn simulate(&self, x: &[bool]) -> Result<Vec<bool>, CircuitError> {
        self.check_width(x.len())?;
        let mut w = Vec::with_capacity(self.wires());
        w.extend_from_slice(x);
        for g in self.gates.iter() {
            let v = tt::apply(g.tt, w[g.a as usize], w[g.b as usize]);
            w.push(v);
        }
        Ok(self.outputs.iter().map(|&o| w[o as usize]).collect())
    }

    /// Bitsliced simulation of 64 inputs at once: lane `j` of `x[i]` is bit
    /// `i` of the `j`-th input.
    pub fn simulate_packed(&self, x: &[u64]) -> Result<Vec<u64>, CircuitError> {
        self.check_width(x.len())?;
        let mut w = Vec::with_capacity(self.wires());
        w.extend_from_slice(x);
        for g in self.gates.iter() {
            let (a, b) = (w[g.a as usize], w[g.b as usize]);
            let [c0, ca, cb, cab] = tt::anf(g.tt);
            let mut v = if c0 { u64::MAX } else { 0 };
            if ca {
                v ^= a;
            }
            if cb {
                v ^= b;
            }
            if cab {
                v ^= a & b;
            }
            w.push(v);
        }
        Ok(self.outputs.iter().map(|&o| w[o as usize]).collect())
    }

    fn check_width(&self, got: usize) -> Result<(), CircuitError> {
        if got == self.inputs {
            Ok(())
        } else {
            Err(CircuitError::Width {
                got,
                want: self.inputs,
            })
        }
    }

    /// Longest input-to-output path counted in gates.
    pub fn depth(&self) -> usize {
        self.path_depth(|_| true)
    }

    /// Multiplicative depth: the number of nonlinear (`a·b`) gates on the
    /// worst path, which is what a homomorphic evaluation pays for.
    pub fn and_depth(&self) -> usize {
        self.path_depth(|g| tt::anf(g.tt)[3])
    }

    fn path_depth(&self, counts: impl Fn(&Gate) -> bool) -> usize {
        let mut d = vec![0usize; self.wires()];
        for (k, g) in self.gates.iter().enumerate() {
            let [_, ca, cb, cab] = tt::anf(g.tt);
            let da = if ca || cab { d[g.a as usize] } else { 0 };
            let db = if cb || cab { d[g.b as usize] } else { 0 };
            d[self.inputs + k] = da.max(db) + usize::from(counts(g));
        }
        self.outputs.iter().map(|&o| d[o as usize]).max().unwrap_or(0)
    }

    /// Same gates with only output `k`; evaluates identically to output `k`
    /// of `self`.
    pub fn project(&self, k: usize) -> Circuit {
        Circuit {
            inputs: self.inputs,
            gates: self.gates.clone(),
            outputs: vec![self.outputs[k]],
            fp: self.fp.clone(),
        }
    }

    /// Gates that can influence some output.
    pub fn live_gates(&self) -> Vec<bool> {
        let mut live = vec![false; self.wires()];
        for &o in &self.outputs {
            live[o as usize] = true;
        }
        for k in (0..self.gates.len()).rev() {
            if live[self.inputs + k] {
                let g = self.gates[k];
                let [_, ca, cb, cab] = tt::anf(g.tt);
                if ca || cab {
                    live[g.a as usize] = true;
                }
                if cb || cab {
                    live[g.b as usize] = true;
                }
            }
        }
        live.split_off(self.inputs)
    }

    /// Sequential composition: outputs of `self` feed the inputs of `next`.
    pub fn then(&self, next: &Circuit) -> Result<Circuit, CircuitError> {
        if self.outputs.len() != next.inputs {
            return Err(CircuitError::Width {
                got: self.outputs.len(),
                want: next.inputs,
            });
        }
        let mut b = Builder::new(self.inputs);
        let x = b.inputs();
        let mid = b.embed(self, &x);
        let out = b.embed(next, &mid);
        Ok(b.finish(&out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_table_convention() {
        assert!(tt::apply(tt::AND, true, true));
        assert!(!tt::apply(tt::AND, true, false));
        assert!(tt::apply(tt::PASS_A, true, false) && !tt::apply(tt::PASS_A, false, true));
        assert!(tt::apply(tt::PASS_B, false, true) && !tt::apply(tt::PASS_B, true, false));
        assert!(tt::apply(tt::NOT_A, false, true));
        for t in 0..16u8 {
            for (a, b) in [(false, false), (false, true), (true, false), (true, true)] {
                let [c0, ca, cb, cab] = tt::anf(t);
                let v = c0 ^ (ca & a) ^ (cb & b) ^ (cab & a & b);
                assert_eq!(v, tt::apply(t, a, b), "tt={t:04b}");
            }
        }
    }

    #[test]
    fn and_gate() {
        let c = Circuit::new(2, vec![Gate { a: 0, b: 1, tt: tt::AND }], vec![2]).unwrap();
        assert_eq!(c.simulate(&[true, true]).unwrap(), vec![true]);
        assert_eq!(c.simulate(&[true, false]).unwrap(), vec![false]);
        assert!(matches!(c.simulate(&[true]), Err(CircuitError::Width { got: 1, want: 2 })));
    }

    #[test]
    fn xor_chain_parity() {
        let mut gates = vec![Gate { a: 0, b: 1, tt: tt::XOR }];
        for i in 2..8u32 {
            gates.push(Gate { a: 8 + i - 2, b: i, tt: tt::XOR });
        }
        let c = Circuit::new(8, gates, vec![14]).unwrap();
        let x: Vec<bool> = "10101010".chars().map(|ch| ch == '1').collect();
        assert_eq!(c.simulate(&x).unwrap(), vec![false]);
        assert_eq!(c.and_depth(), 0);
        assert_eq!(c.depth(), 7);
    }

    #[test]
    fn topology_enforced() {
        assert!(Circuit::new(1, vec![Gate { a: 0, b: 1, tt: tt::AND }], vec![1]).is_err());
        assert!(Circuit::new(1, vec![], vec![3]).is_err());
    }

    #[test]
    fn projection_shares_fingerprint() {
        let c = Circuit::new(
            2,
            vec![Gate { a: 0, b: 1, tt: tt::AND }, Gate { a: 0, b: 1, tt: tt::XOR }],
            vec![2, 3],
        )
        .unwrap();
        assert_eq!(c.project(1).fingerprint(), c.fingerprint());
        assert_eq!(c.project(1).simulate(&[true, false]).unwrap(), vec![true]);
    }
}
