use std::collections::HashMap;

use super::{tt, Circuit, Gate};

/// A wire or a known constant during construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Bit {
    Const(bool),
    Wire(u32),
}

impl Bit {
    pub const ZERO: Bit = Bit::Const(false);
    pub const ONE: Bit = Bit::Const(true);
}

/// Circuit builder with constant folding and structural hashing.
pub struct Builder {
    inputs: usize,
    gates: Vec<Gate>,
    cache: HashMap<Gate, u32>,
    negation: HashMap<u32, u32>,
}

impl Builder {
    pub fn new(inputs: usize) -> Builder {
        Builder {
            inputs,
            gates: Vec::new(),
            cache: HashMap::new(),
            negation: HashMap::new(),
        }
    }

    pub fn inputs(&self) -> Vec<Bit> {
        (0..self.inputs as u32).map(Bit::Wire).collect()
    }

    pub fn input(&self, i: usize) -> Bit {
        assert!(i < self.inputs);
        Bit::Wire(i as u32)
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    pub fn gate(&mut self, t: u8, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::Const(x), Bit::Const(y)) => Bit::Const(tt::apply(t, x, y)),
            (Bit::Const(x), Bit::Wire(w)) => self.unary(tt::apply(t, x, false), tt::apply(t, x, true), w),
            (Bit::Wire(w), Bit::Const(y)) => self.unary(tt::apply(t, false, y), tt::apply(t, true, y), w),
            (Bit::Wire(x), Bit::Wire(y)) if x == y => {
                self.unary(tt::apply(t, false, false), tt::apply(t, true, true), x)
            }
            (Bit::Wire(x), Bit::Wire(y)) => {
                let [_, ca, cb, cab] = tt::anf(t);
                if !cb && !cab {
                    return self.unary(tt::apply(t, false, false), tt::apply(t, true, false), x);
                }
                if !ca && !cab {
                    return self.unary(tt::apply(t, false, false), tt::apply(t, false, true), y);
                }
                // canonical operand order: transpose the table when swapping
                let (x, y, t) = if x > y {
                    let swapped = (t & 0b1001) | ((t & 0b0010) << 1) | ((t & 0b0100) >> 1);
                    (y, x, swapped)
                } else {
                    (x, y, t)
                };
                Bit::Wire(self.push(Gate { a: x, b: y, tt: t }))
            }
        }
    }

    /// `f(w)` given `f(0)` and `f(1)`.
    fn unary(&mut self, f0: bool, f1: bool, w: u32) -> Bit {
        match (f0, f1) {
            (false, false) => Bit::ZERO,
            (true, true) => Bit::ONE,
            (false, true) => Bit::Wire(w),
            (true, false) => {
                if let Some(&n) = self.negation.get(&w) {
                    return Bit::Wire(n);
                }
                let n = self.push(Gate { a: w, b: w, tt: tt::NOT_A });
                self.negation.insert(w, n);
                self.negation.insert(n, w);
                Bit::Wire(n)
            }
        }
    }

    fn push(&mut self, g: Gate) -> u32 {
        if let Some(&w) = self.cache.get(&g) {
            return w;
        }
        let w = (self.inputs + self.gates.len()) as u32;
        self.gates.push(g);
        self.cache.insert(g, w);
        w
    }

    pub fn and(&mut self, a: Bit, b: Bit) -> Bit {
        self.gate(tt::AND, a, b)
    }

    pub fn or(&mut self, a: Bit, b: Bit) -> Bit {
        self.gate(tt::OR, a, b)
    }

    pub fn xor(&mut self, a: Bit, b: Bit) -> Bit {
        self.gate(tt::XOR, a, b)
    }

    pub fn not(&mut self, a: Bit) -> Bit {
        self.gate(tt::NOT_A, a, a)
    }

    /// `s ? hi : lo`, one AND deep.
    pub fn mux(&mut self, s: Bit, hi: Bit, lo: Bit) -> Bit {
        let d = self.xor(hi, lo);
        let m = self.and(s, d);
        self.xor(lo, m)
    }

    /// Majority of three, one AND deep on the `c` path.
    pub fn maj(&mut self, a: Bit, b: Bit, c: Bit) -> Bit {
        // (a & b) ^ (c & (a ^ b))
        let ab = self.and(a, b);
        let x = self.xor(a, b);
        let cx = self.and(c, x);
        self.xor(ab, cx)
    }

    pub fn and_all(&mut self, bits: &[Bit]) -> Bit {
        self.reduce(bits, Bit::ONE, tt::AND)
    }

    pub fn or_all(&mut self, bits: &[Bit]) -> Bit {
        self.reduce(bits, Bit::ZERO, tt::OR)
    }

    /// Balanced tree reduction.
    fn reduce(&mut self, bits: &[Bit], unit: Bit, t: u8) -> Bit {
        match bits.len() {
            0 => unit,
            1 => bits[0],
            n => {
                let l = self.reduce(&bits[..n / 2], unit, t);
                let r = self.reduce(&bits[n / 2..], unit, t);
                self.gate(t, l, r)
            }
        }
    }

    /// Instantiates `c` on the given input bits.
    pub fn embed(&mut self, c: &Circuit, x: &[Bit]) -> Vec<Bit> {
        assert_eq!(x.len(), c.inputs(), "embed width");
        let mut map: Vec<Bit> = x.to_vec();
        for g in c.gates() {
            let v = self.gate(g.tt, map[g.a as usize], map[g.b as usize]);
            map.push(v);
        }
        c.outputs().iter().map(|&o| map[o as usize]).collect()
    }

    /// Materializes constant outputs and returns the circuit.
    pub fn finish(mut self, outputs: &[Bit]) -> Circuit {
        let mut wires = Vec::with_capacity(outputs.len());
        for &o in outputs {
            let w = match o {
                Bit::Wire(w) => w,
                Bit::Const(v) => {
                    assert!(self.inputs > 0, "constant output needs an input wire");
                    let t = if v { tt::ONE } else { tt::ZERO };
                    self.push(Gate { a: 0, b: 0, tt: t })
                }
            };
            wires.push(w);
        }
        Circuit::new(self.inputs, self.gates, wires).expect("builder keeps topology")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_constants() {
        let mut b = Builder::new(2);
        let x = b.input(0);
        assert_eq!(b.and(x, Bit::ZERO), Bit::ZERO);
        assert_eq!(b.and(x, Bit::ONE), x);
        assert_eq!(b.xor(x, x), Bit::ZERO);
        let n = b.not(x);
        assert_eq!(b.not(n), x);
        assert_eq!(b.gate_count(), 1);
    }

    #[test]
    fn shares_structure() {
        let mut b = Builder::new(2);
        let (x, y) = (b.input(0), b.input(1));
        let p = b.and(x, y);
        let q = b.and(y, x);
        assert_eq!(p, q);
        let r = b.gate(0b0100, x, y); // a & !b
        let s = b.gate(0b0010, y, x); // !a & b with operands swapped
        assert_eq!(r, s);
    }

    #[test]
    fn every_table_matches_after_folding() {
        for t in 0..16u8 {
            let mut b = Builder::new(2);
            let (x, y) = (b.input(0), b.input(1));
            let o1 = b.gate(t, x, y);
            let o2 = b.gate(t, y, x);
            let c = b.finish(&[o1, o2]);
            for (p, q) in [(false, false), (false, true), (true, false), (true, true)] {
                let out = c.simulate(&[p, q]).unwrap();
                assert_eq!(out, vec![tt::apply(t, p, q), tt::apply(t, q, p)], "t={t:04b}");
            }
        }
    }
}
