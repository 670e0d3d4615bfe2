//! Gate-slot universal circuit.
//!
//! Inputs are `S_C ∥ x`. The bus holds the `n_in` data bits followed by one
//! wire per slot. Slot `k` picks two operands among the first `n_in + k` bus
//! wires with `sw`-bit selectors and applies a programmed 4-bit truth table;
//! then each of the `m` outputs selects one bus wire.

use serde::{Deserialize, Serialize};

use super::{Bit, Builder, Circuit, CircuitError};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProgramString(pub Vec<bool>);

impl ProgramString {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Decoded slot: operand selectors and truth table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Slot {
    pub a: usize,
    pub b: usize,
    pub tt: u8,
}

#[derive(Clone, Debug)]
pub struct UniversalCircuit {
    n_in: usize,
    slots: usize,
    m: usize,
    sw: usize,
    circuit: Circuit,
}

fn sel_width(w: usize) -> usize {
    (usize::BITS - (w.max(2) - 1).leading_zeros()) as usize
}

/// Selects `leaves[sel]` (MSB-first selector), reading 0 past the end.
fn select(b: &mut Builder, sel: &[Bit], leaves: &[Bit]) -> Bit {
    match sel.split_first() {
        None => leaves.first().copied().unwrap_or(Bit::ZERO),
        Some((&s, rest)) => {
            let half = 1usize << rest.len();
            if leaves.len() <= half {
                // upper half is all zero
                let lo = select(b, rest, leaves);
                let ns = b.not(s);
                b.and(ns, lo)
            } else {
                let lo = select(b, rest, &leaves[..half]);
                let hi = select(b, rest, &leaves[half..]);
                b.mux(s, hi, lo)
            }
        }
    }
}

/// Builds U for circuits with at most `n_in` inputs, `slots` gates and
/// exactly `m` outputs.
pub fn build_universal(n_in: usize, slots: usize, m: usize) -> Result<UniversalCircuit, CircuitError> {
    if n_in == 0 || m == 0 {
        return Err(CircuitError::Budget {
            what: "inputs and outputs",
            needed: 1,
            budget: 0,
        });
    }
    let bus = n_in + slots;
    let sw = sel_width(bus);
    let prog_len = slots * (2 * sw + 4) + m * sw;
    let mut b = Builder::new(prog_len + n_in);
    let inputs = b.inputs();
    let (prog, x) = inputs.split_at(prog_len);
    let mut wires: Vec<Bit> = x.to_vec();
    for k in 0..slots {
        let base = k * (2 * sw + 4);
        let sa = &prog[base..base + sw];
        let sb = &prog[base + sw..base + 2 * sw];
        // truth table bits t3 t2 t1 t0
        let t = &prog[base + 2 * sw..base + 2 * sw + 4];
        let avail = wires[..n_in + k].to_vec();
        let a = select(&mut b, sa, &avail);
        let c = select(&mut b, sb, &avail);
        let hi = b.mux(c, t[0], t[1]);
        let lo = b.mux(c, t[2], t[3]);
        wires.push(b.mux(a, hi, lo));
    }
    let out_base = slots * (2 * sw + 4);
    let outs: Vec<Bit> = (0..m)
        .map(|i| {
            let s = &prog[out_base + i * sw..out_base + (i + 1) * sw];
            select(&mut b, s, &wires)
        })
        .collect();
    Ok(UniversalCircuit {
        n_in,
        slots,
        m,
        sw,
        circuit: b.finish(&outs),
    })
}

impl UniversalCircuit {
    /// Smallest U that fits every circuit in `cs`.
    pub fn for_circuits(cs: &[Circuit], m: usize) -> Result<UniversalCircuit, CircuitError> {
        if let Some(c) = cs.iter().find(|c| c.outputs().len() != m) {
            return Err(CircuitError::Budget {
                what: "outputs",
                needed: c.outputs().len(),
                budget: m,
            });
        }
        let n_in = cs.iter().map(Circuit::inputs).max().unwrap_or(0);
        let slots = cs.iter().map(|c| c.gates().len()).max().unwrap_or(0);
        build_universal(n_in, slots, m)
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn bus_width(&self) -> usize {
        self.n_in + self.slots
    }

    pub fn selector_width(&self) -> usize {
        self.sw
    }

    /// |S_C|, a function of (W, g, m) only.
    pub fn program_len(&self) -> usize {
        self.slots * (2 * self.sw + 4) + self.m * self.sw
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    /// U_k: the k-th output bit of U as its own circuit.
    pub fn projection(&self, k: usize) -> Circuit {
        self.circuit.project(k)
    }

    pub fn eval_plain(&self, p: &ProgramString, x: &[bool]) -> Result<Vec<bool>, CircuitError> {
        let mut input = p.0.clone();
        input.extend_from_slice(x);
        self.circuit.simulate(&input)
    }

    /// Serializes slots and output selectors, checking every selector.
    pub fn assemble(&self, slots: &[Slot], outputs: &[usize]) -> Result<ProgramString, CircuitError> {
        if slots.len() != self.slots || outputs.len() != self.m {
            return Err(CircuitError::Program(format!(
                "expected {} slots and {} outputs, got {} and {}",
                self.slots,
                self.m,
                slots.len(),
                outputs.len()
            )));
        }
        let mut bits = Vec::with_capacity(self.program_len());
        let push = |bits: &mut Vec<bool>, v: usize, n: usize| {
            bits.extend((0..n).rev().map(|i| (v >> i) & 1 == 1));
        };
        for (k, s) in slots.iter().enumerate() {
            for sel in [s.a, s.b] {
                if sel >= self.n_in + k {
                    return Err(CircuitError::Program(format!(
                        "slot {k} selects wire {sel}, only {} available",
                        self.n_in + k
                    )));
                }
                push(&mut bits, sel, self.sw);
            }
            if s.tt > 0b1111 {
                return Err(CircuitError::Program(format!("slot {k} truth table {}", s.tt)));
            }
            push(&mut bits, s.tt as usize, 4);
        }
        for (i, &o) in outputs.iter().enumerate() {
            if o >= self.bus_width() {
                return Err(CircuitError::Program(format!(
                    "output {i} selects wire {o}, bus has {}",
                    self.bus_width()
                )));
            }
            push(&mut bits, o, self.sw);
        }
        Ok(ProgramString(bits))
    }

    pub fn decode(&self, p: &ProgramString) -> Result<(Vec<Slot>, Vec<usize>), CircuitError> {
        if p.len() != self.program_len() {
            return Err(CircuitError::Program(format!(
                "length {} != {}",
                p.len(),
                self.program_len()
            )));
        }
        let read = |bits: &[bool]| bits.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b));
        let step = 2 * self.sw + 4;
        let slots = (0..self.slots)
            .map(|k| {
                let s = &p.0[k * step..(k + 1) * step];
                Slot {
                    a: read(&s[..self.sw]),
                    b: read(&s[self.sw..2 * self.sw]),
                    tt: read(&s[2 * self.sw..]) as u8,
                }
            })
            .collect();
        let base = self.slots * step;
        let outs = (0..self.m)
            .map(|i| read(&p.0[base + i * self.sw..base + (i + 1) * self.sw]))
            .collect();
        Ok((slots, outs))
    }
}

/// Lays `c` out on U's slots; unused slots are `(0, 0, 0000)`.
pub fn encode_program(c: &Circuit, u: &UniversalCircuit) -> Result<ProgramString, CircuitError> {
    if c.inputs() > u.n_in {
        return Err(CircuitError::Budget {
            what: "inputs",
            needed: c.inputs(),
            budget: u.n_in,
        });
    }
    if c.gates().len() > u.slots {
        return Err(CircuitError::Budget {
            what: "gates",
            needed: c.gates().len(),
            budget: u.slots,
        });
    }
    if c.outputs().len() != u.m {
        return Err(CircuitError::Budget {
            what: "outputs",
            needed: c.outputs().len(),
            budget: u.m,
        });
    }
    let map = |w: u32| {
        let w = w as usize;
        if w < c.inputs() {
            w
        } else {
            u.n_in + (w - c.inputs())
        }
    };
    let mut slots: Vec<Slot> = c
        .gates()
        .iter()
        .map(|g| Slot {
            a: map(g.a),
            b: map(g.b),
            tt: g.tt,
        })
        .collect();
    slots.resize(u.slots, Slot { a: 0, b: 0, tt: 0 });
    let outs: Vec<usize> = c.outputs().iter().map(|&o| map(o)).collect();
    u.assemble(&slots, &outs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{tt, Gate};

    #[test]
    fn one_slot_and() {
        let u = build_universal(2, 1, 1).unwrap();
        assert_eq!(u.bus_width(), 3);
        assert_eq!(u.selector_width(), 2);
        let p = u.assemble(&[Slot { a: 0, b: 1, tt: tt::AND }], &[2]).unwrap();
        for (x0, x1) in [(false, false), (false, true), (true, false), (true, true)] {
            assert_eq!(u.eval_plain(&p, &[x0, x1]).unwrap(), vec![x0 && x1]);
        }
    }

    #[test]
    fn out_of_range_selector_rejected() {
        let u = build_universal(2, 2, 1).unwrap();
        let bad = [Slot { a: 0, b: 2, tt: tt::AND }, Slot { a: 0, b: 0, tt: 0 }];
        assert!(matches!(u.assemble(&bad, &[2]), Err(CircuitError::Program(_))));
        let ok = [Slot { a: 0, b: 1, tt: tt::AND }, Slot { a: 0, b: 2, tt: tt::XOR }];
        assert!(u.assemble(&ok, &[4]).is_err());
        assert!(u.assemble(&ok, &[3]).is_ok());
    }

    #[test]
    fn program_round_trip_and_length() {
        let c = Circuit::new(
            3,
            vec![Gate { a: 0, b: 1, tt: tt::XOR }, Gate { a: 3, b: 2, tt: tt::OR }],
            vec![4, 0],
        )
        .unwrap();
        let u = build_universal(4, 3, 2).unwrap();
        let p = encode_program(&c, &u).unwrap();
        assert_eq!(p.len(), u.program_len());
        let (slots, outs) = u.decode(&p).unwrap();
        assert_eq!(slots[0], Slot { a: 0, b: 1, tt: tt::XOR });
        assert_eq!(slots[1], Slot { a: 4, b: 2, tt: tt::OR });
        assert_eq!(slots[2], Slot { a: 0, b: 0, tt: 0 });
        assert_eq!(outs, vec![5, 0]);
        for v in 0..8u32 {
            let x: Vec<bool> = (0..3).map(|i| (v >> i) & 1 == 1).collect();
            let mut padded = x.clone();
            padded.push(false);
            assert_eq!(u.eval_plain(&p, &padded).unwrap(), c.simulate(&x).unwrap());
        }
    }

    #[test]
    fn budget_errors() {
        let c = Circuit::new(3, vec![], vec![0]).unwrap();
        let u = build_universal(2, 1, 1).unwrap();
        assert!(matches!(encode_program(&c, &u), Err(CircuitError::Budget { what: "inputs", .. })));
    }
}
