//! Expression and single-row table compilation to circuits.
//!
//! Words are little-endian bit vectors internally; circuit inputs and outputs
//! use the MSB-first layout of [`TaggedValue::to_bits`](crate::table::TaggedValue::to_bits).

use super::{Bit, Builder, Circuit, CircuitError};
use crate::table::{fits, wrap, BinOp, Expr, RowTable, TableError, Ty, UnOp};

#[derive(Clone, Debug)]
enum V {
    Int(Vec<Bit>),
    Bool(Bit),
}

impl V {
    fn word(self) -> Vec<Bit> {
        match self {
            V::Int(w) => w,
            V::Bool(b) => unreachable!("expected integer, found {b:?}"),
        }
    }

    fn bit(self) -> Bit {
        match self {
            V::Bool(b) => b,
            V::Int(_) => unreachable!("expected boolean"),
        }
    }
}

struct Ctx<'a> {
    b: &'a mut Builder,
    h: usize,
}

impl Ctx<'_> {
    fn constant(&self, v: i64) -> Vec<Bit> {
        let raw = wrap(v, self.h as u32) as u64;
        (0..self.h).map(|i| Bit::Const((raw >> i) & 1 == 1)).collect()
    }

    fn add(&mut self, x: &[Bit], y: &[Bit], carry_in: Bit) -> (Vec<Bit>, Bit) {
        let mut c = carry_in;
        let mut out = Vec::with_capacity(self.h);
        for i in 0..self.h {
            let t = self.b.xor(x[i], y[i]);
            out.push(self.b.xor(t, c));
            c = self.b.maj(x[i], y[i], c);
        }
        (out, c)
    }

    fn not_word(&mut self, x: &[Bit]) -> Vec<Bit> {
        x.iter().map(|&v| self.b.not(v)).collect()
    }

    fn sub(&mut self, x: &[Bit], y: &[Bit]) -> Vec<Bit> {
        let ny = self.not_word(y);
        self.add(x, &ny, Bit::ONE).0
    }

    fn mul(&mut self, x: &[Bit], y: &[Bit]) -> Vec<Bit> {
        let mut acc = vec![Bit::ZERO; self.h];
        for (i, &yi) in y.iter().enumerate() {
            let mut partial = vec![Bit::ZERO; self.h];
            for j in 0..self.h - i {
                partial[i + j] = self.b.and(x[j], yi);
            }
            acc = self.add(&acc, &partial, Bit::ZERO).0;
        }
        acc
    }

    /// Signed `x < y`: flip both sign bits, then unsigned borrow.
    fn lt(&mut self, x: &[Bit], y: &[Bit]) -> Bit {
        let mut xs = x.to_vec();
        let mut ys = y.to_vec();
        let top = self.h - 1;
        xs[top] = self.b.not(xs[top]);
        ys[top] = self.b.not(ys[top]);
        let ny = self.not_word(&ys);
        // carry out of x + !y + 1 is set iff x >= y (unsigned)
        let (_, carry) = self.add(&xs, &ny, Bit::ONE);
        self.b.not(carry)
    }

    fn eq(&mut self, x: &[Bit], y: &[Bit]) -> Bit {
        let same: Vec<Bit> = x
            .iter()
            .zip(y)
            .map(|(&a, &b)| {
                let d = self.b.xor(a, b);
                self.b.not(d)
            })
            .collect();
        self.b.and_all(&same)
    }

    fn expr(&mut self, e: &Expr, ports: &[V]) -> V {
        match e {
            Expr::Int(v) => V::Int(self.constant(*v)),
            Expr::Bool(v) => V::Bool(Bit::Const(*v)),
            Expr::Port(i) => ports[*i].clone(),
            Expr::Unary(UnOp::Not, a) => {
                let a = self.expr(a, ports).bit();
                V::Bool(self.b.not(a))
            }
            Expr::Unary(UnOp::Neg, a) => {
                let a = self.expr(a, ports).word();
                let zero = self.constant(0);
                V::Int(self.sub(&zero, &a))
            }
            Expr::Binary(op, a, c) => {
                let (a, c) = (self.expr(a, ports), self.expr(c, ports));
                match op {
                    BinOp::Add => V::Int(self.add(&a.word(), &c.word(), Bit::ZERO).0),
                    BinOp::Sub => V::Int(self.sub(&a.word(), &c.word())),
                    BinOp::Mul => V::Int(self.mul(&a.word(), &c.word())),
                    BinOp::Lt => V::Bool(self.lt(&a.word(), &c.word())),
                    BinOp::Gt => V::Bool(self.lt(&c.word(), &a.word())),
                    BinOp::Le => {
                        let g = self.lt(&c.word(), &a.word());
                        V::Bool(self.b.not(g))
                    }
                    BinOp::Ge => {
                        let l = self.lt(&a.word(), &c.word());
                        V::Bool(self.b.not(l))
                    }
                    BinOp::Eq | BinOp::Ne => {
                        let same = match (a, c) {
                            (V::Bool(x), V::Bool(y)) => {
                                let d = self.b.xor(x, y);
                                self.b.not(d)
                            }
                            (x, y) => self.eq(&x.word(), &y.word()),
                        };
                        V::Bool(if *op == BinOp::Eq { same } else { self.b.not(same) })
                    }
                    BinOp::And => V::Bool(self.b.and(a.bit(), c.bit())),
                    BinOp::Or => V::Bool(self.b.or(a.bit(), c.bit())),
                }
            }
            Expr::Ite(c, t, e) => {
                let s = self.expr(c, ports).bit();
                match (self.expr(t, ports), self.expr(e, ports)) {
                    (V::Bool(x), V::Bool(y)) => V::Bool(self.b.mux(s, x, y)),
                    (x, y) => V::Int(
                        x.word()
                            .into_iter()
                            .zip(y.word())
                            .map(|(p, q)| self.b.mux(s, p, q))
                            .collect(),
                    ),
                }
            }
        }
    }
}

fn check_literals(e: &Expr, h: u32) -> Result<(), CircuitError> {
    let mut lits = Vec::new();
    e.literals(&mut lits);
    match lits.into_iter().find(|v| !fits(*v, h)) {
        Some(value) => Err(TableError::WidthOverflow { value, bits: h }.into()),
        None => Ok(()),
    }
}

/// Reads a port's payload from an MSB-first `h`-bit slice.
fn port_value(ty: Ty, msb_first: &[Bit]) -> V {
    match ty {
        Ty::Int => V::Int(msb_first.iter().rev().copied().collect()),
        Ty::Bool => V::Bool(*msb_first.last().expect("non-empty payload")),
    }
}

fn payload_bits(v: V, h: usize) -> Vec<Bit> {
    let lsb_first = match v {
        V::Int(w) => w,
        V::Bool(b) => {
            let mut w = vec![Bit::ZERO; h];
            w[0] = b;
            w
        }
    };
    lsb_first.into_iter().rev().collect()
}

/// Compiles an expression over `h`-bit payload ports (MSB first, one `h`-bit
/// group per port) to a circuit with an `h`-bit MSB-first result.
pub fn compile_expr(e: &Expr, ports: &[Ty], h: u32) -> Result<Circuit, CircuitError> {
    e.type_of(ports).map_err(|err| TableError::Type {
        context: "expression".into(),
        message: err.0,
    })?;
    check_literals(e, h)?;
    let hu = h as usize;
    let mut b = Builder::new(ports.len() * hu);
    let x = b.inputs();
    let vals: Vec<V> = ports
        .iter()
        .enumerate()
        .map(|(i, ty)| port_value(*ty, &x[i * hu..(i + 1) * hu]))
        .collect();
    let mut ctx = Ctx { b: &mut b, h: hu };
    let out = ctx.expr(e, &vals);
    let bits = payload_bits(out, hu);
    Ok(b.finish(&bits))
}

/// Compiles `F(w) = (⊤, f(x))` if every input is ⊤ and `p(x)` holds, else
/// `(⊥, ⊥)`, over `m`-bit tagged words.
pub fn compile(t: &RowTable, m: u32) -> Result<Circuit, CircuitError> {
    if m < 4 || !m.is_multiple_of(2) || m > 64 {
        return Err(TableError::InvalidWidth(m).into());
    }
    let h = (m / 2) as usize;
    check_literals(&t.predicate, h as u32)?;
    check_literals(&t.function, h as u32)?;
    let mu = m as usize;
    let mut b = Builder::new(t.ports.len() * mu);
    let x = b.inputs();
    let mut valid = Vec::with_capacity(t.ports.len());
    let mut vals = Vec::with_capacity(t.ports.len());
    for (i, (_, ty)) in t.ports.iter().enumerate() {
        let word = &x[i * mu..(i + 1) * mu];
        let (tag, payload) = word.split_at(h);
        let mut bits: Vec<Bit> = tag[..h - 1].iter().map(|&v| b.not(v)).collect();
        bits.push(tag[h - 1]);
        valid.push(b.and_all(&bits));
        vals.push(port_value(*ty, payload));
    }
    let all_valid = b.and_all(&valid);
    let mut ctx = Ctx { b: &mut b, h };
    let p = ctx.expr(&t.predicate, &vals).bit();
    let f = ctx.expr(&t.function, &vals);
    let fire = b.and(all_valid, p);
    let mut out = vec![Bit::ZERO; h - 1];
    out.push(fire);
    for v in payload_bits(f, h) {
        out.push(b.and(v, fire));
    }
    Ok(b.finish(&out))
}
