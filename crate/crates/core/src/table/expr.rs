//! Row expressions: predicates and functions over a table's input ports.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Type of a port, an output, or an expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ty {
    Int,
    Bool,
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Int => f.write_str("int"),
            Ty::Bool => f.write_str("bool"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Lt,
    Le,
    Eq,
    Ne,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Lt | BinOp::Le | BinOp::Eq | BinOp::Ne | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul => 5,
        }
    }

    fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Eq | BinOp::Ne | BinOp::Gt | BinOp::Ge
        )
    }
}

/// Expression AST. Port references are resolved to indices into the owning
/// table's input list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Port(usize),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Ite(Box<Expr>, Box<Expr>, Box<Expr>),
}

/// A plaintext value carried on a port.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
}

impl Value {
    pub fn ty(self) -> Ty {
        match self {
            Value::Int(_) => Ty::Int,
            Value::Bool(_) => Ty::Bool,
        }
    }

    pub fn as_int(self) -> i64 {
        match self {
            Value::Int(v) => v,
            Value::Bool(b) => b as i64,
        }
    }

    pub fn as_bool(self) -> bool {
        match self {
            Value::Bool(b) => b,
            Value::Int(v) => v != 0,
        }
    }

    /// Raw `bits`-wide payload: two's complement for integers, low bit for
    /// booleans.
    pub fn to_payload(self, bits: u32) -> u64 {
        (self.as_int() as u64) & mask(bits)
    }

    pub fn from_payload(ty: Ty, raw: u64, bits: u32) -> Value {
        match ty {
            Ty::Bool => Value::Bool(raw & 1 == 1),
            Ty::Int => Value::Int(sign_extend(raw, bits)),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{}", if *b { "True" } else { "False" }),
        }
    }
}

pub(crate) fn mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Interprets the low `bits` of `raw` as a two's complement integer.
pub fn sign_extend(raw: u64, bits: u32) -> i64 {
    let raw = raw & mask(bits);
    if bits < 64 && raw >> (bits - 1) & 1 == 1 {
        (raw | !mask(bits)) as i64
    } else {
        raw as i64
    }
}

/// Wraps `v` into the signed range of a `bits`-wide word.
pub fn wrap(v: i64, bits: u32) -> i64 {
    sign_extend(v as u64, bits)
}

/// Whether `v` is representable as a `bits`-wide two's complement integer.
pub fn fits(v: i64, bits: u32) -> bool {
    let lo = -(1i64 << (bits - 1));
    let hi = (1i64 << (bits - 1)) - 1;
    (lo..=hi).contains(&v)
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct TypeError(pub String);

impl Expr {
    pub fn port(i: usize) -> Expr {
        Expr::Port(i)
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Expr) -> Expr {
        Expr::Unary(UnOp::Not, Box::new(a))
    }

    pub fn ite(c: Expr, t: Expr, e: Expr) -> Expr {
        Expr::Ite(Box::new(c), Box::new(t), Box::new(e))
    }

    pub fn type_of(&self, ports: &[Ty]) -> Result<Ty, TypeError> {
        match self {
            Expr::Int(_) => Ok(Ty::Int),
            Expr::Bool(_) => Ok(Ty::Bool),
            Expr::Port(i) => ports
                .get(*i)
                .copied()
                .ok_or_else(|| TypeError(format!("reference to undeclared port #{i}"))),
            Expr::Unary(op, a) => {
                let want = match op {
                    UnOp::Not => Ty::Bool,
                    UnOp::Neg => Ty::Int,
                };
                expect(a.type_of(ports)?, want, "unary operand")?;
                Ok(want)
            }
            Expr::Binary(op, a, b) => {
                let (ta, tb) = (a.type_of(ports)?, b.type_of(ports)?);
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul => {
                        expect(ta, Ty::Int, op.symbol())?;
                        expect(tb, Ty::Int, op.symbol())?;
                        Ok(Ty::Int)
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        expect(ta, Ty::Int, op.symbol())?;
                        expect(tb, Ty::Int, op.symbol())?;
                        Ok(Ty::Bool)
                    }
                    BinOp::Eq | BinOp::Ne => {
                        expect(tb, ta, op.symbol())?;
                        Ok(Ty::Bool)
                    }
                    BinOp::And | BinOp::Or => {
                        expect(ta, Ty::Bool, op.symbol())?;
                        expect(tb, Ty::Bool, op.symbol())?;
                        Ok(Ty::Bool)
                    }
                }
            }
            Expr::Ite(c, t, e) => {
                expect(c.type_of(ports)?, Ty::Bool, "if condition")?;
                let (tt, te) = (t.type_of(ports)?, e.type_of(ports)?);
                expect(te, tt, "if branches")?;
                Ok(tt)
            }
        }
    }

    /// Evaluates with `bits`-wide wrapping integer arithmetic and signed
    /// comparisons. The expression must be well typed for `ports`.
    pub fn eval(&self, ports: &[Value], bits: u32) -> Value {
        match self {
            Expr::Int(v) => Value::Int(wrap(*v, bits)),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Port(i) => match ports[*i] {
                Value::Int(v) => Value::Int(wrap(v, bits)),
                b => b,
            },
            Expr::Unary(UnOp::Not, a) => Value::Bool(!a.eval(ports, bits).as_bool()),
            Expr::Unary(UnOp::Neg, a) => {
                Value::Int(wrap(a.eval(ports, bits).as_int().wrapping_neg(), bits))
            }
            Expr::Binary(op, a, b) => {
                let (va, vb) = (a.eval(ports, bits), b.eval(ports, bits));
                let (x, y) = (va.as_int(), vb.as_int());
                match op {
                    BinOp::Add => Value::Int(wrap(x.wrapping_add(y), bits)),
                    BinOp::Sub => Value::Int(wrap(x.wrapping_sub(y), bits)),
                    BinOp::Mul => Value::Int(wrap(x.wrapping_mul(y), bits)),
                    BinOp::Lt => Value::Bool(x < y),
                    BinOp::Le => Value::Bool(x <= y),
                    BinOp::Gt => Value::Bool(x > y),
                    BinOp::Ge => Value::Bool(x >= y),
                    BinOp::Eq => Value::Bool(x == y),
                    BinOp::Ne => Value::Bool(x != y),
                    BinOp::And => Value::Bool(va.as_bool() && vb.as_bool()),
                    BinOp::Or => Value::Bool(va.as_bool() || vb.as_bool()),
                }
            }
            Expr::Ite(c, t, e) => {
                if c.eval(ports, bits).as_bool() {
                    t.eval(ports, bits)
                } else {
                    e.eval(ports, bits)
                }
            }
        }
    }

    /// Visits every integer literal.
    pub fn literals(&self, out: &mut Vec<i64>) {
        match self {
            Expr::Int(v) => out.push(*v),
            Expr::Bool(_) | Expr::Port(_) => {}
            Expr::Unary(_, a) => a.literals(out),
            Expr::Binary(_, a, b) => {
                a.literals(out);
                b.literals(out);
            }
            Expr::Ite(c, t, e) => {
                c.literals(out);
                t.literals(out);
                e.literals(out);
            }
        }
    }

    /// Renders in the graph source syntax.
    pub fn render(&self, names: &[String]) -> String {
        let mut s = String::new();
        self.render_into(names, 0, &mut s);
        s
    }

    fn render_into(&self, names: &[String], parent: u8, out: &mut String) {
        match self {
            Expr::Int(v) => out.push_str(&v.to_string()),
            Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Expr::Port(i) => match names.get(*i) {
                Some(n) => out.push_str(n),
                None => out.push_str(&format!("${i}")),
            },
            Expr::Unary(op, a) => {
                out.push(if *op == UnOp::Not { '!' } else { '-' });
                a.render_into(names, 6, out);
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                let paren = p <= parent;
                if paren {
                    out.push('(');
                }
                // comparisons are non-associative, so both sides bind tighter
                let left = if op.is_comparison() { p } else { p - 1 };
                a.render_into(names, left, out);
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
                b.render_into(names, p, out);
                if paren {
                    out.push(')');
                }
            }
            Expr::Ite(c, t, e) => {
                out.push('(');
                out.push_str("if ");
                c.render_into(names, 0, out);
                out.push_str(" then ");
                t.render_into(names, 0, out);
                out.push_str(" else ");
                e.render_into(names, 0, out);
                out.push(')');
            }
        }
    }
}

fn expect(got: Ty, want: Ty, what: &str) -> Result<(), TypeError> {
    if got == want {
        Ok(())
    } else {
        Err(TypeError(format!("{what}: expected {want}, found {got}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapping_is_signed() {
        assert_eq!(wrap(127 + 1, 8), -128);
        assert_eq!(wrap(-129, 8), 127);
        assert_eq!(sign_extend(0xff, 8), -1);
        assert_eq!(Value::Int(-1).to_payload(8), 0xff);
        assert!(fits(-128, 8) && fits(127, 8) && !fits(128, 8));
    }

    #[test]
    fn type_errors_are_reported() {
        let e = Expr::bin(BinOp::Add, Expr::port(0), Expr::Bool(true));
        assert!(e.type_of(&[Ty::Int]).is_err());
        let e = Expr::bin(BinOp::Gt, Expr::port(0), Expr::Int(45));
        assert_eq!(e.type_of(&[Ty::Int]).unwrap(), Ty::Bool);
        assert!(Expr::port(1).type_of(&[Ty::Int]).is_err());
    }

    #[test]
    fn render_parenthesizes_by_precedence() {
        let names = vec!["a".to_string()];
        let e = Expr::bin(
            BinOp::Mul,
            Expr::bin(BinOp::Add, Expr::port(0), Expr::Int(1)),
            Expr::Int(2),
        );
        assert_eq!(e.render(&names), "(a + 1) * 2");
        let e = Expr::bin(
            BinOp::Sub,
            Expr::port(0),
            Expr::bin(BinOp::Sub, Expr::Int(1), Expr::Int(2)),
        );
        assert_eq!(e.render(&names), "a - (1 - 2)");
    }
}
