use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::expr::{Ty, Value};
use super::Table;

/// Domains up to this many points are scanned exhaustively.
pub const EXHAUSTIVE_LIMIT: u64 = 1 << 20;

const MAX_WITNESSES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "type")]
pub enum PortDomain {
    Bool,
    Int { lo: i64, hi: i64 },
}

impl PortDomain {
    pub fn full_int(bits: u32) -> PortDomain {
        PortDomain::Int {
            lo: -(1i64 << (bits - 1)),
            hi: (1i64 << (bits - 1)) - 1,
        }
    }

    pub fn of(ty: Ty, bits: u32) -> PortDomain {
        match ty {
            Ty::Bool => PortDomain::Bool,
            Ty::Int => PortDomain::full_int(bits),
        }
    }

    pub fn size(&self) -> u64 {
        match self {
            PortDomain::Bool => 2,
            PortDomain::Int { lo, hi } => (hi - lo + 1) as u64,
        }
    }

    pub fn nth(&self, i: u64) -> Value {
        match self {
            PortDomain::Bool => Value::Bool(i == 1),
            PortDomain::Int { lo, .. } => Value::Int(lo + i as i64),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Value {
        self.nth(rng.gen_range(0..self.size()))
    }
}

/// Product domain over a table's input ports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain(pub Vec<PortDomain>);

impl Domain {
    /// Number of points, saturating.
    pub fn size(&self) -> u64 {
        self.0
            .iter()
            .fold(1u64, |acc, d| acc.saturating_mul(d.size()))
    }

    /// The `i`-th point in mixed-radix order, last port fastest.
    pub fn point(&self, mut i: u64) -> Vec<Value> {
        let mut out = vec![Value::Bool(false); self.0.len()];
        for (k, d) in self.0.iter().enumerate().rev() {
            out[k] = d.nth(i % d.size());
            i /= d.size();
        }
        out
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Value> {
        self.0.iter().map(|d| d.sample(rng)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub table: String,
    pub exhaustive: bool,
    pub points: u64,
    /// Inputs where no predicate holds (first few only).
    pub incomplete: Vec<Vec<Value>>,
    pub incomplete_count: u64,
    /// Inputs where two or more predicates hold, with the 0-based rows.
    pub overlapping: Vec<(Vec<Value>, Vec<usize>)>,
    pub overlap_count: u64,
    /// For sampled runs: 95% upper bound on the violating fraction of the
    /// domain when no violation was seen.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violation_bound: Option<f64>,
}

impl PropertyReport {
    pub fn is_complete(&self) -> bool {
        self.incomplete_count == 0
    }

    pub fn is_disjoint(&self) -> bool {
        self.overlap_count == 0
    }

    pub fn passed(&self) -> bool {
        self.is_complete() && self.is_disjoint()
    }
}

/// Checks that exactly one predicate of `table` holds at every point of
/// `domain` (exhaustively when small, else `samples` seeded draws).
pub fn check_properties(
    table: &Table,
    domain: &Domain,
    bits: u32,
    samples: u64,
    seed: u64,
) -> PropertyReport {
    let size = domain.size();
    let exhaustive = size <= EXHAUSTIVE_LIMIT;
    let mut report = PropertyReport {
        table: table.name.clone(),
        exhaustive,
        points: 0,
        incomplete: Vec::new(),
        incomplete_count: 0,
        overlapping: Vec::new(),
        overlap_count: 0,
        violation_bound: None,
    };
    let mut visit = |x: Vec<Value>| {
        report.points += 1;
        let hits: Vec<usize> = table
            .rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.predicate.eval(&x, bits).as_bool())
            .map(|(i, _)| i)
            .collect();
        match hits.len() {
            0 => {
                report.incomplete_count += 1;
                if report.incomplete.len() < MAX_WITNESSES {
                    report.incomplete.push(x);
                }
            }
            1 => {}
            _ => {
                report.overlap_count += 1;
                if report.overlapping.len() < MAX_WITNESSES {
                    report.overlapping.push((x, hits));
                }
            }
        }
    };
    if exhaustive {
        (0..size).for_each(|i| visit(domain.point(i)));
    } else {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (0..samples.max(1)).for_each(|_| visit(domain.sample(&mut rng)));
    }
    if !exhaustive {
        report.violation_bound = Some((3.0 / report.points as f64).min(1.0));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{parse_graph, Expr, Row};

    fn table(preds: Vec<Expr>) -> Table {
        Table {
            name: "T".into(),
            inputs: vec![("a".into(), Ty::Int)],
            outputs: vec![("y".into(), Ty::Int)],
            rows: preds
                .into_iter()
                .map(|p| Row { predicate: p, outputs: vec![Expr::Int(0)] })
                .collect(),
        }
    }

    #[test]
    fn overlapping_rows_reported() {
        use crate::table::BinOp;
        let t = table(vec![
            Expr::bin(BinOp::Gt, Expr::port(0), Expr::Int(10)),
            Expr::bin(BinOp::Gt, Expr::port(0), Expr::Int(20)),
        ]);
        let d = Domain(vec![PortDomain::Int { lo: 30, hi: 30 }]);
        let r = check_properties(&t, &d, 8, 0, 0);
        assert!(r.is_complete());
        assert_eq!(r.overlapping, vec![(vec![Value::Int(30)], vec![0, 1])]);
    }

    #[test]
    fn single_true_row_passes() {
        let t = table(vec![Expr::Bool(true)]);
        let r = check_properties(&t, &Domain(vec![PortDomain::full_int(8)]), 8, 0, 0);
        assert!(r.passed() && r.exhaustive && r.points == 256);
    }

    #[test]
    fn sampling_above_limit() {
        let src = "input a: int
            input b: int
            input c: int
            output y
            table T { inputs: a: int, b: int, c: int; outputs: y: int; rows: [(a > b, c), (a <= b, 0)] }
            edges: Input.a -> T.a; Input.b -> T.b; Input.c -> T.c; T.y -> Output.y";
        let g = parse_graph(src).unwrap();
        let d = g.port_domain(0, 8);
        assert_eq!(d.size(), 1 << 24);
        let r = check_properties(&g.tables[0], &d, 8, 1000, 7);
        assert!(!r.exhaustive && r.passed());
        assert_eq!(r.points, 1000);
        assert!((r.violation_bound.unwrap() - 0.003).abs() < 1e-12);
    }
}
