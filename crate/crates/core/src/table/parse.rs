//! Graph source format.
//!
//! ```text
//! input a: int[0..100];
//! input b: bool;
//! output y;
//!
//! table T {
//!   inputs: a: int, b: bool;
//!   outputs: out: int;
//!   rows: [
//!     (a > 45 && b, a - 20),
//!     (!(a > 45 && b), 0),
//!   ];
//! }
//!
//! edges:
//!   Input.a -> T.a;
//!   Input.b -> T.b;
//!   T.out -> Output.y;
//! ```
//!
//! Comments start with `#` or `//`. Semicolons and trailing commas are
//! optional. Multi-output rows write their functions as `[f1, f2]`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::expr::{fits, BinOp, Expr, Ty, UnOp};
use super::{ExternalInput, ExternalOutput, Source, Table, TableError, TableGraph};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 24] = [
    "->", "..", "<=", ">=", "==", "!=", "&&", "||", "(", ")", "[", "]", "{", "}", ",", ";", ":",
    ".", "+", "-", "*", "!", "<", ">",
];

fn lex(src: &str) -> Result<Vec<Token>, TableError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, col, message: String| TableError::Syntax { line, col, message };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = (line, col);
        if c.is_ascii_digit() {
            let j = (i..chars.len())
                .find(|&j| !chars[j].is_ascii_digit())
                .unwrap_or(chars.len());
            let text: String = chars[i..j].iter().collect();
            let v = text
                .parse::<i64>()
                .map_err(|_| err(line, col, format!("integer literal `{text}` out of range")))?;
            out.push(Token { tok: Tok::Int(v), line: start.0, col: start.1 });
            col += j - i;
            i = j;
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let j = (i..chars.len())
                .find(|&j| !(chars[j].is_alphanumeric() || chars[j] == '_'))
                .unwrap_or(chars.len());
            let text: String = chars[i..j].iter().collect();
            out.push(Token { tok: Tok::Ident(text), line: start.0, col: start.1 });
            col += j - i;
            i = j;
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let sym = SYMBOLS
            .iter()
            .find(|s| rest.starts_with(**s))
            .ok_or_else(|| err(line, col, format!("unexpected character `{c}`")))?;
        out.push(Token { tok: Tok::Sym(sym), line: start.0, col: start.1 });
        i += sym.len();
        col += sym.len();
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

struct RawTable {
    name: String,
    inputs: Vec<(String, Ty)>,
    outputs: Vec<(String, Ty)>,
    rows: Vec<(Expr, Vec<Expr>)>,
    at: (usize, usize),
}

struct RawEdge {
    from: (String, String),
    to: (String, String),
    at: (usize, usize),
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn at(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, TableError> {
        let (line, col) = self.at();
        Err(TableError::Syntax { line, col, message: message.into() })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if t != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        let hit = self.is_sym(s);
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), TableError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", describe(self.peek())))
        }
    }

    fn expect_kw(&mut self, k: &str) -> Result<(), TableError> {
        if self.is_kw(k) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{k}`, found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self) -> Result<String, TableError> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_reserved(&s) => {
                self.pos += 1;
                Ok(s)
            }
            t => self.err(format!("expected identifier, found {}", describe(&t))),
        }
    }

    fn ty(&mut self) -> Result<Ty, TableError> {
        if self.is_kw("int") {
            self.pos += 1;
            Ok(Ty::Int)
        } else if self.is_kw("bool") {
            self.pos += 1;
            Ok(Ty::Bool)
        } else {
            self.err(format!("expected type, found {}", describe(self.peek())))
        }
    }

    fn signed_int(&mut self) -> Result<i64, TableError> {
        let neg = self.eat_sym("-");
        match self.bump() {
            Tok::Int(v) => Ok(if neg { -v } else { v }),
            t => {
                self.pos -= 1;
                self.err(format!("expected integer, found {}", describe(&t)))
            }
        }
    }

    fn port_list(&mut self) -> Result<Vec<(String, Ty)>, TableError> {
        let mut ports = Vec::new();
        loop {
            let name = self.ident()?;
            self.expect_sym(":")?;
            ports.push((name, self.ty()?));
            if !self.eat_sym(",") {
                break;
            }
        }
        self.eat_sym(";");
        Ok(ports)
    }

    fn table(&mut self) -> Result<RawTable, TableError> {
        let at = self.at();
        self.expect_kw("table")?;
        let name = self.ident()?;
        self.expect_sym("{")?;
        let (mut inputs, mut outputs, mut rows) = (None, None, None);
        while !self.eat_sym("}") {
            if self.is_kw("inputs") {
                self.pos += 1;
                self.expect_sym(":")?;
                inputs = Some(self.port_list()?);
            } else if self.is_kw("outputs") {
                self.pos += 1;
                self.expect_sym(":")?;
                outputs = Some(self.port_list()?);
            } else if self.is_kw("rows") {
                self.pos += 1;
                self.expect_sym(":")?;
                let ports: Vec<String> = match &inputs {
                    Some(p) => p.iter().map(|(n, _): &(String, Ty)| n.clone()).collect(),
                    None => return self.err("`inputs` must precede `rows`"),
                };
                rows = Some(self.rows(&ports)?);
            } else {
                return self.err(format!(
                    "expected `inputs`, `outputs`, `rows` or `}}`, found {}",
                    describe(self.peek())
                ));
            }
        }
        Ok(RawTable {
            name,
            inputs: inputs.unwrap_or_default(),
            outputs: outputs.unwrap_or_default(),
            rows: rows.unwrap_or_default(),
            at,
        })
    }

    fn rows(&mut self, ports: &[String]) -> Result<Vec<(Expr, Vec<Expr>)>, TableError> {
        self.expect_sym("[")?;
        let mut rows = Vec::new();
        while !self.eat_sym("]") {
            self.expect_sym("(")?;
            let pred = self.expr(ports)?;
            self.expect_sym(",")?;
            let funcs = if self.eat_sym("[") {
                let mut fs = vec![self.expr(ports)?];
                while self.eat_sym(",") {
                    if self.is_sym("]") {
                        break;
                    }
                    fs.push(self.expr(ports)?);
                }
                self.expect_sym("]")?;
                fs
            } else {
                vec![self.expr(ports)?]
            };
            self.expect_sym(")")?;
            rows.push((pred, funcs));
            if !self.eat_sym(",") && !self.is_sym("]") {
                return self.err(format!("expected `,` or `]`, found {}", describe(self.peek())));
            }
        }
        self.eat_sym(";");
        Ok(rows)
    }

    fn endpoint(&mut self) -> Result<(String, String), TableError> {
        let node = match self.bump() {
            Tok::Ident(s) => s,
            t => {
                self.pos -= 1;
                return self.err(format!("expected endpoint, found {}", describe(&t)));
            }
        };
        self.expect_sym(".")?;
        let port = self.ident()?;
        Ok((node, port))
    }

    fn edges(&mut self, out: &mut Vec<RawEdge>) -> Result<(), TableError> {
        self.expect_kw("edges")?;
        let braced = if self.eat_sym("{") {
            true
        } else {
            self.expect_sym(":")?;
            false
        };
        loop {
            if braced && self.eat_sym("}") {
                break;
            }
            if !braced && (self.peek() == &Tok::Eof || self.at_top_keyword()) {
                break;
            }
            let at = self.at();
            let from = self.endpoint()?;
            self.expect_sym("->")?;
            let to = self.endpoint()?;
            out.push(RawEdge { from, to, at });
            if !self.eat_sym(";") {
                self.eat_sym(",");
            }
        }
        Ok(())
    }

    fn at_top_keyword(&self) -> bool {
        ["input", "output", "table", "edges"].iter().any(|k| self.is_kw(k))
    }

    // expression grammar, loosest first

    fn expr(&mut self, ports: &[String]) -> Result<Expr, TableError> {
        if self.is_kw("if") {
            self.pos += 1;
            let c = self.expr(ports)?;
            self.expect_kw("then")?;
            let t = self.expr(ports)?;
            self.expect_kw("else")?;
            let e = self.expr(ports)?;
            return Ok(Expr::ite(c, t, e));
        }
        self.or(ports)
    }

    fn or(&mut self, ports: &[String]) -> Result<Expr, TableError> {
        let mut e = self.and(ports)?;
        while self.eat_sym("||") {
            e = Expr::bin(BinOp::Or, e, self.and(ports)?);
        }
        Ok(e)
    }

    fn and(&mut self, ports: &[String]) -> Result<Expr, TableError> {
        let mut e = self.cmp(ports)?;
        while self.eat_sym("&&") {
            e = Expr::bin(BinOp::And, e, self.cmp(ports)?);
        }
        Ok(e)
    }

    /// Comparisons may be chained: `a <= b < c` means `a <= b && b < c`.
    fn cmp(&mut self, ports: &[String]) -> Result<Expr, TableError> {
        let mut lhs = self.add(ports)?;
        let mut acc: Option<Expr> = None;
        while let Some(op) = self.cmp_op() {
            let rhs = self.add(ports)?;
            let link = Expr::bin(op, lhs, rhs.clone());
            acc = Some(match acc {
                None => link,
                Some(prev) => Expr::bin(BinOp::And, prev, link),
            });
            lhs = rhs;
        }
        Ok(acc.unwrap_or(lhs))
    }

    fn cmp_op(&mut self) -> Option<BinOp> {
        let op = match self.peek() {
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            Tok::Sym("==") => BinOp::Eq,
            Tok::Sym("!=") => BinOp::Ne,
            _ => return None,
        };
        self.pos += 1;
        Some(op)
    }

    fn add(&mut self, ports: &[String]) -> Result<Expr, TableError> {
        let mut e = self.mul(ports)?;
        loop {
            if self.eat_sym("+") {
                e = Expr::bin(BinOp::Add, e, self.mul(ports)?);
            } else if self.eat_sym("-") {
                e = Expr::bin(BinOp::Sub, e, self.mul(ports)?);
            } else {
                return Ok(e);
            }
        }
    }

    fn mul(&mut self, ports: &[String]) -> Result<Expr, TableError> {
        let mut e = self.unary(ports)?;
        while self.eat_sym("*") {
            e = Expr::bin(BinOp::Mul, e, self.unary(ports)?);
        }
        Ok(e)
    }

    fn unary(&mut self, ports: &[String]) -> Result<Expr, TableError> {
        if self.eat_sym("!") {
            return Ok(Expr::not(self.unary(ports)?));
        }
        if self.eat_sym("-") {
            return Ok(match self.unary(ports)? {
                Expr::Int(v) => Expr::Int(-v),
                e => Expr::Unary(UnOp::Neg, Box::new(e)),
            });
        }
        self.primary(ports)
    }

    fn primary(&mut self, ports: &[String]) -> Result<Expr, TableError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.pos += 1;
                Ok(Expr::Int(v))
            }
            Tok::Sym("(") => {
                self.pos += 1;
                let e = self.expr(ports)?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "true" || s == "True" => {
                self.pos += 1;
                Ok(Expr::Bool(true))
            }
            Tok::Ident(s) if s == "false" || s == "False" => {
                self.pos += 1;
                Ok(Expr::Bool(false))
            }
            Tok::Ident(s) if s == "if" => self.expr(ports),
            Tok::Ident(s) => match ports.iter().position(|p| *p == s) {
                Some(i) => {
                    self.pos += 1;
                    Ok(Expr::Port(i))
                }
                None => self.err(format!("unknown port `{s}`")),
            },
            t => self.err(format!("expected expression, found {}", describe(&t))),
        }
    }
}

fn is_reserved(s: &str) -> bool {
    matches!(
        s,
        "if" | "then" | "else" | "true" | "false" | "True" | "False" | "int" | "bool" | "Input"
            | "Output"
    )
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(v) => format!("`{v}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".into(),
    }
}

fn syntax(at: (usize, usize), message: String) -> TableError {
    TableError::Syntax { line: at.0, col: at.1, message }
}

/// Parses and validates a graph in the source format.
pub fn parse_graph(text: &str) -> Result<TableGraph, TableError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let mut inputs: Vec<ExternalInput> = Vec::new();
    let mut outputs: Vec<String> = Vec::new();
    let mut raw_tables = Vec::new();
    let mut raw_edges = Vec::new();
    let mut names = BTreeSet::new();
    let mut claim = |name: &str| -> Result<(), TableError> {
        if names.insert(name.to_string()) {
            Ok(())
        } else {
            Err(TableError::Duplicate(name.to_string()))
        }
    };
    while p.peek() != &Tok::Eof {
        if p.is_kw("input") {
            p.pos += 1;
            let name = p.ident()?;
            p.expect_sym(":")?;
            let ty = p.ty()?;
            let range = if ty == Ty::Int && p.eat_sym("[") {
                let lo = p.signed_int()?;
                p.expect_sym("..")?;
                let hi = p.signed_int()?;
                p.expect_sym("]")?;
                if lo > hi {
                    return p.err(format!("empty range {lo}..{hi}"));
                }
                Some((lo, hi))
            } else {
                None
            };
            p.eat_sym(";");
            claim(&name)?;
            inputs.push(ExternalInput { name, ty, range });
        } else if p.is_kw("output") {
            p.pos += 1;
            let name = p.ident()?;
            p.eat_sym(";");
            claim(&name)?;
            outputs.push(name);
        } else if p.is_kw("table") {
            let t = p.table()?;
            claim(&t.name)?;
            if t.outputs.is_empty() {
                return Err(syntax(t.at, format!("table `{}` declares no outputs", t.name)));
            }
            raw_tables.push(t);
        } else if p.is_kw("edges") {
            p.edges(&mut raw_edges)?;
        } else {
            return p.err(format!(
                "expected `input`, `output`, `table` or `edges`, found {}",
                describe(p.peek())
            ));
        }
    }
    assemble(inputs, outputs, raw_tables, raw_edges)
}

fn assemble(
    inputs: Vec<ExternalInput>,
    output_names: Vec<String>,
    raw: Vec<RawTable>,
    edges: Vec<RawEdge>,
) -> Result<TableGraph, TableError> {
    if raw.is_empty() {
        return Err(TableError::NoTables);
    }
    let mut tables = Vec::with_capacity(raw.len());
    for t in raw {
        let mut seen = BTreeSet::new();
        for (n, _) in t.inputs.iter().chain(&t.outputs) {
            if !seen.insert(n) {
                return Err(TableError::Duplicate(format!("{}.{}", t.name, n)));
            }
        }
        if t.rows.is_empty() {
            return Err(TableError::EmptyTable(t.name));
        }
        let types: Vec<Ty> = t.inputs.iter().map(|(_, ty)| *ty).collect();
        let mut rows = Vec::with_capacity(t.rows.len());
        for (i, (pred, funcs)) in t.rows.into_iter().enumerate() {
            let ctx = |what: &str| format!("table `{}` row {} {}", t.name, i + 1, what);
            let pt = pred.type_of(&types).map_err(|e| TableError::Type {
                context: ctx("predicate"),
                message: e.0,
            })?;
            if pt != Ty::Bool {
                return Err(TableError::Type {
                    context: ctx("predicate"),
                    message: format!("expected bool, found {pt}"),
                });
            }
            if funcs.len() != t.outputs.len() {
                return Err(TableError::Type {
                    context: ctx("function"),
                    message: format!(
                        "{} functions for {} outputs",
                        funcs.len(),
                        t.outputs.len()
                    ),
                });
            }
            for (f, (oname, oty)) in funcs.iter().zip(&t.outputs) {
                let ft = f.type_of(&types).map_err(|e| TableError::Type {
                    context: ctx(&format!("output `{oname}`")),
                    message: e.0,
                })?;
                if ft != *oty {
                    return Err(TableError::Type {
                        context: ctx(&format!("output `{oname}`")),
                        message: format!("expected {oty}, found {ft}"),
                    });
                }
            }
            rows.push(super::Row { predicate: pred, outputs: funcs });
        }
        tables.push(Table {
            name: t.name,
            inputs: t.inputs,
            outputs: t.outputs,
            rows,
        });
    }

    let index: HashMap<&str, usize> = tables
        .iter()
        .enumerate()
        .map(|(i, t)| (t.name.as_str(), i))
        .collect();
    let mut wiring: Vec<Vec<Option<Source>>> =
        tables.iter().map(|t| vec![None; t.inputs.len()]).collect();
    let mut out_src: BTreeMap<String, Source> = BTreeMap::new();
    let render = |e: &RawEdge| {
        format!(
            "{}.{} -> {}.{} at {}:{}",
            e.from.0, e.from.1, e.to.0, e.to.1, e.at.0, e.at.1
        )
    };
    for e in &edges {
        let (src, src_ty) = if e.from.0 == "Input" {
            let i = inputs
                .iter()
                .find(|i| i.name == e.from.1)
                .ok_or_else(|| TableError::DanglingEdge(render(e)))?;
            (Source::External(i.name.clone()), i.ty)
        } else {
            let t = *index
                .get(e.from.0.as_str())
                .ok_or_else(|| TableError::DanglingEdge(render(e)))?;
            let o = tables[t]
                .outputs
                .iter()
                .position(|(n, _)| *n == e.from.1)
                .ok_or_else(|| TableError::DanglingEdge(render(e)))?;
            (Source::Table { table: t, output: o }, tables[t].outputs[o].1)
        };
        if e.to.0 == "Output" {
            if !output_names.contains(&e.to.1) {
                return Err(TableError::DanglingEdge(render(e)));
            }
            if matches!(src, Source::External(_)) {
                return Err(TableError::DanglingEdge(format!(
                    "{} (external input wired straight to an output)",
                    render(e)
                )));
            }
            if out_src.insert(e.to.1.clone(), src).is_some() {
                return Err(TableError::MultipleProducers(format!("Output.{}", e.to.1)));
            }
            continue;
        }
        let t = *index
            .get(e.to.0.as_str())
            .ok_or_else(|| TableError::DanglingEdge(render(e)))?;
        let p = tables[t]
            .inputs
            .iter()
            .position(|(n, _)| *n == e.to.1)
            .ok_or_else(|| TableError::DanglingEdge(render(e)))?;
        let port_ty = tables[t].inputs[p].1;
        if port_ty != src_ty {
            return Err(TableError::Type {
                context: format!("edge {}", render(e)),
                message: format!("producer is {src_ty}, consumer expects {port_ty}"),
            });
        }
        if wiring[t][p].replace(src).is_some() {
            return Err(TableError::MultipleProducers(format!("{}.{}", e.to.0, e.to.1)));
        }
    }
    let mut full = Vec::with_capacity(tables.len());
    for (t, ports) in wiring.into_iter().enumerate() {
        let mut row = Vec::with_capacity(ports.len());
        for (p, s) in ports.into_iter().enumerate() {
            row.push(s.ok_or_else(|| {
                TableError::Unconnected(format!("{}.{}", tables[t].name, tables[t].inputs[p].0))
            })?);
        }
        full.push(row);
    }
    let mut outputs = Vec::with_capacity(output_names.len());
    for name in output_names {
        let source = out_src
            .remove(&name)
            .ok_or_else(|| TableError::Unconnected(format!("Output.{name}")))?;
        let ty = match &source {
            Source::Table { table, output } => tables[*table].outputs[*output].1,
            Source::External(_) => unreachable!(),
        };
        outputs.push(ExternalOutput { name, ty, source });
    }

    let order = topo_order(&tables, &full)?;
    Ok(TableGraph {
        inputs,
        outputs,
        tables,
        wiring: full,
        order,
    })
}

fn topo_order(tables: &[Table], wiring: &[Vec<Source>]) -> Result<Vec<usize>, TableError> {
    let n = tables.len();
    let mut indeg = vec![0usize; n];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (t, ports) in wiring.iter().enumerate() {
        let producers: BTreeSet<usize> = ports
            .iter()
            .filter_map(|s| match s {
                Source::Table { table, .. } => Some(*table),
                Source::External(_) => None,
            })
            .collect();
        for p in producers {
            succ[p].push(t);
            indeg[t] += 1;
        }
    }
    let mut ready: Vec<usize> = (0..n).rev().filter(|&t| indeg[t] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(t) = ready.pop() {
        order.push(t);
        for &s in succ[t].iter().rev() {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                ready.push(s);
            }
        }
    }
    if order.len() < n {
        let stuck = (0..n)
            .filter(|t| indeg[*t] > 0)
            .map(|t| tables[t].name.clone())
            .collect();
        return Err(TableError::Cycle(stuck));
    }
    Ok(order)
}

/// Largest integer literal magnitude check used by the transformation.
pub(crate) fn literals_fit(g: &TableGraph, bits: u32) -> Result<(), TableError> {
    for t in &g.tables {
        for r in &t.rows {
            let mut lits = Vec::new();
            r.predicate.literals(&mut lits);
            for f in &r.outputs {
                f.literals(&mut lits);
            }
            if let Some(&v) = lits.iter().find(|v| !fits(**v, bits)) {
                return Err(TableError::WidthOverflow { value: v, bits });
            }
        }
    }
    for i in &g.inputs {
        if let Some((lo, hi)) = i.range {
            for v in [lo, hi] {
                if !fits(v, bits) {
                    return Err(TableError::WidthOverflow { value: v, bits });
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Value;

    const ONE: &str = "
        input a: int[0..100]
        output y
        table T {
          inputs: a: int
          outputs: y: int
          rows: [(a > 45, a - 20)]
        }
        edges:
          Input.a -> T.a
          T.y -> Output.y
    ";

    #[test]
    fn single_row_table() {
        let g = parse_graph(ONE).unwrap();
        assert_eq!(g.tables.len(), 1);
        assert_eq!(g.tables[0].rows.len(), 1);
        let x = BTreeMap::from([("a".to_string(), Value::Int(46))]);
        assert_eq!(g.evaluate(&x, 8).unwrap()["y"], Value::Int(26));
    }

    #[test]
    fn errors_are_located() {
        let e = parse_graph("table T { inputs: a: int; outputs: y: int; rows: [(a >, 1)] }")
            .unwrap_err();
        assert!(matches!(e, TableError::Syntax { line: 1, .. }), "{e}");
        assert_eq!(parse_graph("# nothing\n").unwrap_err(), TableError::NoTables);
    }

    #[test]
    fn cycle_rejected() {
        let src = "
            table A { inputs: x: int; outputs: y: int; rows: [(true, x)] }
            table B { inputs: x: int; outputs: y: int; rows: [(true, x)] }
            edges: A.y -> B.x; B.y -> A.x
        ";
        let e = parse_graph(src).unwrap_err();
        assert!(e.to_string().contains("cycle"), "{e}");
    }

    #[test]
    fn structural_errors() {
        let dup = "table A { inputs: x: int; outputs: y: int; rows: [(true, x)] }
                   table A { inputs: x: int; outputs: y: int; rows: [(true, x)] }";
        assert!(matches!(parse_graph(dup), Err(TableError::Duplicate(_))));
        let dangling = "input a: int
            table A { inputs: x: int; outputs: y: int; rows: [(true, x)] }
            edges: Input.a -> A.x; Input.a -> B.x";
        assert!(matches!(parse_graph(dangling), Err(TableError::DanglingEdge(_))));
        let open = "table A { inputs: x: int; outputs: y: int; rows: [(true, x)] }";
        assert!(matches!(parse_graph(open), Err(TableError::Unconnected(_))));
        let typed = "input a: bool
            table A { inputs: x: int; outputs: y: int; rows: [(true, x)] }
            edges: Input.a -> A.x";
        assert!(matches!(parse_graph(typed), Err(TableError::Type { .. })));
    }

    #[test]
    fn chained_comparison() {
        let src = "input a: int
            output y
            table T { inputs: a: int; outputs: y: bool; rows: [(35 <= a <= 45, true), (a < 35 || a > 45, false)] }
            edges: Input.a -> T.a; T.y -> Output.y";
        let g = parse_graph(src).unwrap();
        for (a, want) in [(34, false), (35, true), (45, true), (46, false)] {
            let x = BTreeMap::from([("a".to_string(), Value::Int(a))]);
            assert_eq!(g.evaluate(&x, 8).unwrap()["y"], Value::Bool(want));
        }
    }

    #[test]
    fn display_round_trips() {
        let g = parse_graph(ONE).unwrap();
        assert_eq!(parse_graph(&g.to_string()).unwrap(), g);
    }
}
