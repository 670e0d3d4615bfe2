//! Tabular expressions, table graphs, and the single-row transformation.

mod expr;
mod parse;
mod props;
mod tagged;
mod transform;

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

pub use expr::{fits, sign_extend, wrap, BinOp, Expr, Ty, TypeError, UnOp, Value};
pub use parse::parse_graph;
pub use props::{check_properties, Domain, PortDomain, PropertyReport, EXHAUSTIVE_LIMIT};
pub use tagged::{bits_word, word_bits, Tag, TaggedError, TaggedValue};
pub use transform::{
    consistent_order, evaluate_plain, resolve_output, transform, NodeSource, OutputValue,
    PlainEvaluation, RowOrigin, RowTable, StructNode, StructOutput, StructureGraph, TraceEntry,
    TransformedGraph, DEFAULT_WIDTH,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TableError {
    #[error("{line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("no tables")]
    NoTables,
    #[error("duplicate name `{0}`")]
    Duplicate(String),
    #[error("dangling edge {0}")]
    DanglingEdge(String),
    #[error("cycle detected through tables {0:?}")]
    Cycle(Vec<String>),
    #[error("`{0}` has no producer")]
    Unconnected(String),
    #[error("`{0}` has more than one producer")]
    MultipleProducers(String),
    #[error("type error in {context}: {message}")]
    Type { context: String, message: String },
    #[error("table `{0}` has no rows")]
    EmptyTable(String),
    #[error("value {value} does not fit in a {bits}-bit payload")]
    WidthOverflow { value: i64, bits: u32 },
    #[error("unsupported value width {0}")]
    InvalidWidth(u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Row {
    pub predicate: Expr,
    pub outputs: Vec<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub inputs: Vec<(String, Ty)>,
    pub outputs: Vec<(String, Ty)>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn input_types(&self) -> Vec<Ty> {
        self.inputs.iter().map(|(_, t)| *t).collect()
    }

    pub fn input_names(&self) -> Vec<String> {
        self.inputs.iter().map(|(n, _)| n.clone()).collect()
    }

    /// Index of the first row whose predicate holds.
    pub fn select_row(&self, x: &[Value], bits: u32) -> Option<usize> {
        self.rows
            .iter()
            .position(|r| r.predicate.eval(x, bits).as_bool())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalInput {
    pub name: String,
    pub ty: Ty,
    /// Declared inclusive range for integer inputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<(i64, i64)>,
}

impl ExternalInput {
    pub fn domain(&self, bits: u32) -> PortDomain {
        match (self.ty, self.range) {
            (Ty::Bool, _) => PortDomain::Bool,
            (Ty::Int, Some((lo, hi))) => PortDomain::Int { lo, hi },
            (Ty::Int, None) => PortDomain::full_int(bits),
        }
    }
}

/// Producer side of an edge.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    External(String),
    Table { table: usize, output: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalOutput {
    pub name: String,
    pub ty: Ty,
    pub source: Source,
}

/// An acyclic graph of tables with distinguished external inputs and outputs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableGraph {
    pub inputs: Vec<ExternalInput>,
    pub outputs: Vec<ExternalOutput>,
    pub tables: Vec<Table>,
    /// `wiring[t][p]` is the producer of input port `p` of table `t`.
    pub wiring: Vec<Vec<Source>>,
    /// Tables in a topological order.
    pub order: Vec<usize>,
}

impl TableGraph {
    pub fn table_index(&self, name: &str) -> Option<usize> {
        self.tables.iter().position(|t| t.name == name)
    }

    pub fn input(&self, name: &str) -> Option<&ExternalInput> {
        self.inputs.iter().find(|i| i.name == name)
    }

    /// Domain of each input port of table `t`: the declared range when the
    /// port is fed by an external input, otherwise the full type range.
    pub fn port_domain(&self, t: usize, bits: u32) -> Domain {
        let ports = self.wiring[t]
            .iter()
            .zip(&self.tables[t].inputs)
            .map(|(src, (_, ty))| match src {
                Source::External(name) => self
                    .input(name)
                    .map(|i| i.domain(bits))
                    .unwrap_or(PortDomain::of(*ty, bits)),
                Source::Table { .. } => PortDomain::of(*ty, bits),
            })
            .collect();
        Domain(ports)
    }

    /// Evaluates the original (untransformed) graph. Returns `None` when some
    /// table has no true predicate on the values it receives.
    pub fn evaluate(&self, x: &BTreeMap<String, Value>, bits: u32) -> Option<BTreeMap<String, Value>> {
        let mut produced: Vec<Option<Vec<Value>>> = vec![None; self.tables.len()];
        let fetch = |src: &Source, produced: &[Option<Vec<Value>>]| -> Option<Value> {
            match src {
                Source::External(n) => x.get(n).copied(),
                Source::Table { table, output } => {
                    produced[*table].as_ref().map(|v| v[*output])
                }
            }
        };
        for &t in &self.order {
            let table = &self.tables[t];
            let args: Option<Vec<Value>> = self.wiring[t]
                .iter()
                .map(|s| fetch(s, &produced))
                .collect();
            let args = args?;
            let row = table.select_row(&args, bits)?;
            produced[t] = Some(
                table.rows[row]
                    .outputs
                    .iter()
                    .map(|f| f.eval(&args, bits))
                    .collect(),
            );
        }
        self.outputs
            .iter()
            .map(|o| fetch(&o.source, &produced).map(|v| (o.name.clone(), v)))
            .collect()
    }
}

impl fmt::Display for TableGraph {
    /// Renders back into the source format accepted by [`parse_graph`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.inputs {
            match i.range {
                Some((lo, hi)) => writeln!(f, "input {}: {}[{}..{}];", i.name, i.ty, lo, hi)?,
                None => writeln!(f, "input {}: {};", i.name, i.ty)?,
            }
        }
        for o in &self.outputs {
            writeln!(f, "output {};", o.name)?;
        }
        let decl = |ports: &[(String, Ty)]| {
            ports
                .iter()
                .map(|(n, t)| format!("{n}: {t}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        for t in &self.tables {
            let names = t.input_names();
            writeln!(f, "\ntable {} {{", t.name)?;
            writeln!(f, "  inputs: {};", decl(&t.inputs))?;
            writeln!(f, "  outputs: {};", decl(&t.outputs))?;
            writeln!(f, "  rows: [")?;
            for r in &t.rows {
                let outs: Vec<String> = r.outputs.iter().map(|e| e.render(&names)).collect();
                let rhs = if outs.len() == 1 {
                    outs[0].clone()
                } else {
                    format!("[{}]", outs.join(", "))
                };
                writeln!(f, "    ({}, {}),", r.predicate.render(&names), rhs)?;
            }
            writeln!(f, "  ];\n}}")?;
        }
        writeln!(f, "\nedges:")?;
        let src = |s: &Source| match s {
            Source::External(n) => format!("Input.{n}"),
            Source::Table { table, output } => format!(
                "{}.{}",
                self.tables[*table].name, self.tables[*table].outputs[*output].0
            ),
        };
        for (t, ports) in self.wiring.iter().enumerate() {
            for (p, s) in ports.iter().enumerate() {
                writeln!(
                    f,
                    "  {} -> {}.{};",
                    src(s),
                    self.tables[t].name,
                    self.tables[t].inputs[p].0
                )?;
            }
        }
        for o in &self.outputs {
            writeln!(f, "  {} -> Output.{};", src(&o.source), o.name)?;
        }
        Ok(())
    }
}
