use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;

use super::expr::{Expr, Ty, Value};
use super::parse::literals_fit;
use super::tagged::TaggedValue;
use super::{ExternalInput, Source, TableError, TableGraph};

pub const DEFAULT_WIDTH: u32 = 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowOrigin {
    pub table: String,
    /// 0-based row index in the original table.
    pub row: usize,
    pub output: String,
}

/// A single-row table `(True, F)` where `F` yields `(⊤, f(x))` when the
/// original predicate holds and every input is ⊤, else `(⊥, ⊥)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowTable {
    pub label: String,
    pub origin: RowOrigin,
    pub ports: Vec<(String, Ty)>,
    pub predicate: Expr,
    pub function: Expr,
    pub output_ty: Ty,
}

impl RowTable {
    pub fn port_types(&self) -> Vec<Ty> {
        self.ports.iter().map(|(_, t)| *t).collect()
    }

    pub fn apply(&self, w: &[TaggedValue], m: u32) -> TaggedValue {
        let h = m / 2;
        let x: Option<Vec<Value>> = w
            .iter()
            .zip(&self.ports)
            .map(|(v, (_, ty))| v.value(*ty, m))
            .collect();
        match x {
            Some(x) if self.predicate.eval(&x, h).as_bool() => TaggedValue {
                tag: super::Tag::Top,
                payload: self.function.eval(&x, h).to_payload(h),
            },
            _ => TaggedValue::BOTTOM,
        }
    }
}

/// Producer of a transformed table's input port.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeSource {
    External(String),
    /// Sibling row-tables of one original output; at most one fires.
    Tables(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructNode {
    pub ports: Vec<NodeSource>,
    pub level: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructOutput {
    pub name: String,
    pub ty: Ty,
    pub producers: Vec<usize>,
}

/// The node-anonymized shape of a transformed graph: the only design
/// information made public.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureGraph {
    pub width: u32,
    pub inputs: Vec<ExternalInput>,
    pub outputs: Vec<StructOutput>,
    pub nodes: Vec<StructNode>,
}

impl StructureGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.nodes.get(to).is_some_and(|n| {
            n.ports
                .iter()
                .any(|p| matches!(p, NodeSource::Tables(c) if c.contains(&from)))
        })
    }

    pub fn successors(&self, from: usize) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&to| self.has_edge(from, to))
            .collect()
    }

    /// Nodes fed only by external inputs.
    pub fn is_source(&self, i: usize) -> bool {
        self.nodes[i]
            .ports
            .iter()
            .all(|p| matches!(p, NodeSource::External(_)))
    }

    pub fn is_external_output(&self, i: usize) -> bool {
        self.outputs.iter().any(|o| o.producers.contains(&i))
    }

    /// External outputs fed by node `i`.
    pub fn sinks_of(&self, i: usize) -> Vec<&StructOutput> {
        self.outputs
            .iter()
            .filter(|o| o.producers.contains(&i))
            .collect()
    }

    pub fn input_ty(&self, name: &str) -> Option<Ty> {
        self.inputs.iter().find(|i| i.name == name).map(|i| i.ty)
    }

    pub fn output_ty(&self, name: &str) -> Option<Ty> {
        self.outputs.iter().find(|o| o.name == name).map(|o| o.ty)
    }

    /// Checks index bounds and that every edge strictly increases the level.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.nodes.len();
        for (i, node) in self.nodes.iter().enumerate() {
            let mut want = 1;
            for p in &node.ports {
                match p {
                    NodeSource::External(name) => {
                        if self.input_ty(name).is_none() {
                            return Err(format!("node {i} reads unknown input `{name}`"));
                        }
                    }
                    NodeSource::Tables(c) => {
                        if c.is_empty() {
                            return Err(format!("node {i} has an empty producer list"));
                        }
                        for &j in c {
                            if j >= n {
                                return Err(format!("node {i} reads missing node {j}"));
                            }
                            want = want.max(self.nodes[j].level + 1);
                        }
                    }
                }
            }
            if node.level != want {
                return Err(format!("node {i} has level {}, expected {want}", node.level));
            }
        }
        for o in &self.outputs {
            if o.producers.is_empty() || o.producers.iter().any(|&j| j >= n) {
                return Err(format!("output `{}` has invalid producers", o.name));
            }
        }
        Ok(())
    }

    /// Encodes plaintext external inputs as (⊤, x).
    pub fn encode_inputs(
        &self,
        x: &BTreeMap<String, Value>,
    ) -> Result<BTreeMap<String, TaggedValue>, super::TaggedError> {
        x.iter()
            .map(|(k, v)| Ok((k.clone(), TaggedValue::top(*v, self.width)?)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformedGraph {
    pub tables: Vec<RowTable>,
    pub structure: StructureGraph,
}

impl TransformedGraph {
    pub fn width(&self) -> u32 {
        self.structure.width
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// Public label used in reports, `PT1`, `PT2`, ... in node order.
    pub fn node_name(i: usize) -> String {
        format!("PT{}", i + 1)
    }

    pub fn to_file_string(&self) -> String {
        let doc = serde_json::json!({
            "format": "tabver-transformed",
            "version": 1,
            "graph": self,
        });
        serde_json::to_string_pretty(&doc).expect("serializable")
    }

    pub fn from_file_string(s: &str) -> Result<TransformedGraph, String> {
        let doc: serde_json::Value = serde_json::from_str(s).map_err(|e| e.to_string())?;
        if doc["format"] != "tabver-transformed" {
            return Err("not a transformed-graph file".into());
        }
        if doc["version"] != 1 {
            return Err(format!("unsupported version {}", doc["version"]));
        }
        let g: TransformedGraph =
            serde_json::from_value(doc["graph"].clone()).map_err(|e| e.to_string())?;
        g.structure.validate()?;
        Ok(g)
    }
}

/// Splits every row (and every output of a multi-output row) into its own
/// single-row table over m-bit tagged values.
pub fn transform(g: &TableGraph, m: u32) -> Result<TransformedGraph, TableError> {
    if !(4..=64).contains(&m) || !m.is_multiple_of(2) {
        return Err(TableError::InvalidWidth(m));
    }
    literals_fit(g, m / 2)?;
    let mut tables = Vec::new();
    // group[t][o] = node indices of the rows of table t for output o
    let mut group: Vec<Vec<Vec<usize>>> = Vec::with_capacity(g.tables.len());
    for t in &g.tables {
        let mut per_out = Vec::with_capacity(t.outputs.len());
        for (o, (oname, oty)) in t.outputs.iter().enumerate() {
            let mut ids = Vec::with_capacity(t.rows.len());
            for (r, row) in t.rows.iter().enumerate() {
                ids.push(tables.len());
                let label = if t.outputs.len() == 1 {
                    format!("{}#{}", t.name, r + 1)
                } else {
                    format!("{}.{}#{}", t.name, oname, r + 1)
                };
                tables.push(RowTable {
                    label,
                    origin: RowOrigin {
                        table: t.name.clone(),
                        row: r,
                        output: oname.clone(),
                    },
                    ports: t.inputs.clone(),
                    predicate: row.predicate.clone(),
                    function: row.outputs[o].clone(),
                    output_ty: *oty,
                });
            }
            per_out.push(ids);
        }
        group.push(per_out);
    }
    let resolve = |s: &Source| match s {
        Source::External(n) => NodeSource::External(n.clone()),
        Source::Table { table, output } => NodeSource::Tables(group[*table][*output].clone()),
    };
    let mut nodes: Vec<Option<StructNode>> = vec![None; tables.len()];
    for &t in &g.order {
        let ports: Vec<NodeSource> = g.wiring[t].iter().map(resolve).collect();
        let level = 1 + ports
            .iter()
            .map(|p| match p {
                NodeSource::External(_) => 0,
                NodeSource::Tables(c) => c
                    .iter()
                    .map(|&j| nodes[j].as_ref().expect("topological").level)
                    .max()
                    .unwrap_or(0),
            })
            .max()
            .unwrap_or(0);
        for ids in &group[t] {
            for &i in ids {
                nodes[i] = Some(StructNode {
                    ports: ports.clone(),
                    level,
                });
            }
        }
    }
    let outputs = g
        .outputs
        .iter()
        .map(|o| StructOutput {
            name: o.name.clone(),
            ty: o.ty,
            producers: match resolve(&o.source) {
                NodeSource::Tables(c) => c,
                NodeSource::External(_) => unreachable!("rejected by the parser"),
            },
        })
        .collect();
    Ok(TransformedGraph {
        tables,
        structure: StructureGraph {
            width: m,
            inputs: g.inputs.clone(),
            outputs,
            nodes: nodes.into_iter().map(|n| n.expect("all nodes leveled")).collect(),
        },
    })
}

/// Tables ordered by non-decreasing level, ties by index.
pub fn consistent_order(s: &StructureGraph) -> Vec<usize> {
    let mut order: Vec<usize> = (0..s.nodes.len()).collect();
    order.sort_by_key(|&i| (s.nodes[i].level, i));
    order
}

/// Value of an external output: the ⊤ payload of whichever producer fired.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OutputValue {
    /// No producer was evaluated.
    Null,
    /// Producers were evaluated but none fired.
    Bottom,
    Value(Value),
}

impl Serialize for OutputValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            OutputValue::Null => s.serialize_none(),
            OutputValue::Bottom => s.serialize_str("bottom"),
            OutputValue::Value(v) => v.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for OutputValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Bool(bool),
            Int(i64),
            Str(String),
        }
        Ok(match Option::<Repr>::deserialize(d)? {
            None => OutputValue::Null,
            Some(Repr::Bool(b)) => OutputValue::Value(Value::Bool(b)),
            Some(Repr::Int(v)) => OutputValue::Value(Value::Int(v)),
            Some(Repr::Str(s)) if s == "bottom" => OutputValue::Bottom,
            Some(Repr::Str(s)) => {
                return Err(serde::de::Error::custom(format!("unexpected output `{s}`")))
            }
        })
    }
}

impl std::fmt::Display for OutputValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OutputValue::Null => f.write_str("null"),
            OutputValue::Bottom => f.write_str("⊥"),
            OutputValue::Value(v) => write!(f, "{v}"),
        }
    }
}

/// Combines per-producer outcomes of one external output.
pub fn resolve_output(
    producers: &[usize],
    outcome: impl Fn(usize) -> OutputValue,
) -> OutputValue {
    let mut acc = OutputValue::Null;
    for &p in producers {
        match outcome(p) {
            v @ OutputValue::Value(_) => return v,
            OutputValue::Bottom => acc = OutputValue::Bottom,
            OutputValue::Null => {}
        }
    }
    acc
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub node: usize,
    /// `None` when some port was null or ⊥.
    pub inputs: Option<Vec<TaggedValue>>,
    pub output: Option<TaggedValue>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlainEvaluation {
    pub outputs: BTreeMap<String, OutputValue>,
    /// One entry per table, in consistent order.
    pub trace: Vec<TraceEntry>,
}

impl PlainEvaluation {
    pub fn output_of(&self, node: usize) -> Option<TaggedValue> {
        self.trace
            .iter()
            .find(|e| e.node == node)
            .and_then(|e| e.output)
    }

    /// Tables whose output was ⊤.
    pub fn fired(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .trace
            .iter()
            .filter(|e| e.output.is_some_and(|o| o.is_top()))
            .map(|e| e.node)
            .collect();
        v.sort_unstable();
        v
    }
}

/// Evaluates in consistent order. A table whose port resolves to no ⊤
/// producer (or to a missing external input) is null.
pub fn evaluate_plain(
    tg: &TransformedGraph,
    x: &BTreeMap<String, TaggedValue>,
) -> PlainEvaluation {
    let s = &tg.structure;
    let m = s.width;
    let mut out: Vec<Option<TaggedValue>> = vec![None; tg.tables.len()];
    let mut trace = Vec::with_capacity(tg.tables.len());
    for i in consistent_order(s) {
        let inputs: Option<Vec<TaggedValue>> = s.nodes[i]
            .ports
            .iter()
            .map(|p| match p {
                NodeSource::External(n) => x.get(n).copied().filter(|v| v.is_top()),
                NodeSource::Tables(c) => c.iter().find_map(|&j| out[j].filter(|v| v.is_top())),
            })
            .collect();
        let output = inputs.as_ref().map(|w| tg.tables[i].apply(w, m));
        out[i] = output;
        trace.push(TraceEntry {
            node: i,
            inputs,
            output,
        });
    }
    let outputs = s
        .outputs
        .iter()
        .map(|o| {
            let v = resolve_output(&o.producers, |p| match out[p] {
                None => OutputValue::Null,
                Some(t) => match t.value(o.ty, m) {
                    Some(v) => OutputValue::Value(v),
                    None => OutputValue::Bottom,
                },
            });
            (o.name.clone(), v)
        })
        .collect();
    PlainEvaluation { outputs, trace }
}
