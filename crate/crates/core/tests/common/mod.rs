#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use tabver::protocol::{vs_encrypt, Developer, EncryptOptions, Inputs};
use tabver::table::{parse_graph, TableGraph, Value};

pub const DEMO: &str = tabver::demo::GRAPH;
pub const DEMO_SPEC: &str = tabver::demo::SPEC;

pub fn demo_graph() -> TableGraph {
    parse_graph(DEMO).unwrap()
}

pub fn developer(src: &str, seed: u64) -> Developer {
    let g = parse_graph(src).unwrap();
    vs_encrypt(16, &g, &EncryptOptions::default(), &mut ChaCha20Rng::seed_from_u64(seed)).unwrap()
}

pub fn demo_inputs() -> Vec<Inputs> {
    tabver::demo::demo_inputs()
}

pub fn inputs(pairs: &[(&str, Value)]) -> Inputs {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Random circuit over all 16 gate types; every gate reads earlier wires.
pub fn random_circuit<R: rand::Rng>(rng: &mut R, inputs: usize, gates: usize, outputs: usize) -> tabver::circuit::Circuit {
    use tabver::circuit::{Circuit, Gate};
    let gs = (0..gates)
        .map(|k| Gate {
            a: rng.gen_range(0..inputs + k) as u32,
            b: rng.gen_range(0..inputs + k) as u32,
            tt: rng.gen_range(0..16),
        })
        .collect();
    let outs = (0..outputs).map(|_| rng.gen_range(0..inputs + gates) as u32).collect();
    Circuit::new(inputs, gs, outs).unwrap()
}

pub fn bits_of(v: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| (v >> i) & 1 == 1).collect()
}

/// JSON pointers of every leaf and every non-empty array under `v`.
fn targets(v: &serde_json::Value, at: String, out: &mut Vec<String>) {
    match v {
        serde_json::Value::Object(m) => {
            for (k, x) in m {
                targets(x, format!("{at}/{k}"), out);
            }
        }
        serde_json::Value::Array(a) => {
            if !a.is_empty() {
                out.push(format!("{at}#"));
            }
            for (i, x) in a.iter().enumerate() {
                targets(x, format!("{at}/{i}"), out);
            }
        }
        _ => out.push(at),
    }
}

fn mutate_leaf<R: rand::Rng>(v: &mut serde_json::Value, rng: &mut R) {
    use serde_json::Value as J;
    *v = match v.take() {
        J::Bool(b) => J::Bool(!b),
        J::Null => J::Bool(true),
        J::Number(n) => match n.as_u64() {
            Some(0) => J::from(1u64),
            Some(x) => J::from(if rng.gen() { x + 1 } else { x - 1 }),
            None => J::from(n.as_f64().unwrap_or(0.0) + 0.5),
        },
        J::String(s) if s.is_empty() => J::String("1".into()),
        J::String(s) => {
            let mut c: Vec<char> = s.chars().collect();
            let i = rng.gen_range(0..c.len());
            c[i] = match c[i] {
                '0' => '1',
                '1' => '0',
                'A' => 'B',
                x if x.is_ascii_lowercase() => if x == 'z' { 'a' } else { (x as u8 + 1) as char },
                x if x.is_ascii_uppercase() => if x == 'Z' { 'A' } else { (x as u8 + 1) as char },
                x if x.is_ascii_digit() => if x == '9' { '8' } else { (x as u8 + 1) as char },
                _ => 'Q',
            };
            J::String(c.into_iter().collect())
        }
        other => other,
    };
}

/// One random semantic mutation of a certificate, resealed so that only
/// the audit's replay can catch it. Returns the mutated location and the
/// certificate, or `None` for the certificate when the edit no longer
/// deserializes.
pub fn mutate_certificate<R: rand::Rng>(
    cert: &tabver::audit::Certificate,
    rng: &mut R,
) -> (String, Option<tabver::audit::Certificate>) {
    let mut v = serde_json::to_value(cert).unwrap();
    let fields: Vec<Vec<String>> = v
        .as_object()
        .unwrap()
        .iter()
        .filter(|(k, _)| *k != "seal")
        .map(|(k, x)| {
            let mut all = Vec::new();
            targets(x, format!("/{k}"), &mut all);
            all.retain(|p| !p.ends_with("/hash"));
            all
        })
        .filter(|all| !all.is_empty())
        .collect();
    let all = &fields[rng.gen_range(0..fields.len())];
    let at = all[rng.gen_range(0..all.len())].clone();
    if let Some(arr) = at.strip_suffix('#') {
        let a = v.pointer_mut(arr).unwrap().as_array_mut().unwrap();
        let i = rng.gen_range(0..a.len());
        if rng.gen() {
            a.remove(i);
        } else {
            let x = a[i].clone();
            a.insert(i, x);
        }
    } else {
        mutate_leaf(v.pointer_mut(&at).unwrap(), rng);
    }
    let parsed = serde_json::from_value::<tabver::audit::Certificate>(v).ok().map(|mut c| {
        c.reseal();
        c
    });
    (at, parsed)
}

pub const CHAIN: &str = include_str!("../../data/chain.tbl");
pub const DIAMOND: &str = include_str!("../../data/diamond.tbl");

/// A committer that precomputes PRG streams for `2^log_seeds` seeds and,
/// after seeing `r`, looks for two seeds whose commitments coincide on
/// different data. True when it finds a double opening.
pub fn binding_attack(code: &tabver::commitment::CodeSpec, log_seeds: u32, r: &[bool]) -> bool {
    let mut by_exposed: std::collections::HashMap<Vec<bool>, Vec<Vec<bool>>> = Default::default();
    for s in 0..1u64 << log_seeds {
        let g = tabver::symcrypto::prg(&bits_of(s, code.security as usize), r.len());
        let (mut mask, mut exposed) = (Vec::new(), Vec::new());
        for (&ri, gi) in r.iter().zip(g) {
            if ri {
                mask.push(gi)
            } else {
                exposed.push(gi)
            }
        }
        by_exposed.entry(exposed).or_default().push(mask);
    }
    by_exposed.values().any(|masks| {
        masks.iter().enumerate().any(|(i, m1)| {
            masks[i + 1..].iter().any(|m2| {
                let diff: Vec<bool> = m1.iter().zip(m2).map(|(a, b)| a ^ b).collect();
                // E(d1) ^ E(d2) = E(d1 ^ d2) must equal the mask difference
                code.decode_exact(&diff).is_some_and(|d| d.iter().any(|&b| b))
            })
        })
    })
}

/// Drives one input through the developer in consistent order and checks
/// that every encoded input and every table output decrypts to the
/// plaintext trace. Returns the number of decryptions checked.
pub fn shadow_check(dev: &mut Developer, x: &Inputs, session: u64) -> Result<usize, String> {
    use tabver::protocol::{EncodeAnswer, EncodeQuery, QueryKind};
    use tabver::table::{consistent_order, evaluate_plain, NodeSource};
    let params = dev.params();
    let tg = dev.transformed().clone();
    let s = &params.structure;
    let m = params.width() as u32;
    let enc = s.encode_inputs(x).map_err(|e| e.to_string())?;
    let trace = evaluate_plain(&tg, &enc);
    let sk = dev.secret_key().clone();
    dev.start_session(session);
    let mut fired = vec![None; s.len()];
    let mut checks = 0;
    for i in consistent_order(s) {
        let entry = trace.trace.iter().find(|e| e.node == i).ok_or("node missing from trace")?;
        let mut u = Vec::new();
        let mut null = false;
        for (port, src) in s.nodes[i].ports.iter().enumerate() {
            match src {
                NodeSource::External(n) => {
                    let word = enc[n].to_bits(m);
                    let q = EncodeQuery { table: i, kind: QueryKind::Q1 { port, word: word.clone() } };
                    let EncodeAnswer::Word(w) = dev.vs_encode(&q) else {
                        return Err(format!("PT{} port {port}: no encoding", i + 1));
                    };
                    if sk.dec_word(&w).map_err(|e| e.to_string())? != word {
                        return Err(format!("PT{} port {port}: encoding decrypts wrongly", i + 1));
                    }
                    checks += 1;
                    u.extend(w);
                }
                NodeSource::Tables(c) => match c.iter().find_map(|&j| fired[j].clone()) {
                    Some(v) => u.extend(v),
                    None => null = true,
                },
            }
        }
        if null {
            if entry.output.is_some() {
                return Err(format!("PT{}: trace evaluates a table the session cannot reach", i + 1));
            }
            continue;
        }
        let want = entry.output.ok_or(format!("PT{}: trace has no output", i + 1))?;
        let v = params.eval_table(i, &u).map_err(|e| e.to_string())?;
        if sk.dec_word(&v).map_err(|e| e.to_string())? != want.to_bits(m) {
            return Err(format!("PT{}: output decrypts wrongly", i + 1));
        }
        checks += 1;
        let a = dev.vs_encode(&EncodeQuery { table: i, kind: QueryKind::Q2 { u, v: v.clone() } });
        if matches!(a, EncodeAnswer::Top | EncodeAnswer::Payload(_)) != want.is_top() {
            return Err(format!("PT{}: answer {a:?} disagrees with the trace", i + 1));
        }
        if want.is_top() {
            fired[i] = Some(v);
        }
    }
    Ok(checks)
}
