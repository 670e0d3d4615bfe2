//! Subcommand bodies. `Ok(false)` means reject or audit failure.

use anyhow::{anyhow, Context};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::json;
use std::fs;
use std::io::Write;
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::thread;

use tabver::audit::{audit, Certificate};
use tabver::he::{keygen, BackendConfig, BackendKind};
use tabver::protocol::wire::{serve, Client, Direct, Link, StreamTransport};
use tabver::protocol::{
    verify_session, vs_encrypt, Developer, EncryptOptions, Mode, ProtocolError, PublicParams, Verifier,
    VerifierOptions,
};
use tabver::simharness::{AdversaryScript, OracleDeveloper};
use tabver::table::{check_properties, parse_graph, transform, TableGraph};
use tabver::vga::{Coverage, CoverageReport, CriticalPoint};

use crate::{Backend, Cli, Command, EncryptArgs, Failure, ModeArg, SessionArgs};

type Result<T> = std::result::Result<T, Failure>;

const PROPERTY_SAMPLES: u64 = 1 << 14;

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn abort(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Abort(e.into())
}

/// Graph and specification problems are the caller's; the rest aborts.
fn classify(e: ProtocolError) -> Failure {
    match e {
        ProtocolError::Table(_) | ProtocolError::Spec(_) => usage(e),
        e => abort(e),
    }
}

struct Ctx {
    data_dir: Option<PathBuf>,
}

impl Ctx {
    fn path(&self, p: &Path) -> PathBuf {
        match &self.data_dir {
            Some(d) if p.is_relative() => d.join(p),
            _ => p.to_path_buf(),
        }
    }

    fn read(&self, p: &Path) -> Result<String> {
        let p = self.path(p);
        fs::read_to_string(&p)
            .with_context(|| format!("reading {}", p.display()))
            .map_err(usage)
    }

    fn write(&self, p: &Path, data: &[u8]) -> Result<PathBuf> {
        let p = self.path(p);
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)
                .with_context(|| format!("creating {}", dir.display()))
                .map_err(abort)?;
        }
        fs::write(&p, data)
            .with_context(|| format!("writing {}", p.display()))
            .map_err(abort)?;
        Ok(p)
    }

    fn graph(&self, p: &Path) -> Result<TableGraph> {
        parse_graph(&self.read(p)?)
            .with_context(|| format!("parsing {}", p.display()))
            .map_err(usage)
    }
}

fn backend(b: Backend) -> BackendConfig {
    BackendConfig::default_for(match b {
        Backend::Transparent => BackendKind::Transparent,
        Backend::IntegerShe => BackendKind::IntegerShe,
    })
}

fn encrypt_options(b: Backend, m_width: u32) -> EncryptOptions {
    EncryptOptions {
        width: m_width,
        backend: backend(b),
        ..Default::default()
    }
}

fn developer(g: &TableGraph, a: &EncryptArgs) -> Result<Developer> {
    vs_encrypt(
        a.security,
        g,
        &encrypt_options(a.backend, a.m_width),
        &mut ChaCha20Rng::seed_from_u64(a.seed),
    )
    .map_err(classify)
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

/// Plain-text coverage table.
fn render_coverage(c: &CoverageReport) -> String {
    let mut s = String::from("table  coverage\n");
    for (t, v) in &c.tables {
        let v = match v {
            Coverage::Covered => "covered",
            Coverage::AntiCovered => "anti-covered",
            Coverage::Unreached => "unreached",
        };
        s.push_str(&format!("{t:<6} {v}\n"));
    }
    s
}

pub fn run(cli: Cli) -> Result<bool> {
    let ctx = Ctx { data_dir: cli.data_dir };
    match cli.command {
        Command::Keygen {
            backend: b,
            seed,
            security,
            out,
        } => {
            let kp = keygen(&backend(b), security, &mut ChaCha20Rng::seed_from_u64(seed)).map_err(abort)?;
            let hpk = ctx.write(&out.join("hpk.bin"), &kp.pk.to_bytes())?;
            let hsk = ctx.write(&out.join("hsk.bin"), &kp.sk.to_bytes())?;
            print_json(&json!({
                "backend": format!("{:?}", kp.pk.kind()),
                "hpk": hpk,
                "hsk": hsk,
                "fingerprint": hex::encode(kp.pk.fingerprint()),
            }));
            Ok(true)
        }
        Command::Compile { graph, m_width, out } => {
            let g = ctx.graph(&graph)?;
            let bits = m_width / 2;
            let reports: Vec<_> = g
                .tables
                .iter()
                .enumerate()
                .map(|(i, t)| check_properties(t, &g.port_domain(i, bits), bits, PROPERTY_SAMPLES, 0))
                .collect();
            let ok = reports.iter().all(|r| r.is_complete() && r.is_disjoint());
            let tg = transform(&g, m_width).map_err(usage)?;
            if let Some(out) = out {
                ctx.write(&out, tg.to_file_string().as_bytes())?;
            }
            print_json(&json!({
                "tables": g.tables.len(),
                "transformed_tables": tg.len(),
                "properties": reports,
                "ok": ok,
            }));
            Ok(ok)
        }
        Command::Encrypt { enc, out } => {
            let g = ctx.graph(&enc.graph)?;
            let dev = developer(&g, &enc)?;
            let params = dev.params();
            let path = ctx.write(&out, serde_json::to_string(&*params).map_err(abort)?.as_bytes())?;
            print_json(&json!({
                "params": path,
                "tables": params.programs.len(),
                "program_bits": params.universal.program_len,
                "hash": hex::encode(params.hash()),
            }));
            Ok(true)
        }
        Command::Serve {
            enc,
            listen,
            concurrent,
            connections,
        } => {
            let g = ctx.graph(&enc.graph)?;
            let mut dev = developer(&g, &enc)?;
            let listener = TcpListener::bind(&listen)
                .with_context(|| format!("binding {listen}"))
                .map_err(usage)?;
            println!("listening on {}", listener.local_addr().map_err(abort)?);
            std::io::stdout().flush().map_err(abort)?;
            let mut workers = Vec::new();
            for stream in listener.incoming().take(connections.unwrap_or(usize::MAX)) {
                let stream = stream.map_err(abort)?;
                if concurrent {
                    let mut d = dev.clone();
                    workers.push(thread::spawn(move || handle(&mut d, stream)));
                } else {
                    handle(&mut dev, stream);
                }
            }
            for w in workers {
                let _ = w.join();
            }
            Ok(true)
        }
        Command::Verify {
            session,
            connect,
            params,
            graph,
            backend: b,
            m_width,
            dev_seed,
            cert,
            out,
        } => {
            let (params, mut dev) = match (&connect, &graph) {
                (Some(_), _) => {
                    let p = params.as_ref().expect("clap requires --params");
                    let text = ctx.read(p)?;
                    let params: PublicParams = serde_json::from_str(&text)
                        .with_context(|| format!("parsing {}", p.display()))
                        .map_err(usage)?;
                    (Arc::new(params), None)
                }
                (None, Some(gp)) => {
                    let g = ctx.graph(gp)?;
                    let a = EncryptArgs {
                        graph: gp.clone(),
                        backend: b,
                        m_width,
                        seed: dev_seed,
                        security: tabver::demo::SECURITY,
                    };
                    let d = developer(&g, &a)?;
                    (d.params(), Some(d))
                }
                (None, None) => return Err(usage(anyhow!("verify needs --connect with --params, or --graph"))),
            };
            let v = Verifier::new(params, &ctx.read(&session.spec)?, verifier_options(&ctx, &session)?).map_err(classify)?;
            let mut link: Box<dyn Link + '_> = match (&connect, dev.as_mut()) {
                (Some(addr), _) => {
                    let s = TcpStream::connect(addr)
                        .with_context(|| format!("connecting to {addr}"))
                        .map_err(abort)?;
                    Box::new(Client(StreamTransport(s)))
                }
                (None, Some(d)) => Box::new(Direct(d)),
                (None, None) => unreachable!(),
            };
            let c = verify_session(&v, link.as_mut()).map_err(abort)?;
            let cert_path = ctx.path(&cert);
            if let Some(dir) = cert_path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(abort)?;
            }
            c.save(&cert_path).map_err(abort)?;
            if let Some(out) = out {
                ctx.write(&out, serde_json::to_string_pretty(&c.coverage).map_err(abort)?.as_bytes())?;
            }
            print!("{}", render_coverage(&c.coverage));
            print_json(&json!({
                "accept": c.verdict.accept,
                "evaluation_failures": c.verdict.evaluation_failures,
                "checker_failures": c.verdict.checker_failures,
                "inputs": c.results.len(),
                "certificate": cert_path,
            }));
            Ok(c.accepted())
        }
        Command::Audit { cert } => {
            let text = ctx.read(&cert)?;
            let report = match Certificate::from_json(&text) {
                Ok(c) => audit(&c),
                Err(e) => tabver::audit::AuditReport {
                    pass: false,
                    reason: Some(e.to_string()),
                },
            };
            print_json(&json!({ "result": report.result(), "reason": report.reason }));
            Ok(report.pass)
        }
        Command::Demo { seed, backend: b, out } => {
            let (report, c) = tabver::demo::run(seed, &encrypt_options(b, 16)).map_err(abort)?;
            if let Some(dir) = out {
                ctx.write(&dir.join("certificate.json"), c.to_json().as_bytes())?;
                ctx.write(
                    &dir.join("report.json"),
                    serde_json::to_string_pretty(&report).map_err(abort)?.as_bytes(),
                )?;
            }
            print!("{}", render_coverage(&c.coverage));
            println!(
                "worked-example claim: Y=({}) covering {}",
                report.claim.y.join(", "),
                report.claim.covered.join(", ")
            );
            println!(
                "evaluator:            {} covering {}",
                serde_json::to_string(&report.ground_truth).map_err(abort)?,
                report.ground_truth_covered.join(", ")
            );
            println!(
                "encrypted session:    {}",
                serde_json::to_string(&report.encrypted).map_err(abort)?
            );
            print_json(&json!({
                "accept": report.accepted,
                "coverage_matches_fired_tables": report.coverage_matches,
                "claim_matches": report.claim_matches,
                "audit": report.audit,
            }));
            Ok(report.accepted && report.coverage_matches && report.audit == 1)
        }
        Command::SimEquiv { graph, seed, count } => {
            let g = match graph {
                Some(p) => ctx.graph(&p)?,
                None => parse_graph(tabver::demo::GRAPH).map_err(abort)?,
            };
            let mut dev = vs_encrypt(
                tabver::demo::SECURITY,
                &g,
                &EncryptOptions::default(),
                &mut ChaCha20Rng::seed_from_u64(seed),
            )
            .map_err(classify)?;
            let params = dev.params();
            let (mut exchanges, mut differing) = (0, Vec::new());
            for i in 0..count {
                let script = AdversaryScript::new(seed.wrapping_add(i));
                let real = script.run(&params, &mut Direct(&mut dev)).map_err(abort)?;
                let mut o = OracleDeveloper::new(Arc::clone(&params), &g, dev.seed(), Some(script.se_key(&params)))
                    .map_err(abort)?;
                let ideal = script.run(&params, &mut Direct(&mut o)).map_err(abort)?;
                exchanges += real.exchanges.len();
                if real != ideal {
                    differing.push(script.seed);
                }
            }
            print_json(&json!({
                "sequences": count,
                "exchanges": exchanges,
                "differing": differing,
            }));
            Ok(differing.is_empty())
        }
    }
}

fn verifier_options(ctx: &Ctx, s: &SessionArgs) -> Result<VerifierOptions> {
    let critical_points: Vec<CriticalPoint> = match &s.critical {
        Some(p) => serde_json::from_str(&ctx.read(p)?)
            .with_context(|| format!("parsing {}", p.display()))
            .map_err(usage)?,
        None => Vec::new(),
    };
    Ok(VerifierOptions {
        mode: match s.mode {
            ModeArg::Honest => Mode::Honest,
            ModeArg::General => Mode::General,
        },
        seed: s.seed,
        budget: s.budget,
        session: s.session,
        path_requests: s.path_requests,
        extra_inputs: Vec::new(),
        critical_points,
    })
}

fn handle(dev: &mut Developer, stream: TcpStream) {
    let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_default();
    if let Err(e) = serve(dev, &mut StreamTransport(stream)) {
        eprintln!("{}", json!({ "error": "connection", "peer": peer, "message": e.to_string() }));
    }
}
