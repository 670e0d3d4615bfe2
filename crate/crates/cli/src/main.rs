//! `tabver`: developer, verifier and auditor workflows.

mod cmd;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "tabver", version, about = "Verify encrypted tabular specifications")]
struct Cli {
    /// Relative file paths are resolved against this directory.
    #[arg(long, global = true, env = "TABVER_DATA_DIR")]
    data_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Backend {
    Transparent,
    IntegerShe,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Honest,
    General,
}

#[derive(Args, Debug, Clone)]
struct EncryptArgs {
    /// Table graph source.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum, default_value = "transparent")]
    backend: Backend,
    /// Value width m in bits (tag half plus payload half).
    #[arg(long, default_value_t = 16)]
    m_width: u32,
    /// Seeds keys, ciphertexts and the developer's session randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 16)]
    security: u32,
}

#[derive(Args, Debug, Clone)]
struct SessionArgs {
    /// Specification graph source.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, value_enum, default_value = "honest")]
    mode: ModeArg,
    /// Seeds the test suite, SE key and challenges.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    session: u64,
    /// Maximum number of structure paths in the suite.
    #[arg(long, default_value_t = 64)]
    budget: usize,
    /// Also ask the developer for path-activating inputs.
    #[arg(long)]
    path_requests: bool,
    /// JSON file of critical points.
    #[arg(long)]
    critical: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an HE key pair.
    Keygen {
        #[arg(long, value_enum, default_value = "transparent")]
        backend: Backend,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        security: u32,
        /// Directory for `hpk.bin` and `hsk.bin`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a graph and write its transformed form.
    Compile {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 16)]
        m_width: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encrypt a graph and write the public parameters.
    Encrypt {
        #[command(flatten)]
        enc: EncryptArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a developer endpoint over TCP.
    Serve {
        #[command(flatten)]
        enc: EncryptArgs,
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: String,
        /// Serve connections in parallel, each with its own session state.
        #[arg(long)]
        concurrent: bool,
        /// Exit after this many connections.
        #[arg(long)]
        connections: Option<usize>,
    },
    /// Run a verification session and write the certificate.
    Verify {
        #[command(flatten)]
        session: SessionArgs,
        /// Developer endpoint; needs `--params`.
        #[arg(long, requires = "params", conflicts_with = "graph")]
        connect: Option<String>,
        /// Public parameters written by `encrypt`.
        #[arg(long)]
        params: Option<PathBuf>,
        /// In-process developer: graph source.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "transparent")]
        backend: Backend,
        #[arg(long, default_value_t = 16)]
        m_width: u32,
        /// In-process developer: encryption seed.
        #[arg(long, default_value_t = 0)]
        dev_seed: u64,
        #[arg(long)]
        cert: PathBuf,
        /// Coverage report (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a certificate.
    Audit {
        #[arg(long)]
        cert: PathBuf,
    },
    /// Run the bundled eight-row-table example end to end.
    Demo {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value = "transparent")]
        backend: Backend,
        /// Directory for the certificate and report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the developer with the simulator's oracles on scripted queries.
    SimEquiv {
        /// Defaults to the bundled example graph.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: u64,
    },
}

/// Failure classes, mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or unusable inputs.
    Usage(anyhow::Error),
    /// The protocol could not complete.
    Abort(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Abort(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Abort(_) => "abort",
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Abort(e) => e,
        }
    }
}

fn report(kind: &str, message: String) {
    eprintln!("{}", serde_json::json!({ "error": kind, "message": message }));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report("usage", e.to_string().trim_end().to_string());
            return ExitCode::from(2);
        }
    };
    match cmd::run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            report(f.kind(), format!("{:#}", f.error()));
            ExitCode::from(f.code())
        }
    }
}
