mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use commands::{Failure, Outcome, Run};

#[derive(Parser)]
#[command(
    name = "krcert",
    version,
    about = "Transport-based dependency estimates and PAC-Bayes certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML or JSON config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; all cores when omitted. Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Two-site toy: L12 landscape, bad-set trade-off, certificate improvement.
    Toy {
        #[command(flatten)]
        common: Common,
        /// Landscape grid size.
        #[arg(long)]
        grid: Option<usize>,
        /// Monte Carlo draws per landscape cell.
        #[arg(long)]
        mc: Option<usize>,
    },
    /// Certificate for a Gaussian posterior on the toy regression task.
    Certify {
        #[command(flatten)]
        common: Common,
    },
    /// Empirical MGF against the concentration bound.
    MgfCheck {
        #[command(flatten)]
        common: Common,
    },
    /// Lipschitz profiles and dependency matrices of a map.
    Deps {
        #[command(flatten)]
        common: Common,
    },
    /// Bad-set mass estimates and candidate selection.
    Badset {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: Vec<String>,
    config_hash: Option<String>,
    seed: u64,
    outputs: &'a [String],
    versions: Versions,
}

#[derive(Serialize)]
struct Versions {
    krcert: &'static str,
    cli: &'static str,
}

/// Command line without the flags that cannot change results.
fn recorded_command() -> Vec<String> {
    let mut out = Vec::new();
    let mut args = std::env::args().skip(1);
    while let Some(a) = args.next() {
        if a == "--out" || a == "--threads" {
            args.next();
        } else if !(a.starts_with("--out=") || a.starts_with("--threads=")) {
            out.push(a);
        }
    }
    out
}

fn write_manifest(out: &Path, run: &Run) -> Outcome<()> {
    let mut outputs = run.outputs.clone();
    outputs.push("run_manifest.json".into());
    let manifest = Manifest {
        command: recorded_command(),
        config_hash: (!run.config_bytes.is_empty()).then(|| {
            Sha256::digest(&run.config_bytes)
                .iter()
                .map(|b| format!("{b:02x}"))
                .collect()
        }),
        seed: run.seed,
        outputs: &outputs,
        versions: Versions {
            krcert: krcert::VERSION,
            cli: env!("CARGO_PKG_VERSION"),
        },
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Numeric(e.into()))? + "\n";
    std::fs::write(out.join("run_manifest.json"), text).map_err(|e| Failure::Numeric(e.into()))
}

fn execute(command: Command) -> Outcome<Run> {
    let common = match &command {
        Command::Toy { common, .. }
        | Command::Certify { common }
        | Command::MgfCheck { common }
        | Command::Deps { common }
        | Command::Badset { common } => common.clone(),
    };
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(e.into()))?;
    }
    std::fs::create_dir_all(&common.out)
        .map_err(|e| Failure::Config(anyhow::anyhow!("cannot create {}: {e}", common.out.display())))?;
    let (cfg, seed, out) = (common.config.as_deref(), common.seed, common.out.as_path());
    let run = match command {
        Command::Toy { grid, mc, .. } => commands::toy(cfg, seed, out, grid, mc)?,
        Command::Certify { .. } => commands::certify(cfg, seed, out)?,
        Command::MgfCheck { .. } => commands::mgf_check(cfg, seed, out)?,
        Command::Deps { .. } => commands::deps(cfg, seed, out)?,
        Command::Badset { .. } => commands::badset(cfg, seed, out)?,
    };
    write_manifest(out, &run)?;
    Ok(run)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(run) => {
            println!("{}", run.summary);
            match run.failed_check {
                Some(msg) => {
                    eprintln!("check failed: {msg}");
                    ExitCode::from(1)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
