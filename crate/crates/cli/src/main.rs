mod commands;
mod config;
mod error;
mod output;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Flags, RunConfig};
use error::CliError;
use output::{read_manifest, OutputDir};

#[derive(Parser)]
#[command(
    name = "clusterwalk",
    version,
    about = "Random walks attracted by percolation clusters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an environment: snapshot and cluster-size tail
    SampleEnv(Flags),
    /// Simulate one walk: trajectory CSV and summary JSON
    Simulate(Flags),
    /// Exact spectral gap and canonical-path bound on the box
    Gap(Flags),
    /// Diffusion exponent for one β with a log-log plot
    Exponent(Flags),
    /// Diffusion exponent across a β grid
    Sweep(Flags),
    /// Time for the confined walk to reach distance n/4
    Escape(Flags),
    /// Sojourns inside open clusters
    Sojourn(Flags),
    /// Cluster-entry construction and big-cluster frequency
    EntryProbe(Flags),
    /// Tail of the origin cluster size
    Tail(Flags),
    /// Re-run a manifest and compare checksums of deterministic outputs
    Reproduce {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory for the re-run (default: `<original>-reproduce`)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

type Runner = fn(&RunConfig, &mut OutputDir) -> Result<String, CliError>;

fn runner(command: &str) -> Option<Runner> {
    Some(match command {
        "sample-env" => commands::sample_env,
        "simulate" => commands::simulate,
        "gap" => commands::gap,
        "exponent" => commands::exponent,
        "sweep" => commands::sweep,
        "escape" => commands::escape,
        "sojourn" => commands::sojourn,
        "entry-probe" => commands::entry,
        "tail" => commands::tail,
        _ => return None,
    })
}

fn execute(config: &RunConfig) -> Result<output::RunManifest, CliError> {
    let run = runner(&config.command)
        .ok_or_else(|| CliError::Config(format!("unknown command {:?}", config.command)))?;
    let mut out = OutputDir::create(&config.out)?;
    // records `out`, which differs between a run and its reproduction
    out.write("config.toml", config.to_toml().as_bytes(), false)?;
    let line = run(config, &mut out)?;
    let manifest = out.finish(config)?;
    println!("{line}");
    Ok(manifest)
}

fn reproduce(path: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let original = read_manifest(path)?;
    let mut config = original.config.clone();
    config.out = out.unwrap_or_else(|| {
        let mut p = config.out.clone().into_os_string();
        p.push("-reproduce");
        p.into()
    });
    config.validate()?;
    let again = execute(&config)?;
    let mut mismatches = Vec::new();
    for entry in original.outputs.iter().filter(|e| e.deterministic) {
        match again.outputs.iter().find(|e| e.file == entry.file) {
            Some(e) if e.sha256 == entry.sha256 => {}
            Some(_) => mismatches.push(format!("{} differs", entry.file)),
            None => mismatches.push(format!("{} missing", entry.file)),
        }
    }
    if mismatches.is_empty() {
        println!(
            "reproduced {} deterministic outputs",
            original.outputs.iter().filter(|e| e.deterministic).count()
        );
        Ok(())
    } else {
        Err(CliError::Mismatch(mismatches.join(", ")))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (name, flags) = match cli.command {
        Command::SampleEnv(f) => ("sample-env", f),
        Command::Simulate(f) => ("simulate", f),
        Command::Gap(f) => ("gap", f),
        Command::Exponent(f) => ("exponent", f),
        Command::Sweep(f) => ("sweep", f),
        Command::Escape(f) => ("escape", f),
        Command::Sojourn(f) => ("sojourn", f),
        Command::EntryProbe(f) => ("entry-probe", f),
        Command::Tail(f) => ("tail", f),
        Command::Reproduce { manifest, out } => {
            return match reproduce(&manifest, out) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            };
        }
    };
    let result = RunConfig::resolve(name, &flags).and_then(|c| execute(&c));
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
