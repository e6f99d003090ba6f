use std::error::Error as _;
use std::path::PathBuf;
use std::process::ExitCode;

use bbt_cli::{run, CliError, Command, RunManifest, RunRequest, SimConfig};
use clap::Parser;

/// Crossed-vortex bottle beam trap simulator.
#[derive(Debug, Parser)]
#[command(name = "bbt", version)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// TOML configuration, merged over its preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base preset: paper-matched, bright, ideal or smoke.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: the configured one).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cap on worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Intensity volume from an earlier `fieldmap` run.
    #[arg(long, global = true)]
    ivol: Option<PathBuf>,
    /// Rerun a recorded run and check its artifacts byte for byte.
    #[arg(long, global = true, conflicts_with_all = ["config", "preset", "seed"])]
    from_manifest: Option<PathBuf>,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(path) = &cli.from_manifest {
        let recorded = RunManifest::read(path)?;
        if cli.command.is_some_and(|c| c != recorded.subcommand) {
            return Err(CliError::Usage("subcommand differs from the manifest".into()));
        }
        let config = recorded.config()?;
        let out = cli.out.clone().unwrap_or_else(|| config.output_dir.clone());
        let ivol = cli.ivol.clone().or_else(|| recorded.input_volume.as_ref().map(|i| i.path.clone()));
        let rerun = run(&RunRequest {
            command: recorded.subcommand,
            config: &config,
            out_dir: &out,
            ivol: ivol.as_deref(),
            threads: cli.threads,
        })?;
        if let (Some(a), Some(b)) = (&recorded.input_volume, &rerun.input_volume) {
            if a.sha256 != b.sha256 {
                return Err(CliError::NotReproduced("input volume differs".into()));
            }
        }
        recorded.verify(&rerun.artifacts)?;
        println!("reproduced {} artifacts in {}", rerun.artifacts.len(), out.display());
        return Ok(());
    }

    let command = cli
        .command
        .ok_or_else(|| CliError::Usage("a subcommand is required (see --help)".into()))?;
    let mut config = match &cli.config {
        Some(path) => SimConfig::from_path(path, cli.preset.as_deref())?,
        None => SimConfig::from_preset(cli.preset.as_deref().unwrap_or("paper-matched"))?,
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out = cli.out.clone().unwrap_or_else(|| config.output_dir.clone());
    let manifest = run(&RunRequest {
        command,
        config: &config,
        out_dir: &out,
        ivol: cli.ivol.as_deref(),
        threads: cli.threads,
    })?;
    for a in &manifest.artifacts {
        println!("{}", out.join(&a.path).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = e.source();
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
