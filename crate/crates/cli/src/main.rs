use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand};
use starkmbl_cli::{preset, run_experiment, ExperimentConfig, ExperimentKind, PRESETS};

#[derive(Parser)]
#[command(name = "starkmbl", version, about = "Stark-localized spin-phonon chain experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file or a preset.
    Run(RunArgs),
    /// Run a parameter sweep.
    Sweep(RunArgs),
    /// Check the operator identities; defaults to the `verify` preset.
    Verify(RunArgs),
    /// Built-in presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// List preset names.
    List,
    /// Print a preset as a config file.
    Show { name: String },
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Name of a built-in preset.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory (overrides output_dir in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed of the typicality backend.
    #[arg(long)]
    seed: Option<u64>,
    /// Concurrent sweep points.
    #[arg(long)]
    workers: Option<usize>,
    /// Replace a previous run in the output directory.
    #[arg(long)]
    force: bool,
}

fn load(args: &RunArgs, default_preset: Option<&str>) -> Result<ExperimentConfig> {
    let mut cfg = match (&args.config, args.preset.as_deref().or(default_preset)) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => preset(name).ok_or_else(|| anyhow!("unknown preset '{name}' (see `presets list`)"))?,
        (None, None) => bail!("pass --config PATH or --preset NAME"),
    };
    if let Some(out) = &args.out {
        cfg.output_dir = Some(out.clone());
    }
    if let Some(s) = args.seed {
        cfg.set_seed(s);
    }
    if let Some(w) = args.workers {
        if let Some(sw) = cfg.sweep.as_mut() {
            sw.workers = w;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(args: &RunArgs, cfg: ExperimentConfig) -> Result<()> {
    let dir = cfg.output_dir.clone();
    let m = run_experiment(&cfg, args.force)?;
    let dir = dir.expect("checked by run_experiment");
    println!("{} run finished in {:.1} s", cfg.experiment, m.wall_time_seconds);
    for f in &m.files {
        println!("  {}  {}  {}", &f.sha256[..16], f.bytes, dir.join(&f.path).display());
    }
    println!("  manifest: {}", dir.join("manifest.json").display());
    Ok(())
}

fn main_inner() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let cfg = load(&args, None)?;
            execute(&args, cfg)
        }
        Command::Sweep(args) => {
            let cfg = load(&args, None)?;
            if cfg.experiment != ExperimentKind::Sweep {
                bail!("`sweep` needs a config with experiment = \"sweep\"");
            }
            execute(&args, cfg)
        }
        Command::Verify(args) => {
            let cfg = load(&args, Some("verify"))?;
            if cfg.experiment != ExperimentKind::Verify {
                bail!("`verify` needs a config with experiment = \"verify\"");
            }
            let dir = cfg.output_dir.clone();
            execute(&args, cfg)?;
            if let Some(dir) = dir {
                let text = std::fs::read_to_string(dir.join("verify.json"))?;
                let report: starkmbl_cli::VerifyReport = serde_json::from_str(&text)?;
                let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.check.as_str()).collect();
                println!("{} checks, {} failed", report.checks.len(), failed.len());
                for f in failed {
                    println!("  FAIL {f}");
                }
                if !report.all_pass {
                    bail!("identity checks failed");
                }
            }
            Ok(())
        }
        Command::Presets { action } => {
            match action {
                PresetAction::List => {
                    for (name, desc) in PRESETS {
                        println!("{name:<10} {desc}");
                    }
                }
                PresetAction::Show { name } => {
                    let cfg = preset(&name).ok_or_else(|| anyhow!("unknown preset '{name}'"))?;
                    println!("{}", cfg.to_json());
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
