use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use scheda_cli::commands::{self, VizOptions};
use scheda_cli::config::ExperimentConfig;
use scheda_cli::exit_code;
use scheda_cli::grid::run_grid;
use scheda_cli::run::run_experiment;
use scheda_core::analysis::Channels;
use scheda_core::Error;

#[derive(Parser)]
#[command(name = "scheda", version, about = "Train and evaluate denoising autoencoders under noise schedules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the configured model, writing checkpoints, metrics and a manifest.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory (defaults to `out` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fill validation/test errors into the metrics every N epochs.
        #[arg(long)]
        metrics_every: Option<usize>,
    },
    /// Score a checkpoint's representation (or the raw inputs) with logistic regression.
    Eval {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Count, per reference model, the target features it hosts the closest match for.
    Analyze {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        target: PathBuf,
        /// Reference model as TAG=PATH; repeat in reference order.
        #[arg(long = "reference", value_parser = parse_reference)]
        references: Vec<(String, PathBuf)>,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score the concatenation of two checkpoints' representations.
    ConcatEval {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        first: PathBuf,
        #[arg(long)]
        second: PathBuf,
    },
    /// Fine-tune a pretrained encoder with a softmax output layer.
    Finetune {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Export encoder filters as a PPM image.
    Viz {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        cols: Option<usize>,
        /// `gray` or `rgb`; RGB is assumed for 3072-wide inputs.
        #[arg(long)]
        channels: Option<Channels>,
    },
    /// Train every cell of the configured grid and select on validation error.
    Grid {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Runs executed concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

fn parse_reference(s: &str) -> Result<(String, PathBuf), String> {
    let (tag, path) = s
        .split_once('=')
        .ok_or_else(|| format!("expected TAG=PATH, got `{s}`"))?;
    Ok((tag.to_string(), PathBuf::from(path)))
}

fn load_config(args: &ConfigArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg.resolve()?)
}

fn output_dir(flag: Option<PathBuf>, cfg: &ExperimentConfig) -> anyhow::Result<PathBuf> {
    flag.or_else(|| cfg.out.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out or set `out`".into()).into())
}

fn emit(text: &str, to: Option<&Path>) -> anyhow::Result<()> {
    match to {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Train { cfg, out, metrics_every } => {
            let mut config = load_config(&cfg)?;
            if let Some(n) = metrics_every {
                config.eval.metrics_every = n;
            }
            let out = output_dir(out, &config)?;
            let summary = run_experiment(&config, &out)?;
            println!("epochs={}", summary.epochs);
            if let Some(loss) = summary.final_recon {
                println!("recon_error={loss}");
            }
            if let Some(r) = &summary.report {
                print!("{}", scheda_cli::run::eval_text(r));
            }
        }
        Command::Eval { cfg, checkpoint } => {
            emit(&commands::eval(&load_config(&cfg)?, checkpoint.as_deref())?, None)?;
        }
        Command::Analyze { cfg, target, references, out } => {
            let csv = commands::analyze(&load_config(&cfg)?, &target, &references)?;
            emit(&csv, out.as_deref())?;
        }
        Command::ConcatEval { cfg, first, second } => {
            emit(&commands::concat_eval(&load_config(&cfg)?, &first, &second)?, None)?;
        }
        Command::Finetune { cfg, checkpoint } => {
            emit(&commands::finetune_cmd(&load_config(&cfg)?, &checkpoint)?, None)?;
        }
        Command::Viz { checkpoint, out, count, rows, cols, channels } => {
            let opts = VizOptions { count, rows, cols, channels };
            emit(&commands::viz(&checkpoint, &out, &opts)?, None)?;
        }
        Command::Grid { cfg, out, jobs } => {
            let config = load_config(&cfg)?;
            let out = output_dir(out, &config)?;
            let (rows, best) = run_grid(&config, &out, jobs)?;
            print!("{}", scheda_cli::grid::selection_text(&rows[best]));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SCHEDA_LOG", "info")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
