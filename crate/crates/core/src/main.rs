use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use slump_gsgp::experiment::{
    cmd_compare, cmd_ols_baseline, cmd_predict, cmd_train, ExperimentConfig, Overrides,
    DEFAULT_OUT_DIR,
};
use slump_gsgp::fmt::sig6;

#[derive(Parser)]
#[command(
    name = "slump-gsgp",
    version,
    about = "GSGP slump regression experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed. Comparison run i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    /// Output directory.
    #[arg(long, env = "SLUMP_GSGP_OUT")]
    out: Option<PathBuf>,
    /// `builtin` or a CSV path.
    #[arg(long)]
    dataset: Option<String>,
    /// Leading rows used for training.
    #[arg(long)]
    train_size: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let overrides = Overrides {
            seed: self.seed,
            runs: self.runs,
            out_dir: self.out.clone(),
            dataset: self.dataset.clone(),
            n_train: self.train_size,
        };
        ExperimentConfig::resolve(self.config.as_deref(), &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// One GSGP run: fitness curve, test predictions, model and metrics.
    Train(Common),
    /// Apply a saved model to a CSV of mixes.
    Predict {
        /// model.json written by `train` or `ols-baseline`.
        #[arg(long)]
        model: PathBuf,
        /// CSV with the eight feature columns; slump optional.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, env = "SLUMP_GSGP_OUT", default_value = DEFAULT_OUT_DIR)]
        out: PathBuf,
    },
    /// Repeated GSGP and STGP runs against LS-SVM, with rank-sum tests.
    Compare(Common),
    /// OLS test predictions next to GSGP's.
    OlsBaseline(Common),
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(c) => {
            let cfg = c.resolve()?;
            let r = cmd_train(&cfg)?;
            println!(
                "test R {}  RMSE {}  max relative error {}",
                r.test.r.map_or("undefined".into(), sig6),
                sig6(r.test.rmse),
                sig6(r.test.max_relative_error)
            );
        }
        Command::Predict { model, input, out } => {
            let p = cmd_predict(&model, &input, &out)?;
            println!(
                "{} predictions written to {}",
                p.len(),
                out.join("predictions.csv").display()
            );
        }
        Command::Compare(c) => {
            let cfg = c.resolve()?;
            let r = cmd_compare(&cfg)?;
            for a in &r.algorithms {
                let b = &a.test_rmse_box;
                println!(
                    "{:6} median RMSE {}  IQR {}",
                    a.name,
                    sig6(b.median),
                    sig6(b.iqr)
                );
            }
            for t in &r.tests {
                println!(
                    "{} vs {}: p = {}",
                    t.first,
                    t.second,
                    sig6(t.result.p_value)
                );
            }
            println!("OLS test RMSE {}", sig6(r.ols_test_rmse));
        }
        Command::OlsBaseline(c) => {
            let cfg = c.resolve()?;
            let b = cmd_ols_baseline(&cfg)?;
            println!(
                "{} rows written to {}",
                b.ols.len(),
                cfg.out_dir.join("baseline_predictions.csv").display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
