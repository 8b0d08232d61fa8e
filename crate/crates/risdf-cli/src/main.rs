mod commands;
mod runner;
mod spec;
mod svg;

use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "risdf",
    about = "Simulate and optimize RIS- and DF-relay-assisted multi-group downlinks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate train/test channel datasets plus a manifest.
    GenData {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2000)]
        num_train: usize,
        #[arg(long, default_value_t = 500)]
        num_test: usize,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train the two-phase GNN on a dataset.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// coarse | group | fine
        #[arg(long, default_value = "fine")]
        loss: String,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint on a dataset; writes per-user and summary CSVs.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// on: quantized phases (eval mode); off: continuous phases.
        #[arg(long, default_value = "on")]
        quantize: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a sweep described by an experiment spec file.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Render SVG charts and a summary table from run CSVs.
    Report {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train at one user count, evaluate at others, report retention.
    Crossk {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        train_k: usize,
        /// Comma-separated list of user counts to evaluate at.
        #[arg(long)]
        test_k: String,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, default_value_t = 400)]
        num_train: usize,
        #[arg(long, default_value_t = 200)]
        num_test: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData {
            config,
            out,
            num_train,
            num_test,
            seed,
        } => commands::gen_data::run(&config, &out, num_train, num_test, seed),
        Command::Train {
            config,
            data,
            loss,
            beta,
            lambda,
            epochs,
            batch_size,
            lr,
            seed,
            out,
        } => commands::train::run(commands::train::Args {
            config,
            data,
            loss,
            beta,
            lambda,
            epochs,
            batch_size,
            lr,
            seed,
            out,
        }),
        Command::Eval {
            config,
            model,
            data,
            quantize,
            out,
        } => commands::eval::run(&config, &model, &data, &quantize, &out),
        Command::Sweep { spec } => commands::sweep::run(&spec),
        Command::Report { runs, out } => commands::report::run(&runs, &out),
        Command::Crossk {
            config,
            train_k,
            test_k,
            epochs,
            num_train,
            num_test,
            out,
        } => commands::crossk::run(&config, train_k, &test_k, epochs, num_train, num_test, &out),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
