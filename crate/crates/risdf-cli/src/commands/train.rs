use anyhow::{Context, Result};
use std::path::PathBuf;

use risdf::config::TrainConfig;
use risdf::dataset::{load_dataset, DatasetHeader};
use risdf::gnn::{save_checkpoint, GnnDims, GnnParams};
use risdf::train::{train, History};

use super::{load_config, write_file};

pub struct Args {
    pub config: PathBuf,
    pub data: PathBuf,
    pub loss: String,
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub seed: Option<u64>,
    pub out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    let file = load_config(&args.config)?;
    let cfg = file.system.clone();
    let expect = DatasetHeader {
        m: cfg.m,
        n: cfg.n,
        l: cfg.l,
        j: cfg.j,
        i: cfg.i,
        k: cfg.k,
        count: 0,
    };
    let dataset = load_dataset(&args.data, Some(&expect)).context("loading dataset")?;

    let mut tcfg = file.train.clone().unwrap_or_else(TrainConfig::default_desk);
    tcfg.loss_kind = args.loss.parse()?;
    if let Some(v) = args.beta {
        tcfg.beta = v;
    }
    if let Some(v) = args.lambda {
        tcfg.lambda = v;
    }
    if let Some(v) = args.epochs {
        tcfg.epochs = v;
    }
    if let Some(v) = args.batch_size {
        tcfg.batch_size = v;
    }
    if let Some(v) = args.lr {
        tcfg.learning_rate = v;
    }
    if let Some(v) = args.seed {
        tcfg.seed = v;
    }

    std::fs::create_dir_all(&args.out)?;
    let mut params = GnnParams::init(GnnDims::from_config(&cfg), tcfg.seed);
    let cadence = tcfg.checkpoint_every;
    let out_dir = args.out.clone();
    let mut on_epoch = move |model: &GnnParams, epoch: usize, _row: &risdf::train::HistoryRow| {
        if cadence > 0 && (epoch + 1) % cadence == 0 {
            let path = out_dir.join(format!("checkpoint_epoch{:04}.risgnn", epoch));
            if let Err(e) = save_checkpoint(model, &path) {
                eprintln!("warning: checkpoint at epoch {epoch} failed: {e}");
            }
        }
    };
    let history = train(&mut params, &dataset, &cfg, &tcfg, Some(&mut on_epoch))
        .context("training")?;

    save_checkpoint(&params, &args.out.join("checkpoint.risgnn"))?;
    write_history(&history, &args.out.join("history.csv"))?;
    let last = history.rows.last().context("no epochs ran")?;
    println!(
        "trained {} epochs; final loss {:.4}, sum rate {:.4}, satisfaction {:.4}",
        history.rows.len(),
        last.loss,
        last.sum_rate,
        last.satisfaction_rate
    );
    Ok(())
}

pub fn write_history(history: &History, path: &std::path::Path) -> Result<()> {
    let mut text = String::from(History::CSV_HEADER);
    text.push('\n');
    for row in history.csv_rows() {
        text.push_str(&row);
        text.push('\n');
    }
    write_file(path, &text)
}
