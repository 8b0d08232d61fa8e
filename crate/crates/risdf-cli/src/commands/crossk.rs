use anyhow::{Context, Result};
use std::path::Path;

use risdf::channel::generate_dataset;
use risdf::config::{SystemConfig, TrainConfig};
use risdf::gnn::{self, GnnDims, GnnParams, Mode};
use risdf::train::train;

use super::{load_config, write_file};

fn mean_eval_rate(
    params: &GnnParams,
    cfg: &SystemConfig,
    data: &[risdf::channel::ChannelRealization],
) -> Result<f64> {
    let mut acc = 0.0;
    for real in data {
        let (_, rep) = gnn::forward(params, real, cfg, Mode::Eval)?;
        acc += rep.sum_rate;
    }
    Ok(acc / data.len().max(1) as f64)
}

pub fn run(
    config: &Path,
    train_k: usize,
    test_k_list: &str,
    epochs: Option<usize>,
    num_train: usize,
    num_test: usize,
    out: &Path,
) -> Result<()> {
    let file = load_config(config)?;
    let topo = file.topology.clone();
    let mut tcfg = file.train.clone().unwrap_or_else(TrainConfig::default_desk);
    if let Some(e) = epochs {
        tcfg.epochs = e;
    }
    let test_ks: Vec<usize> = test_k_list
        .split(',')
        .map(|s| s.trim().parse().context("parsing --test-k"))
        .collect::<Result<_>>()?;

    let cfg_at = |k: usize| SystemConfig {
        k,
        ..file.system.clone()
    };

    // the reference model trained at train_k
    let cfg_train = cfg_at(train_k);
    let base_set = generate_dataset(&cfg_train, &topo, num_train, 0)?;
    let mut base = GnnParams::init(GnnDims::from_config(&cfg_train), tcfg.seed);
    train(&mut base, &base_set, &cfg_train, &tcfg, None).context("training base model")?;

    let mut rows = vec!["test_k,cross_sum_rate,same_sum_rate,retention_pct".to_string()];
    for &k in &test_ks {
        let cfg_k = cfg_at(k);
        let test_set = generate_dataset(&cfg_k, &topo, num_test, num_train as u64)?;
        let cross = mean_eval_rate(&base, &cfg_k, &test_set)?;
        let same = if k == train_k {
            cross
        } else {
            let train_set = generate_dataset(&cfg_k, &topo, num_train, 0)?;
            let mut same_model = GnnParams::init(GnnDims::from_config(&cfg_k), tcfg.seed);
            train(&mut same_model, &train_set, &cfg_k, &tcfg, None)
                .with_context(|| format!("training same-K model at K={k}"))?;
            mean_eval_rate(&same_model, &cfg_k, &test_set)?
        };
        let retention = 100.0 * cross / same;
        println!(
            "K={k}: cross {:.4}, same {:.4}, retention {:.1}%",
            cross, same, retention
        );
        rows.push(format!("{k},{cross:.10e},{same:.10e},{retention:.6}"));
    }
    std::fs::create_dir_all(out)?;
    write_file(&out.join("crossk.csv"), &(rows.join("\n") + "\n"))?;
    Ok(())
}
