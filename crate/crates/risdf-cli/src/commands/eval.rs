use anyhow::{bail, Context, Result};
use std::path::Path;

use risdf::dataset::load_dataset;
use risdf::gnn::{self, load_checkpoint, Mode};
use risdf::phy::RateReport;

use super::{load_config, write_file};

pub fn run(config: &Path, model: &Path, data: &Path, quantize: &str, out: &Path) -> Result<()> {
    let file = load_config(config)?;
    let cfg = file.system.clone();
    let params = load_checkpoint(model).context("loading checkpoint")?;
    if !params.dims.compatible_with(&cfg) {
        bail!(
            "checkpoint dims {:?} incompatible with config (q,d,m,n,l,i,j)",
            params.dims
        );
    }
    let mode = match quantize {
        "on" => Mode::Eval,
        "off" => Mode::Train,
        other => bail!("--quantize must be on or off, got `{other}`"),
    };
    let dataset = load_dataset(data, None).context("loading dataset")?;
    if dataset.is_empty() {
        bail!("dataset {} contains no samples", data.display());
    }

    let mut rows = vec![RateReport::CSV_HEADER.to_string()];
    let mut rate_acc = 0.0;
    let mut sat_acc = 0.0;
    let mut feas_acc = 0.0;
    for (idx, real) in dataset.iter().enumerate() {
        let (_, report) = gnn::forward(&params, real, &cfg, mode)?;
        rows.extend(report.csv_rows(idx, &cfg));
        rate_acc += report.sum_rate;
        sat_acc += report.satisfaction_fraction();
        feas_acc += report.decode_feasible(&cfg) as u8 as f64;
    }
    let n = dataset.len() as f64;

    std::fs::create_dir_all(out)?;
    write_file(&out.join("metrics.csv"), &(rows.join("\n") + "\n"))?;
    let summary = format!(
        "mean_sum_rate,mean_satisfaction_rate,decode_feasible_fraction,samples\n{:.10e},{:.10e},{:.10e},{}\n",
        rate_acc / n,
        sat_acc / n,
        feas_acc / n,
        dataset.len()
    );
    write_file(&out.join("summary.csv"), &summary)?;
    println!(
        "evaluated {} samples: mean sum rate {:.4}, satisfaction {:.4}, decode-feasible {:.4}",
        dataset.len(),
        rate_acc / n,
        sat_acc / n,
        feas_acc / n
    );
    Ok(())
}
