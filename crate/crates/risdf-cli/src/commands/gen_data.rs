use anyhow::{Context, Result};
use std::path::Path;

use risdf::channel::generate_dataset;
use risdf::dataset::save_dataset;

use super::{config_hash, load_config, write_file};

pub fn run(
    config: &Path,
    out: &Path,
    num_train: usize,
    num_test: usize,
    seed: Option<u64>,
) -> Result<()> {
    let mut file = load_config(config)?;
    if let Some(s) = seed {
        file.system.seed = s;
    }
    std::fs::create_dir_all(out)?;

    // test samples continue the train sub-streams, so both splits share
    // the dataset's fixed LoS angle draw
    let train = generate_dataset(&file.system, &file.topology, num_train, 0)
        .context("generating training set")?;
    let test = generate_dataset(&file.system, &file.topology, num_test, num_train as u64)
        .context("generating test set")?;
    save_dataset(&train, &out.join("train.risdf"))?;
    save_dataset(&test, &out.join("test.risdf"))?;

    let manifest = format!(
        "config_hash = \"{}\"\nnum_train = {}\nnum_test = {}\nseed = {}\n",
        config_hash(&file),
        num_train,
        num_test,
        file.system.seed
    );
    write_file(&out.join("manifest.toml"), &manifest)?;
    println!(
        "wrote {} train + {} test samples to {}",
        num_train,
        num_test,
        out.display()
    );
    Ok(())
}
