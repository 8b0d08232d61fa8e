use anyhow::{Context, Result};
use std::path::Path;

use risdf::channel::generate_dataset;
use risdf::config::ConfigFile;

use super::write_file;
use crate::runner::run_method;
use crate::spec::{ExperimentSpec, SweepValue};

pub const COMBINED_HEADER: &str = "method,sweep_value,sum_rate,satisfaction_rate";

pub fn run(spec_path: &Path) -> Result<()> {
    let spec = ExperimentSpec::load(spec_path)?;
    let out_dir = Path::new(&spec.out_dir);
    std::fs::create_dir_all(out_dir)?;

    let points: Vec<SweepValue> = if spec.sweep.is_some() {
        spec.values.clone()
    } else {
        vec![SweepValue::Name("single".into())]
    };

    let mut combined = vec![COMBINED_HEADER.to_string()];
    for value in &points {
        let mut cfg = spec.base_system();
        let mut topo = spec.base_topology();
        let mut tcfg = spec.base_train();
        spec.apply(value, &mut cfg, &mut topo, &mut tcfg)?;
        cfg.validate().context("sweep-point system config")?;
        let topo = topo.adapt(&cfg).map_err(anyhow::Error::from)?;
        topo.validate(&cfg)?;

        let label = value.label();
        let point_dir = out_dir.join(format!("point_{label}"));
        std::fs::create_dir_all(&point_dir)?;
        write_file(
            &point_dir.join("config.toml"),
            &ConfigFile {
                system: cfg.clone(),
                topology: topo.clone(),
                train: Some(tcfg.clone()),
            }
            .to_toml(),
        )?;

        let train_set = generate_dataset(&cfg, &topo, spec.num_train, 0)?;
        let test_set = generate_dataset(&cfg, &topo, spec.num_test, spec.num_train as u64)?;

        let mut point_rows = vec![COMBINED_HEADER.to_string()];
        for method in spec.methods() {
            let metrics = run_method(
                method,
                &cfg,
                &tcfg,
                &train_set,
                &test_set,
                spec.pso_samples,
                spec.oracle_samples,
            )
            .with_context(|| format!("method {} at point {label}", method.name()))?;
            let row = format!(
                "{},{},{:.10e},{:.10e}",
                metrics.method, label, metrics.mean_sum_rate, metrics.mean_satisfaction
            );
            println!(
                "[{}] {} @ {}: sum rate {:.4}, satisfaction {:.4}, decode-feasible {:.4} ({} samples)",
                spec.scenario,
                metrics.method,
                label,
                metrics.mean_sum_rate,
                metrics.mean_satisfaction,
                metrics.decode_feasible_fraction,
                metrics.samples
            );
            write_file(
                &point_dir.join(format!("users_{}.csv", metrics.method)),
                &(metrics.user_rows(&cfg).join("\n") + "\n"),
            )?;
            point_rows.push(row.clone());
            combined.push(row);
        }
        write_file(&point_dir.join("metrics.csv"), &(point_rows.join("\n") + "\n"))?;
    }

    write_file(&out_dir.join("combined.csv"), &(combined.join("\n") + "\n"))?;
    println!("sweep `{}` complete: {}", spec.scenario, out_dir.display());
    Ok(())
}
