use anyhow::{bail, Context, Result};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::write_file;
use crate::svg::{chart, Series};

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_csv(path: &Path) -> Result<Csv> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .context("empty CSV")?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let rows = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(|s| s.trim().to_string()).collect())
        .collect();
    Ok(Csv { header, rows })
}

fn column(csv: &Csv, name: &str, file: &Path) -> Result<usize> {
    csv.header.iter().position(|h| h == name).with_context(|| {
        format!(
            "schema error in {}: missing column `{name}` (found {:?})",
            file.display(),
            csv.header
        )
    })
}

fn find_csvs(dir: &Path, name: &str, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if path.is_dir() {
            find_csvs(&path, name, out)?;
        } else if path.file_name().and_then(|s| s.to_str()) == Some(name) {
            out.push(path);
        }
    }
    out.sort();
    Ok(())
}

fn sweep_charts(csv: &Csv, path: &Path, out: &Path, stem: &str) -> Result<usize> {
    let m = column(csv, "method", path)?;
    let v = column(csv, "sweep_value", path)?;
    let r = column(csv, "sum_rate", path)?;
    let s = column(csv, "satisfaction_rate", path)?;

    let mut values: Vec<String> = Vec::new();
    for row in &csv.rows {
        if !values.contains(&row[v]) {
            values.push(row[v].clone());
        }
    }
    let numeric_x: Option<Vec<f64>> = values
        .iter()
        .map(|t| t.parse::<f64>().ok())
        .collect();
    let x_of = |label: &str| -> f64 {
        match &numeric_x {
            Some(xs) => xs[values.iter().position(|t| t == label).unwrap()],
            None => values.iter().position(|t| t == label).unwrap() as f64,
        }
    };

    let mut by_method: BTreeMap<String, (Vec<(f64, f64)>, Vec<(f64, f64)>)> = BTreeMap::new();
    for row in &csv.rows {
        let entry = by_method.entry(row[m].clone()).or_default();
        let x = x_of(&row[v]);
        entry.0.push((x, row[r].parse().context("sum_rate value")?));
        entry.1.push((x, row[s].parse().context("satisfaction value")?));
    }
    let bars = numeric_x.is_none();
    let rate_series: Vec<Series> = by_method
        .iter()
        .map(|(name, (pts, _))| Series {
            name: name.clone(),
            points: pts.clone(),
        })
        .collect();
    let sat_series: Vec<Series> = by_method
        .iter()
        .map(|(name, (_, pts))| Series {
            name: name.clone(),
            points: pts.clone(),
        })
        .collect();
    write_file(
        &out.join(format!("{stem}_sum_rate.svg")),
        &chart(&format!("{stem}: sum rate"), "sweep value", "bps/Hz", &rate_series, bars),
    )?;
    write_file(
        &out.join(format!("{stem}_satisfaction.svg")),
        &chart(
            &format!("{stem}: satisfaction rate"),
            "sweep value",
            "fraction",
            &sat_series,
            bars,
        ),
    )?;
    Ok(2)
}

fn history_charts(csv: &Csv, path: &Path, out: &Path, stem: &str) -> Result<usize> {
    let e = column(csv, "epoch", path)?;
    let mut count = 0;
    for (col, ylab) in [("loss", "loss"), ("sum_rate", "bps/Hz"), ("satisfaction_rate", "fraction")] {
        let c = column(csv, col, path)?;
        let pts: Vec<(f64, f64)> = csv
            .rows
            .iter()
            .map(|row| {
                Ok((
                    row[e].parse::<f64>().context("epoch value")?,
                    row[c].parse::<f64>().context("metric value")?,
                ))
            })
            .collect::<Result<_>>()?;
        let series = [Series {
            name: col.to_string(),
            points: pts,
        }];
        write_file(
            &out.join(format!("{stem}_{col}.svg")),
            &chart(&format!("{stem}: {col}"), "epoch", ylab, &series, false),
        )?;
        count += 1;
    }
    Ok(count)
}

pub fn run(runs: &Path, out: &Path) -> Result<()> {
    if !runs.is_dir() {
        bail!("--runs {} is not a directory", runs.display());
    }
    std::fs::create_dir_all(out)?;
    let mut combined = Vec::new();
    find_csvs(runs, "combined.csv", &mut combined)?;
    let mut histories = Vec::new();
    find_csvs(runs, "history.csv", &mut histories)?;

    let mut summary = vec!["source,kind,rows,charts".to_string()];
    let mut total = 0usize;
    for (idx, path) in combined.iter().enumerate() {
        let csv = read_csv(path)?;
        let stem = format!("sweep{idx}");
        let charts = sweep_charts(&csv, path, out, &stem)?;
        total += charts;
        summary.push(format!(
            "{},sweep,{},{}",
            path.display(),
            csv.rows.len(),
            charts
        ));
    }
    for (idx, path) in histories.iter().enumerate() {
        let csv = read_csv(path)?;
        let stem = format!("training{idx}");
        let charts = history_charts(&csv, path, out, &stem)?;
        total += charts;
        summary.push(format!(
            "{},history,{},{}",
            path.display(),
            csv.rows.len(),
            charts
        ));
    }
    if combined.is_empty() && histories.is_empty() {
        bail!("no combined.csv or history.csv found under {}", runs.display());
    }
    write_file(&out.join("summary.csv"), &(summary.join("\n") + "\n"))?;
    println!("rendered {total} charts into {}", out.display());
    Ok(())
}
