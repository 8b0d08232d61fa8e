//! Shared method execution for the sweep and comparison commands.

use anyhow::{Context, Result};

use risdf::baselines::{brute_force_oracle, pso_optimize, random_strategy, FlatDnn, PsoConfig};
use risdf::channel::{sample_rng, ChannelRealization};
use risdf::config::{LossKind, SystemConfig, TrainConfig};
use risdf::gnn::{self, GnnDims, GnnParams, Mode};
use risdf::phy::evaluate_strategy;
use risdf::train::{train, Model};

use crate::spec::Method;

#[derive(Debug, Clone)]
pub struct MethodMetrics {
    pub method: &'static str,
    pub mean_sum_rate: f64,
    pub mean_satisfaction: f64,
    pub decode_feasible_fraction: f64,
    pub samples: usize,
    /// Per-sample reports, for per-user CSV emission.
    pub reports: Vec<risdf::phy::RateReport>,
}

impl MethodMetrics {
    /// Per-user rows in the RateReport CSV schema plus a method column.
    pub fn user_rows(&self, cfg: &SystemConfig) -> Vec<String> {
        let mut out = vec![format!("method,{}", risdf::phy::RateReport::CSV_HEADER)];
        for (idx, rep) in self.reports.iter().enumerate() {
            for row in rep.csv_rows(idx, cfg) {
                out.push(format!("{},{row}", self.method));
            }
        }
        out
    }
}

fn aggregate(method: &'static str, cfg: &SystemConfig, reports: Vec<risdf::phy::RateReport>) -> MethodMetrics {
    let mut rate = 0.0;
    let mut sat = 0.0;
    let mut feas = 0.0;
    for rep in &reports {
        rate += rep.sum_rate;
        sat += rep.satisfaction_fraction();
        feas += rep.decode_feasible(cfg) as u8 as f64;
    }
    let n = reports.len();
    let d = n.max(1) as f64;
    MethodMetrics {
        method,
        mean_sum_rate: rate / d,
        mean_satisfaction: sat / d,
        decode_feasible_fraction: feas / d,
        samples: n,
        reports,
    }
}

/// Train (when applicable) and evaluate one method on the given split.
pub fn run_method(
    method: Method,
    cfg: &SystemConfig,
    tcfg: &TrainConfig,
    train_set: &[ChannelRealization],
    test_set: &[ChannelRealization],
    pso_samples: usize,
    oracle_samples: usize,
) -> Result<MethodMetrics> {
    match method {
        Method::JofdTg | Method::JogdTg | Method::JocdTg => {
            let kind = match method {
                Method::JofdTg => LossKind::Fine,
                Method::JogdTg => LossKind::Group,
                _ => LossKind::Coarse,
            };
            let mut params = GnnParams::init(GnnDims::from_config(cfg), tcfg.seed);
            let tcfg = TrainConfig {
                loss_kind: kind,
                ..tcfg.clone()
            };
            train(&mut params, train_set, cfg, &tcfg, None).context("training GNN")?;
            let reports = test_set
                .iter()
                .map(|real| gnn::forward(&params, real, cfg, Mode::Eval).map(|(_, r)| r))
                .collect::<risdf::Result<Vec<_>>>()?;
            Ok(aggregate(method.name(), cfg, reports))
        }
        Method::JofdDnn => {
            let gnn_params = GnnParams::init(GnnDims::from_config(cfg), tcfg.seed).param_count();
            let hidden = FlatDnn::hidden_for_budget(cfg, gnn_params);
            let mut dnn = FlatDnn::init(cfg, hidden, tcfg.seed);
            let tcfg = TrainConfig {
                loss_kind: LossKind::Fine,
                ..tcfg.clone()
            };
            train(&mut dnn, train_set, cfg, &tcfg, None).context("training DNN")?;
            let reports = test_set
                .iter()
                .map(|real| dnn.eval_forward(real, cfg).map(|(_, r)| r))
                .collect::<risdf::Result<Vec<_>>>()?;
            Ok(aggregate(method.name(), cfg, reports))
        }
        Method::JofdPso => {
            let count = pso_samples.min(test_set.len()).max(1);
            let reports = test_set[..count]
                .iter()
                .enumerate()
                .map(|(idx, real)| {
                    let pso = PsoConfig {
                        seed: tcfg.seed ^ (idx as u64).wrapping_mul(0x9e3779b9),
                        beta: tcfg.beta,
                        lambda: tcfg.lambda,
                        ..PsoConfig::default()
                    };
                    pso_optimize(real, cfg, &pso).map(|o| o.report)
                })
                .collect::<risdf::Result<Vec<_>>>()?;
            Ok(aggregate(method.name(), cfg, reports))
        }
        Method::JofdRandom => {
            let reports = test_set
                .iter()
                .enumerate()
                .map(|(idx, real)| {
                    let mut rng = sample_rng(tcfg.seed ^ 0xabcd, idx as u64);
                    let strat = random_strategy(real, cfg, &mut rng);
                    evaluate_strategy(real, &strat, cfg)
                })
                .collect::<risdf::Result<Vec<_>>>()?;
            Ok(aggregate(method.name(), cfg, reports))
        }
        Method::Oracle => {
            let count = oracle_samples.min(test_set.len()).max(1);
            let reports = test_set[..count]
                .iter()
                .map(|real| brute_force_oracle(real, cfg).map(|o| o.report))
                .collect::<risdf::Result<Vec<_>>>()?;
            Ok(aggregate(method.name(), cfg, reports))
        }
    }
}
