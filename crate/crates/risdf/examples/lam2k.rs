use risdf::baselines::{pso_optimize, PsoConfig};
use risdf::channel::generate_dataset;
use risdf::config::{LossKind, NetworkTopology, SystemConfig, TrainConfig};
use risdf::gnn::{forward, GnnDims, GnnParams, Mode};
use risdf::train::train;

fn main() {
    let cfg = SystemConfig::desk_scale();
    let topo = NetworkTopology::desk_scale();
    let train_set = generate_dataset(&cfg, &topo, 2000, 0).unwrap();
    let test_set = generate_dataset(&cfg, &topo, 200, 2000).unwrap();

    // what does per-instance PSO achieve on satisfaction at lambda 2000?
    let mut pso_sat = 0.0;
    let mut pso_rate = 0.0;
    let n_pso = 30;
    for (idx, real) in test_set[..n_pso].iter().enumerate() {
        let out = pso_optimize(real, &cfg, &PsoConfig { seed: idx as u64, lambda: 2000.0, ..PsoConfig::default() }).unwrap();
        pso_sat += out.report.satisfaction_fraction();
        pso_rate += out.report.sum_rate;
    }
    println!("PSO lam2000 reference: rate {:.3} sat {:.4}", pso_rate / n_pso as f64, pso_sat / n_pso as f64);

    let tcfg = TrainConfig {
        loss_kind: LossKind::Fine,
        lambda: 2000.0,
        epochs: 60,
        history_eval_samples: 128,
        ..TrainConfig::default_desk()
    };
    let mut gnn = GnnParams::init(GnnDims::from_config(&cfg), tcfg.seed);
    let mut cb = |_m: &GnnParams, e: usize, row: &risdf::train::HistoryRow| {
        if e % 10 == 9 { println!("  epoch {}: loss {:.2} train-eval rate {:.3} sat {:.4}", e, row.loss, row.sum_rate, row.satisfaction_rate); }
    };
    train(&mut gnn, &train_set, &cfg, &tcfg, Some(&mut cb)).unwrap();

    let (mut rate_q, mut sat_q, mut rate_c, mut sat_c) = (0.0, 0.0, 0.0, 0.0);
    for real in &test_set {
        let (_, rep) = forward(&gnn, real, &cfg, Mode::Eval).unwrap();
        rate_q += rep.sum_rate;
        sat_q += rep.satisfaction_fraction();
        let (_, rep) = forward(&gnn, real, &cfg, Mode::Train).unwrap();
        rate_c += rep.sum_rate;
        sat_c += rep.satisfaction_fraction();
    }
    let n = test_set.len() as f64;
    println!("TEST quantized:  rate {:.3} sat {:.4}", rate_q / n, sat_q / n);
    println!("TEST continuous: rate {:.3} sat {:.4}", rate_c / n, sat_c / n);
}
