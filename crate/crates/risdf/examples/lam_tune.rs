use risdf::channel::generate_dataset;
use risdf::config::{LossKind, NetworkTopology, SystemConfig, TrainConfig};
use risdf::gnn::{forward, GnnDims, GnnParams, Mode};
use risdf::train::train;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let lr: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.001);
    let epochs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(80);
    let lambda: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(2000.0);
    let cfg = SystemConfig::desk_scale();
    let topo = NetworkTopology::desk_scale();
    let train_set = generate_dataset(&cfg, &topo, 2000, 0).unwrap();
    let test_set = generate_dataset(&cfg, &topo, 500, 2000).unwrap();
    let tcfg = TrainConfig {
        loss_kind: LossKind::Fine,
        lambda,
        epochs,
        learning_rate: lr,
        history_eval_samples: 1,
        ..TrainConfig::default_desk()
    };
    let mut gnn = GnnParams::init(GnnDims::from_config(&cfg), tcfg.seed);
    train(&mut gnn, &train_set, &cfg, &tcfg, None).unwrap();
    let (mut rate_q, mut sat_q) = (0.0, 0.0);
    for real in &test_set {
        let (_, rep) = forward(&gnn, real, &cfg, Mode::Eval).unwrap();
        rate_q += rep.sum_rate;
        sat_q += rep.satisfaction_fraction();
    }
    let n = test_set.len() as f64;
    println!("lr {lr} epochs {epochs} lambda {lambda}: TEST rate {:.3} sat {:.4}", rate_q / n, sat_q / n);
}
