use risdf::channel::generate_dataset;
use risdf::config::{LossKind, NetworkTopology, SystemConfig, TrainConfig};
use risdf::gnn::{forward, GnnDims, GnnParams, Mode};
use risdf::train::train;

fn main() {
    let cfg = SystemConfig::desk_scale();
    let topo = NetworkTopology::desk_scale();
    let train_set = generate_dataset(&cfg, &topo, 2000, 0).unwrap();
    let test_set = generate_dataset(&cfg, &topo, 500, 2000).unwrap();
    for lambda in [0.0, 10.0, 100.0, 1000.0, 2000.0] {
        let tcfg = TrainConfig {
            loss_kind: LossKind::Fine,
            lambda,
            history_eval_samples: 1,
            ..TrainConfig::default_desk()
        };
        let mut gnn = GnnParams::init(GnnDims::from_config(&cfg), tcfg.seed);
        train(&mut gnn, &train_set, &cfg, &tcfg, None).unwrap();
        let (mut rate, mut sat) = (0.0, 0.0);
        for real in &test_set {
            let (_, rep) = forward(&gnn, real, &cfg, Mode::Eval).unwrap();
            rate += rep.sum_rate;
            sat += rep.satisfaction_fraction();
        }
        let n = test_set.len() as f64;
        println!("lambda {lambda}: rate {:.4} sat {:.4}", rate / n, sat / n);
    }
}
