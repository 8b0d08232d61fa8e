use risdf::baselines::FlatDnn;
use risdf::channel::generate_dataset;
use risdf::config::{LossKind, NetworkTopology, SystemConfig, TrainConfig};
use risdf::gnn::{forward, GnnDims, GnnParams, Mode};
use risdf::train::{train, Model};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n_train: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let chunks: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(6);
    let chunk_epochs: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(10);
    let lambda: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(1000.0);
    let cfg = SystemConfig::desk_scale();
    let topo = NetworkTopology::desk_scale();
    let train_set = generate_dataset(&cfg, &topo, n_train, 0).unwrap();
    let test_set = generate_dataset(&cfg, &topo, 150, n_train as u64).unwrap();

    let eval = |name: &str, f: &mut dyn FnMut(&risdf::channel::ChannelRealization) -> risdf::phy::RateReport| {
        let (mut rate, mut sat) = (0.0, 0.0);
        for real in &test_set {
            let rep = f(real);
            rate += rep.sum_rate;
            sat += rep.satisfaction_fraction();
        }
        let n = test_set.len() as f64;
        println!("    {name}: test rate {:.3} sat {:.3}", rate / n, sat / n);
    };

    let mut gnn = GnnParams::init(GnnDims::from_config(&cfg), 1);
    let h = FlatDnn::hidden_for_budget(&cfg, gnn.param_count());
    let mut dnn = FlatDnn::init(&cfg, h, 1);
    for chunk in 0..chunks {
        let tcfg = TrainConfig {
            loss_kind: LossKind::Fine,
            epochs: chunk_epochs,
            batch_size: 64,
            history_eval_samples: 1,
            learning_rate: 0.002,
            seed: 7 + chunk as u64,
            lambda,
            ..TrainConfig::default_desk()
        };
        train(&mut gnn, &train_set, &cfg, &tcfg, None).unwrap();
        train(&mut dnn, &train_set, &cfg, &tcfg, None).unwrap();
        println!("after {} epochs:", (chunk + 1) * chunk_epochs);
        eval("gnn", &mut |r| forward(&gnn, r, &cfg, Mode::Eval).unwrap().1);
        eval("dnn", &mut |r| dnn.eval_forward(r, &cfg).unwrap().1);
    }
}
