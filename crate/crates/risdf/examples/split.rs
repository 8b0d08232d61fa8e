use risdf::baselines::FlatDnn;
use risdf::channel::generate_dataset;
use risdf::config::{LossKind, NetworkTopology, SystemConfig, TrainConfig};
use risdf::gnn::{forward, GnnDims, GnnParams, Mode};
use risdf::train::{train, Model};

fn main() {
    let cfg = SystemConfig::desk_scale();
    let mut topo = NetworkTopology::desk_scale();
    topo.group_radius = 4.0;
    let train_set = generate_dataset(&cfg, &topo, 400, 0).unwrap();
    let test_set = generate_dataset(&cfg, &topo, 60, 400).unwrap();
    let tcfg = TrainConfig {
        loss_kind: LossKind::Fine,
        epochs: 12,
        batch_size: 64,
        history_eval_samples: 32,
        learning_rate: 0.002,
        ..TrainConfig::default_desk()
    };
    let mut gnn = GnnParams::init(GnnDims::from_config(&cfg), 1);
    train(&mut gnn, &train_set, &cfg, &tcfg, None).unwrap();
    let h = FlatDnn::hidden_for_budget(&cfg, gnn.param_count());
    let mut dnn = FlatDnn::init(&cfg, h, 1);
    let dhist = train(&mut dnn, &train_set, &cfg, &tcfg, None).unwrap();
    println!("DNN train curve: {:?}", dhist.rows.iter().map(|r| (r.loss * 10.0).round() / 10.0).collect::<Vec<_>>());

    let mut stats = |name: &str, f: &mut dyn FnMut(&risdf::channel::ChannelRealization) -> risdf::phy::RateReport| {
        let (mut g1, mut g2, mut rate) = (0.0, 0.0, 0.0);
        let mut n = 0.0;
        for real in &test_set {
            let rep = f(real);
            for i in 0..cfg.i { for k in 0..cfg.k {
                g1 += rep.sinr_phase1[i][k];
                g2 += rep.sinr_phase2[i][k];
                n += 1.0;
            }}
            rate += rep.sum_rate;
        }
        println!("{name}: mean g1 {:.2} g2 {:.2} rate {:.3}", g1 / n, g2 / n, rate / test_set.len() as f64);
    };
    stats("GNN", &mut |r| forward(&gnn, r, &cfg, Mode::Eval).unwrap().1);
    stats("DNN", &mut |r| dnn.eval_forward(r, &cfg).unwrap().1);
}
