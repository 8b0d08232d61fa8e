use risdf::baselines::FlatDnn;
use risdf::channel::{generate_dataset, sample_rng};
use risdf::config::{LossKind, NetworkTopology, SystemConfig, TrainConfig};
use risdf::gnn::{forward, GnnDims, GnnParams, Mode};
use risdf::train::{train, Model};

fn main() {
    let cfg = SystemConfig::desk_scale();
    let topo = NetworkTopology::desk_scale();
    let train_set = generate_dataset(&cfg, &topo, 2000, 0).unwrap();
    let test_set = generate_dataset(&cfg, &topo, 500, 2000).unwrap();

    // criterion-6 critical point: lambda 2000, 60 epochs
    let tcfg = TrainConfig {
        loss_kind: LossKind::Fine,
        lambda: 2000.0,
        epochs: 60,
        history_eval_samples: 1,
        ..TrainConfig::default_desk()
    };
    let mut gnn2k = GnnParams::init(GnnDims::from_config(&cfg), tcfg.seed);
    train(&mut gnn2k, &train_set, &cfg, &tcfg, None).unwrap();
    let (mut rate_q, mut sat_q) = (0.0, 0.0);
    for real in &test_set {
        let (_, rep) = forward(&gnn2k, real, &cfg, Mode::Eval).unwrap();
        rate_q += rep.sum_rate;
        sat_q += rep.satisfaction_fraction();
    }
    let n = test_set.len() as f64;
    println!("lam2000 60ep TEST: rate {:.3} sat {:.4}", rate_q / n, sat_q / n);

    // criterion-5 check: TG (lambda 100, 40 ep) vs DNN vs random
    let tcfg5 = TrainConfig { history_eval_samples: 1, ..TrainConfig::default_desk() };
    let mut tg = GnnParams::init(GnnDims::from_config(&cfg), tcfg5.seed);
    train(&mut tg, &train_set, &cfg, &tcfg5, None).unwrap();
    let h = FlatDnn::hidden_for_budget(&cfg, tg.param_count());
    let mut dnn = FlatDnn::init(&cfg, h, tcfg5.seed);
    train(&mut dnn, &train_set, &cfg, &tcfg5, None).unwrap();
    let (mut tg_rate, mut tg_sat, mut dnn_rate, mut rnd_rate) = (0.0, 0.0, 0.0, 0.0);
    for (idx, real) in test_set.iter().enumerate() {
        let (_, rep) = forward(&tg, real, &cfg, Mode::Eval).unwrap();
        tg_rate += rep.sum_rate;
        tg_sat += rep.satisfaction_fraction();
        let (_, rep) = dnn.eval_forward(real, &cfg).unwrap();
        dnn_rate += rep.sum_rate;
        let mut rng = sample_rng(777, idx as u64);
        let strat = risdf::baselines::random_strategy(real, &cfg, &mut rng);
        rnd_rate += risdf::phy::evaluate_strategy(real, &strat, &cfg).unwrap().sum_rate;
    }
    println!(
        "crit5: TG {:.3} (sat {:.3})  DNN {:.3}  RND {:.3}  ratio {:.2}",
        tg_rate / n, tg_sat / n, dnn_rate / n, rnd_rate / n, tg_rate / rnd_rate
    );
}
