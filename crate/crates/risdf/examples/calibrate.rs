use risdf::baselines::{brute_force_oracle, pso_optimize, random_strategy, FlatDnn, PsoConfig};
use risdf::channel::{generate_dataset, sample_rng};
use risdf::config::{LossKind, NetworkTopology, SystemConfig, ThresholdSpec, TrainConfig};
use risdf::gnn::{forward, GnnDims, GnnParams, Mode};
use risdf::phy::evaluate_strategy;
use risdf::train::{train, Model};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(|s| s.as_str()).unwrap_or("desk");

    if which == "desk" {
        let cfg = SystemConfig::desk_scale();
        let mut topo = NetworkTopology::desk_scale();
        if let Some(r) = args.get(4).and_then(|s| s.parse::<f64>().ok()) {
            topo.group_radius = r;
        }
        let lr: f64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(0.001);
        let n_train: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(400);
        let epochs: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(6);
        let train_set = generate_dataset(&cfg, &topo, n_train, 0).unwrap();
        // test samples: same angle draw, disjoint sub-streams
        let test_set = generate_dataset(&cfg, &topo, 100, n_train as u64).unwrap();

        let tcfg = TrainConfig {
            loss_kind: LossKind::Fine,
            epochs,
            batch_size: 64,
            history_eval_samples: 64,
            learning_rate: lr,
            ..TrainConfig::default_desk()
        };
        let mut gnn = GnnParams::init(GnnDims::from_config(&cfg), 1);
        let t = Instant::now();
        let hist = train(&mut gnn, &train_set, &cfg, &tcfg, None).unwrap();
        println!("GNN train {:?} ({} samples x {} epochs)", t.elapsed(), n_train, epochs);
        for r in &hist.rows {
            println!("  epoch {}: loss {:.3} rate {:.3} sat {:.3}", r.epoch, r.loss, r.sum_rate, r.satisfaction_rate);
        }

        let h = FlatDnn::hidden_for_budget(&cfg, gnn.param_count());
        let mut dnn = FlatDnn::init(&cfg, h, 1);
        println!("DNN hidden {} params {} (gnn {})", h, dnn.param_count(), gnn.param_count());
        let t = Instant::now();
        let _ = train(&mut dnn, &train_set, &cfg, &tcfg, None).unwrap();
        println!("DNN train {:?}", t.elapsed());

        let mut gnn_rate = 0.0;
        let mut gnn_sat = 0.0;
        let mut dnn_rate = 0.0;
        let mut rnd_rate = 0.0;
        let mut rng = sample_rng(555, 0);
        for real in &test_set {
            let (_, rep) = forward(&gnn, real, &cfg, Mode::Eval).unwrap();
            gnn_rate += rep.sum_rate;
            gnn_sat += rep.satisfaction_fraction();
            let (_, rep) = dnn.eval_forward(real, &cfg).unwrap();
            dnn_rate += rep.sum_rate;
            let strat = random_strategy(real, &cfg, &mut rng);
            rnd_rate += evaluate_strategy(real, &strat, &cfg).unwrap().sum_rate;
        }
        let n = test_set.len() as f64;
        println!("TEST: gnn {:.3} (sat {:.3})  dnn {:.3}  random {:.3}  ratio {:.2}",
            gnn_rate / n, gnn_sat / n, dnn_rate / n, rnd_rate / n, gnn_rate / rnd_rate);
    }

    if which == "tiny" {
        let cfg = SystemConfig {
            m: 2, n: 2, l: 2, j: 2, i: 1, k: 1, b: 1, q: 16, d: 2,
            rate_th_user: ThresholdSpec::Uniform(1.0),
            rate_th_group: ThresholdSpec::Uniform(1.0),
            ..SystemConfig::desk_scale()
        };
        let topo = NetworkTopology::desk_scale().adapt(&cfg).unwrap();
        let n_train: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(300);
        let epochs: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(60);
        let train_set = generate_dataset(&cfg, &topo, n_train, 0).unwrap();
        let test_set = generate_dataset(&cfg, &topo, 50, n_train as u64).unwrap();

        let tcfg = TrainConfig {
            loss_kind: LossKind::Fine,
            epochs,
            batch_size: 32,
            history_eval_samples: 32,
            ..TrainConfig::default_desk()
        };
        let mut gnn = GnnParams::init(GnnDims::from_config(&cfg), 1);
        let t = Instant::now();
        let hist = train(&mut gnn, &train_set, &cfg, &tcfg, None).unwrap();
        println!("tiny GNN train {:?}; last rows:", t.elapsed());
        for r in hist.rows.iter().rev().take(3).rev() {
            println!("  epoch {}: loss {:.3} rate {:.3} sat {:.3}", r.epoch, r.loss, r.sum_rate, r.satisfaction_rate);
        }

        let mut gnn_sum = 0.0;
        let mut ora_sum = 0.0;
        let mut pso_sum = 0.0;
        let t = Instant::now();
        for (idx, real) in test_set.iter().enumerate() {
            let (_, rep) = forward(&gnn, real, &cfg, Mode::Eval).unwrap();
            gnn_sum += rep.sum_rate;
            let ora = brute_force_oracle(real, &cfg).unwrap();
            ora_sum += ora.report.sum_rate;
            let pso = pso_optimize(real, &cfg, &PsoConfig { seed: idx as u64, ..PsoConfig::default() }).unwrap();
            pso_sum += pso.report.sum_rate;
        }
        println!("tiny eval {:?}: gnn {:.3} oracle {:.3} pso {:.3} | gnn/ora {:.3} pso/ora {:.3}",
            t.elapsed(), gnn_sum / 50.0, ora_sum / 50.0, pso_sum / 50.0, gnn_sum / ora_sum, pso_sum / ora_sum);
    }
}
