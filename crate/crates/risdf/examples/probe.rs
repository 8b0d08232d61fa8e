use risdf::channel::generate_dataset;
use risdf::config::{LossKind, NetworkTopology, SystemConfig, ThresholdSpec};
use risdf::gnn::{GnnDims, GnnParams, LossSpec};
use risdf::train::{gradient_check, Model};
use risdf::tape::Tape;
use std::time::Instant;

fn main() {
    // gradient check on tiny config
    let cfg = SystemConfig {
        m: 2, n: 2, l: 2, j: 2, i: 2, k: 2, q: 8, d: 1,
        rate_th_user: ThresholdSpec::Uniform(5.0),
        rate_th_group: ThresholdSpec::Uniform(4.0),
        ..SystemConfig::desk_scale()
    };
    let topo = NetworkTopology::desk_scale();
    let data = generate_dataset(&cfg, &topo, 3, 0).unwrap();
    for kind in [LossKind::Coarse, LossKind::Group, LossKind::Fine] {
        for (si, real) in data.iter().enumerate() {
            let mut params = GnnParams::init(GnnDims::from_config(&cfg), 11);
            let spec = LossSpec { kind, beta: 10.0, lambda: 10.0, group_sum_penalty: false };
            let t = Instant::now();
            let rep = gradient_check(&mut params, real, &cfg, &spec, 60, 42).unwrap();
            println!("{kind:?} sample {si}: max_rel_err={:.3e} worst={} checked={} ({:?})",
                rep.max_rel_err, rep.worst_coord, rep.checked, t.elapsed());
        }
    }

    // desk-scale per-sample timing
    let cfg = SystemConfig::desk_scale();
    let topo = NetworkTopology::desk_scale();
    let data = generate_dataset(&cfg, &topo, 16, 0).unwrap();
    let params = GnnParams::init(GnnDims::from_config(&cfg), 1);
    println!("desk param count: {}", params.param_count());
    let spec = LossSpec { kind: LossKind::Fine, beta: 1000.0, lambda: 1000.0, group_sum_penalty: false };
    let t = Instant::now();
    let mut acc = 0.0;
    for real in &data {
        let mut tape = Tape::new(params.store());
        let (loss, _) = params.build_loss(&mut tape, real, &cfg, &spec, None).unwrap();
        let g = tape.backward(loss);
        acc += g.by_param[0][0] + tape.scalar(loss);
    }
    let dt = t.elapsed();
    println!("desk fwd+bwd: {:?}/sample (acc {acc:.3})", dt / 16);

    // eval forward timing
    let t = Instant::now();
    for real in &data {
        let (_s, rep) = risdf::gnn::forward(&params, real, &cfg, risdf::gnn::Mode::Eval).unwrap();
        acc += rep.sum_rate;
    }
    println!("desk eval forward: {:?}/sample (acc {acc:.3})", t.elapsed() / 16);

    // typical magnitudes on desk config with random params
    let (_, rep) = risdf::gnn::forward(&params, &data[0], &cfg, risdf::gnn::Mode::Eval).unwrap();
    println!("sample rates: {:?}", rep.rate);
    println!("relay sinrs assigned: {:?}", rep.sinr_relay);
    println!("sinr1: {:?}", rep.sinr_phase1);
    println!("sinr2: {:?}", rep.sinr_phase2);
}
