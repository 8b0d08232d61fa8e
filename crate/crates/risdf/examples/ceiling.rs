use risdf::baselines::{mrt_beamforming, pso_optimize, PsoConfig};
use risdf::channel::generate_dataset;
use risdf::config::{NetworkTopology, SystemConfig};
use risdf::phy::*;
use ndarray::Array1;
use num_complex::Complex64;

fn main() {
    let cfg = SystemConfig::desk_scale();
    let topo = NetworkTopology::desk_scale();
    let data = generate_dataset(&cfg, &topo, 4, 0).unwrap();
    for (idx, real) in data.iter().enumerate() {
        // MRT + identity phases + best assignment
        let ones: Vec<_> = (0..cfg.i).map(|_| Array1::from_elem(cfg.n, Complex64::new(1.0, 0.0))).collect();
        let mut h1 = Vec::new();
        for i in 0..cfg.i { for k in 0..cfg.k {
            h1.push(effective_channel_phase1(real, &ones[i], i, k).unwrap());
        }}
        let (g, _) = mrt_beamforming(&h1, cfg.p_bs_max);
        let mut best_mrt = 0.0f64;
        for assign in enumerate_assignments(cfg.i, cfg.j).unwrap() {
            let mut h2 = Vec::new();
            for i in 0..cfg.i { for k in 0..cfg.k {
                h2.push(effective_channel_phase2(real, &ones[i], i, k, assign[i]).unwrap());
            }}
            let (f, _) = mrt_beamforming(&h2, cfg.p_r_max);
            let strat = Strategy { g: g.clone(), f, theta1: ones.clone(), theta2: ones.clone(), assign };
            let rep = evaluate_strategy(real, &strat, &cfg).unwrap();
            best_mrt = best_mrt.max(rep.sum_rate);
        }
        let pso = pso_optimize(real, &cfg, &PsoConfig { particles: 64, iterations: 150, seed: idx as u64, ..PsoConfig::default() }).unwrap();
        println!("inst {idx}: mrt-best {best_mrt:.3}  pso {:.3}  (pso rates {:?})", pso.report.sum_rate,
            pso.report.rate.iter().flatten().map(|r| (r*100.0).round()/100.0).collect::<Vec<_>>());
    }
}
