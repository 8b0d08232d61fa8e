#![allow(dead_code)]

//! Shared helpers for integration tests: an independent nested-loop
//! transcription of the rate equations (used as the evaluation oracle),
//! strategy generators and permutation utilities.

use num_complex::Complex64;
use rand::Rng;

use risdf::channel::{sample_rng, ChannelRealization};
use risdf::config::SystemConfig;
use risdf::phy::{normalize_beamforming, Strategy};

pub struct OracleRates {
    pub sinr1: Vec<Vec<f64>>,
    pub sinr_relay: Vec<Vec<f64>>,
    pub sinr2: Vec<Vec<f64>>,
    pub rate: Vec<Vec<f64>>,
    pub sum_rate: f64,
}

/// Plain transcription of the two-phase SINR and rate formulas, written
/// independently of the library's evaluation path.
pub fn oracle_evaluate(
    real: &ChannelRealization,
    strat: &Strategy,
    cfg: &SystemConfig,
) -> OracleRates {
    let streams = cfg.i * cfg.k;
    let zero = Complex64::new(0.0, 0.0);
    let noise = if cfg.noiseless_sinr { 0.0 } else { cfg.sigma_user_sq };

    let mut h1 = vec![vec![zero; cfg.m]; streams];
    for i in 0..cfg.i {
        for k in 0..cfg.k {
            let s = i * cfg.k + k;
            for m in 0..cfg.m {
                let mut acc = zero;
                for n in 0..cfg.n {
                    acc += real.g_bs_ris[i][(m, n)]
                        * real.h_ris_user[i][k][n]
                        * strat.theta1[i][n];
                }
                h1[s][m] = acc + real.h_bs_user[i][k][m];
            }
        }
    }
    let pow1 = |s: usize, t: usize| -> f64 {
        let mut z = zero;
        for m in 0..cfg.m {
            z += h1[s][m] * strat.g[(m, t)];
        }
        z.norm_sqr()
    };
    let mut sinr1 = vec![vec![0.0; cfg.k]; cfg.i];
    for i in 0..cfg.i {
        for k in 0..cfg.k {
            let s = i * cfg.k + k;
            let mut inter = 0.0;
            for t in 0..streams {
                if t != s {
                    inter += pow1(s, t);
                }
            }
            sinr1[i][k] = pow1(s, s) / (inter + noise);
        }
    }

    let mut sinr_relay = vec![vec![0.0; streams]; cfg.j];
    for j in 0..cfg.j {
        let mut eff = vec![vec![zero; cfg.m]; cfg.l];
        for l in 0..cfg.l {
            for m in 0..cfg.m {
                let mut acc = real.h_bs_relay[j][(m, l)];
                for i in 0..cfg.i {
                    for n in 0..cfg.n {
                        acc += real.h_ris_relay[i][j][(n, l)]
                            * strat.theta1[i][n]
                            * real.g_bs_ris[i][(m, n)];
                    }
                }
                eff[l][m] = acc;
            }
        }
        let mut alpha = vec![vec![zero; cfg.l]; streams];
        for t in 0..streams {
            for l in 0..cfg.l {
                let mut acc = zero;
                for m in 0..cfg.m {
                    acc += eff[l][m] * strat.g[(m, t)];
                }
                alpha[t][l] = acc;
            }
        }
        for s in 0..streams {
            let nsq: f64 = alpha[s].iter().map(|c| c.norm_sqr()).sum();
            if nsq == 0.0 {
                continue;
            }
            let mut inter = 0.0;
            for t in 0..streams {
                if t == s {
                    continue;
                }
                let mut z = zero;
                for l in 0..cfg.l {
                    z += alpha[s][l].conj() * alpha[t][l];
                }
                inter += z.norm_sqr();
            }
            sinr_relay[j][s] = nsq * nsq / (inter + cfg.sigma_relay_sq * nsq);
        }
    }

    let h2_of = |s: usize, jr: usize| -> Vec<Complex64> {
        let i = s / cfg.k;
        let k = s % cfg.k;
        (0..cfg.l)
            .map(|l| {
                let mut acc = real.h_relay_user[jr][i][k][l];
                for n in 0..cfg.n {
                    acc += real.h_ris_relay[i][jr][(n, l)]
                        * real.h_ris_user[i][k][n]
                        * strat.theta2[i][n];
                }
                acc
            })
            .collect()
    };
    let mut sinr2 = vec![vec![0.0; cfg.k]; cfg.i];
    for i in 0..cfg.i {
        for k in 0..cfg.k {
            let s = i * cfg.k + k;
            let mut sig = 0.0;
            let mut inter = 0.0;
            for t in 0..streams {
                let jr = strat.assign[t / cfg.k];
                let h = h2_of(s, jr);
                let mut z = zero;
                for l in 0..cfg.l {
                    z += h[l] * strat.f[(l, t)];
                }
                if t == s {
                    sig = z.norm_sqr();
                } else {
                    inter += z.norm_sqr();
                }
            }
            sinr2[i][k] = sig / (inter + noise);
        }
    }

    let mut rate = vec![vec![0.0; cfg.k]; cfg.i];
    let mut sum_rate = 0.0;
    for i in 0..cfg.i {
        for k in 0..cfg.k {
            let g = sinr1[i][k] + sinr2[i][k];
            let mut r = (1.0 + g).ln() / std::f64::consts::LN_2;
            if cfg.half_duplex_prelog {
                r *= 0.5;
            }
            rate[i][k] = r;
            sum_rate += r;
        }
    }

    OracleRates {
        sinr1,
        sinr_relay,
        sinr2,
        rate,
        sum_rate,
    }
}

/// Random strategy with continuous phases and a seed-derived assignment.
pub fn random_strategy_any(cfg: &SystemConfig, seed: u64) -> Strategy {
    let mut rng = sample_rng(seed, 1234);
    let mut g = ndarray::Array2::from_shape_fn((cfg.m, cfg.i * cfg.k), |_| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    let mut f = ndarray::Array2::from_shape_fn((cfg.l, cfg.i * cfg.k), |_| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    normalize_beamforming(&mut g, cfg.p_bs_max);
    normalize_beamforming(&mut f, cfg.p_r_max);
    let mut theta = |_: usize| -> Vec<ndarray::Array1<Complex64>> {
        (0..cfg.i)
            .map(|_| {
                ndarray::Array1::from_shape_fn(cfg.n, |_| {
                    Complex64::from_polar(1.0, rng.gen::<f64>() * std::f64::consts::TAU)
                })
            })
            .collect()
    };
    let theta1 = theta(0);
    let theta2 = theta(1);
    let assign = (0..cfg.i).map(|i| (seed as usize + i) % cfg.j).collect();
    Strategy {
        g,
        f,
        theta1,
        theta2,
        assign,
    }
}

/// Apply a within-group user permutation to a realization: user `k` of
/// group `i` moves to slot `perm[i][k]`.
pub fn permute_users(real: &ChannelRealization, perm: &[Vec<usize>]) -> ChannelRealization {
    let mut out = real.clone();
    for (i, p) in perm.iter().enumerate() {
        let reorder_vecs = |src: &Vec<risdf::channel::CVec>| -> Vec<risdf::channel::CVec> {
            let mut dst = src.clone();
            for (k, &to) in p.iter().enumerate() {
                dst[to] = src[k].clone();
            }
            dst
        };
        out.h_bs_user[i] = reorder_vecs(&real.h_bs_user[i]);
        out.h_ris_user[i] = reorder_vecs(&real.h_ris_user[i]);
        for j in 0..real.h_relay_user.len() {
            out.h_relay_user[j][i] = reorder_vecs(&real.h_relay_user[j][i]);
        }
        let mut pos = real.user_pos[i].clone();
        for (k, &to) in p.iter().enumerate() {
            pos[to] = real.user_pos[i][k];
        }
        out.user_pos[i] = pos;
    }
    out
}

/// One-sided paired z-test: returns true when `a` is NOT significantly
/// below `b` at the 5% level (i.e. the hypothesis a >= b survives).
pub fn not_significantly_below(a: &[f64], b: &[f64]) -> bool {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let diffs: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n;
    if mean >= 0.0 {
        return true;
    }
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    if se == 0.0 {
        return mean >= 0.0;
    }
    // one-sided 5% critical value
    mean / se > -1.645
}
