//! Per-sample assembly of GNN inputs and effective-channel linear maps.
//!
//! All complex quantities become real vectors in halves layout
//! `[re..., im...]`. The effective channels are affine in the RIS phase
//! vectors, so each is captured as a constant real matrix plus shift and
//! applied on the tape with `affine_const`.

use std::rc::Rc;

use num_complex::Complex64;

use crate::channel::{CMat, CVec, ChannelRealization};
use crate::config::SystemConfig;
use crate::error::Result;
use crate::phy::{cascaded_bs_user, cascaded_relay_user};
use crate::tape::RealMat;

/// Halves layout for a complex vector.
pub fn cvec_halves(v: &CVec) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; 2 * n];
    for (t, c) in v.iter().enumerate() {
        out[t] = c.re;
        out[n + t] = c.im;
    }
    out
}

fn chalves_from_iter(items: impl Iterator<Item = Complex64> + Clone, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; 2 * len];
    for (t, c) in items.clone().enumerate() {
        out[t] = c.re;
    }
    for (t, c) in items.enumerate() {
        out[len + t] = c.im;
    }
    out
}

/// Real 2R x 2C block matrix [[Re, -Im], [Im, Re]] implementing y = H x for
/// complex H (R x C) on halves-layout vectors.
fn complex_to_real_affine(h: &CMat) -> Rc<RealMat> {
    let (r, c) = h.dim();
    let mut data = vec![0.0; 4 * r * c];
    let cols = 2 * c;
    for ri in 0..r {
        for ci in 0..c {
            let z = h[(ri, ci)];
            data[ri * cols + ci] = z.re;
            data[ri * cols + c + ci] = -z.im;
            data[(r + ri) * cols + ci] = z.im;
            data[(r + ri) * cols + c + ci] = z.re;
        }
    }
    RealMat::new(2 * r, 2 * c, data)
}

/// Root-mean-square magnitude over every channel entry of a realization.
/// Feature inputs are divided by it so the network sees O(1) activations
/// at any geometry scale; the SINR path keeps the raw channels.
pub fn csi_rms(real: &ChannelRealization) -> f64 {
    let mut acc = 0.0;
    let mut count = 0usize;
    let mut eat = |c: &Complex64| {
        acc += c.norm_sqr();
        count += 1;
    };
    real.g_bs_ris.iter().flat_map(|m| m.iter()).for_each(&mut eat);
    real.h_bs_relay.iter().flat_map(|m| m.iter()).for_each(&mut eat);
    real.h_bs_user.iter().flatten().flat_map(|v| v.iter()).for_each(&mut eat);
    real.h_ris_user.iter().flatten().flat_map(|v| v.iter()).for_each(&mut eat);
    real.h_ris_relay.iter().flatten().flat_map(|m| m.iter()).for_each(&mut eat);
    real.h_relay_user
        .iter()
        .flatten()
        .flatten()
        .flat_map(|v| v.iter())
        .for_each(&mut eat);
    let rms = (acc / count.max(1) as f64).sqrt();
    if rms > 0.0 {
        rms
    } else {
        1.0
    }
}

/// Everything the GNN and the SINR graph need from one realization.
/// Feature vectors (`h1_*`, `hr_flat`, `h2_*`) are RMS-normalized; the
/// effective-channel maps (`a1`..`c2`) carry the raw physics.
pub struct GnnInputs {
    /// The normalization constant the feature inputs were divided by.
    pub scale: f64,
    /// Per stream (group-major), per BS antenna: H1 column, len 2(N+1).
    pub h1_cols: Vec<Vec<Vec<f64>>>,
    /// Per stream: vec(H1) (column-major), len 2M(N+1).
    pub h1_vec: Vec<Vec<f64>>,
    /// Flattened relay context (cascade-plus-direct blocks for all (i,j)),
    /// len 2*M*L*I*J.
    pub hr_flat: Vec<f64>,
    /// Per stream, per relay, per relay antenna: H2 column, len 2(N+1).
    pub h2_cols: Vec<Vec<Vec<Vec<f64>>>>,
    /// Per stream, per relay: vec(H2), len 2L(N+1).
    pub h2_vec: Vec<Vec<Vec<f64>>>,
    /// Phase-1 effective channel of stream s: a1[s] * theta1_i + c1[s].
    pub a1: Vec<Rc<RealMat>>,
    pub c1: Vec<Rc<Vec<f64>>>,
    /// Relay receive channel: b_relay[j] * concat(theta1_all) + d_relay[j],
    /// flattened L x M complex in halves layout.
    pub b_relay: Vec<Rc<RealMat>>,
    pub d_relay: Vec<Rc<Vec<f64>>>,
    /// Phase-2 effective channel of stream s from relay j:
    /// a2[s][j] * theta2_i + c2[s][j].
    pub a2: Vec<Vec<Rc<RealMat>>>,
    pub c2: Vec<Vec<Rc<Vec<f64>>>>,
}

impl GnnInputs {
    pub fn build(real: &ChannelRealization, cfg: &SystemConfig) -> Result<Self> {
        let scale = csi_rms(real);
        let inv = 1.0 / scale;
        let streams = cfg.streams();
        let mut h1_cols = Vec::with_capacity(streams);
        let mut h1_vec = Vec::with_capacity(streams);
        let mut a1 = Vec::with_capacity(streams);
        let mut c1 = Vec::with_capacity(streams);
        let mut h2_cols = Vec::with_capacity(streams);
        let mut h2_vec = Vec::with_capacity(streams);
        let mut a2 = Vec::with_capacity(streams);
        let mut c2 = Vec::with_capacity(streams);

        for i in 0..cfg.i {
            for k in 0..cfg.k {
                let h_i = cascaded_bs_user(&real.g_bs_ris[i], &real.h_ris_user[i][k])?;
                let direct = &real.h_bs_user[i][k];
                // H1 column per antenna m: the N cascaded coefficients, then
                // the direct one
                let cols: Vec<Vec<f64>> = (0..cfg.m)
                    .map(|m| {
                        chalves_from_iter(
                            (0..cfg.n)
                                .map(|n| h_i[(m, n)] * inv)
                                .chain(std::iter::once(direct[m] * inv))
                                .collect::<Vec<_>>()
                                .into_iter(),
                            cfg.n + 1,
                        )
                    })
                    .collect();
                // vec(H1): columns stacked in antenna order
                let h_i_ref = &h_i;
                let flat: Vec<Complex64> = (0..cfg.m)
                    .flat_map(|m| {
                        (0..cfg.n)
                            .map(move |n| h_i_ref[(m, n)] * inv)
                            .chain(std::iter::once(direct[m] * inv))
                    })
                    .collect();
                h1_vec.push(chalves_from_iter(flat.into_iter(), cfg.m * (cfg.n + 1)));
                h1_cols.push(cols);
                a1.push(complex_to_real_affine(&h_i));
                c1.push(Rc::new(cvec_halves(direct)));

                let mut per_relay_cols = Vec::with_capacity(cfg.j);
                let mut per_relay_vec = Vec::with_capacity(cfg.j);
                let mut per_relay_a2 = Vec::with_capacity(cfg.j);
                let mut per_relay_c2 = Vec::with_capacity(cfg.j);
                for j in 0..cfg.j {
                    let c_mat = cascaded_relay_user(&real.h_ris_relay[i][j], &real.h_ris_user[i][k])?;
                    let direct2 = &real.h_relay_user[j][i][k];
                    let cols2: Vec<Vec<f64>> = (0..cfg.l)
                        .map(|l| {
                            chalves_from_iter(
                                (0..cfg.n)
                                    .map(|n| c_mat[(l, n)] * inv)
                                    .chain(std::iter::once(direct2[l] * inv))
                                    .collect::<Vec<_>>()
                                    .into_iter(),
                                cfg.n + 1,
                            )
                        })
                        .collect();
                    let c_mat_ref = &c_mat;
                    let flat2: Vec<Complex64> = (0..cfg.l)
                        .flat_map(|l| {
                            (0..cfg.n)
                                .map(move |n| c_mat_ref[(l, n)] * inv)
                                .chain(std::iter::once(direct2[l] * inv))
                        })
                        .collect();
                    per_relay_vec.push(chalves_from_iter(flat2.into_iter(), cfg.l * (cfg.n + 1)));
                    per_relay_cols.push(cols2);
                    per_relay_a2.push(complex_to_real_affine(&c_mat));
                    per_relay_c2.push(Rc::new(cvec_halves(direct2)));
                }
                h2_cols.push(per_relay_cols);
                h2_vec.push(per_relay_vec);
                a2.push(per_relay_a2);
                c2.push(per_relay_c2);
            }
        }

        // relay context: per (i,j) the all-ones-phase cascade plus the
        // direct BS->relay block, M x L each
        let mut hr_complex = Vec::with_capacity(cfg.i * cfg.j * cfg.m * cfg.l);
        for i in 0..cfg.i {
            for j in 0..cfg.j {
                for m in 0..cfg.m {
                    for l in 0..cfg.l {
                        let casc: Complex64 = (0..cfg.n)
                            .map(|n| real.g_bs_ris[i][(m, n)] * real.h_ris_relay[i][j][(n, l)])
                            .sum();
                        hr_complex.push((casc + real.h_bs_relay[j][(m, l)]) * inv);
                    }
                }
            }
        }
        let hr_flat = chalves_from_iter(hr_complex.into_iter(), cfg.i * cfg.j * cfg.m * cfg.l);

        // relay receive channel E_j (L x M) as a linear map of all theta1s
        let mut b_relay = Vec::with_capacity(cfg.j);
        let mut d_relay = Vec::with_capacity(cfg.j);
        for j in 0..cfg.j {
            let lm = cfg.l * cfg.m;
            let in_cols = 2 * cfg.n * cfg.i;
            let mut data = vec![0.0; 2 * lm * in_cols];
            for l in 0..cfg.l {
                for m in 0..cfg.m {
                    let row = l * cfg.m + m;
                    for i in 0..cfg.i {
                        for n in 0..cfg.n {
                            let coef = real.h_ris_relay[i][j][(n, l)] * real.g_bs_ris[i][(m, n)];
                            let col_re = i * 2 * cfg.n + n;
                            let col_im = i * 2 * cfg.n + cfg.n + n;
                            data[row * in_cols + col_re] = coef.re;
                            data[row * in_cols + col_im] = -coef.im;
                            data[(lm + row) * in_cols + col_re] = coef.im;
                            data[(lm + row) * in_cols + col_im] = coef.re;
                        }
                    }
                }
            }
            b_relay.push(RealMat::new(2 * lm, in_cols, data));
            let direct: Vec<Complex64> = (0..cfg.l)
                .flat_map(|l| (0..cfg.m).map(move |m| real.h_bs_relay[j][(m, l)]))
                .collect();
            d_relay.push(Rc::new(chalves_from_iter(direct.into_iter(), lm)));
        }

        Ok(GnnInputs {
            scale,
            h1_cols,
            h1_vec,
            hr_flat,
            h2_cols,
            h2_vec,
            a1,
            c1,
            b_relay,
            d_relay,
            a2,
            c2,
        })
    }
}
