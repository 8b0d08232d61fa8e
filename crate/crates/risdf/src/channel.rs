//! Network geometry and fading-channel generation.
//!
//! Links touching a RIS are Rician with a LoS steering-vector component;
//! everything else is NLoS Rayleigh. All draws are double precision and
//! fully determined by `(cfg, topo, seed)`.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::{dist, NetworkTopology, Pos, SystemConfig};
use crate::error::{Error, Result};

pub type CVec = Array1<Complex64>;
pub type CMat = Array2<Complex64>;

/// One draw of every channel in the network, for all groups/relays/users.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// BS -> RIS_i, M x N, Rician.
    pub g_bs_ris: Vec<CMat>,
    /// BS -> relay j, M x L, Rayleigh.
    pub h_bs_relay: Vec<CMat>,
    /// BS -> user (i,k), length M, Rayleigh.
    pub h_bs_user: Vec<Vec<CVec>>,
    /// RIS_i -> its user k, length N, Rician.
    pub h_ris_user: Vec<Vec<CVec>>,
    /// RIS_i -> relay j, N x L, Rician.
    pub h_ris_relay: Vec<Vec<CMat>>,
    /// Relay j -> user (i,k), length L, Rayleigh.
    pub h_relay_user: Vec<Vec<Vec<CVec>>>,
    /// Sampled user coordinates, per (i,k).
    pub user_pos: Vec<Vec<Pos>>,
}

impl ChannelRealization {
    /// All sampled user positions lie inside their group's disk.
    pub fn positions_within(&self, topo: &NetworkTopology) -> bool {
        self.user_pos.iter().enumerate().all(|(i, per_k)| {
            per_k
                .iter()
                .all(|p| dist(*p, topo.group_center[i]) <= topo.group_radius + 1e-9)
        })
    }

    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        let check = |field: &str, ok: bool, expected: String, actual: String| {
            if ok {
                Ok(())
            } else {
                Err(Error::Shape {
                    field: field.into(),
                    expected,
                    actual,
                })
            }
        };
        check(
            "g_bs_ris",
            self.g_bs_ris.len() == cfg.i,
            cfg.i.to_string(),
            self.g_bs_ris.len().to_string(),
        )?;
        for g in &self.g_bs_ris {
            check(
                "g_bs_ris[i]",
                g.dim() == (cfg.m, cfg.n),
                format!("{}x{}", cfg.m, cfg.n),
                format!("{}x{}", g.dim().0, g.dim().1),
            )?;
        }
        check(
            "h_bs_relay",
            self.h_bs_relay.len() == cfg.j && self.h_bs_relay.iter().all(|h| h.dim() == (cfg.m, cfg.l)),
            format!("{} of {}x{}", cfg.j, cfg.m, cfg.l),
            "mismatch".into(),
        )?;
        check(
            "h_bs_user",
            self.h_bs_user.len() == cfg.i
                && self
                    .h_bs_user
                    .iter()
                    .all(|g| g.len() == cfg.k && g.iter().all(|h| h.len() == cfg.m)),
            format!("{}x{} of len {}", cfg.i, cfg.k, cfg.m),
            "mismatch".into(),
        )?;
        check(
            "h_ris_user",
            self.h_ris_user.len() == cfg.i
                && self
                    .h_ris_user
                    .iter()
                    .all(|g| g.len() == cfg.k && g.iter().all(|h| h.len() == cfg.n)),
            format!("{}x{} of len {}", cfg.i, cfg.k, cfg.n),
            "mismatch".into(),
        )?;
        check(
            "h_ris_relay",
            self.h_ris_relay.len() == cfg.i
                && self
                    .h_ris_relay
                    .iter()
                    .all(|r| r.len() == cfg.j && r.iter().all(|h| h.dim() == (cfg.n, cfg.l))),
            format!("{}x{} of {}x{}", cfg.i, cfg.j, cfg.n, cfg.l),
            "mismatch".into(),
        )?;
        check(
            "h_relay_user",
            self.h_relay_user.len() == cfg.j
                && self.h_relay_user.iter().all(|per_i| {
                    per_i.len() == cfg.i
                        && per_i
                            .iter()
                            .all(|g| g.len() == cfg.k && g.iter().all(|h| h.len() == cfg.l))
                }),
            format!("{}x{}x{} of len {}", cfg.j, cfg.i, cfg.k, cfg.l),
            "mismatch".into(),
        )?;
        check(
            "user_pos",
            self.user_pos.len() == cfg.i && self.user_pos.iter().all(|g| g.len() == cfg.k),
            format!("{}x{}", cfg.i, cfg.k),
            "mismatch".into(),
        )?;
        let finite = self
            .g_bs_ris
            .iter()
            .flat_map(|m| m.iter())
            .chain(self.h_bs_relay.iter().flat_map(|m| m.iter()))
            .chain(self.h_bs_user.iter().flatten().flat_map(|v| v.iter()))
            .chain(self.h_ris_user.iter().flatten().flat_map(|v| v.iter()))
            .chain(self.h_ris_relay.iter().flatten().flat_map(|m| m.iter()))
            .chain(
                self.h_relay_user
                    .iter()
                    .flatten()
                    .flatten()
                    .flat_map(|v| v.iter()),
            )
            .all(|c| c.re.is_finite() && c.im.is_finite());
        if !finite {
            return Err(Error::Domain("non-finite channel entry".into()));
        }
        Ok(())
    }
}

/// Channel fading family. Rician links carry the LoS angle(s): vector links
/// have a departure angle only, matrix links a departure/arrival pair.
#[derive(Debug, Clone, Copy)]
pub enum ChannelKind {
    Rayleigh,
    Rician { aod: f64, aoa: Option<f64> },
}

/// Transmit-side array response: element m is sqrt(beta0) * e^{-j π m sin(angle)}.
pub fn steering_vector(angle: f64, n_elements: usize, beta0: f64) -> CVec {
    let amp = beta0.sqrt();
    Array1::from_iter((0..n_elements).map(|m| {
        Complex64::from_polar(amp, -std::f64::consts::PI * m as f64 * angle.sin())
    }))
}

fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    // unit total variance: each part N(0, 1/2)
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draw one channel of shape `rows x cols` at the given distance.
///
/// Rayleigh: i.i.d. CN(0,1) scaled by d^(-alpha_nlos/2).
/// Rician: sqrt(beta0) d^(-alpha_los/2) * [ sqrt(kappa/(kappa+1)) LoS
///         + sqrt(1/(kappa+1)) CN(0,1) ], LoS the steering outer product.
pub fn sample_channel(
    kind: ChannelKind,
    rows: usize,
    cols: usize,
    distance: f64,
    cfg: &SystemConfig,
    rng: &mut impl Rng,
) -> Result<CMat> {
    if !(distance > 0.0) {
        return Err(Error::Domain(format!(
            "channel distance must be > 0, got {distance}"
        )));
    }
    match kind {
        ChannelKind::Rayleigh => {
            let scale = distance.powf(-cfg.alpha_nlos / 2.0);
            Ok(Array2::from_shape_fn((rows, cols), |_| {
                complex_gaussian(rng) * scale
            }))
        }
        ChannelKind::Rician { aod, aoa } => {
            let kappa = cfg.rician_kappa;
            let los_w = (kappa / (kappa + 1.0)).sqrt();
            let nlos_w = (1.0 / (kappa + 1.0)).sqrt();
            let scale = cfg.beta0.sqrt() * distance.powf(-cfg.alpha_los / 2.0);
            let dep = steering_vector(aod, rows, 1.0);
            let arr = match aoa {
                Some(a) => steering_vector(a, cols, 1.0),
                None => {
                    if cols != 1 {
                        return Err(Error::Domain(
                            "matrix Rician link needs an arrival angle".into(),
                        ));
                    }
                    Array1::from_elem(1, Complex64::new(1.0, 0.0))
                }
            };
            Ok(Array2::from_shape_fn((rows, cols), |(r, c)| {
                let los = dep[r] * arr[c];
                scale * (los_w * los + nlos_w * complex_gaussian(rng))
            }))
        }
    }
}

/// LoS angles for every Rician link. Drawn once per (config seed) and held
/// fixed across all samples of a dataset.
#[derive(Debug, Clone)]
pub struct LinkAngles {
    /// (departure, arrival) for BS -> RIS_i.
    pub bs_ris: Vec<(f64, f64)>,
    /// (departure, arrival) for RIS_i -> relay j.
    pub ris_relay: Vec<Vec<(f64, f64)>>,
    /// departure for RIS_i -> user k.
    pub ris_user: Vec<Vec<f64>>,
}

const ANGLE_STREAM: u64 = u64::MAX;

pub fn link_angles(cfg: &SystemConfig) -> LinkAngles {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(ANGLE_STREAM);
    let draw = |rng: &mut ChaCha8Rng| -> f64 {
        rng.gen_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2)
    };
    let bs_ris = (0..cfg.i).map(|_| (draw(&mut rng), draw(&mut rng))).collect();
    let ris_relay = (0..cfg.i)
        .map(|_| (0..cfg.j).map(|_| (draw(&mut rng), draw(&mut rng))).collect())
        .collect();
    let ris_user = (0..cfg.i)
        .map(|_| (0..cfg.k).map(|_| draw(&mut rng)).collect())
        .collect();
    LinkAngles {
        bs_ris,
        ris_relay,
        ris_user,
    }
}

/// RNG for sample `index` of the dataset seeded by `seed`; distinct
/// samples own distinct, independent sub-streams.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform draws in the disk of `group_radius` around each group center.
pub fn sample_user_positions(
    cfg: &SystemConfig,
    topo: &NetworkTopology,
    rng: &mut impl Rng,
) -> Vec<Vec<Pos>> {
    (0..cfg.i)
        .map(|i| {
            (0..cfg.k)
                .map(|_| {
                    let angle = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
                    let radius = topo.group_radius * rng.gen::<f64>().sqrt();
                    [
                        topo.group_center[i][0] + radius * angle.cos(),
                        topo.group_center[i][1] + radius * angle.sin(),
                    ]
                })
                .collect()
        })
        .collect()
}

/// Sample every channel of one realization. User positions are redrawn
/// here, so each realization carries its own geometry draw.
pub fn generate_realization(
    cfg: &SystemConfig,
    topo: &NetworkTopology,
    angles: &LinkAngles,
    rng: &mut impl Rng,
) -> Result<ChannelRealization> {
    let user_pos = sample_user_positions(cfg, topo, rng);

    let mut g_bs_ris = Vec::with_capacity(cfg.i);
    for i in 0..cfg.i {
        let (aod, aoa) = angles.bs_ris[i];
        g_bs_ris.push(sample_channel(
            ChannelKind::Rician { aod, aoa: Some(aoa) },
            cfg.m,
            cfg.n,
            dist(topo.bs_pos, topo.ris_pos[i]),
            cfg,
            rng,
        )?);
    }

    let mut h_bs_relay = Vec::with_capacity(cfg.j);
    for j in 0..cfg.j {
        h_bs_relay.push(sample_channel(
            ChannelKind::Rayleigh,
            cfg.m,
            cfg.l,
            dist(topo.bs_pos, topo.relay_pos[j]),
            cfg,
            rng,
        )?);
    }

    let mut h_bs_user = Vec::with_capacity(cfg.i);
    for i in 0..cfg.i {
        let mut per_k = Vec::with_capacity(cfg.k);
        for k in 0..cfg.k {
            let m = sample_channel(
                ChannelKind::Rayleigh,
                cfg.m,
                1,
                dist(topo.bs_pos, user_pos[i][k]),
                cfg,
                rng,
            )?;
            per_k.push(m.column(0).to_owned());
        }
        h_bs_user.push(per_k);
    }

    let mut h_ris_user = Vec::with_capacity(cfg.i);
    for i in 0..cfg.i {
        let mut per_k = Vec::with_capacity(cfg.k);
        for k in 0..cfg.k {
            let m = sample_channel(
                ChannelKind::Rician {
                    aod: angles.ris_user[i][k],
                    aoa: None,
                },
                cfg.n,
                1,
                dist(topo.ris_pos[i], user_pos[i][k]),
                cfg,
                rng,
            )?;
            per_k.push(m.column(0).to_owned());
        }
        h_ris_user.push(per_k);
    }

    let mut h_ris_relay = Vec::with_capacity(cfg.i);
    for i in 0..cfg.i {
        let mut per_j = Vec::with_capacity(cfg.j);
        for j in 0..cfg.j {
            let (aod, aoa) = angles.ris_relay[i][j];
            per_j.push(sample_channel(
                ChannelKind::Rician { aod, aoa: Some(aoa) },
                cfg.n,
                cfg.l,
                dist(topo.ris_pos[i], topo.relay_pos[j]),
                cfg,
                rng,
            )?);
        }
        h_ris_relay.push(per_j);
    }

    let mut h_relay_user = Vec::with_capacity(cfg.j);
    for j in 0..cfg.j {
        let mut per_i = Vec::with_capacity(cfg.i);
        for i in 0..cfg.i {
            let mut per_k = Vec::with_capacity(cfg.k);
            for k in 0..cfg.k {
                let m = sample_channel(
                    ChannelKind::Rayleigh,
                    cfg.l,
                    1,
                    dist(topo.relay_pos[j], user_pos[i][k]),
                    cfg,
                    rng,
                )?;
                per_k.push(m.column(0).to_owned());
            }
            per_i.push(per_k);
        }
        h_relay_user.push(per_i);
    }

    Ok(ChannelRealization {
        g_bs_ris,
        h_bs_relay,
        h_bs_user,
        h_ris_user,
        h_ris_relay,
        h_relay_user,
        user_pos,
    })
}

/// Generate `count` realizations on per-sample sub-streams of `cfg.seed`.
pub fn generate_dataset(
    cfg: &SystemConfig,
    topo: &NetworkTopology,
    count: usize,
    stream_offset: u64,
) -> Result<Vec<ChannelRealization>> {
    let angles = link_angles(cfg);
    (0..count)
        .map(|s| {
            let mut rng = sample_rng(cfg.seed, stream_offset + s as u64);
            generate_realization(cfg, topo, &angles, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ThresholdSpec;

    fn desk() -> (SystemConfig, NetworkTopology) {
        (SystemConfig::desk_scale(), NetworkTopology::desk_scale())
    }

    #[test]
    fn zero_radius_puts_users_at_center() {
        let (cfg, mut topo) = desk();
        topo.group_radius = 1e-300; // degenerate disk
        let mut rng = sample_rng(3, 0);
        let pos = sample_user_positions(&cfg, &topo, &mut rng);
        for i in 0..cfg.i {
            for k in 0..cfg.k {
                assert!(dist(pos[i][k], topo.group_center[i]) < 1e-140);
            }
        }
    }

    #[test]
    fn positions_stay_in_disk() {
        let (mut cfg, mut topo) = desk();
        cfg.k = 50;
        topo.group_center[0] = [200.0, 75.0];
        topo.group_radius = 10.0;
        let mut rng = sample_rng(5, 1);
        let pos = sample_user_positions(&cfg, &topo, &mut rng);
        for p in &pos[0] {
            assert!(dist(*p, [200.0, 75.0]) <= 10.0 + 1e-12);
        }
    }

    #[test]
    fn disk_mean_radius_is_two_thirds() {
        // E[r] over a uniform disk of radius R is 2R/3; Monte Carlo to 1%.
        let (mut cfg, mut topo) = desk();
        cfg.i = 1;
        cfg.k = 1;
        topo.group_radius = 10.0;
        let center = topo.group_center[0];
        let mut rng = sample_rng(11, 0);
        let draws = 100_000;
        let mut sum = 0.0;
        for _ in 0..draws {
            let pos = sample_user_positions(&cfg, &topo, &mut rng);
            sum += dist(pos[0][0], center);
        }
        let mean = sum / draws as f64;
        let expect = 20.0 / 3.0;
        assert!(
            (mean - expect).abs() / expect < 0.01,
            "mean {mean} vs {expect}"
        );
    }

    #[test]
    fn steering_vector_trivial_angles() {
        let v = steering_vector(0.0, 4, 1.0);
        for e in v.iter() {
            assert!((e - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
        let v = steering_vector(std::f64::consts::FRAC_PI_2, 2, 1.0);
        assert!((v[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((v[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn steering_vector_matches_elementwise_formula() {
        let angle = 0.3;
        let beta0 = 1e-3;
        let v = steering_vector(angle, 8, beta0);
        for (m, e) in v.iter().enumerate() {
            // independent per-element evaluation
            let phase = -std::f64::consts::PI * m as f64 * angle.sin();
            let want = Complex64::new(
                beta0.sqrt() * phase.cos(),
                beta0.sqrt() * phase.sin(),
            );
            assert!((e - want).norm() < 1e-15);
        }
    }

    #[test]
    fn huge_kappa_collapses_to_los() {
        let (mut cfg, _) = desk();
        cfg.rician_kappa = 1e12;
        cfg.beta0 = 1e-3;
        let mut rng = sample_rng(7, 0);
        let d = 3.0;
        let got = sample_channel(
            ChannelKind::Rician {
                aod: 0.4,
                aoa: Some(-0.2),
            },
            3,
            2,
            d,
            &cfg,
            &mut rng,
        )
        .unwrap();
        let dep = steering_vector(0.4, 3, 1.0);
        let arr = steering_vector(-0.2, 2, 1.0);
        let scale = cfg.beta0.sqrt() * d.powf(-cfg.alpha_los / 2.0);
        for r in 0..3 {
            for c in 0..2 {
                let los = scale * dep[r] * arr[c];
                assert!((got[(r, c)] - los).norm() / los.norm() < 1e-5);
            }
        }
    }

    #[test]
    fn rayleigh_unit_variance_at_unit_distance() {
        let (mut cfg, _) = desk();
        cfg.alpha_nlos = 2.0;
        let mut rng = sample_rng(13, 0);
        let draws = 100_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let h = sample_channel(ChannelKind::Rayleigh, 1, 1, 1.0, &cfg, &mut rng).unwrap();
            acc += h[(0, 0)].norm_sqr();
        }
        let var = acc / draws as f64;
        assert!((var - 1.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn empirical_k_factor_matches_kappa() {
        let (cfg, _) = desk(); // kappa = 10
        let mut rng = sample_rng(17, 0);
        let d = 2.0f64;
        let aod = 0.25;
        let scale = cfg.beta0.sqrt() * d.powf(-cfg.alpha_los / 2.0);
        let los = steering_vector(aod, 1, 1.0)[0] * scale * (cfg.rician_kappa / (cfg.rician_kappa + 1.0)).sqrt();
        let draws = 100_000;
        let mut scat_pow = 0.0;
        for _ in 0..draws {
            let h = sample_channel(
                ChannelKind::Rician { aod, aoa: None },
                1,
                1,
                d,
                &cfg,
                &mut rng,
            )
            .unwrap();
            scat_pow += (h[(0, 0)] - los).norm_sqr();
        }
        scat_pow /= draws as f64;
        let k_emp = los.norm_sqr() / scat_pow;
        assert!(
            (k_emp - cfg.rician_kappa).abs() / cfg.rician_kappa < 0.05,
            "K-factor {k_emp}"
        );
    }

    #[test]
    fn nonpositive_distance_rejected() {
        let (cfg, _) = desk();
        let mut rng = sample_rng(0, 0);
        let r = sample_channel(ChannelKind::Rayleigh, 1, 1, 0.0, &cfg, &mut rng);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn realization_shapes_full_scale() {
        let cfg = SystemConfig::full_scale();
        let topo = NetworkTopology::loc1();
        let angles = link_angles(&cfg);
        let mut rng = sample_rng(cfg.seed, 0);
        let real = generate_realization(&cfg, &topo, &angles, &mut rng).unwrap();
        assert_eq!(real.g_bs_ris[0].dim(), (8, 50));
        real.validate(&cfg).unwrap();
    }

    #[test]
    fn minimal_dims_all_finite() {
        let cfg = SystemConfig {
            m: 1,
            n: 1,
            l: 1,
            j: 1,
            i: 1,
            k: 1,
            rate_th_user: ThresholdSpec::Uniform(1.0),
            rate_th_group: ThresholdSpec::Uniform(1.0),
            ..SystemConfig::desk_scale()
        };
        let topo = NetworkTopology::desk_scale().adapt(&cfg).unwrap();
        let angles = link_angles(&cfg);
        let mut rng = sample_rng(cfg.seed, 0);
        let real = generate_realization(&cfg, &topo, &angles, &mut rng).unwrap();
        real.validate(&cfg).unwrap();
    }

    #[test]
    fn positions_lie_in_group_disks() {
        let (cfg, topo) = desk();
        for real in generate_dataset(&cfg, &topo, 5, 0).unwrap() {
            assert!(real.positions_within(&topo));
        }
    }

    #[test]
    fn same_seed_bit_identical() {
        let (cfg, topo) = desk();
        let a = generate_dataset(&cfg, &topo, 3, 0).unwrap();
        let b = generate_dataset(&cfg, &topo, 3, 0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn distance_scaling_law() {
        // doubling distance multiplies mean power by 2^-alpha, within 3 sigma
        let (cfg, _) = desk(); // alpha_nlos = 3
        let draws = 40_000;
        let mut rng = sample_rng(23, 0);
        let mut p1 = 0.0;
        let mut p2 = 0.0;
        for _ in 0..draws {
            p1 += sample_channel(ChannelKind::Rayleigh, 1, 1, 5.0, &cfg, &mut rng)
                .unwrap()[(0, 0)]
                .norm_sqr();
            p2 += sample_channel(ChannelKind::Rayleigh, 1, 1, 10.0, &cfg, &mut rng)
                .unwrap()[(0, 0)]
                .norm_sqr();
        }
        p1 /= draws as f64;
        p2 /= draws as f64;
        let ratio = p2 / p1;
        let expect = 2f64.powf(-cfg.alpha_nlos);
        // exponential power has std = mean, so the ratio estimator's sigma
        // is about expect * sqrt(2/draws)
        let sigma = expect * (2.0 / draws as f64).sqrt();
        assert!(
            (ratio - expect).abs() < 3.0 * sigma,
            "ratio {ratio} expect {expect}"
        );
    }

    #[test]
    fn scattered_part_mean_vanishes() {
        let (cfg, _) = desk();
        let d = 2.0f64;
        let aod = 0.1;
        let scale = cfg.beta0.sqrt() * d.powf(-cfg.alpha_los / 2.0);
        let los = steering_vector(aod, 1, 1.0)[0]
            * scale
            * (cfg.rician_kappa / (cfg.rician_kappa + 1.0)).sqrt();
        let draws = 50_000;
        let mut rng = sample_rng(29, 0);
        let mut mean = Complex64::new(0.0, 0.0);
        for _ in 0..draws {
            let h = sample_channel(
                ChannelKind::Rician { aod, aoa: None },
                1,
                1,
                d,
                &cfg,
                &mut rng,
            )
            .unwrap();
            mean += h[(0, 0)] - los;
        }
        mean /= draws as f64;
        // per-draw std of the scattered part
        let std = scale * (1.0 / (cfg.rician_kappa + 1.0)).sqrt();
        assert!(mean.norm() < 3.0 * std / (draws as f64).sqrt());
    }

    #[test]
    fn angles_fixed_across_samples() {
        let (cfg, _) = desk();
        let a1 = link_angles(&cfg);
        let a2 = link_angles(&cfg);
        assert_eq!(a1.bs_ris, a2.bs_ris);
        let other = SystemConfig {
            seed: cfg.seed + 1,
            ..cfg
        };
        let a3 = link_angles(&other);
        assert_ne!(a1.bs_ris, a3.bs_ris);
    }
}
