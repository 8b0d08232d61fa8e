//! Strategy evaluation: cascaded channels, per-phase SINRs, relay decode
//! SINRs, MRC rates, constraint checks and relay selection.
//!
//! Everything here is a pure function of `(realization, strategy, config)`.

use ndarray::{Array1, Array2, Array3};
use num_complex::Complex64;

use crate::channel::{CMat, CVec, ChannelRealization};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::phases;

/// A complete decision tuple. BS beamformers are the columns of `g`
/// (group-major stream order); `f` holds one relay beamformer per stream,
/// used by the relay its group is assigned to.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    /// M x (I*K).
    pub g: CMat,
    /// L x (I*K).
    pub f: CMat,
    /// Phase-1 RIS coefficients, one length-N vector per RIS.
    pub theta1: Vec<CVec>,
    /// Phase-2 RIS coefficients.
    pub theta2: Vec<CVec>,
    /// Relay serving each group.
    pub assign: Vec<usize>,
}

/// Strategy decision variables without a relay assignment; the input to
/// `select_relays`.
#[derive(Debug, Clone)]
pub struct StrategyVars {
    pub g: CMat,
    pub f: CMat,
    pub theta1: Vec<CVec>,
    pub theta2: Vec<CVec>,
}

impl Strategy {
    pub fn without_assignment(&self) -> StrategyVars {
        StrategyVars {
            g: self.g.clone(),
            f: self.f.clone(),
            theta1: self.theta1.clone(),
            theta2: self.theta2.clone(),
        }
    }

    /// Column indices of `f` forwarded by relay `j`.
    pub fn streams_of_relay(&self, j: usize, cfg: &SystemConfig) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, &a) in self.assign.iter().enumerate() {
            if a == j {
                for k in 0..cfg.k {
                    out.push(cfg.stream_index(i, k));
                }
            }
        }
        out
    }

    /// Relay beamformer matrix F_j (columns of assigned streams).
    pub fn f_for_relay(&self, j: usize, cfg: &SystemConfig) -> CMat {
        let cols = self.streams_of_relay(j, cfg);
        let mut out = Array2::zeros((self.f.dim().0, cols.len()));
        for (c, &s) in cols.iter().enumerate() {
            out.column_mut(c).assign(&self.f.column(s));
        }
        out
    }

    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        if self.g.dim() != (cfg.m, cfg.streams()) {
            return Err(Error::shape(
                "strategy.g",
                format!("{}x{}", cfg.m, cfg.streams()),
                format!("{}x{}", self.g.dim().0, self.g.dim().1),
            ));
        }
        if self.f.dim() != (cfg.l, cfg.streams()) {
            return Err(Error::shape(
                "strategy.f",
                format!("{}x{}", cfg.l, cfg.streams()),
                format!("{}x{}", self.f.dim().0, self.f.dim().1),
            ));
        }
        for (name, set) in [("theta1", &self.theta1), ("theta2", &self.theta2)] {
            if set.len() != cfg.i || set.iter().any(|t| t.len() != cfg.n) {
                return Err(Error::shape(name, format!("{} of len {}", cfg.i, cfg.n), "mismatch"));
            }
            for t in set.iter().flat_map(|v| v.iter()) {
                if (t.norm() - 1.0).abs() > 1e-9 {
                    return Err(Error::Domain(format!(
                        "{name} entry modulus {} deviates from 1",
                        t.norm()
                    )));
                }
            }
        }
        if self.assign.len() != cfg.i || self.assign.iter().any(|&a| a >= cfg.j) {
            return Err(Error::Domain("relay assignment out of range".into()));
        }
        let p_bs = trace_power(&self.g);
        if p_bs > cfg.p_bs_max * (1.0 + 1e-9) {
            return Err(Error::Domain(format!(
                "BS power {p_bs} exceeds budget {}",
                cfg.p_bs_max
            )));
        }
        let p_r = trace_power(&self.f);
        if p_r > cfg.p_r_max * (1.0 + 1e-9) {
            return Err(Error::Domain(format!(
                "relay power {p_r} exceeds budget {}",
                cfg.p_r_max
            )));
        }
        Ok(())
    }
}

/// Per-user SINRs, rates and satisfaction flags for one evaluation.
#[derive(Debug, Clone)]
pub struct RateReport {
    pub sinr_phase1: Vec<Vec<f64>>,
    pub sinr_phase2: Vec<Vec<f64>>,
    /// Matched-filter decode SINR of every stream at every relay, [J][I*K].
    pub sinr_relay: Vec<Vec<f64>>,
    pub rate: Vec<Vec<f64>>,
    pub sum_rate: f64,
    pub satisfied_user: Vec<Vec<bool>>,
    pub satisfied_group: Vec<bool>,
    pub decode_ok: Vec<Vec<bool>>,
    pub assign: Vec<usize>,
}

impl RateReport {
    /// All streams decode at the relay their group is assigned to.
    pub fn decode_feasible(&self, cfg: &SystemConfig) -> bool {
        (0..cfg.i).all(|i| (0..cfg.k).all(|k| self.decode_ok[self.assign[i]][cfg.stream_index(i, k)]))
    }

    pub fn satisfaction_fraction(&self) -> f64 {
        let total: usize = self.satisfied_user.iter().map(Vec::len).sum();
        let ok: usize = self
            .satisfied_user
            .iter()
            .flatten()
            .filter(|&&s| s)
            .count();
        ok as f64 / total.max(1) as f64
    }

    /// CSV rows: sample_id,group,user,sinr1,sinr_relay,sinr2,rate,satisfied
    pub fn csv_rows(&self, sample_id: usize, cfg: &SystemConfig) -> Vec<String> {
        let mut rows = Vec::new();
        for i in 0..cfg.i {
            for k in 0..cfg.k {
                let s = cfg.stream_index(i, k);
                rows.push(format!(
                    "{},{},{},{:.10e},{:.10e},{:.10e},{:.10e},{}",
                    sample_id,
                    i,
                    k,
                    self.sinr_phase1[i][k],
                    self.sinr_relay[self.assign[i]][s],
                    self.sinr_phase2[i][k],
                    self.rate[i][k],
                    self.satisfied_user[i][k] as u8
                ));
            }
        }
        rows
    }

    pub const CSV_HEADER: &'static str = "sample_id,group,user,sinr1,sinr_relay,sinr2,rate,satisfied";
}

pub fn trace_power(m: &CMat) -> f64 {
    m.iter().map(|c| c.norm_sqr()).sum()
}

/// Scale all columns so the trace power equals `budget` exactly. A zero
/// input is returned unchanged and flagged degenerate.
pub fn normalize_beamforming(m: &mut CMat, budget: f64) -> bool {
    let total = trace_power(m);
    if total == 0.0 {
        return false;
    }
    let s = (budget / total).sqrt();
    m.mapv_inplace(|c| c * s);
    true
}

/// H_i = G diag(h): column n of the BS->RIS matrix scaled by the n-th
/// RIS->user coefficient.
pub fn cascaded_bs_user(g_bs_ris: &CMat, h_ris_user: &CVec) -> Result<CMat> {
    let (m, n) = g_bs_ris.dim();
    if h_ris_user.len() != n {
        return Err(Error::shape("h_ris_user", n, h_ris_user.len()));
    }
    Ok(Array2::from_shape_fn((m, n), |(r, c)| {
        g_bs_ris[(r, c)] * h_ris_user[c]
    }))
}

/// BS->RIS->relay cascade coefficients, indexed [l][m][n]: applying theta
/// over n yields the L x M reflected component of the relay's receive
/// channel.
pub fn cascaded_bs_relay(h_ris_relay: &CMat, g_bs_ris: &CMat) -> Result<Array3<Complex64>> {
    let (n, l) = h_ris_relay.dim();
    let (m, n2) = g_bs_ris.dim();
    if n != n2 {
        return Err(Error::shape("h_ris_relay vs g_bs_ris", n2, n));
    }
    Ok(Array3::from_shape_fn((l, m, n), |(li, mi, ni)| {
        h_ris_relay[(ni, li)] * g_bs_ris[(mi, ni)]
    }))
}

/// Contract a BS->RIS->relay cascade with theta: out[l,m] = sum_n theta[n]*casc[l,m,n].
pub fn apply_relay_cascade(casc: &Array3<Complex64>, theta: &CVec) -> CMat {
    let (l, m, n) = casc.dim();
    Array2::from_shape_fn((l, m), |(li, mi)| {
        (0..n).map(|ni| theta[ni] * casc[(li, mi, ni)]).sum()
    })
}

/// C^i_{j,k}: column n is the n-th row of the RIS->relay matrix scaled by
/// the n-th RIS->user coefficient (L x N).
pub fn cascaded_relay_user(h_ris_relay: &CMat, h_ris_user: &CVec) -> Result<CMat> {
    let (n, l) = h_ris_relay.dim();
    if h_ris_user.len() != n {
        return Err(Error::shape("h_ris_user", n, h_ris_user.len()));
    }
    Ok(Array2::from_shape_fn((l, n), |(li, ni)| {
        h_ris_relay[(ni, li)] * h_ris_user[ni]
    }))
}

/// Phase-1 effective channel of user (i,k): H_i theta1 + direct.
pub fn effective_channel_phase1(
    real: &ChannelRealization,
    theta1: &CVec,
    i: usize,
    k: usize,
) -> Result<CVec> {
    let h_i = cascaded_bs_user(&real.g_bs_ris[i], &real.h_ris_user[i][k])?;
    let m = h_i.dim().0;
    if theta1.len() != h_i.dim().1 {
        return Err(Error::shape("theta1", h_i.dim().1, theta1.len()));
    }
    Ok(Array1::from_shape_fn(m, |r| {
        let casc: Complex64 = (0..h_i.dim().1).map(|c| h_i[(r, c)] * theta1[c]).sum();
        casc + real.h_bs_user[i][k][r]
    }))
}

/// Effective receive channel of relay j in phase 1 (L x M): the direct
/// BS->relay term plus reflections from every RIS.
pub fn relay_effective_channel(
    real: &ChannelRealization,
    theta1: &[CVec],
    j: usize,
) -> Result<CMat> {
    let (m, l) = real.h_bs_relay[j].dim();
    let mut eff = Array2::from_shape_fn((l, m), |(li, mi)| real.h_bs_relay[j][(mi, li)]);
    for (i, theta) in theta1.iter().enumerate() {
        let casc = cascaded_bs_relay(&real.h_ris_relay[i][j], &real.g_bs_ris[i])?;
        eff = eff + apply_relay_cascade(&casc, theta);
    }
    Ok(eff)
}

/// Phase-2 effective channel of user (i,k) from relay j: C theta2 + direct.
pub fn effective_channel_phase2(
    real: &ChannelRealization,
    theta2: &CVec,
    i: usize,
    k: usize,
    j: usize,
) -> Result<CVec> {
    let c = cascaded_relay_user(&real.h_ris_relay[i][j], &real.h_ris_user[i][k])?;
    let (l, n) = c.dim();
    if theta2.len() != n {
        return Err(Error::shape("theta2", n, theta2.len()));
    }
    Ok(Array1::from_shape_fn(l, |li| {
        let casc: Complex64 = (0..n).map(|ni| c[(li, ni)] * theta2[ni]).sum();
        casc + real.h_relay_user[j][i][k][li]
    }))
}

fn inner_t(a: &CVec, b: &CVec) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn inner_h(a: &CVec, b: &CVec) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Phase-1 SINR of user (i,k): its own stream power over the power of all
/// other BS streams (every group) plus noise.
pub fn sinr_phase1(
    real: &ChannelRealization,
    strat: &Strategy,
    i: usize,
    k: usize,
    cfg: &SystemConfig,
) -> Result<f64> {
    let h = effective_channel_phase1(real, &strat.theta1[i], i, k)?;
    let own = cfg.stream_index(i, k);
    let mut sig = 0.0;
    let mut inter = 0.0;
    for s in 0..cfg.streams() {
        let p = inner_t(&h, &strat.g.column(s).to_owned()).norm_sqr();
        if s == own {
            sig = p;
        } else {
            inter += p;
        }
    }
    let noise = if cfg.noiseless_sinr { 0.0 } else { cfg.sigma_user_sq };
    let denom = inter + noise;
    if denom == 0.0 {
        return Ok(if sig == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(sig / denom)
}

/// Matched-filter decode SINR of stream `s` at relay `j`. A zero filter
/// vector means the stream cannot be decoded and yields 0.
pub fn relay_decode_sinr(
    real: &ChannelRealization,
    strat: &Strategy,
    j: usize,
    s: usize,
    cfg: &SystemConfig,
) -> Result<f64> {
    let eff = relay_effective_channel(real, &strat.theta1, j)?;
    let alphas: Vec<CVec> = (0..cfg.streams())
        .map(|t| {
            let g = strat.g.column(t);
            Array1::from_shape_fn(cfg.l, |li| {
                (0..cfg.m).map(|mi| eff[(li, mi)] * g[mi]).sum()
            })
        })
        .collect();
    Ok(decode_sinr_from_alphas(&alphas, s, cfg.sigma_relay_sq))
}

pub(crate) fn decode_sinr_from_alphas(alphas: &[CVec], s: usize, sigma_sq: f64) -> f64 {
    let nsq: f64 = alphas[s].iter().map(|c| c.norm_sqr()).sum();
    if nsq == 0.0 {
        return 0.0;
    }
    let mut inter = 0.0;
    for (t, a) in alphas.iter().enumerate() {
        if t != s {
            inter += inner_h(&alphas[s], a).norm_sqr();
        }
    }
    nsq * nsq / (inter + sigma_sq * nsq)
}

/// Phase-2 SINR of user (i,k): the stream forwarded by its assigned relay
/// over interference from every stream forwarded by every relay, plus noise.
pub fn sinr_phase2(
    real: &ChannelRealization,
    strat: &Strategy,
    i: usize,
    k: usize,
    cfg: &SystemConfig,
) -> Result<f64> {
    // effective channel from each relay, through this user's own RIS
    let mut h_from = Vec::with_capacity(cfg.j);
    for j in 0..cfg.j {
        h_from.push(effective_channel_phase2(real, &strat.theta2[i], i, k, j)?);
    }
    let own = cfg.stream_index(i, k);
    let mut sig = 0.0;
    let mut inter = 0.0;
    for i2 in 0..cfg.i {
        let relay = strat.assign[i2];
        for k2 in 0..cfg.k {
            let s = cfg.stream_index(i2, k2);
            let p = inner_t(&h_from[relay], &strat.f.column(s).to_owned()).norm_sqr();
            if s == own {
                sig = p;
            } else {
                inter += p;
            }
        }
    }
    let noise = if cfg.noiseless_sinr { 0.0 } else { cfg.sigma_user_sq };
    let denom = inter + noise;
    if denom == 0.0 {
        return Ok(if sig == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(sig / denom)
}

pub fn rate_from_sinr(gamma: f64, cfg: &SystemConfig) -> f64 {
    let r = (1.0 + gamma).log2();
    if cfg.half_duplex_prelog {
        0.5 * r
    } else {
        r
    }
}

/// Full evaluation of a strategy on one realization.
pub fn evaluate_strategy(
    real: &ChannelRealization,
    strat: &Strategy,
    cfg: &SystemConfig,
) -> Result<RateReport> {
    let mut sinr1 = vec![vec![0.0; cfg.k]; cfg.i];
    let mut sinr2 = vec![vec![0.0; cfg.k]; cfg.i];
    let mut rate = vec![vec![0.0; cfg.k]; cfg.i];
    let mut satisfied_user = vec![vec![false; cfg.k]; cfg.i];
    let mut satisfied_group = vec![false; cfg.i];
    let mut sinr_relay = vec![vec![0.0; cfg.streams()]; cfg.j];
    let mut decode_ok = vec![vec![false; cfg.streams()]; cfg.j];
    let mut sum_rate = 0.0;

    for j in 0..cfg.j {
        let eff = relay_effective_channel(real, &strat.theta1, j)?;
        let alphas: Vec<CVec> = (0..cfg.streams())
            .map(|t| {
                let g = strat.g.column(t);
                Array1::from_shape_fn(cfg.l, |li| {
                    (0..cfg.m).map(|mi| eff[(li, mi)] * g[mi]).sum()
                })
            })
            .collect();
        for s in 0..cfg.streams() {
            let v = decode_sinr_from_alphas(&alphas, s, cfg.sigma_relay_sq);
            sinr_relay[j][s] = v;
            decode_ok[j][s] = v >= cfg.gamma_relay_th;
        }
    }

    for i in 0..cfg.i {
        let mut group_ok = true;
        for k in 0..cfg.k {
            let g1 = sinr_phase1(real, strat, i, k, cfg)?;
            let g2 = sinr_phase2(real, strat, i, k, cfg)?;
            let r = rate_from_sinr(g1 + g2, cfg);
            sinr1[i][k] = g1;
            sinr2[i][k] = g2;
            rate[i][k] = r;
            sum_rate += r;
            satisfied_user[i][k] = r >= cfg.rate_th_user_at(i, k);
            if r < cfg.rate_th_group_at(i) {
                group_ok = false;
            }
        }
        satisfied_group[i] = group_ok;
    }

    Ok(RateReport {
        sinr_phase1: sinr1,
        sinr_phase2: sinr2,
        sinr_relay,
        rate,
        sum_rate,
        satisfied_user,
        satisfied_group,
        decode_ok,
        assign: strat.assign.clone(),
    })
}

/// Per-constraint outcome of the feasibility check.
#[derive(Debug, Clone)]
pub struct ConstraintReport {
    /// BS power: satisfied flag and slack P_bs_max - tr(GG^H).
    pub c1: (bool, f64),
    /// Relay power: slack P_r_max - sum_j tr(F_j F_j^H).
    pub c2: (bool, f64),
    /// Relay decode: min slack of gamma_R - gamma_th over assigned streams.
    pub c3: (bool, f64),
    /// Rate demands: min slack over users, against the tighter of the
    /// user and group thresholds.
    pub c4: (bool, f64),
    /// Users violating C4.
    pub c4_violations: Vec<(usize, usize)>,
    /// Discrete phases: every theta entry within 1e-9 of an alphabet point.
    pub c5: (bool, f64),
}

impl ConstraintReport {
    pub fn all_satisfied(&self) -> bool {
        self.c1.0 && self.c2.0 && self.c3.0 && self.c4.0 && self.c5.0
    }
}

pub fn check_constraints(
    real: &ChannelRealization,
    strat: &Strategy,
    cfg: &SystemConfig,
) -> Result<ConstraintReport> {
    let report = evaluate_strategy(real, strat, cfg)?;
    let tol = 1e-9;

    let p_bs = trace_power(&strat.g);
    let c1_slack = cfg.p_bs_max - p_bs;
    let c1 = (c1_slack >= -tol * cfg.p_bs_max, c1_slack);

    let p_r = trace_power(&strat.f);
    let c2_slack = cfg.p_r_max - p_r;
    let c2 = (c2_slack >= -tol * cfg.p_r_max, c2_slack);

    let mut c3_slack = f64::INFINITY;
    for i in 0..cfg.i {
        for k in 0..cfg.k {
            let s = cfg.stream_index(i, k);
            let slack = report.sinr_relay[strat.assign[i]][s] - cfg.gamma_relay_th;
            c3_slack = c3_slack.min(slack);
        }
    }
    let c3 = (c3_slack >= 0.0, c3_slack);

    let mut c4_slack = f64::INFINITY;
    let mut c4_violations = Vec::new();
    for i in 0..cfg.i {
        for k in 0..cfg.k {
            let th = cfg.rate_th_user_at(i, k).max(cfg.rate_th_group_at(i));
            let slack = report.rate[i][k] - th;
            c4_slack = c4_slack.min(slack);
            if slack < 0.0 {
                c4_violations.push((i, k));
            }
        }
    }
    let c4 = (c4_violations.is_empty(), c4_slack);

    let mut c5_worst = 0.0f64;
    for t in strat
        .theta1
        .iter()
        .chain(strat.theta2.iter())
        .flat_map(|v| v.iter())
    {
        let nearest = phases::phase_alphabet(cfg.b)
            .into_iter()
            .map(|a| (t - a).norm())
            .fold(f64::INFINITY, f64::min);
        c5_worst = c5_worst.max(nearest);
    }
    let c5 = (c5_worst <= tol, c5_worst);

    Ok(ConstraintReport {
        c1,
        c2,
        c3,
        c4,
        c4_violations,
        c5,
    })
}

/// All group->relay assignment vectors in lexicographic order.
pub fn enumerate_assignments(groups: usize, relays: usize) -> Result<Vec<Vec<usize>>> {
    let total = (relays as f64).powi(groups as i32);
    if total > 4096.0 {
        return Err(Error::Guard(format!(
            "assignment enumeration J^I = {total} exceeds 4096"
        )));
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut cur = vec![0usize; groups];
    loop {
        out.push(cur.clone());
        let mut pos = groups;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            cur[pos] += 1;
            if cur[pos] < relays {
                break;
            }
            cur[pos] = 0;
        }
    }
}

/// Enumerate every assignment, evaluate each, and return the best:
/// decode-feasible candidates are preferred; among those the sum rate is
/// maximized; ties resolve to the lexicographically smallest assignment.
pub fn select_relays(
    real: &ChannelRealization,
    vars: &StrategyVars,
    cfg: &SystemConfig,
) -> Result<(Vec<usize>, RateReport)> {
    let mut best: Option<(bool, f64, Vec<usize>, RateReport)> = None;
    for assign in enumerate_assignments(cfg.i, cfg.j)? {
        let strat = Strategy {
            g: vars.g.clone(),
            f: vars.f.clone(),
            theta1: vars.theta1.clone(),
            theta2: vars.theta2.clone(),
            assign: assign.clone(),
        };
        let report = evaluate_strategy(real, &strat, cfg)?;
        let feasible = report.decode_feasible(cfg);
        let better = match &best {
            None => true,
            Some((bf, brate, _, _)) => {
                (feasible && !bf) || (feasible == *bf && report.sum_rate > *brate)
            }
        };
        if better {
            best = Some((feasible, report.sum_rate, assign, report));
        }
    }
    let (_, _, assign, report) = best.expect("at least one assignment");
    Ok((assign, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_dataset, sample_rng};
    use crate::config::{NetworkTopology, ThresholdSpec};
    use rand::Rng;

    fn desk_real() -> (SystemConfig, ChannelRealization) {
        let cfg = SystemConfig::desk_scale();
        let topo = NetworkTopology::desk_scale();
        let real = generate_dataset(&cfg, &topo, 1, 0).unwrap().remove(0);
        (cfg, real)
    }

    fn random_unit_theta(n: usize, rng: &mut impl Rng) -> CVec {
        Array1::from_shape_fn(n, |_| {
            Complex64::from_polar(1.0, rng.gen::<f64>() * std::f64::consts::TAU)
        })
    }

    pub(crate) fn random_strategy_for(cfg: &SystemConfig, seed: u64) -> Strategy {
        let mut rng = sample_rng(seed, 900);
        let mut g = Array2::from_shape_fn((cfg.m, cfg.streams()), |_| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let mut f = Array2::from_shape_fn((cfg.l, cfg.streams()), |_| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        normalize_beamforming(&mut g, cfg.p_bs_max);
        normalize_beamforming(&mut f, cfg.p_r_max);
        Strategy {
            g,
            f,
            theta1: (0..cfg.i).map(|_| random_unit_theta(cfg.n, &mut rng)).collect(),
            theta2: (0..cfg.i).map(|_| random_unit_theta(cfg.n, &mut rng)).collect(),
            assign: vec![0; cfg.i],
        }
    }

    #[test]
    fn cascade_bs_user_identity_and_selector() {
        let (cfg, real) = desk_real();
        let ones = Array1::from_elem(cfg.n, Complex64::new(1.0, 0.0));
        let out = cascaded_bs_user(&real.g_bs_ris[0], &ones).unwrap();
        assert_eq!(out, real.g_bs_ris[0]);

        let mut e1 = Array1::from_elem(cfg.n, Complex64::new(0.0, 0.0));
        e1[0] = Complex64::new(1.0, 0.0);
        let out = cascaded_bs_user(&real.g_bs_ris[0], &e1).unwrap();
        for c in 1..cfg.n {
            assert!(out.column(c).iter().all(|z| z.norm() == 0.0));
        }
        assert_eq!(out.column(0), real.g_bs_ris[0].column(0));
    }

    #[test]
    fn cascade_bs_user_matches_diag_product() {
        let mut rng = sample_rng(31, 0);
        let g = Array2::from_shape_fn((2, 3), |_| {
            Complex64::new(rng.gen::<f64>(), rng.gen::<f64>())
        });
        let h = Array1::from_shape_fn(3, |_| Complex64::new(rng.gen::<f64>(), rng.gen::<f64>()));
        let out = cascaded_bs_user(&g, &h).unwrap();
        // explicit G * diag(h)
        for r in 0..2 {
            for c in 0..3 {
                let mut want = Complex64::new(0.0, 0.0);
                for t in 0..3 {
                    let diag = if t == c { h[t] } else { Complex64::new(0.0, 0.0) };
                    want += g[(r, t)] * diag;
                }
                assert!((out[(r, c)] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn relay_cascade_muted_and_scalar() {
        let (cfg, real) = desk_real();
        // theta = 0 (test-only) mutes the RIS: effective channel is direct only
        let zeros: Vec<CVec> = (0..cfg.i)
            .map(|_| Array1::from_elem(cfg.n, Complex64::new(0.0, 0.0)))
            .collect();
        let eff = relay_effective_channel(&real, &zeros, 0).unwrap();
        for l in 0..cfg.l {
            for m in 0..cfg.m {
                assert!((eff[(l, m)] - real.h_bs_relay[0][(m, l)]).norm() < 1e-15);
            }
        }

        // N=1 rank-1 product checked by hand
        let h_rr = Array2::from_shape_vec((1, 2), vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 1.0)]).unwrap();
        let g = Array2::from_shape_vec((2, 1), vec![Complex64::new(1.0, 1.0), Complex64::new(3.0, 0.0)]).unwrap();
        let casc = cascaded_bs_relay(&h_rr, &g).unwrap();
        let ones = Array1::from_elem(1, Complex64::new(1.0, 0.0));
        let applied = apply_relay_cascade(&casc, &ones);
        assert!((applied[(0, 0)] - Complex64::new(2.0, 2.0)).norm() < 1e-14);
        assert!((applied[(0, 1)] - Complex64::new(6.0, 0.0)).norm() < 1e-14);
        assert!((applied[(1, 0)] - Complex64::new(-1.0, 1.0)).norm() < 1e-14);
        assert!((applied[(1, 1)] - Complex64::new(0.0, 3.0)).norm() < 1e-14);
    }

    #[test]
    fn relay_cascade_matches_bruteforce() {
        let mut rng = sample_rng(37, 0);
        let n = 3;
        let l = 2;
        let m = 2;
        let h_rr = Array2::from_shape_fn((n, l), |_| {
            Complex64::new(rng.gen::<f64>(), rng.gen::<f64>())
        });
        let g = Array2::from_shape_fn((m, n), |_| {
            Complex64::new(rng.gen::<f64>(), rng.gen::<f64>())
        });
        let theta = Array1::from_shape_fn(n, |_| {
            Complex64::from_polar(1.0, rng.gen::<f64>() * 6.28)
        });
        let casc = cascaded_bs_relay(&h_rr, &g).unwrap();
        let applied = apply_relay_cascade(&casc, &theta);
        for li in 0..l {
            for mi in 0..m {
                let mut want = Complex64::new(0.0, 0.0);
                for ni in 0..n {
                    want += h_rr[(ni, li)] * theta[ni] * g[(mi, ni)];
                }
                assert!((applied[(li, mi)] - want).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn relay_user_cascade_cases() {
        let mut rng = sample_rng(41, 0);
        let n = 4;
        let l = 3;
        let h_rr = Array2::from_shape_fn((n, l), |_| {
            Complex64::new(rng.gen::<f64>(), rng.gen::<f64>())
        });
        // ones: transpose only
        let ones = Array1::from_elem(n, Complex64::new(1.0, 0.0));
        let c = cascaded_relay_user(&h_rr, &ones).unwrap();
        for li in 0..l {
            for ni in 0..n {
                assert_eq!(c[(li, ni)], h_rr[(ni, li)]);
            }
        }
        // basis selector
        let mut e2 = Array1::from_elem(n, Complex64::new(0.0, 0.0));
        e2[2] = Complex64::new(1.0, 0.0);
        let c = cascaded_relay_user(&h_rr, &e2).unwrap();
        for ni in 0..n {
            if ni != 2 {
                assert!(c.column(ni).iter().all(|z| z.norm() == 0.0));
            }
        }
        // random vs brute force
        let h = Array1::from_shape_fn(n, |_| Complex64::new(rng.gen::<f64>(), rng.gen::<f64>()));
        let c = cascaded_relay_user(&h_rr, &h).unwrap();
        for li in 0..l {
            for ni in 0..n {
                assert!((c[(li, ni)] - h_rr[(ni, li)] * h[ni]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn effective_phase1_reductions() {
        let (cfg, real) = desk_real();
        let zero = Array1::from_elem(cfg.n, Complex64::new(0.0, 0.0));
        let eff = effective_channel_phase1(&real, &zero, 0, 0).unwrap();
        for (a, b) in eff.iter().zip(real.h_bs_user[0][0].iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn single_user_sinr_is_snr() {
        let cfg = SystemConfig {
            i: 1,
            k: 1,
            rate_th_user: ThresholdSpec::Uniform(1.0),
            rate_th_group: ThresholdSpec::Uniform(1.0),
            ..SystemConfig::desk_scale()
        };
        let topo = NetworkTopology::desk_scale().adapt(&cfg).unwrap();
        let real = generate_dataset(&cfg, &topo, 1, 0).unwrap().remove(0);
        let strat = random_strategy_for(&cfg, 3);
        let got = sinr_phase1(&real, &strat, 0, 0, &cfg).unwrap();
        let h = effective_channel_phase1(&real, &strat.theta1[0], 0, 0).unwrap();
        let sig = inner_t(&h, &strat.g.column(0).to_owned()).norm_sqr();
        assert!((got - sig / cfg.sigma_user_sq).abs() / got < 1e-12);
    }

    #[test]
    fn orthogonal_beamformer_zero_sinr() {
        let cfg = SystemConfig {
            i: 1,
            k: 1,
            m: 2,
            rate_th_user: ThresholdSpec::Uniform(1.0),
            rate_th_group: ThresholdSpec::Uniform(1.0),
            ..SystemConfig::desk_scale()
        };
        let topo = NetworkTopology::desk_scale().adapt(&cfg).unwrap();
        let real = generate_dataset(&cfg, &topo, 1, 0).unwrap().remove(0);
        let mut strat = random_strategy_for(&cfg, 4);
        let h = effective_channel_phase1(&real, &strat.theta1[0], 0, 0).unwrap();
        // g orthogonal to h under the bilinear (transpose) pairing
        let g0 = Array1::from_vec(vec![-h[1], h[0]]);
        strat.g.column_mut(0).assign(&g0);
        normalize_beamforming(&mut strat.g, cfg.p_bs_max);
        let got = sinr_phase1(&real, &strat, 0, 0, &cfg).unwrap();
        assert!(got < 1e-22, "sinr {got}");
    }

    #[test]
    fn matched_filter_snr_single_stream() {
        let cfg = SystemConfig {
            i: 1,
            k: 1,
            rate_th_user: ThresholdSpec::Uniform(1.0),
            rate_th_group: ThresholdSpec::Uniform(1.0),
            ..SystemConfig::desk_scale()
        };
        let topo = NetworkTopology::desk_scale().adapt(&cfg).unwrap();
        let real = generate_dataset(&cfg, &topo, 1, 0).unwrap().remove(0);
        let strat = random_strategy_for(&cfg, 5);
        let got = relay_decode_sinr(&real, &strat, 0, 0, &cfg).unwrap();
        let eff = relay_effective_channel(&real, &strat.theta1, 0).unwrap();
        let alpha = Array1::from_shape_fn(cfg.l, |li| {
            (0..cfg.m)
                .map(|mi| eff[(li, mi)] * strat.g[(mi, 0)])
                .sum::<Complex64>()
        });
        let nsq: f64 = alpha.iter().map(|c| c.norm_sqr()).sum();
        assert!((got - nsq / cfg.sigma_relay_sq).abs() / got < 1e-12);
    }

    #[test]
    fn orthogonal_alphas_no_interference() {
        let a0 = Array1::from_vec(vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)]);
        let a1 = Array1::from_vec(vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 3.0)]);
        let sinr = decode_sinr_from_alphas(&[a0, a1], 0, 0.5);
        // ||a0||^4 / (0 + 0.5*||a0||^2) = 16 / 2 = 8
        assert!((sinr - 8.0).abs() < 1e-12);
    }

    #[test]
    fn decode_sinr_matches_bruteforce_three_streams() {
        let mut rng = sample_rng(43, 0);
        let alphas: Vec<CVec> = (0..3)
            .map(|_| {
                Array1::from_shape_fn(2, |_| Complex64::new(rng.gen::<f64>(), rng.gen::<f64>()))
            })
            .collect();
        let sigma = 0.3;
        for s in 0..3 {
            let got = decode_sinr_from_alphas(&alphas, s, sigma);
            let mut num = 0.0f64;
            for c in alphas[s].iter() {
                num += c.norm_sqr();
            }
            let nsq = num;
            let num = nsq * nsq;
            let mut den = sigma * nsq;
            for t in 0..3 {
                if t != s {
                    let z: Complex64 = alphas[s]
                        .iter()
                        .zip(alphas[t].iter())
                        .map(|(a, b)| a.conj() * b)
                        .sum();
                    den += z.norm_sqr();
                }
            }
            assert!((got - num / den).abs() / got.max(1e-30) < 1e-12);
        }
    }

    #[test]
    fn zero_alpha_decodes_to_zero() {
        let a0 = Array1::from_elem(2, Complex64::new(0.0, 0.0));
        let a1 = Array1::from_elem(2, Complex64::new(1.0, 0.0));
        assert_eq!(decode_sinr_from_alphas(&[a0, a1], 0, 0.1), 0.0);
    }

    #[test]
    fn evaluate_rate_arithmetic() {
        let cfg = SystemConfig::desk_scale();
        // gamma1 = 1, gamma2 = 2 -> rate = log2(4) = 2
        assert!((rate_from_sinr(3.0, &cfg) - 2.0).abs() < 1e-15);
        assert_eq!(rate_from_sinr(0.0, &cfg), 0.0);
        let half = SystemConfig {
            half_duplex_prelog: true,
            ..cfg
        };
        assert!((rate_from_sinr(3.0, &half) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn phase_invariance_of_sinrs() {
        let (cfg, real) = desk_real();
        let strat = random_strategy_for(&cfg, 11);
        let base = evaluate_strategy(&real, &strat, &cfg).unwrap();
        let mut rotated = strat.clone();
        let rot = Complex64::from_polar(1.0, 1.234);
        for mut col in rotated.g.columns_mut() {
            col.mapv_inplace(|c| c * rot);
        }
        let got = evaluate_strategy(&real, &rotated, &cfg).unwrap();
        for i in 0..cfg.i {
            for k in 0..cfg.k {
                let a = base.sinr_phase1[i][k];
                let b = got.sinr_phase1[i][k];
                assert!((a - b).abs() / a.max(1e-30) < 1e-9);
            }
        }
        for j in 0..cfg.j {
            for s in 0..cfg.streams() {
                let a = base.sinr_relay[j][s];
                let b = got.sinr_relay[j][s];
                assert!((a - b).abs() / a.max(1e-30) < 1e-9);
            }
        }
    }

    #[test]
    fn rate_monotone_in_sinr() {
        let cfg = SystemConfig::desk_scale();
        let mut prev = rate_from_sinr(0.0, &cfg);
        for step in 1..100 {
            let r = rate_from_sinr(step as f64 * 0.37, &cfg);
            assert!(r > prev);
            prev = r;
        }
    }

    #[test]
    fn constraints_on_normalized_strategy() {
        let (cfg, real) = desk_real();
        let mut strat = random_strategy_for(&cfg, 13);
        // discretize phases so C5 holds
        for t in strat.theta1.iter_mut().chain(strat.theta2.iter_mut()) {
            let q = crate::phases::quantize_phases(t.as_slice().unwrap(), cfg.b);
            *t = Array1::from_vec(q);
        }
        let rep = check_constraints(&real, &strat, &cfg).unwrap();
        assert!(rep.c1.0 && rep.c1.1.abs() <= 1e-9 * cfg.p_bs_max);
        assert!(rep.c2.0 && rep.c2.1.abs() <= 1e-9 * cfg.p_r_max);
        assert!(rep.c5.0);
    }

    #[test]
    fn continuous_theta_fails_c5() {
        let (cfg, real) = desk_real();
        let strat = random_strategy_for(&cfg, 17);
        let rep = check_constraints(&real, &strat, &cfg).unwrap();
        assert!(!rep.c5.0);
    }

    #[test]
    fn c4_flags_exactly_the_weak_user() {
        let (mut cfg, real) = desk_real();
        let strat = random_strategy_for(&cfg, 19);
        let report = evaluate_strategy(&real, &strat, &cfg).unwrap();
        // craft thresholds: everyone comfortably below their rate except
        // user (1,0), whose threshold sits just above its achieved rate
        let mut th = vec![vec![0.0; cfg.k]; cfg.i];
        for i in 0..cfg.i {
            for k in 0..cfg.k {
                th[i][k] = report.rate[i][k] * 0.5;
            }
        }
        th[1][0] = report.rate[1][0] + 0.1;
        cfg.rate_th_user = ThresholdSpec::PerUser(th);
        cfg.rate_th_group = ThresholdSpec::Uniform(0.0);
        let rep = check_constraints(&real, &strat, &cfg).unwrap();
        assert!(!rep.c4.0);
        assert_eq!(rep.c4_violations, vec![(1, 0)]);
    }

    #[test]
    fn select_relays_forced_when_single() {
        let (mut cfg, _) = desk_real();
        cfg.j = 1;
        let topo = NetworkTopology::desk_scale().adapt(&cfg).unwrap();
        let real = generate_dataset(&cfg, &topo, 1, 0).unwrap().remove(0);
        let vars = random_strategy_for(&cfg, 23).without_assignment();
        let (assign, _) = select_relays(&real, &vars, &cfg).unwrap();
        assert_eq!(assign, vec![0, 0]);
    }

    #[test]
    fn select_relays_prefers_stronger_relay() {
        let cfg = SystemConfig {
            i: 1,
            rate_th_user: ThresholdSpec::Uniform(1.0),
            rate_th_group: ThresholdSpec::Uniform(1.0),
            ..SystemConfig::desk_scale()
        };
        let topo = NetworkTopology::desk_scale().adapt(&cfg).unwrap();
        let mut real = generate_dataset(&cfg, &topo, 1, 0).unwrap().remove(0);
        // make relay 1 strictly better: nearly kill relay 0's outgoing
        // links, both direct and through the RIS
        for k in 0..cfg.k {
            real.h_relay_user[0][0][k].mapv_inplace(|c| c * 1e-6);
        }
        real.h_ris_relay[0][0].mapv_inplace(|c| c * 1e-6);
        let vars = random_strategy_for(&cfg, 29).without_assignment();
        let (assign, report) = select_relays(&real, &vars, &cfg).unwrap();
        assert_eq!(assign, vec![1]);
        // exhaustive dominance among decode-feasible candidates
        for alt in enumerate_assignments(cfg.i, cfg.j).unwrap() {
            let strat = Strategy {
                g: vars.g.clone(),
                f: vars.f.clone(),
                theta1: vars.theta1.clone(),
                theta2: vars.theta2.clone(),
                assign: alt,
            };
            let alt_rep = evaluate_strategy(&real, &strat, &cfg).unwrap();
            if alt_rep.decode_feasible(&cfg) {
                assert!(report.sum_rate >= alt_rep.sum_rate);
            }
        }
    }

    #[test]
    fn select_relays_tie_breaks_lexicographically() {
        let (cfg, mut real) = desk_real();
        // identical relays: copy relay 0's channels onto relay 1
        real.h_bs_relay[1] = real.h_bs_relay[0].clone();
        for i in 0..cfg.i {
            real.h_ris_relay[i][1] = real.h_ris_relay[i][0].clone();
        }
        real.h_relay_user[1] = real.h_relay_user[0].clone();
        let vars = random_strategy_for(&cfg, 31).without_assignment();
        let (assign, _) = select_relays(&real, &vars, &cfg).unwrap();
        assert_eq!(assign, vec![0, 0]);
    }

    #[test]
    fn normalize_beamforming_scales_to_budget() {
        let mut rng = sample_rng(47, 0);
        let mut g = Array2::from_shape_fn((3, 4), |_| {
            Complex64::new(rng.gen::<f64>(), rng.gen::<f64>())
        });
        assert!(normalize_beamforming(&mut g, 2.5));
        assert!((trace_power(&g) - 2.5).abs() / 2.5 < 1e-12);
        // tr = 4*budget in -> halved columns
        let mut g = Array2::from_elem((1, 1), Complex64::new(2.0, 0.0));
        normalize_beamforming(&mut g, 1.0);
        assert!((g[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        // already at budget -> unchanged
        let mut g = Array2::from_elem((1, 1), Complex64::new(1.0, 0.0));
        normalize_beamforming(&mut g, 1.0);
        assert_eq!(g[(0, 0)], Complex64::new(1.0, 0.0));
        // zero input -> degeneracy flag
        let mut g = Array2::from_elem((2, 2), Complex64::new(0.0, 0.0));
        assert!(!normalize_beamforming(&mut g, 1.0));
    }

    #[test]
    fn assignment_enumeration_lex_order() {
        let a = enumerate_assignments(2, 2).unwrap();
        assert_eq!(a, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(enumerate_assignments(1, 3).unwrap().len(), 3);
    }
}
