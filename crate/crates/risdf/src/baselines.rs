//! Reference optimizers and oracles: random strategies, matched
//! beamforming, per-realization particle swarm search, a flat dense
//! learner, and an exhaustive tiny-instance oracle.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::{CMat, CVec, ChannelRealization};
use crate::config::{LossKind, SystemConfig};
use crate::error::{Error, Result};
use crate::gnn::forward::{
    finish_train_graph, select_eval_from_graph, CandidateGraph, ForwardGraph, Mode, Phase1State,
};
use crate::gnn::{GnnInputs, LossSpec};
use crate::phases::{phase_alphabet, quantize_phases};
use crate::phy::{
    effective_channel_phase1, effective_channel_phase2, enumerate_assignments, evaluate_strategy,
    normalize_beamforming, select_relays, RateReport, Strategy, StrategyVars,
};
use crate::tape::{NodeId, ParamStore, Tape};
use crate::train::{loss_fine, Model, TrainStats};

/// Uniform discrete phases, Gaussian beamformers scaled to the power
/// budgets, and no relay selection (everything pinned to relay 0).
pub fn random_strategy(
    real: &ChannelRealization,
    cfg: &SystemConfig,
    rng: &mut impl Rng,
) -> Strategy {
    let _ = real;
    let alphabet = phase_alphabet(cfg.b);
    let draw_theta = |rng: &mut dyn rand::RngCore| -> Vec<CVec> {
        (0..cfg.i)
            .map(|_| {
                Array1::from_shape_fn(cfg.n, |_| {
                    alphabet[(rng.next_u64() % alphabet.len() as u64) as usize]
                })
            })
            .collect()
    };
    let theta1 = draw_theta(rng);
    let theta2 = draw_theta(rng);
    let mut g = Array2::from_shape_fn((cfg.m, cfg.streams()), |_| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let mut f = Array2::from_shape_fn((cfg.l, cfg.streams()), |_| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    normalize_beamforming(&mut g, cfg.p_bs_max);
    normalize_beamforming(&mut f, cfg.p_r_max);
    Strategy {
        g,
        f,
        theta1,
        theta2,
        assign: vec![0; cfg.i],
    }
}

/// Matched (conjugate) beamforming on the given effective channels, then a
/// joint power normalization. Returns the beamformer matrix and a
/// degeneracy flag (true when every channel is zero).
pub fn mrt_beamforming(channels: &[CVec], budget: f64) -> (CMat, bool) {
    let rows = channels.first().map(|c| c.len()).unwrap_or(0);
    let mut out = Array2::zeros((rows, channels.len()));
    for (c, h) in channels.iter().enumerate() {
        for (r, v) in h.iter().enumerate() {
            out[(r, c)] = v.conj();
        }
    }
    let ok = normalize_beamforming(&mut out, budget);
    (out, !ok)
}

/// Particle swarm search configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsoConfig {
    pub particles: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub seed: u64,
    pub beta: f64,
    pub lambda: f64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            particles: 64,
            iterations: 200,
            inertia: 0.7,
            cognitive: 1.5,
            social: 1.5,
            seed: 1,
            beta: 1000.0,
            lambda: 1000.0,
        }
    }
}

pub struct PsoOutcome {
    pub strategy: Strategy,
    pub report: RateReport,
    /// Best-so-far fine loss after the initial swarm and after each
    /// iteration (non-increasing).
    pub trace: Vec<f64>,
    /// Particles re-initialized after a non-finite fitness.
    pub reinit_events: usize,
}

struct PsoLayout {
    angles: usize,
    total: usize,
}

fn pso_layout(cfg: &SystemConfig) -> PsoLayout {
    let angles = 2 * cfg.i * cfg.n;
    let total = angles + 2 * cfg.m * cfg.streams() + 2 * cfg.l * cfg.streams();
    PsoLayout { angles, total }
}

fn decode_particle(x: &[f64], cfg: &SystemConfig) -> StrategyVars {
    let lay = pso_layout(cfg);
    let theta_of = |off: usize| -> Vec<CVec> {
        (0..cfg.i)
            .map(|i| {
                Array1::from_shape_fn(cfg.n, |n| Complex64::from_polar(1.0, x[off + i * cfg.n + n]))
            })
            .collect()
    };
    let theta1 = theta_of(0);
    let theta2 = theta_of(cfg.i * cfg.n);
    let mut at = lay.angles;
    let mut g = Array2::zeros((cfg.m, cfg.streams()));
    for s in 0..cfg.streams() {
        for m in 0..cfg.m {
            g[(m, s)] = Complex64::new(x[at], x[at + 1]);
            at += 2;
        }
    }
    let mut f = Array2::zeros((cfg.l, cfg.streams()));
    for s in 0..cfg.streams() {
        for l in 0..cfg.l {
            f[(l, s)] = Complex64::new(x[at], x[at + 1]);
            at += 2;
        }
    }
    normalize_beamforming(&mut g, cfg.p_bs_max);
    normalize_beamforming(&mut f, cfg.p_r_max);
    StrategyVars {
        g,
        f,
        theta1,
        theta2,
    }
}

fn pso_fitness(x: &[f64], real: &ChannelRealization, cfg: &SystemConfig, pso: &PsoConfig) -> Result<f64> {
    let vars = decode_particle(x, cfg);
    let (_, report) = select_relays(real, &vars, cfg)?;
    Ok(loss_fine(&report, cfg, pso.beta, pso.lambda))
}

fn init_position(x: &mut [f64], lay: &PsoLayout, rng: &mut ChaCha8Rng) {
    for (d, v) in x.iter_mut().enumerate() {
        *v = if d < lay.angles {
            rng.gen::<f64>() * std::f64::consts::TAU
        } else {
            rng.sample::<f64, _>(StandardNormal)
        };
    }
}

/// Swarm search over [theta angles; Re/Im of G and F] minimizing the fine
/// loss after normalization and relay selection. Deterministic per seed.
pub fn pso_optimize(
    real: &ChannelRealization,
    cfg: &SystemConfig,
    pso: &PsoConfig,
) -> Result<PsoOutcome> {
    if pso.particles < 2 {
        return Err(Error::Config("PSO needs at least 2 particles".into()));
    }
    let lay = pso_layout(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(pso.seed);
    let mut reinit_events = 0usize;

    let mut pos = vec![vec![0.0; lay.total]; pso.particles];
    let mut vel = vec![vec![0.0; lay.total]; pso.particles];
    let mut pbest = vec![vec![0.0; lay.total]; pso.particles];
    let mut pbest_fit = vec![f64::INFINITY; pso.particles];
    let mut gbest = vec![0.0; lay.total];
    let mut gbest_fit = f64::INFINITY;

    for p in 0..pso.particles {
        init_position(&mut pos[p], &lay, &mut rng);
        let mut fit = pso_fitness(&pos[p], real, cfg, pso)?;
        while !fit.is_finite() {
            reinit_events += 1;
            init_position(&mut pos[p], &lay, &mut rng);
            fit = pso_fitness(&pos[p], real, cfg, pso)?;
        }
        pbest[p] = pos[p].clone();
        pbest_fit[p] = fit;
        if fit < gbest_fit {
            gbest_fit = fit;
            gbest = pos[p].clone();
        }
    }
    let mut trace = vec![gbest_fit];

    for _ in 0..pso.iterations {
        for p in 0..pso.particles {
            for d in 0..lay.total {
                let r1 = rng.gen::<f64>();
                let r2 = rng.gen::<f64>();
                vel[p][d] = pso.inertia * vel[p][d]
                    + pso.cognitive * r1 * (pbest[p][d] - pos[p][d])
                    + pso.social * r2 * (gbest[d] - pos[p][d]);
                pos[p][d] += vel[p][d];
                if d < lay.angles {
                    pos[p][d] = pos[p][d].rem_euclid(std::f64::consts::TAU);
                }
            }
            let fit = pso_fitness(&pos[p], real, cfg, pso)?;
            if !fit.is_finite() {
                reinit_events += 1;
                init_position(&mut pos[p], &lay, &mut rng);
                vel[p].fill(0.0);
                continue;
            }
            if fit < pbest_fit[p] {
                pbest_fit[p] = fit;
                pbest[p] = pos[p].clone();
            }
            if fit < gbest_fit {
                gbest_fit = fit;
                gbest = pos[p].clone();
            }
        }
        trace.push(gbest_fit);
    }

    // decode the best particle; phases are quantized only here, at the end
    let mut vars = decode_particle(&gbest, cfg);
    for t in vars.theta1.iter_mut().chain(vars.theta2.iter_mut()) {
        *t = Array1::from_vec(quantize_phases(t.as_slice().unwrap(), cfg.b));
    }
    let (assign, report) = select_relays(real, &vars, cfg)?;
    let strategy = Strategy {
        g: vars.g,
        f: vars.f,
        theta1: vars.theta1,
        theta2: vars.theta2,
        assign,
    };
    Ok(PsoOutcome {
        strategy,
        report,
        trace,
        reinit_events,
    })
}

/// Result of the exhaustive search over quantized phases and assignments
/// with matched beamforming. The optimum of that restricted family, not of
/// the full problem.
pub struct OracleOutcome {
    pub strategy: Strategy,
    pub report: RateReport,
    pub enumerated: usize,
}

/// Assemble the matched-beamforming strategy for one (theta1, theta2,
/// assignment) tuple.
fn mrt_strategy(
    real: &ChannelRealization,
    cfg: &SystemConfig,
    theta1: &[CVec],
    theta2: &[CVec],
    assign: &[usize],
) -> Result<Strategy> {
    let mut h1 = Vec::with_capacity(cfg.streams());
    let mut h2 = Vec::with_capacity(cfg.streams());
    for i in 0..cfg.i {
        for k in 0..cfg.k {
            h1.push(effective_channel_phase1(real, &theta1[i], i, k)?);
            h2.push(effective_channel_phase2(real, &theta2[i], i, k, assign[i])?);
        }
    }
    let (g, _) = mrt_beamforming(&h1, cfg.p_bs_max);
    let (f, _) = mrt_beamforming(&h2, cfg.p_r_max);
    Ok(Strategy {
        g,
        f,
        theta1: theta1.to_vec(),
        theta2: theta2.to_vec(),
        assign: assign.to_vec(),
    })
}

fn theta_combo(index: usize, alphabet: &[Complex64], cfg: &SystemConfig) -> Vec<CVec> {
    let base = alphabet.len();
    let mut rem = index;
    (0..cfg.i)
        .map(|_| {
            Array1::from_shape_fn(cfg.n, |_| {
                let digit = rem % base;
                rem /= base;
                alphabet[digit]
            })
        })
        .collect()
}

/// Exhaustively search quantized (theta1, theta2) pairs and relay
/// assignments, setting beamformers by matched filtering.
pub fn brute_force_oracle(real: &ChannelRealization, cfg: &SystemConfig) -> Result<OracleOutcome> {
    brute_force_oracle_ordered(real, cfg, false)
}

/// Same search with the enumeration order reversed; the result must agree.
pub fn brute_force_oracle_ordered(
    real: &ChannelRealization,
    cfg: &SystemConfig,
    reversed: bool,
) -> Result<OracleOutcome> {
    let per_phase = (1u128 << cfg.b).checked_pow((cfg.n * cfg.i) as u32);
    let assigns = (cfg.j as u128).checked_pow(cfg.i as u32);
    let budget = per_phase
        .and_then(|p| p.checked_mul(p))
        .and_then(|p| assigns.and_then(|a| p.checked_mul(a)));
    match budget {
        Some(total) if total <= 1_000_000 => {}
        _ => {
            return Err(Error::Guard(format!(
                "oracle enumeration needs 2^(2*B*N*I) * J^I <= 1e6; got B={} N={} I={} J={}",
                cfg.b, cfg.n, cfg.i, cfg.j
            )));
        }
    }
    let alphabet = phase_alphabet(cfg.b);
    let per_phase = alphabet.len().pow((cfg.n * cfg.i) as u32);
    let assignments = enumerate_assignments(cfg.i, cfg.j)?;

    let mut order: Vec<(usize, usize, usize)> = Vec::new();
    for t1 in 0..per_phase {
        for t2 in 0..per_phase {
            for a in 0..assignments.len() {
                order.push((t1, t2, a));
            }
        }
    }
    if reversed {
        order.reverse();
    }

    let mut best: Option<(f64, Strategy, RateReport)> = None;
    let enumerated = order.len();
    for (t1, t2, a) in order {
        let theta1 = theta_combo(t1, &alphabet, cfg);
        let theta2 = theta_combo(t2, &alphabet, cfg);
        let strat = mrt_strategy(real, cfg, &theta1, &theta2, &assignments[a])?;
        let report = evaluate_strategy(real, &strat, cfg)?;
        let better = match &best {
            None => true,
            Some((rate, _, _)) => report.sum_rate > *rate,
        };
        if better {
            best = Some((report.sum_rate, strat, report));
        }
    }
    let (_, strategy, report) = best.expect("non-empty enumeration");
    Ok(OracleOutcome {
        strategy,
        report,
        enumerated,
    })
}

/// Flat dense baseline: one stack from the whole CSI vector straight to
/// `[theta readouts, G, F]`, no weight sharing across users.
#[derive(Debug, Clone)]
pub struct FlatDnn {
    pub store: ParamStore,
    input_len: usize,
    pub hidden: usize,
}

fn flatten_csi(real: &ChannelRealization) -> Vec<f64> {
    let inv = 1.0 / crate::gnn::inputs::csi_rms(real);
    let mut out = Vec::new();
    let mut push = |c: &Complex64| {
        out.push(c.re * inv);
        out.push(c.im * inv);
    };
    for m in &real.g_bs_ris {
        m.iter().for_each(&mut push);
    }
    for m in &real.h_bs_relay {
        m.iter().for_each(&mut push);
    }
    for v in real.h_bs_user.iter().flatten() {
        v.iter().for_each(&mut push);
    }
    for v in real.h_ris_user.iter().flatten() {
        v.iter().for_each(&mut push);
    }
    for m in real.h_ris_relay.iter().flatten() {
        m.iter().for_each(&mut push);
    }
    for v in real.h_relay_user.iter().flatten().flatten() {
        v.iter().for_each(&mut push);
    }
    out
}

impl FlatDnn {
    pub fn output_len(cfg: &SystemConfig) -> usize {
        2 * cfg.i * cfg.n * 2 + cfg.streams() * 2 * cfg.m + cfg.streams() * 2 * cfg.l
    }

    pub fn input_len(cfg: &SystemConfig) -> usize {
        2 * (cfg.i * cfg.m * cfg.n
            + cfg.j * cfg.m * cfg.l
            + cfg.i * cfg.k * cfg.m
            + cfg.i * cfg.k * cfg.n
            + cfg.i * cfg.j * cfg.n * cfg.l
            + cfg.j * cfg.i * cfg.k * cfg.l)
    }

    /// Pick the hidden width whose parameter count is closest to `target`
    /// (two hidden layers, one readout).
    pub fn hidden_for_budget(cfg: &SystemConfig, target: usize) -> usize {
        let input = Self::input_len(cfg);
        let output = Self::output_len(cfg);
        let count = |h: usize| h * (input + 1) + h * (h + 1) + output * (h + 1);
        let mut best = 4;
        let mut best_diff = usize::MAX;
        for h in 4..=2048 {
            let diff = count(h).abs_diff(target);
            if diff < best_diff {
                best_diff = diff;
                best = h;
            }
        }
        best
    }

    pub fn init(cfg: &SystemConfig, hidden: usize, seed: u64) -> Self {
        let input_len = Self::input_len(cfg);
        let output_len = Self::output_len(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::default();
        let glorot = |rng: &mut ChaCha8Rng, rows: usize, cols: usize, gain: f64| -> Vec<f64> {
            let limit = gain * (6.0 / (rows + cols) as f64).sqrt();
            (0..rows * cols).map(|_| rng.gen_range(-limit..limit)).collect()
        };
        let w1 = glorot(&mut rng, hidden, input_len, 1.0);
        store.add("dnn.w1", hidden, input_len, w1);
        store.add("dnn.b1", hidden, 1, vec![0.0; hidden]);
        let w2 = glorot(&mut rng, hidden, hidden, crate::gnn::params::ACT_GAIN);
        store.add("dnn.w2", hidden, hidden, w2);
        store.add("dnn.b2", hidden, 1, vec![0.0; hidden]);
        let w3 = glorot(&mut rng, output_len, hidden, crate::gnn::params::ACT_GAIN);
        store.add("dnn.w3", output_len, hidden, w3);
        store.add("dnn.b3", output_len, 1, vec![0.0; output_len]);
        FlatDnn {
            store,
            input_len,
            hidden,
        }
    }

    pub fn param_count(&self) -> usize {
        self.store.total_len()
    }

    /// Raw network output split into strategy pieces; the same
    /// normalization and candidate structure as the GNN path.
    pub fn build_graph(
        &self,
        tape: &mut Tape,
        real: &ChannelRealization,
        cfg: &SystemConfig,
        candidates: &[Vec<usize>],
    ) -> Result<ForwardGraph> {
        let csi = flatten_csi(real);
        if csi.len() != self.input_len {
            return Err(Error::shape("dnn input", self.input_len, csi.len()));
        }
        let x = tape.constant(&csi);
        let h = tape.affine(0, 1, x);
        let h = tape.softplus(h);
        let h = tape.affine(2, 3, h);
        let h = tape.softplus(h);
        let out = tape.affine(4, 5, h);

        let mut at = 0;
        let mut take = |tape: &mut Tape, len: usize| -> NodeId {
            let node = tape.slice(out, at, len);
            at += len;
            node
        };
        let mut theta1 = Vec::with_capacity(cfg.i);
        for _ in 0..cfg.i {
            let raw = take(tape, 2 * cfg.n);
            theta1.push(tape.unit_complex(raw));
        }
        let mut theta2 = Vec::with_capacity(cfg.i);
        for _ in 0..cfg.i {
            let raw = take(tape, 2 * cfg.n);
            theta2.push(tape.unit_complex(raw));
        }
        let g_raw: Vec<NodeId> = (0..cfg.streams()).map(|_| take(tape, 2 * cfg.m)).collect();
        let f_raw: Vec<NodeId> = (0..cfg.streams()).map(|_| take(tape, 2 * cfg.l)).collect();

        let total_g = tape.sum_squares(&g_raw);
        let g_cols: Vec<NodeId> = g_raw
            .iter()
            .map(|&g| tape.scale_by_sqrt(g, total_g, cfg.p_bs_max))
            .collect();
        let total_f = tape.sum_squares(&f_raw);
        let f_cols: Vec<NodeId> = f_raw
            .iter()
            .map(|&f| tape.scale_by_sqrt(f, total_f, cfg.p_r_max))
            .collect();

        // one decision set shared by every candidate assignment
        let cands = candidates
            .iter()
            .map(|assign| CandidateGraph {
                assign: assign.clone(),
                theta2: theta2.clone(),
                f_cols: f_cols.clone(),
            })
            .collect();
        Ok(ForwardGraph {
            theta1,
            g_cols,
            candidates: cands,
            state1: Phase1State {
                r: Vec::new(),
                u: Vec::new(),
                layer: 0,
            },
        })
    }
}

impl Model for FlatDnn {
    fn store(&self) -> &ParamStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn build_loss<'a>(
        &'a self,
        tape: &mut Tape<'a>,
        real: &ChannelRealization,
        cfg: &SystemConfig,
        spec: &LossSpec,
        pinned: Option<&[Vec<usize>]>,
    ) -> Result<(NodeId, TrainStats)> {
        let candidates = match pinned {
            Some(c) => c.to_vec(),
            None => enumerate_assignments(cfg.i, cfg.j)?,
        };
        let inputs = GnnInputs::build(real, cfg)?;
        let graph = self.build_graph(tape, real, cfg, &candidates)?;
        let tf = finish_train_graph(tape, &inputs, real, cfg, spec, &graph)?;
        Ok((
            tf.loss,
            TrainStats {
                sum_rate: tf.report.sum_rate,
                selected: tf.strategy.assign.clone(),
            },
        ))
    }

    fn eval_forward(
        &self,
        real: &ChannelRealization,
        cfg: &SystemConfig,
    ) -> Result<(Strategy, RateReport)> {
        let candidates = enumerate_assignments(cfg.i, cfg.j)?;
        let mut tape = Tape::new(&self.store);
        let graph = self.build_graph(&mut tape, real, cfg, &candidates)?;
        select_eval_from_graph(&tape, &graph, real, cfg, Mode::Eval)
    }
}

/// Loss-kind label used in result tables.
pub fn method_loss_kind(kind: LossKind) -> &'static str {
    match kind {
        LossKind::Coarse => "jocd_tg",
        LossKind::Group => "jogd_tg",
        LossKind::Fine => "jofd_tg",
    }
}
