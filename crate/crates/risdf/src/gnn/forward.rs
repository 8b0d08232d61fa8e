//! The two-phase GNN forward pass.
//!
//! One graph holds I RIS nodes and I*K user nodes. RIS node i extracts
//! initial features from its own group's per-antenna channel columns plus
//! the shared relay context; update layers aggregate the global user mean
//! (RIS nodes) and the max over all other users (user nodes), with every
//! function shared across groups. Phase 2 reuses the phase-1 features and
//! runs once per candidate relay assignment, since its inputs depend on
//! the serving relay.

use std::collections::HashMap;

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::config::{LossKind, SystemConfig};
use crate::error::{Error, Result};
use crate::phases::quantize_phases;
use crate::phy::{self, RateReport, Strategy};
use crate::tape::{NodeId, Tape};

use super::inputs::GnnInputs;
use super::params::GnnParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Node features after some number of update layers.
pub struct Phase1State {
    /// Per RIS node.
    pub r: Vec<NodeId>,
    /// Per user node (stream order).
    pub u: Vec<NodeId>,
    pub layer: usize,
}

pub struct Phase2State {
    pub s: Vec<NodeId>,
    pub v: Vec<NodeId>,
    pub layer: usize,
}

fn ensure_width(tape: &Tape, node: NodeId, want: usize, what: &str) -> Result<()> {
    let got = tape.len_of(node);
    if got != want {
        return Err(Error::Config(format!(
            "width mismatch at {what}: expected {want}, got {got}"
        )));
    }
    Ok(())
}

/// Initial layer: column features of H1 mean-pooled per RIS node plus the
/// relay context, and per-user features from vec(H1).
pub fn phase1_init(
    tape: &mut Tape,
    params: &GnnParams,
    inputs: &GnnInputs,
    cfg: &SystemConfig,
) -> Result<Phase1State> {
    let q = params.dims.q;
    let hr = tape.constant(&inputs.hr_flat);
    let fr = params.apply_stack(tape, &params.fr0, hr);

    let mut r = Vec::with_capacity(cfg.i);
    for i in 0..cfg.i {
        let mut cols = Vec::with_capacity(cfg.k * cfg.m);
        for k in 0..cfg.k {
            let s = cfg.stream_index(i, k);
            for m in 0..cfg.m {
                let x = tape.constant(&inputs.h1_cols[s][m]);
                cols.push(params.apply_stack(tape, &params.f0, x));
            }
        }
        let mean = tape.mean_stack(&cols);
        let r0 = tape.concat(&[mean, fr]);
        ensure_width(tape, r0, q, "r^(0)")?;
        r.push(r0);
    }

    let mut u = Vec::with_capacity(cfg.streams());
    for s in 0..cfg.streams() {
        let x = tape.constant(&inputs.h1_vec[s]);
        let u0 = params.apply_stack(tape, &params.fu0, x);
        ensure_width(tape, u0, q, "u^(0)")?;
        u.push(u0);
    }

    Ok(Phase1State { r, u, layer: 0 })
}

fn max_over_others(tape: &mut Tape, nodes: &[NodeId], skip: usize) -> NodeId {
    let others: Vec<NodeId> = nodes
        .iter()
        .enumerate()
        .filter(|(t, _)| *t != skip)
        .map(|(_, &n)| n)
        .collect();
    if others.is_empty() {
        // lone user: aggregate over itself
        tape.max_stack(&[nodes[skip]])
    } else {
        tape.max_stack(&others)
    }
}

/// One node-update layer: RIS nodes combine with the global user mean,
/// user nodes with the max over all other users and their own RIS node.
pub fn phase1_update(
    tape: &mut Tape,
    params: &GnnParams,
    state: &Phase1State,
    cfg: &SystemConfig,
    d: usize,
) -> Result<Phase1State> {
    if d < 1 || d > params.dims.d {
        return Err(Error::Domain(format!(
            "update layer {d} outside [1, {}]",
            params.dims.d
        )));
    }
    if state.layer != d - 1 {
        return Err(Error::Sequencing(format!(
            "phase-1 layer {d} applied to state at layer {}",
            state.layer
        )));
    }
    let q = params.dims.q;
    let stack = &params.f_upd[d - 1];
    let ustack = &params.fu_upd[d - 1];
    let mean_u = tape.mean_stack(&state.u);

    let mut r = Vec::with_capacity(state.r.len());
    for &ri in &state.r {
        let inp = tape.concat(&[ri, mean_u]);
        let upd = params.apply_stack(tape, stack, inp);
        let out = tape.concat(&[upd, ri]);
        ensure_width(tape, out, q * (d + 1), "r^(d)")?;
        r.push(out);
    }

    let mut u = Vec::with_capacity(state.u.len());
    for s in 0..state.u.len() {
        let group = s / cfg.k;
        let maxed = max_over_others(tape, &state.u, s);
        let inp = tape.concat(&[state.u[s], maxed, state.r[group]]);
        let upd = params.apply_stack(tape, ustack, inp);
        let out = tape.concat(&[upd, state.u[s]]);
        ensure_width(tape, out, q * (d + 1), "u^(d)")?;
        u.push(out);
    }

    Ok(Phase1State { r, u, layer: d })
}

/// Readout: continuous unit-modulus phases per RIS and raw (unnormalized)
/// beamformer coordinates per user.
pub fn phase1_readout(
    tape: &mut Tape,
    params: &GnnParams,
    state: &Phase1State,
    cfg: &SystemConfig,
) -> Result<(Vec<NodeId>, Vec<NodeId>)> {
    if state.layer != params.dims.d {
        return Err(Error::Sequencing(format!(
            "readout applied at layer {}, expected {}",
            state.layer, params.dims.d
        )));
    }
    let mut theta1 = Vec::with_capacity(state.r.len());
    for &ri in &state.r {
        if cfg.fix_theta1_identity {
            let mut ones = vec![0.0; 2 * cfg.n];
            ones[..cfg.n].fill(1.0);
            theta1.push(tape.constant(&ones));
        } else {
            let ro = params.apply_readout(tape, &params.f_ro, ri);
            theta1.push(tape.unit_complex(ro));
        }
    }
    let mut g_raw = Vec::with_capacity(state.u.len());
    for &us in &state.u {
        g_raw.push(params.apply_readout(tape, &params.fu_ro, us));
    }
    Ok((theta1, g_raw))
}

/// Memoized initial extractions for phase 2; the column/vector features
/// only depend on (stream, relay), not on the candidate assignment.
pub struct Phase2Cache {
    g0_cols: HashMap<(usize, usize, usize), NodeId>,
    gv0_vec: HashMap<(usize, usize), NodeId>,
}

impl Phase2Cache {
    pub fn new() -> Self {
        Phase2Cache {
            g0_cols: HashMap::new(),
            gv0_vec: HashMap::new(),
        }
    }

    fn col(
        &mut self,
        tape: &mut Tape,
        params: &GnnParams,
        inputs: &GnnInputs,
        s: usize,
        j: usize,
        l: usize,
    ) -> NodeId {
        *self.g0_cols.entry((s, j, l)).or_insert_with(|| {
            let x = tape.constant(&inputs.h2_cols[s][j][l]);
            params.apply_stack(tape, &params.g0, x)
        })
    }

    fn vec(
        &mut self,
        tape: &mut Tape,
        params: &GnnParams,
        inputs: &GnnInputs,
        s: usize,
        j: usize,
    ) -> NodeId {
        *self.gv0_vec.entry((s, j)).or_insert_with(|| {
            let x = tape.constant(&inputs.h2_vec[s][j]);
            params.apply_stack(tape, &params.gv0, x)
        })
    }
}

/// Phase 2 for one relay assignment: initial features seeded from phase 1,
/// D update layers, then phase/beamformer readouts.
pub fn phase2_forward(
    tape: &mut Tape,
    params: &GnnParams,
    inputs: &GnnInputs,
    state1: &Phase1State,
    assign: &[usize],
    cfg: &SystemConfig,
    cache: &mut Phase2Cache,
) -> Result<(Vec<NodeId>, Vec<NodeId>)> {
    if state1.layer != params.dims.d {
        return Err(Error::Sequencing(
            "phase 2 requires the completed phase-1 state".into(),
        ));
    }
    let q = params.dims.q;
    let big_d = params.dims.d;

    let mut s_nodes = Vec::with_capacity(cfg.i);
    for i in 0..cfg.i {
        let j = assign[i];
        let mut feats = Vec::with_capacity(cfg.k * cfg.l);
        for k in 0..cfg.k {
            let s = cfg.stream_index(i, k);
            for l in 0..cfg.l {
                feats.push(cache.col(tape, params, inputs, s, j, l));
            }
        }
        let mean = tape.mean_stack(&feats);
        let s0 = tape.concat(&[mean, state1.r[i]]);
        ensure_width(tape, s0, q * (big_d + 2), "s^(0)")?;
        s_nodes.push(s0);
    }

    let mut v_nodes = Vec::with_capacity(cfg.streams());
    for s in 0..cfg.streams() {
        let j = assign[s / cfg.k];
        let feat = cache.vec(tape, params, inputs, s, j);
        let v0 = tape.concat(&[feat, state1.u[s]]);
        ensure_width(tape, v0, q * (big_d + 2), "v^(0)")?;
        v_nodes.push(v0);
    }

    let mut state = Phase2State {
        s: s_nodes,
        v: v_nodes,
        layer: 0,
    };
    for d in 1..=big_d {
        let stack = &params.g_upd[d - 1];
        let vstack = &params.gv_upd[d - 1];
        let mean_v = tape.mean_stack(&state.v);
        let mut s_next = Vec::with_capacity(state.s.len());
        for &si in &state.s {
            let inp = tape.concat(&[si, mean_v]);
            let upd = params.apply_stack(tape, stack, inp);
            let out = tape.concat(&[upd, si]);
            ensure_width(tape, out, q * (big_d + d + 2), "s^(d)")?;
            s_next.push(out);
        }
        let mut v_next = Vec::with_capacity(state.v.len());
        for s in 0..state.v.len() {
            let group = s / cfg.k;
            let maxed = max_over_others(tape, &state.v, s);
            let inp = tape.concat(&[state.v[s], maxed, state.s[group]]);
            let upd = params.apply_stack(tape, vstack, inp);
            let out = tape.concat(&[upd, state.v[s]]);
            ensure_width(tape, out, q * (big_d + d + 2), "v^(d)")?;
            v_next.push(out);
        }
        state = Phase2State {
            s: s_next,
            v: v_next,
            layer: d,
        };
    }

    let mut theta2 = Vec::with_capacity(cfg.i);
    for &si in &state.s {
        if cfg.fix_theta2_identity {
            let mut ones = vec![0.0; 2 * cfg.n];
            ones[..cfg.n].fill(1.0);
            theta2.push(tape.constant(&ones));
        } else {
            let ro = params.apply_readout(tape, &params.g_ro, si);
            theta2.push(tape.unit_complex(ro));
        }
    }
    let mut f_raw = Vec::with_capacity(cfg.streams());
    for &vs in &state.v {
        f_raw.push(params.apply_readout(tape, &params.gv_ro, vs));
    }
    Ok((theta2, f_raw))
}

pub struct CandidateGraph {
    pub assign: Vec<usize>,
    pub theta2: Vec<NodeId>,
    /// Power-normalized relay beamformers per stream.
    pub f_cols: Vec<NodeId>,
}

pub struct ForwardGraph {
    /// Continuous unit-modulus phase-1 coefficients per RIS.
    pub theta1: Vec<NodeId>,
    /// Power-normalized BS beamformers per stream.
    pub g_cols: Vec<NodeId>,
    pub candidates: Vec<CandidateGraph>,
    pub state1: Phase1State,
}

/// Build the whole differentiable pass: phase 1 once, phase 2 per
/// candidate assignment, power normalization applied on-graph.
pub fn forward_graph(
    tape: &mut Tape,
    params: &GnnParams,
    inputs: &GnnInputs,
    cfg: &SystemConfig,
    candidates: &[Vec<usize>],
) -> Result<ForwardGraph> {
    if !params.dims.compatible_with(cfg) {
        return Err(Error::Config(format!(
            "parameter dims {:?} incompatible with config (q={}, d={}, m={}, n={}, l={}, i={}, j={})",
            params.dims, cfg.q, cfg.d, cfg.m, cfg.n, cfg.l, cfg.i, cfg.j
        )));
    }
    let mut state = phase1_init(tape, params, inputs, cfg)?;
    for d in 1..=params.dims.d {
        state = phase1_update(tape, params, &state, cfg, d)?;
    }
    let (theta1, g_raw) = phase1_readout(tape, params, &state, cfg)?;
    let total = tape.sum_squares(&g_raw);
    let g_cols: Vec<NodeId> = g_raw
        .iter()
        .map(|&g| tape.scale_by_sqrt(g, total, cfg.p_bs_max))
        .collect();

    let mut cache = Phase2Cache::new();
    let mut cands = Vec::with_capacity(candidates.len());
    for assign in candidates {
        let (theta2, f_raw) = phase2_forward(tape, params, inputs, &state, assign, cfg, &mut cache)?;
        let total_f = tape.sum_squares(&f_raw);
        let f_cols: Vec<NodeId> = f_raw
            .iter()
            .map(|&f| tape.scale_by_sqrt(f, total_f, cfg.p_r_max))
            .collect();
        cands.push(CandidateGraph {
            assign: assign.clone(),
            theta2,
            f_cols,
        });
    }
    Ok(ForwardGraph {
        theta1,
        g_cols,
        candidates: cands,
        state1: state,
    })
}

fn node_to_cvec(tape: &Tape, node: NodeId) -> Array1<Complex64> {
    let v = tape.value(node);
    let n = v.len() / 2;
    Array1::from_shape_fn(n, |t| Complex64::new(v[t], v[n + t]))
}

fn cols_to_cmat(tape: &Tape, cols: &[NodeId]) -> Array2<Complex64> {
    let rows = tape.len_of(cols[0]) / 2;
    let mut out = Array2::zeros((rows, cols.len()));
    for (c, &node) in cols.iter().enumerate() {
        let v = node_to_cvec(tape, node);
        out.column_mut(c).assign(&v);
    }
    out
}

/// Materialize the strategy of one candidate. Eval mode quantizes both
/// phase sets to the B-bit alphabet.
pub fn extract_strategy(
    tape: &Tape,
    graph: &ForwardGraph,
    candidate: usize,
    cfg: &SystemConfig,
    mode: Mode,
) -> Strategy {
    let cand = &graph.candidates[candidate];
    let mut theta1: Vec<Array1<Complex64>> =
        graph.theta1.iter().map(|&n| node_to_cvec(tape, n)).collect();
    let mut theta2: Vec<Array1<Complex64>> =
        cand.theta2.iter().map(|&n| node_to_cvec(tape, n)).collect();
    if mode == Mode::Eval {
        for t in theta1.iter_mut().chain(theta2.iter_mut()) {
            *t = Array1::from_vec(quantize_phases(t.as_slice().unwrap(), cfg.b));
        }
    }
    Strategy {
        g: cols_to_cmat(tape, &graph.g_cols),
        f: cols_to_cmat(tape, &cand.f_cols),
        theta1,
        theta2,
        assign: cand.assign.clone(),
    }
}

/// Candidate selection rule shared by the value and graph paths:
/// decode-feasible first, then highest sum rate, first wins ties.
pub fn pick_best(outcomes: &[(bool, f64)]) -> usize {
    let mut best = 0;
    for (idx, &(feasible, rate)) in outcomes.iter().enumerate().skip(1) {
        let (bf, br) = outcomes[best];
        if (feasible && !bf) || (feasible == bf && rate > br) {
            best = idx;
        }
    }
    best
}

/// Run the GNN end to end: enumerate every relay assignment, evaluate each
/// completed candidate strategy, and return the best one with its report.
pub fn forward(
    params: &GnnParams,
    real: &ChannelRealization,
    cfg: &SystemConfig,
    mode: Mode,
) -> Result<(Strategy, RateReport)> {
    let candidates = phy::enumerate_assignments(cfg.i, cfg.j)?;
    forward_with_candidates(params, real, cfg, mode, &candidates)
}

/// Same as [`forward`] but pinned to one fixed assignment.
pub fn forward_pinned(
    params: &GnnParams,
    real: &ChannelRealization,
    cfg: &SystemConfig,
    mode: Mode,
    assign: &[usize],
) -> Result<(Strategy, RateReport)> {
    forward_with_candidates(params, real, cfg, mode, &[assign.to_vec()])
}

pub fn forward_with_candidates(
    params: &GnnParams,
    real: &ChannelRealization,
    cfg: &SystemConfig,
    mode: Mode,
    candidates: &[Vec<usize>],
) -> Result<(Strategy, RateReport)> {
    let inputs = GnnInputs::build(real, cfg)?;
    let mut tape = Tape::new(&params.store);
    let graph = forward_graph(&mut tape, params, &inputs, cfg, candidates)?;
    select_eval_from_graph(&tape, &graph, real, cfg, mode)
}

/// Materialize every candidate of a built graph, evaluate each with the
/// plain physical layer, and return the winner under the selection rule.
pub fn select_eval_from_graph(
    tape: &Tape,
    graph: &ForwardGraph,
    real: &ChannelRealization,
    cfg: &SystemConfig,
    mode: Mode,
) -> Result<(Strategy, RateReport)> {
    let mut evaluated = Vec::with_capacity(graph.candidates.len());
    let mut outcomes = Vec::with_capacity(graph.candidates.len());
    for ci in 0..graph.candidates.len() {
        let strat = extract_strategy(tape, graph, ci, cfg, mode);
        let report = phy::evaluate_strategy(real, &strat, cfg)?;
        outcomes.push((report.decode_feasible(cfg), report.sum_rate));
        evaluated.push((strat, report));
    }
    let best = pick_best(&outcomes);
    Ok(evaluated.swap_remove(best))
}

/// Loss configuration for the differentiable path.
#[derive(Debug, Clone, Copy)]
pub struct LossSpec {
    pub kind: LossKind,
    pub beta: f64,
    pub lambda: f64,
    pub group_sum_penalty: bool,
}

pub struct CandidateSinr {
    pub gamma2: Vec<NodeId>,
    pub rate: Vec<NodeId>,
    pub sum_rate: NodeId,
}

pub struct SinrGraph {
    pub gamma1: Vec<NodeId>,
    /// [relay][stream].
    pub gamma_relay: Vec<Vec<NodeId>>,
    pub candidates: Vec<CandidateSinr>,
}

/// SINRs and rates on the tape. Phase-1 and relay-decode quantities are
/// shared across candidates; phase-2 quantities are per candidate.
pub fn sinr_graph(
    tape: &mut Tape,
    inputs: &GnnInputs,
    graph: &ForwardGraph,
    cfg: &SystemConfig,
) -> SinrGraph {
    let streams = cfg.streams();
    let noise1 = if cfg.noiseless_sinr { 0.0 } else { cfg.sigma_user_sq };

    // phase 1
    let h1: Vec<NodeId> = (0..streams)
        .map(|s| {
            let i = s / cfg.k;
            tape.affine_const(inputs.a1[s].clone(), Some(inputs.c1[s].clone()), graph.theta1[i])
        })
        .collect();
    let mut gamma1 = Vec::with_capacity(streams);
    for s in 0..streams {
        let powers: Vec<NodeId> = (0..streams)
            .map(|t| tape.csq_inner_t(h1[s], graph.g_cols[t]))
            .collect();
        let inter: Vec<NodeId> = (0..streams).filter(|&t| t != s).map(|t| powers[t]).collect();
        let inter_sum = tape.sum_many(&inter);
        let denom = tape.add_const(inter_sum, noise1);
        gamma1.push(tape.div(powers[s], denom));
    }

    // relay decode
    let theta1_all = tape.concat(&graph.theta1);
    let mut gamma_relay = Vec::with_capacity(cfg.j);
    for j in 0..cfg.j {
        let eff = tape.affine_const(
            inputs.b_relay[j].clone(),
            Some(inputs.d_relay[j].clone()),
            theta1_all,
        );
        let alphas: Vec<NodeId> = (0..streams)
            .map(|t| tape.cmatvec(eff, graph.g_cols[t], cfg.l, cfg.m))
            .collect();
        let mut per_stream = Vec::with_capacity(streams);
        for s in 0..streams {
            let nsq = tape.cnorm_sq(alphas[s]);
            if tape.scalar(nsq) == 0.0 {
                per_stream.push(tape.scalar_const(0.0));
                continue;
            }
            let num = tape.square(nsq);
            let inter: Vec<NodeId> = (0..streams)
                .filter(|&t| t != s)
                .map(|t| tape.csq_inner_h(alphas[s], alphas[t]))
                .collect();
            let inter_sum = tape.sum_many(&inter);
            let noise = tape.mul_const(nsq, cfg.sigma_relay_sq);
            let denom = tape.add(inter_sum, noise);
            per_stream.push(tape.div(num, denom));
        }
        gamma_relay.push(per_stream);
    }

    // phase 2 per candidate
    let mut candidates = Vec::with_capacity(graph.candidates.len());
    for cand in &graph.candidates {
        // effective channel of stream s from relay j, lazily per pair
        let mut h2: HashMap<(usize, usize), NodeId> = HashMap::new();
        let mut h2_node = |tape: &mut Tape, s: usize, j: usize| -> NodeId {
            *h2.entry((s, j)).or_insert_with(|| {
                let i = s / cfg.k;
                tape.affine_const(
                    inputs.a2[s][j].clone(),
                    Some(inputs.c2[s][j].clone()),
                    cand.theta2[i],
                )
            })
        };
        let mut gamma2 = Vec::with_capacity(streams);
        let mut rate = Vec::with_capacity(streams);
        for s in 0..streams {
            let mut own = None;
            let mut inter = Vec::with_capacity(streams - 1);
            for t in 0..streams {
                let relay_t = cand.assign[t / cfg.k];
                let h = h2_node(tape, s, relay_t);
                let p = tape.csq_inner_t(h, cand.f_cols[t]);
                if t == s {
                    own = Some(p);
                } else {
                    inter.push(p);
                }
            }
            let inter_sum = tape.sum_many(&inter);
            let denom = tape.add_const(inter_sum, noise1);
            let g2 = tape.div(own.expect("own stream"), denom);
            let total = tape.add(gamma1[s], g2);
            let mut r = tape.log2_one_plus(total);
            if cfg.half_duplex_prelog {
                r = tape.mul_const(r, 0.5);
            }
            gamma2.push(g2);
            rate.push(r);
        }
        let sum_rate = tape.sum_many(&rate);
        candidates.push(CandidateSinr {
            gamma2,
            rate,
            sum_rate,
        });
    }

    SinrGraph {
        gamma1,
        gamma_relay,
        candidates,
    }
}

/// Penalty loss of one candidate:
/// -sum_rate - beta * decode hinges - lambda * rate hinges.
pub fn loss_node(
    tape: &mut Tape,
    sinr: &SinrGraph,
    candidate: usize,
    assign: &[usize],
    cfg: &SystemConfig,
    spec: &LossSpec,
) -> NodeId {
    let cand = &sinr.candidates[candidate];
    let mut parts = vec![tape.mul_const(cand.sum_rate, -1.0)];

    if spec.beta > 0.0 {
        let mut hinges = Vec::new();
        for i in 0..cfg.i {
            let j = assign[i];
            for k in 0..cfg.k {
                let s = cfg.stream_index(i, k);
                let arg = tape.add_const(sinr.gamma_relay[j][s], -cfg.gamma_relay_th);
                hinges.push(tape.min_zero(arg));
            }
        }
        let total = tape.sum_many(&hinges);
        parts.push(tape.mul_const(total, -spec.beta));
    }

    if spec.lambda > 0.0 {
        let mut hinges = Vec::new();
        match spec.kind {
            LossKind::Coarse => {}
            LossKind::Fine => {
                for i in 0..cfg.i {
                    for k in 0..cfg.k {
                        let s = cfg.stream_index(i, k);
                        let arg = tape.add_const(cand.rate[s], -cfg.rate_th_user_at(i, k));
                        hinges.push(tape.min_zero(arg));
                    }
                }
            }
            LossKind::Group => {
                if spec.group_sum_penalty {
                    for i in 0..cfg.i {
                        let group_rates: Vec<NodeId> =
                            (0..cfg.k).map(|k| cand.rate[cfg.stream_index(i, k)]).collect();
                        let total = tape.sum_many(&group_rates);
                        let arg = tape.add_const(total, -cfg.rate_th_group_at(i));
                        hinges.push(tape.min_zero(arg));
                    }
                } else {
                    // the group threshold applied per user, as the
                    // equation is written
                    for i in 0..cfg.i {
                        for k in 0..cfg.k {
                            let s = cfg.stream_index(i, k);
                            let arg = tape.add_const(cand.rate[s], -cfg.rate_th_group_at(i));
                            hinges.push(tape.min_zero(arg));
                        }
                    }
                }
            }
        }
        if !hinges.is_empty() {
            let total = tape.sum_many(&hinges);
            parts.push(tape.mul_const(total, -spec.lambda));
        }
    }

    tape.sum_many(&parts)
}

pub struct TrainForward {
    pub loss: NodeId,
    pub selected: usize,
    pub strategy: Strategy,
    /// Plain re-evaluation of the selected continuous strategy.
    pub report: RateReport,
}

/// Differentiable training pass for one sample: forward, candidate
/// selection on the graph values, loss on the selected branch.
pub fn train_loss_graph(
    tape: &mut Tape,
    params: &GnnParams,
    inputs: &GnnInputs,
    real: &ChannelRealization,
    cfg: &SystemConfig,
    spec: &LossSpec,
) -> Result<TrainForward> {
    let candidates = phy::enumerate_assignments(cfg.i, cfg.j)?;
    train_loss_graph_with(tape, params, inputs, real, cfg, spec, &candidates)
}

/// [`train_loss_graph`] over an explicit candidate-assignment list.
pub fn train_loss_graph_with(
    tape: &mut Tape,
    params: &GnnParams,
    inputs: &GnnInputs,
    real: &ChannelRealization,
    cfg: &SystemConfig,
    spec: &LossSpec,
    candidates: &[Vec<usize>],
) -> Result<TrainForward> {
    let graph = forward_graph(tape, params, inputs, cfg, candidates)?;
    finish_train_graph(tape, inputs, real, cfg, spec, &graph)
}

/// SINR graph, on-graph candidate selection and loss assembly on top of an
/// already-built strategy graph. Shared by the GNN and the dense baseline.
pub fn finish_train_graph(
    tape: &mut Tape,
    inputs: &GnnInputs,
    real: &ChannelRealization,
    cfg: &SystemConfig,
    spec: &LossSpec,
    graph: &ForwardGraph,
) -> Result<TrainForward> {
    let sinr = sinr_graph(tape, inputs, graph, cfg);

    let outcomes: Vec<(bool, f64)> = sinr
        .candidates
        .iter()
        .zip(graph.candidates.iter())
        .map(|(cand, cg)| {
            let feasible = (0..cfg.i).all(|i| {
                (0..cfg.k).all(|k| {
                    let s = cfg.stream_index(i, k);
                    tape.scalar(sinr.gamma_relay[cg.assign[i]][s]) >= cfg.gamma_relay_th
                })
            });
            (feasible, tape.scalar(cand.sum_rate))
        })
        .collect();
    let selected = pick_best(&outcomes);

    let loss = loss_node(tape, &sinr, selected, &graph.candidates[selected].assign.clone(), cfg, spec);
    let strategy = extract_strategy(tape, graph, selected, cfg, Mode::Train);
    let report = phy::evaluate_strategy(real, &strategy, cfg)?;
    Ok(TrainForward {
        loss,
        selected,
        strategy,
        report,
    })
}
