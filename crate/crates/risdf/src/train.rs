//! Unsupervised penalty-method training and gradient verification.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::ChannelRealization;
use crate::config::{LossKind, SystemConfig, TrainConfig};
use crate::error::{Error, Result};
use crate::gnn::{self, GnnInputs, GnnParams, LossSpec, Mode};
use crate::phy::{RateReport, Strategy};
use crate::tape::{Gradients, NodeId, ParamStore, Tape};

/// Coarse loss: negative sum rate plus the decode penalty over streams
/// actually routed through their assigned relay.
pub fn loss_coarse(report: &RateReport, cfg: &SystemConfig, beta: f64) -> f64 {
    let mut loss = -report.sum_rate;
    for i in 0..cfg.i {
        let j = report.assign[i];
        for k in 0..cfg.k {
            let s = cfg.stream_index(i, k);
            loss -= beta * (report.sinr_relay[j][s] - cfg.gamma_relay_th).min(0.0);
        }
    }
    loss
}

/// Group loss: coarse plus the group threshold applied per user as the
/// equation is written (or to the group sum under `group_sum_penalty`).
pub fn loss_group(
    report: &RateReport,
    cfg: &SystemConfig,
    beta: f64,
    lambda: f64,
    group_sum_penalty: bool,
) -> f64 {
    let mut loss = loss_coarse(report, cfg, beta);
    if group_sum_penalty {
        for i in 0..cfg.i {
            let total: f64 = (0..cfg.k).map(|k| report.rate[i][k]).sum();
            loss -= lambda * (total - cfg.rate_th_group_at(i)).min(0.0);
        }
    } else {
        for i in 0..cfg.i {
            for k in 0..cfg.k {
                loss -= lambda * (report.rate[i][k] - cfg.rate_th_group_at(i)).min(0.0);
            }
        }
    }
    loss
}

/// Fine loss: coarse plus per-user rate-demand hinges.
pub fn loss_fine(report: &RateReport, cfg: &SystemConfig, beta: f64, lambda: f64) -> f64 {
    let mut loss = loss_coarse(report, cfg, beta);
    for i in 0..cfg.i {
        for k in 0..cfg.k {
            loss -= lambda * (report.rate[i][k] - cfg.rate_th_user_at(i, k)).min(0.0);
        }
    }
    loss
}

pub fn loss_of_kind(report: &RateReport, cfg: &SystemConfig, spec: &LossSpec) -> f64 {
    match spec.kind {
        LossKind::Coarse => loss_coarse(report, cfg, spec.beta),
        LossKind::Group => loss_group(report, cfg, spec.beta, spec.lambda, spec.group_sum_penalty),
        LossKind::Fine => loss_fine(report, cfg, spec.beta, spec.lambda),
    }
}

/// Anything trainable by the shared loop: the GNN and the flat dense
/// baseline both implement this.
pub trait Model {
    fn store(&self) -> &ParamStore;
    fn store_mut(&mut self) -> &mut ParamStore;
    /// Build the differentiable per-sample loss. `pinned` restricts the
    /// candidate relay assignments (None = enumerate all).
    fn build_loss<'a>(
        &'a self,
        tape: &mut Tape<'a>,
        real: &ChannelRealization,
        cfg: &SystemConfig,
        spec: &LossSpec,
        pinned: Option<&[Vec<usize>]>,
    ) -> Result<(NodeId, TrainStats)>;
    fn eval_forward(
        &self,
        real: &ChannelRealization,
        cfg: &SystemConfig,
    ) -> Result<(Strategy, RateReport)>;
}

pub struct TrainStats {
    pub sum_rate: f64,
    pub selected: Vec<usize>,
}

impl Model for GnnParams {
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
        let inputs = GnnInputs::build(real, cfg)?;
        let tf = match pinned {
            None => gnn::train_loss_graph(tape, self, &inputs, real, cfg, spec)?,
            Some(cands) => gnn::forward::train_loss_graph_with(tape, self, &inputs, real, cfg, spec, cands)?,
        };
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
        gnn::forward(self, real, cfg, Mode::Eval)
    }
}

/// Adam with a 1/(1 + decay * step) learning-rate schedule.
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(store: &ParamStore) -> Self {
        let len = store.total_len();
        Adam {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(&mut self, store: &mut ParamStore, grads: &Gradients, lr0: f64, decay: f64) {
        self.step += 1;
        let lr = lr0 / (1.0 + decay * self.step as f64);
        let b1t = 1.0 - self.beta1.powi(self.step as i32);
        let b2t = 1.0 - self.beta2.powi(self.step as i32);
        let mut off = 0;
        for (p, g) in store.params.iter_mut().zip(grads.by_param.iter()) {
            for (t, (w, &gv)) in p.data.iter_mut().zip(g.iter()).enumerate() {
                let idx = off + t;
                self.m[idx] = self.beta1 * self.m[idx] + (1.0 - self.beta1) * gv;
                self.v[idx] = self.beta2 * self.v[idx] + (1.0 - self.beta2) * gv * gv;
                let mh = self.m[idx] / b1t;
                let vh = self.v[idx] / b2t;
                *w -= lr * mh / (vh.sqrt() + self.eps);
            }
            off += p.data.len();
        }
    }
}

#[derive(Debug, Clone)]
pub struct HistoryRow {
    pub epoch: usize,
    pub loss: f64,
    pub sum_rate: f64,
    pub satisfaction_rate: f64,
}

#[derive(Debug, Clone, Default)]
pub struct History {
    pub rows: Vec<HistoryRow>,
}

impl History {
    pub const CSV_HEADER: &'static str = "epoch,loss,sum_rate,satisfaction_rate";

    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{:.10e},{:.10e},{:.10e}",
                    r.epoch, r.loss, r.sum_rate, r.satisfaction_rate
                )
            })
            .collect()
    }
}

fn spec_from(tcfg: &TrainConfig) -> LossSpec {
    LossSpec {
        kind: tcfg.loss_kind,
        beta: tcfg.beta,
        lambda: tcfg.lambda,
        group_sum_penalty: tcfg.group_sum_penalty,
    }
}

/// Mini-batch training. Per-epoch history carries the mean training loss
/// plus eval-mode (quantized) sum rate and satisfaction over a fixed
/// subset of the training set. Fully deterministic given the seed.
pub fn train<M: Model>(
    model: &mut M,
    dataset: &[ChannelRealization],
    cfg: &SystemConfig,
    tcfg: &TrainConfig,
    mut on_epoch: Option<&mut dyn FnMut(&M, usize, &HistoryRow)>,
) -> Result<History> {
    if dataset.is_empty() {
        return Err(Error::Config("training dataset is empty".into()));
    }
    tcfg.validate()?;
    let spec = spec_from(tcfg);
    let mut adam = Adam::new(model.store());
    let mut history = History::default();
    let eval_count = tcfg.history_eval_samples.min(dataset.len()).max(1);
    let mut best_loss = f64::INFINITY;
    let mut stale = 0usize;

    for epoch in 0..tcfg.epochs {
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
        rng.set_stream(epoch as u64 + 1);
        order.shuffle(&mut rng);

        let mut loss_acc = 0.0;
        for batch in order.chunks(tcfg.batch_size) {
            let mut batch_grads = Gradients::zeros_like(model.store());
            let inv = 1.0 / batch.len() as f64;
            for &s in batch {
                let mut tape = Tape::new(model.store());
                let (loss, _) = model.build_loss(&mut tape, &dataset[s], cfg, &spec, None)?;
                let value = tape.scalar(loss);
                if !value.is_finite() {
                    return Err(Error::NonFinite {
                        what: "loss".into(),
                        sample: s,
                    });
                }
                loss_acc += value;
                let grads = tape.backward(loss);
                batch_grads.add_scaled(&grads, inv);
            }
            adam.step(model.store_mut(), &batch_grads, tcfg.learning_rate, tcfg.lr_decay);
        }
        let mean_loss = loss_acc / dataset.len() as f64;

        let mut rate_acc = 0.0;
        let mut sat_acc = 0.0;
        for real in dataset.iter().take(eval_count) {
            let (_, report) = model.eval_forward(real, cfg)?;
            rate_acc += report.sum_rate;
            sat_acc += report.satisfaction_fraction();
        }
        let row = HistoryRow {
            epoch,
            loss: mean_loss,
            sum_rate: rate_acc / eval_count as f64,
            satisfaction_rate: sat_acc / eval_count as f64,
        };
        if let Some(cb) = on_epoch.as_mut() {
            cb(model, epoch, &row);
        }
        history.rows.push(row);

        if let Some(patience) = tcfg.early_stop_patience {
            if mean_loss < best_loss - 1e-12 {
                best_loss = mean_loss;
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    break;
                }
            }
        }
    }
    Ok(history)
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_coord: usize,
    pub checked: usize,
}

/// Compare analytic gradients against central finite differences
/// (step 1e-5) on a random subset of at least `coords` parameter
/// coordinates. The relay assignment is pinned to the base selection so
/// both FD evaluations differentiate the same smooth branch.
pub fn gradient_check<M: Model>(
    model: &mut M,
    real: &ChannelRealization,
    cfg: &SystemConfig,
    spec: &LossSpec,
    coords: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    let pinned = {
        let mut tape = Tape::new(model.store());
        let (_, stats) = model.build_loss(&mut tape, real, cfg, spec, None)?;
        vec![stats.selected]
    };

    let analytic = {
        let mut tape = Tape::new(model.store());
        let (loss, _) = model.build_loss(&mut tape, real, cfg, spec, Some(&pinned))?;
        tape.backward(loss).flatten()
    };

    let total = model.store().total_len();
    let count = coords.max(50).min(total);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks: Vec<usize> = (0..total).collect();
    picks.shuffle(&mut rng);
    picks.truncate(count);

    let grad_scale = picks
        .iter()
        .map(|&c| analytic[c].abs())
        .fold(0.0f64, f64::max);
    let floor = 1e-6 * grad_scale.max(1.0);

    let h = 1e-5;
    let base = model.store().flatten();
    let mut worst = 0.0f64;
    let mut worst_coord = 0usize;
    let loss_at = |model: &mut M, flat: &[f64]| -> Result<f64> {
        model.store_mut().set_flat(flat);
        let mut tape = Tape::new(model.store());
        let (loss, _) = model.build_loss(&mut tape, real, cfg, spec, Some(&pinned))?;
        Ok(tape.scalar(loss))
    };
    for &c in &picks {
        let mut flat = base.clone();
        flat[c] += h;
        let up = loss_at(model, &flat)?;
        flat[c] -= 2.0 * h;
        let dn = loss_at(model, &flat)?;
        let fd = (up - dn) / (2.0 * h);
        let an = analytic[c];
        let err = (fd - an).abs() / fd.abs().max(an.abs()).max(floor);
        if err > worst {
            worst = err;
            worst_coord = c;
        }
    }
    model.store_mut().set_flat(&base);
    Ok(GradCheckReport {
        max_rel_err: worst,
        worst_coord,
        checked: count,
    })
}
