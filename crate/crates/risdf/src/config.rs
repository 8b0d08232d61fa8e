//! System, topology and training configuration.
//!
//! Configs are plain structs deserializable from a TOML file with
//! `[system]`, `[topology]` and optional `[train]` tables whose keys match
//! the field names below.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-user / per-group rate thresholds accept either a single scalar
/// (applied uniformly) or fully spelled-out arrays in config files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThresholdSpec {
    Uniform(f64),
    PerGroup(Vec<f64>),
    PerUser(Vec<Vec<f64>>),
}

/// All scalar parameters of the system: dimensions, power budgets, noise,
/// thresholds, channel-model constants and GNN architecture sizes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// BS antenna count.
    pub m: usize,
    /// Elements per RIS.
    pub n: usize,
    /// Antennas per relay.
    pub l: usize,
    /// Relay count.
    pub j: usize,
    /// Group count (one RIS per group).
    pub i: usize,
    /// Users per group.
    pub k: usize,
    /// BS transmit power budget (mW).
    pub p_bs_max: f64,
    /// Total relay transmit power budget (mW).
    pub p_r_max: f64,
    /// User AWGN variance (linear, mW).
    pub sigma_user_sq: f64,
    /// Relay AWGN variance (linear, mW).
    pub sigma_relay_sq: f64,
    /// Relay decode SINR threshold (linear).
    pub gamma_relay_th: f64,
    /// RIS phase resolution in bits.
    pub b: usize,
    /// Minimum per-user rate (bps/Hz), uniform or I x K.
    pub rate_th_user: ThresholdSpec,
    /// Minimum per-group rate (bps/Hz), uniform or length I.
    pub rate_th_group: ThresholdSpec,
    /// Rician factor for LoS links (linear).
    pub rician_kappa: f64,
    /// Reference path loss at d0 = 1 m for LoS links.
    pub beta0: f64,
    /// Path loss exponent, NLoS Rayleigh links.
    pub alpha_nlos: f64,
    /// Path loss exponent, LoS Rician links.
    pub alpha_los: f64,
    /// GNN node-update layer count.
    pub d: usize,
    /// GNN feature width (must be even).
    pub q: usize,
    /// RNG seed for channel generation (also fixes the LoS angle draw).
    pub seed: u64,
    /// Drop the noise term from the per-phase SINR denominators
    /// (reproduces the interference-only ratio form).
    #[serde(default)]
    pub noiseless_sinr: bool,
    /// Apply the 1/2 half-duplex pre-log factor to rates. Off by default:
    /// rates are plain log2(1 + SINR).
    #[serde(default)]
    pub half_duplex_prelog: bool,
    /// Freeze phase-1 RIS coefficients to identity (all-ones).
    #[serde(default)]
    pub fix_theta1_identity: bool,
    /// Freeze phase-2 RIS coefficients to identity (all-ones).
    #[serde(default)]
    pub fix_theta2_identity: bool,
}

impl SystemConfig {
    /// Total BS stream count I*K.
    pub fn streams(&self) -> usize {
        self.i * self.k
    }

    /// Flat stream index of user k in group i (group-major order).
    pub fn stream_index(&self, i: usize, k: usize) -> usize {
        i * self.k + k
    }

    pub fn rate_th_user_at(&self, i: usize, k: usize) -> f64 {
        match &self.rate_th_user {
            ThresholdSpec::Uniform(v) => *v,
            ThresholdSpec::PerGroup(v) => v[i],
            ThresholdSpec::PerUser(v) => v[i][k],
        }
    }

    pub fn rate_th_group_at(&self, i: usize) -> f64 {
        match &self.rate_th_group {
            ThresholdSpec::Uniform(v) => *v,
            ThresholdSpec::PerGroup(v) => v[i],
            ThresholdSpec::PerUser(v) => v[i][0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("m", self.m),
            ("n", self.n),
            ("l", self.l),
            ("j", self.j),
            ("i", self.i),
            ("k", self.k),
            ("b", self.b),
            ("d", self.d),
            ("q", self.q),
        ];
        for (name, v) in counts {
            if v < 1 {
                return Err(Error::Config(format!("{name} must be >= 1, got {v}")));
            }
        }
        if self.q % 2 != 0 {
            return Err(Error::Config(format!("q must be even, got {}", self.q)));
        }
        let positives = [
            ("p_bs_max", self.p_bs_max),
            ("p_r_max", self.p_r_max),
            ("sigma_user_sq", self.sigma_user_sq),
            ("sigma_relay_sq", self.sigma_relay_sq),
            ("gamma_relay_th", self.gamma_relay_th),
            ("rician_kappa", self.rician_kappa),
            ("beta0", self.beta0),
            ("alpha_nlos", self.alpha_nlos),
            ("alpha_los", self.alpha_los),
        ];
        for (name, v) in positives {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be > 0 and finite, got {v}")));
            }
        }
        match &self.rate_th_user {
            ThresholdSpec::Uniform(_) => {}
            ThresholdSpec::PerGroup(v) => {
                if v.len() != self.i {
                    return Err(Error::shape("rate_th_user", self.i, v.len()));
                }
            }
            ThresholdSpec::PerUser(v) => {
                if v.len() != self.i || v.iter().any(|row| row.len() != self.k) {
                    return Err(Error::shape(
                        "rate_th_user",
                        format!("{}x{}", self.i, self.k),
                        format!("{:?}", v.iter().map(Vec::len).collect::<Vec<_>>()),
                    ));
                }
            }
        }
        if let ThresholdSpec::PerGroup(v) = &self.rate_th_group {
            if v.len() != self.i {
                return Err(Error::shape("rate_th_group", self.i, v.len()));
            }
        }
        Ok(())
    }

    /// Desk-scale default: every structural feature of the full setup
    /// (two groups, two relays, discrete phases) at sizes where sweeps and
    /// training finish in minutes on one core.
    pub fn desk_scale() -> Self {
        SystemConfig {
            m: 4,
            n: 8,
            l: 2,
            j: 2,
            i: 2,
            k: 2,
            p_bs_max: 20.0,
            p_r_max: 20.0,
            sigma_user_sq: 2e-5,
            sigma_relay_sq: 2e-5,
            gamma_relay_th: 0.01,
            b: 2,
            rate_th_user: ThresholdSpec::Uniform(1.0),
            rate_th_group: ThresholdSpec::Uniform(0.6),
            rician_kappa: 10.0,
            beta0: 1.0,
            alpha_nlos: 3.0,
            alpha_los: 2.2,
            d: 2,
            q: 32,
            seed: 1,
            noiseless_sinr: false,
            half_duplex_prelog: false,
            fix_theta1_identity: false,
            fix_theta2_identity: false,
        }
    }

    /// Full-scale reference setup (the large simulation dimensions).
    pub fn full_scale() -> Self {
        SystemConfig {
            m: 8,
            n: 50,
            l: 4,
            j: 2,
            i: 2,
            k: 4,
            d: 3,
            q: 128,
            ..Self::desk_scale()
        }
    }
}

/// 2-D node coordinates in meters.
pub type Pos = [f64; 2];

pub fn dist(a: Pos, b: Pos) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Placement of the BS, RISs, relays and user-group disks.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkTopology {
    pub bs_pos: Pos,
    pub ris_pos: Vec<Pos>,
    pub relay_pos: Vec<Pos>,
    pub group_center: Vec<Pos>,
    pub group_radius: f64,
}

impl NetworkTopology {
    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        if self.ris_pos.len() != cfg.i {
            return Err(Error::shape("ris_pos", cfg.i, self.ris_pos.len()));
        }
        if self.group_center.len() != cfg.i {
            return Err(Error::shape("group_center", cfg.i, self.group_center.len()));
        }
        if self.relay_pos.len() != cfg.j {
            return Err(Error::shape("relay_pos", cfg.j, self.relay_pos.len()));
        }
        if !(self.group_radius > 0.0) {
            return Err(Error::Config(format!(
                "group_radius must be > 0, got {}",
                self.group_radius
            )));
        }
        let mut nodes: Vec<Pos> = vec![self.bs_pos];
        nodes.extend_from_slice(&self.ris_pos);
        nodes.extend_from_slice(&self.relay_pos);
        for p in nodes.iter().chain(self.group_center.iter()) {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::Config("non-finite coordinate in topology".into()));
            }
        }
        for a in 0..nodes.len() {
            for b in (a + 1)..nodes.len() {
                if dist(nodes[a], nodes[b]) <= 0.0 {
                    return Err(Error::Config(format!(
                        "nodes {a} and {b} coincide in topology"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Reference placement at full scale (Loc1). Groups of users sit in
    /// disks of radius 10 m.
    pub fn loc1() -> Self {
        NetworkTopology {
            bs_pos: [0.0, 0.0],
            ris_pos: vec![[50.0, 100.0], [50.0, -80.0]],
            relay_pos: vec![[100.0, -10.0], [80.0, 25.0]],
            group_center: vec![[200.0, 75.0], [200.0, 10.0]],
            group_radius: 10.0,
        }
    }

    pub fn loc2() -> Self {
        NetworkTopology {
            ris_pos: vec![[75.0, 100.0], [75.0, -80.0]],
            ..Self::loc1()
        }
    }

    pub fn loc3() -> Self {
        NetworkTopology {
            bs_pos: [0.0, 0.0],
            ris_pos: vec![[150.0, 100.0], [150.0, -80.0]],
            relay_pos: vec![[300.0, -10.0], [240.0, 25.0]],
            group_center: vec![[600.0, 75.0], [600.0, 10.0]],
            group_radius: 10.0,
        }
    }

    pub fn loc4() -> Self {
        NetworkTopology {
            ris_pos: vec![[225.0, 100.0], [225.0, -80.0]],
            ..Self::loc3()
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "loc1" | "Loc1" => Ok(Self::loc1()),
            "loc2" | "Loc2" => Ok(Self::loc2()),
            "loc3" | "Loc3" => Ok(Self::loc3()),
            "loc4" | "Loc4" => Ok(Self::loc4()),
            "desk" => Ok(Self::desk_scale()),
            other => Err(Error::Config(format!("unknown topology preset `{other}`"))),
        }
    }

    /// Loc1 shrunk to 0.22x. This keeps the noise-limited operating point
    /// of the full-scale setup (per-stream SNR of a few) while making the
    /// RIS cascade comparable in strength to the direct link, so phase
    /// design actually matters.
    pub fn desk_scale() -> Self {
        let mut t = Self::loc1();
        let scale = |p: &mut Pos| {
            p[0] *= 0.22;
            p[1] *= 0.22;
        };
        scale(&mut t.bs_pos);
        t.ris_pos.iter_mut().for_each(scale);
        t.relay_pos.iter_mut().for_each(scale);
        t.group_center.iter_mut().for_each(scale);
        t.group_radius = 2.2;
        t
    }

    /// Truncate/adapt a 2-group preset to `cfg.i` groups and `cfg.j` relays.
    pub fn adapt(mut self, cfg: &SystemConfig) -> Result<Self> {
        if self.ris_pos.len() < cfg.i || self.relay_pos.len() < cfg.j {
            return Err(Error::Config(format!(
                "topology preset has {} RIS / {} relays, config needs {} / {}",
                self.ris_pos.len(),
                self.relay_pos.len(),
                cfg.i,
                cfg.j
            )));
        }
        self.ris_pos.truncate(cfg.i);
        self.group_center.truncate(cfg.i);
        self.relay_pos.truncate(cfg.j);
        Ok(self)
    }
}

/// Penalty-loss granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Coarse,
    Group,
    Fine,
}

impl std::str::FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coarse" => Ok(LossKind::Coarse),
            "group" => Ok(LossKind::Group),
            "fine" => Ok(LossKind::Fine),
            other => Err(Error::Config(format!("unknown loss kind `{other}`"))),
        }
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub loss_kind: LossKind,
    /// Decode-penalty weight.
    pub beta: f64,
    /// Rate-penalty weight.
    pub lambda: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Learning-rate decay: lr_t = lr / (1 + decay * step).
    pub lr_decay: f64,
    pub seed: u64,
    /// Write a checkpoint every this many epochs (0 = only at the end).
    #[serde(default)]
    pub checkpoint_every: usize,
    /// Apply the group rate penalty to the group SUM rate instead of
    /// per user as the equation is written.
    #[serde(default)]
    pub group_sum_penalty: bool,
    /// Optional early stop: halt when the epoch-mean loss has not improved
    /// for this many epochs. None reproduces fixed-epoch training.
    #[serde(default)]
    pub early_stop_patience: Option<usize>,
    /// Cap on samples used for the per-epoch eval-mode history metrics.
    #[serde(default = "default_history_samples")]
    pub history_eval_samples: usize,
}

fn default_history_samples() -> usize {
    256
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beta < 0.0 || self.lambda < 0.0 {
            return Err(Error::Config("beta and lambda must be >= 0".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        Ok(())
    }

    pub fn default_desk() -> Self {
        TrainConfig {
            loss_kind: LossKind::Fine,
            beta: 1000.0,
            lambda: 100.0,
            epochs: 40,
            batch_size: 64,
            learning_rate: 0.002,
            lr_decay: 1e-6,
            seed: 7,
            checkpoint_every: 0,
            group_sum_penalty: false,
            early_stop_patience: None,
            history_eval_samples: 256,
        }
    }
}

/// A TOML config file: `[system]`, `[topology]`, optional `[train]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigFile {
    pub system: SystemConfig,
    pub topology: NetworkTopology,
    #[serde(default)]
    pub train: Option<TrainConfig>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ConfigFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        cfg.system.validate()?;
        cfg.topology.validate(&cfg.system)?;
        if let Some(t) = &cfg.train {
            t.validate()?;
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
