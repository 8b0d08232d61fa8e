//! Experiment description files for `risdf sweep`.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use risdf::config::{NetworkTopology, SystemConfig, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    JofdTg,
    JogdTg,
    JocdTg,
    JofdDnn,
    JofdPso,
    JofdRandom,
    Oracle,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::JofdTg => "jofd_tg",
            Method::JogdTg => "jogd_tg",
            Method::JocdTg => "jocd_tg",
            Method::JofdDnn => "jofd_dnn",
            Method::JofdPso => "jofd_pso",
            Method::JofdRandom => "jofd_random",
            Method::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> anyhow::Result<Method> {
        Ok(match s {
            "jofd_tg" => Method::JofdTg,
            "jogd_tg" => Method::JogdTg,
            "jocd_tg" => Method::JocdTg,
            "jofd_dnn" => Method::JofdDnn,
            "jofd_pso" => Method::JofdPso,
            "jofd_random" => Method::JofdRandom,
            "oracle" => Method::Oracle,
            other => bail!("unknown method `{other}`"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVar {
    Lambda,
    M,
    L,
    N,
    K,
    Loc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Number(f64),
    Name(String),
}

impl SweepValue {
    pub fn label(&self) -> String {
        match self {
            SweepValue::Number(v) => {
                if v.fract() == 0.0 {
                    format!("{}", *v as i64)
                } else {
                    format!("{v}")
                }
            }
            SweepValue::Name(s) => s.clone(),
        }
    }
}

/// A sweep scenario: base config plus a swept variable, the methods to run
/// and dataset sizes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: String,
    pub methods: Vec<String>,
    /// Swept variable; omit for a single-point run.
    pub sweep: Option<SweepVar>,
    #[serde(default)]
    pub values: Vec<SweepValue>,
    pub num_train: usize,
    pub num_test: usize,
    pub out_dir: String,
    /// Evaluation cap for the per-realization PSO baseline.
    #[serde(default = "default_pso_samples")]
    pub pso_samples: usize,
    /// Evaluation cap for the exhaustive oracle.
    #[serde(default = "default_pso_samples")]
    pub oracle_samples: usize,
    #[serde(default)]
    pub system: Option<SystemConfig>,
    #[serde(default)]
    pub topology: Option<NetworkTopology>,
    #[serde(default)]
    pub train: Option<TrainConfig>,
}

fn default_pso_samples() -> usize {
    50
}

impl ExperimentSpec {
    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let spec: ExperimentSpec = toml::from_str(&text).context("parsing experiment spec")?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.methods.is_empty() {
            bail!("methods list is empty");
        }
        for m in &self.methods {
            Method::parse(m)?;
        }
        if self.sweep.is_some() && self.values.is_empty() {
            bail!("sweep declared but values list is empty");
        }
        if self.num_train == 0 || self.num_test == 0 {
            bail!("num_train and num_test must be positive");
        }
        Ok(())
    }

    pub fn methods(&self) -> Vec<Method> {
        self.methods.iter().map(|m| Method::parse(m).unwrap()).collect()
    }

    pub fn base_system(&self) -> SystemConfig {
        self.system.clone().unwrap_or_else(SystemConfig::desk_scale)
    }

    pub fn base_topology(&self) -> NetworkTopology {
        self.topology.clone().unwrap_or_else(NetworkTopology::desk_scale)
    }

    pub fn base_train(&self) -> TrainConfig {
        self.train.clone().unwrap_or_else(TrainConfig::default_desk)
    }

    /// Apply one sweep value to (system, topology, train) configs.
    pub fn apply(
        &self,
        value: &SweepValue,
        cfg: &mut SystemConfig,
        topo: &mut NetworkTopology,
        tcfg: &mut TrainConfig,
    ) -> anyhow::Result<()> {
        let Some(var) = self.sweep else {
            return Ok(());
        };
        match (var, value) {
            (SweepVar::Lambda, SweepValue::Number(v)) => tcfg.lambda = *v,
            (SweepVar::M, SweepValue::Number(v)) => cfg.m = *v as usize,
            (SweepVar::L, SweepValue::Number(v)) => cfg.l = *v as usize,
            (SweepVar::N, SweepValue::Number(v)) => cfg.n = *v as usize,
            (SweepVar::K, SweepValue::Number(v)) => cfg.k = *v as usize,
            (SweepVar::Loc, SweepValue::Name(name)) => {
                *topo = NetworkTopology::by_name(name)?.adapt(cfg)?;
            }
            (var, value) => bail!("sweep {var:?} cannot take value {value:?}"),
        }
        Ok(())
    }
}
