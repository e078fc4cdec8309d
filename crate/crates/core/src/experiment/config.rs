use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::{Arch, TrainConfig};
use crate::policy::{ElasticParams, ImportanceParams, PolicyKind};
use crate::swarm::{AttractionConfig, Placement, RendezvousConfig, VisitBudget};
use crate::walker::MemoryConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSpec {
    Caveman {
        cliques: usize,
        nodes: usize,
    },
    Rgg {
        nodes: usize,
        /// Defaults to the expected-degree-six radius.
        #[serde(default)]
        radius: Option<f64>,
        #[serde(default = "default_retries")]
        max_retries: usize,
    },
}

fn default_retries() -> usize {
    1000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub n_classes: usize,
    pub n_dims: usize,
    pub per_class: usize,
    pub val_frac: f64,
    pub sep: f64,
}

impl Default for DataSpec {
    fn default() -> Self {
        DataSpec {
            n_classes: 10,
            n_dims: 32,
            per_class: 500,
            val_frac: 0.2,
            sep: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionSpec {
    LabelSkew {
        skew_frac: f64,
        labels_lo: usize,
        labels_hi: usize,
    },
    CliqueDominant {
        dominance: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub arch: Arch,
    #[serde(flatten)]
    pub train: TrainConfig,
}

impl Default for LearnerSpec {
    fn default() -> Self {
        LearnerSpec {
            arch: Arch::Softmax,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    #[serde(flatten)]
    pub importance: ImportanceParams,
    #[serde(default)]
    pub confine_to_clique: bool,
    #[serde(default = "one")]
    pub perception_every: u64,
}

fn one() -> u64 {
    1
}

impl Default for PolicySpec {
    fn default() -> Self {
        PolicySpec {
            kind: PolicyKind::Uniform,
            importance: ImportanceParams::default(),
            confine_to_clique: false,
            perception_every: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkerSpec {
    pub count: usize,
    pub placement: Placement,
}

impl Default for WalkerSpec {
    fn default() -> Self {
        WalkerSpec {
            count: 1,
            placement: Placement::Random,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MemorySpec {
    pub enabled: bool,
    /// Explicit `(first_jump, beta)` stages; three equal stages
    /// (0, 0.2, 0.4) over the jump budget when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<(u64, f64)>>,
}

impl MemorySpec {
    pub fn resolve(&self, jumps: u64) -> MemoryConfig {
        match (&self.schedule, self.enabled) {
            (_, false) => MemoryConfig::disabled(),
            (Some(s), true) => MemoryConfig {
                enabled: true,
                schedule: s.clone(),
            },
            (None, true) => MemoryConfig::staged(jumps),
        }
    }
}

/// One complete simulation setup. Serialized as a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub graph: GraphSpec,
    #[serde(default)]
    pub data: DataSpec,
    pub partition: PartitionSpec,
    #[serde(default)]
    pub learner: LearnerSpec,
    #[serde(default)]
    pub policy: PolicySpec,
    #[serde(default)]
    pub elastic: ElasticParams,
    pub visit: VisitBudget,
    #[serde(default)]
    pub walkers: WalkerSpec,
    #[serde(default)]
    pub memory: MemorySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attraction: Option<AttractionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rendezvous: Option<RendezvousConfig>,
    #[serde(default)]
    pub uplink: bool,
    #[serde(default = "yes")]
    pub collisions: bool,
    pub jumps: u64,
    #[serde(default = "one")]
    pub eval_every: u64,
    /// Fraction of final jumps averaged into the tail accuracy.
    #[serde(default = "default_tail")]
    pub tail_frac: f64,
    #[serde(default)]
    pub seeds: Vec<u64>,
}

fn yes() -> bool {
    true
}

fn default_tail() -> f64 {
    0.2
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.jumps == 0 {
            return Err(Error::Config("jump budget must be at least 1".into()));
        }
        if self.walkers.count == 0 {
            return Err(Error::Config("walker count must be at least 1".into()));
        }
        if self.eval_every == 0 || self.policy.perception_every == 0 {
            return Err(Error::Config("evaluation cadences must be positive".into()));
        }
        if !(self.tail_frac > 0.0 && self.tail_frac <= 1.0) {
            return Err(Error::Config("tail_frac must lie in (0,1]".into()));
        }
        if self.learner.train.batch_size == 0
            || !(self.learner.train.learning_rate >= 0.0)
            || !(self.learner.train.l2 >= 0.0)
        {
            return Err(Error::Config("invalid learner hyperparameters".into()));
        }
        if let VisitBudget::Fixed { iters: 0 } = self.visit {
            return Err(Error::Config("fixed visit budget must be at least 1".into()));
        }
        if self.elastic.x_max == 0 {
            return Err(Error::Config("elastic x_max must be at least 1".into()));
        }
        self.policy.importance.validate()?;
        self.memory.resolve(self.jumps).validate()?;
        let caveman = matches!(self.graph, GraphSpec::Caveman { .. });
        let needs_cliques = matches!(self.partition, PartitionSpec::CliqueDominant { .. })
            || self.policy.confine_to_clique
            || self.walkers.placement == Placement::PerClique;
        if needs_cliques && !caveman {
            return Err(Error::Config(
                "clique-dominant data, clique confinement and per-clique placement need a caveman graph"
                    .into(),
            ));
        }
        if let Some(a) = &self.attraction {
            if !(a.strength >= 0.0 && a.base_coeff >= 0.0 && a.base_coeff <= 1.0) {
                return Err(Error::Config("attraction needs A >= 0 and c0 in [0,1]".into()));
            }
        }
        if let Some(r) = &self.rendezvous {
            if r.every == 0 {
                return Err(Error::Config("rendezvous period must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Sets a named numeric field, as used by sweeps.
    pub fn set_axis(&mut self, axis: &str, value: f64) -> Result<()> {
        let as_count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("axis {axis} needs a whole number, got {v}")))
            }
        };
        match axis {
            "walker_count" => self.walkers.count = as_count(value)?,
            "alpha" => self.policy.importance.alpha = value,
            "attraction" | "attraction_strength" => {
                self.attraction.get_or_insert_with(AttractionConfig::default).strength = value
            }
            "base_coeff" => {
                self.attraction.get_or_insert_with(AttractionConfig::default).base_coeff = value
            }
            "fixed_iters" => {
                self.visit = VisitBudget::Fixed {
                    iters: as_count(value)?,
                }
            }
            "learning_rate" => self.learner.train.learning_rate = value,
            "batch_size" => self.learner.train.batch_size = as_count(value)?,
            "jumps" => self.jumps = as_count(value)? as u64,
            "rendezvous_every" => {
                let every = as_count(value)? as u64;
                match &mut self.rendezvous {
                    Some(r) => r.every = every,
                    None => self.rendezvous = Some(RendezvousConfig { every, node: 0 }),
                }
            }
            "skew_frac" => match &mut self.partition {
                PartitionSpec::LabelSkew { skew_frac, .. } => *skew_frac = value,
                PartitionSpec::CliqueDominant { .. } => {
                    return Err(Error::Config("skew_frac needs a label-skew partition".into()))
                }
            },
            "dominance" => match &mut self.partition {
                PartitionSpec::CliqueDominant { dominance } => *dominance = value,
                PartitionSpec::LabelSkew { .. } => {
                    return Err(Error::Config("dominance needs a clique-dominant partition".into()))
                }
            },
            "x_max" => self.elastic.x_max = as_count(value)?,
            "tau1" => self.elastic.tau1 = value,
            "tau2" => self.elastic.tau2 = value,
            "sep" => self.data.sep = value,
            other => return Err(Error::Config(format!("unknown sweep axis '{other}'"))),
        }
        self.validate()
    }
}
