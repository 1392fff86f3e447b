use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::agents::{Agent, RemoteAgent, RemoteConfig, SyntheticAgent, SyntheticAgentParams};
use crate::engine::DEFAULT_ROUNDS;
use crate::graph::{TopologyKind, TopologySpec, DEFAULT_REWIRE_PROBABILITY};
use crate::rewire::{RewireMode, RewirePolicy};
use crate::uq::DEFAULT_UQ_SAMPLES;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    #[default]
    Synthetic,
    Remote,
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "synthetic" => Ok(Backend::Synthetic),
            "remote" => Ok(Backend::Remote),
            other => Err(format!("unknown backend `{other}` (expected synthetic or remote)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentSettings {
    pub backend: Backend,
    pub competence: f64,
    pub conformity: f64,
    pub distractors: u32,
}

impl Default for AgentSettings {
    fn default() -> Self {
        let p = SyntheticAgentParams::default();
        AgentSettings { backend: Backend::Synthetic, competence: p.competence, conformity: p.conformity, distractors: p.distractors }
    }
}

impl AgentSettings {
    pub fn synthetic(params: SyntheticAgentParams) -> Self {
        AgentSettings {
            backend: Backend::Synthetic,
            competence: params.competence,
            conformity: params.conformity,
            distractors: params.distractors,
        }
    }

    pub fn params(&self) -> SyntheticAgentParams {
        SyntheticAgentParams::new(self.competence, self.conformity, self.distractors)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewireSettings {
    #[serde(default)]
    pub mode: RewireMode,
    pub per_round_budget: Option<usize>,
    pub max_total: Option<usize>,
    pub trigger_round: Option<usize>,
}

impl RewireSettings {
    pub fn policy(&self, n: usize) -> RewirePolicy {
        let base = RewirePolicy::new(self.mode, n);
        RewirePolicy {
            mode: self.mode,
            per_round_budget: self.per_round_budget.unwrap_or(base.per_round_budget),
            max_total: self.max_total.unwrap_or(base.max_total),
            trigger_round: self.trigger_round.unwrap_or(base.trigger_round),
        }
    }
}

/// One topology arm of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyEntry {
    #[serde(default)]
    pub name: Option<String>,
    pub kind: TopologyKind,
    pub n: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub rewire: Option<RewireSettings>,
}

fn default_k() -> usize {
    2
}

fn default_p() -> f64 {
    DEFAULT_REWIRE_PROBABILITY
}

impl TopologyEntry {
    pub fn new(kind: TopologyKind, n: usize, k: usize, p: f64) -> Self {
        TopologyEntry { name: None, kind, n, k, p, rewire: None }
    }

    pub fn from_spec(spec: &TopologySpec) -> Self {
        Self::new(spec.kind, spec.n, spec.k, spec.p)
    }

    /// Explicit name, else the kind with a `+rewire` suffix when rewiring.
    pub fn label(&self) -> String {
        match (&self.name, &self.rewire) {
            (Some(name), _) => name.clone(),
            (None, Some(_)) => format!("{}+rewire", self.kind),
            (None, None) => self.kind.to_string(),
        }
    }

    pub fn spec(&self, seed: u64) -> TopologySpec {
        let k = if self.kind == TopologyKind::Complete { self.n.saturating_sub(1) } else { self.k };
        TopologySpec { kind: self.kind, n: self.n, k, p: self.p, seed }
    }

    pub fn policy(&self) -> Option<RewirePolicy> {
        self.rewire.as_ref().map(|r| r.policy(self.n))
    }
}

/// Opinion-dynamics sweep settings (`[roles]` table).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RolesSettings {
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub steps: usize,
    pub write_trajectories: bool,
}

impl Default for RolesSettings {
    fn default() -> Self {
        RolesSettings { n: 30, k: 4, p: 0.15, alpha: 0.3, sigma: 0.4, steps: 200, write_trajectories: true }
    }
}

/// Topology measurement settings (`[topology_stats]` table).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyStatsSettings {
    pub kind: TopologyKind,
    pub n: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub p_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub dataset: PathBuf,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    /// Worker threads; defaults to `remote.max_in_flight` for the remote
    /// backend and to the machine's parallelism otherwise.
    #[serde(default)]
    pub concurrency: Option<usize>,
    #[serde(default = "default_uq_samples")]
    pub uq_samples: usize,
    /// Use only the first `max_items` dataset items.
    #[serde(default)]
    pub max_items: Option<usize>,
    #[serde(default)]
    pub topologies: Vec<TopologyEntry>,
    #[serde(default)]
    pub agents: AgentSettings,
    #[serde(default)]
    pub remote: RemoteConfig,
    #[serde(default)]
    pub roles: RolesSettings,
    #[serde(default)]
    pub topology_stats: Option<TopologyStatsSettings>,
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_rounds() -> usize {
    DEFAULT_ROUNDS
}

fn default_uq_samples() -> usize {
    DEFAULT_UQ_SAMPLES
}

impl ExperimentConfig {
    pub fn new(dataset: impl Into<PathBuf>, output: impl Into<PathBuf>, topologies: Vec<TopologyEntry>) -> Self {
        ExperimentConfig {
            dataset: dataset.into(),
            output: output.into(),
            seeds: default_seeds(),
            rounds: DEFAULT_ROUNDS,
            concurrency: None,
            uq_samples: DEFAULT_UQ_SAMPLES,
            max_items: None,
            topologies,
            agents: AgentSettings::default(),
            remote: RemoteConfig::default(),
            roles: RolesSettings::default(),
            topology_stats: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    /// Loads a TOML config; relative dataset and output paths resolve
    /// against the config file's directory.
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.dataset, &mut cfg.output] {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let invalid = |s: &str| Err(ExperimentError::Config(s.to_string()));
        if self.topologies.is_empty() {
            return invalid("at least one topology is required");
        }
        if self.seeds.is_empty() {
            return invalid("at least one seed is required");
        }
        if self.rounds == 0 {
            return invalid("rounds must be at least 1");
        }
        if self.concurrency == Some(0) {
            return invalid("concurrency must be at least 1");
        }
        let mut labels: Vec<String> = self.topologies.iter().map(TopologyEntry::label).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return invalid("topology names must be unique; set `name` to tell arms apart");
        }
        for entry in &self.topologies {
            entry.spec(0).validate().map_err(|e| ExperimentError::Config(format!("{}: {e}", entry.label())))?;
            if let Some(policy) = entry.policy() {
                if entry.kind == TopologyKind::Rand {
                    return invalid("rewiring cannot be combined with the rand topology");
                }
                policy.validate().map_err(|e| ExperimentError::Config(format!("{}: {e}", entry.label())))?;
            }
        }
        if self.agents.backend == Backend::Synthetic {
            self.agents.params().validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn threads(&self) -> usize {
        self.concurrency.unwrap_or_else(|| match self.agents.backend {
            Backend::Remote => self.remote.max_in_flight.max(1),
            Backend::Synthetic => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        })
    }

    /// One agent per node for the configured backend.
    pub fn build_agents(&self, n: usize) -> Vec<Box<dyn Agent>> {
        (0..n)
            .map(|_| -> Box<dyn Agent> {
                match self.agents.backend {
                    Backend::Synthetic => Box::new(SyntheticAgent::new(self.agents.params())),
                    Backend::Remote => Box::new(RemoteAgent::new(self.remote.clone())),
                }
            })
            .collect()
    }
}
