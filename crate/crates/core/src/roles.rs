//! Continuous opinion dynamics on a small-world graph.
//!
//! Each step, every node moves toward the mean of the beliefs it receives
//! from its neighbors, and each received belief carries independent Gaussian
//! noise. High-degree nodes average over more noisy messages and settle;
//! low-degree nodes keep fluctuating. Roles are read off the topology alone.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{watts_strogatz, Edge, Graph, GraphError, TopologyKind, TopologySpec};
use crate::rng::{sub_stream, Stream};

pub const BELIEF_CLAMP: f64 = 1.5;

#[derive(Debug, Error)]
pub enum RolesError {
    #[error("role assignment needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("invalid opinion config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialBeliefs {
    /// Independent uniform draws in `[-1, 1]`.
    Uniform,
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionConfig {
    pub topology: TopologySpec,
    pub steps: usize,
    pub self_weight: f64,
    pub msg_noise: f64,
    pub init: InitialBeliefs,
    pub seed: u64,
}

impl OpinionConfig {
    pub fn validate(&self) -> Result<(), RolesError> {
        let invalid = |s: String| Err(RolesError::InvalidConfig(s));
        if self.topology.kind != TopologyKind::SmallWorld {
            return invalid(format!("expected a small-world topology, got {}", self.topology.kind));
        }
        self.topology.validate()?;
        if self.steps == 0 {
            return invalid("steps must be at least 1".into());
        }
        if !(self.self_weight > 0.0 && self.self_weight <= 1.0) {
            return invalid(format!("averaging rate {} must lie in (0, 1]", self.self_weight));
        }
        if !(self.msg_noise >= 0.0 && self.msg_noise.is_finite()) {
            return invalid(format!("message noise {} must be a finite non-negative number", self.msg_noise));
        }
        if let InitialBeliefs::Values(v) = &self.init {
            if v.len() != self.topology.n {
                return invalid(format!("{} initial beliefs for {} nodes", v.len(), self.topology.n));
            }
            if v.iter().any(|b| !b.is_finite()) {
                return invalid("initial beliefs must be finite".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleAssignment {
    pub expert: usize,
    pub loner: usize,
    pub bridge: Option<usize>,
}

impl RoleAssignment {
    pub fn role_of(&self, node: usize) -> &'static str {
        if Some(node) == self.bridge {
            "bridge"
        } else if node == self.expert {
            "expert"
        } else if node == self.loner {
            "loner"
        } else {
            "none"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionTrajectory {
    /// `steps + 1` rows of `n` beliefs; row 0 is the initial condition.
    pub beliefs: Vec<Vec<f64>>,
    /// Variance of each node's beliefs over the last `steps / 2` rows.
    pub per_node_variance: Vec<f64>,
}

/// Bridge: the higher-degree endpoint of the first rewired edge (lower index
/// on ties). Expert: highest-degree other node. Loner: lowest-degree node
/// among the rest. Degree ties go to the lower index.
pub fn assign_roles(g: &Graph, rewired: &[Edge]) -> Result<RoleAssignment, RolesError> {
    let n = g.n();
    if n < 3 {
        return Err(RolesError::TooFewNodes(n));
    }
    let bridge = rewired.first().map(|&(u, v)| {
        let (a, b) = (u.min(v), u.max(v));
        if g.degree(b) > g.degree(a) {
            b
        } else {
            a
        }
    });
    let expert = (0..n)
        .filter(|&i| Some(i) != bridge)
        .fold(None, |best: Option<usize>, i| match best {
            Some(b) if g.degree(b) >= g.degree(i) => Some(b),
            _ => Some(i),
        })
        .expect("n >= 3 leaves a candidate");
    let loner = (0..n)
        .filter(|&i| Some(i) != bridge && i != expert)
        .fold(None, |best: Option<usize>, i| match best {
            Some(b) if g.degree(b) <= g.degree(i) => Some(b),
            _ => Some(i),
        })
        .expect("n >= 3 leaves a candidate");
    Ok(RoleAssignment { expert, loner, bridge })
}

/// One noisy averaging step:
/// `b_i' = (1-α)·b_i + α·mean_j(b_j + σ·ε_ij)` over neighbors `j`, with
/// isolated nodes unchanged and results clamped to `±BELIEF_CLAMP`.
pub fn step(beliefs: &[f64], g: &Graph, self_weight: f64, msg_noise: f64, rng: &mut Stream) -> Vec<f64> {
    (0..beliefs.len())
        .map(|i| {
            let deg = g.degree(i);
            if deg == 0 {
                return beliefs[i];
            }
            let received: f64 = g
                .neighbors(i)
                .map(|j| {
                    let noise = if msg_noise > 0.0 { msg_noise * rng.sample::<f64, _>(StandardNormal) } else { 0.0 };
                    beliefs[j] + noise - beliefs[i]
                })
                .sum();
            // (1-α)·b_i + α·mean(m_j), written as a pull toward the mean so
            // that a consensus state is reproduced exactly.
            let updated = beliefs[i] + self_weight * received / deg as f64;
            updated.clamp(-BELIEF_CLAMP, BELIEF_CLAMP)
        })
        .collect()
}

/// Population variance by Welford's update; exact zero for constant input.
fn variance(values: impl Iterator<Item = f64>) -> f64 {
    let (mut count, mut mean, mut m2) = (0usize, 0.0, 0.0);
    for v in values {
        count += 1;
        let delta = v - mean;
        mean += delta / count as f64;
        m2 += delta * (v - mean);
    }
    if count == 0 {
        0.0
    } else {
        m2 / count as f64
    }
}

/// The graph, its rewired edges and the roles that `cfg` would simulate on.
pub fn build_network(cfg: &OpinionConfig) -> Result<(Graph, Vec<Edge>, RoleAssignment), RolesError> {
    cfg.validate()?;
    let (g, rewired) = watts_strogatz(&cfg.topology, &mut sub_stream(cfg.topology.seed, &[], "small-world"))?;
    let roles = assign_roles(&g, &rewired)?;
    Ok((g, rewired, roles))
}

pub fn simulate(cfg: &OpinionConfig) -> Result<(OpinionTrajectory, RoleAssignment), RolesError> {
    let (g, _, roles) = build_network(cfg)?;
    let n = g.n();
    let init = match &cfg.init {
        InitialBeliefs::Values(v) => v.clone(),
        InitialBeliefs::Uniform => {
            let mut rng = sub_stream(cfg.seed, &[], "opinion-init");
            (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
        }
    };
    let mut rng = sub_stream(cfg.seed, &[], "opinion-noise");
    let mut beliefs = Vec::with_capacity(cfg.steps + 1);
    beliefs.push(init);
    for t in 0..cfg.steps {
        let next = step(&beliefs[t], &g, cfg.self_weight, cfg.msg_noise, &mut rng);
        beliefs.push(next);
    }
    let window = (cfg.steps / 2).max(1);
    let tail = &beliefs[beliefs.len() - window..];
    let per_node_variance = (0..n).map(|i| variance(tail.iter().map(|row| row[i]))).collect();
    Ok((OpinionTrajectory { beliefs, per_node_variance }, roles))
}

/// Writes `step,node,role,belief` rows for every node and step.
pub fn write_trajectory_csv<W: Write>(out: W, traj: &OpinionTrajectory, roles: &RoleAssignment) -> Result<(), RolesError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "node", "role", "belief"])?;
    for (t, row) in traj.beliefs.iter().enumerate() {
        for (i, b) in row.iter().enumerate() {
            w.write_record([t.to_string(), i.to_string(), roles.role_of(i).to_string(), b.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
