//! Uncertainty-guided shortcut insertion.
//!
//! Between rounds, the engine asks [`apply_rewiring`] to connect the most
//! epistemically distant pair of agents that are not yet neighbors. Added
//! shortcuts persist for the rest of the debate.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Edge, Graph, GraphError};
use crate::uq::{divergence, UncertaintyReport, UqError};

#[derive(Debug, Error)]
pub enum RewireError {
    #[error("uncertainty report covers {report} agents, graph has {graph} nodes")]
    ReportMismatch { report: usize, graph: usize },
    #[error("invalid rewire policy: {0}")]
    InvalidPolicy(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Uq(#[from] UqError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewireMode {
    /// Largest entropy gap: links a confident agent with an uncertain one.
    #[default]
    EntropyBridge,
    /// Largest total variation distance between answer distributions.
    MaxDivergence,
}

impl fmt::Display for RewireMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RewireMode::EntropyBridge => "entropy-bridge",
            RewireMode::MaxDivergence => "max-divergence",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewirePolicy {
    pub mode: RewireMode,
    pub per_round_budget: usize,
    pub max_total: usize,
    pub trigger_round: usize,
}

impl RewirePolicy {
    /// Defaults for `n` agents: one shortcut per round from round 1, at most
    /// `ceil(n/4)` overall.
    pub fn new(mode: RewireMode, n: usize) -> Self {
        RewirePolicy { mode, per_round_budget: 1, max_total: n.div_ceil(4).max(1), trigger_round: 1 }
    }

    pub fn validate(&self) -> Result<(), RewireError> {
        if self.per_round_budget == 0 {
            return Err(RewireError::InvalidPolicy("per_round_budget must be at least 1".into()));
        }
        if self.max_total < self.per_round_budget {
            return Err(RewireError::InvalidPolicy("max_total must be at least per_round_budget".into()));
        }
        if self.trigger_round == 0 {
            return Err(RewireError::InvalidPolicy("trigger_round must be at least 1".into()));
        }
        Ok(())
    }
}

fn check_report(g: &Graph, report: &UncertaintyReport) -> Result<(), RewireError> {
    let aligned = report.per_agent.len() == g.n() && report.per_agent.iter().enumerate().all(|(i, e)| e.agent == i);
    if !aligned {
        return Err(RewireError::ReportMismatch { report: report.per_agent.len(), graph: g.n() });
    }
    Ok(())
}

/// Picks the non-adjacent pair with the largest score under `mode`; ties go
/// to the lexicographically smallest `(u, v)`. `Ok(None)` when every pair is
/// already adjacent.
pub fn select_shortcut(g: &Graph, report: &UncertaintyReport, mode: RewireMode) -> Result<Option<Edge>, RewireError> {
    check_report(g, report)?;
    let entries = &report.per_agent;
    let mut best: Option<(Edge, f64)> = None;
    for u in 0..g.n() {
        for v in u + 1..g.n() {
            if g.has_edge(u, v) {
                continue;
            }
            let score = match mode {
                RewireMode::EntropyBridge => (entries[u].entropy - entries[v].entropy).abs(),
                RewireMode::MaxDivergence => divergence(&entries[u].distribution, &entries[v].distribution)?,
            };
            if best.is_none_or(|(_, s)| score > s) {
                best = Some(((u, v), score));
            }
        }
    }
    Ok(best.map(|(edge, _)| edge))
}

/// Adds up to `per_round_budget` shortcuts without exceeding `max_total`
/// overall. Returns the augmented graph and the edges added, in order.
pub fn apply_rewiring(
    g: &Graph,
    report: &UncertaintyReport,
    policy: &RewirePolicy,
    added_so_far: usize,
) -> Result<(Graph, Vec<Edge>), RewireError> {
    policy.validate()?;
    check_report(g, report)?;
    let allowed = policy.per_round_budget.min(policy.max_total.saturating_sub(added_so_far));
    let mut graph = g.clone();
    let mut added = Vec::new();
    while added.len() < allowed {
        let Some((u, v)) = select_shortcut(&graph, report, policy.mode)? else {
            break;
        };
        graph = graph.add_edge(u, v)?;
        added.push((u, v));
    }
    Ok((graph, added))
}
