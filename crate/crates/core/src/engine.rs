//! Synchronous multi-round debate over a communication graph.
//!
//! Round 0: every agent answers alone. Round `t ≥ 1`: agent `i` sees the
//! round `t-1` messages of its neighbors in the round-`t` graph. Agents are
//! evaluated in parallel inside a round; every random draw comes from a
//! sub-stream keyed by `(seed, agent, round, purpose)`, so the result does
//! not depend on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{message_plurality, Agent, AgentError, AgentMessage, QARecord, TokenCost, Turn};
use crate::graph::{random_graph, ring_lattice, complete_graph, watts_strogatz, Edge, Graph, GraphError, TopologyKind, TopologySpec};
use crate::rewire::{apply_rewiring, RewireError, RewireMode, RewirePolicy};
use crate::rng::{derive_seed, sub_stream, Stream};
use crate::uq::{sample_distribution, AnswerSource, UncertaintyReport, UqError, DEFAULT_UQ_SAMPLES};

pub const DEFAULT_ROUNDS: usize = 4;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid debate config: {0}")]
    InvalidConfig(String),
    #[error("agent {agent} failed in round {round}: {source}")]
    AgentFailure { agent: usize, round: usize, source: AgentError },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Rewire(#[from] RewireError),
    #[error(transparent)]
    Uq(#[from] UqError),
    #[error("traces have different lengths ({expected} vs {found})")]
    LengthMismatch { expected: usize, found: usize },
    #[error("need at least two traces, got {0}")]
    TooFewTraces(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebateConfig {
    pub topology: TopologySpec,
    pub rounds: usize,
    pub seed: u64,
    #[serde(default)]
    pub rewire: Option<RewirePolicy>,
    #[serde(default = "default_uq_samples")]
    pub uq_samples: usize,
}

fn default_uq_samples() -> usize {
    DEFAULT_UQ_SAMPLES
}

impl DebateConfig {
    pub fn new(topology: TopologySpec, rounds: usize, seed: u64) -> Self {
        DebateConfig { topology, rounds, seed, rewire: None, uq_samples: DEFAULT_UQ_SAMPLES }
    }

    pub fn with_rewire(self, policy: RewirePolicy) -> Self {
        DebateConfig { rewire: Some(policy), ..self }
    }

    pub fn validate(&self, agents: usize) -> Result<(), EngineError> {
        self.topology.validate()?;
        if agents != self.topology.n {
            return Err(EngineError::InvalidConfig(format!(
                "topology has {} nodes but {} agents were supplied",
                self.topology.n, agents
            )));
        }
        if self.rounds == 0 {
            return Err(EngineError::InvalidConfig("rounds must be at least 1".into()));
        }
        if let Some(policy) = &self.rewire {
            policy.validate()?;
            if self.topology.kind == TopologyKind::Rand {
                return Err(EngineError::InvalidConfig(
                    "rewiring is not supported on the rand topology, whose graph is redrawn every round".into(),
                ));
            }
            if self.uq_samples == 0 {
                return Err(EngineError::InvalidConfig("uq_samples must be at least 1 when rewiring".into()));
            }
        }
        Ok(())
    }
}

/// Per-round consensus measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusPoint {
    /// Largest answer cluster over `n`.
    pub agreement: f64,
    /// Agents answering gold over `n`; abstentions count as wrong.
    pub accuracy: f64,
    pub plurality_answer: Option<String>,
}

pub fn consensus_point(messages: &[AgentMessage], gold: &str) -> ConsensusPoint {
    let n = messages.len().max(1) as f64;
    let plurality = message_plurality(messages);
    let correct = messages.iter().filter(|m| m.answer.as_deref() == Some(gold)).count();
    ConsensusPoint {
        agreement: plurality.as_ref().map_or(0.0, |(_, c)| *c as f64 / n),
        accuracy: correct as f64 / n,
        plurality_answer: plurality.map(|(a, _)| a),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShortcutEvent {
    pub round: usize,
    pub shortcut: [usize; 2],
    pub mode: RewireMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Index into [`DebateState::graphs`].
    pub graph: usize,
    pub messages: Vec<AgentMessage>,
    /// For each agent, the senders whose messages were in its prompt.
    pub visible: Vec<Vec<usize>>,
    pub consensus: ConsensusPoint,
    /// Report that drove rewiring before this round, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<UncertaintyReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebateState {
    pub item_id: String,
    pub per_round: Vec<RoundRecord>,
    /// Distinct graph snapshots, in order of first use.
    pub graphs: Vec<Graph>,
    pub final_answer: Option<String>,
    /// Sum of all message token costs.
    pub tokens_total: TokenCost,
    /// Cost of uncertainty probes, kept apart from message traffic.
    pub uq_probe_tokens: TokenCost,
    pub shortcuts: Vec<ShortcutEvent>,
}

impl DebateState {
    pub fn graph_at(&self, round: usize) -> &Graph {
        &self.graphs[self.per_round[round].graph]
    }
}

/// The static graph for Complete, Ring and SmallWorld specs, with the
/// small-world rewired edges (empty otherwise). Rand specs have no static
/// graph and yield an edgeless one; use [`round_graph`].
pub fn base_graph(spec: &TopologySpec) -> Result<(Graph, Vec<Edge>), GraphError> {
    spec.validate()?;
    match spec.kind {
        TopologyKind::Complete => Ok((complete_graph(spec.n)?, Vec::new())),
        TopologyKind::Ring => Ok((ring_lattice(spec.n, spec.k)?, Vec::new())),
        TopologyKind::SmallWorld => watts_strogatz(spec, &mut sub_stream(spec.seed, &[], "small-world")),
        TopologyKind::Rand => Ok((Graph::empty(spec.n), Vec::new())),
    }
}

/// Graph in effect for `round` before any rewiring. Rand draws
/// `n·k/2` fresh edges per round from a round-keyed stream of the debate
/// seed; other kinds return the same graph every round.
pub fn round_graph(cfg: &DebateConfig, round: usize) -> Result<Graph, GraphError> {
    let spec = &cfg.topology;
    match spec.kind {
        TopologyKind::Rand => {
            spec.validate()?;
            random_graph(spec.n, spec.edge_budget(), &mut sub_stream(cfg.seed, &[round as u64], "rand-round"))
        }
        _ => base_graph(spec).map(|(g, _)| g),
    }
}

/// Replays one agent's turn as an answer source, accumulating probe cost.
struct TurnProbe<'a, A: ?Sized> {
    agent: &'a A,
    turn: Turn<'a>,
    cost: TokenCost,
}

impl<A: Agent + ?Sized> AnswerSource for TurnProbe<'_, A> {
    fn sample(&mut self, _item: &QARecord, _index: usize, rng: &mut Stream) -> Result<Option<String>, AgentError> {
        let msg = self.agent.respond(&self.turn, rng)?;
        self.cost += msg.token_cost;
        Ok(msg.answer)
    }
}

fn push_graph(graphs: &mut Vec<Graph>, g: &Graph) -> usize {
    match graphs.last() {
        Some(last) if last == g => graphs.len() - 1,
        _ => {
            graphs.push(g.clone());
            graphs.len() - 1
        }
    }
}

/// Runs one debate on `item`.
pub fn run_debate<A: Agent>(cfg: &DebateConfig, agents: &[A], item: &QARecord) -> Result<DebateState, EngineError> {
    cfg.validate(agents.len())?;
    let n = agents.len();
    let (mut static_graph, _) = base_graph(&cfg.topology)?;
    let mut graphs: Vec<Graph> = Vec::new();
    let mut per_round: Vec<RoundRecord> = Vec::with_capacity(cfg.rounds + 1);
    let mut shortcuts: Vec<ShortcutEvent> = Vec::new();
    let mut uq_probe_tokens = TokenCost::default();

    for round in 0..=cfg.rounds {
        let mut uncertainty = None;
        let graph = if cfg.topology.kind == TopologyKind::Rand {
            round_graph(cfg, round)?
        } else {
            if let Some(policy) = cfg.rewire.as_ref().filter(|p| round >= p.trigger_round) {
                let (report, cost) = probe_uncertainty(cfg, agents, item, &per_round, round - 1)?;
                uq_probe_tokens += cost;
                let (g, added) = apply_rewiring(&static_graph, &report, policy, shortcuts.len())?;
                static_graph = g;
                shortcuts.extend(added.into_iter().map(|(u, v)| ShortcutEvent { round, shortcut: [u, v], mode: policy.mode }));
                uncertainty = Some(report);
            }
            static_graph.clone()
        };

        let visible: Vec<Vec<usize>> =
            (0..n).map(|i| if round == 0 { Vec::new() } else { graph.neighbors(i).collect() }).collect();
        let messages = agents
            .par_iter()
            .enumerate()
            .map(|(i, agent)| {
                let neighbors = gather(&per_round, round, &visible[i]);
                let turn = Turn { item, round, agent: i, neighbors: &neighbors };
                let mut rng = sub_stream(cfg.seed, &[i as u64, round as u64], "answer");
                agent.respond(&turn, &mut rng).map_err(|source| EngineError::AgentFailure { agent: i, round, source })
            })
            .collect::<Result<Vec<_>, _>>()?;

        let consensus = consensus_point(&messages, &item.gold);
        let graph_id = push_graph(&mut graphs, &graph);
        per_round.push(RoundRecord { round, graph: graph_id, messages, visible, consensus, uncertainty });
    }

    let last = &per_round[cfg.rounds];
    let final_answer = last.consensus.plurality_answer.clone();
    let tokens_total = per_round.iter().flat_map(|r| r.messages.iter().map(|m| m.token_cost)).sum();
    Ok(DebateState { item_id: item.id.clone(), per_round, graphs, final_answer, tokens_total, uq_probe_tokens, shortcuts })
}

/// Messages of `senders` from the round before `round`.
fn gather(per_round: &[RoundRecord], round: usize, senders: &[usize]) -> Vec<AgentMessage> {
    match round.checked_sub(1) {
        Some(prev) => senders.iter().map(|&j| per_round[prev].messages[j].clone()).collect(),
        None => Vec::new(),
    }
}

/// Re-asks every agent its round-`round` turn `uq_samples` times.
fn probe_uncertainty<A: Agent>(
    cfg: &DebateConfig,
    agents: &[A],
    item: &QARecord,
    per_round: &[RoundRecord],
    round: usize,
) -> Result<(UncertaintyReport, TokenCost), EngineError> {
    let record = &per_round[round];
    let probes = agents
        .par_iter()
        .enumerate()
        .map(|(i, agent)| {
            let neighbors = gather(per_round, round, &record.visible[i]);
            let mut probe = TurnProbe { agent, turn: Turn { item, round, agent: i, neighbors: &neighbors }, cost: TokenCost::default() };
            let seed = derive_seed(cfg.seed, &[i as u64, round as u64], "uq-probe");
            let dist = sample_distribution(&mut probe, item, cfg.uq_samples, seed).map_err(|e| match e {
                UqError::Agent(source) => EngineError::AgentFailure { agent: i, round, source },
                other => other.into(),
            })?;
            Ok((dist, probe.cost))
        })
        .collect::<Result<Vec<_>, EngineError>>()?;
    let cost = probes.iter().map(|(_, c)| *c).sum();
    let report = UncertaintyReport::from_distributions(probes.into_iter().map(|(d, _)| d).collect())?;
    Ok((report, cost))
}

/// The `R+1` per-round consensus points of a finished debate.
pub fn consensus_trace(state: &DebateState) -> Vec<ConsensusPoint> {
    state.per_round.iter().map(|r| r.consensus.clone()).collect()
}

pub fn agreement_trace(state: &DebateState) -> Vec<f64> {
    state.per_round.iter().map(|r| r.consensus.agreement).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStability {
    pub mean_curve: Vec<f64>,
    /// Population standard deviation across traces, per round.
    pub per_round_std: Vec<f64>,
    /// Mean of `|x[t+1] - x[t]|` over all traces and rounds.
    pub mean_abs_round_delta: f64,
}

/// Pointwise mean and spread of equally long traces, plus their mean
/// absolute round-to-round change.
pub fn trace_stability(traces: &[Vec<f64>]) -> Result<TraceStability, EngineError> {
    if traces.len() < 2 {
        return Err(EngineError::TooFewTraces(traces.len()));
    }
    let len = traces[0].len();
    if let Some(bad) = traces.iter().find(|t| t.len() != len) {
        return Err(EngineError::LengthMismatch { expected: len, found: bad.len() });
    }
    let count = traces.len() as f64;
    let mean_curve: Vec<f64> = (0..len).map(|r| traces.iter().map(|t| t[r]).sum::<f64>() / count).collect();
    let per_round_std = (0..len)
        .map(|r| (traces.iter().map(|t| (t[r] - mean_curve[r]).powi(2)).sum::<f64>() / count).sqrt())
        .collect();
    let deltas: Vec<f64> = traces.iter().flat_map(|t| t.windows(2).map(|w| (w[1] - w[0]).abs())).collect();
    let mean_abs_round_delta = if deltas.is_empty() { 0.0 } else { deltas.iter().sum::<f64>() / deltas.len() as f64 };
    Ok(TraceStability { mean_curve, per_round_std, mean_abs_round_delta })
}
