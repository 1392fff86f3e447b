//! Communication topologies: ring lattices, complete graphs, per-draw random
//! graphs and Watts-Strogatz small-world rewiring, plus the clustering and
//! path-length measurements used to place a graph on the lattice-to-random
//! continuum.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::Stream;

/// Undirected edge in canonical `(min, max)` form.
pub type Edge = (usize, usize);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("graph needs at least {min} nodes, got {n}")]
    InvalidSize { n: usize, min: usize },
    #[error("ring degree k={k} must be even and within [2, {max}]")]
    InvalidDegree { k: usize, max: usize },
    #[error("rewiring probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("invalid topology spec: {0}")]
    InvalidSpec(String),
    #[error("{m} edges requested but only {max} node pairs exist")]
    TooManyEdges { m: usize, max: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("node {node} out of range for graph with {n} nodes")]
    OutOfRange { node: usize, n: usize },
    #[error("malformed edge list at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Simple undirected graph over nodes `0..n`.
///
/// Adjacency sets are kept sorted, so neighbor iteration order and the
/// canonical edge list are deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "EdgeListRepr", try_from = "EdgeListRepr")]
pub struct Graph {
    adj: Vec<BTreeSet<usize>>,
    edge_count: usize,
}

#[derive(Serialize, Deserialize)]
struct EdgeListRepr {
    n: usize,
    edges: Vec<Edge>,
}

impl From<Graph> for EdgeListRepr {
    fn from(g: Graph) -> Self {
        EdgeListRepr { n: g.n(), edges: g.edges() }
    }
}

impl TryFrom<EdgeListRepr> for Graph {
    type Error = GraphError;

    fn try_from(repr: EdgeListRepr) -> Result<Self, Self::Error> {
        Graph::from_edges(repr.n, repr.edges)
    }
}

impl Graph {
    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Self {
        Graph { adj: vec![BTreeSet::new(); n], edge_count: 0 }
    }

    /// Builds a graph from an edge list. Duplicates (in either orientation)
    /// collapse; self-loops and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self, GraphError> {
        let mut g = Graph::empty(n);
        for (u, v) in edges {
            g.check_pair(u, v)?;
            g.insert(u, v);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && self.adj[u].contains(&v)
    }

    /// Neighbors of `u` in ascending order.
    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[u].iter().copied()
    }

    /// Canonical edge list: `(min, max)` pairs sorted lexicographically.
    pub fn edges(&self) -> Vec<Edge> {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, nbrs)| nbrs.range(u + 1..).map(move |&v| (u, v)))
            .collect()
    }

    /// Returns a copy of the graph with edge `(u, v)` present.
    pub fn add_edge(&self, u: usize, v: usize) -> Result<Graph, GraphError> {
        self.check_pair(u, v)?;
        let mut g = self.clone();
        g.insert(u, v);
        Ok(g)
    }

    pub(crate) fn insert(&mut self, u: usize, v: usize) -> bool {
        let fresh = self.adj[u].insert(v);
        if fresh {
            self.adj[v].insert(u);
            self.edge_count += 1;
        }
        fresh
    }

    fn remove(&mut self, u: usize, v: usize) {
        if self.adj[u].remove(&v) {
            self.adj[v].remove(&u);
            self.edge_count -= 1;
        }
    }

    fn check_pair(&self, u: usize, v: usize) -> Result<(), GraphError> {
        let n = self.n();
        for node in [u, v] {
            if node >= n {
                return Err(GraphError::OutOfRange { node, n });
            }
        }
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        Ok(())
    }

    /// Text edge-list form: `n=<n>` followed by one `u v` line per edge in
    /// canonical order.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n={}\n", self.n());
        for (u, v) in self.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
        let parse_err = |line: usize, reason: &str| GraphError::Parse { line, reason: reason.to_string() };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
        let n: usize = header
            .trim()
            .strip_prefix("n=")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(1, "expected `n=<count>`"))?;
        let mut g = Graph::empty(n);
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace().map(str::parse::<usize>);
            match (fields.next(), fields.next(), fields.next()) {
                (Some(Ok(u)), Some(Ok(v)), None) => {
                    g.check_pair(u, v)?;
                    g.insert(u, v);
                }
                _ => return Err(parse_err(idx + 1, "expected `u v`")),
            }
        }
        Ok(g)
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_edge_list())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyKind {
    Complete,
    Ring,
    Rand,
    SmallWorld,
}

impl TopologyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TopologyKind::Complete => "complete",
            TopologyKind::Ring => "ring",
            TopologyKind::Rand => "rand",
            TopologyKind::SmallWorld => "small-world",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TopologyKind {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "complete" | "full" => Ok(TopologyKind::Complete),
            "ring" | "sparse" => Ok(TopologyKind::Ring),
            "rand" | "random" => Ok(TopologyKind::Rand),
            "small-world" | "smallworld" | "sw" => Ok(TopologyKind::SmallWorld),
            other => Err(GraphError::InvalidSpec(format!("unknown topology kind `{other}`"))),
        }
    }
}

pub const DEFAULT_REWIRE_PROBABILITY: f64 = 0.1;

/// Declarative topology recipe. `k` is ignored for `Complete`, `p` is only
/// used by `SmallWorld`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    pub n: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_k() -> usize {
    2
}

fn default_p() -> f64 {
    DEFAULT_REWIRE_PROBABILITY
}

impl TopologySpec {
    pub fn new(kind: TopologyKind, n: usize, k: usize) -> Self {
        TopologySpec { kind, n, k, p: DEFAULT_REWIRE_PROBABILITY, seed: 0 }
    }

    pub fn complete(n: usize) -> Self {
        Self::new(TopologyKind::Complete, n, n.saturating_sub(1))
    }

    pub fn ring(n: usize, k: usize) -> Self {
        Self::new(TopologyKind::Ring, n, k)
    }

    pub fn rand(n: usize, k: usize) -> Self {
        Self::new(TopologyKind::Rand, n, k)
    }

    pub fn small_world(n: usize, k: usize, p: f64) -> Self {
        TopologySpec { p, ..Self::new(TopologyKind::SmallWorld, n, k) }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        TopologySpec { seed, ..self }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if self.n < 3 {
            return Err(GraphError::InvalidSize { n: self.n, min: 3 });
        }
        if self.kind != TopologyKind::Complete {
            check_degree(self.n, self.k)?;
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(GraphError::InvalidProbability(self.p));
        }
        Ok(())
    }

    /// Edge budget of one draw: `n·k/2` for lattice-based kinds.
    pub fn edge_budget(&self) -> usize {
        match self.kind {
            TopologyKind::Complete => self.n * (self.n - 1) / 2,
            _ => self.n * self.k / 2,
        }
    }
}

fn check_degree(n: usize, k: usize) -> Result<(), GraphError> {
    if !k.is_multiple_of(2) || k < 2 || k + 1 > n {
        return Err(GraphError::InvalidDegree { k, max: n.saturating_sub(1) });
    }
    Ok(())
}

/// Ring lattice: node `i` is adjacent to `(i ± j) mod n` for `j = 1..=k/2`.
pub fn ring_lattice(n: usize, k: usize) -> Result<Graph, GraphError> {
    if n < 3 {
        return Err(GraphError::InvalidSize { n, min: 3 });
    }
    check_degree(n, k)?;
    let mut g = Graph::empty(n);
    for u in 0..n {
        for j in 1..=k / 2 {
            g.insert(u, (u + j) % n);
        }
    }
    Ok(g)
}

pub fn complete_graph(n: usize) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidSize { n, min: 2 });
    }
    let mut g = Graph::empty(n);
    for u in 0..n {
        for v in u + 1..n {
            g.insert(u, v);
        }
    }
    Ok(g)
}

/// Exactly `m` distinct edges drawn uniformly without replacement from all
/// `n(n-1)/2` unordered pairs.
pub fn random_graph(n: usize, m: usize, rng: &mut Stream) -> Result<Graph, GraphError> {
    let pairs = n * n.saturating_sub(1) / 2;
    if m > pairs {
        return Err(GraphError::TooManyEdges { m, max: pairs });
    }
    let mut chosen = rand::seq::index::sample(rng, pairs, m).into_vec();
    chosen.sort_unstable();
    let mut g = Graph::empty(n);
    for idx in chosen {
        let (u, v) = pair_from_index(n, idx);
        g.insert(u, v);
    }
    Ok(g)
}

/// Maps a lexicographic pair index in `[0, n(n-1)/2)` to `(u, v)`, `u < v`.
fn pair_from_index(n: usize, mut idx: usize) -> Edge {
    let mut u = 0;
    loop {
        let row = n - 1 - u;
        if idx < row {
            return (u, u + 1 + idx);
        }
        idx -= row;
        u += 1;
    }
}

/// Small-world rewiring of a ring lattice.
///
/// Nodes are visited in ascending order and, for each, its clockwise lattice
/// edges `(u, u+j mod n)` in ascending `j`. With probability `p` the far
/// endpoint is replaced by a node drawn uniformly among those that are not `u`
/// and not already adjacent to `u`. A node that is already adjacent to every
/// other node keeps the edge. Returns the graph and the created edges in
/// visit order.
pub fn watts_strogatz(spec: &TopologySpec, rng: &mut Stream) -> Result<(Graph, Vec<Edge>), GraphError> {
    if spec.kind != TopologyKind::SmallWorld {
        return Err(GraphError::InvalidSpec(format!("expected small-world spec, got {}", spec.kind)));
    }
    spec.validate()?;
    let n = spec.n;
    let mut g = ring_lattice(n, spec.k)?;
    let mut rewired = Vec::new();
    if spec.p == 0.0 {
        return Ok((g, rewired));
    }
    for u in 0..n {
        for j in 1..=spec.k / 2 {
            let v = (u + j) % n;
            if rng.random::<f64>() >= spec.p {
                continue;
            }
            if g.degree(u) >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != u && !g.has_edge(u, w) {
                    break w;
                }
            };
            g.remove(u, v);
            g.insert(u, w);
            rewired.push((u.min(w), u.max(w)));
        }
    }
    Ok((g, rewired))
}

/// Clustering and path-length summary of a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMetrics {
    pub clustering: f64,
    pub avg_path_len: f64,
    pub connected: bool,
    pub rewired_edges: Vec<Edge>,
}

/// Average local clustering, mean BFS distance over reachable ordered pairs,
/// and connectivity. `rewired_edges` is left empty; see
/// [`metrics_with_rewired`].
pub fn metrics(g: &Graph) -> GraphMetrics {
    let (avg_path_len, connected) = path_stats(g);
    GraphMetrics { clustering: average_clustering(g), avg_path_len, connected, rewired_edges: Vec::new() }
}

pub fn metrics_with_rewired(g: &Graph, rewired: &[Edge]) -> GraphMetrics {
    GraphMetrics { rewired_edges: rewired.to_vec(), ..metrics(g) }
}

/// Local clustering of node `u`; zero below degree two.
pub fn local_clustering(g: &Graph, u: usize) -> f64 {
    let deg = g.degree(u);
    if deg < 2 {
        return 0.0;
    }
    let nbrs: Vec<usize> = g.neighbors(u).collect();
    let mut links = 0usize;
    for (i, &a) in nbrs.iter().enumerate() {
        links += nbrs[i + 1..].iter().filter(|&&b| g.has_edge(a, b)).count();
    }
    links as f64 / (deg * (deg - 1) / 2) as f64
}

pub fn average_clustering(g: &Graph) -> f64 {
    if g.n() == 0 {
        return 0.0;
    }
    let total: f64 = (0..g.n()).map(|u| local_clustering(g, u)).sum();
    total / g.n() as f64
}

/// BFS hop distances from `src`; `None` for unreachable nodes.
pub fn bfs_distances(g: &Graph, src: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.n()];
    dist[src] = Some(0);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        let next = dist[u].map(|d| d + 1);
        for v in g.neighbors(u) {
            if dist[v].is_none() {
                dist[v] = next;
                queue.push_back(v);
            }
        }
    }
    dist
}

fn path_stats(g: &Graph) -> (f64, bool) {
    let n = g.n();
    let mut total = 0usize;
    let mut pairs = 0usize;
    for src in 0..n {
        for (dst, d) in bfs_distances(g, src).into_iter().enumerate() {
            if dst != src {
                if let Some(d) = d {
                    total += d;
                    pairs += 1;
                }
            }
        }
    }
    let connected = pairs == n * n.saturating_sub(1);
    let avg = if pairs == 0 { 0.0 } else { total as f64 / pairs as f64 };
    (avg, connected)
}
