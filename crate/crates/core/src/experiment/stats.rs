use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RolesSettings;
use super::ExperimentError;
use crate::engine::{round_graph, DebateConfig};
use crate::graph::{metrics, watts_strogatz, GraphMetrics, TopologyKind, TopologySpec};
use crate::rng::sub_stream;
use crate::roles::{build_network, simulate, write_trajectory_csv, InitialBeliefs, OpinionConfig};

/// One row of the topology table. `seed` is `None` on the per-`p` mean row,
/// where `connected` is the fraction of connected draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyStatsRow {
    pub topology: String,
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub seed: Option<u64>,
    pub clustering: f64,
    pub avg_path_len: f64,
    pub connected: f64,
}

fn measure(spec: &TopologySpec) -> Result<GraphMetrics, ExperimentError> {
    Ok(match spec.kind {
        TopologyKind::SmallWorld => {
            let (g, rewired) = watts_strogatz(spec, &mut sub_stream(spec.seed, &[], "small-world"))?;
            GraphMetrics { rewired_edges: rewired, ..metrics(&g) }
        }
        // A Rand draw is measured as the round-0 graph of a debate seeded with `seed`.
        _ => metrics(&round_graph(&DebateConfig::new(*spec, 1, spec.seed), 0)?),
    })
}

/// Clustering, path length and connectivity per seed plus their means.
/// Small-world specs sweep `p_grid` (falling back to `spec.p` when empty);
/// other kinds ignore the grid.
pub fn topology_stats(spec: &TopologySpec, seeds: &[u64], p_grid: &[f64]) -> Result<Vec<TopologyStatsRow>, ExperimentError> {
    if seeds.is_empty() {
        return Err(ExperimentError::Config("at least one seed is required".into()));
    }
    let grid: Vec<f64> = if spec.kind == TopologyKind::SmallWorld && !p_grid.is_empty() { p_grid.to_vec() } else { vec![spec.p] };
    let k = if spec.kind == TopologyKind::Complete { spec.n.saturating_sub(1) } else { spec.k };
    let mut rows = Vec::new();
    for p in grid {
        let base = TopologySpec { p, k, ..*spec };
        base.validate()?;
        let per_seed = seeds
            .par_iter()
            .map(|&seed| measure(&base.with_seed(seed)).map(|m| (seed, m)))
            .collect::<Result<Vec<_>, _>>()?;
        let row = |seed, clustering, avg_path_len, connected| TopologyStatsRow {
            topology: spec.kind.to_string(),
            n: spec.n,
            k,
            p,
            seed,
            clustering,
            avg_path_len,
            connected,
        };
        let count = per_seed.len() as f64;
        let mean_c = per_seed.iter().map(|(_, m)| m.clustering).sum::<f64>() / count;
        let mean_l = per_seed.iter().map(|(_, m)| m.avg_path_len).sum::<f64>() / count;
        let frac = per_seed.iter().filter(|(_, m)| m.connected).count() as f64 / count;
        for (seed, m) in per_seed {
            rows.push(row(Some(seed), m.clustering, m.avg_path_len, if m.connected { 1.0 } else { 0.0 }));
        }
        rows.push(row(None, mean_c, mean_l, frac));
    }
    Ok(rows)
}

pub fn write_topology_stats_csv<W: Write>(out: W, rows: &[TopologyStatsRow]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["topology", "n", "k", "p", "seed", "clustering", "avg_path_len", "connected"])?;
    for r in rows {
        w.write_record([
            r.topology.clone(),
            r.n.to_string(),
            r.k.to_string(),
            r.p.to_string(),
            r.seed.map_or_else(|| "mean".to_string(), |s| s.to_string()),
            r.clustering.to_string(),
            r.avg_path_len.to_string(),
            r.connected.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-seed outcome of the role simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleSummaryRow {
    pub seed: u64,
    pub expert: usize,
    pub loner: usize,
    pub bridge: Option<usize>,
    pub expert_degree: usize,
    pub loner_degree: usize,
    pub bridge_degree: Option<usize>,
    pub var_expert: f64,
    pub var_loner: f64,
    pub var_bridge: Option<f64>,
}

/// Runs the opinion simulation once per seed. When `output` is given, a
/// `roles_seed<seed>.csv` trajectory is written per seed (if enabled) and a
/// `roles_summary.csv` table at the end.
pub fn roles_sweep(settings: &RolesSettings, seeds: &[u64], output: Option<&Path>) -> Result<Vec<RoleSummaryRow>, ExperimentError> {
    if seeds.is_empty() {
        return Err(ExperimentError::Config("at least one seed is required".into()));
    }
    if let Some(dir) = output {
        fs::create_dir_all(dir)?;
    }
    let rows = seeds
        .par_iter()
        .map(|&seed| -> Result<RoleSummaryRow, ExperimentError> {
            let cfg = OpinionConfig {
                topology: TopologySpec::small_world(settings.n, settings.k, settings.p).with_seed(seed),
                steps: settings.steps,
                self_weight: settings.alpha,
                msg_noise: settings.sigma,
                init: InitialBeliefs::Uniform,
                seed,
            };
            let (g, _, _) = build_network(&cfg)?;
            let (traj, roles) = simulate(&cfg)?;
            if let (Some(dir), true) = (output, settings.write_trajectories) {
                let file = File::create(dir.join(format!("roles_seed{seed}.csv")))?;
                write_trajectory_csv(BufWriter::new(file), &traj, &roles)?;
            }
            let var = |i: usize| traj.per_node_variance[i];
            Ok(RoleSummaryRow {
                seed,
                expert: roles.expert,
                loner: roles.loner,
                bridge: roles.bridge,
                expert_degree: g.degree(roles.expert),
                loner_degree: g.degree(roles.loner),
                bridge_degree: roles.bridge.map(|b| g.degree(b)),
                var_expert: var(roles.expert),
                var_loner: var(roles.loner),
                var_bridge: roles.bridge.map(var),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(dir) = output {
        write_roles_summary_csv(File::create(dir.join("roles_summary.csv"))?, &rows)?;
    }
    Ok(rows)
}

pub fn write_roles_summary_csv<W: Write>(out: W, rows: &[RoleSummaryRow]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
