use std::fs::{self, File};
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use swarm_core::experiment::{
    parse_seeds, read_records, roles_sweep, run_experiment, summarize, topology_stats, write_summary_csv,
    write_topology_stats_csv, write_traces_csv, Backend, ExperimentConfig, RolesSettings, SUMMARY_FILE, TRACES_FILE,
};
use swarm_core::graph::{TopologyKind, TopologySpec};

#[derive(Parser)]
#[command(name = "swarm", version, about = "Multi-agent debate over small-world communication topologies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run debates for every configured topology, seed and item.
    Debate(DebateArgs),
    /// Clustering and path length of a topology over seeds (and a p grid).
    TopologyStats(TopologyStatsArgs),
    /// Opinion-dynamics role simulation sweep.
    Roles(RolesArgs),
    /// Re-aggregate an existing results.jsonl.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct Common {
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed list, e.g. `0..20` or `1,2,5`.
    #[arg(long)]
    seeds: Option<String>,
}

#[derive(Args)]
struct DebateArgs {
    #[command(flatten)]
    common: Common,
    /// Output directory (overrides the config).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    backend: Option<Backend>,
    #[arg(long)]
    base_url: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Worker threads.
    #[arg(long)]
    concurrency: Option<usize>,
}

#[derive(Args)]
struct TopologyStatsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    kind: Option<TopologyKind>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    /// Comma-separated rewiring probabilities (small-world only).
    #[arg(long, value_delimiter = ',')]
    p_grid: Option<Vec<f64>>,
    /// Directory for topology_stats.csv; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RolesArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Skip the per-seed trajectory CSVs.
    #[arg(long)]
    no_trajectories: bool,
    /// Directory for roles_summary.csv and trajectories; summary to stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    /// results.jsonl produced by `debate`.
    results: PathBuf,
    /// Directory for summary.csv and traces.csv; summary to stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<Option<ExperimentConfig>> {
    path.map(|p| ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))).transpose()
}

fn seeds_or(common: &Common, fallback: Option<&[u64]>) -> Result<Vec<u64>> {
    match (&common.seeds, fallback) {
        (Some(text), _) => Ok(parse_seeds(text)?),
        (None, Some(seeds)) => Ok(seeds.to_vec()),
        (None, None) => Ok(vec![0]),
    }
}

fn debate(args: DebateArgs) -> Result<()> {
    let Some(mut cfg) = load_config(args.common.config.as_deref())? else {
        bail!("`debate` needs --config");
    };
    if args.common.seeds.is_some() {
        cfg.seeds = seeds_or(&args.common, None)?;
    }
    if let Some(out) = args.output {
        cfg.output = out;
    }
    if let Some(backend) = args.backend {
        cfg.agents.backend = backend;
    }
    if let Some(url) = args.base_url {
        cfg.remote.base_url = url;
    }
    if let Some(model) = args.model {
        cfg.remote.model = model;
    }
    if args.concurrency.is_some() {
        cfg.concurrency = args.concurrency;
    }
    let out = run_experiment(&cfg)?;
    eprintln!("wrote {} records to {}", out.records.len(), cfg.output.display());
    Ok(())
}

fn topology_stats_cmd(args: TopologyStatsArgs) -> Result<()> {
    let cfg = load_config(args.common.config.as_deref())?;
    let base = cfg.as_ref().and_then(|c| c.topology_stats.clone());
    let kind = args.kind.or(base.as_ref().map(|b| b.kind)).unwrap_or(TopologyKind::SmallWorld);
    let n = args.n.or(base.as_ref().map(|b| b.n)).context("--n is required")?;
    let mut spec = TopologySpec::new(kind, n, args.k.or(base.as_ref().map(|b| b.k)).unwrap_or(2));
    if let Some(p) = args.p.or(base.as_ref().map(|b| b.p)) {
        spec.p = p;
    }
    let grid = args.p_grid.or(base.map(|b| b.p_grid)).unwrap_or_default();
    let seeds = seeds_or(&args.common, cfg.as_ref().map(|c| c.seeds.as_slice()))?;
    let rows = topology_stats(&spec, &seeds, &grid)?;
    match args.output {
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            write_topology_stats_csv(File::create(dir.join("topology_stats.csv"))?, &rows)?;
        }
        None => write_topology_stats_csv(io::stdout().lock(), &rows)?,
    }
    Ok(())
}

fn roles_cmd(args: RolesArgs) -> Result<()> {
    let cfg = load_config(args.common.config.as_deref())?;
    let base = cfg.as_ref().map(|c| c.roles.clone()).unwrap_or_default();
    let settings = RolesSettings {
        n: args.n.unwrap_or(base.n),
        k: args.k.unwrap_or(base.k),
        p: args.p.unwrap_or(base.p),
        alpha: args.alpha.unwrap_or(base.alpha),
        sigma: args.sigma.unwrap_or(base.sigma),
        steps: args.steps.unwrap_or(base.steps),
        write_trajectories: base.write_trajectories && !args.no_trajectories,
    };
    let seeds = seeds_or(&args.common, cfg.as_ref().map(|c| c.seeds.as_slice()))?;
    let rows = roles_sweep(&settings, &seeds, args.output.as_deref())?;
    if args.output.is_none() {
        swarm_core::experiment::write_roles_summary_csv(io::stdout().lock(), &rows)?;
    }
    let wins = rows.iter().filter(|r| r.var_expert < r.var_loner).count();
    eprintln!("expert steadier than loner in {wins}/{} seeds", rows.len());
    Ok(())
}

fn summarize_cmd(args: SummarizeArgs) -> Result<()> {
    let file = File::open(&args.results).with_context(|| format!("opening {}", args.results.display()))?;
    let records = read_records(BufReader::new(file))?;
    let summary = summarize(&records)?;
    match args.output {
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            write_summary_csv(File::create(dir.join(SUMMARY_FILE))?, &summary)?;
            write_traces_csv(File::create(dir.join(TRACES_FILE))?, &summary)?;
        }
        None => write_summary_csv(io::stdout().lock(), &summary)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Debate(a) => debate(a),
        Command::TopologyStats(a) => topology_stats_cmd(a),
        Command::Roles(a) => roles_cmd(a),
        Command::Summarize(a) => summarize_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
