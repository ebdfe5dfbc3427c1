use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use netcomplete::baselines::{pa_complete, random_decoder_complete};
use netcomplete::completer::{complete, CompleterConfig};
use netcomplete::generators::{
    Family, GeneratorSpec, DEFAULT_FOREST_FIRE_P, DEFAULT_KRONECKER_INITIATOR,
};
use netcomplete::graph::{hide_nodes, load_edge_list, save_edge_list};
use netcomplete::harness::{
    align_scores, cc_scatter, paper_reference_rows, run_experiment, scatter_csv, sweep_csv,
    to_csv, ws_sweep, ExperimentConfig, Method, ScatterConfig, Source, SweepConfig,
};
use netcomplete::matcher::{brute_force_align, sgm_align, MatcherConfig, SeededMatchProblem};
use netcomplete::metrics::evaluate_completion;
use netcomplete::{Graph, Matrix, PartialGraph};

#[derive(Parser)]
#[command(name = "netcomplete", version, about = "Complete partially observed networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic graph as an edge list.
    Generate(GenerateArgs),
    /// Hide random nodes of a graph.
    Hide(HideArgs),
    /// Score every pair of a partially observed graph.
    Complete(CompleteArgs),
    /// Region-wise AUC and AP of a score matrix.
    Evaluate(EvaluateArgs),
    /// Align the unobserved nodes of two graphs that share seed nodes.
    Match(MatchArgs),
    /// Run a configured method comparison and write the results CSV.
    Experiment(ExperimentArgs),
    /// Watts–Strogatz rewiring sweep.
    Sweep(SweepArgs),
    /// Clustering coefficient against performance across networks.
    Scatter(ScatterArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Ba,
    Ws,
    Kron,
    Ff,
    Grid,
    Circulant,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long)]
    n: Option<usize>,
    /// Lattice degree (ws).
    #[arg(long)]
    k: Option<usize>,
    /// Rewiring probability (ws).
    #[arg(long)]
    p: Option<f64>,
    /// Edges per new node (ba).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    /// Comma-separated offsets (circulant).
    #[arg(long, value_delimiter = ',')]
    offsets: Vec<usize>,
    /// Forward burning probability (ff).
    #[arg(long)]
    p_fwd: Option<f64>,
    /// Kronecker power; the graph has 2^power nodes.
    #[arg(long)]
    power: Option<u32>,
    /// Four comma-separated initiator entries, row-major (kron).
    #[arg(long, value_delimiter = ',')]
    initiator: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct HideArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, conflicts_with = "count", required_unless_present = "count")]
    fraction: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Edge list of the observed block (nodes 0..n_obs).
    #[arg(long)]
    observed: PathBuf,
    /// Full graph relabelled with observed nodes first.
    #[arg(long)]
    truth: PathBuf,
    /// JSON with n_obs, n_miss, hidden ids and the relabelling.
    #[arg(long)]
    meta: Option<PathBuf>,
}

#[derive(Args)]
struct CompleteArgs {
    #[arg(long)]
    observed: PathBuf,
    /// Observed node count; defaults to one past the largest index.
    #[arg(long)]
    n_obs: Option<usize>,
    #[arg(long)]
    n_miss: usize,
    #[arg(long, default_value = "proposed")]
    method: String,
    /// Completer settings as JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Score matrix destination.
    #[arg(long)]
    out: PathBuf,
    /// Final sampled adjacency as an edge list (proposed only).
    #[arg(long)]
    sampled: Option<PathBuf>,
    /// Trained encoder as JSON (proposed only).
    #[arg(long)]
    save_model: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    n_obs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Align the unobserved nodes before scoring.
    #[arg(long)]
    align: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// Number of seed nodes (indices below it correspond by identity).
    #[arg(long)]
    seeds: usize,
    #[arg(long, default_value_t = MatcherConfig::default().max_iters)]
    max_iters: usize,
    #[arg(long, default_value_t = MatcherConfig::default().tol)]
    tol: f64,
    /// Exhaustive search instead of the relaxation.
    #[arg(long)]
    brute_force: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Results CSV; defaults to the config's output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append published reference numbers, tagged as such.
    #[arg(long)]
    paper_refs: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep settings as JSON; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    p_values: Vec<f64>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScatterArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_graph(path: &Path) -> Result<Graph> {
    load_edge_list(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

/// `g` with isolated nodes appended up to `n`.
fn padded(g: Graph, n: usize) -> Result<Graph> {
    if n < g.n() {
        bail!("node count {n} is smaller than the edge list's {}", g.n());
    }
    Ok(Graph::from_edges(n, g.edges())?)
}

fn emit(out: Option<&Path>, json: &str) -> Result<()> {
    match out {
        Some(p) => write(p, &format!("{json}\n")),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn need<T>(v: Option<T>, flag: &str, family: &str) -> Result<T> {
    v.with_context(|| format!("--{flag} is required for {family}"))
}

fn generate(a: GenerateArgs) -> Result<()> {
    let family = match a.family {
        FamilyArg::Ba => Family::Ba {
            n: need(a.n, "n", "ba")?,
            m: need(a.m, "m", "ba")?,
        },
        FamilyArg::Ws => Family::Ws {
            n: need(a.n, "n", "ws")?,
            k: need(a.k, "k", "ws")?,
            p: need(a.p, "p", "ws")?,
        },
        FamilyArg::Kron => {
            let initiator = match a.initiator.as_slice() {
                [] => DEFAULT_KRONECKER_INITIATOR,
                [a, b, c, d] => [[*a, *b], [*c, *d]],
                other => bail!("--initiator takes 4 values, got {}", other.len()),
            };
            Family::Kron {
                initiator,
                power: need(a.power, "power", "kron")?,
            }
        }
        FamilyArg::Ff => Family::Ff {
            n: need(a.n, "n", "ff")?,
            p_fwd: a.p_fwd.unwrap_or(DEFAULT_FOREST_FIRE_P),
        },
        FamilyArg::Grid => Family::Grid {
            rows: need(a.rows, "rows", "grid")?,
            cols: need(a.cols, "cols", "grid")?,
        },
        FamilyArg::Circulant => {
            if a.offsets.is_empty() {
                bail!("--offsets is required for circulant");
            }
            Family::Circulant {
                n: need(a.n, "n", "circulant")?,
                offsets: a.offsets,
            }
        }
    };
    let g = GeneratorSpec::new(family).with_seed(a.seed).generate_seeded()?;
    write(&a.out, &save_edge_list(&g))
}

fn hide(a: HideArgs) -> Result<()> {
    let g = read_graph(&a.graph)?;
    let count = match (a.count, a.fraction) {
        (Some(c), _) => c,
        (None, Some(f)) if f > 0.0 && f < 1.0 => ((f * g.n() as f64).round() as usize).max(1),
        (None, f) => bail!("--fraction must lie in (0, 1), got {f:?}"),
    };
    let h = hide_nodes(&g, count, &mut ChaCha8Rng::seed_from_u64(a.seed))?;
    write(&a.observed, &save_edge_list(h.partial.observed()))?;
    write(&a.truth, &save_edge_list(&h.truth))?;
    if let Some(meta) = a.meta {
        let json = serde_json::json!({
            "n_obs": h.partial.n_obs(),
            "n_miss": h.partial.n_miss(),
            "hidden_ids": h.hidden_ids,
            "order": h.order,
        });
        write(&meta, &format!("{}\n", serde_json::to_string_pretty(&json)?))?;
    }
    Ok(())
}

fn complete_cmd(a: CompleteArgs) -> Result<()> {
    let observed = read_graph(&a.observed)?;
    let n_obs = a.n_obs.unwrap_or(observed.n());
    let pg = PartialGraph::new(padded(observed, n_obs)?, a.n_miss)?;
    let cfg: CompleterConfig = match &a.config {
        Some(p) => serde_json::from_str(&read(p)?).context("parsing completer config")?,
        None => CompleterConfig::default(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let method = Method::parse(&a.method)?;
    if method != Method::Proposed && (a.sampled.is_some() || a.save_model.is_some()) {
        bail!("--sampled and --save-model apply to the proposed method only");
    }
    let p = match method {
        Method::Proposed => {
            let res = complete(&pg, &cfg, &mut rng)?;
            if let Some(path) = &a.sampled {
                write(path, &save_edge_list(&res.a_sampled))?;
            }
            if let Some(path) = &a.save_model {
                write(path, &serde_json::to_string(&res.model.to_checkpoint())?)?;
            }
            res.p_final
        }
        Method::Pa => {
            let out = pa_complete(&pg);
            if out.degenerate {
                eprintln!("warning: the observed block has no edges; all scores are zero");
            }
            out.p
        }
        Method::RandomDe => random_decoder_complete(&pg, cfg.embed_dim, &mut rng)?.p,
    };
    write(&a.out, &p.to_csv()?)
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let p = Matrix::from_csv(&read(&a.scores)?).context("parsing score matrix")?;
    let truth = padded(read_graph(&a.truth)?, p.rows())?;
    let (scores, matched) = if a.align {
        let observed = truth.induced(&(0..a.n_obs).collect::<Vec<_>>())?;
        let (aligned, m) = align_scores(&truth, &observed, &p, &MatcherConfig::default())?;
        (aligned, Some(m))
    } else {
        (p, None)
    };
    let report = evaluate_completion(&truth, &scores, a.n_obs, &mut ChaCha8Rng::seed_from_u64(a.seed))?;
    let json = serde_json::json!({ "report": report, "alignment": matched });
    emit(a.out.as_deref(), &serde_json::to_string_pretty(&json)?)
}

fn match_cmd(a: MatchArgs) -> Result<()> {
    let truth = read_graph(&a.truth)?;
    let pred = read_graph(&a.pred)?;
    let n = truth.n().max(pred.n());
    let prob = SeededMatchProblem::from_graphs(&padded(truth, n)?, &padded(pred, n)?, a.seeds)?;
    let res = if a.brute_force {
        brute_force_align(&prob)?
    } else {
        sgm_align(&prob, a.max_iters, a.tol)?
    };
    emit(a.out.as_deref(), &serde_json::to_string_pretty(&res)?)
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::from_json(&read(&a.config)?).context("parsing experiment config")?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    cfg.source = cfg.source.resolved(base);
    let out = a
        .out
        .or_else(|| cfg.output.clone())
        .context("no output path: pass --out or set \"output\" in the config")?;
    let mut rows = run_experiment(&cfg)?;
    for row in &rows {
        for note in &row.notes {
            eprintln!("warning: {} {}: {note}", row.method, row.region.name());
        }
    }
    if a.paper_refs {
        let key = match &cfg.source {
            Source::Generator(spec) => spec.family_name().to_string(),
            Source::EdgeList { .. } => cfg.network_id(),
        };
        rows.extend(paper_reference_rows(&rows[0].network, &key));
    }
    write(&out, &to_csv(&rows))
}

fn sweep(a: SweepArgs) -> Result<()> {
    let mut cfg: SweepConfig = match &a.config {
        Some(p) => serde_json::from_str(&read(p)?).context("parsing sweep config")?,
        None => SweepConfig::default(),
    };
    cfg.n = a.n.unwrap_or(cfg.n);
    cfg.k = a.k.unwrap_or(cfg.k);
    if !a.p_values.is_empty() {
        cfg.p_values = a.p_values;
    }
    cfg.settings.repeats = a.repeats.unwrap_or(cfg.settings.repeats);
    cfg.settings.base_seed = a.seed.unwrap_or(cfg.settings.base_seed);
    let rows = ws_sweep(cfg.n, cfg.k, &cfg.p_values, &cfg.settings)?;
    write(&a.out, &sweep_csv(&rows))
}

fn scatter(a: ScatterArgs) -> Result<()> {
    let mut cfg: ScatterConfig = serde_json::from_str(&read(&a.config)?).context("parsing scatter config")?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    for net in &mut cfg.networks {
        net.source = net.source.clone().resolved(base);
    }
    let rows = cc_scatter(&cfg.networks, &cfg.settings)?;
    write(&a.out, &scatter_csv(&rows))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Hide(a) => hide(a),
        Command::Complete(a) => complete_cmd(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Match(a) => match_cmd(a),
        Command::Experiment(a) => experiment(a),
        Command::Sweep(a) => sweep(a),
        Command::Scatter(a) => scatter(a),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
