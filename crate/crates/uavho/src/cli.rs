//! The `uavho` command line: scenario generation, per-path training, weight
//! aggregation, fine-tuning, evaluation, threshold sweeps, and comparisons.
//!
//! Every command is deterministic given its flags: one root seed (flag or
//! config) feeds labeled derivations for paths, training, and evaluation, so
//! reruns produce byte-identical artifacts at any `--jobs` level.
//!
//! Exit codes: 0 success, 2 usage/configuration error, 1 runtime failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::agent::{self, Algorithm};
use crate::config::{load_run_config, RunConfig, ScenarioDoc};
use crate::env::{self, FlightPath, Scenario};
use crate::eval::{self, Policy};
use crate::qnet::{self, QNetwork};
use crate::seed;
use crate::transfer::{self, ModelSet, Phase, SimilarityReport};
use crate::{Error, Result};

const TRAIN_LABEL: u64 = 0x5452_4e00;
const FINETUNE_LABEL: u64 = 0x4654_4e00;
const EVAL_LABEL: u64 = 0x4556_4c00;
const MODEL_INIT_LABEL: u64 = 0x4d49_4e00;

#[derive(Debug, Parser)]
#[command(
    name = "uavho",
    version,
    about = "UAV handover-management workbench: channel simulation, DQN/DDQN training, \
             weight-averaged transfer, and baseline comparisons"
)]
pub struct Cli {
    /// TOML run configuration; omitted means built-in defaults.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Root seed; overrides the configured experiment seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory; overrides the configured one.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Worker threads for parallel sections (results are identical for any
    /// value).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AgentKind {
    Ddqn,
    Dqn,
}

impl AgentKind {
    fn algorithm(self) -> Algorithm {
        match self {
            Self::Ddqn => Algorithm::Ddqn,
            Self::Dqn => Algorithm::Dqn,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyKind {
    Ddqn,
    Dqn,
    Greedy,
    Hysteresis,
    Mop,
}

impl PolicyKind {
    fn name(self) -> &'static str {
        match self {
            Self::Ddqn => "ddqn",
            Self::Dqn => "dqn",
            Self::Greedy => "greedy",
            Self::Hysteresis => "hysteresis",
            Self::Mop => "mop",
        }
    }

}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the scenario document and the generated flight-path CSVs.
    Scenario,

    /// Train one agent on one flight path; writes weights and a report CSV.
    Train {
        /// Target rule; defaults to the configured algorithm.
        #[arg(long, value_enum)]
        agent: Option<AgentKind>,
        /// Flight path to train on (as generated by `scenario`).
        #[arg(long)]
        path_id: u32,
        /// Training episodes; defaults to the configured count.
        #[arg(long)]
        episodes: Option<usize>,
    },

    /// Average per-path models into a global model; writes the model and the
    /// pre-fine-tune similarity CSV.
    Aggregate {
        /// Weight files to average (at least one, identical layer specs).
        #[arg(long, num_args = 1.., required = true, value_name = "FILE")]
        models: Vec<PathBuf>,
    },

    /// Fine-tune a global model on a held-out path with frozen early layers.
    Finetune {
        /// Global model produced by `aggregate`.
        #[arg(long, value_name = "FILE")]
        global: PathBuf,
        /// Held-out flight path.
        #[arg(long)]
        path_id: u32,
        /// Leading weight layers to freeze.
        #[arg(long, default_value_t = 2)]
        freeze: usize,
        /// Reduced fine-tuning learning rate.
        #[arg(long, default_value_t = 1e-4)]
        alpha_fine: f64,
        /// Fine-tuning episodes; defaults to the configured training count.
        #[arg(long)]
        episodes: Option<usize>,
        /// Individual models for the post-fine-tune similarity report.
        #[arg(long, num_args = 0.., value_name = "FILE")]
        models: Vec<PathBuf>,
    },

    /// Evaluate one policy over flight paths; writes episode and aggregate
    /// CSVs and prints the aggregate row.
    Evaluate {
        #[arg(long, value_enum)]
        policy: PolicyKind,
        /// Weight file (required for ddqn/dqn policies).
        #[arg(long, value_name = "FILE")]
        weights: Option<PathBuf>,
        /// Path CSV files or a directory of them; defaults to `<out>/paths`.
        #[arg(long, num_args = 0.., value_name = "FILE|DIR")]
        paths: Vec<PathBuf>,
        /// Episodes per path; defaults to the configured count.
        #[arg(long)]
        episodes: Option<usize>,
        /// Also dump the per-step decision trace (large; off by default).
        #[arg(long)]
        trace: bool,
    },

    /// Outage sensitivity sweep over SINR thresholds for several policies.
    Sweep {
        /// Policies to sweep.
        #[arg(long, value_enum, value_delimiter = ',', required = true)]
        policies: Vec<PolicyKind>,
        /// Threshold grid in dB; defaults to the configured grid.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        thresholds: Vec<f64>,
        /// Weights for the ddqn policy, when swept.
        #[arg(long, value_name = "FILE")]
        ddqn_weights: Option<PathBuf>,
        /// Weights for the dqn policy, when swept.
        #[arg(long, value_name = "FILE")]
        dqn_weights: Option<PathBuf>,
        /// Path CSV files or a directory of them; defaults to `<out>/paths`.
        #[arg(long, num_args = 0.., value_name = "FILE|DIR")]
        paths: Vec<PathBuf>,
        /// Episodes per path; defaults to the configured count.
        #[arg(long)]
        episodes: Option<usize>,
    },

    /// Handover reduction per method relative to a baseline, from aggregate
    /// CSVs produced by `evaluate`.
    Compare {
        /// Aggregate CSV files to combine.
        #[arg(long, num_args = 1.., required = true, value_name = "FILE")]
        inputs: Vec<PathBuf>,
        /// Method the reduction is measured against.
        #[arg(long, default_value = "greedy")]
        baseline: String,
    },
}

/// Parses argv and runs; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Scenario(_)
        | Error::Parse(_)
        | Error::WeightDoc(_)
        | Error::Shape(_) => 2,
        Error::Domain(_) | Error::Episode(_) | Error::Divergence(_) | Error::Io(_) => 1,
    }
}

/// Runs one parsed command to completion.
pub fn execute(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::Config("--jobs must be >= 1".into()));
        }
        // Ignore the error from a pool that is already initialized (e.g.
        // when `execute` is called twice in one process).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let cfg = match &cli.config {
        Some(path) => load_run_config(path)?,
        None => RunConfig::default(),
    };
    cfg.validate()?;
    let scenario = cfg.scenario()?;
    let root_seed = cli.seed.unwrap_or(cfg.experiment.seed);
    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.experiment.out_dir));

    match cli.command {
        Command::Scenario => cmd_scenario(&cfg, &scenario, root_seed, &out),
        Command::Train {
            agent,
            path_id,
            episodes,
        } => cmd_train(&cfg, &scenario, root_seed, &out, agent, path_id, episodes),
        Command::Aggregate { models } => cmd_aggregate(&out, &models),
        Command::Finetune {
            global,
            path_id,
            freeze,
            alpha_fine,
            episodes,
            models,
        } => cmd_finetune(
            &cfg, &scenario, root_seed, &out, &global, path_id, freeze, alpha_fine, episodes,
            &models,
        ),
        Command::Evaluate {
            policy,
            weights,
            paths,
            episodes,
            trace,
        } => cmd_evaluate(
            &cfg, &scenario, root_seed, &out, policy, weights, &paths, episodes, trace,
        ),
        Command::Sweep {
            policies,
            thresholds,
            ddqn_weights,
            dqn_weights,
            paths,
            episodes,
        } => cmd_sweep(
            &cfg,
            &scenario,
            root_seed,
            &out,
            &policies,
            &thresholds,
            ddqn_weights,
            dqn_weights,
            &paths,
            episodes,
        ),
        Command::Compare { inputs, baseline } => cmd_compare(&out, &inputs, &baseline),
    }
}

// ---------------------------------------------------------------------------
// Filesystem layout helpers
// ---------------------------------------------------------------------------

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn paths_dir(out: &Path) -> PathBuf {
    out.join("paths")
}

fn models_dir(out: &Path) -> PathBuf {
    out.join("models")
}

fn reports_dir(out: &Path) -> PathBuf {
    out.join("reports")
}

fn eval_dir(out: &Path) -> PathBuf {
    out.join("eval")
}

fn path_file(out: &Path, id: u32) -> PathBuf {
    paths_dir(out).join(format!("path_{id:02}.csv"))
}

fn load_path_by_id(out: &Path, id: u32) -> Result<FlightPath> {
    let file = path_file(out, id);
    if !file.exists() {
        return Err(Error::Config(format!(
            "no path file {} (run `uavho scenario` first)",
            file.display()
        )));
    }
    env::load_path_csv(&file)
}

/// Resolves `--paths` arguments (files and/or directories of CSVs) or falls
/// back to everything under `<out>/paths`.
fn resolve_paths(args: &[PathBuf], out: &Path) -> Result<Vec<FlightPath>> {
    let mut files: Vec<PathBuf> = Vec::new();
    let sources: Vec<PathBuf> = if args.is_empty() {
        vec![paths_dir(out)]
    } else {
        args.to_vec()
    };
    for src in sources {
        if src.is_dir() {
            let mut inside: Vec<PathBuf> = std::fs::read_dir(&src)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                .collect();
            inside.sort();
            files.extend(inside);
        } else if src.exists() {
            files.push(src);
        } else {
            return Err(Error::Config(format!(
                "path source {} does not exist",
                src.display()
            )));
        }
    }
    if files.is_empty() {
        return Err(Error::Config(
            "no flight-path CSVs found (run `uavho scenario` first or pass --paths)".into(),
        ));
    }
    files.iter().map(|f| env::load_path_csv(f)).collect()
}

fn load_model(file: &Path) -> Result<QNetwork> {
    if !file.exists() {
        return Err(Error::Config(format!(
            "weight file {} does not exist",
            file.display()
        )));
    }
    qnet::read_weights_file(file).map(|(net, _)| net)
}

fn model_label(file: &Path) -> String {
    file.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| file.display().to_string())
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_scenario(cfg: &RunConfig, scenario: &Scenario, seed: u64, out: &Path) -> Result<()> {
    ensure_dir(&paths_dir(out))?;
    let doc = ScenarioDoc::from_scenario(scenario);
    let scenario_file = out.join("scenario.toml");
    std::fs::write(&scenario_file, doc.to_toml())?;

    let paths = env::generate_paths(scenario, cfg.experiment.num_paths as u32, seed)?;
    let mut min_len = usize::MAX;
    let mut max_len = 0usize;
    for p in &paths {
        env::write_path_csv(&path_file(out, p.id), p)?;
        min_len = min_len.min(p.len());
        max_len = max_len.max(p.len());
    }
    println!(
        "scenario: {} base stations, area {} x {} m -> {}",
        scenario.base_stations.len(),
        scenario.area_l_m,
        scenario.area_w_m,
        scenario_file.display()
    );
    println!(
        "paths: {} files in {}, lengths {}..{} points",
        paths.len(),
        paths_dir(out).display(),
        min_len,
        max_len
    );
    Ok(())
}

fn cmd_train(
    cfg: &RunConfig,
    scenario: &Scenario,
    root_seed: u64,
    out: &Path,
    agent_kind: Option<AgentKind>,
    path_id: u32,
    episodes: Option<usize>,
) -> Result<()> {
    ensure_dir(&models_dir(out))?;
    ensure_dir(&reports_dir(out))?;
    let path = load_path_by_id(out, path_id)?;
    let episodes = episodes.unwrap_or(cfg.experiment.train_episodes);
    let mut agent_cfg = cfg.agent.clone();
    if let Some(kind) = agent_kind {
        agent_cfg.algorithm = kind.algorithm();
    }
    let name = agent_cfg.algorithm.name();
    let train_seed = seed::derive2(root_seed, TRAIN_LABEL, u64::from(path_id));
    // Every per-path model under one root seed starts from one shared
    // initialization (per algorithm), so later weight averaging combines
    // aligned parameters instead of unrelated random bases.
    let init = qnet::init(
        &agent_cfg.network_spec(),
        seed::derive2(root_seed, MODEL_INIT_LABEL, agent_cfg.algorithm as u64),
    )?;

    let (net, report) = agent::train(
        scenario,
        &path,
        &agent_cfg,
        &scenario.reward,
        train_seed,
        episodes,
        Some(init),
        None,
    )?;

    let mut meta = BTreeMap::new();
    meta.insert("algorithm".into(), name.to_string());
    meta.insert("path_id".into(), path_id.to_string());
    meta.insert("seed".into(), root_seed.to_string());
    meta.insert("episodes".into(), episodes.to_string());
    let model_file = models_dir(out).join(format!("{name}_path{path_id:02}.json"));
    qnet::write_weights_file(&model_file, &net, meta)?;
    let report_file = reports_dir(out).join(format!("train_{name}_path{path_id:02}.csv"));
    agent::write_train_report_csv(&report_file, &report)?;

    let last = report.episodes.last().expect("episodes >= 1");
    println!(
        "trained {name} on path {path_id}: episodes={} steps={} last_reward={:.3}",
        episodes, report.global_steps, last.reward
    );
    println!("wrote {}", model_file.display());
    println!("wrote {}", report_file.display());
    Ok(())
}

fn cmd_aggregate(out: &Path, model_files: &[PathBuf]) -> Result<()> {
    ensure_dir(&models_dir(out))?;
    ensure_dir(&reports_dir(out))?;
    let mut entries = Vec::with_capacity(model_files.len());
    for file in model_files {
        entries.push((model_label(file), load_model(file)?));
    }
    let set = ModelSet::from_entries(entries)?;
    let global = transfer::average_weights(&set)?;

    let mut meta = BTreeMap::new();
    meta.insert("kind".into(), "global".into());
    meta.insert("models".into(), set.len().to_string());
    let global_file = models_dir(out).join("global.json");
    qnet::write_weights_file(&global_file, &global, meta)?;

    let mut report = SimilarityReport::default();
    report.push_reference_rows("global", &global, &set, Phase::Pre)?;
    let sim_file = reports_dir(out).join("similarity_pre.csv");
    report.write_csv(&sim_file)?;

    let mean_cos =
        report.rows.iter().map(|r| r.cosine).sum::<f64>() / report.rows.len() as f64;
    println!(
        "aggregated {} models -> {} (mean cosine {:.4})",
        set.len(),
        global_file.display(),
        mean_cos
    );
    println!("wrote {}", sim_file.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_finetune(
    cfg: &RunConfig,
    scenario: &Scenario,
    root_seed: u64,
    out: &Path,
    global_file: &Path,
    path_id: u32,
    freeze: usize,
    alpha_fine: f64,
    episodes: Option<usize>,
    model_files: &[PathBuf],
) -> Result<()> {
    ensure_dir(&models_dir(out))?;
    ensure_dir(&reports_dir(out))?;
    let global = load_model(global_file)?;
    let path = load_path_by_id(out, path_id)?;
    let episodes = episodes.unwrap_or(cfg.experiment.train_episodes);
    let ft_seed = seed::derive2(root_seed, FINETUNE_LABEL, u64::from(path_id));

    let (tuned, report) = transfer::finetune(
        &global, scenario, &path, freeze, alpha_fine, &cfg.agent, ft_seed, episodes,
    )?;

    let mut meta = BTreeMap::new();
    meta.insert("kind".into(), "finetuned".into());
    meta.insert("path_id".into(), path_id.to_string());
    meta.insert("seed".into(), root_seed.to_string());
    meta.insert("freeze_layers".into(), freeze.to_string());
    let model_file = models_dir(out).join(format!("finetuned_path{path_id:02}.json"));
    qnet::write_weights_file(&model_file, &tuned, meta)?;
    let report_file = reports_dir(out).join(format!("train_finetune_path{path_id:02}.csv"));
    agent::write_train_report_csv(&report_file, &report)?;

    if !model_files.is_empty() {
        let mut entries = Vec::with_capacity(model_files.len());
        for file in model_files {
            entries.push((model_label(file), load_model(file)?));
        }
        let set = ModelSet::from_entries(entries)?;
        let mut sim = SimilarityReport::default();
        sim.push_reference_rows("finetuned", &tuned, &set, Phase::Post)?;
        let sim_file = reports_dir(out).join("similarity_post.csv");
        sim.write_csv(&sim_file)?;
        println!("wrote {}", sim_file.display());
    }

    let last = report.episodes.last().expect("episodes >= 1");
    println!(
        "fine-tuned on path {path_id}: episodes={episodes} freeze={freeze} last_reward={:.3}",
        last.reward
    );
    println!("wrote {}", model_file.display());
    println!("wrote {}", report_file.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_evaluate(
    cfg: &RunConfig,
    scenario: &Scenario,
    root_seed: u64,
    out: &Path,
    kind: PolicyKind,
    weights: Option<PathBuf>,
    path_args: &[PathBuf],
    episodes: Option<usize>,
    trace: bool,
) -> Result<()> {
    ensure_dir(&eval_dir(out))?;
    let paths = resolve_paths(path_args, out)?;
    let episodes = episodes.unwrap_or(cfg.experiment.eval_episodes);
    let eval_seed = seed::derive(root_seed, EVAL_LABEL);

    let net;
    let policy = match kind {
        PolicyKind::Ddqn | PolicyKind::Dqn => {
            let file = weights.ok_or_else(|| {
                Error::Config(format!("--weights is required for policy {}", kind.name()))
            })?;
            net = load_model(&file)?;
            Policy::Agent {
                name: kind.name().to_string(),
                net: &net,
            }
        }
        PolicyKind::Greedy => Policy::Greedy { cfg: cfg.baselines },
        PolicyKind::Hysteresis => Policy::Hysteresis { cfg: cfg.baselines },
        PolicyKind::Mop => Policy::Mop { cfg: cfg.baselines },
    };

    let ev = eval::evaluate(&policy, scenario, &paths, episodes, eval_seed)?;
    let episodes_file = eval_dir(out).join(format!("episodes_{}.csv", kind.name()));
    std::fs::write(
        &episodes_file,
        eval::episodes_to_csv(kind.name(), &ev.episodes),
    )?;
    let agg_file = eval_dir(out).join(format!("aggregate_{}.csv", kind.name()));
    std::fs::write(
        &agg_file,
        eval::aggregates_to_csv(std::slice::from_ref(&ev.aggregate)),
    )?;

    print!("{}", eval::aggregates_to_text(std::slice::from_ref(&ev.aggregate)));
    println!("wrote {}", episodes_file.display());
    println!("wrote {}", agg_file.display());

    if trace {
        let trace_file = eval_dir(out).join(format!("trace_{}.csv", kind.name()));
        std::fs::write(
            &trace_file,
            eval::trace_to_csv(&policy, scenario, &paths, episodes, eval_seed)?,
        )?;
        println!("wrote {}", trace_file.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    cfg: &RunConfig,
    scenario: &Scenario,
    root_seed: u64,
    out: &Path,
    kinds: &[PolicyKind],
    thresholds: &[f64],
    ddqn_weights: Option<PathBuf>,
    dqn_weights: Option<PathBuf>,
    path_args: &[PathBuf],
    episodes: Option<usize>,
) -> Result<()> {
    if kinds.is_empty() {
        return Err(Error::Config("sweep needs at least one policy".into()));
    }
    ensure_dir(&eval_dir(out))?;
    let paths = resolve_paths(path_args, out)?;
    let episodes = episodes.unwrap_or(cfg.experiment.eval_episodes);
    let eval_seed = seed::derive(root_seed, EVAL_LABEL);
    let grid: Vec<f64> = if thresholds.is_empty() {
        cfg.experiment.sweep_thresholds_db.clone()
    } else {
        thresholds.to_vec()
    };

    let ddqn_net = match (&ddqn_weights, kinds.contains(&PolicyKind::Ddqn)) {
        (Some(f), _) => Some(load_model(f)?),
        (None, true) => {
            return Err(Error::Config(
                "--ddqn-weights is required when sweeping the ddqn policy".into(),
            ))
        }
        (None, false) => None,
    };
    let dqn_net = match (&dqn_weights, kinds.contains(&PolicyKind::Dqn)) {
        (Some(f), _) => Some(load_model(f)?),
        (None, true) => {
            return Err(Error::Config(
                "--dqn-weights is required when sweeping the dqn policy".into(),
            ))
        }
        (None, false) => None,
    };

    let policies: Vec<Policy> = kinds
        .iter()
        .map(|k| match k {
            PolicyKind::Ddqn => Policy::Agent {
                name: "ddqn".into(),
                net: ddqn_net.as_ref().expect("checked above"),
            },
            PolicyKind::Dqn => Policy::Agent {
                name: "dqn".into(),
                net: dqn_net.as_ref().expect("checked above"),
            },
            PolicyKind::Greedy => Policy::Greedy { cfg: cfg.baselines },
            PolicyKind::Hysteresis => Policy::Hysteresis { cfg: cfg.baselines },
            PolicyKind::Mop => Policy::Mop { cfg: cfg.baselines },
        })
        .collect();

    let sweep = eval::threshold_sweep(&policies, scenario, &paths, &grid, episodes, eval_seed)?;
    let sweep_file = eval_dir(out).join("sweep.csv");
    std::fs::write(&sweep_file, eval::sweep_to_csv(&sweep))?;
    for row in &sweep.rows {
        println!(
            "gamma_th={:>6.1} dB  {:<10}  outage {:.3}%",
            row.gamma_th_db, row.method, row.outage_pct_mean
        );
    }
    println!("wrote {}", sweep_file.display());
    Ok(())
}

fn cmd_compare(out: &Path, inputs: &[PathBuf], baseline: &str) -> Result<()> {
    ensure_dir(&eval_dir(out))?;
    let mut rows = Vec::new();
    for file in inputs {
        if !file.exists() {
            return Err(Error::Config(format!(
                "aggregate CSV {} does not exist",
                file.display()
            )));
        }
        let text = std::fs::read_to_string(file)?;
        rows.extend(eval::parse_aggregates_csv(&text)?);
    }
    let base = rows
        .iter()
        .find(|r| r.method == baseline)
        .ok_or_else(|| {
            Error::Config(format!(
                "baseline method '{baseline}' not present in inputs"
            ))
        })?
        .clone();
    if base.ho_mean == 0.0 {
        return Err(Error::Config(format!(
            "baseline '{baseline}' has zero mean handovers; reduction undefined"
        )));
    }

    let mut csv = String::from("method,ho_mean,reduction_pct\n");
    println!("handover reduction vs {baseline} (ho_mean {:.3}):", base.ho_mean);
    for r in &rows {
        let reduction = 100.0 * (1.0 - r.ho_mean / base.ho_mean);
        println!("  {:<12} ho_mean={:<8.3} reduction={:.1}%", r.method, r.ho_mean, reduction);
        csv.push_str(&format!("{},{},{:.1}\n", r.method, r.ho_mean, reduction));
    }
    let file = eval_dir(out).join("compare.csv");
    std::fs::write(&file, csv)?;
    println!("wrote {}", file.display());
    Ok(())
}
