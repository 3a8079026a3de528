//! Experiment harness: runs policies over flight paths for many episodes,
//! aggregates handover and outage statistics, performs the SINR-threshold
//! sensitivity sweep, and exports CSV and structured-text artifacts.
//!
//! Episodes are independent work items with per-episode derived seeds, so
//! results are bit-identical for any degree of parallelism. Standard
//! deviations are population standard deviations (divisor N), noted in the
//! structured-text output.

use std::path::Path;

use rayon::prelude::*;

use crate::baselines::{
    greedy_decide, hysteresis_decide, mop_decide, BaselineConfig, HysteresisState,
};
use crate::env::{self, FlightPath, Scenario, StateVector};
use crate::qnet::{self, QNetwork};
use crate::seed;
use crate::{Error, Result};

/// Default threshold grid for the sensitivity sweep, dB.
pub const DEFAULT_SWEEP_THRESHOLDS_DB: [f64; 7] = [-5.0, -2.5, 0.0, 2.5, 5.0, 7.5, 10.0];

/// A handover policy under evaluation. Agent policies act greedily
/// (epsilon = 0) and consume no randomness of their own.
pub enum Policy<'a> {
    Agent { name: String, net: &'a QNetwork },
    Greedy { cfg: BaselineConfig },
    Hysteresis { cfg: BaselineConfig },
    Mop { cfg: BaselineConfig },
}

impl<'a> Policy<'a> {
    pub fn name(&self) -> &str {
        match self {
            Self::Agent { name, .. } => name,
            Self::Greedy { .. } => "greedy",
            Self::Hysteresis { .. } => "hysteresis",
            Self::Mop { .. } => "mop",
        }
    }
}

/// Counters for one evaluated episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub path_id: u32,
    pub episode_index: usize,
    pub seed: u64,
    pub handovers: u32,
    pub outage_steps: u32,
    pub total_steps: usize,
    pub outage_rate: f64,
    pub cum_reward: f64,
}

/// One decision step retained for trace-based reprocessing.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub serving: u32,
    /// Serving-BS SINR the outage indicator was scored on.
    pub sinr_db: f64,
    pub reward: f64,
    pub outage: bool,
    pub handover: bool,
}

/// Mean/std summary over a batch of episodes. Percent fields are rounded to
/// three decimals at construction, so exports and re-parses are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateMetrics {
    pub method: String,
    pub ho_mean: f64,
    pub ho_std: f64,
    pub outage_pct_mean: f64,
    pub outage_pct_std: f64,
    pub episodes: usize,
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl AggregateMetrics {
    /// Population mean/std over at least two episodes.
    pub fn from_episodes(method: &str, episodes: &[EpisodeMetrics]) -> Result<Self> {
        if episodes.len() < 2 {
            return Err(Error::Config(format!(
                "aggregate needs >= 2 episodes, got {}",
                episodes.len()
            )));
        }
        let (ho_mean, ho_std) = mean_std(episodes.iter().map(|e| f64::from(e.handovers)));
        let (pct_mean, pct_std) = mean_std(episodes.iter().map(|e| e.outage_rate * 100.0));
        Ok(Self {
            method: method.to_string(),
            ho_mean,
            ho_std,
            outage_pct_mean: round3(pct_mean),
            outage_pct_std: round3(pct_std),
            episodes: episodes.len(),
        })
    }
}

/// Per-episode metrics plus their aggregate for one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub episodes: Vec<EpisodeMetrics>,
    pub aggregate: AggregateMetrics,
}

/// One (threshold, method) cell of the sensitivity sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gamma_th_db: f64,
    pub method: String,
    pub outage_pct_mean: f64,
}

/// Sweep output: method-major, thresholds ascending within each method.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Plays one full episode with the policy and returns its metrics.
pub fn run_episode(
    policy: &Policy,
    scenario: &Scenario,
    path: &FlightPath,
    episode_seed: u64,
) -> Result<EpisodeMetrics> {
    run_episode_traced(policy, scenario, path, episode_seed).map(|(m, _)| m)
}

/// [`run_episode`] with the full per-step trace retained.
pub fn run_episode_traced(
    policy: &Policy,
    scenario: &Scenario,
    path: &FlightPath,
    episode_seed: u64,
) -> Result<(EpisodeMetrics, Vec<StepRecord>)> {
    let mut env = env::reset(scenario, path, episode_seed)?;
    let mut hyst = HysteresisState::new(scenario.base_stations.len());
    let mut trace = Vec::with_capacity(path.len() - 1);
    while !env.done {
        let step = env.step_index;
        let target = match policy {
            Policy::Agent { net, .. } => {
                let state: StateVector = env::observe(&env, scenario)
                    .map_err(|e| Error::Episode(format!("step {step}: {e}")))?;
                let q = net
                    .forward(state.as_slice())
                    .map_err(|e| Error::Episode(format!("step {step}: {e}")))?;
                env.candidates.bs_for(env::Action::from_index(qnet::argmax(&q))?)
            }
            Policy::Greedy { cfg } => {
                greedy_decide(&env.per_bs_sinr_db, env.serving_bs, cfg.greedy_margin_db)
            }
            Policy::Hysteresis { cfg } => hysteresis_decide(
                &env.per_bs_sinr_db,
                env.serving_bs,
                &mut hyst,
                cfg.hysteresis_margin_db,
                cfg.ttt_steps,
            ),
            Policy::Mop { cfg } => mop_decide(
                scenario,
                path,
                env.step_index,
                &env.per_bs_sinr_db,
                scenario.channel.sinr_threshold_db,
                cfg.mop_horizon_steps,
            )
            .map_err(|e| Error::Episode(format!("step {step}: {e}")))?,
        };
        // Outage is scored on the pre-advance measurement of the chosen BS;
        // capture it so traces re-threshold exactly.
        let scored_sinr_db = env.per_bs_sinr_db[target as usize];
        let outcome = env::apply_serving(&mut env, target, scenario)
            .map_err(|e| Error::Episode(format!("step {step}: {e}")))?;
        trace.push(StepRecord {
            step,
            serving: target,
            sinr_db: scored_sinr_db,
            reward: outcome.reward,
            outage: outcome.outage,
            handover: outcome.handover,
        });
    }
    let total_steps = path.len() - 1;
    let metrics = EpisodeMetrics {
        path_id: path.id,
        episode_index: 0,
        seed: episode_seed,
        handovers: env.handovers,
        outage_steps: env.outages,
        total_steps,
        outage_rate: f64::from(env.outages) / total_steps as f64,
        cum_reward: env.cum_reward,
    };
    Ok((metrics, trace))
}

/// Evaluates a policy over `paths x episodes_per_path` episodes with derived
/// per-episode seeds. Deterministic for a fixed `base_seed` at any
/// parallelism level.
pub fn evaluate(
    policy: &Policy,
    scenario: &Scenario,
    paths: &[FlightPath],
    episodes_per_path: usize,
    base_seed: u64,
) -> Result<Evaluation> {
    let (episodes, _) = evaluate_traced(policy, scenario, paths, episodes_per_path, base_seed, false)?;
    let aggregate = AggregateMetrics::from_episodes(policy.name(), &episodes)?;
    Ok(Evaluation { episodes, aggregate })
}

/// Work-item fan-out shared by [`evaluate`] and [`threshold_sweep`]; traces
/// (per-step scored SINRs) are collected only when requested.
fn evaluate_traced(
    policy: &Policy,
    scenario: &Scenario,
    paths: &[FlightPath],
    episodes_per_path: usize,
    base_seed: u64,
    keep_traces: bool,
) -> Result<(Vec<EpisodeMetrics>, Vec<Vec<f64>>)> {
    if episodes_per_path < 2 {
        return Err(Error::Config(format!(
            "episodes_per_path must be >= 2, got {episodes_per_path}"
        )));
    }
    if paths.is_empty() {
        return Err(Error::Config("no flight paths to evaluate".into()));
    }
    scenario.validate()?;
    let items: Vec<(usize, usize)> = (0..paths.len())
        .flat_map(|p| (0..episodes_per_path).map(move |e| (p, e)))
        .collect();
    let results: Result<Vec<(EpisodeMetrics, Vec<f64>)>> = items
        .par_iter()
        .map(|&(pi, ep)| {
            let path = &paths[pi];
            let es = seed::episode_seed(base_seed, u64::from(path.id), ep as u64);
            let (mut m, trace) = run_episode_traced(policy, scenario, path, es)?;
            m.episode_index = ep;
            let sinrs = if keep_traces {
                scored_sinrs(&trace)
            } else {
                Vec::new()
            };
            Ok((m, sinrs))
        })
        .collect();
    Ok(results?.into_iter().unzip())
}

/// The SINR values outage was scored on, one per step.
fn scored_sinrs(trace: &[StepRecord]) -> Vec<f64> {
    trace.iter().map(|r| r.sinr_db).collect()
}

/// Sensitivity sweep: each policy's episodes run once under the scenario's
/// configured threshold (which also drives the MOP predictor), and the
/// retained serving-SINR traces are re-scored against each grid threshold.
/// Policy decisions do not depend on the outage threshold, so this is
/// identical to a fixed-policy re-run per threshold.
pub fn threshold_sweep(
    policies: &[Policy],
    scenario: &Scenario,
    paths: &[FlightPath],
    thresholds: &[f64],
    episodes_per_path: usize,
    base_seed: u64,
) -> Result<SweepResult> {
    if policies.is_empty() {
        return Err(Error::Config("sweep needs at least one policy".into()));
    }
    if thresholds.is_empty() {
        return Err(Error::Config("sweep needs at least one threshold".into()));
    }
    let mut grid = thresholds.to_vec();
    grid.sort_by(f64::total_cmp);
    if grid.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("sweep thresholds must be distinct".into()));
    }
    let mut rows = Vec::with_capacity(policies.len() * grid.len());
    for policy in policies {
        let (episodes, traces) =
            evaluate_traced(policy, scenario, paths, episodes_per_path, base_seed, true)?;
        for &g in &grid {
            let pct_mean = episodes
                .iter()
                .zip(&traces)
                .map(|(m, sinrs)| {
                    let bad = sinrs.iter().filter(|&&s| s < g).count();
                    100.0 * bad as f64 / m.total_steps as f64
                })
                .sum::<f64>()
                / episodes.len() as f64;
            rows.push(SweepRow {
                gamma_th_db: g,
                method: policy.name().to_string(),
                outage_pct_mean: round3(pct_mean),
            });
        }
    }
    Ok(SweepResult { rows })
}

// ---------------------------------------------------------------------------
// Export / parse
// ---------------------------------------------------------------------------

pub const EPISODES_CSV_HEADER: &str =
    "method,path_id,episode,seed,handovers,outage_steps,total_steps,outage_rate,cum_reward";
pub const AGGREGATE_CSV_HEADER: &str =
    "method,ho_mean,ho_std,outage_pct_mean,outage_pct_std,episodes";
pub const SWEEP_CSV_HEADER: &str = "gamma_th_db,method,outage_pct_mean";
pub const TRACE_CSV_HEADER: &str =
    "path_id,episode,step,serving,sinr_db,reward,outage,handover";

/// Per-step trace dump over the same episode grid (and seeds) as
/// [`evaluate`]. Opt-in debugging output: one row per decision step.
pub fn trace_to_csv(
    policy: &Policy,
    scenario: &Scenario,
    paths: &[FlightPath],
    episodes_per_path: usize,
    base_seed: u64,
) -> Result<String> {
    scenario.validate()?;
    let mut out = String::from(TRACE_CSV_HEADER);
    out.push('\n');
    for path in paths {
        for ep in 0..episodes_per_path {
            let es = seed::episode_seed(base_seed, u64::from(path.id), ep as u64);
            let (_, trace) = run_episode_traced(policy, scenario, path, es)?;
            for r in &trace {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    path.id,
                    ep,
                    r.step,
                    r.serving,
                    r.sinr_db,
                    r.reward,
                    u8::from(r.outage),
                    u8::from(r.handover)
                ));
            }
        }
    }
    Ok(out)
}

pub fn episodes_to_csv(method: &str, episodes: &[EpisodeMetrics]) -> String {
    let mut out = String::from(EPISODES_CSV_HEADER);
    out.push('\n');
    for e in episodes {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            method,
            e.path_id,
            e.episode_index,
            e.seed,
            e.handovers,
            e.outage_steps,
            e.total_steps,
            e.outage_rate,
            e.cum_reward
        ));
    }
    out
}

pub fn aggregates_to_csv(rows: &[AggregateMetrics]) -> String {
    let mut out = String::from(AGGREGATE_CSV_HEADER);
    out.push('\n');
    for a in rows {
        out.push_str(&format!(
            "{},{},{},{:.3},{:.3},{}\n",
            a.method, a.ho_mean, a.ho_std, a.outage_pct_mean, a.outage_pct_std, a.episodes
        ));
    }
    out
}

/// Parses what [`aggregates_to_csv`] wrote; exact round-trip.
pub fn parse_aggregates_csv(text: &str) -> Result<Vec<AggregateMetrics>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty aggregate CSV".into()))?;
    if header != AGGREGATE_CSV_HEADER {
        return Err(Error::Parse(format!(
            "aggregate CSV header '{header}' != '{AGGREGATE_CSV_HEADER}'"
        )));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Parse(format!(
                "aggregate CSV row {}: {} fields, expected 6",
                i + 2,
                fields.len()
            )));
        }
        let num = |k: usize| -> Result<f64> {
            fields[k]
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("aggregate CSV row {}: {e}", i + 2)))
        };
        rows.push(AggregateMetrics {
            method: fields[0].to_string(),
            ho_mean: num(1)?,
            ho_std: num(2)?,
            outage_pct_mean: num(3)?,
            outage_pct_std: num(4)?,
            episodes: fields[5]
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("aggregate CSV row {}: {e}", i + 2)))?,
        });
    }
    Ok(rows)
}

pub fn sweep_to_csv(sweep: &SweepResult) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in &sweep.rows {
        out.push_str(&format!(
            "{},{},{:.3}\n",
            r.gamma_th_db, r.method, r.outage_pct_mean
        ));
    }
    out
}

/// Human-readable aggregate block; notes the std convention.
pub fn aggregates_to_text(rows: &[AggregateMetrics]) -> String {
    let mut out = String::new();
    for a in rows {
        out.push_str(&format!(
            "method={} episodes={}\n  handovers: mean={:.3} std={:.3}\n  outage: mean={:.3}% std={:.3}% (population std)\n",
            a.method, a.episodes, a.ho_mean, a.ho_std, a.outage_pct_mean, a.outage_pct_std
        ));
    }
    out
}

pub fn write_text_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}
