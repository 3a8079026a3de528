//! DQN/DDQN learning loop: replay buffer, epsilon-greedy exploration,
//! bootstrapped targets (with or without decoupled action selection), and
//! periodic target-network synchronization.
//!
//! One call to [`train`] runs the full per-path loop: for every environment
//! step the agent picks an action, stores the transition, and (once the
//! buffer is warm) performs one minibatch gradient step; the target network
//! is replaced by a bit-exact copy of the online network every
//! `target_sync_interval` global steps. Epsilon decays multiplicatively at
//! episode boundaries, floored at `epsilon_min`.

use std::collections::VecDeque;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{
    self, Action, FlightPath, RewardConfig, Scenario, StateVector, STATE_DIM,
};
use crate::qnet::{
    self, FreezeMask, NetworkSpec, OptimizerKind, OptimizerState, QNetwork,
};
use crate::seed;
use crate::{Error, Result};

const NET_INIT_LABEL: u64 = 0x4e45_5449;
const EXPLORE_LABEL: u64 = 0x4558_504c;
const REPLAY_LABEL: u64 = 0x5250_4c59;
const ENV_LABEL: u64 = 0x454e_5653;

/// Target rule: classic max-based bootstrapping or decoupled argmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Dqn,
    Ddqn,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Self::Dqn => "dqn",
            Self::Ddqn => "ddqn",
        }
    }
}

/// One stored experience.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: StateVector,
    pub action: usize,
    pub reward: f64,
    pub next_state: StateVector,
    pub done: bool,
}

/// Bounded FIFO experience store.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            items: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// Appends, evicting the oldest transition when full.
    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    /// Draws `batch` distinct transitions uniformly without replacement.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<&Transition>> {
        if self.items.len() < batch {
            return Err(Error::Episode(format!(
                "replay buffer holds {} < batch {batch}",
                self.items.len()
            )));
        }
        let idx = rand::seq::index::sample(rng, self.items.len(), batch);
        Ok(idx.iter().map(|i| &self.items[i]).collect())
    }
}

/// Training hyperparameters (Table-3 defaults).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub algorithm: Algorithm,
    pub hidden_layers: Vec<usize>,
    /// Learning rate α.
    pub alpha: f64,
    /// Discount factor (named `discount` to stay clear of SINR's γ).
    pub discount: f64,
    pub epsilon_start: f64,
    pub epsilon_min: f64,
    pub epsilon_decay: f64,
    pub batch_size: usize,
    /// Target sync period C, in global environment steps.
    pub target_sync_interval: u64,
    pub buffer_capacity: usize,
    /// Learning starts once the buffer holds max(batch_size, warmup).
    pub warmup: usize,
    pub optimizer: OptimizerKind,
    pub grad_clip_norm: Option<f64>,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Ddqn,
            hidden_layers: vec![128, 128, 128],
            alpha: 0.001,
            discount: 0.99,
            epsilon_start: 1.0,
            epsilon_min: 0.01,
            epsilon_decay: 0.995,
            batch_size: 64,
            target_sync_interval: 1000,
            buffer_capacity: 10_000,
            warmup: 500,
            optimizer: OptimizerKind::Adam,
            grad_clip_norm: None,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::Config(format!("discount {} not in (0, 1]", self.discount)));
        }
        if !(0.0..=1.0).contains(&self.epsilon_min)
            || !(0.0..=1.0).contains(&self.epsilon_start)
            || self.epsilon_min > self.epsilon_start
        {
            return Err(Error::Config(format!(
                "epsilon range [{}, {}] invalid",
                self.epsilon_min, self.epsilon_start
            )));
        }
        if !(0.0..=1.0).contains(&self.epsilon_decay) {
            return Err(Error::Config(format!(
                "epsilon_decay {} not in [0, 1]",
                self.epsilon_decay
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.target_sync_interval == 0 {
            return Err(Error::Config("target_sync_interval must be >= 1".into()));
        }
        if self.buffer_capacity < self.batch_size {
            return Err(Error::Config(format!(
                "buffer_capacity {} smaller than batch_size {}",
                self.buffer_capacity, self.batch_size
            )));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::Config(format!("alpha {} invalid", self.alpha)));
        }
        if self.hidden_layers.is_empty() || self.hidden_layers.contains(&0) {
            return Err(Error::Config(format!(
                "hidden_layers {:?} invalid",
                self.hidden_layers
            )));
        }
        Ok(())
    }

    pub fn network_spec(&self) -> NetworkSpec {
        NetworkSpec::default_q(&self.hidden_layers)
    }

    /// Effective warm-up length: max(batch_size, warmup).
    pub fn effective_warmup(&self) -> usize {
        self.batch_size.max(self.warmup)
    }
}

/// Per-episode training record.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub reward: f64,
    pub handovers: u32,
    pub outages: u32,
    /// Exploration rate in effect during this episode (pre-decay).
    pub epsilon: f64,
    /// Mean minibatch loss; 0 when no update ran (buffer still warming).
    pub mean_loss: f64,
}

/// Full training trace: one record per episode plus global counters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub episodes: Vec<EpisodeRecord>,
    pub global_steps: u64,
    pub wall_time_s: f64,
}

impl TrainReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("episode,reward,handovers,outages,epsilon,mean_loss\n");
        for r in &self.episodes {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.episode, r.reward, r.handovers, r.outages, r.epsilon, r.mean_loss
            ));
        }
        out
    }

    pub fn mean_reward(&self, range: std::ops::Range<usize>) -> f64 {
        let slice = &self.episodes[range];
        slice.iter().map(|r| r.reward).sum::<f64>() / slice.len() as f64
    }
}

pub fn write_train_report_csv(path: &Path, report: &TrainReport) -> Result<()> {
    std::fs::write(path, report.to_csv())?;
    Ok(())
}

/// Epsilon-greedy en route, pure argmax at ε = 0. The greedy branch consumes
/// no randomness, so evaluation does not disturb any random stream.
pub fn select_action<R: Rng + ?Sized>(
    net: &QNetwork,
    state: &StateVector,
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Config(format!("epsilon {epsilon} not in [0, 1]")));
    }
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return Ok(rng.random_range(0..net.output_dim()));
    }
    let q = net.forward(state.as_slice())?;
    Ok(qnet::argmax(&q))
}

/// Bootstrapped regression targets for a minibatch.
///
/// y_j = r_j when the transition is terminal; otherwise
/// DDQN: r_j + discount * Q_target(S_{j+1}, argmax_a Q_online(S_{j+1}, a)),
/// DQN:  r_j + discount * max_a Q_target(S_{j+1}, a).
pub fn compute_targets(
    algorithm: Algorithm,
    online: &QNetwork,
    target: &QNetwork,
    batch: &[&Transition],
    discount: f64,
) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::Shape("compute_targets on empty batch".into()));
    }
    let n = batch.len();
    let out_dim = target.output_dim();
    let mut next = Vec::with_capacity(n * STATE_DIM);
    for t in batch {
        next.extend_from_slice(t.next_state.as_slice());
    }
    let q_target = target.forward_batch(&next, n)?;
    let q_online = match algorithm {
        Algorithm::Ddqn => Some(online.forward_batch(&next, n)?),
        Algorithm::Dqn => None,
    };
    let mut ys = Vec::with_capacity(n);
    for (j, t) in batch.iter().enumerate() {
        if t.done {
            ys.push(t.reward);
            continue;
        }
        let row = &q_target[j * out_dim..(j + 1) * out_dim];
        let bootstrap = match &q_online {
            Some(qo) => row[qnet::argmax(&qo[j * out_dim..(j + 1) * out_dim])],
            None => row[qnet::argmax(row)],
        };
        ys.push(t.reward + discount * bootstrap);
    }
    Ok(ys)
}

/// Hooks into the training loop for instrumentation; all methods default to
/// no-ops. Called after each environment step (and any learning update), at
/// each target sync, and at each episode end.
pub trait TrainObserver {
    fn on_step(
        &mut self,
        _global_step: u64,
        _buffer_len: usize,
        _online: &QNetwork,
        _target: &QNetwork,
    ) {
    }
    fn on_sync(&mut self, _global_step: u64, _online: &QNetwork, _target: &QNetwork) {}
    fn on_episode(&mut self, _episode: usize, _epsilon: f64) {}
}

struct NoopObserver;

impl TrainObserver for NoopObserver {}

/// Trains one agent on one flight path; see module docs for the loop shape.
/// Fully deterministic for fixed arguments.
#[allow(clippy::too_many_arguments)]
pub fn train(
    scenario: &Scenario,
    path: &FlightPath,
    cfg: &AgentConfig,
    reward_cfg: &RewardConfig,
    seed: u64,
    episodes: usize,
    initial_net: Option<QNetwork>,
    freeze: Option<FreezeMask>,
) -> Result<(QNetwork, TrainReport)> {
    train_with_observer(
        scenario,
        path,
        cfg,
        reward_cfg,
        seed,
        episodes,
        initial_net,
        freeze,
        &mut NoopObserver,
    )
}

/// [`train`] with an observer wired into the loop.
#[allow(clippy::too_many_arguments)]
pub fn train_with_observer(
    scenario: &Scenario,
    path: &FlightPath,
    cfg: &AgentConfig,
    reward_cfg: &RewardConfig,
    seed: u64,
    episodes: usize,
    initial_net: Option<QNetwork>,
    freeze: Option<FreezeMask>,
    observer: &mut dyn TrainObserver,
) -> Result<(QNetwork, TrainReport)> {
    cfg.validate()?;
    reward_cfg.validate()?;
    if episodes == 0 {
        return Err(Error::Config("episodes must be >= 1".into()));
    }
    let mut sc = scenario.clone();
    sc.reward = *reward_cfg;
    sc.validate()?;
    path.validate(sc.step_len_m())?;

    let spec = cfg.network_spec();
    let mut online = match initial_net {
        Some(net) => {
            if net.spec() != &spec {
                return Err(Error::Shape(format!(
                    "initial net layers {:?} != config layers {:?}",
                    net.spec().layer_sizes,
                    spec.layer_sizes
                )));
            }
            net
        }
        None => qnet::init(&spec, seed::derive(seed, NET_INIT_LABEL))?,
    };
    let mask = freeze.unwrap_or_else(|| FreezeMask::all_trainable(spec.weight_layers()));
    if mask.trainable.len() != spec.weight_layers() {
        return Err(Error::Shape(format!(
            "freeze mask covers {} layers, network has {}",
            mask.trainable.len(),
            spec.weight_layers()
        )));
    }
    if mask.trainable.iter().all(|t| !t) {
        return Err(Error::Config("all layers frozen: nothing to train".into()));
    }

    let started = Instant::now();
    let mut target = online.copy_weights();
    let mut opt = OptimizerState::new(&online, cfg.optimizer, cfg.alpha, cfg.grad_clip_norm);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut explore_rng = seed::rng_from(seed::derive(seed, EXPLORE_LABEL));
    let mut replay_rng = seed::rng_from(seed::derive(seed, REPLAY_LABEL));
    let env_root = seed::derive(seed, ENV_LABEL);
    let warmup = cfg.effective_warmup();

    let mut epsilon = cfg.epsilon_start;
    let mut global_step: u64 = 0;
    let mut records = Vec::with_capacity(episodes);

    let batch = cfg.batch_size;
    let mut inputs = vec![0.0; batch * STATE_DIM];
    let mut actions = vec![0usize; batch];

    for episode in 0..episodes {
        let ep_seed = seed::episode_seed(env_root, u64::from(path.id), episode as u64);
        let mut env = env::reset(&sc, path, ep_seed)?;
        let mut state = env::observe(&env, &sc)?;
        let mut loss_sum = 0.0;
        let mut loss_count = 0u32;

        while !env.done {
            let a = select_action(&online, &state, epsilon, &mut explore_rng)?;
            let out = env::apply_action(&mut env, Action::from_index(a)?, &sc)?;
            buffer.push(Transition {
                state,
                action: a,
                reward: out.reward,
                next_state: out.next_state,
                done: out.done,
            });
            state = out.next_state;
            global_step += 1;

            if buffer.len() >= warmup {
                let sampled = buffer.sample(batch, &mut replay_rng)?;
                let targets =
                    compute_targets(cfg.algorithm, &online, &target, &sampled, cfg.discount)?;
                for (k, t) in sampled.iter().enumerate() {
                    inputs[k * STATE_DIM..(k + 1) * STATE_DIM]
                        .copy_from_slice(t.state.as_slice());
                    actions[k] = t.action;
                }
                let loss =
                    qnet::train_step(&mut online, &mut opt, &mask, &inputs, &targets, &actions)?;
                loss_sum += loss;
                loss_count += 1;
            }

            if global_step.is_multiple_of(cfg.target_sync_interval) {
                target = online.copy_weights();
                observer.on_sync(global_step, &online, &target);
            }
            observer.on_step(global_step, buffer.len(), &online, &target);
        }

        records.push(EpisodeRecord {
            episode,
            reward: env.cum_reward,
            handovers: env.handovers,
            outages: env.outages,
            epsilon,
            mean_loss: if loss_count > 0 {
                loss_sum / f64::from(loss_count)
            } else {
                0.0
            },
        });
        observer.on_episode(episode, epsilon);
        epsilon = (epsilon * cfg.epsilon_decay).max(cfg.epsilon_min);
    }

    Ok((
        online,
        TrainReport {
            episodes: records,
            global_steps: global_step,
            wall_time_s: started.elapsed().as_secs_f64(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qnet::{deserialize, Activation, WeightDoc};
    use std::collections::BTreeMap;

    fn small_cfg() -> AgentConfig {
        AgentConfig {
            hidden_layers: vec![16, 16],
            batch_size: 8,
            warmup: 16,
            ..AgentConfig::default()
        }
    }

    fn short_path(scenario: &Scenario) -> FlightPath {
        let gen = crate::env::PathGen {
            cruise_alt_min_m: 20.0,
            cruise_alt_max_m: 25.0,
            turns_min: 1,
            turns_max: 2,
            leg_len_min_m: 5.0,
            leg_len_max_m: 10.0,
            margin_m: 50.0,
        };
        crate::env::generate_paths_with(scenario, 1, 77, &gen)
            .unwrap()
            .remove(0)
    }

    fn dummy_state(fill: f64) -> StateVector {
        StateVector([fill; STATE_DIM])
    }

    fn dummy_transition(k: usize) -> Transition {
        Transition {
            state: dummy_state(k as f64 / 100.0),
            action: k % 3,
            reward: -(k as f64),
            next_state: dummy_state((k + 1) as f64 / 100.0),
            done: false,
        }
    }

    /// 13-in 3-out net with zero weights and fixed output biases.
    fn bias_net(biases: [f64; 3]) -> QNetwork {
        let doc = WeightDoc {
            format_version: 1,
            layer_sizes: vec![STATE_DIM, 3],
            activation: Activation::Relu,
            weights: vec![vec![0.0; STATE_DIM * 3]],
            biases: vec![biases.to_vec()],
            metadata: BTreeMap::new(),
        };
        deserialize(&doc).unwrap()
    }

    #[test]
    fn buffer_evicts_in_insertion_order() {
        let mut buf = ReplayBuffer::new(3);
        for k in 0..5 {
            buf.push(dummy_transition(k));
        }
        assert_eq!(buf.len(), 3);
        let rewards: Vec<f64> = buf.iter().map(|t| t.reward).collect();
        assert_eq!(rewards, vec![-2.0, -3.0, -4.0]);
    }

    #[test]
    fn buffer_at_exact_capacity_drops_first() {
        let mut buf = ReplayBuffer::new(100);
        for k in 0..101 {
            buf.push(dummy_transition(k));
        }
        assert_eq!(buf.len(), 100);
        assert_eq!(buf.iter().next().unwrap().reward, -1.0);
    }

    #[test]
    fn sample_is_without_replacement_and_seeded() {
        let mut buf = ReplayBuffer::new(50);
        for k in 0..50 {
            buf.push(dummy_transition(k));
        }
        let mut rng = seed::rng_from(4);
        let s = buf.sample(20, &mut rng).unwrap();
        let mut rewards: Vec<i64> = s.iter().map(|t| t.reward as i64).collect();
        rewards.sort_unstable();
        rewards.dedup();
        assert_eq!(rewards.len(), 20, "sample contained duplicates");

        let again: Vec<f64> = buf
            .sample(20, &mut seed::rng_from(4))
            .unwrap()
            .iter()
            .map(|t| t.reward)
            .collect();
        let first: Vec<f64> = buf
            .sample(20, &mut seed::rng_from(4))
            .unwrap()
            .iter()
            .map(|t| t.reward)
            .collect();
        assert_eq!(again, first);
    }

    #[test]
    fn sample_underfilled_errors() {
        let mut buf = ReplayBuffer::new(10);
        buf.push(dummy_transition(0));
        assert!(buf.sample(2, &mut seed::rng_from(0)).is_err());
    }

    #[test]
    fn select_action_greedy_limit() {
        let net = bias_net([0.2, 0.9, 0.9]);
        let mut rng = seed::rng_from(1);
        // Tie at indices 1 and 2 resolves low; epsilon 0 consumes no draws.
        let before = rng.clone();
        let a = select_action(&net, &dummy_state(0.0), 0.0, &mut rng).unwrap();
        assert_eq!(a, 1);
        assert_eq!(rng, before);
        assert!(select_action(&net, &dummy_state(0.0), 1.5, &mut rng).is_err());
    }

    #[test]
    fn select_action_uniform_at_full_exploration() {
        let net = bias_net([5.0, 0.0, 0.0]);
        let mut rng = seed::rng_from(2);
        let mut counts = [0u32; 3];
        let n = 100_000;
        for _ in 0..n {
            counts[select_action(&net, &dummy_state(0.0), 1.0, &mut rng).unwrap()] += 1;
        }
        for c in counts {
            let freq = f64::from(c) / f64::from(n);
            assert!(
                (freq - 1.0 / 3.0).abs() < 0.01,
                "action frequency {freq} departs from uniform"
            );
        }
    }

    #[test]
    fn targets_use_reward_alone_when_done() {
        let online = bias_net([0.0, 1.0, 0.0]);
        let target = bias_net([5.0, 2.0, 9.0]);
        let mut t = dummy_transition(0);
        t.reward = -1.0;
        t.done = true;
        for alg in [Algorithm::Dqn, Algorithm::Ddqn] {
            let y = compute_targets(alg, &online, &target, &[&t], 0.99).unwrap();
            assert_eq!(y, vec![-1.0]);
        }
    }

    #[test]
    fn ddqn_decouples_selection_from_valuation() {
        // Online prefers action 1; target values are [5, 2, 9].
        // DDQN bootstraps with Q_target[1] = 2; DQN takes max = 9.
        let online = bias_net([0.0, 1.0, 0.0]);
        let target = bias_net([5.0, 2.0, 9.0]);
        let mut t = dummy_transition(0);
        t.reward = -0.5;
        let y_ddqn = compute_targets(Algorithm::Ddqn, &online, &target, &[&t], 0.99).unwrap();
        let y_dqn = compute_targets(Algorithm::Dqn, &online, &target, &[&t], 0.99).unwrap();
        assert!((y_ddqn[0] - 1.48).abs() < 1e-12);
        assert!((y_dqn[0] - 8.41).abs() < 1e-12);
    }

    #[test]
    fn ddqn_equals_dqn_when_networks_coincide() {
        let spec = NetworkSpec::default_q(&[8]);
        let net = qnet::init(&spec, 3).unwrap();
        let trs: Vec<Transition> = (0..16).map(dummy_transition).collect();
        let refs: Vec<&Transition> = trs.iter().collect();
        let a = compute_targets(Algorithm::Ddqn, &net, &net, &refs, 0.95).unwrap();
        let b = compute_targets(Algorithm::Dqn, &net, &net, &refs, 0.95).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn ddqn_targets_never_exceed_dqn_targets() {
        for s in 0..20u64 {
            let spec = NetworkSpec::default_q(&[8, 8]);
            let online = qnet::init(&spec, s).unwrap();
            let target = qnet::init(&spec, s + 1000).unwrap();
            let trs: Vec<Transition> = (0..32).map(|k| {
                let mut t = dummy_transition(k);
                t.state = dummy_state((k as f64).sin());
                t.next_state = dummy_state((k as f64).cos());
                t
            }).collect();
            let refs: Vec<&Transition> = trs.iter().collect();
            let yd = compute_targets(Algorithm::Ddqn, &online, &target, &refs, 0.99).unwrap();
            let yq = compute_targets(Algorithm::Dqn, &online, &target, &refs, 0.99).unwrap();
            for (a, b) in yd.iter().zip(&yq) {
                assert!(a <= &(b + 1e-12), "DDQN target {a} exceeds DQN {b}");
            }
        }
    }

    #[test]
    fn one_episode_records_path_length_steps() {
        let sc = Scenario::default();
        let path = short_path(&sc);
        let (_, report) = train(
            &sc,
            &path,
            &small_cfg(),
            &sc.reward.clone(),
            9,
            1,
            None,
            None,
        )
        .unwrap();
        assert_eq!(report.episodes.len(), 1);
        assert_eq!(report.global_steps as usize, path.len() - 1);
    }

    #[test]
    fn epsilon_follows_closed_form_schedule() {
        let sc = Scenario::default();
        let path = short_path(&sc);
        let cfg = AgentConfig {
            epsilon_start: 1.0,
            epsilon_min: 0.15,
            epsilon_decay: 0.5,
            ..small_cfg()
        };
        let (_, report) = train(&sc, &path, &cfg, &sc.reward.clone(), 11, 6, None, None).unwrap();
        for (e, rec) in report.episodes.iter().enumerate() {
            let want = (0.5f64.powi(e as i32)).max(0.15);
            assert!(
                (rec.epsilon - want).abs() < 1e-12,
                "episode {e}: epsilon {} != {want}",
                rec.epsilon
            );
        }
    }

    #[test]
    fn warmup_gates_learning() {
        let sc = Scenario::default();
        let path = short_path(&sc);
        let t = path.len() - 1;
        // Warm-up beyond one episode's transitions: no update in episode 0.
        let cfg = AgentConfig {
            warmup: t + 5,
            ..small_cfg()
        };
        let (_, report) = train(&sc, &path, &cfg, &sc.reward.clone(), 13, 2, None, None).unwrap();
        assert_eq!(report.episodes[0].mean_loss, 0.0);
        assert!(report.episodes[1].mean_loss > 0.0);
    }

    #[test]
    fn training_is_bit_reproducible() {
        let sc = Scenario::default();
        let path = short_path(&sc);
        let cfg = small_cfg();
        let run = || train(&sc, &path, &cfg, &sc.reward.clone(), 21, 3, None, None).unwrap();
        let (net_a, rep_a) = run();
        let (net_b, rep_b) = run();
        assert_eq!(net_a, net_b);
        assert_eq!(rep_a.episodes, rep_b.episodes);
        assert_eq!(rep_a.global_steps, rep_b.global_steps);

        let (net_c, _) = train(&sc, &path, &cfg, &sc.reward.clone(), 22, 3, None, None).unwrap();
        assert_ne!(net_a, net_c);
    }

    struct SyncTracker {
        syncs: Vec<u64>,
        target_fps: Vec<(u64, u64)>,
        synced_equal: bool,
    }

    impl TrainObserver for SyncTracker {
        fn on_step(&mut self, step: u64, _len: usize, _online: &QNetwork, target: &QNetwork) {
            self.target_fps.push((step, target.fingerprint()));
        }
        fn on_sync(&mut self, step: u64, online: &QNetwork, target: &QNetwork) {
            self.syncs.push(step);
            self.synced_equal &= online.fingerprint() == target.fingerprint();
        }
    }

    #[test]
    fn target_sync_period_and_staleness() {
        let sc = Scenario::default();
        let path = short_path(&sc);
        let cfg = AgentConfig {
            target_sync_interval: 7,
            warmup: 8,
            ..small_cfg()
        };
        let mut obs = SyncTracker {
            syncs: Vec::new(),
            target_fps: Vec::new(),
            synced_equal: true,
        };
        let (_, report) = train_with_observer(
            &sc,
            &path,
            &cfg,
            &sc.reward.clone(),
            31,
            2,
            None,
            None,
            &mut obs,
        )
        .unwrap();
        assert!(obs.syncs.len() >= 2, "path too short to observe syncs");
        assert!(obs.syncs.iter().all(|s| s % 7 == 0));
        assert!(obs.synced_equal);
        assert!(*obs.syncs.last().unwrap() <= report.global_steps);
        // Between consecutive syncs the target is frozen.
        for w in obs.target_fps.windows(2) {
            let (s0, fp0) = w[0];
            let (s1, fp1) = w[1];
            if s0 / 7 == s1 / 7 && s1 % 7 != 0 {
                assert_eq!(fp0, fp1, "target drifted between syncs at steps {s0}-{s1}");
            }
        }
    }

    #[test]
    fn buffer_capacity_respected_during_training() {
        struct CapWatch {
            cap: usize,
            ok: bool,
            max_seen: usize,
        }
        impl TrainObserver for CapWatch {
            fn on_step(&mut self, _s: u64, len: usize, _o: &QNetwork, _t: &QNetwork) {
                self.ok &= len <= self.cap;
                self.max_seen = self.max_seen.max(len);
            }
        }
        let sc = Scenario::default();
        let path = short_path(&sc);
        let cfg = AgentConfig {
            buffer_capacity: 30,
            warmup: 8,
            ..small_cfg()
        };
        let mut obs = CapWatch {
            cap: 30,
            ok: true,
            max_seen: 0,
        };
        train_with_observer(&sc, &path, &cfg, &sc.reward.clone(), 41, 2, None, None, &mut obs)
            .unwrap();
        assert!(obs.ok);
        assert_eq!(obs.max_seen, 30, "buffer never filled; test lost its teeth");
    }

    #[test]
    fn all_frozen_mask_is_rejected() {
        let sc = Scenario::default();
        let path = short_path(&sc);
        let cfg = small_cfg();
        let mask = FreezeMask::freeze_first(3, 3);
        let err = train(
            &sc,
            &path,
            &cfg,
            &sc.reward.clone(),
            5,
            1,
            None,
            Some(mask),
        );
        assert!(err.is_err());
    }

    #[test]
    fn initial_net_spec_mismatch_is_rejected() {
        let sc = Scenario::default();
        let path = short_path(&sc);
        let cfg = small_cfg();
        let wrong = qnet::init(&NetworkSpec::default_q(&[4]), 1).unwrap();
        assert!(train(
            &sc,
            &path,
            &cfg,
            &sc.reward.clone(),
            5,
            1,
            Some(wrong),
            None
        )
        .is_err());
    }

    #[test]
    fn report_csv_schema() {
        let report = TrainReport {
            episodes: vec![EpisodeRecord {
                episode: 0,
                reward: -2.5,
                handovers: 3,
                outages: 1,
                epsilon: 0.75,
                mean_loss: 0.125,
            }],
            global_steps: 40,
            wall_time_s: 0.0,
        };
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "episode,reward,handovers,outages,epsilon,mean_loss"
        );
        assert_eq!(lines.next().unwrap(), "0,-2.5,3,1,0.75,0.125");
    }
}
