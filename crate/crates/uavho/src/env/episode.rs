//! Episode state machine: observations, actions, handover accounting, reward.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{
    channel_gain, effective_path_loss, outage_indicator, sinr, LinkGeometry,
};
use crate::env::{FlightPath, RewardConfig, Scenario};
use crate::seed;
use crate::{Error, Result};

/// Observation length: p_t (3), p_{t+1} (3), candidate SINRs (3),
/// candidate ids (3), serving-slot indicator (1).
pub const STATE_DIM: usize = 13;

/// SINR clip range for state normalization, dB.
const SINR_CLIP_LO_DB: f64 = -20.0;
const SINR_CLIP_HI_DB: f64 = 60.0;
/// Altitude normalization scale, meters.
const ALT_SCALE_M: f64 = 100.0;

/// Normalized 13-component observation; every entry lies in [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector(pub [f64; STATE_DIM]);

impl StateVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Discrete action: keep the serving BS or switch to candidate slot 2 or 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Keep,
    Second,
    Third,
}

impl Action {
    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            0 => Ok(Self::Keep),
            1 => Ok(Self::Second),
            2 => Ok(Self::Third),
            _ => Err(Error::Episode(format!("action index {i} out of range 0..3"))),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Self::Keep => 0,
            Self::Second => 1,
            Self::Third => 2,
        }
    }
}

/// The serving BS plus the two strongest alternatives, with their SINRs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateSet {
    pub serving: u32,
    pub second: u32,
    pub third: u32,
    /// SINRs in slot order: serving, second, third.
    pub sinrs_db: [f64; 3],
}

impl CandidateSet {
    /// Builds the slot layout from per-BS SINRs indexed by BS id: serving in
    /// slot 1, remaining BSs ranked by descending SINR (ties to lower id).
    pub fn from_sinrs(serving: u32, sinrs_by_id: &[f64]) -> Result<Self> {
        if sinrs_by_id.len() < 3 {
            return Err(Error::Scenario(format!(
                "candidate set needs at least 3 base stations, got {}",
                sinrs_by_id.len()
            )));
        }
        let serving_idx = serving as usize;
        if serving_idx >= sinrs_by_id.len() {
            return Err(Error::Episode(format!(
                "serving id {serving} out of range for {} BSs",
                sinrs_by_id.len()
            )));
        }
        let mut others: Vec<(u32, f64)> = sinrs_by_id
            .iter()
            .enumerate()
            .filter(|(id, _)| *id != serving_idx)
            .map(|(id, s)| (id as u32, *s))
            .collect();
        others.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Ok(Self {
            serving,
            second: others[0].0,
            third: others[1].0,
            sinrs_db: [sinrs_by_id[serving_idx], others[0].1, others[1].1],
        })
    }

    pub fn bs_for(&self, action: Action) -> u32 {
        match action {
            Action::Keep => self.serving,
            Action::Second => self.second,
            Action::Third => self.third,
        }
    }
}

/// One environment transition as seen by the policy.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: StateVector,
    pub reward: f64,
    pub outage: bool,
    pub handover: bool,
    pub done: bool,
}

/// Mutable episode state. Owns the flight path, the per-episode random
/// stream, and the latest per-BS SINR measurement (indexed by BS id).
#[derive(Debug, Clone)]
pub struct EnvState {
    pub step_index: usize,
    pub serving_bs: u32,
    pub candidates: CandidateSet,
    pub done: bool,
    pub handovers: u32,
    pub outages: u32,
    pub cum_reward: f64,
    pub per_bs_sinr_db: Vec<f64>,
    path: FlightPath,
    powers_mw: Vec<f64>,
    rng: ChaCha8Rng,
}

impl EnvState {
    pub fn path(&self) -> &FlightPath {
        &self.path
    }

    /// Current UAV position.
    pub fn position(&self) -> [f64; 3] {
        self.path.points[self.step_index]
    }
}

/// Measures the SINR of every BS at `position`, each evaluated as serving
/// with all others interfering. Indexed by BS id. In sampled-LoS mode this
/// draws exactly one variate per BS, in ascending id order, regardless of
/// outcomes, so the stream advances identically for every policy.
fn measure_all<R: Rng + ?Sized>(
    scenario: &Scenario,
    position: [f64; 3],
    powers_mw: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    let m = scenario.base_stations.len();
    let mut order: Vec<&crate::env::BaseStation> = scenario.base_stations.iter().collect();
    order.sort_by_key(|b| b.id);
    let mut gains = vec![0.0; m];
    for b in order {
        let geom = LinkGeometry::between(position, b.x, b.y, b.h_bs_m);
        let pl = effective_path_loss(&geom, &scenario.channel, rng)?;
        gains[b.id as usize] = channel_gain(pl);
    }
    let noise_mw = crate::channel::dbm_to_mw(scenario.channel.noise_power_dbm);
    (0..m)
        .map(|id| sinr(id, &gains, powers_mw, noise_mw))
        .collect()
}

/// Transmit powers in mW indexed by BS id.
fn powers_by_id(scenario: &Scenario) -> Vec<f64> {
    let mut powers = vec![0.0; scenario.base_stations.len()];
    for b in &scenario.base_stations {
        powers[b.id as usize] = crate::channel::dbm_to_mw(b.tx_power_dbm);
    }
    powers
}

/// Measures every BS at a position and builds the candidate slots.
pub fn build_candidates<R: Rng + ?Sized>(
    position: [f64; 3],
    serving: u32,
    scenario: &Scenario,
    rng: &mut R,
) -> Result<CandidateSet> {
    let powers = powers_by_id(scenario);
    let sinrs = measure_all(scenario, position, &powers, rng)?;
    CandidateSet::from_sinrs(serving, &sinrs)
}

/// Starts an episode: step 0, counters zeroed, serving BS chosen as the
/// argmax-SINR station (ties to lower id) from the first measurement of the
/// episode's own random stream.
pub fn reset(scenario: &Scenario, path: &FlightPath, episode_seed: u64) -> Result<EnvState> {
    scenario.validate()?;
    path.validate(scenario.step_len_m())?;
    let mut rng = seed::rng_from(episode_seed);
    let powers = powers_by_id(scenario);
    let sinrs = measure_all(scenario, path.points[0], &powers, &mut rng)?;
    let serving = argmax_lowest_id(&sinrs);
    let candidates = CandidateSet::from_sinrs(serving, &sinrs)?;
    Ok(EnvState {
        step_index: 0,
        serving_bs: serving,
        candidates,
        done: false,
        handovers: 0,
        outages: 0,
        cum_reward: 0.0,
        per_bs_sinr_db: sinrs,
        path: path.clone(),
        powers_mw: powers,
        rng,
    })
}

fn argmax_lowest_id(values: &[f64]) -> u32 {
    let mut best = 0usize;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best as u32
}

/// Observation at the current step. Fails once the episode is done.
pub fn observe(env: &EnvState, scenario: &Scenario) -> Result<StateVector> {
    if env.done {
        return Err(Error::Episode("observe() on a finished episode".into()));
    }
    Ok(state_vector(env, scenario))
}

/// Observation construction without the done-guard; at the terminal step the
/// next-position block repeats the current position.
pub(crate) fn state_vector(env: &EnvState, scenario: &Scenario) -> StateVector {
    let t = env.step_index;
    let p = env.path.points[t];
    let p_next = env.path.points[(t + 1).min(env.path.len() - 1)];
    let m = scenario.base_stations.len() as f64;
    let mut s = [0.0; STATE_DIM];
    for (k, pt) in [p, p_next].iter().enumerate() {
        s[3 * k] = 2.0 * pt[0] / scenario.area_l_m - 1.0;
        s[3 * k + 1] = 2.0 * pt[1] / scenario.area_w_m - 1.0;
        s[3 * k + 2] = 2.0 * pt[2] / ALT_SCALE_M - 1.0;
    }
    for (k, g) in env.candidates.sinrs_db.iter().enumerate() {
        let clipped = g.clamp(SINR_CLIP_LO_DB, SINR_CLIP_HI_DB);
        s[6 + k] = 2.0 * (clipped - SINR_CLIP_LO_DB) / (SINR_CLIP_HI_DB - SINR_CLIP_LO_DB) - 1.0;
    }
    for (k, id) in [
        env.candidates.serving,
        env.candidates.second,
        env.candidates.third,
    ]
    .iter()
    .enumerate()
    {
        s[9 + k] = 2.0 * (f64::from(*id) + 1.0) / m - 1.0;
    }
    // Slot index of the serving BS mapped to {-1, 0, 1}; slot 1 by construction.
    s[12] = -1.0;
    StateVector(s)
}

/// Handover soft penalty and outage penalty, both non-positive.
pub fn compute_reward(
    prev_serving: u32,
    new_serving: u32,
    sinr_new_db: f64,
    sinr_prev_bs_db: f64,
    cfg: &RewardConfig,
    outage: bool,
) -> f64 {
    let ho_soft = if new_serving != prev_serving {
        cfg.eta * sigmoid((sinr_new_db - sinr_prev_bs_db - cfg.ho_margin_db) / cfg.tau)
    } else {
        0.0
    };
    -cfg.alpha_o * f64::from(u8::from(outage)) - cfg.beta_h * ho_soft
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Applies one of the three candidate actions and advances one path point.
pub fn apply_action(
    env: &mut EnvState,
    action: Action,
    scenario: &Scenario,
) -> Result<StepOutcome> {
    let target = env.candidates.bs_for(action);
    apply_serving(env, target, scenario)
}

/// Sets the serving BS to an arbitrary station (baselines pick among all of
/// them), scores outage and reward on the current measurement, then advances.
pub fn apply_serving(
    env: &mut EnvState,
    new_serving: u32,
    scenario: &Scenario,
) -> Result<StepOutcome> {
    if env.done {
        return Err(Error::Episode("apply on a finished episode".into()));
    }
    let m = env.per_bs_sinr_db.len();
    if new_serving as usize >= m {
        return Err(Error::Episode(format!(
            "serving id {new_serving} out of range for {m} BSs"
        )));
    }
    let prev = env.serving_bs;
    let sinr_new = env.per_bs_sinr_db[new_serving as usize];
    let sinr_prev = env.per_bs_sinr_db[prev as usize];
    let outage = outage_indicator(sinr_new, scenario.channel.sinr_threshold_db) == 1;
    let handover = new_serving != prev;
    let reward = compute_reward(prev, new_serving, sinr_new, sinr_prev, &scenario.reward, outage);

    env.serving_bs = new_serving;
    env.handovers += u32::from(handover);
    env.outages += u32::from(outage);
    env.cum_reward += reward;
    env.step_index += 1;
    env.done = env.step_index == env.path.len() - 1;

    let position = env.path.points[env.step_index];
    env.per_bs_sinr_db = measure_all(scenario, position, &env.powers_mw, &mut env.rng)?;
    env.candidates = CandidateSet::from_sinrs(env.serving_bs, &env.per_bs_sinr_db)?;

    Ok(StepOutcome {
        next_state: state_vector(env, scenario),
        reward,
        outage,
        handover,
        done: env.done,
    })
}
