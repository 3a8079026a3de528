//! Network scenario: base stations, area, channel, reward weights, UAV motion.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::{Error, Result};

/// One terrestrial base station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub h_bs_m: f64,
    pub tx_power_dbm: f64,
}

/// Reward shaping: outage weight, handover weight, sigmoid sharpness/scale,
/// and the handover margin the soft penalty is centered on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub alpha_o: f64,
    pub beta_h: f64,
    pub tau: f64,
    pub eta: f64,
    pub ho_margin_db: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            alpha_o: 1.0,
            beta_h: 1.0,
            tau: 1.0,
            eta: 1.0,
            ho_margin_db: 3.0,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha_o", self.alpha_o),
            ("beta_h", self.beta_h),
            ("tau", self.tau),
            ("eta", self.eta),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("reward.{name} must be positive, got {v}")));
            }
        }
        if !self.ho_margin_db.is_finite() {
            return Err(Error::Config("reward.ho_margin_db must be finite".into()));
        }
        Ok(())
    }
}

/// Full simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub area_l_m: f64,
    pub area_w_m: f64,
    pub base_stations: Vec<BaseStation>,
    pub channel: ChannelParams,
    pub reward: RewardConfig,
    pub speed_mps: f64,
    pub dt_s: f64,
    pub max_altitude_m: f64,
}

impl Default for Scenario {
    /// 2000x2000 m area, five 25 m / 45 dBm BSs (center plus four offset by
    /// 600 m diagonally), 2.1 GHz, -100 dBm noise, 10 m/s UAV at 0.1 s steps.
    fn default() -> Self {
        let (cx, cy) = (1000.0, 1000.0);
        let mut base_stations = vec![BaseStation {
            id: 0,
            x: cx,
            y: cy,
            h_bs_m: 25.0,
            tx_power_dbm: 45.0,
        }];
        for (i, (sx, sy)) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)]
            .into_iter()
            .enumerate()
        {
            base_stations.push(BaseStation {
                id: i as u32 + 1,
                x: cx + 600.0 * sx,
                y: cy + 600.0 * sy,
                h_bs_m: 25.0,
                tx_power_dbm: 45.0,
            });
        }
        Self {
            area_l_m: 2000.0,
            area_w_m: 2000.0,
            base_stations,
            channel: ChannelParams::default(),
            reward: RewardConfig::default(),
            speed_mps: 10.0,
            dt_s: 0.1,
            max_altitude_m: 30.0,
        }
    }
}

impl Scenario {
    /// Handover margin used both by the reward and by margin-based baselines.
    pub fn ho_margin_db(&self) -> f64 {
        self.reward.ho_margin_db
    }

    /// Spacing between consecutive path points, meters.
    pub fn step_len_m(&self) -> f64 {
        self.speed_mps * self.dt_s
    }

    /// Linear transmit powers in mW, indexed like `base_stations`.
    pub fn tx_powers_mw(&self) -> Vec<f64> {
        self.base_stations
            .iter()
            .map(|b| crate::channel::dbm_to_mw(b.tx_power_dbm))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.area_l_m > 0.0) || !(self.area_w_m > 0.0) {
            return Err(Error::Scenario("area dimensions must be positive".into()));
        }
        let m = self.base_stations.len();
        if m < 3 {
            return Err(Error::Scenario(format!(
                "need at least 3 base stations for the 3-candidate action space, got {m}"
            )));
        }
        // Ids must be exactly 0..M-1: the state encoding maps id -> (id+1)/M
        // and relies on this to stay inside [-1, 1].
        let mut ids: Vec<u32> = self.base_stations.iter().map(|b| b.id).collect();
        ids.sort_unstable();
        for (want, got) in ids.iter().enumerate() {
            if *got != want as u32 {
                return Err(Error::Scenario(format!(
                    "base station ids must be exactly 0..{} with no gaps, found id {got}",
                    m - 1
                )));
            }
        }
        for b in &self.base_stations {
            if !(0.0..=self.area_l_m).contains(&b.x) || !(0.0..=self.area_w_m).contains(&b.y) {
                return Err(Error::Scenario(format!(
                    "base station {} at ({}, {}) lies outside the {}x{} area",
                    b.id, b.x, b.y, self.area_l_m, self.area_w_m
                )));
            }
            if !(b.h_bs_m > 0.0) {
                return Err(Error::Scenario(format!(
                    "base station {} height must be positive",
                    b.id
                )));
            }
            if !b.tx_power_dbm.is_finite() {
                return Err(Error::Scenario(format!(
                    "base station {} tx power must be finite",
                    b.id
                )));
            }
        }
        if !(self.dt_s > 0.0) || !(self.speed_mps > 0.0) {
            return Err(Error::Scenario("speed and dt must be positive".into()));
        }
        if !(self.max_altitude_m > 0.0) || self.max_altitude_m > 100.0 {
            return Err(Error::Scenario(format!(
                "max altitude must be in (0, 100] m, got {}",
                self.max_altitude_m
            )));
        }
        self.channel.validate()?;
        self.reward.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scenario_is_valid() {
        let s = Scenario::default();
        s.validate().unwrap();
        assert_eq!(s.base_stations.len(), 5);
        assert_eq!(s.step_len_m(), 1.0);
        assert_eq!(s.ho_margin_db(), 3.0);
    }

    #[test]
    fn rejects_too_few_bs() {
        let mut s = Scenario::default();
        s.base_stations.truncate(2);
        assert!(s.validate().is_err());
    }

    #[test]
    fn rejects_gapped_ids() {
        let mut s = Scenario::default();
        s.base_stations[3].id = 9;
        assert!(s.validate().is_err());
    }

    #[test]
    fn rejects_bs_outside_area() {
        let mut s = Scenario::default();
        s.base_stations[0].x = 2500.0;
        assert!(s.validate().is_err());
    }
}
