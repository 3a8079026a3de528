//! 3GPP urban-macro aerial channel model.
//!
//! Pure functions for the link budget between a UAV user terminal and a
//! terrestrial base station: line-of-sight probability, LoS/NLoS path loss
//! with a free-space floor, probabilistic effective path loss, linear channel
//! gain, SINR over an interfering BS set, and the outage indicator.
//!
//! Conventions:
//!
//! * Path loss and SINR are in dB, powers in dBm at module boundaries; all
//!   SINR arithmetic happens in linear milliwatts internally.
//! * Carrier frequency is in GHz. The free-space term's `-147.55` constant
//!   (`20*log10(4*pi/c)`) expects Hz, so the conversion happens inside
//!   [`free_space_path_loss`].
//! * The aerial model is specified for terminal heights of 22.5 m to 100 m;
//!   below that (takeoff/landing) the height is clamped to 22.5 m rather
//!   than switching to a terrestrial model.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Lower edge of the aerial model's terminal-height validity range, meters.
pub const MIN_MODEL_H_UT_M: f64 = 22.5;
/// Free-space path-loss constant for distance in meters and frequency in Hz.
pub const FSPL_CONST_DB: f64 = -147.55;

/// How LoS/NLoS uncertainty enters the effective path loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMode {
    /// Deterministic probabilistic mixture: `P_LOS*PL_LOS + (1-P_LOS)*PL_NLOS`.
    Expected,
    /// Per-evaluation Bernoulli draw of the LoS state.
    SampledLos,
}

/// Carrier, noise floor, outage threshold, and stochasticity mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub carrier_freq_ghz: f64,
    pub noise_power_dbm: f64,
    pub sinr_threshold_db: f64,
    pub mode: ChannelMode,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            carrier_freq_ghz: 2.1,
            noise_power_dbm: -100.0,
            sinr_threshold_db: 0.0,
            mode: ChannelMode::SampledLos,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_freq_ghz > 0.0) {
            return Err(Error::Config(format!(
                "carrier_freq_ghz must be positive, got {}",
                self.carrier_freq_ghz
            )));
        }
        if !self.noise_power_dbm.is_finite() || !self.sinr_threshold_db.is_finite() {
            return Err(Error::Config("noise/threshold must be finite".into()));
        }
        Ok(())
    }
}

/// UAV-BS link geometry. Distances in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    /// Horizontal ground distance.
    pub d2d_m: f64,
    /// Full 3D distance.
    pub d3d_m: f64,
    /// UAV terminal height.
    pub h_ut_m: f64,
    /// BS antenna height.
    pub h_bs_m: f64,
}

impl LinkGeometry {
    /// Geometry between a UAV position and a BS antenna at `(x, y, h_bs)`.
    pub fn between(uav: [f64; 3], bs_x: f64, bs_y: f64, h_bs_m: f64) -> Self {
        let dx = uav[0] - bs_x;
        let dy = uav[1] - bs_y;
        let dz = uav[2] - h_bs_m;
        let d2d = (dx * dx + dy * dy).sqrt();
        let d3d = (dx * dx + dy * dy + dz * dz).sqrt();
        Self {
            d2d_m: d2d,
            d3d_m: d3d,
            h_ut_m: uav[2],
            h_bs_m,
        }
    }

    /// Terminal height clamped into the aerial model's validity range.
    fn h_ut_eff(&self) -> f64 {
        self.h_ut_m.max(MIN_MODEL_H_UT_M)
    }
}

/// One fully evaluated link: LoS probability, effective path loss, gain, SINR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub p_los: f64,
    pub pl_db: f64,
    pub gain_linear: f64,
    pub sinr_db: f64,
}

/// dBm to linear milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Linear milliwatts to dBm.
pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// LoS breakpoint distance `d_1 = max(294.05*log10(h_BS) - 432.94, 18)`.
pub fn breakpoint_distance(h_bs_m: f64) -> Result<f64> {
    if !(h_bs_m > 0.0) {
        return Err(Error::Domain(format!(
            "BS height must be positive, got {h_bs_m}"
        )));
    }
    Ok((294.05 * h_bs_m.log10() - 432.94).max(18.0))
}

/// LoS probability as a function of ground distance and heights.
///
/// Equals 1 inside the breakpoint distance; beyond it decays as
/// `d1/d2d + (1 - d1/d2d) * exp(-d2d / p1)` with
/// `p1 = 233.98 * log10(h_ut - 0.95)`.
pub fn los_probability(geom: &LinkGeometry) -> Result<f64> {
    if geom.d2d_m < 0.0 {
        return Err(Error::Domain("d2d must be non-negative".into()));
    }
    let h_ut = geom.h_ut_eff();
    if h_ut <= 0.95 {
        return Err(Error::Domain(format!(
            "terminal height {h_ut} m leaves log10(h_ut - 0.95) undefined"
        )));
    }
    let d1 = breakpoint_distance(geom.h_bs_m)?;
    if geom.d2d_m <= d1 {
        return Ok(1.0);
    }
    let p1 = 233.98 * (h_ut - 0.95).log10();
    let ratio = d1 / geom.d2d_m;
    Ok(ratio + (1.0 - ratio) * (-geom.d2d_m / p1).exp())
}

/// Free-space path loss in dB; frequency argument in GHz, converted to Hz
/// internally to match the -147.55 constant.
pub fn free_space_path_loss(d3d_m: f64, f_ghz: f64) -> Result<f64> {
    if !(d3d_m > 0.0) || !(f_ghz > 0.0) {
        return Err(Error::Domain(format!(
            "free-space path loss needs positive distance and frequency, got d3d={d3d_m}, f={f_ghz}"
        )));
    }
    let f_hz = f_ghz * 1e9;
    Ok(20.0 * d3d_m.log10() + 20.0 * f_hz.log10() + FSPL_CONST_DB)
}

/// LoS path loss in dB, floored by free-space loss.
pub fn path_loss_los(geom: &LinkGeometry, f_ghz: f64) -> Result<f64> {
    if !(geom.d3d_m > 0.0) {
        return Err(Error::Domain(format!(
            "d3d must be positive, got {}",
            geom.d3d_m
        )));
    }
    let h_ut = geom.h_ut_eff();
    let inner = (22.25 - 0.5 * h_ut.log10()) * geom.d3d_m.log10() + 30.9 + 20.0 * f_ghz.log10();
    Ok(inner.max(free_space_path_loss(geom.d3d_m, f_ghz)?))
}

/// NLoS path loss in dB, floored by the LoS loss.
pub fn path_loss_nlos(geom: &LinkGeometry, f_ghz: f64) -> Result<f64> {
    if !(geom.d3d_m > 0.0) {
        return Err(Error::Domain(format!(
            "d3d must be positive, got {}",
            geom.d3d_m
        )));
    }
    let h_ut = geom.h_ut_eff();
    let inner = (43.2 - 7.6 * h_ut.log10()) * geom.d3d_m.log10() + 32.4 + 20.0 * f_ghz.log10();
    Ok(inner.max(path_loss_los(geom, f_ghz)?))
}

/// Effective path loss in dB.
///
/// `Expected` mode returns the probabilistic mixture of the LoS and NLoS
/// losses; `SampledLos` draws the LoS state as a Bernoulli(`P_LOS`) using one
/// uniform variate from `rng` (exactly one draw per call, so random-stream
/// consumption does not depend on the outcome).
pub fn effective_path_loss<R: Rng + ?Sized>(
    geom: &LinkGeometry,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<f64> {
    let p_los = los_probability(geom)?;
    let pl_los = path_loss_los(geom, params.carrier_freq_ghz)?;
    match params.mode {
        ChannelMode::Expected => {
            let pl_nlos = path_loss_nlos(geom, params.carrier_freq_ghz)?;
            Ok(p_los * pl_los + (1.0 - p_los) * pl_nlos)
        }
        ChannelMode::SampledLos => {
            let u: f64 = rng.random();
            if u < p_los {
                Ok(pl_los)
            } else {
                Ok(path_loss_nlos(geom, params.carrier_freq_ghz)?)
            }
        }
    }
}

/// Expected-mode effective path loss; no random stream required.
pub fn expected_path_loss(geom: &LinkGeometry, f_ghz: f64) -> Result<f64> {
    let p_los = los_probability(geom)?;
    let pl_los = path_loss_los(geom, f_ghz)?;
    let pl_nlos = path_loss_nlos(geom, f_ghz)?;
    Ok(p_los * pl_los + (1.0 - p_los) * pl_nlos)
}

/// Linear channel gain `h = 10^(-PL/10)`.
pub fn channel_gain(pl_db: f64) -> f64 {
    10f64.powf(-pl_db / 10.0)
}

/// SINR in dB for the serving BS against all others as interference.
///
/// `gains` are linear channel gains per BS, `tx_powers_mw` linear transmit
/// powers per BS, `noise_mw` the linear noise floor.
pub fn sinr(
    serving_index: usize,
    gains: &[f64],
    tx_powers_mw: &[f64],
    noise_mw: f64,
) -> Result<f64> {
    if gains.is_empty() {
        return Err(Error::Domain("SINR over an empty BS set".into()));
    }
    if gains.len() != tx_powers_mw.len() {
        return Err(Error::Domain(format!(
            "gain/power length mismatch: {} vs {}",
            gains.len(),
            tx_powers_mw.len()
        )));
    }
    if serving_index >= gains.len() {
        return Err(Error::Domain(format!(
            "serving index {serving_index} out of range for {} BSs",
            gains.len()
        )));
    }
    if !(noise_mw > 0.0) {
        return Err(Error::Domain("noise power must be positive".into()));
    }
    let signal = gains[serving_index] * tx_powers_mw[serving_index];
    let mut interference = 0.0;
    for (i, (g, p)) in gains.iter().zip(tx_powers_mw).enumerate() {
        if i != serving_index {
            interference += g * p;
        }
    }
    Ok(10.0 * (signal / (noise_mw + interference)).log10())
}

/// Binary outage indicator: 1 iff `sinr_db < threshold_db` (strict).
pub fn outage_indicator(sinr_db: f64, threshold_db: f64) -> u8 {
    u8::from(sinr_db < threshold_db)
}
