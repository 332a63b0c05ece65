//! Free-space line-of-sight channel: path loss, received power, and SINR
//! capacity.
//!
//! Path loss is returned as a multiplicative attenuation factor so that
//! `received = transmitted * gain^2 * attenuation`; it decreases
//! monotonically with distance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("gain must be nonnegative, got {0}")]
    NegativeGain(f64),
}

/// Physical-layer parameters of every link in the swarm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ChannelParams {
    /// Carrier frequency f0 in Hz.
    pub carrier_hz: f64,
    /// Path-loss exponent (2 for free space).
    pub path_loss_exponent: f64,
    /// Bandwidth B in Hz.
    pub bandwidth_hz: f64,
    /// Noise power spectral density N0 in W/Hz.
    pub noise_density: f64,
    /// Transmit power in W.
    pub tx_power_w: f64,
    /// Maximum link distance D in meters; links beyond it carry nothing.
    pub max_range_m: f64,
}

impl Default for ChannelParams {
    /// 28 GHz mmWave link, 100 MHz bandwidth, -174 dBm/Hz noise floor,
    /// 1 W transmit power, 100 m maximum range.
    fn default() -> Self {
        ChannelParams {
            carrier_hz: 28e9,
            path_loss_exponent: 2.0,
            bandwidth_hz: 100e6,
            noise_density: 10f64.powf(-174.0 / 10.0) * 1e-3,
            tx_power_w: 1.0,
            max_range_m: 100.0,
        }
    }
}

impl ChannelParams {
    /// Carrier wavelength in meters.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Noise power over the full bandwidth, in W.
    pub fn noise_power(&self) -> f64 {
        self.noise_density * self.bandwidth_hz
    }

    /// Reference distance at which the attenuation factor is 1.
    pub fn reference_distance(&self) -> f64 {
        SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * self.carrier_hz)
    }
}

/// Free-space attenuation factor `(c / (4 pi f0 d))^gamma`.
pub fn path_loss(distance_m: f64, p: &ChannelParams) -> Result<f64, ChannelError> {
    if distance_m <= 0.0 {
        return Err(ChannelError::NonPositiveDistance(distance_m));
    }
    let ratio = p.reference_distance() / distance_m;
    // powi fast path: the exponent is 2 in every free-space configuration
    // and this sits inside the Monte Carlo loop.
    let gamma = p.path_loss_exponent;
    if gamma == gamma.round() && gamma.abs() <= 8.0 {
        Ok(ratio.powi(gamma as i32))
    } else {
        Ok(ratio.powf(gamma))
    }
}

/// Received power `P_tx * gain^2 * attenuation(d)` in W.
pub fn received_power(gain: f64, distance_m: f64, p: &ChannelParams) -> Result<f64, ChannelError> {
    if gain < 0.0 {
        return Err(ChannelError::NegativeGain(gain));
    }
    Ok(p.tx_power_w * gain * gain * path_loss(distance_m, p)?)
}

/// Shannon capacity under interference:
/// `B * log2(1 + S / (I + N0 B))` in bit/s. Zero signal yields zero.
pub fn sinr_capacity(signal_w: f64, interference_w: f64, p: &ChannelParams) -> f64 {
    if signal_w <= 0.0 {
        return 0.0;
    }
    let sinr = signal_w / (interference_w + p.noise_power());
    p.bandwidth_hz * (1.0 + sinr).log2()
}
