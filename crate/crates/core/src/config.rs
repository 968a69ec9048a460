//! Scenario parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Carrier frequency of the reference scenario, Hz.
pub const DEFAULT_CARRIER_HZ: f64 = 1.6e9;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * db_to_linear(dbm)
}

/// Wavelength in meters for a carrier frequency in Hz.
pub fn wavelength_for(carrier_hz: f64) -> f64 {
    SPEED_OF_LIGHT / carrier_hz
}

/// All scalar parameters of a downlink scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// Number of array elements.
    pub m: usize,
    /// Number of single-antenna users.
    pub k: usize,
    /// Total transmit power, W.
    pub p_watts: f64,
    /// Noise power, W.
    pub n0_watts: f64,
    /// Carrier wavelength, m.
    pub wavelength: f64,
    pub pathloss_exponent: f64,
    /// Cell radius, m.
    pub cell_radius: f64,
    /// Users closer than this are clamped to it, m.
    pub min_distance: f64,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            m: 16,
            k: 8,
            p_watts: 1.0,
            n0_watts: dbm_to_watts(-104.0),
            wavelength: wavelength_for(DEFAULT_CARRIER_HZ),
            pathloss_exponent: 3.5,
            cell_radius: 500.0,
            min_distance: 10.0,
            seed: 1,
        }
    }
}

impl SystemConfig {
    /// `ρ = P / (M N0)`.
    pub fn rho(&self) -> f64 {
        self.p_watts / (self.m as f64 * self.n0_watts)
    }

    /// Transmit SNR `P / N0`, linear.
    pub fn transmit_snr(&self) -> f64 {
        self.p_watts / self.n0_watts
    }

    /// Sets `N0` so that `P / N0` equals the given value in dB.
    pub fn with_transmit_snr_db(mut self, snr_db: f64) -> Self {
        self.n0_watts = self.p_watts / db_to_linear(snr_db);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::param("m", "need at least one element"));
        }
        if self.k == 0 {
            return Err(Error::param("k", "need at least one user"));
        }
        let positive = [
            ("p_watts", self.p_watts),
            ("n0_watts", self.n0_watts),
            ("wavelength", self.wavelength),
            ("cell_radius", self.cell_radius),
            ("pathloss_exponent", self.pathloss_exponent),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("must be positive and finite, got {v}")));
            }
        }
        if !(self.min_distance >= 0.0) || self.min_distance >= self.cell_radius {
            return Err(Error::param(
                "min_distance",
                format!(
                    "must lie in [0, cell_radius), got {} with cell_radius {}",
                    self.min_distance, self.cell_radius
                ),
            ));
        }
        Ok(())
    }
}
