//! Carrier frequency plans and the static propagation phase.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::derive_seed;
use crate::units::{wrap_2pi, SPEED_OF_LIGHT};

pub const PHI_READER_DEFAULT: f64 = 0.7;
pub const PHI_CARD_DEFAULT: f64 = 1.1;
pub const FCC_CHANNELS: usize = 50;
pub const FCC_FIRST_CENTER: f64 = 902.75e6;
pub const FCC_SPACING: f64 = 0.5e6;
pub const MAX_DWELL: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CarrierMode {
    Fixed,
    FccHopping,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarrierPlan {
    pub mode: CarrierMode,
    pub fixed_freq: f64,
    pub channel_centers: Vec<f64>,
    pub hop_interval: f64,
    pub seed: u64,
}

pub fn fcc_channel_centers() -> Vec<f64> {
    (0..FCC_CHANNELS)
        .map(|k| FCC_FIRST_CENTER + k as f64 * FCC_SPACING)
        .collect()
}

impl Default for CarrierPlan {
    fn default() -> Self {
        Self {
            mode: CarrierMode::Fixed,
            fixed_freq: 915e6,
            channel_centers: fcc_channel_centers(),
            hop_interval: 0.2,
            seed: 0,
        }
    }
}

impl CarrierPlan {
    pub fn fixed(freq: f64) -> Self {
        Self {
            fixed_freq: freq,
            ..Self::default()
        }
    }

    pub fn fcc(seed: u64) -> Self {
        Self {
            mode: CarrierMode::FccHopping,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            CarrierMode::Fixed => {
                if !(self.fixed_freq > 0.0) {
                    return Err(invalid("carrier frequency must be positive"));
                }
            }
            CarrierMode::FccHopping => {
                if self.channel_centers.len() != FCC_CHANNELS {
                    return Err(invalid("FCC hopping needs exactly 50 channels"));
                }
                if self.channel_centers.iter().any(|f| !(*f > 0.0)) {
                    return Err(invalid("channel centers must be positive"));
                }
                if !(self.hop_interval > 0.0 && self.hop_interval <= MAX_DWELL) {
                    return Err(invalid("hop interval must lie in (0, 0.4 s]"));
                }
            }
        }
        Ok(())
    }

    /// Channel index used during hop interval `k`.
    pub fn channel_index(&self, k: u64) -> usize {
        (derive_seed(self.seed, "carrier", k) % self.channel_centers.len() as u64) as usize
    }

    /// Hop interval containing `t` (always 0 for a fixed carrier).
    pub fn interval_of(&self, t: f64) -> u64 {
        match self.mode {
            CarrierMode::Fixed => 0,
            CarrierMode::FccHopping => (t.max(0.0) / self.hop_interval) as u64,
        }
    }

    pub fn carrier_at(&self, t: f64) -> f64 {
        match self.mode {
            CarrierMode::Fixed => self.fixed_freq,
            CarrierMode::FccHopping => self.channel_centers[self.channel_index(self.interval_of(t))],
        }
    }
}

/// Static round-trip propagation phase plus hardware offsets, in `[0, 2 pi)`.
pub fn baseline_phase(d0: f64, f: f64, phi_reader: f64, phi_card: f64) -> f64 {
    wrap_2pi(4.0 * core::f64::consts::PI * d0 * f / SPEED_OF_LIGHT + phi_reader + phi_card)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::TWO_PI;
    use core::f64::consts::PI;

    #[test]
    fn fixed_plan_is_constant() {
        let p = CarrierPlan::fixed(910e6);
        for t in [0.0, 0.13, 5.0, 100.0] {
            assert_eq!(p.carrier_at(t), 910e6);
        }
    }

    #[test]
    fn channel_grid_spans_band() {
        let c = fcc_channel_centers();
        assert_eq!(c.len(), 50);
        assert!(c[0] > 902e6 && c[49] < 928e6);
        assert!(CarrierPlan::fcc(1).validate().is_ok());
        let slow = CarrierPlan {
            hop_interval: 0.5,
            ..CarrierPlan::fcc(1)
        };
        assert!(slow.validate().is_err());
    }

    #[test]
    fn fcc_constant_within_interval() {
        let p = CarrierPlan::fcc(3);
        for k in 0..50u64 {
            let base = k as f64 * 0.2;
            let f = p.carrier_at(base + 1e-6);
            for frac in [0.1, 0.5, 0.9, 0.999] {
                assert_eq!(p.carrier_at(base + frac * 0.2), f);
            }
        }
    }

    #[test]
    fn fcc_channels_uniform() {
        let p = CarrierPlan::fcc(17);
        let n = 10_000u64;
        let mut counts = [0u32; 50];
        for k in 0..n {
            counts[p.channel_index(k)] += 1;
        }
        let e = n as f64 / 50.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // 49 dof: mean 49, sd ~9.9
        assert!(chi2 < 49.0 + 3.0 * 9.9, "{chi2}");
    }

    #[test]
    fn baseline_phase_examples() {
        let f = 915e6;
        let d = SPEED_OF_LIGHT / (4.0 * PI * f);
        assert!((baseline_phase(d, f, 0.0, 0.0) - 1.0).abs() < 1e-12);
        assert!((baseline_phase(1e-15, f, 4.0, 3.0) - (7.0 - TWO_PI)).abs() < 1e-9);
        let (f1, f2, d0) = (915.25e6, 903.75e6, 0.37);
        let diff = wrap_2pi(baseline_phase(d0, f1, 0.7, 1.1) - baseline_phase(d0, f2, 0.7, 1.1));
        let expect = wrap_2pi(4.0 * PI * d0 * (f1 - f2) / SPEED_OF_LIGHT);
        assert!((diff - expect).abs() < 1e-9);
    }
}
