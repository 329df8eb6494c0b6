//! Backscatter phase from S1/S2 symbol clusters.
//!
//! `V_L` is the S1 centroid (CW leakage). The backscatter vector `V_B` is the
//! displacement from the S1 centroid to the S2 centroid; the phase is the
//! angle between the two.

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::units::wrap_2pi;

pub const DEGENERATE_EPS: f64 = 1e-9;

pub fn centroid(samples: &[Complex64]) -> Option<Complex64> {
    if samples.is_empty() {
        return None;
    }
    let sum: Complex64 = samples.iter().sum();
    Some(sum / samples.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Centroids {
    /// S1 centroid.
    pub v_l: Complex64,
    /// S2 centroid minus S1 centroid.
    pub v_b: Complex64,
}

impl Centroids {
    pub fn from_means(s1_mean: Complex64, s2_mean: Complex64) -> Result<Self> {
        let c = Self {
            v_l: s1_mean,
            v_b: s2_mean - s1_mean,
        };
        if c.v_l.norm() < DEGENERATE_EPS {
            return Err(Error::DegenerateGeometry("S1"));
        }
        if c.v_b.norm() < DEGENERATE_EPS {
            return Err(Error::DegenerateGeometry("backscatter"));
        }
        Ok(c)
    }

    pub fn from_clusters(s1: &[Complex64], s2: &[Complex64]) -> Result<Self> {
        let a = centroid(s1).ok_or(Error::DegenerateGeometry("S1"))?;
        let b = centroid(s2).ok_or(Error::DegenerateGeometry("S2"))?;
        Self::from_means(a, b)
    }

    /// Unsigned angle in `[0, pi]`.
    pub fn angle(&self) -> f64 {
        vector_angle(self.v_l, self.v_b)
    }

    /// Signed angle from `V_L` to `V_B`, in `[0, 2 pi)`.
    pub fn full_angle(&self) -> f64 {
        wrap_2pi((self.v_b * self.v_l.conj()).arg())
    }
}

/// `arccos(a . b / (|a| |b|))`, clamped against rounding.
pub fn vector_angle(a: Complex64, b: Complex64) -> f64 {
    let dot = a.re * b.re + a.im * b.im;
    (dot / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos()
}

/// Backscatter phase in `[0, pi]` from S1 and S2 sample sets.
pub fn extract_phase(s1: &[Complex64], s2: &[Complex64]) -> Result<f64> {
    Centroids::from_clusters(s1, s2).map(|c| c.angle())
}

/// Full-circle backscatter phase in `[0, 2 pi)`; agrees with
/// [`extract_phase`] whenever that lies in `[0, pi)`.
pub fn backscatter_phase(s1: &[Complex64], s2: &[Complex64]) -> Result<f64> {
    Centroids::from_clusters(s1, s2).map(|c| c.full_angle())
}
