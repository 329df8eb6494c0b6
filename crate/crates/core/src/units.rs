//! Physical constants and unit conversions.

use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::{Euclid, Float};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub const TWO_PI: f64 = 2.0 * PI;

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_2pi(x: f64) -> f64 {
    let r = Euclid::rem_euclid(&x, &TWO_PI);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if r >= TWO_PI {
        0.0
    } else {
        r
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_pi(x: f64) -> f64 {
    let r = wrap_2pi(x);
    if r > PI {
        r - TWO_PI
    } else {
        r
    }
}

pub fn deg_to_rad(deg: f64) -> f64 {
    deg * PI / 180.0
}

/// `P_dBm = 10 log10(P_W * 1000)`.
pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w * 1000.0).log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10.0.powf(dbm / 10.0) / 1000.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10.0.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
