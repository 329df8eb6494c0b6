//! From phase reports to the smoothed, time-normalized phase-difference
//! series `Phi`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::report::PhaseReport;
use crate::error::{invalid, Result};

pub const ETA_DEFAULT: f64 = 3.5;
const TWO_PI: f64 = 2.0 * PI;

/// Phase difference with 2 pi wrap correction beyond `eta`.
pub fn diff_unwrap(phi_i: f64, phi_prev: f64, eta: f64) -> f64 {
    let d = phi_i - phi_prev;
    if d < -eta {
        d + TWO_PI
    } else if d > eta {
        d - TWO_PI
    } else {
        d
    }
}

/// Phase difference per unit time.
pub fn normalize(delta_phi: f64, dt: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(invalid("time step must be positive"));
    }
    Ok(delta_phi / dt)
}

/// Normalized phase differences, one per report after the first.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DiffSeries {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
    pub freq: Vec<f64>,
    /// Carrier changed since the previous report.
    pub hop: Vec<bool>,
}

impl DiffSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn differentiate(reports: &[PhaseReport], eta: f64) -> Result<DiffSeries> {
    let n = reports.len().saturating_sub(1);
    let mut s = DiffSeries {
        t: Vec::with_capacity(n),
        values: Vec::with_capacity(n),
        freq: Vec::with_capacity(n),
        hop: Vec::with_capacity(n),
    };
    for w in reports.windows(2) {
        let (prev, cur) = (&w[0], &w[1]);
        let d = diff_unwrap(cur.phi, prev.phi, eta);
        s.t.push(cur.t);
        s.values.push(normalize(d, cur.t - prev.t)?);
        s.freq.push(cur.freq);
        s.hop.push(cur.freq != prev.freq);
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HopDiagnostics {
    /// Hop indices corrected with the two-neighbor formula.
    pub corrected: Vec<usize>,
    /// Hop indices that fell back to a single neighbor: series boundaries
    /// and the earlier of two adjacent hops.
    pub single_neighbor: Vec<usize>,
}

/// Replaces each hop-instant value by the time-weighted neighbor sum
/// `(v[i+1] + v[i-1]) (t[i] - t[i-1]) / (t[i+1] - t[i-1])`.
///
/// Hops are processed in time order, so the later of two adjacent hops uses
/// its already-corrected predecessor.
pub fn hop_calibrate(series: &DiffSeries) -> Result<(DiffSeries, HopDiagnostics)> {
    let n = series.len();
    if n < 3 {
        return Err(invalid("hop calibration needs at least 3 values"));
    }
    let mut out = series.clone();
    let mut diag = HopDiagnostics::default();
    for i in 0..n {
        if !series.hop[i] {
            continue;
        }
        let left = i.checked_sub(1);
        let right = (i + 1 < n && !series.hop[i + 1]).then_some(i + 1);
        let v = &out.values;
        let t = &out.t;
        out.values[i] = match (left, right) {
            (Some(l), Some(r)) => {
                diag.corrected.push(i);
                (v[r] + v[l]) * (t[i] - t[l]) / (t[r] - t[l])
            }
            (Some(l), None) => {
                diag.single_neighbor.push(i);
                v[l]
            }
            (None, Some(r)) => {
                diag.single_neighbor.push(i);
                v[r]
            }
            (None, None) => {
                diag.single_neighbor.push(i);
                (i + 1..n).find(|&j| !series.hop[j]).map_or(0.0, |j| v[j])
            }
        };
    }
    Ok((out, diag))
}

/// `Phi` on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessedSeries {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
    pub interp_factor: usize,
    pub filter_len: usize,
}

impl ProcessedSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn timestamps(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    /// A series on an explicit uniform grid with no processing metadata.
    pub fn from_values(t0: f64, dt: f64, values: Vec<f64>) -> Self {
        Self {
            t0,
            dt,
            values,
            interp_factor: 1,
            filter_len: 1,
        }
    }
}

fn linear_resample(t: &[f64], v: &[f64], factor: usize) -> (f64, f64, Vec<f64>) {
    let n = t.len();
    let m = factor * (n - 1) + 1;
    let (t0, t1) = (t[0], t[n - 1]);
    let dt = (t1 - t0) / (m - 1) as f64;
    let mut out = Vec::with_capacity(m);
    let mut k = 0;
    for j in 0..m {
        let x = if j == m - 1 { t1 } else { t0 + j as f64 * dt };
        while k + 2 < n && t[k + 1] <= x {
            k += 1;
        }
        let span = t[k + 1] - t[k];
        let a = ((x - t[k]) / span).clamp(0.0, 1.0);
        out.push(if a == 0.0 { v[k] } else { v[k] + a * (v[k + 1] - v[k]) });
    }
    (t0, dt, out)
}

/// Centered moving average; near the edges the window shrinks symmetrically.
fn moving_average(x: &[f64], len: usize) -> Vec<f64> {
    let half = len / 2;
    let n = x.len();
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            if h == 0 {
                return x[i];
            }
            let c = x[i];
            // Average deviations from the center so constants pass exactly.
            let dev: f64 = x[i - h..=i + h].iter().map(|v| v - c).sum();
            c + dev / (2 * h + 1) as f64
        })
        .collect()
}

/// Linear interpolation by `factor` onto a uniform grid, then a centered
/// `filter_len`-point average.
pub fn interpolate_filter(t: &[f64], v: &[f64], factor: usize, filter_len: usize) -> Result<ProcessedSeries> {
    if t.len() != v.len() {
        return Err(invalid("time and value lengths differ"));
    }
    if t.len() < filter_len.max(2) {
        return Err(invalid("series shorter than the smoothing filter"));
    }
    if factor == 0 || filter_len == 0 || filter_len.is_multiple_of(2) {
        return Err(invalid("interpolation factor must be positive and filter length odd"));
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("timestamps must be strictly increasing"));
    }
    let (t0, dt, dense) = linear_resample(t, v, factor);
    Ok(ProcessedSeries {
        t0,
        dt,
        values: moving_average(&dense, filter_len),
        interp_factor: factor,
        filter_len,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub eta: f64,
    pub interp_factor: usize,
    pub filter_len: usize,
    pub hop_calibration: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            eta: ETA_DEFAULT,
            interp_factor: 4,
            filter_len: 15,
            hop_calibration: true,
        }
    }
}

/// Full chain: differencing and unwrapping, normalization, hop calibration,
/// interpolation and smoothing. Each smoothed value is placed at the midpoint
/// of the report interval it was computed from.
pub fn process_reports(reports: &[PhaseReport], cfg: &PipelineConfig) -> Result<(ProcessedSeries, HopDiagnostics)> {
    let diff = differentiate(reports, cfg.eta)?;
    let (diff, diag) = if cfg.hop_calibration && diff.hop.iter().any(|h| *h) {
        hop_calibrate(&diff)?
    } else {
        (diff, HopDiagnostics::default())
    };
    // A difference quotient estimates the derivative at the interval midpoint.
    let mid: Vec<f64> = reports.windows(2).map(|w| 0.5 * (w[0].t + w[1].t)).collect();
    let series = interpolate_filter(&mid, &diff.values, cfg.interp_factor, cfg.filter_len)?;
    Ok((series, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::units::wrap_2pi;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn unwrap_examples() {
        assert!((diff_unwrap(1.0, 0.5, 3.5) - 0.5).abs() < 1e-15);
        assert!((diff_unwrap(0.5, 6.0, 3.5) - 0.78319).abs() < 1e-5);
        assert!((diff_unwrap(6.0, 0.5, 3.5) + 0.78319).abs() < 1e-5);
        // boundary stays uncorrected
        assert_eq!(diff_unwrap(3.5, 0.0, 3.5), 3.5);
        assert_eq!(diff_unwrap(0.0, 3.5, 3.5), -3.5);
    }

    #[test]
    fn normalize_examples() {
        assert!((normalize(0.1, 0.004).unwrap() - 25.0).abs() < 1e-12);
        assert_eq!(normalize(0.0, 0.3).unwrap(), 0.0);
        assert!(normalize(0.1, 0.0).is_err());
        assert!(normalize(0.1, -1.0).is_err());
    }

    #[test]
    fn irregular_sampling_of_ramp_is_constant() {
        let mut rng = seeded(4);
        let slope = 1.7;
        let mut t = 0.0;
        let mut reports = Vec::new();
        for _ in 0..400 {
            t += 0.004 + rng.random_range(-0.0005..0.0005);
            reports.push(PhaseReport {
                t,
                phi: wrap_2pi(0.3 + slope * t),
                freq: 915e6,
            });
        }
        let d = differentiate(&reports, ETA_DEFAULT).unwrap();
        assert!(d.values.iter().all(|v| (v - slope).abs() < 1e-8));
    }

    fn series(t: Vec<f64>, values: Vec<f64>, hop: Vec<bool>) -> DiffSeries {
        let n = t.len();
        DiffSeries {
            t,
            values,
            freq: vec![0.0; n],
            hop,
        }
    }

    #[test]
    fn hop_uses_neighbor_mean_under_uniform_spacing() {
        let s = series(
            vec![0.0, 1.0, 2.0, 3.0],
            vec![0.2, 9.0, 0.4, 0.4],
            vec![false, true, false, false],
        );
        let (c, d) = hop_calibrate(&s).unwrap();
        assert!((c.values[1] - 0.3).abs() < 1e-15);
        assert_eq!(d.corrected, [1]);
        let (same, _) = hop_calibrate(&series(s.t.clone(), s.values.clone(), vec![false; 4])).unwrap();
        assert_eq!(same, series(s.t.clone(), s.values.clone(), vec![false; 4]));
    }

    #[test]
    fn hop_at_boundaries_and_consecutive() {
        let s = series(
            vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
            vec![7.0, 0.5, 8.0, 9.0, 0.9, 6.0],
            vec![true, false, true, true, false, true],
        );
        let (c, d) = hop_calibrate(&s).unwrap();
        assert_eq!(c.values[0], 0.5);
        // earlier of the adjacent pair takes its left neighbor
        assert_eq!(c.values[2], 0.5);
        // later one uses corrected predecessor and right neighbor
        assert!((c.values[3] - (0.5 + 0.9) / 2.0).abs() < 1e-15);
        assert_eq!(c.values[5], 0.9);
        assert_eq!(d.corrected, [3]);
        assert_eq!(d.single_neighbor, [0, 2, 5]);
    }

    #[test]
    fn interp_length_and_constants() {
        for n in [15usize, 16, 40, 101] {
            let t: Vec<f64> = (0..n).map(|i| i as f64 * 0.004 + (i % 3) as f64 * 1e-4).collect();
            let v = vec![0.123_456_789; n];
            let p = interpolate_filter(&t, &v, 4, 15).unwrap();
            // independent count: n samples, 3 new points in each of n-1 gaps
            assert_eq!(p.len(), n + 3 * (n - 1));
            assert!(p.values.iter().all(|x| *x == 0.123_456_789));
            assert!((p.time(p.len() - 1) - t[n - 1]).abs() < 1e-12);
        }
        assert!(interpolate_filter(&[0.0, 1.0], &[1.0, 1.0], 4, 15).is_err());
    }

    #[test]
    fn filter_reduces_white_noise_variance() {
        // Filter the noise on its own grid (factor 1) to compare with 1/15.
        let mut rng = seeded(21);
        let n = 20_000;
        let t: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let p = interpolate_filter(&t, &v, 1, 15).unwrap();
        let inner = &p.values[7..n - 7];
        let m = inner.iter().sum::<f64>() / inner.len() as f64;
        let var = inner.iter().map(|x| (x - m).powi(2)).sum::<f64>() / inner.len() as f64;
        assert!((var * 15.0 - 1.0).abs() < 0.2, "{var}");
    }

    #[test]
    fn pipeline_cancels_static_baseline() {
        let mut rng = seeded(5);
        for (d0_phase, noise) in [(0.3, 1e-3), (5.9, 1e-3), (3.1, 0.0)] {
            let mut t = 0.0;
            let mut reports = Vec::new();
            for _ in 0..500 {
                t += 0.004 + rng.random_range(-0.0005..0.0005);
                let e: f64 = rng.sample(StandardNormal);
                reports.push(PhaseReport {
                    t,
                    phi: wrap_2pi(d0_phase + noise * e),
                    freq: 915e6,
                });
            }
            let (p, _) = process_reports(&reports, &PipelineConfig::default()).unwrap();
            let mean = p.values.iter().sum::<f64>() / p.len() as f64;
            assert!(mean.abs() < 0.05, "{mean}");
        }
    }

    proptest! {
        #[test]
        fn unwrap_recovers_small_steps(
            start in 0.0f64..6.0,
            steps in proptest::collection::vec(-2.78f64..2.78, 1..200),
        ) {
            // |step| < min(eta, 2 pi - eta) = 2.783
            let mut truth = start;
            let mut prev = wrap_2pi(start);
            for s in steps {
                truth += s;
                let cur = wrap_2pi(truth);
                let got = diff_unwrap(cur, prev, ETA_DEFAULT);
                prop_assert!((got - s).abs() < 1e-9);
                prev = cur;
            }
        }

        #[test]
        fn hop_formula_under_uniform_spacing(a in -50.0f64..50.0, b in -50.0f64..50.0, x in -500.0f64..500.0, dt in 1e-3f64..1.0) {
            let s = series(vec![0.0, dt, 2.0 * dt], vec![a, x, b], vec![false, true, false]);
            let (c, _) = hop_calibrate(&s).unwrap();
            prop_assert!((c.values[1] - (a + b) / 2.0).abs() < 1e-9);
        }

        #[test]
        fn filter_preserves_constants(c in -1e3f64..1e3, n in 15usize..200) {
            let t: Vec<f64> = (0..n).map(|i| i as f64 * 0.004).collect();
            let p = interpolate_filter(&t, &vec![c; n], 4, 15).unwrap();
            prop_assert!(p.values.iter().all(|v| *v == c));
        }
    }
}
