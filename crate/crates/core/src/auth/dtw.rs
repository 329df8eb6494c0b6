//! Dynamic time warping with an optional band around the scaled diagonal.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::dsp::ProcessedSeries;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DtwConfig {
    /// Half-width of the band around the diagonal, in (decimated) samples.
    pub window: Option<usize>,
    /// Block-average both series by this factor before warping.
    pub decimation: usize,
}

impl Default for DtwConfig {
    fn default() -> Self {
        Self {
            window: None,
            decimation: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtwResult {
    pub cost: f64,
    /// Monotone `(target index, reference index)` pairs from (0, 0) to the end.
    pub path: Vec<(usize, usize)>,
}

struct Band {
    lo: Vec<usize>,
    hi: Vec<usize>,
}

impl Band {
    fn new(n: usize, m: usize, window: Option<usize>) -> Self {
        let Some(w) = window else {
            return Self {
                lo: vec![0; n],
                hi: vec![m - 1; n],
            };
        };
        let slope = if n > 1 { (m - 1) as f64 / (n - 1) as f64 } else { 0.0 };
        let w = w.max(slope.ceil() as usize);
        let mut lo = Vec::with_capacity(n);
        let mut hi = Vec::with_capacity(n);
        for i in 0..n {
            let c = if n > 1 { i as f64 * slope } else { (m - 1) as f64 };
            lo.push((c.floor() as usize).saturating_sub(w));
            hi.push(((c.ceil() as usize) + w).min(m - 1));
        }
        lo[0] = 0;
        hi[n - 1] = m - 1;
        Self { lo, hi }
    }
}

/// Classic DTW with absolute-difference cost and symmetric unit steps.
pub fn dtw(target: &[f64], reference: &[f64], window: Option<usize>) -> Result<DtwResult> {
    let (n, m) = (target.len(), reference.len());
    if n == 0 || m == 0 {
        return Err(invalid("DTW inputs must be non-empty"));
    }
    let band = Band::new(n, m, window);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let at = |rows: &Vec<Vec<f64>>, i: usize, j: usize| -> f64 {
        if j < band.lo[i] || j > band.hi[i] {
            f64::INFINITY
        } else {
            rows[i][j - band.lo[i]]
        }
    };
    for i in 0..n {
        let (lo, hi) = (band.lo[i], band.hi[i]);
        let mut row = vec![f64::INFINITY; hi - lo + 1];
        for j in lo..=hi {
            let c = (target[i] - reference[j]).abs();
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let left = if j > lo { row[j - 1 - lo] } else { f64::INFINITY };
                let (up, diag) = if i > 0 {
                    (
                        at(&rows, i - 1, j),
                        if j > 0 { at(&rows, i - 1, j - 1) } else { f64::INFINITY },
                    )
                } else {
                    (f64::INFINITY, f64::INFINITY)
                };
                diag.min(up).min(left)
            };
            row[j - lo] = c + best;
        }
        rows.push(row);
    }
    let cost = at(&rows, n - 1, m - 1);
    let mut path = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while i > 0 || j > 0 {
        let diag = if i > 0 && j > 0 {
            at(&rows, i - 1, j - 1)
        } else {
            f64::INFINITY
        };
        let up = if i > 0 { at(&rows, i - 1, j) } else { f64::INFINITY };
        let left = if j > 0 { at(&rows, i, j - 1) } else { f64::INFINITY };
        if diag <= up && diag <= left {
            i -= 1;
            j -= 1;
        } else if up <= left {
            i -= 1;
        } else {
            j -= 1;
        }
        path.push((i, j));
    }
    path.reverse();
    Ok(DtwResult { cost, path })
}

fn block_mean(x: &[f64], d: usize) -> Vec<f64> {
    x.chunks(d).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// Target resampled onto the reference grid.
    pub warped: ProcessedSeries,
    pub cost: f64,
}

/// Warps `target` onto `reference`'s time grid.
///
/// Without decimation each reference sample takes the mean of the target
/// samples the optimal path maps to it. With decimation the path is found on
/// block means and then applied to the full-rate target as a piecewise-linear
/// time map.
pub fn dtw_align(target: &ProcessedSeries, reference: &ProcessedSeries, cfg: &DtwConfig) -> Result<Alignment> {
    if target.is_empty() || reference.is_empty() {
        return Err(invalid("DTW inputs must be non-empty"));
    }
    let d = cfg.decimation.max(1);
    let (values, cost) = if d == 1 {
        mean_warp(&target.values, &reference.values, cfg.window)?
    } else {
        decimated_warp(&target.values, &reference.values, d, cfg.window)?
    };
    Ok(Alignment {
        warped: ProcessedSeries {
            values,
            ..reference.clone()
        },
        cost,
    })
}

fn mean_warp(a: &[f64], b: &[f64], window: Option<usize>) -> Result<(Vec<f64>, f64)> {
    let r = dtw(a, b, window)?;
    let mut sum = vec![0.0; b.len()];
    let mut cnt = vec![0usize; b.len()];
    for &(i, j) in &r.path {
        sum[j] += a[i];
        cnt[j] += 1;
    }
    let v = sum.iter().zip(&cnt).map(|(s, c)| s / *c as f64).collect();
    Ok((v, r.cost))
}

/// Linear interpolation of `x` at fractional index `pos`.
fn lerp_at(x: &[f64], pos: f64) -> f64 {
    if x.len() == 1 {
        return x[0];
    }
    let pos = pos.clamp(0.0, (x.len() - 1) as f64);
    let k = (pos.floor() as usize).min(x.len() - 2);
    x[k] + (pos - k as f64) * (x[k + 1] - x[k])
}

fn decimated_warp(a: &[f64], b: &[f64], d: usize, window: Option<usize>) -> Result<(Vec<f64>, f64)> {
    let r = dtw(&block_mean(a, d), &block_mean(b, d), window)?;
    let blocks = b.len().div_ceil(d);
    let mut sum = vec![0.0; blocks];
    let mut cnt = vec![0usize; blocks];
    for &(i, j) in &r.path {
        sum[j] += i as f64;
        cnt[j] += 1;
    }
    // Mean target block for each reference block.
    let map: Vec<f64> = sum.iter().zip(&cnt).map(|(s, c)| s / *c as f64).collect();
    let df = d as f64;
    let v = (0..b.len())
        .map(|j| {
            let block = (j as f64 + 0.5) / df - 0.5;
            let src = (lerp_at(&map, block) + 0.5) * df - 0.5;
            lerp_at(a, src)
        })
        .collect();
    Ok((v, r.cost))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive minimum over every monotone unit-step path.
    fn brute(a: &[f64], b: &[f64]) -> f64 {
        fn go(a: &[f64], b: &[f64], i: usize, j: usize) -> f64 {
            let c = (a[i] - b[j]).abs();
            if i == a.len() - 1 && j == b.len() - 1 {
                return c;
            }
            let mut best = f64::INFINITY;
            if i + 1 < a.len() {
                best = best.min(go(a, b, i + 1, j));
            }
            if j + 1 < b.len() {
                best = best.min(go(a, b, i, j + 1));
            }
            if i + 1 < a.len() && j + 1 < b.len() {
                best = best.min(go(a, b, i + 1, j + 1));
            }
            c + best
        }
        go(a, b, 0, 0)
    }

    #[test]
    fn identity_has_zero_cost() {
        let x = [0.1, -0.5, 2.0, 3.0, 0.0];
        let r = dtw(&x, &x, None).unwrap();
        assert_eq!(r.cost, 0.0);
        assert!(r.path.iter().all(|(i, j)| i == j));
        let s = ProcessedSeries::from_values(0.0, 0.01, x.to_vec());
        let al = dtw_align(&s, &s, &DtwConfig::default()).unwrap();
        assert_eq!(al.warped.values, x);
    }

    fn bumps(t: f64) -> f64 {
        let g = |c: f64, w: f64, a: f64| a * (-((t - c) / w).powi(2)).exp();
        g(1.0, 0.08, -3.0) + g(1.4, 0.08, 3.0) + g(2.5, 0.1, -2.0) + g(2.9, 0.07, 2.5)
    }

    #[test]
    fn uniform_stretch_is_undone() {
        let dt = 0.005;
        let m = 800;
        let reference: Vec<f64> = (0..m).map(|i| bumps(i as f64 * dt)).collect();
        let target: Vec<f64> = (0..(m as f64 * 1.1) as usize)
            .map(|i| bumps(i as f64 * dt / 1.1))
            .collect();
        let r = ProcessedSeries::from_values(0.0, dt, reference.clone());
        let t = ProcessedSeries::from_values(0.0, dt, target);
        let rms = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
        let al = dtw_align(&t, &r, &DtwConfig::default()).unwrap();
        let err: Vec<f64> = al.warped.values.iter().zip(&reference).map(|(a, b)| a - b).collect();
        assert!(
            rms(&err) < 0.05 * rms(&reference),
            "{} vs {}",
            rms(&err),
            rms(&reference)
        );
        let banded = dtw_align(
            &t,
            &r,
            &DtwConfig {
                window: Some(10),
                decimation: 5,
            },
        )
        .unwrap();
        let err: Vec<f64> = banded
            .warped
            .values
            .iter()
            .zip(&reference)
            .map(|(a, b)| a - b)
            .collect();
        assert!(rms(&err) < 0.1 * rms(&reference), "{}", rms(&err));
    }

    #[test]
    fn empty_rejected() {
        assert!(dtw(&[], &[1.0], None).is_err());
    }

    proptest! {
        #[test]
        fn matches_exhaustive_oracle(
            a in proptest::collection::vec(-5.0f64..5.0, 1..8),
            b in proptest::collection::vec(-5.0f64..5.0, 1..8),
        ) {
            let r = dtw(&a, &b, None).unwrap();
            prop_assert!((r.cost - brute(&a, &b)).abs() < 1e-9);
            prop_assert!(r.cost >= 0.0);
            prop_assert_eq!(r.path[0], (0, 0));
            prop_assert_eq!(*r.path.last().unwrap(), (a.len() - 1, b.len() - 1));
            for w in r.path.windows(2) {
                let (di, dj) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
                prop_assert!(di <= 1 && dj <= 1 && di + dj >= 1);
            }
            let path_cost: f64 = r.path.iter().map(|&(i, j)| (a[i] - b[j]).abs()).sum();
            prop_assert!((path_cost - r.cost).abs() < 1e-9);
        }

        #[test]
        fn symmetric_cost(a in proptest::collection::vec(-5.0f64..5.0, 1..10), seed in 0u64..1000) {
            let b: Vec<f64> = a.iter().enumerate().map(|(i, x)| x * 0.5 + ((seed + i as u64) % 7) as f64 - 3.0).collect();
            let ab = dtw(&a, &b, None).unwrap().cost;
            let ba = dtw(&b, &a, None).unwrap().cost;
            prop_assert!((ab - ba).abs() < 1e-9);
        }

        #[test]
        fn band_never_beats_full(
            a in proptest::collection::vec(-5.0f64..5.0, 2..30),
            b in proptest::collection::vec(-5.0f64..5.0, 2..30),
            w in 0usize..5,
        ) {
            let full = dtw(&a, &b, None).unwrap().cost;
            let banded = dtw(&a, &b, Some(w)).unwrap().cost;
            prop_assert!(banded.is_finite());
            prop_assert!(banded >= full - 1e-9);
        }
    }
}
