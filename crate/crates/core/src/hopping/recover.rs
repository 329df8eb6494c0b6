//! Reader-side phase recovery under hopping.

use alloc::vec::Vec;

use num_complex::Complex64;

use super::schedule::HoppingSchedule;
use crate::dsp::{centroid, Centroids};
use crate::error::{Error, Result};
use crate::phy::timing::T1_MIN;
use crate::phy::IqTrace;

/// Two-means on complex points, seeded at the smallest- and largest-magnitude
/// points. Returns the cluster label (0 or 1) of every point.
pub fn two_means(points: &[Complex64], iterations: usize) -> Option<(Vec<u8>, [Complex64; 2])> {
    let lo = points.iter().min_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))?;
    let hi = points.iter().max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))?;
    let mut c = [*lo, *hi];
    let mut labels = alloc::vec![0u8; points.len()];
    for _ in 0..iterations {
        let mut changed = false;
        for (l, p) in labels.iter_mut().zip(points) {
            let k = u8::from((p - c[1]).norm_sqr() < (p - c[0]).norm_sqr());
            changed |= *l != k;
            *l = k;
        }
        for (k, ck) in c.iter_mut().enumerate() {
            let members: Vec<Complex64> = points
                .iter()
                .zip(&labels)
                .filter(|(_, l)| usize::from(**l) == k)
                .map(|(p, _)| *p)
                .collect();
            if let Some(m) = centroid(&members) {
                *ck = m;
            }
        }
        if !changed {
            break;
        }
    }
    Some((labels, c))
}

/// Recovers the full-circle backscatter phase from the reserve intervals.
///
/// The trace must start no later than the Query end (`query_end`). The
/// leakage is estimated from CW received before any reply can start, while
/// the reader still transmits at phase 0; rotating it by `theta_reserve`
/// tells which cluster is S1.
pub fn reader_recover(trace: &IqTrace, schedule: &HoppingSchedule, query_end: f64) -> Result<f64> {
    let lead = trace.index_range(query_end, query_end + T1_MIN.min(schedule.t1_prime));
    let leak = centroid(&trace.samples[lead]).ok_or(Error::RecoveryFailed("no pre-hop CW samples"))?;
    let s1_guess = leak * Complex64::from_polar(1.0, schedule.reserve_phase_rad());

    let span = trace.index_range(query_end + schedule.hop_start(), query_end + schedule.hop_end());
    let picked: Vec<Complex64> = span
        .filter(|&i| {
            schedule
                .interval_at(trace.time_of(i) - query_end)
                .is_some_and(|k| schedule.is_reserve(k))
        })
        .map(|i| trace.samples[i])
        .collect();
    let (labels, c) = two_means(&picked, 20).ok_or(Error::RecoveryFailed("no reserve samples"))?;
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::RecoveryFailed("reserve samples form a single cluster"));
    }
    let s1 = usize::from((c[1] - s1_guess).norm_sqr() < (c[0] - s1_guess).norm_sqr());
    Centroids::from_means(c[s1], c[1 - s1])
        .map(|g| g.full_angle())
        .map_err(|_| Error::RecoveryFailed("degenerate clusters"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::backscatter_phase;
    use crate::hopping::schedule::{make_library, make_schedule};
    use crate::phy::{
        build_query_round, synthesize_round, Channel, Fm0Config, Gen2Timing, Rn16Message, SampleState, SynthSpan,
    };
    use crate::rng::seeded;
    use crate::units::wrap_pi;

    fn channel(snr: Option<f64>) -> Channel {
        Channel {
            cw_gain: Complex64::from_polar(1.0, 0.9),
            bs_amplitude: 2.5,
            bs_phase: 2.2,
            snr_db: snr,
        }
    }

    #[test]
    fn two_means_splits_obvious_clusters() {
        let pts = [
            Complex64::new(0.0, 1.0),
            Complex64::new(0.1, 1.0),
            Complex64::new(3.0, 3.0),
            Complex64::new(3.1, 2.9),
        ];
        let (l, _) = two_means(&pts, 20).unwrap();
        assert_eq!(l[0], l[1]);
        assert_eq!(l[2], l[3]);
        assert_ne!(l[0], l[2]);
        assert!(two_means(&[], 5).is_none());
    }

    #[test]
    fn noise_free_recovery_is_exact() {
        let cfg = Fm0Config::default();
        let mut rng = seeded(7);
        for tap in [0.0, -0.5, 1.0] {
            for _ in 0..20 {
                let lib = make_library(&mut rng);
                let s = make_schedule(&mut rng, &lib);
                let timing = Gen2Timing::sample(&cfg, &mut rng);
                let r = build_query_round(&timing, &Rn16Message::random(&mut rng), &cfg).unwrap();
                let qe = r.query_end();
                let ch = channel(None);
                let cap = synthesize_round(
                    &r,
                    |t| s.cw_phase_at(t - qe),
                    &ch,
                    |_| tap,
                    &cfg,
                    SynthSpan::AfterQuery,
                    &mut rng,
                );
                let got = reader_recover(&cap.trace, &s, qe).unwrap();
                let truth = crate::units::wrap_2pi(ch.bs_phase + tap);
                assert!(wrap_pi(got - truth).abs() < 1e-9, "{got} {truth}");
            }
        }
    }

    #[test]
    fn matches_constant_cw_at_30db() {
        let cfg = Fm0Config::default();
        let mut rng = seeded(8);
        let ch = channel(Some(30.0));
        let mut sq = 0.0;
        let n = 100;
        for _ in 0..n {
            let lib = make_library(&mut rng);
            let s = make_schedule(&mut rng, &lib);
            let timing = Gen2Timing::sample(&cfg, &mut rng);
            let r = build_query_round(&timing, &Rn16Message::random(&mut rng), &cfg).unwrap();
            let qe = r.query_end();
            let hop = synthesize_round(
                &r,
                |t| s.cw_phase_at(t - qe),
                &ch,
                |_| 0.0,
                &cfg,
                SynthSpan::AfterQuery,
                &mut rng,
            );
            let fixed = synthesize_round(&r, |_| 0.0, &ch, |_| 0.0, &cfg, SynthSpan::AfterQuery, &mut rng);
            let s1: Vec<_> = fixed.samples_in(SampleState::Cw).collect();
            let s2: Vec<_> = fixed.samples_in(SampleState::Backscatter).collect();
            let reference = backscatter_phase(&s1, &s2).unwrap();
            let got = reader_recover(&hop.trace, &s, qe).unwrap();
            sq += wrap_pi(got - reference).powi(2);
        }
        let rms = (sq / n as f64).sqrt();
        assert!(rms < 0.05, "{rms}");
    }
}
