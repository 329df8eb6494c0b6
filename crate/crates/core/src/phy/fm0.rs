//! FM0 baseband coding.
//!
//! Every symbol boundary inverts the level; a data-0 adds one more inversion
//! mid-symbol. The reply preamble `1 0 1 0 v 1` carries a single violation at
//! its fifth symbol: the boundary inversion is missing, so the level holds for
//! three half-symbols (1.5 symbol periods), the longest inversion-free stretch
//! a reply can contain.

use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Level {
    Lo,
    Hi,
}

impl Level {
    pub fn flip(self) -> Self {
        match self {
            Level::Lo => Level::Hi,
            Level::Hi => Level::Lo,
        }
    }
}

/// FM0 link parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fm0Config {
    /// Backscatter link frequency, Hz.
    pub blf: f64,
    /// Synthesis sample rate, samples/s.
    pub sample_rate: f64,
    /// Link frequency tolerance (fraction).
    pub frt: f64,
}

pub const BLF_MIN: f64 = 40e3;
pub const BLF_MAX: f64 = 640e3;

impl Default for Fm0Config {
    fn default() -> Self {
        Self {
            blf: 40e3,
            sample_rate: 1e6,
            frt: 0.04,
        }
    }
}

impl Fm0Config {
    /// Symbol duration `1 / BLF`.
    pub fn t_pri(&self) -> f64 {
        1.0 / self.blf
    }

    pub fn half_symbol(&self) -> f64 {
        0.5 / self.blf
    }

    pub fn validate(&self) -> Result<()> {
        if !(BLF_MIN..=BLF_MAX).contains(&self.blf) {
            return Err(invalid("BLF must lie in [40 kHz, 640 kHz]"));
        }
        if !(self.sample_rate >= 10.0 * self.blf) {
            return Err(invalid("sample rate must be at least 10 x BLF"));
        }
        if !(0.0..1.0).contains(&self.frt) {
            return Err(invalid("FrT must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PreambleSymbol {
    One,
    Zero,
    Violation,
}

pub const FM0_PREAMBLE: [PreambleSymbol; 6] = [
    PreambleSymbol::One,
    PreambleSymbol::Zero,
    PreambleSymbol::One,
    PreambleSymbol::Zero,
    PreambleSymbol::Violation,
    PreambleSymbol::One,
];

use Level::{Hi, Lo};

/// Half-symbol levels of the preamble, starting from a high level.
const PREAMBLE_LEVELS: [Level; 12] = [Hi, Hi, Lo, Hi, Lo, Lo, Hi, Lo, Lo, Lo, Hi, Hi];

/// A two-level FM0 waveform stored as half-symbol levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fm0Waveform {
    pub t_pri: f64,
    pub levels: Vec<Level>,
    pub with_preamble: bool,
}

impl Fm0Waveform {
    pub fn symbol_count(&self) -> usize {
        self.levels.len() / 2
    }

    pub fn half_period(&self) -> f64 {
        0.5 * self.t_pri
    }

    pub fn duration(&self) -> f64 {
        self.symbol_count() as f64 * self.t_pri
    }

    /// Level at `offset` seconds from the waveform start.
    pub fn level_at(&self, offset: f64) -> Option<Level> {
        if offset < 0.0 {
            return None;
        }
        let idx = (offset / self.half_period()) as usize;
        self.levels.get(idx).copied()
    }

    /// `(start offset, level)` for each half-symbol.
    pub fn half_symbols(&self) -> impl Iterator<Item = (f64, Level)> + '_ {
        let h = self.half_period();
        self.levels.iter().enumerate().map(move |(i, l)| (i as f64 * h, *l))
    }

    /// Offsets of every level inversion inside the waveform.
    pub fn inversion_times(&self) -> Vec<f64> {
        let h = self.half_period();
        self.levels
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[0] != w[1])
            .map(|(i, _)| (i + 1) as f64 * h)
            .collect()
    }

    /// Symbol indices whose leading boundary is missing its inversion.
    pub fn boundary_violations(&self) -> Vec<usize> {
        (1..self.symbol_count())
            .filter(|&k| self.levels[2 * k] == self.levels[2 * k - 1])
            .collect()
    }

    /// Longest run of equal half-symbol levels, in half-symbols.
    pub fn longest_run(&self) -> usize {
        let mut best = 0;
        let mut run = 0;
        let mut prev = None;
        for &l in &self.levels {
            if Some(l) == prev {
                run += 1;
            } else {
                run = 1;
                prev = Some(l);
            }
            best = best.max(run);
        }
        best
    }
}

fn push_bit(levels: &mut Vec<Level>, bit: bool) {
    let first = match levels.last() {
        Some(l) => l.flip(),
        None => Hi,
    };
    levels.push(first);
    levels.push(if bit { first } else { first.flip() });
}

/// Encodes `bits` as FM0, optionally prefixed with the reply preamble.
pub fn fm0_encode(bits: &[bool], cfg: &Fm0Config, with_preamble: bool) -> Result<Fm0Waveform> {
    if bits.is_empty() {
        return Err(invalid("cannot FM0-encode an empty bit sequence"));
    }
    let mut levels = Vec::with_capacity(2 * bits.len() + 12);
    if with_preamble {
        levels.extend_from_slice(&PREAMBLE_LEVELS);
    }
    for &b in bits {
        push_bit(&mut levels, b);
    }
    Ok(Fm0Waveform {
        t_pri: cfg.t_pri(),
        levels,
        with_preamble,
    })
}

/// Decodes a waveform produced by [`fm0_encode`] back to its data bits.
pub fn fm0_decode(wf: &Fm0Waveform) -> Result<Vec<bool>> {
    if !wf.levels.len().is_multiple_of(2) {
        return Err(invalid("FM0 waveform has a dangling half-symbol"));
    }
    let start = if wf.with_preamble {
        if wf.levels.get(..12) != Some(&PREAMBLE_LEVELS[..]) {
            return Err(invalid("FM0 preamble not found"));
        }
        6
    } else {
        0
    };
    let mut bits = Vec::with_capacity(wf.symbol_count() - start);
    for k in start..wf.symbol_count() {
        let (a, b) = (wf.levels[2 * k], wf.levels[2 * k + 1]);
        if k > 0 && wf.levels[2 * k - 1] == a {
            return Err(invalid("unexpected FM0 boundary violation"));
        }
        bits.push(a == b);
    }
    Ok(bits)
}

/// The RN16 reply: preamble, 16 random bits and a trailing dummy 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rn16Message {
    pub payload_bits: [bool; 16],
    pub dummy_bit: bool,
}

impl Rn16Message {
    pub const PREAMBLE: [PreambleSymbol; 6] = FM0_PREAMBLE;
    pub const SYMBOLS: usize = 23;

    pub fn from_payload(payload: u16) -> Self {
        let mut payload_bits = [false; 16];
        for (i, b) in payload_bits.iter_mut().enumerate() {
            *b = (payload >> (15 - i)) & 1 == 1;
        }
        Self {
            payload_bits,
            dummy_bit: true,
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::from_payload(rng.random())
    }

    pub fn payload(&self) -> u16 {
        self.payload_bits.iter().fold(0u16, |acc, &b| (acc << 1) | u16::from(b))
    }

    /// Data bits following the preamble (payload then dummy).
    pub fn data_bits(&self) -> Vec<bool> {
        let mut v = Vec::with_capacity(17);
        v.extend_from_slice(&self.payload_bits);
        v.push(self.dummy_bit);
        v
    }

    pub fn encode(&self, cfg: &Fm0Config) -> Fm0Waveform {
        fm0_encode(&self.data_bits(), cfg, true).expect("RN16 data is never empty")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn cfg() -> Fm0Config {
        Fm0Config::default()
    }

    #[test]
    fn data_one_holds_level() {
        let wf = fm0_encode(&[true], &cfg(), false).unwrap();
        assert_eq!(wf.levels, [Hi, Hi]);
    }

    #[test]
    fn data_zero_inverts_mid_symbol() {
        let wf = fm0_encode(&[false], &cfg(), false).unwrap();
        assert_eq!(wf.levels, [Hi, Lo]);
    }

    #[test]
    fn empty_bits_rejected() {
        assert!(fm0_encode(&[], &cfg(), false).is_err());
    }

    #[test]
    fn every_boundary_inverts_without_preamble() {
        let bits = [true, false, false, true, true, false];
        let wf = fm0_encode(&bits, &cfg(), false).unwrap();
        assert!(wf.boundary_violations().is_empty());
        assert_eq!(fm0_decode(&wf).unwrap(), bits);
    }

    // Independent scan: walk adjacent half-symbol pairs and count the symbol
    // boundaries (odd -> even half index) that do not invert.
    fn count_missing_boundary_inversions(levels: &[Level]) -> (usize, Vec<usize>) {
        let mut n = 0;
        let mut at = Vec::new();
        for i in 0..levels.len() - 1 {
            let crosses_boundary = (i + 1) % 2 == 0;
            if crosses_boundary && levels[i] == levels[i + 1] {
                n += 1;
                at.push(i.div_ceil(2));
            }
        }
        (n, at)
    }

    #[test]
    fn rn16_has_single_violation_at_fifth_symbol() {
        let mut rng = seeded(3);
        for _ in 0..200 {
            let msg = Rn16Message::random(&mut rng);
            let wf = msg.encode(&cfg());
            assert_eq!(wf.symbol_count(), Rn16Message::SYMBOLS);
            let (n, at) = count_missing_boundary_inversions(&wf.levels);
            assert_eq!(n, 1);
            // zero-based symbol index 4 is the fifth preamble symbol
            assert_eq!(at, [4]);
            assert_eq!(wf.boundary_violations(), [4]);
        }
    }

    #[test]
    fn longest_run_is_three_half_symbols() {
        let wf = Rn16Message::from_payload(0xFFFF).encode(&cfg());
        assert_eq!(wf.longest_run(), 3);
        let wf = Rn16Message::from_payload(0x0000).encode(&cfg());
        assert_eq!(wf.longest_run(), 3);
    }

    #[test]
    fn payload_round_trip() {
        let msg = Rn16Message::from_payload(0xA5C3);
        assert_eq!(msg.payload(), 0xA5C3);
        let bits = fm0_decode(&msg.encode(&cfg())).unwrap();
        assert_eq!(bits, msg.data_bits());
    }

    #[test]
    fn level_lookup() {
        let wf = fm0_encode(&[false, true], &cfg(), false).unwrap();
        let h = wf.half_period();
        assert_eq!(wf.level_at(0.1 * h), Some(Hi));
        assert_eq!(wf.level_at(1.5 * h), Some(Lo));
        assert_eq!(wf.level_at(2.5 * h), Some(Hi));
        assert_eq!(wf.level_at(4.5 * h), None);
        assert_eq!(wf.inversion_times().len(), 2);
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        assert!((cfg().t_pri() * cfg().blf - 1.0).abs() <= f64::EPSILON);
        let bad = Fm0Config { blf: 30e3, ..cfg() };
        assert!(bad.validate().is_err());
        let slow = Fm0Config {
            sample_rate: 300e3,
            ..cfg()
        };
        assert!(slow.validate().is_err());
    }
}
