//! Scenario files: one JSON document holding the seed and every experiment
//! parameter. Only `seed` is required; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use tapauth_core::adversary::{SnifferModel, TABLE_IV};
use tapauth_core::auth::{
    ClassifierConfig, ClassifierKind, DetectConfig, DtwConfig, ObserverConfig, ObserverSkill, PopulationConfig,
};
use tapauth_core::channel::carrier::fcc_channel_centers;
use tapauth_core::channel::{CarrierMode, CarrierPlan, LinkBudget, RhythmSpec, Tap, TapProfile};
use tapauth_core::dsp::report::{REPORT_INTERVAL_DEFAULT, REPORT_JITTER_DEFAULT};
use tapauth_core::dsp::{PipelineConfig, ETA_DEFAULT};
use tapauth_core::phy::timing::QUERY_CMD_DEFAULT;
use tapauth_core::phy::Fm0Config;
use tapauth_core::rng::derive_seed;
use tapauth_core::sim::{Fidelity, ReaderChannel, SceneConfig, SnifferChannel};

use crate::error::{HarnessError, Result};
use crate::formats::link::LinkBudgetInput;
use crate::formats::{read_text, FeasibilityInput};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    #[serde(default)]
    pub phy: PhySection,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub pipeline: PipelineSection,
    #[serde(default)]
    pub population: PopulationSection,
    #[serde(default)]
    pub classifier: ClassifierSection,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub attack: AttackSection,
    #[serde(default)]
    pub capture: CaptureSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhySection {
    pub fm0: Fm0Config,
    pub query_cmd_s: f64,
    /// Fixed T1/T2; drawn per round when null.
    pub t1_s: Option<f64>,
    pub t2_s: Option<f64>,
}

impl Default for PhySection {
    fn default() -> Self {
        Self {
            fm0: Fm0Config::default(),
            query_cmd_s: QUERY_CMD_DEFAULT,
            t1_s: None,
            t2_s: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    /// Finger used for single-rhythm captures.
    pub tap_profile: TapProfile,
    pub carrier: CarrierSection,
    pub reader: ReaderChannel,
    pub sniffer: SnifferChannel,
    pub link_budget: LinkBudgetInput,
}

/// Carrier plan; its hop sequence is seeded from the scenario seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarrierSection {
    pub mode: CarrierMode,
    pub fixed_freq_hz: f64,
    pub channel_centers_hz: Vec<f64>,
    pub hop_interval_s: f64,
}

impl Default for CarrierSection {
    fn default() -> Self {
        let p = CarrierPlan::default();
        Self {
            mode: p.mode,
            fixed_freq_hz: p.fixed_freq,
            channel_centers_hz: fcc_channel_centers(),
            hop_interval_s: p.hop_interval,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub eta: f64,
    pub interp_factor: usize,
    pub filter_len: usize,
    pub hop_calibration: bool,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub report_interval_s: f64,
    pub report_jitter_s: f64,
    pub fidelity: Fidelity,
}

impl Default for PipelineSection {
    fn default() -> Self {
        let p = PipelineConfig::default();
        let d = DetectConfig::default();
        Self {
            eta: ETA_DEFAULT,
            interp_factor: p.interp_factor,
            filter_len: p.filter_len,
            hop_calibration: p.hop_calibration,
            delta1: d.delta1,
            delta2: d.delta2,
            delta3: d.delta3,
            report_interval_s: REPORT_INTERVAL_DEFAULT,
            report_jitter_s: REPORT_JITTER_DEFAULT,
            fidelity: Fidelity::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationSection {
    pub users: usize,
    pub trials_per_user: usize,
    /// Enrollment trials per user for enroll and attack.
    pub k: usize,
    /// Enrollment sizes swept by eval.
    pub k_values: Vec<usize>,
    pub shape: RhythmShape,
}

impl Default for PopulationSection {
    fn default() -> Self {
        let p = PopulationConfig::default();
        Self {
            users: p.users,
            trials_per_user: p.trials_per_user,
            k: 10,
            k_values: vec![4, 10, 20],
            shape: RhythmShape::default(),
        }
    }
}

/// How synthetic users' rhythms are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RhythmShape {
    pub min_taps: usize,
    pub max_taps: usize,
    pub duration_mean_s: f64,
    pub duration_var_s2: f64,
    pub duration_min_s: f64,
    pub duration_max_s: f64,
    pub lead_time_s: f64,
    pub hold_median_s: f64,
    pub min_hold_s: f64,
    pub min_gap_s: f64,
    pub short_gap_median_s: f64,
    pub long_gap_median_s: f64,
    pub long_gap_prob: f64,
    pub jitter_sd_s: f64,
    pub trial_floor_s: f64,
}

impl Default for RhythmShape {
    fn default() -> Self {
        let p = PopulationConfig::default();
        Self {
            min_taps: p.min_taps,
            max_taps: p.max_taps,
            duration_mean_s: p.duration_mean,
            duration_var_s2: p.duration_var,
            duration_min_s: p.duration_min,
            duration_max_s: p.duration_max,
            lead_time_s: p.lead_time,
            hold_median_s: p.hold_median,
            min_hold_s: p.min_hold,
            min_gap_s: p.min_gap,
            short_gap_median_s: p.short_gap_median,
            long_gap_median_s: p.long_gap_median,
            long_gap_prob: p.long_gap_prob,
            jitter_sd_s: p.jitter_sd,
            trial_floor_s: p.trial_floor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSection {
    pub kind: ClassifierKind,
    pub nn_margin: f64,
    pub retries: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub dtw_window: Option<usize>,
    pub dtw_decimation: usize,
}

impl Default for ClassifierSection {
    fn default() -> Self {
        let c = ClassifierConfig::default();
        Self {
            kind: c.kind,
            nn_margin: c.nn_margin,
            retries: c.retries,
            learning_rate: c.learning_rate,
            epochs: c.epochs,
            l2: c.l2,
            dtw_window: c.align.window,
            dtw_decimation: c.align.decimation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    pub hopping: bool,
    pub audit_count: usize,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            hopping: false,
            audit_count: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackMode {
    BruteForce,
    Visual,
    BasicEavesdrop,
    AdvancedEavesdrop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackSection {
    pub mode: AttackMode,
    pub skill: ObserverSkill,
    /// Imitation attempts per target.
    pub tries: usize,
    pub observer: ObserverConfig,
    /// Candidate phases the eavesdropper keeps; every cluster when null.
    pub theta_prime_size: Option<usize>,
    /// Rounds for the per-round guess rate; 0 skips it.
    pub guess_rounds: usize,
    /// Sniff-and-replay sessions.
    pub sessions: usize,
    pub sniffer_model: SnifferModel,
    /// Measured powers for the advanced attack.
    pub measurements: Vec<FeasibilityInput>,
}

impl Default for AttackSection {
    fn default() -> Self {
        Self {
            mode: AttackMode::BasicEavesdrop,
            skill: ObserverSkill::Studied,
            tries: 4,
            observer: ObserverConfig::default(),
            theta_prime_size: Some(24),
            guess_rounds: 10_000,
            sessions: 100,
            sniffer_model: SnifferModel::default(),
            measurements: TABLE_IV
                .iter()
                .map(|r| FeasibilityInput {
                    d0_m: r.d0_m(),
                    p_cw_dbm: r.p_cw_dbm,
                    p_bs_dbm: r.p_bs_dbm,
                })
                .collect(),
        }
    }
}

/// Inputs for single-rhythm captures and plot exports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaptureSection {
    pub rhythm: RhythmSpec,
    /// Round whose I/Q samples are exported.
    pub round: usize,
}

impl Default for CaptureSection {
    fn default() -> Self {
        Self {
            rhythm: RhythmSpec::new(
                vec![Tap {
                    press: 1.0,
                    release: 1.3,
                }],
                2.3,
            )
            .expect("valid default rhythm"),
            round: 0,
        }
    }
}

impl Scenario {
    pub fn minimal(seed: u64) -> Self {
        Self {
            seed,
            phy: PhySection::default(),
            channel: ChannelSection::default(),
            pipeline: PipelineSection::default(),
            population: PopulationSection::default(),
            classifier: ClassifierSection::default(),
            protocol: ProtocolSection::default(),
            attack: AttackSection::default(),
            capture: CaptureSection::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| HarnessError::config(format!("scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        Self::from_json(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        format!("{:x}", Sha256::digest(bytes))
    }

    pub fn validate(&self) -> Result<()> {
        self.scene().validate()?;
        self.population_config().validate()?;
        self.detect().validate()?;
        self.channel.tap_profile.validate()?;
        self.link_budget()?;
        self.attack.sniffer_model.validate()?;
        let pipe = &self.pipeline;
        if pipe.interp_factor == 0 || pipe.filter_len == 0 {
            return Err(HarnessError::config(
                "interpolation factor and filter length must be at least 1",
            ));
        }
        if self.population.k_values.is_empty() {
            return Err(HarnessError::config("population.k_values must not be empty"));
        }
        if self.classifier.dtw_decimation == 0 || self.classifier.retries == 0 {
            return Err(HarnessError::config(
                "classifier decimation and retries must be at least 1",
            ));
        }
        if self.attack.theta_prime_size == Some(0) {
            return Err(HarnessError::config("attack.theta_prime_size must be positive"));
        }
        Ok(())
    }

    /// Seed of one named part of the experiment.
    pub fn sub_seed(&self, label: &str) -> u64 {
        derive_seed(self.seed, label, 0)
    }

    pub fn scene(&self) -> SceneConfig {
        let c = &self.channel.carrier;
        let p = &self.pipeline;
        SceneConfig {
            fm0: self.phy.fm0,
            query_cmd_s: self.phy.query_cmd_s,
            t1_s: self.phy.t1_s,
            t2_s: self.phy.t2_s,
            report_interval_s: p.report_interval_s,
            report_jitter_s: p.report_jitter_s,
            reader: self.channel.reader,
            carrier: CarrierPlan {
                mode: c.mode,
                fixed_freq: c.fixed_freq_hz,
                channel_centers: c.channel_centers_hz.clone(),
                hop_interval: c.hop_interval_s,
                seed: self.sub_seed("carrier"),
            },
            hopping: self.protocol.hopping,
            fidelity: p.fidelity,
            pipeline: PipelineConfig {
                eta: p.eta,
                interp_factor: p.interp_factor,
                filter_len: p.filter_len,
                hop_calibration: p.hop_calibration,
            },
        }
    }

    pub fn detect(&self) -> DetectConfig {
        DetectConfig {
            delta1: self.pipeline.delta1,
            delta2: self.pipeline.delta2,
            delta3: self.pipeline.delta3,
        }
    }

    pub fn population_config(&self) -> PopulationConfig {
        let p = &self.population;
        let s = &p.shape;
        PopulationConfig {
            users: p.users,
            trials_per_user: p.trials_per_user,
            min_taps: s.min_taps,
            max_taps: s.max_taps,
            duration_mean: s.duration_mean_s,
            duration_var: s.duration_var_s2,
            duration_min: s.duration_min_s,
            duration_max: s.duration_max_s,
            lead_time: s.lead_time_s,
            hold_median: s.hold_median_s,
            min_hold: s.min_hold_s,
            min_gap: s.min_gap_s,
            short_gap_median: s.short_gap_median_s,
            long_gap_median: s.long_gap_median_s,
            long_gap_prob: s.long_gap_prob,
            jitter_sd: s.jitter_sd_s,
            trial_floor: s.trial_floor_s,
        }
    }

    pub fn classifier_config(&self) -> ClassifierConfig {
        let c = &self.classifier;
        ClassifierConfig {
            kind: c.kind,
            detect: self.detect(),
            align: DtwConfig {
                window: c.dtw_window,
                decimation: c.dtw_decimation,
            },
            learning_rate: c.learning_rate,
            epochs: c.epochs,
            l2: c.l2,
            nn_margin: c.nn_margin,
            retries: c.retries,
            seed: self.sub_seed("classifier"),
        }
    }

    pub fn link_budget(&self) -> Result<LinkBudget> {
        self.channel.link_budget.resolve()
    }
}
