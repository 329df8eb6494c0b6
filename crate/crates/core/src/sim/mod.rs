//! Scene simulation and the seeded experiments built on it.

pub mod experiments;
pub mod scene;

pub use experiments::*;
pub use scene::{
    capture_reports, capture_series, covering_rounds, plan_rounds, reader_round_phase, scene_report_times, sniff_round,
    Fidelity, ReaderChannel, RoundPlan, SceneConfig, SnifferChannel,
};
