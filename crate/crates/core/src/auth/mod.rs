//! Rhythm authentication: tap detection, gap features, DTW alignment,
//! classifiers, and the synthetic user population.

pub mod classifier;
pub mod detect;
pub mod dtw;
pub mod features;
pub mod population;

pub use classifier::{
    sample_features, train_classifier, verify, verify_session, ClassifierConfig, ClassifierKind, Model, Reason,
    RhythmClassifier, TrainReport, Verdict,
};
pub use detect::{detect_taps, DetectConfig, EventSource, TapEvent, TapEventSeq};
pub use dtw::{dtw, dtw_align, Alignment, DtwConfig, DtwResult};
pub use features::{extract_features, fit_length, gaps, FeatureVector};
pub use population::{
    emulate_observer, gen_user, jitter_rhythm, sample_profile, sample_trial, ObserverConfig, ObserverSkill,
    PopulationConfig, SyntheticUser,
};
