//! Reader receive chain: per-round phase extraction, the phase-report stream,
//! and the differencing / hop-calibration / smoothing pipeline that turns the
//! reports into the phase-difference series `Phi`.

pub mod extract;
pub mod pipeline;
pub mod report;

pub use extract::{backscatter_phase, centroid, extract_phase, vector_angle, Centroids, DEGENERATE_EPS};
pub use pipeline::{
    diff_unwrap, differentiate, hop_calibrate, interpolate_filter, normalize, process_reports, DiffSeries,
    HopDiagnostics, PipelineConfig, ProcessedSeries, ETA_DEFAULT,
};
pub use report::{report_stream, report_times, PhaseReport, ReportStream, RoundObservation};
