//! Random CW phase hopping over the RN16 reply window, and the reader's
//! recovery of the true backscatter phase from the reserved intervals.

pub mod recover;
pub mod schedule;

pub use recover::{reader_recover, two_means};
pub use schedule::{
    make_library, make_schedule, verify_schedule, HoppingSchedule, PhaseLibrary, Violation, N_INTERVALS,
    PHASES_PER_LIBRARY, RECOVERY_LEN, RECOVERY_START_MAX, T1_PRIME_DEFAULT, TAU_DEFAULT, USES_PER_PHASE,
};
