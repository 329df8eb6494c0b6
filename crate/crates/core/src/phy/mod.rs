//! EPC Gen-2 physical layer: FM0 coding, query-round timing and I/Q synthesis.

pub mod fm0;
pub mod iq;
pub mod timing;

pub use fm0::{fm0_decode, fm0_encode, Fm0Config, Fm0Waveform, Level, Rn16Message};
pub use iq::{synthesize_round, Channel, IqTrace, Marker, RoundCapture, SampleState, SynthSpan};
pub use timing::{build_query_round, sample_t1, sample_t2, Gen2Timing, QueryRound, Segment, SegmentKind};
