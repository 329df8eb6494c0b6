//! Everything between the reader antenna and the card chip.

pub mod carrier;
pub mod link;
pub mod tap;

pub use carrier::{baseline_phase, CarrierMode, CarrierPlan, PHI_CARD_DEFAULT, PHI_READER_DEFAULT};
pub use link::{fspl, link_powers, LinkBudget, LinkPowers};
pub use tap::{tap_phase, RhythmSpec, Tap, TapProfile, MIN_RHYTHM_TAPS};
