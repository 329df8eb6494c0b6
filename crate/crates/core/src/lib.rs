//! Simulation and signal-processing core for tap-rhythm RFID authentication.
//!
//! A user taps a rhythm on a passive UHF card; the finger pressure rotates the
//! phase of the card's backscatter. This crate models that end to end:
//!
//! * [`phy`]: FM0 line coding, Gen-2 query-round timing and complex-baseband
//!   I/Q synthesis of CW plus backscatter.
//! * [`channel`]: tap-induced phase waveforms, carrier frequency plans,
//!   propagation phase and free-space link budgets.
//! * [`dsp`]: the reader's receive chain, from S1/S2 centroids to the smoothed
//!   phase-difference series.
//! * [`auth`]: tap detection, features, DTW alignment, classifiers and the
//!   synthetic user population.
//! * [`hopping`]: the random CW phase-hopping protocol and reader-side phase
//!   recovery.
//! * [`adversary`]: single-sniffer eavesdropping and the two-sniffer link
//!   feasibility analysis.
//! * [`sim`]: scene simulation and the seeded experiments built from all of
//!   the above.
//!
//! The crate is `no_std` and needs only `alloc`. All randomness comes from
//! explicitly seeded generators (see [`rng`]).

#![no_std]
// `!(x > 0.0)` is the intended way to reject NaN along with bad values.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::too_many_arguments
)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adversary;
pub mod auth;
pub mod channel;
pub mod dsp;
pub mod error;
pub mod hopping;
pub mod phy;
pub mod rng;
pub mod sim;
pub mod units;

pub use error::{Error, Result};
