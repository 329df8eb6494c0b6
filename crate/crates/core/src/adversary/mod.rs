//! Eavesdropping attacks: the single-sniffer phase-guessing attacker and the
//! two-sniffer link-budget feasibility analysis.

pub mod advanced;
pub mod basic;

pub use advanced::{
    advanced_feasibility, feasibility_from_measurements, Feasibility, MeasuredFeasibility, SnifferModel, TableRow,
    TABLE_IV,
};
pub use basic::{
    attack_success_logprob, candidate_set, guess_round, rhythm_from_events, rounds_needed, symbols_from_capture,
    AttackOutcome, RoundGuess, SniffedSymbol, SUCCESS_TOLERANCE,
};
