//! Coexistence simulator for overlay device-to-device links sharing an
//! OFDM uplink band.
//!
//! The crate models a secondary multicarrier transmitter occupying a block
//! of free subcarriers inside an occupied OFDM band, without time or
//! frequency synchronisation to the incumbent receiver. It answers two
//! questions:
//!
//! 1. How much power does each candidate waveform leak into an incumbent
//!    OFDM receiver as a function of subcarrier distance, timing offset
//!    and carrier frequency offset? ([`interference`])
//! 2. Given a cap on that leakage and a transmit power budget, how many
//!    bits can the secondary link move per resource window, and with what
//!    per-subcarrier power loading? ([`allocation`], [`rate`])
//!
//! Five transmit chains are implemented in [`waveforms`]: plain CP-OFDM,
//! filtered multitone (FMT), OFDM/OQAM with a PHYDYAS prototype, a lapped
//! sine-window filter bank, and GFDM with circular pulse shaping. All of
//! them share the incumbent sample clock, so interference is tabulated on
//! a common subcarrier-distance axis.
//!
//! The heavy step, filling interference tables over a timing/frequency
//! offset grid, is data parallel. With the default `parallel` feature the
//! grid is distributed with rayon; disabling the feature falls back to a
//! sequential fill with identical results (`benches/table_build.rs`
//! compares the two).

pub mod allocation;
pub mod error;
pub mod figures;
pub mod filters;
pub mod interference;
pub mod rate;
pub mod scenario;
pub mod waveforms;

pub use error::{CoexError, Result};

/// Power ratio in decibels. Non-positive values (possible for exact
/// cancellation cells) clamp to -400 dB so downstream CSV stays finite.
pub fn watts_to_db(watts: f64) -> f64 {
    if watts <= 0.0 {
        return -400.0;
    }
    (10.0 * watts.log10()).max(-400.0)
}

/// Inverse of [`watts_to_db`].
pub fn db_to_watts(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
