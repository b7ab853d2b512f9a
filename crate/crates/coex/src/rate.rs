//! Throughput accounting over a shared resource window.
//!
//! A window is a stretch of incumbent symbols during which a band of
//! subcarriers is free. Each waveform fits as many of its own symbols into
//! that stretch as its symbol step, filter ramp-up, and block structure
//! allow; [`useful_symbols`] counts them and [`total_bits`] converts a power
//! allocation into bits carried across the window.

use serde::{Deserialize, Serialize};

use crate::allocation::AllocationProblem;
use crate::error::{CoexError, Result};
use crate::interference::IncumbentConfig;
use crate::waveforms::{WaveformConfig, WaveformKind};

/// A free stretch of the incumbent grid: `free_symbols` incumbent symbol
/// durations by `free_subcarriers` subcarriers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceWindow {
    pub free_symbols: usize,
    pub free_subcarriers: usize,
}

impl ResourceWindow {
    pub fn new(free_symbols: usize, free_subcarriers: usize) -> Result<ResourceWindow> {
        let window = ResourceWindow {
            free_symbols,
            free_subcarriers,
        };
        window.validate()?;
        Ok(window)
    }

    pub fn validate(&self) -> Result<()> {
        if self.free_symbols == 0 || self.free_subcarriers == 0 {
            return Err(CoexError::InvalidParameter(
                "resource window needs at least one symbol and one subcarrier".into(),
            ));
        }
        Ok(())
    }

    /// Window length in incumbent samples.
    pub fn span_samples(&self, incumbent: &IncumbentConfig) -> usize {
        self.free_symbols * incumbent.symbol_samples()
    }
}

/// Largest number of data symbols the waveform can land entirely inside the
/// window. Counted in complex-symbol equivalents: the offset-QAM entry pairs
/// up its real half-rate symbols, and the block entry only admits whole
/// blocks. Exact integer arithmetic throughout; never negative.
pub fn useful_symbols(
    config: &WaveformConfig,
    incumbent: &IncumbentConfig,
    window: &ResourceWindow,
) -> usize {
    let span = (window.free_symbols * incumbent.symbol_samples()) as i64;
    let m = config.subcarriers() as i64;
    match config.kind() {
        WaveformKind::Ofdm => {
            let step = (config.samples_per_symbol() + config.cp_samples()) as i64;
            (span / step) as usize
        }
        WaveformKind::Fmt => {
            let step = config.samples_per_symbol() as i64;
            let pulse = config.overlap_factor() as i64 * step;
            if span < pulse {
                0
            } else {
                ((span - pulse) / step + 1) as usize
            }
        }
        WaveformKind::Oqam => {
            // Real symbols advance by m/2 under a pulse of overlap_factor*m
            // samples; two of them carry one complex symbol.
            let k = config.overlap_factor() as i64;
            let num = 2 * span + m * (1 - 2 * k);
            if num < 0 {
                0
            } else {
                (num / (2 * m)) as usize
            }
        }
        WaveformKind::Lapped => {
            if span < 2 * m {
                0
            } else {
                ((span - 2 * m) / m + 1) as usize
            }
        }
        WaveformKind::Gfdm => {
            let blocks = config.block_symbols() as i64;
            let block_span = blocks * m + config.cp_samples() as i64;
            (span / block_span * blocks) as usize
        }
    }
}

/// Bits carried over the window: `n_useful` times the sum rate of the
/// loaded powers.
pub fn total_bits(problem: &AllocationProblem, powers: &[f64], n_useful: usize) -> f64 {
    n_useful as f64 * problem.objective(powers)
}
