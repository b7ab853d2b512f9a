//! Interference injected into an OFDM receiver by a misaligned
//! multicarrier transmitter.
//!
//! The receiver demodulates N symbols with plain CP-discarding DFT
//! windows. A transmit subcarrier m leaks into receive subcarrier l
//! through the rectangular window's spectral response; with a timing
//! offset of `delta_t` samples and a carrier offset of `delta_f`
//! subcarrier spacings the leakage depends on (m, l, delta_f) only
//! through nu = (m - l) + delta_f. Tables are therefore indexed by the
//! subcarrier distance d = m - l, and a fractional or integer frequency
//! offset re-reads the table at the shifted effective distance (see
//! [`InterferenceTable::shift_lookup`]).
//!
//! Two independent evaluation routes exist on purpose:
//! - [`analytic_mean_interference`] expands the expectation over
//!   unit-variance symbols into a sum of squared per-atom projection
//!   coefficients (exact, no sampling);
//! - [`mean_interference`] Monte-Carlo averages actual synthesized
//!   signals through [`instantaneous_interference`].
//!
//! The two agree in expectation by linearity; tests hold them to each
//! other.
//!
//! Normalization: tables are watts per 1 W of steady-state transmit
//! power on the interfering subcarrier, with the projection scaled so
//! that aligned OFDM self-capture (d = 0, zero offsets) is exactly 1
//! (0 dB). Streams are treated as infinite: observation windows only
//! see fully formed (steady-state) signal, never filter ramp-up.

use std::collections::BTreeSet;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{CoexError, Result};
use crate::waveforms::{
    random_symbols, synthesize, synthesized_len, unit_phasor, ComplexSignal, SymbolGrid,
    WaveformConfig, WaveformKind, WaveformParams,
};

/// The protected OFDM receiver: window geometry and observation length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncumbentConfig {
    /// DFT size / useful samples per symbol (M).
    pub subcarriers: usize,
    /// Cyclic prefix samples per symbol.
    pub cp_samples: usize,
    /// Symbols averaged per interference evaluation (N).
    pub observe_symbols: usize,
    /// Subcarrier spacing in Hz.
    pub subcarrier_spacing_hz: f64,
}

impl Default for IncumbentConfig {
    fn default() -> Self {
        IncumbentConfig {
            subcarriers: 180,
            cp_samples: 12,
            observe_symbols: 20,
            subcarrier_spacing_hz: 15_000.0,
        }
    }
}

impl IncumbentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.subcarriers == 0 {
            return Err(CoexError::InvalidParameter(
                "incumbent needs at least one subcarrier".into(),
            ));
        }
        if self.observe_symbols == 0 {
            return Err(CoexError::InvalidParameter(
                "incumbent needs at least one observation symbol".into(),
            ));
        }
        if !(self.subcarrier_spacing_hz.is_finite() && self.subcarrier_spacing_hz > 0.0) {
            return Err(CoexError::InvalidParameter(
                "incumbent subcarrier spacing must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Samples per full symbol (useful part plus CP).
    pub fn symbol_samples(&self) -> usize {
        self.subcarriers + self.cp_samples
    }

    /// Useful symbol duration in seconds (inverse subcarrier spacing).
    pub fn symbol_duration(&self) -> f64 {
        1.0 / self.subcarrier_spacing_hz
    }

    /// Largest timing offset magnitude supported by sweeps: half a full
    /// symbol in either direction.
    pub fn max_timing_offset(&self) -> i64 {
        (self.symbol_samples() / 2) as i64
    }
}

/// Misalignment between transmitter and receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Offset {
    /// Timing offset in samples; positive delays the transmit stream.
    pub delta_t: i64,
    /// Carrier offset in subcarrier spacings.
    pub delta_f: f64,
}

impl Offset {
    pub fn new(delta_t: i64, delta_f: f64) -> Offset {
        Offset { delta_t, delta_f }
    }

    pub const ZERO: Offset = Offset {
        delta_t: 0,
        delta_f: 0.0,
    };
}

fn check_delta_f(delta_f: f64) -> Result<()> {
    if !delta_f.is_finite() {
        return Err(CoexError::OffsetOutOfRange(format!(
            "frequency offset must be finite, got {delta_f}"
        )));
    }
    Ok(())
}

/// Interference energy captured by the receiver's N windows, summed over
/// symbols (not averaged), for an arbitrary baseband signal.
///
/// Window n covers samples n(M+N_CP)+N_CP .. +M of the receive timeline;
/// the signal is read delayed by `delta_t` samples and the carrier
/// offset is applied as a per-sample rotation of `delta_f` subcarrier
/// spacings. Scaled by 1/M^2 so a unit-power tone on subcarrier l with
/// zero offsets yields exactly 1 per window.
pub fn instantaneous_interference(
    signal: &ComplexSignal,
    incumbent: &IncumbentConfig,
    l: usize,
    offset: Offset,
) -> Result<f64> {
    incumbent.validate()?;
    check_delta_f(offset.delta_f)?;
    let m = incumbent.subcarriers;
    if l >= m {
        return Err(CoexError::SubcarrierOutOfRange { index: l, size: m });
    }
    let s = incumbent.symbol_samples() as i64;
    let n_sym = incumbent.observe_symbols as i64;
    let cp = incumbent.cp_samples as i64;
    let first_read = cp - offset.delta_t;
    if first_read < 0 {
        return Err(CoexError::OffsetOutOfRange(format!(
            "timing offset {} reads {} samples before the signal start",
            offset.delta_t, -first_read
        )));
    }
    let last_read = (n_sym - 1) * s + cp + m as i64 - 1 - offset.delta_t;
    if last_read >= signal.len() as i64 {
        return Err(CoexError::SignalTooShort {
            needed: (last_read + 1) as usize,
            got: signal.len(),
        });
    }
    // Per-window constant phases drop inside |.|^2, so the projection
    // exponent can use the window-local index with nu = delta_f - l.
    let nu = offset.delta_f - l as f64;
    let w = unit_phasor(nu / m as f64);
    let x = signal.samples();
    let mut total = 0.0;
    for n in 0..n_sym {
        let base = (n * s + cp - offset.delta_t) as usize;
        let mut u = Complex64::new(1.0, 0.0);
        let mut c = Complex64::ZERO;
        for &sample in &x[base..base + m] {
            c += sample * u;
            u *= w;
        }
        total += c.norm_sqr();
    }
    Ok(total / (m as f64 * m as f64))
}

/// Steady-state single-subcarrier transmit model used by the analytic
/// path: the distinct pulse shapes (one per waveform, one per in-block
/// position for the block-based scheme) and where copies sit on an
/// infinite timeline.
struct AtomModel {
    shapes: Vec<Vec<Complex64>>,
    /// (start sample, shape index) for every atom that can reach a
    /// receiver window.
    placements: Vec<(i64, usize)>,
    /// Samples prepended to the receive timeline so that every window
    /// read lands inside the modeled (steady-state) stream span for any
    /// |delta_t| <= max_timing_offset.
    guard: i64,
    /// Mean transmit power of the steady-state unit-symbol stream.
    steady_power: f64,
    /// Exclusive upper bound on stream indices any window can read.
    needed_len: usize,
}

impl AtomModel {
    fn new(config: &WaveformConfig, incumbent: &IncumbentConfig) -> Result<AtomModel> {
        incumbent.validate()?;
        if config.subcarriers() != incumbent.subcarriers {
            return Err(CoexError::DimensionMismatch {
                what: "transmit subcarrier grid",
                expected: incumbent.subcarriers,
                got: config.subcarriers(),
            });
        }
        let one = Complex64::new(1.0, 0.0);
        let (shapes, advance): (Vec<Vec<Complex64>>, i64) = match config.kind() {
            WaveformKind::Gfdm => {
                let nb = config.block_symbols();
                let mut shapes = Vec::with_capacity(nb);
                for r in 0..nb {
                    let grid = SymbolGrid::one_hot(nb, config.subcarriers(), r, 0, one)?;
                    shapes.push(synthesize(config, &grid)?.samples().to_vec());
                }
                let span = shapes[0].len() as i64;
                (shapes, span)
            }
            _ => {
                let grid = SymbolGrid::one_hot(1, config.subcarriers(), 0, 0, one)?;
                let shape = synthesize(config, &grid)?.samples().to_vec();
                (vec![shape], config.symbol_step() as i64)
            }
        };
        // Mean power of the infinite stream with i.i.d. unit-variance
        // symbols: atom energies add in expectation, one atom set per
        // `advance` samples.
        let energy: f64 = shapes
            .iter()
            .flat_map(|s| s.iter())
            .map(|c| c.norm_sqr())
            .sum();
        let steady_power = energy / advance as f64;
        if !(steady_power.is_finite() && steady_power > 0.0) {
            return Err(CoexError::InvalidParameter(
                "transmit chain has zero steady-state power".into(),
            ));
        }
        let longest = shapes.iter().map(|s| s.len()).max().unwrap() as i64;
        let s = incumbent.symbol_samples() as i64;
        let dt_max = incumbent.max_timing_offset();
        // Stream positions below `longest` may miss overlapping atoms
        // that an infinite stream would have; keep all reads past them.
        let guard = (dt_max + longest + s - 1) / s * s;
        let needed_len = (guard
            + (incumbent.observe_symbols as i64 - 1) * s
            + incumbent.cp_samples as i64
            + incumbent.subcarriers as i64
            + dt_max) as usize;
        let mut placements = Vec::new();
        match config.kind() {
            WaveformKind::Gfdm => {
                let nb = config.block_symbols();
                let mut start = 0i64;
                while start < needed_len as i64 {
                    for r in 0..nb {
                        placements.push((start, r));
                    }
                    start += advance;
                }
            }
            _ => {
                let mut start = 0i64;
                while start < needed_len as i64 {
                    placements.push((start, 0));
                    start += advance;
                }
            }
        }
        Ok(AtomModel {
            shapes,
            placements,
            guard,
            steady_power,
            needed_len,
        })
    }

    /// Transmit symbols a synthesized stream needs to contain exactly
    /// the atoms of this model (all that can reach a window).
    fn transmit_symbols(&self) -> usize {
        self.placements.len()
    }

    /// Sum over windows and atoms of the squared projection magnitude at
    /// relative tone position `nu` (subcarrier spacings) and timing
    /// offset `delta_t`. Unnormalized; see `cell_value`.
    fn windows_power(&self, incumbent: &IncumbentConfig, nu: f64, delta_t: i64) -> f64 {
        let m = incumbent.subcarriers as i64;
        let s = incumbent.symbol_samples() as i64;
        let cp = incumbent.cp_samples as i64;
        let w = unit_phasor(nu / m as f64);
        let mut total = 0.0;
        for n in 0..incumbent.observe_symbols as i64 {
            let base = n * s + cp + self.guard - delta_t;
            for &(start, shape) in &self.placements {
                let a = &self.shapes[shape];
                let i0 = (start - base).max(0);
                let i1 = (start + a.len() as i64 - base).min(m);
                if i0 >= i1 {
                    continue;
                }
                let mut u = unit_phasor(nu * i0 as f64 / m as f64);
                let mut c = Complex64::ZERO;
                for i in i0..i1 {
                    c += a[(base + i - start) as usize] * u;
                    u *= w;
                }
                total += c.norm_sqr();
            }
        }
        total
    }

    fn cell_value(&self, incumbent: &IncumbentConfig, nu: f64, delta_t: i64) -> f64 {
        let m = incumbent.subcarriers as f64;
        self.windows_power(incumbent, nu, delta_t)
            / (incumbent.observe_symbols as f64 * m * m * self.steady_power)
    }

    fn check_delta_t(&self, incumbent: &IncumbentConfig, delta_t: i64) -> Result<()> {
        let dt_max = incumbent.max_timing_offset();
        if delta_t.abs() > dt_max {
            return Err(CoexError::OffsetOutOfRange(format!(
                "timing offset {delta_t} outside supported range [-{dt_max}, {dt_max}]"
            )));
        }
        Ok(())
    }
}

/// Exact mean interference at a subcarrier distance d = m - l (transmit
/// minus receive index): the expectation over unit-variance symbols,
/// evaluated as the per-window, per-atom sum of squared projection
/// coefficients, divided by the number of observed symbols.
pub fn analytic_mean_interference(
    config: &WaveformConfig,
    incumbent: &IncumbentConfig,
    distance: i64,
    offset: Offset,
) -> Result<f64> {
    check_delta_f(offset.delta_f)?;
    let model = AtomModel::new(config, incumbent)?;
    model.check_delta_t(incumbent, offset.delta_t)?;
    Ok(model.cell_value(incumbent, distance as f64 + offset.delta_f, offset.delta_t))
}

/// One Monte-Carlo draw: synthesize a random single-subcarrier signal at
/// steady-state power 1 W and run it through the receiver. Returns the
/// window-summed energy (not yet divided by the symbol count).
pub fn single_trial_interference(
    config: &WaveformConfig,
    incumbent: &IncumbentConfig,
    distance: i64,
    offset: Offset,
    seed: u64,
) -> Result<f64> {
    let setup = McSetup::new(config, incumbent, distance, offset)?;
    setup.trial(config, incumbent, seed)
}

/// Monte-Carlo estimate of the mean interference at subcarrier distance
/// d = m - l: `trials` draws of [`single_trial_interference`] averaged
/// and divided by the observed symbol count. Deterministic in `seed`
/// (trial t uses seed + t), independent of thread count.
pub fn mean_interference(
    config: &WaveformConfig,
    incumbent: &IncumbentConfig,
    distance: i64,
    offset: Offset,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(CoexError::InvalidParameter(
            "monte-carlo estimate needs at least one trial".into(),
        ));
    }
    let setup = McSetup::new(config, incumbent, distance, offset)?;
    let run = |t: u64| setup.trial(config, incumbent, seed.wrapping_add(t));
    #[cfg(feature = "parallel")]
    let samples: Result<Vec<f64>> = (0..trials as u64).into_par_iter().map(run).collect();
    #[cfg(not(feature = "parallel"))]
    let samples: Result<Vec<f64>> = (0..trials as u64).map(run).collect();
    let samples = samples?;
    let sum: f64 = samples.iter().sum();
    Ok(sum / (trials as f64 * incumbent.observe_symbols as f64))
}

/// Shared preparation for Monte-Carlo trials: physical subcarrier pair,
/// stream length, guard shift and power normalization.
struct McSetup {
    tx_subcarrier: usize,
    rx_subcarrier: usize,
    n_symbols: usize,
    shifted: Offset,
    amplitude: f64,
}

impl McSetup {
    fn new(
        config: &WaveformConfig,
        incumbent: &IncumbentConfig,
        distance: i64,
        offset: Offset,
    ) -> Result<McSetup> {
        check_delta_f(offset.delta_f)?;
        let model = AtomModel::new(config, incumbent)?;
        model.check_delta_t(incumbent, offset.delta_t)?;
        let m = incumbent.subcarriers as i64;
        if distance.abs() >= m {
            return Err(CoexError::DistanceOutOfRange {
                distance,
                min: -(m - 1),
                max: m - 1,
            });
        }
        // Any pair with m - l = distance is equivalent; park both ends
        // inside the grid.
        let tx = distance.max(0) as usize;
        let rx = (tx as i64 - distance) as usize;
        // One grid row per modeled atom: the synthesized stream then
        // matches the analytic atom set exactly, including atoms that
        // start late but still reach the last windows.
        let n_symbols = model.transmit_symbols();
        debug_assert!(synthesized_len(config, n_symbols) >= model.needed_len);
        Ok(McSetup {
            tx_subcarrier: tx,
            rx_subcarrier: rx,
            n_symbols,
            shifted: Offset {
                // The synthesized stream plays the role of the infinite
                // one starting `guard` samples before the receiver.
                delta_t: offset.delta_t - model.guard,
                delta_f: offset.delta_f,
            },
            amplitude: 1.0 / model.steady_power.sqrt(),
        })
    }

    fn trial(&self, config: &WaveformConfig, incumbent: &IncumbentConfig, seed: u64) -> Result<f64> {
        let symbols = random_symbols(config.kind(), self.n_symbols, seed);
        let grid = SymbolGrid::single_column(config.subcarriers(), self.tx_subcarrier, &symbols)?;
        let mut signal = synthesize(config, &grid)?;
        signal.scale(self.amplitude);
        instantaneous_interference(&signal, incumbent, self.rx_subcarrier, self.shifted)
    }
}

/// Mean interference tabulated over (subcarrier distance, timing offset,
/// frequency offset), with the inputs that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceTable {
    pub waveform: WaveformKind,
    pub params: WaveformParams,
    pub incumbent: IncumbentConfig,
    pub distances: Vec<i64>,
    pub dt_grid: Vec<i64>,
    pub df_grid: Vec<f64>,
    /// Row-major over [distance][dt][df]; watts per 1 W injected.
    pub values: Vec<f64>,
    /// "analytic" for tables from the closed-form path.
    pub method: String,
    pub seed: u64,
}

/// Cells at equal nu = d + delta_f are the same quantity; quantizing nu
/// to this grid makes the equality bitwise across (d, delta_f) pairs.
const NU_QUANTUM: f64 = 1e-6;

fn nu_bucket(nu: f64) -> i64 {
    (nu / NU_QUANTUM).round() as i64
}

fn require_sorted_unique_i64(what: &'static str, xs: &[i64]) -> Result<()> {
    if xs.is_empty() {
        return Err(CoexError::InvalidParameter(format!("{what} grid is empty")));
    }
    if xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CoexError::InvalidParameter(format!(
            "{what} grid must be strictly increasing"
        )));
    }
    Ok(())
}

fn require_sorted_unique_f64(what: &'static str, xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(CoexError::InvalidParameter(format!("{what} grid is empty")));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(CoexError::InvalidParameter(format!(
            "{what} grid contains a non-finite value"
        )));
    }
    if xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CoexError::InvalidParameter(format!(
            "{what} grid must be strictly increasing"
        )));
    }
    Ok(())
}

fn validate_grids(
    incumbent: &IncumbentConfig,
    distances: &[i64],
    dt_grid: &[i64],
    df_grid: &[f64],
) -> Result<()> {
    require_sorted_unique_i64("distance", distances)?;
    require_sorted_unique_i64("timing offset", dt_grid)?;
    require_sorted_unique_f64("frequency offset", df_grid)?;
    let dt_max = incumbent.max_timing_offset();
    if let Some(&bad) = dt_grid.iter().find(|t| t.abs() > dt_max) {
        return Err(CoexError::OffsetOutOfRange(format!(
            "timing offset {bad} outside supported range [-{dt_max}, {dt_max}]"
        )));
    }
    if let Some(&bad) = df_grid.iter().find(|f| f.abs() > 1.0 + 1e-12) {
        return Err(CoexError::OffsetOutOfRange(format!(
            "frequency offset {bad} outside supported range [-1, 1]"
        )));
    }
    Ok(())
}

fn build_impl(
    config: &WaveformConfig,
    incumbent: &IncumbentConfig,
    distances: &[i64],
    dt_grid: &[i64],
    df_grid: &[f64],
    parallel: bool,
) -> Result<InterferenceTable> {
    validate_grids(incumbent, distances, dt_grid, df_grid)?;
    let model = AtomModel::new(config, incumbent)?;
    // Distinct nu buckets over the (distance, delta_f) product.
    let buckets: Vec<i64> = distances
        .iter()
        .flat_map(|&d| df_grid.iter().map(move |&f| nu_bucket(d as f64 + f)))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let jobs: Vec<(f64, i64)> = buckets
        .iter()
        .flat_map(|&b| {
            let nu = b as f64 * NU_QUANTUM;
            dt_grid.iter().map(move |&t| (nu, t))
        })
        .collect();
    let eval = |&(nu, t): &(f64, i64)| model.cell_value(incumbent, nu, t);
    let _ = parallel;
    #[cfg(feature = "parallel")]
    let cell_values: Vec<f64> = if parallel {
        jobs.par_iter().map(eval).collect()
    } else {
        jobs.iter().map(eval).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let cell_values: Vec<f64> = jobs.iter().map(eval).collect();

    let bucket_row = |b: i64| buckets.binary_search(&b).expect("bucket precomputed");
    let mut values = Vec::with_capacity(distances.len() * dt_grid.len() * df_grid.len());
    for &d in distances {
        for (ti, _) in dt_grid.iter().enumerate() {
            for &f in df_grid {
                let row = bucket_row(nu_bucket(d as f64 + f));
                values.push(cell_values[row * dt_grid.len() + ti]);
            }
        }
    }
    Ok(InterferenceTable {
        waveform: config.kind(),
        params: config.params().clone(),
        incumbent: incumbent.clone(),
        distances: distances.to_vec(),
        dt_grid: dt_grid.to_vec(),
        df_grid: df_grid.to_vec(),
        values,
        method: "analytic".into(),
        seed: 0,
    })
}

/// Build the mean-interference table over the given grids via the
/// analytic path. Cells are distributed across worker threads when the
/// `parallel` feature is enabled; results are identical either way.
pub fn build_table(
    config: &WaveformConfig,
    incumbent: &IncumbentConfig,
    distances: &[i64],
    dt_grid: &[i64],
    df_grid: &[f64],
) -> Result<InterferenceTable> {
    build_impl(config, incumbent, distances, dt_grid, df_grid, true)
}

/// Single-threaded [`build_table`], kept as the comparison baseline for
/// the parallel sweep.
pub fn build_table_sequential(
    config: &WaveformConfig,
    incumbent: &IncumbentConfig,
    distances: &[i64],
    dt_grid: &[i64],
    df_grid: &[f64],
) -> Result<InterferenceTable> {
    build_impl(config, incumbent, distances, dt_grid, df_grid, false)
}

impl InterferenceTable {
    fn expected_len(&self) -> usize {
        self.distances.len() * self.dt_grid.len() * self.df_grid.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.incumbent.validate()?;
        require_sorted_unique_i64("distance", &self.distances)?;
        require_sorted_unique_i64("timing offset", &self.dt_grid)?;
        require_sorted_unique_f64("frequency offset", &self.df_grid)?;
        if self.values.len() != self.expected_len() {
            return Err(CoexError::DimensionMismatch {
                what: "table cell count",
                expected: self.expected_len(),
                got: self.values.len(),
            });
        }
        if self.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(CoexError::InvalidParameter(
                "table contains a negative or non-finite cell".into(),
            ));
        }
        Ok(())
    }

    pub fn get(&self, d_idx: usize, t_idx: usize, f_idx: usize) -> f64 {
        self.values
            [(d_idx * self.dt_grid.len() + t_idx) * self.df_grid.len() + f_idx]
    }

    fn distance_index(&self, distance: i64) -> Result<usize> {
        self.distances.binary_search(&distance).map_err(|_| {
            CoexError::DistanceOutOfRange {
                distance,
                min: *self.distances.first().unwrap_or(&0),
                max: *self.distances.last().unwrap_or(&0),
            }
        })
    }

    fn dt_index(&self, delta_t: i64) -> Result<usize> {
        self.dt_grid
            .binary_search(&delta_t)
            .map_err(|_| CoexError::OffsetOutOfRange(format!(
                "timing offset {delta_t} is not on the table grid"
            )))
    }

    /// Table read honoring the frequency-shift rule: distance d with
    /// carrier offset delta_f reads effective distance d + floor(delta_f)
    /// at the fractional remainder, linearly interpolated on the
    /// delta_f axis. delta_t must be on the grid exactly.
    pub fn shift_lookup(&self, distance: i64, offset: Offset) -> Result<f64> {
        check_delta_f(offset.delta_f)?;
        let f_int = offset.delta_f.floor();
        let frac = offset.delta_f - f_int;
        let d_idx = self.distance_index(distance + f_int as i64)?;
        let t_idx = self.dt_index(offset.delta_t)?;
        // Bracket frac on the delta_f axis.
        let grid = &self.df_grid;
        let hi = grid.partition_point(|&g| g < frac);
        if hi < grid.len() && (grid[hi] - frac).abs() <= 1e-12 {
            return Ok(self.get(d_idx, t_idx, hi));
        }
        if hi == 0 || hi == grid.len() {
            return Err(CoexError::OffsetOutOfRange(format!(
                "fractional frequency offset {frac} is outside the table's delta_f axis"
            )));
        }
        let (lo_f, hi_f) = (grid[hi - 1], grid[hi]);
        let weight = (frac - lo_f) / (hi_f - lo_f);
        let lo_v = self.get(d_idx, t_idx, hi - 1);
        let hi_v = self.get(d_idx, t_idx, hi);
        Ok(lo_v + weight * (hi_v - lo_v))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        let file = std::fs::File::create(path).map_err(|e| CoexError::io(path, e))?;
        let mut writer = std::io::BufWriter::new(file);
        serde_json::to_writer(&mut writer, self).map_err(|e| CoexError::Malformed {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        use std::io::Write;
        writer.flush().map_err(|e| CoexError::io(path, e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<InterferenceTable> {
        let file = std::fs::File::open(path).map_err(|e| CoexError::io(path, e))?;
        let table: InterferenceTable = serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| CoexError::Malformed {
                path: path.display().to_string(),
                detail: e.to_string(),
            })?;
        table.validate()?;
        Ok(table)
    }
}

/// Disjoint split of the incumbent grid into the band free for the
/// overlay transmitter (B_f) and the band to protect (B_i).
#[derive(Debug, Clone, PartialEq)]
pub struct BandMap {
    total: usize,
    free: Vec<usize>,
    protected: Vec<usize>,
}

impl BandMap {
    /// Explicit index sets; rejects overlap (naming the offending
    /// indices), out-of-range entries and duplicates.
    pub fn new(total: usize, free: Vec<usize>, protected: Vec<usize>) -> Result<BandMap> {
        if free.is_empty() {
            return Err(CoexError::InvalidParameter(
                "free band must contain at least one subcarrier".into(),
            ));
        }
        for &idx in free.iter().chain(protected.iter()) {
            if idx >= total {
                return Err(CoexError::SubcarrierOutOfRange {
                    index: idx,
                    size: total,
                });
            }
        }
        let mut seen = vec![0u8; total];
        for &idx in &free {
            seen[idx] |= 1;
        }
        for &idx in &protected {
            seen[idx] |= 2;
        }
        if free.len() != free.iter().collect::<BTreeSet<_>>().len()
            || protected.len() != protected.iter().collect::<BTreeSet<_>>().len()
        {
            return Err(CoexError::InvalidParameter(
                "band index sets must not contain duplicates".into(),
            ));
        }
        let overlap: Vec<usize> = (0..total).filter(|&i| seen[i] == 3).collect();
        if !overlap.is_empty() {
            return Err(CoexError::BandOverlap { indices: overlap });
        }
        Ok(BandMap {
            total,
            free,
            protected,
        })
    }

    /// Free band of `free_count` contiguous subcarriers centered in a
    /// grid of `total`; everything else is protected.
    pub fn centered(total: usize, free_count: usize) -> Result<BandMap> {
        if free_count == 0 || free_count > total {
            return Err(CoexError::InvalidParameter(format!(
                "free band of {free_count} subcarriers does not fit a grid of {total}"
            )));
        }
        let start = (total - free_count) / 2;
        let free: Vec<usize> = (start..start + free_count).collect();
        let protected: Vec<usize> = (0..total).filter(|i| *i < start || *i >= start + free_count).collect();
        BandMap::new(total, free, protected)
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn protected(&self) -> &[usize] {
        &self.protected
    }
}

/// Total interference injected into the protected band: the sum over
/// free subcarriers m and protected subcarriers l of P_m (relative to
/// the 1 W table reference) times the table value at distance m - l.
pub fn total_interference(
    table: &InterferenceTable,
    powers: &[f64],
    band: &BandMap,
    offset: Offset,
) -> Result<f64> {
    if powers.len() != band.free().len() {
        return Err(CoexError::DimensionMismatch {
            what: "power vector length",
            expected: band.free().len(),
            got: powers.len(),
        });
    }
    if let Some(bad) = powers.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(CoexError::InvalidParameter(format!(
            "subcarrier powers must be nonnegative, got {bad}"
        )));
    }
    let mut total = 0.0;
    for (&m, &p) in band.free().iter().zip(powers.iter()) {
        if p == 0.0 {
            continue;
        }
        for &l in band.protected() {
            total += p * table.shift_lookup(m as i64 - l as i64, offset)?;
        }
    }
    Ok(total)
}
