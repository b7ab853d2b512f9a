//! Multicarrier transmit chains.
//!
//! All five waveforms run on the incumbent sample clock: subcarrier m of
//! any chain is modulated onto exp(j*2*pi*k*m/M) of the shared M-point
//! grid (the lapped bank sits half a subcarrier below it, see
//! [`synthesize`]), so signals from different chains can be compared
//! against the same OFDM receiver.
//!
//! Synthesis is linear in the symbol grid and skips zero entries, which
//! keeps one-hot grids (used heavily by the interference engine) cheap.
//!
//! Conventions that matter downstream:
//! - OFDM scales the inverse DFT by 1/M and prepends the last `cp`
//!   samples of each useful part.
//! - FMT places a symbol every P samples with carrier phase taken at the
//!   absolute sample index.
//! - OQAM sends real PAM symbols every M/2 samples with phase factor
//!   j^(m+n) and carrier phase referenced to the pulse center (KM-1)/2.
//! - The lapped bank sends a symbol every M samples through a 2M-sample
//!   window on carriers offset by half a subcarrier: the k-dependent
//!   phase is (2*pi/M)(k - 1/2 + M/2)(m - 1/2).
//! - GFDM processes blocks of `block_symbols` symbols with a circular
//!   pulse and a per-block cyclic prefix; carrier phase is block-local.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoexError, Result};
use crate::filters::{
    gfdm_circular_filter, lapped_sine_filter_variant, phydyas_filter, rrc_filter, PrototypeFilter,
    SineVariant,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveformKind {
    Ofdm,
    Fmt,
    Oqam,
    Lapped,
    Gfdm,
}

impl WaveformKind {
    pub fn all() -> [WaveformKind; 5] {
        [
            WaveformKind::Ofdm,
            WaveformKind::Fmt,
            WaveformKind::Oqam,
            WaveformKind::Lapped,
            WaveformKind::Gfdm,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            WaveformKind::Ofdm => "ofdm",
            WaveformKind::Fmt => "fmt",
            WaveformKind::Oqam => "oqam",
            WaveformKind::Lapped => "lapped",
            WaveformKind::Gfdm => "gfdm",
        }
    }
}

impl std::fmt::Display for WaveformKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for WaveformKind {
    type Err = CoexError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ofdm" => Ok(WaveformKind::Ofdm),
            "fmt" => Ok(WaveformKind::Fmt),
            "oqam" | "ofdm/oqam" => Ok(WaveformKind::Oqam),
            "lapped" => Ok(WaveformKind::Lapped),
            "gfdm" => Ok(WaveformKind::Gfdm),
            other => Err(CoexError::InvalidParameter(format!(
                "unknown waveform '{other}' (expected ofdm, fmt, oqam, lapped or gfdm)"
            ))),
        }
    }
}

/// Fully resolved waveform parameters. This is the serializable record
/// stored in table metadata; [`WaveformParams::build`] turns it into a
/// runnable [`WaveformConfig`] by constructing the prototype filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformParams {
    pub kind: WaveformKind,
    /// Subcarriers on the shared grid (M).
    pub subcarriers: usize,
    /// Samples per symbol period (P).
    pub samples_per_symbol: usize,
    /// Cyclic prefix samples (per symbol for OFDM, per block for GFDM).
    pub cp_samples: usize,
    /// Pulse overlap factor (K). 1 for OFDM.
    pub overlap_factor: usize,
    /// Symbols per GFDM block; 1 elsewhere.
    pub block_symbols: usize,
    /// RRC rolloff for FMT/GFDM pulses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rolloff: Option<f64>,
    /// Sine window convention for the lapped bank.
    #[serde(default)]
    pub lapped_variant: SineVariant,
    /// Subcarrier spacing in Hz; fixes the absolute sample period.
    pub subcarrier_spacing_hz: f64,
}

impl WaveformParams {
    /// Default parameter set for `kind` against an incumbent with
    /// `subcarriers` useful samples and `cp_samples` of cyclic prefix:
    /// FMT stretches its symbol to M + cp with a rolloff-0.2 RRC spanning
    /// six symbols, OQAM uses the overlap-4 PHYDYAS pulse at double
    /// symbol rate, the lapped bank uses the 2M sine window, and GFDM
    /// keeps the OFDM cyclic prefix per five-symbol block with a
    /// rolloff-0.2 circular RRC.
    pub fn preset(
        kind: WaveformKind,
        subcarriers: usize,
        cp_samples: usize,
        subcarrier_spacing_hz: f64,
    ) -> WaveformParams {
        let (samples_per_symbol, cp, overlap, blocks, rolloff) = match kind {
            WaveformKind::Ofdm => (subcarriers, cp_samples, 1, 1, None),
            WaveformKind::Fmt => (subcarriers + cp_samples, 0, 6, 1, Some(0.2)),
            WaveformKind::Oqam => (subcarriers, 0, 4, 1, None),
            WaveformKind::Lapped => (subcarriers, 0, 2, 1, None),
            WaveformKind::Gfdm => (subcarriers, cp_samples, 5, 5, Some(0.2)),
        };
        WaveformParams {
            kind,
            subcarriers,
            samples_per_symbol,
            cp_samples: cp,
            overlap_factor: overlap,
            block_symbols: blocks,
            rolloff,
            lapped_variant: SineVariant::default(),
            subcarrier_spacing_hz,
        }
    }

    pub fn build(&self) -> Result<WaveformConfig> {
        if self.subcarriers == 0 {
            return Err(CoexError::InvalidParameter(
                "waveform needs at least one subcarrier".into(),
            ));
        }
        if self.samples_per_symbol == 0 {
            return Err(CoexError::InvalidParameter(
                "waveform needs a positive symbol period".into(),
            ));
        }
        let filter = match self.kind {
            WaveformKind::Ofdm => None,
            WaveformKind::Fmt => Some(rrc_filter(
                self.rolloff.unwrap_or(0.2),
                self.overlap_factor,
                self.samples_per_symbol,
            )?),
            WaveformKind::Oqam => {
                if !self.subcarriers.is_multiple_of(2) {
                    return Err(CoexError::InvalidParameter(
                        "oqam needs an even subcarrier count (symbols advance by M/2)".into(),
                    ));
                }
                if self.samples_per_symbol != self.subcarriers {
                    return Err(CoexError::InvalidParameter(
                        "oqam symbol period must equal the subcarrier count".into(),
                    ));
                }
                Some(phydyas_filter(self.overlap_factor, self.samples_per_symbol)?)
            }
            WaveformKind::Lapped => {
                if self.samples_per_symbol != self.subcarriers {
                    return Err(CoexError::InvalidParameter(
                        "lapped symbol period must equal the subcarrier count".into(),
                    ));
                }
                Some(lapped_sine_filter_variant(
                    self.subcarriers,
                    self.lapped_variant,
                )?)
            }
            WaveformKind::Gfdm => {
                if self.samples_per_symbol != self.subcarriers {
                    return Err(CoexError::InvalidParameter(
                        "gfdm symbol period must equal the subcarrier count".into(),
                    ));
                }
                if self.block_symbols == 0 {
                    return Err(CoexError::InvalidParameter(
                        "gfdm needs at least one symbol per block".into(),
                    ));
                }
                let base = rrc_filter(
                    self.rolloff.unwrap_or(0.2),
                    self.overlap_factor,
                    self.samples_per_symbol,
                )?;
                Some(gfdm_circular_filter(
                    &base,
                    self.block_symbols,
                    self.subcarriers,
                )?)
            }
        };
        Ok(WaveformConfig {
            params: self.clone(),
            filter,
        })
    }
}

/// A runnable transmit chain: resolved parameters plus the constructed
/// prototype filter (absent for plain OFDM).
#[derive(Debug, Clone)]
pub struct WaveformConfig {
    params: WaveformParams,
    filter: Option<PrototypeFilter>,
}

impl WaveformConfig {
    /// Table II-style default chain for `kind`; see [`WaveformParams::preset`].
    pub fn preset(
        kind: WaveformKind,
        subcarriers: usize,
        cp_samples: usize,
        subcarrier_spacing_hz: f64,
    ) -> Result<WaveformConfig> {
        WaveformParams::preset(kind, subcarriers, cp_samples, subcarrier_spacing_hz).build()
    }

    pub fn kind(&self) -> WaveformKind {
        self.params.kind
    }

    pub fn subcarriers(&self) -> usize {
        self.params.subcarriers
    }

    pub fn samples_per_symbol(&self) -> usize {
        self.params.samples_per_symbol
    }

    pub fn cp_samples(&self) -> usize {
        self.params.cp_samples
    }

    pub fn overlap_factor(&self) -> usize {
        self.params.overlap_factor
    }

    pub fn block_symbols(&self) -> usize {
        self.params.block_symbols
    }

    pub fn filter(&self) -> Option<&PrototypeFilter> {
        self.filter.as_ref()
    }

    pub fn params(&self) -> &WaveformParams {
        &self.params
    }

    /// Seconds per sample on the shared grid.
    pub fn sample_period(&self) -> f64 {
        1.0 / (self.params.subcarrier_spacing_hz * self.params.subcarriers as f64)
    }

    /// Distance in samples between consecutive symbols of this chain.
    pub fn symbol_step(&self) -> usize {
        match self.params.kind {
            WaveformKind::Ofdm => self.params.subcarriers + self.params.cp_samples,
            WaveformKind::Fmt => self.params.samples_per_symbol,
            WaveformKind::Oqam => self.params.subcarriers / 2,
            WaveformKind::Lapped => self.params.subcarriers,
            // Within a block symbols advance by M; blocks additionally
            // carry a cyclic prefix, so the per-symbol average is larger.
            WaveformKind::Gfdm => self.params.subcarriers,
        }
    }
}

/// Row-major symbol grid: `n_symbols` rows of `n_subcarriers` QAM (or PAM
/// for OQAM) symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolGrid {
    values: Vec<Complex64>,
    n_symbols: usize,
    n_subcarriers: usize,
}

impl SymbolGrid {
    pub fn zeros(n_symbols: usize, n_subcarriers: usize) -> SymbolGrid {
        SymbolGrid {
            values: vec![Complex64::ZERO; n_symbols * n_subcarriers],
            n_symbols,
            n_subcarriers,
        }
    }

    /// Grid with a single nonzero entry.
    pub fn one_hot(
        n_symbols: usize,
        n_subcarriers: usize,
        symbol: usize,
        subcarrier: usize,
        value: Complex64,
    ) -> Result<SymbolGrid> {
        let mut g = SymbolGrid::zeros(n_symbols, n_subcarriers);
        g.set(symbol, subcarrier, value)?;
        Ok(g)
    }

    /// Grid carrying `symbols` on one subcarrier column, zero elsewhere.
    pub fn single_column(
        n_subcarriers: usize,
        subcarrier: usize,
        symbols: &[Complex64],
    ) -> Result<SymbolGrid> {
        let mut g = SymbolGrid::zeros(symbols.len(), n_subcarriers);
        for (n, &d) in symbols.iter().enumerate() {
            g.set(n, subcarrier, d)?;
        }
        Ok(g)
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn get(&self, symbol: usize, subcarrier: usize) -> Complex64 {
        self.values[symbol * self.n_subcarriers + subcarrier]
    }

    pub fn set(&mut self, symbol: usize, subcarrier: usize, value: Complex64) -> Result<()> {
        if symbol >= self.n_symbols {
            return Err(CoexError::DimensionMismatch {
                what: "symbol index",
                expected: self.n_symbols,
                got: symbol,
            });
        }
        if subcarrier >= self.n_subcarriers {
            return Err(CoexError::SubcarrierOutOfRange {
                index: subcarrier,
                size: self.n_subcarriers,
            });
        }
        self.values[symbol * self.n_subcarriers + subcarrier] = value;
        Ok(())
    }

    pub fn row(&self, symbol: usize) -> &[Complex64] {
        let start = symbol * self.n_subcarriers;
        &self.values[start..start + self.n_subcarriers]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// Baseband sample stream with its absolute sample period.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    samples: Vec<Complex64>,
    sample_period: f64,
}

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>, sample_period: f64) -> ComplexSignal {
        ComplexSignal {
            samples,
            sample_period,
        }
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    /// Mean per-sample power over the whole stream.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        for s in &mut self.samples {
            *s *= factor;
        }
    }
}

/// Sample count `synthesize` produces for `n_symbols` grid rows.
pub fn synthesized_len(config: &WaveformConfig, n_symbols: usize) -> usize {
    let m = config.subcarriers();
    let p = config.samples_per_symbol();
    let cp = config.cp_samples();
    let k = config.overlap_factor();
    match config.kind() {
        WaveformKind::Ofdm => n_symbols * (m + cp),
        WaveformKind::Fmt => {
            if n_symbols == 0 {
                0
            } else {
                (n_symbols + k - 1) * p
            }
        }
        WaveformKind::Oqam => {
            if n_symbols == 0 {
                0
            } else {
                (n_symbols + 2 * k - 1) * (m / 2)
            }
        }
        WaveformKind::Lapped => {
            if n_symbols == 0 {
                0
            } else {
                (n_symbols + 1) * m
            }
        }
        WaveformKind::Gfdm => {
            let nb = config.block_symbols();
            (n_symbols / nb) * (nb * m + cp)
        }
    }
}

/// Synthesize the baseband stream for a symbol grid.
///
/// Linear in the grid. OQAM rows must be real-valued (PAM); GFDM grids
/// must contain a whole number of blocks.
pub fn synthesize(config: &WaveformConfig, grid: &SymbolGrid) -> Result<ComplexSignal> {
    if grid.n_subcarriers() != config.subcarriers() {
        return Err(CoexError::DimensionMismatch {
            what: "grid subcarriers",
            expected: config.subcarriers(),
            got: grid.n_subcarriers(),
        });
    }
    let samples = match config.kind() {
        WaveformKind::Ofdm => synth_ofdm(config, grid),
        WaveformKind::Fmt => synth_fmt(config, grid),
        WaveformKind::Oqam => synth_oqam(config, grid)?,
        WaveformKind::Lapped => synth_lapped(config, grid),
        WaveformKind::Gfdm => synth_gfdm(config, grid)?,
    };
    Ok(ComplexSignal::new(samples, config.sample_period()))
}

fn synth_ofdm(config: &WaveformConfig, grid: &SymbolGrid) -> Vec<Complex64> {
    let m = config.subcarriers();
    let cp = config.cp_samples();
    let sym = m + cp;
    let mut x = vec![Complex64::ZERO; grid.n_symbols() * sym];
    let inv_m = 1.0 / m as f64;
    for n in 0..grid.n_symbols() {
        let useful = n * sym + cp;
        for (sc, &d) in grid.row(n).iter().enumerate() {
            if d == Complex64::ZERO {
                continue;
            }
            let w = unit_phasor(sc as f64 / m as f64);
            let mut u = Complex64::new(inv_m, 0.0);
            for i in 0..m {
                x[useful + i] += d * u;
                u *= w;
            }
        }
        // Cyclic prefix: copy of the useful tail.
        for j in 0..cp {
            x[n * sym + j] = x[useful + m - cp + j];
        }
    }
    x
}

fn synth_fmt(config: &WaveformConfig, grid: &SymbolGrid) -> Vec<Complex64> {
    let m = config.subcarriers();
    let p = config.samples_per_symbol();
    let g = config.filter().expect("fmt always has a filter").taps();
    let mut x = vec![Complex64::ZERO; synthesized_len(config, grid.n_symbols())];
    for n in 0..grid.n_symbols() {
        let start = n * p;
        for (sc, &d) in grid.row(n).iter().enumerate() {
            if d == Complex64::ZERO {
                continue;
            }
            // Carrier phase at the absolute sample index k = start + t.
            let w = unit_phasor(sc as f64 / m as f64);
            let mut u = unit_phasor((start % m) as f64 * sc as f64 / m as f64);
            for (t, &tap) in g.iter().enumerate() {
                x[start + t] += d * tap * u;
                u *= w;
            }
        }
    }
    x
}

fn synth_oqam(config: &WaveformConfig, grid: &SymbolGrid) -> Result<Vec<Complex64>> {
    let m = config.subcarriers();
    let k = config.overlap_factor();
    let g = config.filter().expect("oqam always has a filter").taps();
    let half = m / 2;
    // Carrier phase is referenced to the pulse center.
    let center = (k * m - 1) as f64 / 2.0;
    let mut x = vec![Complex64::ZERO; synthesized_len(config, grid.n_symbols())];
    for n in 0..grid.n_symbols() {
        let start = n * half;
        for (sc, &d) in grid.row(n).iter().enumerate() {
            if d == Complex64::ZERO {
                continue;
            }
            if d.im != 0.0 {
                return Err(CoexError::InvalidParameter(format!(
                    "oqam grid must hold real PAM symbols; entry ({n}, {sc}) has imaginary part {}",
                    d.im
                )));
            }
            let theta = quarter_turn(sc + n);
            let w = unit_phasor(sc as f64 / m as f64);
            let mut u =
                unit_phasor((start as f64 - center) * sc as f64 / m as f64) * theta * d.re;
            for (t, &tap) in g.iter().enumerate() {
                x[start + t] += tap * u;
                u *= w;
            }
        }
    }
    Ok(x)
}

fn synth_lapped(config: &WaveformConfig, grid: &SymbolGrid) -> Vec<Complex64> {
    let m = config.subcarriers();
    let g = config.filter().expect("lapped always has a filter").taps();
    let mut x = vec![Complex64::ZERO; synthesized_len(config, grid.n_symbols())];
    for n in 0..grid.n_symbols() {
        let start = n * m;
        for (sc, &d) in grid.row(n).iter().enumerate() {
            if d == Complex64::ZERO {
                continue;
            }
            // Half-index offsets on both time and subcarrier axes: the
            // carrier for column sc sits at (sc - 1/2) subcarrier
            // spacings with a fixed half-sample phase skew.
            let freq = (sc as f64 - 0.5) / m as f64;
            let w = unit_phasor(freq);
            let mut u = unit_phasor((start as f64 - 0.5 + m as f64 / 2.0) * freq) * d;
            for (t, &tap) in g.iter().enumerate() {
                x[start + t] += tap * u;
                u *= w;
            }
        }
    }
    x
}

fn synth_gfdm(config: &WaveformConfig, grid: &SymbolGrid) -> Result<Vec<Complex64>> {
    let m = config.subcarriers();
    let cp = config.cp_samples();
    let nb = config.block_symbols();
    if !grid.n_symbols().is_multiple_of(nb) {
        return Err(CoexError::DimensionMismatch {
            what: "gfdm symbols per block",
            expected: nb * grid.n_symbols().div_ceil(nb),
            got: grid.n_symbols(),
        });
    }
    let g = config.filter().expect("gfdm always has a filter").taps();
    let block_len = nb * m;
    let mut x = vec![Complex64::ZERO; synthesized_len(config, grid.n_symbols())];
    for b in 0..grid.n_symbols() / nb {
        let body = b * (block_len + cp) + cp;
        for n in 0..nb {
            for (sc, &d) in grid.row(b * nb + n).iter().enumerate() {
                if d == Complex64::ZERO {
                    continue;
                }
                let w = unit_phasor(sc as f64 / m as f64);
                let mut u = Complex64::new(1.0, 0.0);
                // Block-local carrier phase; the pulse is shifted
                // circularly by n symbol periods.
                for k in 0..block_len {
                    let tap = g[(k + block_len - n * m) % block_len];
                    x[body + k] += d * tap * u;
                    u *= w;
                }
            }
        }
        // Per-block cyclic prefix.
        for j in 0..cp {
            x[b * (block_len + cp) + j] = x[body + block_len - cp + j];
        }
    }
    Ok(x)
}

/// exp(j*2*pi*cycles), with cycles reduced modulo 1 first to keep the
/// argument small.
pub(crate) fn unit_phasor(cycles: f64) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::TAU * cycles.rem_euclid(1.0))
}

/// j^(q mod 4) without trigonometry.
fn quarter_turn(q: usize) -> Complex64 {
    match q % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Unit-variance symbol draws for `kind`: QPSK everywhere except OQAM,
/// which uses real PAM +/-1. Deterministic in `seed`.
pub fn random_symbols(kind: WaveformKind, count: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    (0..count)
        .map(|_| match kind {
            WaveformKind::Oqam => {
                if rng.random::<bool>() {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(-1.0, 0.0)
                }
            }
            _ => {
                let re = if rng.random::<bool>() { scale } else { -scale };
                let im = if rng.random::<bool>() { scale } else { -scale };
                Complex64::new(re, im)
            }
        })
        .collect()
}

/// Synthesize a stream with only subcarrier `m` active, carrying
/// `symbols`, normalized so the mean power over the whole transmission is
/// exactly 1 W. An all-zero symbol vector yields the zero signal.
pub fn single_subcarrier_signal(
    config: &WaveformConfig,
    m: usize,
    symbols: &[Complex64],
) -> Result<ComplexSignal> {
    if m >= config.subcarriers() {
        return Err(CoexError::SubcarrierOutOfRange {
            index: m,
            size: config.subcarriers(),
        });
    }
    let grid = SymbolGrid::single_column(config.subcarriers(), m, symbols)?;
    let mut sig = synthesize(config, &grid)?;
    let p = sig.mean_power();
    if p > 0.0 {
        sig.scale(1.0 / p.sqrt());
    }
    Ok(sig)
}

/// Reference OFDM receiver: drop each cyclic prefix and project the
/// useful part onto the subcarrier exponentials. Inverse of OFDM
/// synthesis up to floating point.
pub fn ofdm_demodulate(config: &WaveformConfig, signal: &ComplexSignal) -> Result<SymbolGrid> {
    if config.kind() != WaveformKind::Ofdm {
        return Err(CoexError::InvalidParameter(
            "ofdm_demodulate expects an ofdm config".into(),
        ));
    }
    let m = config.subcarriers();
    let cp = config.cp_samples();
    let sym = m + cp;
    let n_symbols = signal.len() / sym;
    if !signal.len().is_multiple_of(sym) {
        return Err(CoexError::SignalTooShort {
            needed: (n_symbols + 1) * sym,
            got: signal.len(),
        });
    }
    let x = signal.samples();
    let mut grid = SymbolGrid::zeros(n_symbols, m);
    for n in 0..n_symbols {
        let useful = &x[n * sym + cp..(n + 1) * sym];
        for sc in 0..m {
            let w = unit_phasor(-(sc as f64) / m as f64);
            let mut u = Complex64::new(1.0, 0.0);
            let mut acc = Complex64::ZERO;
            for &s in useful {
                acc += s * u;
                u *= w;
            }
            grid.set(n, sc, acc)?;
        }
    }
    Ok(grid)
}

/// Reference OQAM receiver: matched filter per (symbol, subcarrier) atom
/// followed by a real projection.
///
/// Cross terms between atoms whose index parity (symbol + subcarrier)
/// differs are purely imaginary by construction, so they vanish under
/// the real projection. Even-parity neighbours leave the pulse's
/// intrinsic near-perfect-reconstruction residual, about 2e-4 per term
/// (-65 dB total per symbol for the overlap-4 pulse), which bounds how
/// well the real parts can match the transmitted PAM grid.
pub fn oqam_demodulate_real(
    config: &WaveformConfig,
    signal: &ComplexSignal,
    n_symbols: usize,
) -> Result<SymbolGrid> {
    if config.kind() != WaveformKind::Oqam {
        return Err(CoexError::InvalidParameter(
            "oqam_demodulate_real expects an oqam config".into(),
        ));
    }
    let needed = synthesized_len(config, n_symbols);
    if signal.len() < needed {
        return Err(CoexError::SignalTooShort {
            needed,
            got: signal.len(),
        });
    }
    let m = config.subcarriers();
    let k = config.overlap_factor();
    let g = config.filter().expect("oqam always has a filter").taps();
    let half = m / 2;
    let center = (k * m - 1) as f64 / 2.0;
    let x = signal.samples();
    let mut grid = SymbolGrid::zeros(n_symbols, m);
    for n in 0..n_symbols {
        let start = n * half;
        for sc in 0..m {
            let theta = quarter_turn(sc + n);
            let w = unit_phasor(-(sc as f64) / m as f64);
            let mut u = unit_phasor(-(start as f64 - center) * sc as f64 / m as f64);
            let mut acc = Complex64::ZERO;
            for (t, &tap) in g.iter().enumerate() {
                acc += x[start + t] * tap * u;
                u *= w;
            }
            grid.set(n, sc, Complex64::new((acc * theta.conj()).re, 0.0))?;
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qpsk_grid(kind: WaveformKind, n: usize, m: usize, seed: u64) -> SymbolGrid {
        let syms = random_symbols(kind, n * m, seed);
        let mut g = SymbolGrid::zeros(n, m);
        for row in 0..n {
            for col in 0..m {
                g.set(row, col, syms[row * m + col]).unwrap();
            }
        }
        g
    }

    #[test]
    fn presets_match_expected_geometry() {
        let spacing = 15_000.0;
        let ofdm = WaveformConfig::preset(WaveformKind::Ofdm, 180, 12, spacing).unwrap();
        assert_eq!(ofdm.samples_per_symbol(), 180);
        assert_eq!(ofdm.cp_samples(), 12);
        assert!(ofdm.filter().is_none());

        let fmt = WaveformConfig::preset(WaveformKind::Fmt, 180, 12, spacing).unwrap();
        assert_eq!(fmt.samples_per_symbol(), 192);
        assert_eq!(fmt.cp_samples(), 0);
        assert_eq!(fmt.filter().unwrap().len(), 6 * 192);

        let oqam = WaveformConfig::preset(WaveformKind::Oqam, 180, 12, spacing).unwrap();
        assert_eq!(oqam.filter().unwrap().len(), 720);

        let lapped = WaveformConfig::preset(WaveformKind::Lapped, 180, 12, spacing).unwrap();
        assert_eq!(lapped.filter().unwrap().len(), 360);

        let gfdm = WaveformConfig::preset(WaveformKind::Gfdm, 180, 12, spacing).unwrap();
        assert_eq!(gfdm.filter().unwrap().len(), 900);
        assert_eq!(gfdm.block_symbols(), 5);
        assert_eq!(gfdm.cp_samples(), 12);
    }

    #[test]
    fn ofdm_single_tone_is_constant_amplitude_with_cp() {
        let cfg = WaveformConfig::preset(WaveformKind::Ofdm, 16, 4, 15_000.0).unwrap();
        let grid = SymbolGrid::one_hot(1, 16, 0, 3, Complex64::new(1.0, 0.0)).unwrap();
        let sig = synthesize(&cfg, &grid).unwrap();
        assert_eq!(sig.len(), 20);
        let amp = sig.samples()[4].norm();
        for s in sig.samples() {
            assert!((s.norm() - amp).abs() < 1e-12);
        }
        // Prefix repeats the useful tail.
        for j in 0..4 {
            let d = sig.samples()[j] - sig.samples()[16 + j];
            assert!(d.norm() < 1e-12);
        }
    }

    #[test]
    fn fmt_degenerate_single_tone_is_the_filter() {
        // One subcarrier, one symbol: the stream is the pulse itself.
        let params = WaveformParams {
            kind: WaveformKind::Fmt,
            subcarriers: 1,
            samples_per_symbol: 4,
            cp_samples: 0,
            overlap_factor: 3,
            block_symbols: 1,
            rolloff: Some(0.2),
            lapped_variant: SineVariant::default(),
            subcarrier_spacing_hz: 15_000.0,
        };
        let cfg = params.build().unwrap();
        let grid = SymbolGrid::one_hot(1, 1, 0, 0, Complex64::new(1.0, 0.0)).unwrap();
        let sig = synthesize(&cfg, &grid).unwrap();
        let taps = cfg.filter().unwrap().taps();
        assert_eq!(sig.len(), taps.len());
        for (s, &t) in sig.samples().iter().zip(taps.iter()) {
            assert!((s.re - t).abs() < 1e-12 && s.im.abs() < 1e-12);
        }
    }

    #[test]
    fn synthesized_lengths() {
        let spacing = 15_000.0;
        let cases = [
            (WaveformKind::Ofdm, 10, 10 * 192),
            (WaveformKind::Fmt, 10, (10 + 5) * 192),
            (WaveformKind::Oqam, 10, (10 + 7) * 90),
            (WaveformKind::Lapped, 10, 11 * 180),
            (WaveformKind::Gfdm, 10, 2 * (900 + 12)),
        ];
        for (kind, n, want) in cases {
            let cfg = WaveformConfig::preset(kind, 180, 12, spacing).unwrap();
            assert_eq!(synthesized_len(&cfg, n), want, "{kind}");
            let grid = qpsk_grid(kind, n, 180, 7);
            let sig = synthesize(&cfg, &grid).unwrap();
            assert_eq!(sig.len(), want, "{kind}");
        }
    }

    #[test]
    fn gfdm_rejects_partial_blocks() {
        let cfg = WaveformConfig::preset(WaveformKind::Gfdm, 180, 12, 15_000.0).unwrap();
        let grid = SymbolGrid::zeros(7, 180);
        assert!(synthesize(&cfg, &grid).is_err());
    }

    #[test]
    fn oqam_rejects_complex_symbols() {
        let cfg = WaveformConfig::preset(WaveformKind::Oqam, 16, 0, 15_000.0).unwrap();
        let grid =
            SymbolGrid::one_hot(2, 16, 0, 3, Complex64::new(0.5, 0.5)).unwrap();
        assert!(synthesize(&cfg, &grid).is_err());
    }

    #[test]
    fn ofdm_round_trip_recovers_grid() {
        let cfg = WaveformConfig::preset(WaveformKind::Ofdm, 32, 4, 15_000.0).unwrap();
        let grid = qpsk_grid(WaveformKind::Ofdm, 6, 32, 11);
        let sig = synthesize(&cfg, &grid).unwrap();
        let back = ofdm_demodulate(&cfg, &sig).unwrap();
        for n in 0..6 {
            for sc in 0..32 {
                let d = back.get(n, sc) - grid.get(n, sc);
                assert!(d.norm() < 1e-10, "({n},{sc}) error {}", d.norm());
            }
        }
    }

    #[test]
    fn oqam_real_orthogonality() {
        // Recovery is limited by the pulse's near-perfect-reconstruction
        // floor: even-parity cross terms of ~2e-4 each, worst-case sum
        // ~1.9e-3 when symbol signs align.
        let cfg = WaveformConfig::preset(WaveformKind::Oqam, 32, 0, 15_000.0).unwrap();
        let grid = qpsk_grid(WaveformKind::Oqam, 9, 32, 13);
        let sig = synthesize(&cfg, &grid).unwrap();
        let back = oqam_demodulate_real(&cfg, &sig, 9).unwrap();
        for n in 0..9 {
            for sc in 0..32 {
                let err = (back.get(n, sc).re - grid.get(n, sc).re).abs();
                assert!(err < 2e-3, "({n},{sc}) error {err}");
            }
        }
    }

    #[test]
    fn oqam_cross_talk_sits_at_the_pulse_intrinsic_floor() {
        // Transmit one atom and demodulate the whole neighbourhood. Real
        // leakage onto slots of the other index parity must vanish to
        // floating point; the total leakage power must match the
        // overlap-4 pulse's intrinsic -65.2 dB reconstruction residual.
        let m_sc = 32;
        let cfg = WaveformConfig::preset(WaveformKind::Oqam, m_sc, 0, 15_000.0).unwrap();
        let rows = 21;
        let (n0, sc0) = (10, 16);
        let grid =
            SymbolGrid::one_hot(rows, m_sc, n0, sc0, Complex64::new(1.0, 0.0)).unwrap();
        let sig = synthesize(&cfg, &grid).unwrap();
        let back = oqam_demodulate_real(&cfg, &sig, rows).unwrap();
        let mut cross_power = 0.0;
        for n in 0..rows {
            for sc in 0..m_sc {
                let r = back.get(n, sc).re;
                if (n, sc) == (n0, sc0) {
                    assert!((r - 1.0).abs() < 1e-12, "self gain {r}");
                    continue;
                }
                if (n + sc) % 2 != (n0 + sc0) % 2 {
                    assert!(r.abs() < 1e-10, "odd-parity leak at ({n},{sc}): {r}");
                }
                cross_power += r * r;
            }
        }
        let db = 10.0 * cross_power.log10();
        assert!((-66.0..=-64.0).contains(&db), "residual {db} dB");
    }

    #[test]
    fn synthesis_is_linear() {
        let cfg = WaveformConfig::preset(WaveformKind::Fmt, 24, 2, 15_000.0).unwrap();
        let g1 = qpsk_grid(WaveformKind::Fmt, 4, 24, 3);
        let g2 = qpsk_grid(WaveformKind::Fmt, 4, 24, 4);
        let a = Complex64::new(0.3, -1.1);
        let mut combined = SymbolGrid::zeros(4, 24);
        for n in 0..4 {
            for sc in 0..24 {
                combined
                    .set(n, sc, a * g1.get(n, sc) + g2.get(n, sc))
                    .unwrap();
            }
        }
        let s1 = synthesize(&cfg, &g1).unwrap();
        let s2 = synthesize(&cfg, &g2).unwrap();
        let sc = synthesize(&cfg, &combined).unwrap();
        for i in 0..sc.len() {
            let want = a * s1.samples()[i] + s2.samples()[i];
            assert!((sc.samples()[i] - want).norm() < 1e-10);
        }
    }

    #[test]
    fn single_subcarrier_power_is_unit() {
        for kind in WaveformKind::all() {
            let cfg = WaveformConfig::preset(kind, 180, 12, 15_000.0).unwrap();
            let n = if kind == WaveformKind::Gfdm { 10 } else { 11 };
            let symbols = random_symbols(kind, n, 99);
            let sig = single_subcarrier_signal(&cfg, 7, &symbols).unwrap();
            assert!(
                (sig.mean_power() - 1.0).abs() < 1e-9,
                "{kind}: power {}",
                sig.mean_power()
            );
        }
    }

    #[test]
    fn single_subcarrier_zero_symbols_zero_signal() {
        let cfg = WaveformConfig::preset(WaveformKind::Fmt, 180, 12, 15_000.0).unwrap();
        let symbols = vec![Complex64::ZERO; 8];
        let sig = single_subcarrier_signal(&cfg, 0, &symbols).unwrap();
        assert!(sig.samples().iter().all(|s| *s == Complex64::ZERO));
    }

    #[test]
    fn single_subcarrier_rejects_out_of_range() {
        let cfg = WaveformConfig::preset(WaveformKind::Ofdm, 16, 2, 15_000.0).unwrap();
        let symbols = random_symbols(WaveformKind::Ofdm, 4, 1);
        assert!(single_subcarrier_signal(&cfg, 16, &symbols).is_err());
    }

    #[test]
    fn waveform_names_round_trip() {
        for kind in WaveformKind::all() {
            let parsed: WaveformKind = kind.name().parse().unwrap();
            assert_eq!(parsed, kind);
        }
        assert!("dft-s-ofdm".parse::<WaveformKind>().is_err());
    }
}
