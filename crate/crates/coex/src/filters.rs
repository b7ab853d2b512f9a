//! Prototype filter construction.
//!
//! Every constructor returns unit-energy taps: the sum of squared taps is
//! 1 within 1e-12. Keeping the pulse energy fixed means per-subcarrier
//! transmit power is controlled purely by symbol scaling, and interference
//! tables stay comparable across waveforms.
//!
//! Even-length filters are centered on the half-sample between the two
//! middle taps, so `taps[i] == taps[len - 1 - i]` holds exactly; symmetric
//! constructors compute one half and mirror it rather than trusting
//! floating-point trig to be symmetric.

use serde::{Deserialize, Serialize};

use crate::error::{CoexError, Result};

/// Unit-energy pulse with the symbol geometry it was designed for.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeFilter {
    taps: Vec<f64>,
    overlap_factor: usize,
    samples_per_symbol: usize,
}

impl PrototypeFilter {
    fn from_taps(
        mut taps: Vec<f64>,
        overlap_factor: usize,
        samples_per_symbol: usize,
    ) -> Result<Self> {
        let energy: f64 = taps.iter().map(|t| t * t).sum();
        if !(energy.is_finite() && energy > 0.0) {
            return Err(CoexError::InvalidParameter(
                "filter taps have zero or non-finite energy".into(),
            ));
        }
        let scale = 1.0 / energy.sqrt();
        for t in &mut taps {
            *t *= scale;
        }
        Ok(PrototypeFilter {
            taps,
            overlap_factor,
            samples_per_symbol,
        })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Symbols the pulse spans (K).
    pub fn overlap_factor(&self) -> usize {
        self.overlap_factor
    }

    /// Samples per multicarrier symbol the pulse was designed for (P).
    pub fn samples_per_symbol(&self) -> usize {
        self.samples_per_symbol
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum()
    }
}

/// Root-raised-cosine pulse spanning `overlap_factor` symbols of
/// `samples_per_symbol` samples, sampled on the half-sample grid so the
/// result has even symmetry for any length.
///
/// The closed form has two removable singularities, handled by their
/// analytic limits: t = 0 and |t| = 1/(4a) symbol periods for rolloff a.
pub fn rrc_filter(
    rolloff: f64,
    overlap_factor: usize,
    samples_per_symbol: usize,
) -> Result<PrototypeFilter> {
    if !(0.0..=1.0).contains(&rolloff) || !rolloff.is_finite() {
        return Err(CoexError::InvalidParameter(format!(
            "rrc rolloff must lie in [0, 1], got {rolloff}"
        )));
    }
    if overlap_factor == 0 || samples_per_symbol == 0 {
        return Err(CoexError::InvalidParameter(
            "rrc overlap factor and samples per symbol must be positive".into(),
        ));
    }
    let len = overlap_factor * samples_per_symbol;
    let taps = mirrored(len, |i| {
        // Offset from the filter center in symbol periods.
        let t = (i as f64 - (len as f64 - 1.0) / 2.0) / samples_per_symbol as f64;
        rrc_tap(t, rolloff)
    });
    PrototypeFilter::from_taps(taps, overlap_factor, samples_per_symbol)
}

fn rrc_tap(t: f64, a: f64) -> f64 {
    let eps = 1e-9;
    if t.abs() < eps {
        return 1.0 + a * (4.0 / std::f64::consts::PI - 1.0);
    }
    if a > 0.0 && (t.abs() - 1.0 / (4.0 * a)).abs() < eps {
        let x = std::f64::consts::PI / (4.0 * a);
        return (a / 2f64.sqrt())
            * ((1.0 + 2.0 / std::f64::consts::PI) * x.sin()
                + (1.0 - 2.0 / std::f64::consts::PI) * x.cos());
    }
    let pi_t = std::f64::consts::PI * t;
    let num = (pi_t * (1.0 - a)).sin() + 4.0 * a * t * (pi_t * (1.0 + a)).cos();
    let den = pi_t * (1.0 - (4.0 * a * t) * (4.0 * a * t));
    num / den
}

/// PHYDYAS frequency-sampling pulse for overlap factor 4.
///
/// The published coefficient set fixes H1; H2 is 1/sqrt(2) and H3 is
/// derived as sqrt(1 - H1^2) so the Nyquist pairing H_q^2 + H_{4-q}^2 = 1
/// holds to machine precision. That exactness is what makes the OQAM
/// real-field orthogonality test close to 1e-8 rather than to the rounding
/// of a four-digit published constant.
pub fn phydyas_filter(overlap_factor: usize, samples_per_symbol: usize) -> Result<PrototypeFilter> {
    if overlap_factor != 4 {
        return Err(CoexError::InvalidParameter(format!(
            "phydyas pulse is defined here for overlap factor 4, got {overlap_factor}"
        )));
    }
    if samples_per_symbol == 0 {
        return Err(CoexError::InvalidParameter(
            "phydyas samples per symbol must be positive".into(),
        ));
    }
    let h1 = 0.971_960f64;
    let h2 = std::f64::consts::FRAC_1_SQRT_2;
    let h3 = (1.0 - h1 * h1).sqrt();
    let len = overlap_factor * samples_per_symbol;
    let taps = mirrored(len, |i| {
        let x = i as f64 + 0.5 - len as f64 / 2.0;
        let w = std::f64::consts::TAU * x / len as f64;
        1.0 + 2.0 * (h1 * w.cos() + h2 * (2.0 * w).cos() + h3 * (3.0 * w).cos())
    });
    PrototypeFilter::from_taps(taps, overlap_factor, samples_per_symbol)
}

/// Index convention for [`lapped_sine_filter_variant`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SineVariant {
    /// g[k] = sin((k + 1/2) * pi / (2M)): even-symmetric half-sine window.
    #[default]
    Symmetric,
    /// g[k] = -sin((k - 1/2) * pi / (2M)): shifted by one sample, changes
    /// sign at k = 0 and is not symmetric about the window center.
    Shifted,
}

/// Sine window for the lapped filter bank: 2M taps spanning two symbols.
/// Uses the symmetric index convention; see [`lapped_sine_filter_variant`]
/// for the shifted variant.
pub fn lapped_sine_filter(subcarriers: usize) -> Result<PrototypeFilter> {
    lapped_sine_filter_variant(subcarriers, SineVariant::Symmetric)
}

pub fn lapped_sine_filter_variant(
    subcarriers: usize,
    variant: SineVariant,
) -> Result<PrototypeFilter> {
    if subcarriers == 0 {
        return Err(CoexError::InvalidParameter(
            "lapped sine window needs at least one subcarrier".into(),
        ));
    }
    let len = 2 * subcarriers;
    let half = std::f64::consts::PI / (2.0 * subcarriers as f64);
    let taps = match variant {
        SineVariant::Symmetric => mirrored(len, |i| ((i as f64 + 0.5) * half).sin()),
        SineVariant::Shifted => (0..len).map(|i| -((i as f64 - 0.5) * half).sin()).collect(),
    };
    PrototypeFilter::from_taps(taps, 2, subcarriers)
}

/// Periodize a base pulse onto one GFDM block of `block_symbols * subcarriers`
/// samples: taps of the base beyond the block length wrap around and add.
/// A base of exactly the block length is returned unchanged (up to the
/// unit-energy normalization).
pub fn gfdm_circular_filter(
    base: &PrototypeFilter,
    block_symbols: usize,
    subcarriers: usize,
) -> Result<PrototypeFilter> {
    let len = block_symbols * subcarriers;
    if len == 0 {
        return Err(CoexError::InvalidParameter(
            "gfdm block must contain at least one sample".into(),
        ));
    }
    let mut taps = vec![0.0; len];
    for (i, t) in base.taps().iter().enumerate() {
        taps[i % len] += t;
    }
    PrototypeFilter::from_taps(taps, block_symbols, subcarriers)
}

/// Build an even-symmetric tap vector by evaluating `f` on the first half
/// and mirroring, so symmetry holds bit-exactly.
fn mirrored<F: Fn(usize) -> f64>(len: usize, f: F) -> Vec<f64> {
    let mut taps = vec![0.0; len];
    for i in 0..len.div_ceil(2) {
        let v = f(i);
        taps[i] = v;
        taps[len - 1 - i] = v;
    }
    taps
}
