//! Scenario orchestration: one TOML config describes the incumbent, the
//! transmit waveform, the band layout, budgets and offset grids. From it this
//! module builds and caches interference tables, runs the power loading, and
//! emits figure data, so that every artifact is reproducible from
//! `(config, seed)` alone.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::allocation::{omega_factors, AllocationProblem};
use crate::error::{CoexError, Result};
use crate::figures::{self, FigureId};
use crate::filters::SineVariant;
use crate::interference::{build_table, BandMap, IncumbentConfig, InterferenceTable};
use crate::rate::{total_bits, useful_symbols, ResourceWindow};
use crate::waveforms::{WaveformKind, WaveformParams};

/// Transmit waveform choice: a preset name plus optional field overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformSelection {
    pub kind: WaveformKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_per_symbol: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cp_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap_factor: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_symbols: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rolloff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lapped_variant: Option<SineVariant>,
}

impl WaveformSelection {
    pub fn preset(kind: WaveformKind) -> WaveformSelection {
        WaveformSelection {
            kind,
            samples_per_symbol: None,
            cp_samples: None,
            overlap_factor: None,
            block_symbols: None,
            rolloff: None,
            lapped_variant: None,
        }
    }

    fn params(&self, incumbent: &IncumbentConfig) -> WaveformParams {
        let mut params = WaveformParams::preset(
            self.kind,
            incumbent.subcarriers,
            incumbent.cp_samples,
            incumbent.subcarrier_spacing_hz,
        );
        if let Some(v) = self.samples_per_symbol {
            params.samples_per_symbol = v;
        }
        if let Some(v) = self.cp_samples {
            params.cp_samples = v;
        }
        if let Some(v) = self.overlap_factor {
            params.overlap_factor = v;
        }
        if let Some(v) = self.block_symbols {
            params.block_symbols = v;
        }
        if let Some(v) = self.rolloff {
            params.rolloff = Some(v);
        }
        if let Some(v) = self.lapped_variant {
            params.lapped_variant = v;
        }
        params
    }
}

/// Band layout on the incumbent grid: either a centered free band of
/// `free_count` subcarriers, or explicit index lists. Omitted `protected`
/// defaults to the complement of `free`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSection {
    pub total: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protected: Option<Vec<usize>>,
}

impl BandSection {
    pub fn build(&self) -> Result<BandMap> {
        match (&self.free_count, &self.free) {
            (Some(_), Some(_)) => Err(CoexError::InvalidParameter(
                "band accepts either free_count or an explicit free list, not both".into(),
            )),
            (Some(count), None) => {
                if self.protected.is_some() {
                    return Err(CoexError::InvalidParameter(
                        "an explicit protected list requires an explicit free list".into(),
                    ));
                }
                BandMap::centered(self.total, *count)
            }
            (None, Some(free)) => match &self.protected {
                Some(protected) => BandMap::new(self.total, free.clone(), protected.clone()),
                None => {
                    let protected = (0..self.total)
                        .filter(|i| !free.contains(i))
                        .collect();
                    BandMap::new(self.total, free.clone(), protected)
                }
            },
            (None, None) => Err(CoexError::InvalidParameter(
                "band needs free_count or a free list".into(),
            )),
        }
    }
}

/// Power and noise levels in watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    pub total_power_watts: f64,
    pub interference_threshold_watts: f64,
    pub noise_watts: f64,
}

impl Budgets {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("total_power_watts", self.total_power_watts),
            (
                "interference_threshold_watts",
                self.interference_threshold_watts,
            ),
            ("noise_watts", self.noise_watts),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(CoexError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Symmetric offset grids: timing in samples, frequency in subcarrier
/// spacings. Both include zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffsetGrids {
    pub dt_max: i64,
    #[serde(default = "default_dt_step")]
    pub dt_step: i64,
    pub df_max: f64,
    pub df_step: f64,
}

fn default_dt_step() -> i64 {
    1
}

impl OffsetGrids {
    pub fn validate(&self, incumbent: &IncumbentConfig) -> Result<()> {
        if self.dt_max < 0 || self.dt_step < 1 {
            return Err(CoexError::InvalidParameter(format!(
                "timing grid needs dt_max >= 0 and dt_step >= 1, got {} and {}",
                self.dt_max, self.dt_step
            )));
        }
        if self.dt_max > incumbent.max_timing_offset() {
            return Err(CoexError::InvalidParameter(format!(
                "dt_max {} exceeds half a symbol ({} samples)",
                self.dt_max,
                incumbent.max_timing_offset()
            )));
        }
        if !self.df_max.is_finite() || self.df_max < 0.0 || self.df_max > 1.0 {
            return Err(CoexError::InvalidParameter(format!(
                "df_max must sit in [0, 1] subcarrier spacings, got {}",
                self.df_max
            )));
        }
        if !self.df_step.is_finite() || self.df_step <= 0.0 {
            return Err(CoexError::InvalidParameter(format!(
                "df_step must be positive, got {}",
                self.df_step
            )));
        }
        Ok(())
    }

    pub fn dt_grid(&self) -> Vec<i64> {
        let k = self.dt_max / self.dt_step;
        (-k..=k).map(|i| i * self.dt_step).collect()
    }

    pub fn df_grid(&self) -> Vec<f64> {
        let k = (self.df_max / self.df_step + 1e-9).floor() as i64;
        (-k..=k).map(|i| i as f64 * self.df_step).collect()
    }
}

/// Where artifacts land: tables under `<directory>/tables/`, reports and
/// figure data directly under `<directory>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
}

/// Full scenario description; see `presets/lte-15rb.toml` for the shipped
/// default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub incumbent: IncumbentConfig,
    pub waveform: WaveformSelection,
    pub band: BandSection,
    pub window: ResourceWindow,
    pub budgets: Budgets,
    pub offsets: OffsetGrids,
    pub output: OutputSection,
}

fn default_seed() -> u64 {
    7
}

const LTE_15RB: &str = include_str!("../presets/lte-15rb.toml");

impl ScenarioConfig {
    /// The shipped default: 180 incumbent subcarriers (15 LTE resource
    /// blocks), a centered 12-subcarrier free band, a 14-symbol window.
    pub fn lte_15rb() -> ScenarioConfig {
        ScenarioConfig::from_toml_str(LTE_15RB, "presets/lte-15rb.toml")
            .expect("shipped preset parses")
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<ScenarioConfig> {
        let config: ScenarioConfig =
            toml::from_str(text).map_err(|e| CoexError::Malformed {
                path: origin.to_string(),
                detail: e.to_string(),
            })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<ScenarioConfig> {
        let text = fs::read_to_string(path).map_err(|e| CoexError::io(path, e))?;
        ScenarioConfig::from_toml_str(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        self.incumbent.validate()?;
        self.waveform.params(&self.incumbent).build()?;
        if self.band.total != self.incumbent.subcarriers {
            return Err(CoexError::InvalidParameter(format!(
                "band covers {} subcarriers but the incumbent has {}",
                self.band.total, self.incumbent.subcarriers
            )));
        }
        let band = self.band.build()?;
        self.window.validate()?;
        if self.window.free_subcarriers != band.free().len() {
            return Err(CoexError::InvalidParameter(format!(
                "window expects {} free subcarriers but the band frees {}",
                self.window.free_subcarriers,
                band.free().len()
            )));
        }
        self.budgets.validate()?;
        self.offsets.validate(&self.incumbent)?;
        Ok(())
    }

    pub fn band_map(&self) -> Result<BandMap> {
        self.band.build()
    }

    /// Parameters used for `kind`: the configured selection when it matches,
    /// otherwise the plain preset. Figures sweep all five waveforms, so the
    /// four unselected ones always run on presets.
    pub fn waveform_params(&self, kind: WaveformKind) -> WaveformParams {
        if kind == self.waveform.kind {
            self.waveform.params(&self.incumbent)
        } else {
            WaveformParams::preset(
                kind,
                self.incumbent.subcarriers,
                self.incumbent.cp_samples,
                self.incumbent.subcarrier_spacing_hz,
            )
        }
    }

    /// Contiguous subcarrier distances the table must hold: every
    /// free-to-protected separation with a one-subcarrier margin for
    /// frequency-offset folding, and at least +-11 so the neighborhood
    /// figures stay in range.
    pub fn distances(&self) -> Result<Vec<i64>> {
        let band = self.band.build()?;
        let free_min = *band.free().iter().min().expect("non-empty") as i64;
        let free_max = *band.free().iter().max().expect("non-empty") as i64;
        let prot_min = *band.protected().iter().min().expect("non-empty") as i64;
        let prot_max = *band.protected().iter().max().expect("non-empty") as i64;
        let lo = (free_min - prot_max - 1).min(-11);
        let hi = (free_max - prot_min + 1).max(11);
        Ok((lo..=hi).collect())
    }

    pub fn table_path(&self, kind: WaveformKind) -> PathBuf {
        self.output
            .directory
            .join("tables")
            .join(format!("{kind}.json"))
    }
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| CoexError::io(parent, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| CoexError::io(path, e))
}

/// Build (or reuse) the interference table for `kind` under the configured
/// cache directory. A cached file is reused only when its metadata matches
/// the config exactly; `force` rebuilds unconditionally.
pub fn run_table(
    config: &ScenarioConfig,
    kind: WaveformKind,
    force: bool,
) -> Result<(InterferenceTable, PathBuf)> {
    config.validate()?;
    let path = config.table_path(kind);
    let params = config.waveform_params(kind);
    let distances = config.distances()?;
    let dt_grid = config.offsets.dt_grid();
    let df_grid = config.offsets.df_grid();
    if !force && path.exists() {
        if let Ok(table) = InterferenceTable::load(&path) {
            // The seed stamp is provenance, not an input: table values are
            // analytic, so only the geometry and grids decide staleness.
            if table.params == params
                && table.incumbent == config.incumbent
                && table.distances == distances
                && table.dt_grid == dt_grid
                && table.df_grid == df_grid
            {
                return Ok((table, path));
            }
        }
    }
    let waveform = params.build()?;
    let mut table = build_table(&waveform, &config.incumbent, &distances, &dt_grid, &df_grid)?;
    table.seed = config.seed;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CoexError::io(parent, e))?;
    }
    table.save(&path)?;
    Ok((table, path))
}

/// Everything a single allocation run produced, in report order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AllocationReport {
    pub waveform: String,
    pub seed: u64,
    pub free_subcarriers: Vec<usize>,
    pub omega: Vec<f64>,
    pub powers_watts: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub power_budget_watts: f64,
    pub power_used_watts: f64,
    pub power_utilization: f64,
    pub interference_threshold_watts: f64,
    pub interference_injected_watts: f64,
    pub interference_utilization: f64,
    pub kkt_residual: f64,
    pub useful_symbols: usize,
    pub total_bits: f64,
}

/// Solve the configured waveform's power loading and write a JSON report.
pub fn run_allocation(
    config: &ScenarioConfig,
    out: Option<&Path>,
) -> Result<(AllocationReport, PathBuf)> {
    let kind = config.waveform.kind;
    let (table, _) = run_table(config, kind, false)?;
    let band = config.band_map()?;
    let omegas = omega_factors(&table, &band)?;
    let problem = AllocationProblem::with_uniform_noise(
        omegas.clone(),
        config.budgets.noise_watts,
        config.budgets.total_power_watts,
        config.budgets.interference_threshold_watts,
    )?;
    let solution = problem.solve()?;
    let waveform = config.waveform_params(kind).build()?;
    let n_useful = useful_symbols(&waveform, &config.incumbent, &config.window);
    let bits = total_bits(&problem, solution.powers(), n_useful);
    let report = AllocationReport {
        waveform: kind.name().to_string(),
        seed: config.seed,
        free_subcarriers: band.free().to_vec(),
        omega: omegas,
        powers_watts: solution.powers().to_vec(),
        alpha: solution.alpha(),
        beta: solution.beta(),
        power_budget_watts: config.budgets.total_power_watts,
        power_used_watts: problem.power_used(solution.powers()),
        power_utilization: problem.power_used(solution.powers())
            / config.budgets.total_power_watts,
        interference_threshold_watts: config.budgets.interference_threshold_watts,
        interference_injected_watts: problem.interference_used(solution.powers()),
        interference_utilization: problem.interference_used(solution.powers())
            / config.budgets.interference_threshold_watts,
        kkt_residual: problem.kkt_residual(&solution),
        useful_symbols: n_useful,
        total_bits: bits,
    };
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| {
        config
            .output
            .directory
            .join(format!("allocation-{kind}.json"))
    });
    let mut body = serde_json::to_string_pretty(&report).map_err(|e| CoexError::Malformed {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    body.push('\n');
    write_atomically(&path, body.as_bytes())?;
    Ok((report, path))
}

/// Assemble one figure's data and write it as CSV.
pub fn run_figure(
    config: &ScenarioConfig,
    figure: FigureId,
    out: Option<&Path>,
) -> Result<PathBuf> {
    config.validate()?;
    let csv = figures::render(config, figure)?;
    let path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.output.directory.join(format!("{figure}.csv")));
    write_atomically(&path, csv.as_bytes())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_preset_matches_the_documented_defaults() {
        let config = ScenarioConfig::lte_15rb();
        assert_eq!(config.incumbent, IncumbentConfig::default());
        assert_eq!(config.waveform.kind, WaveformKind::Ofdm);
        assert_eq!(config.window, ResourceWindow::new(14, 12).unwrap());
        assert_eq!(config.budgets.total_power_watts, 1.0);
        assert_eq!(config.budgets.interference_threshold_watts, 1e-3);
        assert_eq!(config.budgets.noise_watts, 1e-6);
        let band = config.band_map().unwrap();
        assert_eq!(band.free(), (84..96).collect::<Vec<_>>());
        let dt = config.offsets.dt_grid();
        assert_eq!(dt.len(), 193);
        assert_eq!((dt[0], dt[192]), (-96, 96));
        let df = config.offsets.df_grid();
        assert_eq!(df.len(), 21);
        assert_eq!(df[10], 0.0);
        let distances = config.distances().unwrap();
        assert_eq!(
            (distances[0], *distances.last().unwrap()),
            (-96, 96)
        );
    }

    #[test]
    fn validation_names_the_offending_field() {
        let mut config = ScenarioConfig::lte_15rb();
        config.window.free_subcarriers = 10;
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("10"), "{err}");

        let mut config = ScenarioConfig::lte_15rb();
        config.band.free_count = None;
        config.band.free = Some((84..96).collect());
        config.band.protected = Some((90..180).collect());
        let err = config.validate().unwrap_err();
        match err {
            CoexError::BandOverlap { indices } => {
                assert_eq!(indices, (90..96).collect::<Vec<_>>())
            }
            other => panic!("expected band overlap, got {other}"),
        }

        let mut config = ScenarioConfig::lte_15rb();
        config.offsets.dt_max = 1000;
        assert!(config.validate().is_err());
        let mut config = ScenarioConfig::lte_15rb();
        config.budgets.noise_watts = 0.0;
        assert!(config.validate().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = LTE_15RB.replace("dt_max = 96", "dt_max = 96\nwidth = 3");
        let err = ScenarioConfig::from_toml_str(&text, "inline").unwrap_err();
        assert!(matches!(err, CoexError::Malformed { .. }), "{err}");
    }

    #[test]
    fn table_cache_reuses_and_rebuilds() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = ScenarioConfig::lte_15rb();
        config.incumbent = IncumbentConfig {
            subcarriers: 24,
            cp_samples: 2,
            observe_symbols: 4,
            subcarrier_spacing_hz: 15000.0,
        };
        config.band = BandSection {
            total: 24,
            free_count: Some(4),
            free: None,
            protected: None,
        };
        config.window = ResourceWindow::new(14, 4).unwrap();
        config.offsets = OffsetGrids {
            dt_max: 12,
            dt_step: 6,
            df_max: 1.0,
            df_step: 0.5,
        };
        config.output.directory = dir.path().to_path_buf();
        config.validate().unwrap();

        let (first, path) = run_table(&config, WaveformKind::Fmt, false).unwrap();
        let bytes = fs::read(&path).unwrap();
        let modified = fs::metadata(&path).unwrap().modified().unwrap();

        let (reused, _) = run_table(&config, WaveformKind::Fmt, false).unwrap();
        assert_eq!(reused, first);
        assert_eq!(fs::metadata(&path).unwrap().modified().unwrap(), modified);

        let (forced, _) = run_table(&config, WaveformKind::Fmt, true).unwrap();
        assert_eq!(forced, first);
        assert_eq!(fs::read(&path).unwrap(), bytes);

        config.seed += 1;
        let (same_values, _) = run_table(&config, WaveformKind::Fmt, false).unwrap();
        assert_eq!(same_values, first);
        assert_eq!(fs::read(&path).unwrap(), bytes);

        config.offsets.dt_step = 12;
        let (rebuilt, _) = run_table(&config, WaveformKind::Fmt, false).unwrap();
        assert_eq!(rebuilt.dt_grid, vec![-12, 0, 12]);
        assert_ne!(fs::read(&path).unwrap(), bytes);
    }

    #[test]
    fn explicit_band_defaults_protected_to_the_complement() {
        let mut config = ScenarioConfig::lte_15rb();
        config.band.free_count = None;
        config.band.free = Some((84..96).collect());
        config.band.protected = None;
        let band = config.band_map().unwrap();
        assert_eq!(band.protected().len(), 168);
        assert!(!band.protected().contains(&84));
        assert_eq!(config.validate().map_err(|e| e.to_string()), Ok(()));
    }
}
