//! Figure data assembly: each figure distills the cached interference tables
//! (and the power loading built on them) into a plot-ready CSV string with a
//! header naming the waveform columns, the axis variable and the units.

use std::fmt::Write as _;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::allocation::{omega_factors, AllocationProblem};
use crate::error::{CoexError, Result};
use crate::interference::{BandMap, InterferenceTable, Offset};
use crate::rate::{useful_symbols, ResourceWindow};
use crate::scenario::{run_table, ScenarioConfig};
use crate::waveforms::{WaveformConfig, WaveformKind};
use crate::{db_to_watts, watts_to_db};

/// The figures the scenario runner can emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureId {
    /// Total interference injected on the incumbent band by one active
    /// subcarrier, against timing offset.
    Fig3,
    /// Interference on the 20 nearest incumbent subcarriers against timing
    /// offset, one block per waveform.
    Fig4,
    /// Mean-over-timing interference against subcarrier distance.
    Fig5a,
    /// Maximum-over-timing interference against subcarrier distance.
    Fig5b,
    /// Transmitted bits against window length at a 1 W threshold.
    Fig6a,
    /// Transmitted bits against window length at a 1 mW threshold.
    Fig6b,
    /// Transmitted bits against the interference threshold over one
    /// 14-symbol TTI.
    Fig7,
}

impl FigureId {
    pub fn all() -> [FigureId; 7] {
        [
            FigureId::Fig3,
            FigureId::Fig4,
            FigureId::Fig5a,
            FigureId::Fig5b,
            FigureId::Fig6a,
            FigureId::Fig6b,
            FigureId::Fig7,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5a => "fig5a",
            FigureId::Fig5b => "fig5b",
            FigureId::Fig6a => "fig6a",
            FigureId::Fig6b => "fig6b",
            FigureId::Fig7 => "fig7",
        }
    }
}

impl std::fmt::Display for FigureId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FigureId {
    type Err = CoexError;

    fn from_str(s: &str) -> Result<Self> {
        FigureId::all()
            .into_iter()
            .find(|f| f.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                CoexError::InvalidParameter(format!(
                    "unknown figure '{s}' (expected fig3, fig4, fig5a, fig5b, fig6a, fig6b or fig7)"
                ))
            })
    }
}

/// Assemble the CSV body for one figure, building any missing tables.
pub fn render(config: &ScenarioConfig, figure: FigureId) -> Result<String> {
    match figure {
        FigureId::Fig3 => injected_vs_timing(config),
        FigureId::Fig4 => neighborhood_vs_timing(config),
        FigureId::Fig5a => distance_profile(config, Statistic::Mean),
        FigureId::Fig5b => distance_profile(config, Statistic::Max),
        FigureId::Fig6a => bits_vs_window(config, 1.0),
        FigureId::Fig6b => bits_vs_window(config, 1e-3),
        FigureId::Fig7 => bits_vs_threshold(config),
    }
}

fn all_tables(config: &ScenarioConfig) -> Result<Vec<InterferenceTable>> {
    WaveformKind::all()
        .into_iter()
        .map(|kind| run_table(config, kind, false).map(|(table, _)| table))
        .collect()
}

fn per_kind_header(axis: &str, unit: &str) -> String {
    let mut header = axis.to_string();
    for kind in WaveformKind::all() {
        let _ = write!(header, ",{kind}_{unit}");
    }
    header.push('\n');
    header
}

fn injected_vs_timing(config: &ScenarioConfig) -> Result<String> {
    let tables = all_tables(config)?;
    let band = config.band_map()?;
    let center = band.free()[band.free().len() / 2] as i64;
    let mut out = per_kind_header("delta_t_samples", "db");
    for &dt in &config.offsets.dt_grid() {
        let _ = write!(out, "{dt}");
        for table in &tables {
            let mut injected = 0.0;
            for &l in band.protected() {
                injected += table.shift_lookup(center - l as i64, Offset::new(dt, 0.0))?;
            }
            let _ = write!(out, ",{}", watts_to_db(injected));
        }
        out.push('\n');
    }
    Ok(out)
}

fn neighborhood_vs_timing(config: &ScenarioConfig) -> Result<String> {
    let tables = all_tables(config)?;
    let mut out = String::from("waveform,delta_t_samples,subcarrier_distance,interference_db\n");
    for (kind, table) in WaveformKind::all().into_iter().zip(&tables) {
        for &dt in &config.offsets.dt_grid() {
            for d in -10i64..=10 {
                if d == 0 {
                    continue;
                }
                let value = table.shift_lookup(d, Offset::new(dt, 0.0))?;
                let _ = writeln!(out, "{kind},{dt},{d},{}", watts_to_db(value));
            }
        }
    }
    Ok(out)
}

enum Statistic {
    Mean,
    Max,
}

fn distance_profile(config: &ScenarioConfig, statistic: Statistic) -> Result<String> {
    let tables = all_tables(config)?;
    let dt_grid = config.offsets.dt_grid();
    let mut out = per_kind_header("subcarrier_distance", "db");
    for d in 1i64..=10 {
        let _ = write!(out, "{d}");
        for table in &tables {
            let mut sum = 0.0;
            let mut peak = 0.0f64;
            for &dt in &dt_grid {
                let value = table.shift_lookup(d, Offset::new(dt, 0.0))?;
                sum += value;
                peak = peak.max(value);
            }
            let value = match statistic {
                Statistic::Mean => sum / dt_grid.len() as f64,
                Statistic::Max => peak,
            };
            let _ = write!(out, ",{}", watts_to_db(value));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Per-waveform pieces shared by the throughput figures: the built waveform
/// (for symbol counts) and its leakage weights.
fn throughput_inputs(
    config: &ScenarioConfig,
) -> Result<Vec<(WaveformConfig, Vec<f64>)>> {
    let tables = all_tables(config)?;
    let band: BandMap = config.band_map()?;
    WaveformKind::all()
        .into_iter()
        .zip(&tables)
        .map(|(kind, table)| {
            let waveform = config.waveform_params(kind).build()?;
            let omegas = omega_factors(table, &band)?;
            Ok((waveform, omegas))
        })
        .collect()
}

fn solve_rate(config: &ScenarioConfig, omegas: &[f64], threshold: f64) -> Result<f64> {
    let problem = AllocationProblem::with_uniform_noise(
        omegas.to_vec(),
        config.budgets.noise_watts,
        config.budgets.total_power_watts,
        threshold,
    )?;
    let solution = problem.solve()?;
    Ok(problem.objective(solution.powers()))
}

fn bits_vs_window(config: &ScenarioConfig, threshold: f64) -> Result<String> {
    let inputs = throughput_inputs(config)?;
    // The loading does not depend on the window length, so each waveform
    // solves once and the sweep scales by its symbol count.
    let rates = inputs
        .iter()
        .map(|(_, omegas)| solve_rate(config, omegas, threshold))
        .collect::<Result<Vec<f64>>>()?;
    let row = |free_symbols: usize| -> String {
        let window = ResourceWindow {
            free_symbols,
            free_subcarriers: config.window.free_subcarriers,
        };
        let mut line = format!("{free_symbols}");
        for ((waveform, _), rate) in inputs.iter().zip(&rates) {
            let count = useful_symbols(waveform, &config.incumbent, &window);
            let _ = write!(line, ",{}", count as f64 * rate);
        }
        line.push('\n');
        line
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<String> = (1..=100usize).into_par_iter().map(row).collect();
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<String> = (1..=100usize).map(row).collect();
    let mut out = per_kind_header("free_symbols", "bits");
    out.extend(rows);
    Ok(out)
}

fn bits_vs_threshold(config: &ScenarioConfig) -> Result<String> {
    let inputs = throughput_inputs(config)?;
    // One LTE transmission time interval.
    let window = ResourceWindow {
        free_symbols: 14,
        free_subcarriers: config.window.free_subcarriers,
    };
    let counts: Vec<usize> = inputs
        .iter()
        .map(|(waveform, _)| useful_symbols(waveform, &config.incumbent, &window))
        .collect();
    let row = |threshold_db: f64| -> Result<String> {
        let mut line = format!("{threshold_db}");
        for ((_, omegas), &count) in inputs.iter().zip(&counts) {
            let rate = solve_rate(config, omegas, db_to_watts(threshold_db))?;
            let _ = write!(line, ",{}", count as f64 * rate);
        }
        line.push('\n');
        Ok(line)
    };
    let thresholds: Vec<f64> = (-20..=5).map(|k| (2 * k) as f64).collect();
    #[cfg(feature = "parallel")]
    let rows: Result<Vec<String>> = thresholds.par_iter().map(|&db| row(db)).collect();
    #[cfg(not(feature = "parallel"))]
    let rows: Result<Vec<String>> = thresholds.iter().map(|&db| row(db)).collect();
    let mut out = per_kind_header("interference_threshold_dbw", "bits");
    out.extend(rows?);
    Ok(out)
}
