//! Command line front end: build interference tables, emit figure data, and
//! run power-loading reports from a scenario config.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use coex::figures::FigureId;
use coex::scenario::{run_allocation, run_figure, run_table, ScenarioConfig, WaveformSelection};
use coex::waveforms::WaveformKind;

#[derive(Parser)]
#[command(
    name = "coex",
    version,
    about = "Coexistence simulator for an overlay link sharing an OFDM band: \
             interference tables, figure data and interference-aware power loading"
)]
struct Cli {
    /// Scenario config (TOML); defaults to the shipped lte-15rb preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the configured waveform (ofdm, fmt, oqam, lapped, gfdm).
    #[arg(long, global = true, value_parser = parse_waveform)]
    waveform: Option<WaveformKind>,

    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Write the produced artifact here instead of the configured directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Rebuild cached interference tables even when their metadata matches.
    #[arg(long, global = true)]
    force_rebuild: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build (or reuse) the interference table for the selected waveform.
    Table,
    /// Emit one figure's data as CSV.
    Figure {
        /// fig3, fig4, fig5a, fig5b, fig6a, fig6b or fig7.
        #[arg(long, value_parser = parse_figure)]
        figure: FigureId,
    },
    /// Solve the power loading and write a JSON report.
    Allocate,
}

fn parse_waveform(s: &str) -> std::result::Result<WaveformKind, String> {
    s.parse().map_err(|e: coex::error::CoexError| e.to_string())
}

fn parse_figure(s: &str) -> std::result::Result<FigureId, String> {
    s.parse().map_err(|e: coex::error::CoexError| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(message) => {
            println!("{message}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<String> {
    let mut config = match &cli.config {
        Some(path) => ScenarioConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => ScenarioConfig::lte_15rb(),
    };
    if let Some(kind) = cli.waveform {
        if config.waveform.kind != kind {
            config.waveform = WaveformSelection::preset(kind);
        }
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }

    match cli.command {
        Command::Table => {
            let kind = config.waveform.kind;
            let (table, cache_path) = run_table(&config, kind, cli.force_rebuild)?;
            let path = match &cli.out {
                Some(out) => {
                    if let Some(parent) = out.parent() {
                        if !parent.as_os_str().is_empty() {
                            fs::create_dir_all(parent)
                                .with_context(|| format!("creating {}", parent.display()))?;
                        }
                    }
                    table.save(out)?;
                    out.clone()
                }
                None => cache_path,
            };
            Ok(format!(
                "{} table: {} distances x {} timing x {} frequency offsets -> {}",
                kind,
                table.distances.len(),
                table.dt_grid.len(),
                table.df_grid.len(),
                path.display()
            ))
        }
        Command::Figure { figure } => {
            if cli.force_rebuild {
                for kind in WaveformKind::all() {
                    run_table(&config, kind, true)?;
                }
            }
            let path = run_figure(&config, figure, cli.out.as_deref())?;
            Ok(format!("{figure} data -> {}", path.display()))
        }
        Command::Allocate => {
            if cli.force_rebuild {
                run_table(&config, config.waveform.kind, true)?;
            }
            let (report, path) = run_allocation(&config, cli.out.as_deref())?;
            Ok(format!(
                "{}: {:.1} bits over {} symbols (power {:.1}%, interference {:.1}%) -> {}",
                report.waveform,
                report.total_bits,
                report.useful_symbols,
                100.0 * report.power_utilization,
                100.0 * report.interference_utilization,
                path.display()
            ))
        }
    }
}
