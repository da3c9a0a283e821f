//! Command-line front end: generate, simulate, estimate and analyse
//! channel soundings.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use uacsound::config::{preset_names, RunConfig, Settings};
use uacsound::estimator::tvir_from_tvfr;
use uacsound::io::archive::{self, tvfr_header, tvir_header, Manifest, ManifestEntry};
use uacsound::io::tables;
use uacsound::io::RecordingBundle;
use uacsound::pipeline;

const SOUNDING: &str = "sounding";
const RECEIVED: &str = "received";
const TVFR_FILE: &str = "tvfr.bin";
const TVIR_FILE: &str = "tvir.bin";

#[derive(Parser)]
#[command(
    name = "uacsound",
    version,
    about = "Wideband underwater acoustic channel sounding toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat TOML file of setting overrides.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Named scenario; repeat with `report` to select channels.
    #[arg(long, global = true, value_name = "NAME", value_parser = preset_parser())]
    preset: Vec<String>,
    /// Input file of the stage.
    #[arg(long, global = true, value_name = "PATH")]
    input: Option<PathBuf>,
}

fn preset_parser() -> clap::builder::PossibleValuesParser {
    clap::builder::PossibleValuesParser::new(preset_names())
}

#[derive(Subcommand)]
enum Command {
    /// Write the sounding waveform bundle.
    Generate,
    /// Pass a sounding bundle (or a freshly generated one) through the channel.
    Simulate,
    /// Estimate the frequency and impulse responses of a received bundle.
    Estimate,
    /// Correlations, spectra and channel parameters of a response archive.
    Characterize,
    /// Per-path decomposition and parameters of a response archive.
    Paths,
    /// Rician fit of the gain statistics of a response archive.
    FitRician,
    /// Global and per-path tables over one or more simulated channels.
    Report,
}

fn settings(cli: &Cli, preset: Option<&str>) -> Result<Settings> {
    let (mut cfg, base) = match &cli.config {
        Some(p) => (
            RunConfig::load(p)?,
            p.parent().map(Path::to_path_buf).unwrap_or_default(),
        ),
        None => (RunConfig::default(), PathBuf::from(".")),
    };
    if let Some(p) = preset {
        cfg.preset = Some(p.to_string());
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    Ok(Settings::resolve(&cfg, &base)?)
}

fn input(cli: &Cli, default: &str) -> PathBuf {
    cli.input.clone().unwrap_or_else(|| cli.out.join(default))
}

fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn run(cli: &Cli) -> Result<()> {
    let s = settings(cli, cli.preset.first().map(String::as_str))?;
    create_out(&cli.out)?;
    let out = &cli.out;
    match cli.command {
        Command::Generate => {
            let wav = pipeline::generate(&s)?.write(out, SOUNDING)?;
            println!("{}", wav.display());
        }
        Command::Simulate => {
            let tx = match &cli.input {
                Some(p) => RecordingBundle::read(p)?,
                None => pipeline::generate(&s)?,
            };
            let wav = pipeline::simulate(&tx, &s)?.write(out, RECEIVED)?;
            println!("{}", wav.display());
        }
        Command::Estimate => {
            let rx = RecordingBundle::read(&input(cli, &format!("{RECEIVED}.wav")))?;
            let e = pipeline::estimate(&rx.waveform, &rx.meta.sounding, &s)?;
            archive::write_tvfr(&out.join(TVFR_FILE), &e.tvfr)?;
            let tvir = tvir_from_tvfr(&e.tvfr, s.compensation.zero_pad)?;
            archive::write_tvir(&out.join(TVIR_FILE), &tvir)?;
            Manifest {
                files: vec![
                    ManifestEntry {
                        file: TVFR_FILE.into(),
                        header: tvfr_header(&e.tvfr),
                    },
                    ManifestEntry {
                        file: TVIR_FILE.into(),
                        header: tvir_header(&tvir),
                    },
                ],
            }
            .write(&out.join("manifest.toml"))?;
            if let Some(track) = &e.track {
                tables::write_delay_track(&out.join("delay_track.csv"), track)?;
            }
        }
        Command::Characterize => {
            let h = archive::read_tvfr(&input(cli, TVFR_FILE))?;
            let g = pipeline::analyze(&h, &s)?;
            let c = &g.characterization;
            tables::write_correlation(
                &out.join("time_correlation.csv"),
                "lag_s",
                &c.time_correlation,
            )?;
            tables::write_correlation(
                &out.join("freq_correlation.csv"),
                "lag_hz",
                &c.freq_correlation,
            )?;
            tables::write_profile(
                &out.join("doppler_spectrum.csv"),
                "doppler_hz",
                "power",
                &c.doppler,
            )?;
            tables::write_profile(&out.join("delay_profile.csv"), "delay_s", "power", &c.delay)?;
            tables::write_params(&out.join("params.csv"), &c.params, g.bandwidth)?;
        }
        Command::Paths => {
            let h = archive::read_tvfr(&input(cli, TVFR_FILE))?;
            let (d, reports) = pipeline::analyze_paths(&h, &s)?;
            tables::write_path_reports(&out.join("paths.csv"), &reports)?;
            tables::write_path_windows(&out.join("path_windows.csv"), &d)?;
            for (i, p) in d.paths.iter().enumerate() {
                archive::write_tvfr(&out.join(format!("path{}_tvfr.bin", i + 1)), &p.tvfr)?;
            }
        }
        Command::FitRician => {
            let h = archive::read_tvfr(&input(cli, TVFR_FILE))?;
            let fit = pipeline::analyze(&h, &s)?.fit;
            tables::write_fit(&out.join("rician_fit.csv"), &fit)?;
            tables::write_histogram(&out.join("rician_histogram.csv"), &fit)?;
        }
        Command::Report => {
            let names: Vec<String> = if cli.preset.is_empty() {
                preset_names()
                    .into_iter()
                    .filter(|n| n.starts_with("paper-ch"))
                    .collect()
            } else {
                cli.preset.clone()
            };
            let channels = names
                .iter()
                .map(|n| {
                    let label = n.strip_prefix("paper-ch").unwrap_or(n).to_string();
                    Ok((label, settings(cli, Some(n))?))
                })
                .collect::<Result<Vec<_>>>()?;
            let rows = pipeline::report(&channels)?;
            tables::write_global_table(&out.join("table2_global.csv"), &rows)?;
            tables::write_path_coherence_time(&out.join("table3_path_coherence_time.csv"), &rows)?;
            tables::write_path_coherence_bandwidth(
                &out.join("table4_path_coherence_bandwidth.csv"),
                &rows,
            )?;
            tables::write_path_k(&out.join("table5_path_k.csv"), &rows)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
