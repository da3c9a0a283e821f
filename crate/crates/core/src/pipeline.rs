//! End-to-end stages shared by the command-line tool and the tests.

use serde::{Deserialize, Serialize};

use crate::channel_sim::apply_channel;
use crate::characterize::{
    bandwidth_estimate, characterize, delay_profile, BandwidthEstimate, ChannelParams,
    Characterization,
};
use crate::config::Settings;
use crate::delay_comp::{compensate_with, DelayTrack};
use crate::error::Result;
use crate::estimator::{compensate_transducer, default_decimation, tvir_from_tvfr, FilterBank};
use crate::io::wav::quantize;
use crate::io::{BundleKind, BundleMeta, RecordingBundle};
use crate::multipath::{
    clamp_segments, decompose_with_windows, default_windows, detect_paths, per_path_report,
    PathDecomposition, PathReport, PathReportOptions,
};
use crate::par;
use crate::response::Tvfr;
use crate::signal_gen::{synthesize_multitone, SoundingConfig};
use crate::stats_fit::{fit_rician, pool, segment_gains, RicianFit};
use crate::waveform::Waveform;

/// Sounding waveform of `s`, rounded to its on-disk precision.
pub fn generate(s: &Settings) -> Result<RecordingBundle> {
    let x = quantize(&synthesize_multitone(&s.sounding)?);
    Ok(RecordingBundle {
        meta: BundleMeta {
            kind: BundleKind::Sounding,
            fs: x.fs,
            n_samples: x.len(),
            seed: s.seed,
            sounding: s.sounding.clone(),
            geometry: s.geometry,
            channel: None,
        },
        waveform: x,
    })
}

/// Passes a sounding recording through the channel of `s`.
pub fn simulate(tx: &RecordingBundle, s: &Settings) -> Result<RecordingBundle> {
    let y = quantize(&apply_channel(&tx.waveform, &s.channel)?);
    Ok(RecordingBundle {
        meta: BundleMeta {
            kind: BundleKind::Received,
            fs: y.fs,
            n_samples: y.len(),
            seed: s.seed,
            sounding: tx.meta.sounding.clone(),
            geometry: s.geometry,
            channel: Some(s.channel.clone()),
        },
        waveform: y,
    })
}

/// Estimated responses of one recording.
#[derive(Debug, Clone)]
pub struct Estimate {
    /// Steady-state frequency response, transducer-compensated when a
    /// calibration curve is set.
    pub tvfr: Tvfr,
    pub track: Option<DelayTrack>,
}

pub fn estimate(y: &Waveform, sounding: &SoundingConfig, s: &Settings) -> Result<Estimate> {
    let (raw, track) = if s.compensate {
        let c = compensate_with(y, sounding, &s.compensation)?;
        (c.tvfr, Some(c.track))
    } else {
        let m = s
            .compensation
            .decimation
            .unwrap_or_else(|| default_decimation(sounding));
        (
            FilterBank::new(sounding, m, s.compensation.n_periods)?.estimate(y)?,
            None,
        )
    };
    let mut tvfr = raw.steady();
    if let Some(cal) = &s.calibration {
        tvfr = compensate_transducer(&tvfr, cal)?;
    }
    Ok(Estimate { tvfr, track })
}

/// Global characterization and gain statistics of one response.
#[derive(Debug, Clone)]
pub struct GlobalAnalysis {
    pub characterization: Characterization,
    pub bandwidth: BandwidthEstimate,
    pub fit: RicianFit,
}

pub fn analyze(tvfr: &Tvfr, s: &Settings) -> Result<GlobalAnalysis> {
    let h = tvir_from_tvfr(tvfr, s.analysis_zero_pad)?;
    let characterization = characterize(&h, tvfr, &s.characterize)?;
    let bandwidth = bandwidth_estimate(&characterization.freq_correlation)?;
    let (t_seg, f_seg) = clamp_segments(tvfr, s.t_seg, s.f_seg);
    let fit = fit_rician(&pool(&segment_gains(tvfr, t_seg, f_seg)?), &s.fit)?;
    Ok(GlobalAnalysis {
        characterization,
        bandwidth,
        fit,
    })
}

/// Detects, extracts and reports the paths of `tvfr`.
pub fn analyze_paths(tvfr: &Tvfr, s: &Settings) -> Result<(PathDecomposition, Vec<PathReport>)> {
    let h = tvir_from_tvfr(tvfr, s.path_zero_pad)?;
    let taus = detect_paths(&delay_profile(&h), &s.detect)?;
    let span = h.delays.step * h.n_delays() as f64;
    let d = decompose_with_windows(&h, &taus, &default_windows(&taus, span, s.guard, s.tail))?;
    let opts = PathReportOptions {
        characterize: s.characterize,
        fit: s.fit,
        t_seg: s.t_seg,
        f_seg: s.f_seg,
    };
    let reports = per_path_report(&d, &opts)?;
    Ok((d, reports))
}

/// One row of the channel report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSummary {
    pub channel: String,
    pub params: ChannelParams,
    pub bandwidth: BandwidthEstimate,
    pub k: f64,
    pub epsilon: f64,
    pub paths: Vec<PathReport>,
}

pub fn summarize(channel: &str, tvfr: &Tvfr, s: &Settings) -> Result<ChannelSummary> {
    let g = analyze(tvfr, s)?;
    let (_, paths) = analyze_paths(tvfr, s)?;
    Ok(ChannelSummary {
        channel: channel.to_string(),
        params: g.characterization.params,
        bandwidth: g.bandwidth,
        k: g.fit.k,
        epsilon: g.fit.epsilon,
        paths,
    })
}

/// Generates, simulates, estimates and summarizes one channel in memory.
pub fn run_channel(channel: &str, s: &Settings) -> Result<ChannelSummary> {
    let rx = simulate(&generate(s)?, s)?;
    let e = estimate(&rx.waveform, &rx.meta.sounding, s)?;
    summarize(channel, &e.tvfr, s)
}

/// [`run_channel`] over several channels; rows keep the input order.
pub fn report(channels: &[(String, Settings)]) -> Result<Vec<ChannelSummary>> {
    par::map_slice(channels, |(name, s)| run_channel(name, s))
        .into_iter()
        .collect()
}
