//! Mono 32-bit float WAV files with a TOML sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel_sim::{ChannelSpec, GeometrySpec};
use crate::error::{Error, Result};
use crate::signal_gen::SoundingConfig;
use crate::waveform::Waveform;

fn wav_error(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(source) => Error::io(path, source),
        other => Error::format(path, other.to_string()),
    }
}

/// Writes `w` as a mono IEEE-float WAV. Samples are rounded to `f32` and the
/// sample rate must be a whole number of hertz.
pub fn write_wav(path: &Path, w: &Waveform) -> Result<()> {
    if w.fs.fract() != 0.0 || w.fs > u32::MAX as f64 {
        return Err(Error::format(
            path,
            format!("sample rate {} Hz is not an integer", w.fs),
        ));
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: w.fs as u32,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| wav_error(path, e))?;
    for &s in &w.samples {
        writer
            .write_sample(s as f32)
            .map_err(|e| wav_error(path, e))?;
    }
    writer.finalize().map_err(|e| wav_error(path, e))
}

pub fn read_wav(path: &Path) -> Result<Waveform> {
    let mut reader = hound::WavReader::open(path).map_err(|e| wav_error(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1
        || spec.sample_format != hound::SampleFormat::Float
        || spec.bits_per_sample != 32
    {
        return Err(Error::format(
            path,
            format!(
                "expected mono 32-bit float, found {} channel(s) of {}-bit {:?}",
                spec.channels, spec.bits_per_sample, spec.sample_format
            ),
        ));
    }
    let samples = reader
        .samples::<f32>()
        .map(|s| s.map(f64::from))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| wav_error(path, e))?;
    Waveform::new(spec.sample_rate as f64, samples).map_err(|e| Error::format(path, e.to_string()))
}

/// What a recording holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BundleKind {
    Sounding,
    Received,
}

/// Sidecar metadata of a recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleMeta {
    pub kind: BundleKind,
    pub fs: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub sounding: SoundingConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometrySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelSpec>,
}

/// A waveform file plus its sidecar.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingBundle {
    pub waveform: Waveform,
    pub meta: BundleMeta,
}

/// Sidecar path belonging to a waveform path.
pub fn sidecar_path(wav: &Path) -> PathBuf {
    wav.with_extension("toml")
}

impl RecordingBundle {
    /// Writes `<dir>/<stem>.wav` and `<dir>/<stem>.toml`, returning the
    /// waveform path.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<PathBuf> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let wav = dir.join(format!("{stem}.wav"));
        write_wav(&wav, &self.waveform)?;
        let side = sidecar_path(&wav);
        let text = toml::to_string(&self.meta).map_err(|e| Error::format(&side, e.to_string()))?;
        fs::write(&side, text).map_err(|e| Error::io(&side, e))?;
        Ok(wav)
    }

    /// Reads a waveform and its sidecar, checking that they agree.
    pub fn read(wav: &Path) -> Result<Self> {
        let waveform = read_wav(wav)?;
        let side = sidecar_path(wav);
        let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let meta: BundleMeta =
            toml::from_str(&text).map_err(|e| Error::format(&side, e.message().to_string()))?;
        if meta.fs != waveform.fs {
            return Err(Error::format(
                &side,
                format!(
                    "sidecar rate {} Hz, waveform header {} Hz",
                    meta.fs, waveform.fs
                ),
            ));
        }
        if meta.n_samples != waveform.len() {
            return Err(Error::format(
                &side,
                format!(
                    "sidecar lists {} samples, waveform has {}",
                    meta.n_samples,
                    waveform.len()
                ),
            ));
        }
        if meta.sounding.fs != meta.fs {
            return Err(Error::format(
                &side,
                "sounding rate differs from recording rate",
            ));
        }
        Ok(Self { waveform, meta })
    }
}

/// Rounds every sample to the nearest `f32`, as stored on disk.
pub fn quantize(w: &Waveform) -> Waveform {
    Waveform {
        fs: w.fs,
        samples: w.samples.iter().map(|&s| s as f32 as f64).collect(),
    }
}
