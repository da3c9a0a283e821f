//! Run configuration: named presets plus flat key-value overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel_sim::{campaign_preset, ChannelSpec, GeometrySpec};
use crate::characterize::{CharacterizeOptions, Normalization, Window};
use crate::delay_comp::CompensationOptions;
use crate::error::{Error, Result};
use crate::estimator::CalibrationCurve;
use crate::multipath::{DetectOptions, DEFAULT_GUARD, DEFAULT_TAIL};
use crate::signal_gen::SoundingConfig;
use crate::stats_fit::{FitOptions, DEFAULT_F_SEG, DEFAULT_T_SEG};

/// Delay refinement used for path decomposition.
pub const DEFAULT_PATH_ZERO_PAD: usize = 4;

/// Preset used when none is named.
pub const DEFAULT_PRESET: &str = "identity";

/// Names accepted by [`Settings::from_preset`].
pub fn preset_names() -> Vec<String> {
    std::iter::once(DEFAULT_PRESET.to_string())
        .chain((1..=13).map(|c| format!("paper-ch{c}")))
        .collect()
}

/// Every overridable value; absent keys keep the preset's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub seed: Option<u64>,

    pub delta_f: Option<f64>,
    pub k1: Option<usize>,
    pub k_n: Option<usize>,
    pub n_zc: Option<usize>,
    pub u: Option<usize>,
    pub fs: Option<f64>,
    pub duration: Option<f64>,

    pub snr_db: Option<f64>,
    pub noiseless: Option<bool>,
    pub clock_offset_ppm: Option<f64>,

    pub compensate: Option<bool>,
    pub decimation: Option<usize>,
    pub n_periods: Option<usize>,
    pub zero_pad: Option<usize>,
    pub analysis_zero_pad: Option<usize>,
    pub path_zero_pad: Option<usize>,
    pub calibration: Option<PathBuf>,

    pub coherence_threshold: Option<f64>,
    pub noise_floor_db: Option<f64>,
    pub window: Option<Window>,
    pub normalization: Option<Normalization>,

    pub t_seg: Option<f64>,
    pub f_seg: Option<f64>,
    pub bins: Option<usize>,
    pub min_samples: Option<usize>,

    pub max_paths: Option<usize>,
    pub min_separation: Option<f64>,
    pub min_prominence_db: Option<f64>,
    pub min_rel_level_db: Option<f64>,
    pub guard: Option<f64>,
    pub tail: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::format(origin, e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub preset: String,
    pub seed: u64,
    pub sounding: SoundingConfig,
    pub geometry: Option<GeometrySpec>,
    pub channel: ChannelSpec,
    /// Run the delay-compensation pass before analysis.
    pub compensate: bool,
    pub compensation: CompensationOptions,
    /// Delay zero-pad factor for the global characterization.
    pub analysis_zero_pad: usize,
    /// Delay zero-pad factor for path detection and extraction.
    pub path_zero_pad: usize,
    pub calibration: Option<CalibrationCurve>,
    pub characterize: CharacterizeOptions,
    pub fit: FitOptions,
    pub t_seg: f64,
    pub f_seg: f64,
    pub detect: DetectOptions,
    pub guard: f64,
    pub tail: f64,
}

impl Settings {
    /// `identity`: default probe through a unit channel. `paper-chN`: the
    /// campaign probe through the simulated channel of Table I geometry `N`.
    pub fn from_preset(name: &str, seed: u64) -> Result<Self> {
        let (sounding, geometry, channel) = if name == DEFAULT_PRESET {
            (
                SoundingConfig::default(),
                None,
                ChannelSpec {
                    seed,
                    ..ChannelSpec::identity()
                },
            )
        } else {
            let ch: usize = name
                .strip_prefix("paper-ch")
                .and_then(|n| n.parse().ok())
                .filter(|c| (1..=13).contains(c))
                .ok_or_else(|| {
                    Error::Config(format!(
                        "unknown preset {name:?}; expected one of {}",
                        preset_names().join(", ")
                    ))
                })?;
            (
                SoundingConfig::campaign(),
                Some(GeometrySpec::campaign_channel(ch)?),
                campaign_preset(ch, seed)?,
            )
        };
        Ok(Self {
            preset: name.to_string(),
            seed,
            sounding,
            geometry,
            channel,
            compensate: true,
            compensation: CompensationOptions::default(),
            analysis_zero_pad: 1,
            path_zero_pad: DEFAULT_PATH_ZERO_PAD,
            calibration: None,
            characterize: CharacterizeOptions::default(),
            fit: FitOptions::default(),
            t_seg: DEFAULT_T_SEG,
            f_seg: DEFAULT_F_SEG,
            detect: DetectOptions::default(),
            guard: DEFAULT_GUARD,
            tail: DEFAULT_TAIL,
        })
    }

    /// Applies `cfg` on top of its preset. Relative calibration paths are
    /// taken from `base`.
    pub fn resolve(cfg: &RunConfig, base: &Path) -> Result<Self> {
        let mut s = Self::from_preset(
            cfg.preset.as_deref().unwrap_or(DEFAULT_PRESET),
            cfg.seed.unwrap_or(0),
        )?;
        macro_rules! set {
            ($($src:ident => $($dst:ident).+),* $(,)?) => {
                $(if let Some(v) = cfg.$src.clone() { s.$($dst).+ = v; })*
            };
        }
        set!(
            delta_f => sounding.delta_f, k1 => sounding.k1, k_n => sounding.k_n, n_zc => sounding.n_zc,
            u => sounding.u, fs => sounding.fs, duration => sounding.duration,
            clock_offset_ppm => channel.clock_offset_ppm,
            compensate => compensate, n_periods => compensation.n_periods, zero_pad => compensation.zero_pad,
            analysis_zero_pad => analysis_zero_pad, path_zero_pad => path_zero_pad,
            coherence_threshold => characterize.coherence_threshold,
            noise_floor_db => characterize.noise_floor_db, window => characterize.window,
            normalization => characterize.normalization,
            t_seg => t_seg, f_seg => f_seg, bins => fit.bins, min_samples => fit.min_samples,
            max_paths => detect.max_paths, min_separation => detect.min_separation,
            min_prominence_db => detect.min_prominence_db, min_rel_level_db => detect.min_rel_level_db,
            guard => guard, tail => tail,
        );
        if cfg.decimation.is_some() {
            s.compensation.decimation = cfg.decimation;
        }
        if cfg.snr_db.is_some() {
            s.channel.snr_db = cfg.snr_db;
        }
        if cfg.noiseless == Some(true) {
            s.channel.snr_db = None;
        }
        if let Some(p) = &cfg.calibration {
            let p = if p.is_relative() {
                base.join(p)
            } else {
                p.clone()
            };
            s.calibration = Some(crate::io::tables::read_calibration(&p)?);
        }
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.sounding.validate()?;
        self.channel.validate()?;
        if self.compensation.zero_pad == 0 || self.analysis_zero_pad == 0 || self.path_zero_pad == 0
        {
            return Err(Error::Config("zero-pad factors must be at least 1".into()));
        }
        if !(self.t_seg > 0.0 && self.f_seg > 0.0 && self.guard >= 0.0 && self.tail > 0.0) {
            return Err(Error::Config(
                "segment sizes and path windows must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        for name in preset_names() {
            let s = Settings::from_preset(&name, 3).unwrap();
            s.validate().unwrap();
        }
        assert!(matches!(
            Settings::from_preset("paper-ch14", 0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            Settings::from_preset("nope", 0),
            Err(Error::Config(_))
        ));
        let s = Settings::from_preset("paper-ch8", 3).unwrap();
        assert_eq!(s.channel.paths.len(), 4);
        assert_eq!(s.sounding, SoundingConfig::campaign());
    }

    #[test]
    fn overrides_apply() {
        let text = "preset = \"paper-ch2\"\nseed = 5\nduration = 2.5\ndecimation = 4000\nwindow = \"rectangular\"\n\
                    noiseless = true\nmax_paths = 3\nt_seg = 1.0\n";
        let cfg = RunConfig::parse(text, Path::new("cfg.toml")).unwrap();
        let s = Settings::resolve(&cfg, Path::new(".")).unwrap();
        assert_eq!(s.seed, 5);
        assert_eq!(s.sounding.duration, 2.5);
        assert_eq!(s.compensation.decimation, Some(4000));
        assert_eq!(s.characterize.window, Window::Rectangular);
        assert_eq!(s.channel.snr_db, None);
        assert_eq!(s.detect.max_paths, 3);
        assert_eq!(s.t_seg, 1.0);
        assert_eq!(
            s.channel,
            ChannelSpec {
                snr_db: None,
                ..campaign_preset(2, 5).unwrap()
            }
        );
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(
            RunConfig::parse("speed = 1\n", Path::new("c")),
            Err(Error::Format { .. })
        ));
        assert!(matches!(
            RunConfig::parse("k1 = \"x\"\n", Path::new("c")),
            Err(Error::Format { .. })
        ));
        let cfg = RunConfig {
            n_zc: Some(96),
            ..Default::default()
        };
        assert!(Settings::resolve(&cfg, Path::new(".")).is_err());
        let cfg = RunConfig {
            calibration: Some("missing.csv".into()),
            ..Default::default()
        };
        assert!(matches!(
            Settings::resolve(&cfg, Path::new("/nonexistent")),
            Err(Error::Io { .. })
        ));
    }
}
