//! Ground-truth linear time-variant channel.
//!
//! Each path delays (and optionally shapes) the transmitted waveform and
//! multiplies its analytic signal by a complex modulator `a_p(t)`; the real
//! part of the sum is the received passband signal. A sampling-clock offset
//! is applied afterwards as one global resampling, then white Gaussian noise.

mod fading;
mod fractional;
pub mod geometry;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use fading::FadingProcess;
pub use fractional::SincTable;
pub use geometry::{campaign_preset, geometry_paths, GeometrySpec, PathKind};

use crate::dsp::analytic_signal;
use crate::error::{Error, Result};
use crate::response::{Grid, Tvfr};
use crate::waveform::Waveform;

/// Time variation applied to one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DopplerModel {
    #[default]
    Static,
    /// Constant Doppler shift `nu` Hz.
    DeterministicShift { nu: f64 },
    /// Rician fading with factor `k` and maximum Doppler `doppler_spread` Hz.
    RicianFading {
        k: f64,
        doppler_spread: f64,
        seed: u64,
    },
}

impl DopplerModel {
    fn is_static(&self) -> bool {
        matches!(self, DopplerModel::Static)
    }

    /// Modulator `a(t)` in closed form.
    pub fn modulator(&self) -> Modulator {
        match *self {
            DopplerModel::Static => Modulator::Unit,
            DopplerModel::DeterministicShift { nu } => Modulator::Shift(nu),
            DopplerModel::RicianFading {
                k,
                doppler_spread,
                seed,
            } => Modulator::Fading(Box::new(FadingProcess::new(k, doppler_spread, seed))),
        }
    }
}

/// A realized path modulator.
#[derive(Debug, Clone)]
pub enum Modulator {
    Unit,
    Shift(f64),
    Fading(Box<FadingProcess>),
}

impl Modulator {
    pub fn at(&self, t: f64) -> Complex64 {
        match self {
            Modulator::Unit => Complex64::new(1.0, 0.0),
            Modulator::Shift(nu) => Complex64::from_polar(1.0, 2.0 * PI * nu * t),
            Modulator::Fading(f) => f.at(t),
        }
    }

    fn sample(&self, n: usize, fs: f64) -> Vec<Complex64> {
        match self {
            Modulator::Fading(f) => f.sample(n, fs, 1.0),
            _ => crate::par::map_range(n, |i| self.at(i as f64 / fs)),
        }
    }
}

/// One propagation path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    /// Arrival delay in seconds.
    pub delay: f64,
    /// Complex amplitude, serialized as `[re, im]`.
    #[serde(default = "unit_gain")]
    pub gain: Complex64,
    #[serde(default)]
    pub doppler: DopplerModel,
    /// Optional real FIR (taps at the simulation rate) giving the path a
    /// non-flat frequency response.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape_filter: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

fn unit_gain() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

impl PathSpec {
    pub fn new(delay: f64, gain: f64) -> Self {
        Self {
            delay,
            gain: Complex64::new(gain, 0.0),
            doppler: DopplerModel::Static,
            shape_filter: None,
            label: None,
        }
    }

    pub fn with_doppler(mut self, doppler: DopplerModel) -> Self {
        self.doppler = doppler;
        self
    }

    /// Frequency response of the shape filter at `f` Hz for sample rate `fs`.
    pub fn shape_response(&self, f: f64, fs: f64) -> Complex64 {
        match &self.shape_filter {
            None => Complex64::new(1.0, 0.0),
            Some(h) => h
                .iter()
                .enumerate()
                .map(|(n, &c)| c * Complex64::from_polar(1.0, -2.0 * PI * f * n as f64 / fs))
                .sum(),
        }
    }

    fn needs_analytic(&self) -> bool {
        self.gain.im != 0.0 || !self.doppler.is_static()
    }
}

/// A simulated channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub paths: Vec<PathSpec>,
    #[serde(default)]
    pub clock_offset_ppm: f64,
    /// Receiver SNR in dB; `None` is noiseless.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl ChannelSpec {
    /// Single unit path with no delay: output equals input.
    pub fn identity() -> Self {
        Self {
            paths: vec![PathSpec::new(0.0, 1.0)],
            clock_offset_ppm: 0.0,
            snr_db: None,
            seed: 0,
        }
    }

    pub fn from_paths(paths: Vec<PathSpec>) -> Self {
        Self {
            paths,
            clock_offset_ppm: 0.0,
            snr_db: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths.is_empty() {
            return Err(Error::Config("channel needs at least one path".into()));
        }
        for (i, p) in self.paths.iter().enumerate() {
            if !(p.delay.is_finite() && p.delay >= 0.0) {
                return Err(Error::Config(format!(
                    "path {i}: delay must be finite and >= 0"
                )));
            }
            if !(p.gain.re.is_finite() && p.gain.im.is_finite()) {
                return Err(Error::Config(format!("path {i}: gain must be finite")));
            }
            match p.doppler {
                DopplerModel::Static => {}
                DopplerModel::DeterministicShift { nu } if nu.is_finite() => {}
                DopplerModel::RicianFading {
                    k, doppler_spread, ..
                } if k >= 0.0 && doppler_spread > 0.0 => {}
                _ => {
                    return Err(Error::Config(format!(
                        "path {i}: invalid Doppler model {:?}",
                        p.doppler
                    )))
                }
            }
            if let Some(h) = &p.shape_filter {
                if h.is_empty() || h.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Config(format!(
                        "path {i}: shape filter must be non-empty and finite"
                    )));
                }
            }
        }
        if self.paths.windows(2).any(|w| w[1].delay < w[0].delay) {
            return Err(Error::Config("paths must be sorted by delay".into()));
        }
        if !(self.clock_offset_ppm.is_finite() && self.clock_offset_ppm.abs() < 1e5) {
            return Err(Error::Config("clock offset out of range".into()));
        }
        if let Some(s) = self.snr_db {
            if !s.is_finite() {
                return Err(Error::Config("snr_db must be finite".into()));
            }
        }
        Ok(())
    }

    fn clock_ratio(&self) -> f64 {
        1.0 + self.clock_offset_ppm * 1e-6
    }
}

fn fir(x: &[f64], h: &[f64]) -> Vec<f64> {
    crate::par::map_range(x.len(), |n| {
        h.iter()
            .enumerate()
            .take(n + 1)
            .map(|(j, c)| c * x[n - j])
            .sum()
    })
}

fn fir_complex(x: &[Complex64], h: &[f64]) -> Vec<Complex64> {
    crate::par::map_range(x.len(), |n| {
        h.iter()
            .enumerate()
            .take(n + 1)
            .map(|(j, c)| x[n - j] * *c)
            .sum()
    })
}

/// Passes `x` through the channel described by `spec`.
pub fn apply_channel(x: &Waveform, spec: &ChannelSpec) -> Result<Waveform> {
    spec.validate()?;
    if x.is_empty() {
        return Err(Error::Config("input waveform is empty".into()));
    }
    let fs = x.fs;
    let n = x.len();
    let analytic = spec
        .paths
        .iter()
        .any(PathSpec::needs_analytic)
        .then(|| analytic_signal(&x.samples));

    let mut y = vec![0.0; n];
    for path in &spec.paths {
        let d = path.delay * fs;
        let contribution: Vec<f64> = if path.needs_analytic() {
            let za = analytic.as_ref().expect("analytic signal computed");
            let shaped = match &path.shape_filter {
                Some(h) => fir_complex(za, h),
                None => za.clone(),
            };
            let re = fractional::delay_real(&shaped.iter().map(|c| c.re).collect::<Vec<_>>(), d);
            let im = fractional::delay_real(&shaped.iter().map(|c| c.im).collect::<Vec<_>>(), d);
            let a = path.doppler.modulator().sample(n, fs);
            (0..n)
                .map(|i| (path.gain * a[i] * Complex64::new(re[i], im[i])).re)
                .collect()
        } else {
            let shaped = match &path.shape_filter {
                Some(h) => fir(&x.samples, h),
                None => x.samples.clone(),
            };
            let mut delayed = fractional::delay_real(&shaped, d);
            delayed.iter_mut().for_each(|v| *v *= path.gain.re);
            delayed
        };
        y.iter_mut().zip(&contribution).for_each(|(a, b)| *a += b);
    }

    if spec.clock_offset_ppm != 0.0 {
        // The receiver clock runs at fs_nominal / ratio: output sample n sees
        // the channel output at n / ratio.
        let ratio = spec.clock_ratio();
        let table = SincTable::new();
        let src = y;
        y = crate::par::map_range(n, |i| table.eval(&src, i as f64 / ratio));
    }

    if let Some(snr_db) = spec.snr_db {
        let power = y.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
        if sigma > 0.0 {
            let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            y.iter_mut().for_each(|v| *v += normal.sample(&mut rng));
        }
    }
    Waveform::new(fs, y)
}

/// Exact time-variant frequency response of `spec` on the given grids,
/// following the same conventions as the simulator: fading realizations are
/// replayed from their seeds and the clock offset appears as a drifting
/// delay. `fs` is the simulation sample rate (needed for shape filters).
pub fn analytic_tvfr(spec: &ChannelSpec, times: Grid, freqs: Grid, fs: f64) -> Result<Tvfr> {
    spec.validate()?;
    let ratio = spec.clock_ratio();
    let drift = (ratio - 1.0) / ratio;
    let modulators: Vec<Modulator> = spec.paths.iter().map(|p| p.doppler.modulator()).collect();
    let shape: Vec<Vec<Complex64>> = spec
        .paths
        .iter()
        .map(|p| {
            (0..freqs.len)
                .map(|i| p.shape_response(freqs.at(i), fs))
                .collect()
        })
        .collect();
    let rows = crate::par::map_range(times.len, |m| {
        let t = times.at(m);
        let a: Vec<Complex64> = modulators.iter().map(|md| md.at(t / ratio)).collect();
        (0..freqs.len)
            .map(|i| {
                let f = freqs.at(i);
                spec.paths
                    .iter()
                    .enumerate()
                    .map(|(p, path)| {
                        path.gain
                            * shape[p][i]
                            * a[p]
                            * Complex64::from_polar(1.0, -2.0 * PI * f * (path.delay + t * drift))
                    })
                    .sum::<Complex64>()
            })
            .collect::<Vec<_>>()
    });
    Tvfr::new(times, freqs, rows.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_gen::{synthesize_multitone, SoundingConfig};

    fn probe(duration: f64) -> Waveform {
        synthesize_multitone(&SoundingConfig::default().with_duration(duration)).unwrap()
    }

    #[test]
    fn identity_channel() {
        let x = probe(0.01);
        let y = apply_channel(&x, &ChannelSpec::identity()).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn delay_and_gain() {
        let x = probe(0.01);
        let spec = ChannelSpec::from_paths(vec![PathSpec::new(0.0005, 0.5)]);
        let y = apply_channel(&x, &spec).unwrap();
        assert!(y.samples[..500].iter().all(|&v| v == 0.0));
        for n in 500..x.len() {
            assert!((y.samples[n] - 0.5 * x.samples[n - 500]).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_in_input() {
        let x1 = probe(0.004);
        let x2 = Waveform::new(x1.fs, x1.samples.iter().rev().cloned().collect()).unwrap();
        let spec = ChannelSpec {
            paths: vec![
                PathSpec::new(0.0001234, 1.0),
                PathSpec::new(0.0004, 0.3)
                    .with_doppler(DopplerModel::DeterministicShift { nu: 3.0 }),
                PathSpec::new(0.0007, 0.2).with_doppler(DopplerModel::RicianFading {
                    k: 1.0,
                    doppler_spread: 4.0,
                    seed: 5,
                }),
            ],
            clock_offset_ppm: 15.0,
            snr_db: None,
            seed: 0,
        };
        let (a, b) = (1.7, -0.4);
        let mix = Waveform::new(
            x1.fs,
            x1.samples
                .iter()
                .zip(&x2.samples)
                .map(|(p, q)| a * p + b * q)
                .collect(),
        )
        .unwrap();
        let y1 = apply_channel(&x1, &spec).unwrap();
        let y2 = apply_channel(&x2, &spec).unwrap();
        let ym = apply_channel(&mix, &spec).unwrap();
        let scale = ym.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..ym.len() {
            let e = a * y1.samples[i] + b * y2.samples[i];
            assert!((ym.samples[i] - e).abs() <= 1e-9 * scale, "{i}");
        }
    }

    #[test]
    fn unit_path_preserves_energy() {
        let x = probe(1.0);
        let spec = ChannelSpec {
            paths: vec![PathSpec::new(0.0000375, 1.0)],
            clock_offset_ppm: 20.0,
            snr_db: None,
            seed: 0,
        };
        let y = apply_channel(&x, &spec).unwrap();
        let rel = (y.energy() - x.energy()).abs() / x.energy();
        assert!(rel < 1e-3, "{rel}");
    }

    #[test]
    fn noise_hits_requested_snr_and_is_seeded() {
        let x = probe(0.2);
        let mut spec = ChannelSpec::identity();
        spec.snr_db = Some(10.0);
        spec.seed = 11;
        let y = apply_channel(&x, &spec).unwrap();
        let noise: f64 = y
            .samples
            .iter()
            .zip(&x.samples)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let snr = 10.0 * (x.energy() / noise).log10();
        assert!((snr - 10.0).abs() < 0.1, "{snr}");
        assert_eq!(y, apply_channel(&x, &spec).unwrap());
        spec.seed = 12;
        assert_ne!(y, apply_channel(&x, &spec).unwrap());
    }

    #[test]
    fn rejects_invalid_specs() {
        let x = probe(0.001);
        assert!(apply_channel(&x, &ChannelSpec::from_paths(vec![])).is_err());
        let unsorted =
            ChannelSpec::from_paths(vec![PathSpec::new(0.002, 1.0), PathSpec::new(0.001, 1.0)]);
        assert!(apply_channel(&x, &unsorted).is_err());
        let bad = ChannelSpec::from_paths(vec![PathSpec::new(0.0, 1.0).with_doppler(
            DopplerModel::RicianFading {
                k: -1.0,
                doppler_spread: 1.0,
                seed: 0,
            },
        )]);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn analytic_identity_and_single_path() {
        let times = Grid::new(0.0, 0.01, 5).unwrap();
        let freqs = Grid::new(32_000.0, 1000.0, 97).unwrap();
        let h = analytic_tvfr(&ChannelSpec::identity(), times, freqs, 1e6).unwrap();
        assert!(h
            .values
            .iter()
            .all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-15));
        let tau = 0.00123;
        let spec = ChannelSpec::from_paths(vec![PathSpec {
            gain: Complex64::new(0.3, 0.4),
            ..PathSpec::new(tau, 0.0)
        }]);
        let h = analytic_tvfr(&spec, times, freqs, 1e6).unwrap();
        for m in 0..5 {
            for i in 0..97 {
                let e = Complex64::new(0.3, 0.4)
                    * Complex64::from_polar(1.0, -2.0 * PI * freqs.at(i) * tau);
                assert!((h.at(m, i) - e).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let spec = ChannelSpec {
            paths: vec![
                PathSpec::new(0.001, 1.0),
                PathSpec::new(0.002, 0.5).with_doppler(DopplerModel::RicianFading {
                    k: 2.0,
                    doppler_spread: 3.0,
                    seed: 9,
                }),
            ],
            clock_offset_ppm: 20.0,
            snr_db: Some(25.0),
            seed: 4,
        };
        let text = toml::to_string(&spec).unwrap();
        let back: ChannelSpec = toml::from_str(&text).unwrap();
        assert_eq!(spec, back);
    }
}
