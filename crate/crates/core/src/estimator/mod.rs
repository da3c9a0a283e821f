//! Filter-bank estimation of the time-variant frequency response.
//!
//! Each tone `k` is isolated by the prototype low-pass shifted to `k*delta_f`,
//! sampled every `M` input samples and demodulated by the tone's known phase.
//! Because the prototype spans a whole number of periods `P`, all tones of one
//! output frame come from a single period-folded window and one length-`P`
//! inverse FFT.

mod calibration;
mod filter;
mod transform;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub use calibration::{compensate_transducer, CalibrationCurve};
pub use filter::{design_prototype_filter, PrototypeFilter, DEFAULT_PERIODS, KAISER_BETA};
pub use transform::{tvfr_from_tvir, tvir_from_tvfr};

use crate::error::{Error, Result};
use crate::par;
use crate::response::{Grid, Tvfr};
use crate::signal_gen::SoundingConfig;
use crate::waveform::Waveform;

/// Default decimation `floor(0.9 * fs / delta_f)`.
pub fn default_decimation(config: &SoundingConfig) -> usize {
    ((0.9 * config.samples_per_period()).floor() as usize).max(1)
}

/// A designed filter bank for one sounding configuration.
#[derive(Clone)]
pub struct FilterBank {
    config: SoundingConfig,
    filter: PrototypeFilter,
    decimation: usize,
    phases: Vec<f64>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FilterBank {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FilterBank")
            .field("config", &self.config)
            .field("taps", &self.filter.len())
            .field("decimation", &self.decimation)
            .finish()
    }
}

impl FilterBank {
    pub fn new(config: &SoundingConfig, decimation: usize, n_periods: usize) -> Result<Self> {
        config.validate()?;
        let limit = config.samples_per_period();
        if decimation == 0 {
            return Err(Error::Config("decimation factor must be positive".into()));
        }
        if decimation as f64 >= limit {
            return Err(Error::Aliasing {
                m: decimation,
                limit,
            });
        }
        let filter = design_prototype_filter(config.delta_f, config.fs, n_periods)?;
        let ifft = FftPlanner::new().plan_fft_inverse(filter.period);
        Ok(Self {
            config: config.clone(),
            filter,
            decimation,
            phases: config.phases()?,
            ifft,
        })
    }

    pub fn filter(&self) -> &PrototypeFilter {
        &self.filter
    }

    pub fn decimation(&self) -> usize {
        self.decimation
    }

    pub fn config(&self) -> &SoundingConfig {
        &self.config
    }

    /// Number of complete output frames for an input of `n` samples.
    pub fn frame_count(&self, n: usize) -> usize {
        let l = self.filter.len();
        if n < l {
            0
        } else {
            (n - l) / self.decimation + 1
        }
    }

    /// Input sample index at which frame `m` is taken.
    pub fn frame_sample(&self, m: usize) -> usize {
        self.filter.len() - 1 + m * self.decimation
    }

    /// Time stamp of frame `m`: the centre of its filter window.
    pub fn frame_time(&self, m: usize) -> f64 {
        (self.frame_sample(m) as f64 - self.filter.delay()) / self.config.fs
    }

    pub fn estimate(&self, y: &Waveform) -> Result<Tvfr> {
        if (y.fs - self.config.fs).abs() > 1e-9 * self.config.fs {
            return Err(Error::Config(format!(
                "waveform rate {} Hz differs from sounding rate {} Hz",
                y.fs, self.config.fs
            )));
        }
        let n_frames = self.frame_count(y.len());
        if n_frames == 0 {
            return Err(Error::InsufficientData(format!(
                "{} samples is shorter than the {}-tap prototype",
                y.len(),
                self.filter.len()
            )));
        }
        let p = self.filter.period;
        let taps = &self.filter.taps;
        let ks: Vec<usize> = self.config.tone_indices().collect();
        let x = &y.samples;
        let rows = par::map_range_with(
            n_frames,
            || {
                let scratch_len = self.ifft.get_inplace_scratch_len();
                (
                    vec![Complex64::default(); p],
                    vec![Complex64::default(); scratch_len],
                )
            },
            |(buf, scratch), m| {
                let n = self.frame_sample(m);
                buf.iter_mut().for_each(|v| *v = Complex64::default());
                // w[r] = sum_q g[r + qP] y[n - r - qP]
                for (l, g) in taps.iter().enumerate() {
                    buf[l % p].re += g * x[n - l];
                }
                self.ifft.process_with_scratch(buf, scratch);
                ks.iter()
                    .zip(&self.phases)
                    .map(|(&k, &psi)| {
                        let r = ((k as u128 * n as u128) % p as u128) as f64;
                        let arg = 2.0 * PI * r / p as f64 + psi;
                        2.0 * buf[k % p] * Complex64::from_polar(1.0, -arg)
                    })
                    .collect::<Vec<_>>()
            },
        );
        let times = Grid::new(
            self.frame_time(0),
            self.decimation as f64 / self.config.fs,
            n_frames,
        )?;
        let freqs = Grid::new(
            self.config.k1 as f64 * self.config.delta_f,
            self.config.delta_f,
            ks.len(),
        )?;
        let mut h = Tvfr::new(times, freqs, rows.concat())?;
        h.guard_frames = self.filter.n_periods;
        Ok(h)
    }
}

/// Estimates `H[m][i]` with the default four-period prototype.
pub fn filterbank_estimate(y: &Waveform, config: &SoundingConfig, m: usize) -> Result<Tvfr> {
    FilterBank::new(config, m, DEFAULT_PERIODS)?.estimate(y)
}
