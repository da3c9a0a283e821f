//! Periodic multitone sounding signals with Zadoff-Chu tone phases.
//!
//! The probe is `x[n] = sum_k cos(2 pi k df n / fs + psi_k)` for tone indices
//! `k1..=kN`. Tone `k` takes the phase of Zadoff-Chu element
//! `(k - k1) mod n_zc`, which keeps the crest factor of the sum low.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dsp::{as_integer, gcd};
use crate::error::{Error, Result};
use crate::par;
use crate::waveform::Waveform;

/// Sounding-signal parameters shared by the transmitter and the estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundingConfig {
    /// Tone spacing in Hz; also the inverse of the signal period.
    pub delta_f: f64,
    /// First tone index.
    pub k1: usize,
    /// Last tone index (inclusive).
    pub k_n: usize,
    pub n_zc: usize,
    pub u: usize,
    /// Sample rate in Hz.
    pub fs: f64,
    /// Record length in seconds.
    pub duration: f64,
}

impl Default for SoundingConfig {
    /// 97 tones at 1 kHz spacing covering 32-128 kHz, sampled at 1 MHz.
    fn default() -> Self {
        Self {
            delta_f: 1000.0,
            k1: 32,
            k_n: 128,
            n_zc: 97,
            u: 3,
            fs: 1.0e6,
            duration: 1.0,
        }
    }
}

impl SoundingConfig {
    /// The parameter set as printed for the sea campaign (333.3 Hz spacing,
    /// tones 98..=194). It spans roughly 32.7-64.7 kHz rather than the full
    /// 32-128 kHz band; kept for reference. Sampled at 999.9 kHz so one
    /// period is exactly 3000 samples.
    pub fn paper_stated() -> Self {
        Self {
            delta_f: 333.3,
            k1: 98,
            k_n: 194,
            n_zc: 97,
            u: 3,
            fs: 999_900.0,
            duration: 1.0,
        }
    }

    /// A 16.8 ms period probe covering 32-128 kHz, sampled at 300 kHz so the
    /// period is an integer 5040 samples. 1613 tones, prime-length sequence.
    pub fn campaign() -> Self {
        Self {
            delta_f: 300_000.0 / 5040.0,
            k1: 538,
            k_n: 2150,
            n_zc: 1613,
            u: 3,
            fs: 300_000.0,
            duration: 10.0,
        }
    }

    /// 250 Hz spacing (4 ms delay window) over 32-128 kHz at 1 MHz.
    pub fn fine() -> Self {
        Self {
            delta_f: 250.0,
            k1: 128,
            k_n: 512,
            n_zc: 389,
            u: 3,
            fs: 1.0e6,
            duration: 1.0,
        }
    }

    pub fn with_duration(mut self, duration: f64) -> Self {
        self.duration = duration;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_f > 0.0 && self.delta_f.is_finite()) {
            return Err(Error::Config(format!(
                "delta_f must be positive, got {}",
                self.delta_f
            )));
        }
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return Err(Error::Config(format!(
                "fs must be positive, got {}",
                self.fs
            )));
        }
        if self.k1 > self.k_n {
            return Err(Error::Config(format!(
                "k1 = {} exceeds kN = {}",
                self.k1, self.k_n
            )));
        }
        if self.n_zc == 0 || self.u == 0 {
            return Err(Error::Config("n_zc and u must be positive".into()));
        }
        if self.n_tones() > self.n_zc {
            return Err(Error::Config(format!(
                "{} tones exceed the Zadoff-Chu length {}",
                self.n_tones(),
                self.n_zc
            )));
        }
        if gcd(self.u, self.n_zc) != 1 {
            return Err(Error::InvalidRoot {
                n_zc: self.n_zc,
                u: self.u,
            });
        }
        if self.k_n as f64 * self.delta_f >= self.fs / 2.0 {
            return Err(Error::Config(format!(
                "highest tone {} Hz violates Nyquist for fs = {} Hz",
                self.k_n as f64 * self.delta_f,
                self.fs
            )));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::Config(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        Ok(())
    }

    pub fn n_tones(&self) -> usize {
        self.k_n + 1 - self.k1
    }

    pub fn tone_indices(&self) -> impl Iterator<Item = usize> {
        self.k1..=self.k_n
    }

    pub fn tone_freqs(&self) -> Vec<f64> {
        self.tone_indices()
            .map(|k| k as f64 * self.delta_f)
            .collect()
    }

    /// Signal period in samples when `fs / delta_f` is an integer.
    pub fn period_samples(&self) -> Option<usize> {
        as_integer(self.fs / self.delta_f, 1e-9)
    }

    /// `fs / delta_f`, the (possibly fractional) period in samples.
    pub fn samples_per_period(&self) -> f64 {
        self.fs / self.delta_f
    }

    pub fn n_samples(&self) -> usize {
        (self.duration * self.fs).round().max(1.0) as usize
    }

    /// Tone phases `psi_k` for `k = k1..=kN`, in tone order.
    pub fn phases(&self) -> Result<Vec<f64>> {
        let zc = zadoff_chu(self.n_zc, self.u)?;
        Ok(self
            .tone_indices()
            .map(|k| zc.values[(k - self.k1) % self.n_zc].arg())
            .collect())
    }
}

/// An ordered sequence of complex values.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSequence {
    pub values: Vec<Complex64>,
}

/// Zadoff-Chu sequence `exp(-j pi u k (k + c) / n_zc)`, `k = 0..n_zc`, with
/// `c = n_zc mod 2`. For even lengths this is the `k^2` form; odd lengths need
/// the `k (k + 1)` form for the sequence to be periodic in `n_zc` and for its
/// DFT to keep a constant envelope.
pub fn zadoff_chu(n_zc: usize, u: usize) -> Result<ComplexSequence> {
    if n_zc == 0 || u == 0 || gcd(u, n_zc) != 1 {
        return Err(Error::InvalidRoot { n_zc, u });
    }
    // Reduce the exponent modulo 2 n_zc in integers so the phase stays exact
    // for long sequences.
    let modulus = 2 * n_zc as u128;
    let c = n_zc as u128 % 2;
    let values = (0..n_zc as u128)
        .map(|k| {
            let r = (u as u128 * k * (k + c)) % modulus;
            Complex64::from_polar(1.0, -PI * r as f64 / n_zc as f64)
        })
        .collect();
    Ok(ComplexSequence { values })
}

/// Synthesizes the Zadoff-Chu multitone described by `config`.
pub fn synthesize_multitone(config: &SoundingConfig) -> Result<Waveform> {
    config.validate()?;
    let phases = config.phases()?;
    synthesize_with_phases(config, &phases)
}

/// Synthesizes the multitone with caller-supplied tone phases (one per tone,
/// tone order). Used for comparisons such as the zero-phase crest factor.
pub fn synthesize_with_phases(config: &SoundingConfig, phases: &[f64]) -> Result<Waveform> {
    config.validate()?;
    if phases.len() != config.n_tones() {
        return Err(Error::Config(format!(
            "expected {} phases, got {}",
            config.n_tones(),
            phases.len()
        )));
    }
    if config.duration * config.delta_f < 1.0 - 1e-9 {
        return Err(Error::Config(
            "duration shorter than one period 1/delta_f".into(),
        ));
    }
    let n = config.n_samples();
    let samples = match config.period_samples() {
        Some(p) => {
            let period = one_period(config, phases, p);
            (0..n).map(|i| period[i % p]).collect()
        }
        None => direct_sum(config, phases, n),
    };
    Waveform::new(config.fs, samples)
}

/// One period via an inverse FFT: bin `k` carries `exp(j psi_k)`.
fn one_period(config: &SoundingConfig, phases: &[f64], p: usize) -> Vec<f64> {
    let mut bins = vec![Complex64::new(0.0, 0.0); p];
    for (k, &psi) in config.tone_indices().zip(phases) {
        bins[k % p] += Complex64::from_polar(1.0, psi);
    }
    FftPlanner::new().plan_fft_inverse(p).process(&mut bins);
    bins.into_iter().map(|c| c.re).collect()
}

/// Direct evaluation for non-integer periods. Each chunk re-seeds its phasors
/// from closed-form phases so rounding does not accumulate across the record.
fn direct_sum(config: &SoundingConfig, phases: &[f64], n: usize) -> Vec<f64> {
    const CHUNK: usize = 4096;
    let mut out = vec![0.0; n];
    let omegas: Vec<f64> = config
        .tone_indices()
        .map(|k| 2.0 * PI * k as f64 * config.delta_f / config.fs)
        .collect();
    par::for_each_chunk_mut(&mut out, CHUNK, |start, chunk| {
        for (w, &psi) in omegas.iter().zip(phases) {
            let step = Complex64::from_polar(1.0, *w);
            let mut ph = Complex64::from_polar(1.0, w * start as f64 + psi);
            for s in chunk.iter_mut() {
                *s += ph.re;
                ph *= step;
            }
        }
    });
    out
}

/// Peak-to-average power ratio in dB.
pub fn papr(w: &Waveform) -> Result<f64> {
    let peak = w.samples.iter().fold(0.0f64, |m, x| m.max(x * x));
    let mean = w.mean_power();
    if !(mean > 0.0) {
        return Err(Error::UndefinedPapr);
    }
    Ok(10.0 * (peak / mean).log10())
}
