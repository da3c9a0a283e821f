//! Low-pass prototype for the tone filter bank.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::{as_integer, kaiser, sinc};
use crate::error::{Error, Result};

/// Kaiser shape parameter of the windowed-sinc prototype.
pub const KAISER_BETA: f64 = 5.25;

/// Default prototype length in sounding periods.
pub const DEFAULT_PERIODS: usize = 4;

/// A real low-pass FIR whose length is an integer number of sounding periods.
///
/// The taps are equalized so that the response vanishes at every nonzero
/// multiple of the tone spacing, which makes adjacent tones invisible to each
/// other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeFilter {
    pub taps: Vec<f64>,
    /// Samples per sounding period.
    pub period: usize,
    pub n_periods: usize,
    pub fs: f64,
    pub delta_f: f64,
    /// Cutoff of the windowed sinc before equalization, Hz.
    pub cutoff: f64,
}

impl PrototypeFilter {
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Group delay in samples.
    pub fn delay(&self) -> f64 {
        (self.taps.len() as f64 - 1.0) / 2.0
    }

    /// Complex frequency response at `f` Hz.
    pub fn response(&self, f: f64) -> Complex64 {
        dtft(&self.taps, f / self.fs)
    }

    /// Magnitude response in dB.
    pub fn response_db(&self, f: f64) -> f64 {
        20.0 * self.response(f).norm().max(1e-300).log10()
    }

    /// Frequency where the magnitude first falls to `1/sqrt(2)`.
    pub fn minus_3db(&self) -> f64 {
        let target = FRAC_1_SQRT_2;
        let (mut lo, mut hi) = (0.0, self.delta_f);
        if self.response(hi).norm() > target {
            return f64::NAN;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.response(mid).norm() > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn dtft(taps: &[f64], nu: f64) -> Complex64 {
    let w = -2.0 * PI * nu;
    taps.iter()
        .enumerate()
        .map(|(n, &g)| Complex64::from_polar(g, w * n as f64))
        .sum()
}

/// Windowed sinc with cutoff `fc`, followed by period-fold equalization.
fn build(fc: f64, fs: f64, period: usize, n_periods: usize) -> Option<Vec<f64>> {
    let len = period * n_periods;
    let window = kaiser(len, KAISER_BETA);
    let centre = (len as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = window
        .iter()
        .enumerate()
        .map(|(n, w)| w * sinc(2.0 * fc / fs * (n as f64 - centre)))
        .collect();
    let mut fold = vec![0.0; period];
    for (n, g) in raw.iter().enumerate() {
        fold[n % period] += g;
    }
    let peak = fold.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if fold.iter().any(|&f| f <= 1e-9 * peak) {
        return None;
    }
    Some(
        raw.iter()
            .enumerate()
            .map(|(n, g)| g / (period as f64 * fold[n % period]))
            .collect(),
    )
}

/// Designs the prototype low-pass: length `n_periods * fs/delta_f`, unit DC
/// gain, -3 dB at `delta_f/2`, zero response at nonzero multiples of
/// `delta_f`.
pub fn design_prototype_filter(delta_f: f64, fs: f64, n_periods: usize) -> Result<PrototypeFilter> {
    if !(delta_f > 0.0 && delta_f.is_finite() && fs.is_finite()) || fs <= 2.0 * delta_f {
        return Err(Error::Config(format!(
            "need fs > 2*delta_f (fs {fs}, delta_f {delta_f})"
        )));
    }
    if n_periods == 0 {
        return Err(Error::Config(
            "prototype must span at least one period".into(),
        ));
    }
    let period = as_integer(fs / delta_f, 1e-9).ok_or_else(|| {
        Error::Design(format!(
            "fs/delta_f = {} is not an integer number of samples",
            fs / delta_f
        ))
    })?;

    let target = FRAC_1_SQRT_2;
    let at_half =
        |fc: f64| build(fc, fs, period, n_periods).map(|g| dtft(&g, 0.5 * delta_f / fs).norm());
    let (mut lo, mut hi) = (0.25 * delta_f, delta_f);
    match (at_half(lo), at_half(hi)) {
        (Some(a), Some(b)) if a < target && b > target => {}
        _ => {
            return Err(Error::Design(format!(
                "{n_periods} period(s) cannot place the -3 dB point at delta_f/2"
            )))
        }
    }
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        match at_half(mid) {
            Some(v) if v < target => lo = mid,
            Some(_) => hi = mid,
            None => return Err(Error::Design("period fold vanished".into())),
        }
    }
    let cutoff = 0.5 * (lo + hi);
    let taps = build(cutoff, fs, period, n_periods)
        .ok_or_else(|| Error::Design("period fold vanished".into()))?;
    let filter = PrototypeFilter {
        taps,
        period,
        n_periods,
        fs,
        delta_f,
        cutoff,
    };

    let f3 = filter.minus_3db();
    if !((f3 - 0.5 * delta_f).abs() <= 0.1 * 0.5 * delta_f) {
        return Err(Error::Design(format!("-3 dB point at {f3} Hz")));
    }
    let stop = filter.response_db(delta_f);
    if stop > -60.0 {
        return Err(Error::Design(format!(
            "response at delta_f is {stop:.1} dB"
        )));
    }
    Ok(filter)
}
