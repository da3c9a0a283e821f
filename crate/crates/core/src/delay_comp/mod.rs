//! Initial-delay tracking and clock-drift compensation.
//!
//! A first-pass impulse response gives the leading-path delay `tau0(t)` per
//! frame. The received waveform is then resampled so that this delay stays at
//! its initial value, and the responses are estimated again.

mod resampler;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{
    default_decimation, tvfr_from_tvir, tvir_from_tvfr, FilterBank, DEFAULT_PERIODS,
};
use crate::par;
use crate::response::{Grid, Tvfr, Tvir};
use crate::signal_gen::SoundingConfig;
use crate::waveform::Waveform;

use resampler::Interpolator;

/// Required peak-to-median power ratio of a detectable leading path.
pub const DETECTION_DB: f64 = 10.0;
/// Frames in the moving-median smoother.
pub const SMOOTHING_FRAMES: usize = 5;
/// Default frequency-domain zero-padding for delay refinement.
pub const DEFAULT_ZERO_PAD: usize = 16;
/// Half-width, in raw delay bins, of the search window that follows the
/// track from frame to frame.
pub const TRACK_HALF_WIDTH: usize = 8;

/// Leading-path delay per frame and the derived resampling ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayTrack {
    pub times: Grid,
    /// Smoothed, unwrapped leading-path delay, s.
    pub tau0: Vec<f64>,
    /// `1 + d tau0 / dt`.
    pub ratio: Vec<f64>,
    /// Refined delay-bin width, s.
    pub delay_step: f64,
    /// Delay span of the impulse response (one sounding period), s.
    pub span: f64,
}

impl DelayTrack {
    pub fn validate(&self) -> Result<()> {
        if self.tau0.len() != self.times.len || self.ratio.len() != self.times.len {
            return Err(Error::Config("delay track columns differ in length".into()));
        }
        if self.tau0.iter().chain(&self.ratio).any(|v| !v.is_finite())
            || self.ratio.iter().any(|&r| r <= 0.0)
        {
            return Err(Error::Config(
                "delay track must be finite with positive ratio".into(),
            ));
        }
        Ok(())
    }

    /// `tau0` at time `t`, linearly interpolated and extrapolated from the
    /// end segments.
    pub fn tau_at(&self, t: f64) -> f64 {
        let n = self.tau0.len();
        if n == 1 {
            return self.tau0[0];
        }
        let pos = (t - self.times.start) / self.times.step;
        let i = (pos.floor().max(0.0) as usize).min(n - 2);
        let frac = pos - i as f64;
        self.tau0[i] + frac * (self.tau0[i + 1] - self.tau0[i])
    }

    /// Least-squares slope of `tau0` against time.
    pub fn drift_slope(&self) -> f64 {
        let t = self.times.points();
        let n = t.len() as f64;
        let (mt, mv) = (t.iter().sum::<f64>() / n, self.tau0.iter().sum::<f64>() / n);
        let sxy: f64 = t
            .iter()
            .zip(&self.tau0)
            .map(|(a, b)| (a - mt) * (b - mv))
            .sum();
        let sxx: f64 = t.iter().map(|a| (a - mt).powi(2)).sum();
        if sxx == 0.0 {
            0.0
        } else {
            sxy / sxx
        }
    }

    /// RMS deviation of `tau0` from its mean, in refined delay bins.
    pub fn spread_bins(&self) -> f64 {
        let n = self.tau0.len() as f64;
        let mean = self.tau0.iter().sum::<f64>() / n;
        (self.tau0.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt() / self.delay_step
    }
}

/// Strongest bin of the circular window `lo..lo + width`, refined by a
/// parabola through its neighbours. Returns the unwrapped position in bins and
/// whether it clears the detection threshold.
fn window_peak(power: &[f64], lo: isize, width: usize, threshold: f64) -> (f64, bool) {
    let n = power.len() as isize;
    let at = |i: isize| power[i.rem_euclid(n) as usize];
    let mut best = lo;
    for i in lo..lo + width as isize {
        if at(i) > at(best) {
            best = i;
        }
    }
    let (a, b, c) = (at(best - 1).sqrt(), at(best).sqrt(), at(best + 1).sqrt());
    let denom = a - 2.0 * b + c;
    let delta = if denom < 0.0 {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let peak = at(best);
    (best as f64 + delta, peak > 0.0 && peak >= threshold)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn moving_median(v: &[f64], window: usize) -> Vec<f64> {
    let h = window / 2;
    (0..v.len())
        .map(|i| median(v[i.saturating_sub(h)..(i + h + 1).min(v.len())].to_vec()))
        .collect()
}

/// Fills `NaN` gaps by linear interpolation, holding the end values.
fn fill_gaps(v: &mut [f64]) {
    let known: Vec<usize> = (0..v.len()).filter(|&i| v[i].is_finite()).collect();
    for i in 0..v.len() {
        if v[i].is_finite() {
            continue;
        }
        let next = known.partition_point(|&k| k < i);
        v[i] = match (next.checked_sub(1).map(|j| known[j]), known.get(next)) {
            (Some(a), Some(&b)) => v[a] + (v[b] - v[a]) * (i - a) as f64 / (b - a) as f64,
            (Some(a), None) => v[a],
            (None, Some(&b)) => v[b],
            (None, None) => unreachable!("at least one detected frame"),
        };
    }
}

/// Tracks the leading-path delay through `h`, refined to `zero_pad` times the
/// raw delay resolution.
///
/// The first detectable frame is searched over the leading quarter of the
/// delay window; later frames within [`TRACK_HALF_WIDTH`] raw bins of the
/// previous delay, so the track neither hops to a neighbouring arrival nor
/// wraps at the window edge.
pub fn estimate_initial_delay(h: &Tvir, zero_pad: usize) -> Result<DelayTrack> {
    if zero_pad == 0 {
        return Err(Error::Config("zero-pad factor must be at least 1".into()));
    }
    let refined;
    let h = if h.zero_pad == zero_pad {
        h
    } else {
        refined = tvir_from_tvfr(&tvfr_from_tvir(h)?, zero_pad)?;
        &refined
    };
    let len = h.n_delays();
    let width = len.div_ceil(4);
    let follow = (2 * TRACK_HALF_WIDTH * h.zero_pad + 1).min(width);
    let thresholds: Vec<(Vec<f64>, f64)> = par::map_range(h.n_times(), |m| {
        let p: Vec<f64> = h.row(m).iter().map(|v| v.norm_sqr()).collect();
        let t = median(p.clone()) * 10f64.powf(DETECTION_DB / 10.0);
        (p, t)
    });

    let mut raw = vec![f64::NAN; h.n_times()];
    let mut prev: Option<f64> = None;
    for (m, (power, threshold)) in thresholds.iter().enumerate() {
        let (lo, w) = match prev {
            None => (0, width),
            Some(c) => (c.round() as isize - (follow / 2) as isize, follow),
        };
        let (pos, ok) = window_peak(power, lo, w, *threshold);
        if ok {
            raw[m] = pos;
            prev = Some(pos);
        }
    }
    let detected = raw.iter().filter(|v| v.is_finite()).count();
    if detected == 0 || 2 * detected < raw.len() {
        return Err(Error::UndetectablePath(format!(
            "leading path {DETECTION_DB} dB above the median found in {detected} of {} frames",
            raw.len()
        )));
    }
    fill_gaps(&mut raw);
    let step = h.delays.step;
    let tau0: Vec<f64> = moving_median(&raw, SMOOTHING_FRAMES)
        .iter()
        .map(|b| b * step)
        .collect();
    let dt = h.times.step;
    let n = tau0.len();
    let ratio = (0..n)
        .map(|i| {
            if n == 1 {
                return 1.0;
            }
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            1.0 + (tau0[b] - tau0[a]) / ((b - a) as f64 * dt)
        })
        .collect();
    Ok(DelayTrack {
        times: h.times,
        tau0,
        ratio,
        delay_step: step,
        span: step * len as f64,
    })
}

/// Resamples `y` so that its leading-path delay stays at `tau0(0)`: output
/// sample `t` is input at `t + tau0(t) - tau0(0)`.
pub fn resample(y: &Waveform, track: &DelayTrack) -> Result<Waveform> {
    track.validate()?;
    let margin = (3.0 * track.span).max(2.0 * track.times.step);
    let (first, last) = (0.0, (y.len() - 1) as f64 / y.fs);
    if track.times.start - first > margin || last - track.times.end() > margin {
        return Err(Error::Range(format!(
            "delay track covers {:.4}..{:.4} s but the waveform spans {first:.4}..{last:.4} s",
            track.times.start,
            track.times.end()
        )));
    }
    let interp = Interpolator::new();
    let t0 = track.tau_at(0.0);
    let fs = y.fs;
    let mut out = vec![0.0; y.len()];
    par::for_each_chunk_mut(&mut out, 4096, |offset, chunk| {
        for (j, v) in chunk.iter_mut().enumerate() {
            let n = offset + j;
            let t = n as f64 / fs;
            let shift = (track.tau_at(t) - t0) * fs;
            *v = if shift == 0.0 {
                y.samples[n]
            } else {
                interp.eval(&y.samples, n as f64 + shift)
            };
        }
    });
    Waveform::new(fs, out)
}

/// Settings of the two-pass compensation loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompensationOptions {
    /// Decimation factor; `None` uses the estimator default.
    pub decimation: Option<usize>,
    pub n_periods: usize,
    pub zero_pad: usize,
}

impl Default for CompensationOptions {
    fn default() -> Self {
        Self {
            decimation: None,
            n_periods: DEFAULT_PERIODS,
            zero_pad: DEFAULT_ZERO_PAD,
        }
    }
}

/// Output of [`compensate`].
#[derive(Debug, Clone)]
pub struct Compensation {
    /// Compensated frequency response.
    pub tvfr: Tvfr,
    /// Compensated impulse response on the refined delay grid.
    pub tvir: Tvir,
    pub track: DelayTrack,
    pub resampled: Waveform,
    /// Frequency response before compensation.
    pub first_pass: Tvfr,
}

/// Estimate, track the leading delay, resample and estimate again.
pub fn compensate(y: &Waveform, config: &SoundingConfig) -> Result<Compensation> {
    compensate_with(y, config, &CompensationOptions::default())
}

pub fn compensate_with(
    y: &Waveform,
    config: &SoundingConfig,
    opts: &CompensationOptions,
) -> Result<Compensation> {
    let m = opts
        .decimation
        .unwrap_or_else(|| default_decimation(config));
    let bank = FilterBank::new(config, m, opts.n_periods)?;
    let first_pass = bank.estimate(y)?;
    let first_ir = tvir_from_tvfr(&first_pass, opts.zero_pad)?;
    let track = estimate_initial_delay(&first_ir, opts.zero_pad)?;
    let resampled = resample(y, &track)?;
    let tvfr = bank.estimate(&resampled)?;
    let tvir = tvir_from_tvfr(&tvfr, opts.zero_pad)?;
    Ok(Compensation {
        tvfr,
        tvir,
        track,
        resampled,
        first_pass,
    })
}
