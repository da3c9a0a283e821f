//! Doppler and delay power spectra and the scattering function.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::correlation::{
    freq_autocorrelation_with, summed_autocorrelation, CorrelationFunction, Normalization,
};
use crate::dsp::{fftshift, hann, shifted_fft_freqs};
use crate::error::{Error, Result};
use crate::par;
use crate::response::{Grid, Tvfr, Tvir};

/// Taper applied along time before Doppler transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Hann => hann(n),
            Window::Rectangular => vec![1.0; n],
        }
    }
}

/// Non-negative power density on a uniform axis (Hz or s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumProfile {
    pub axis: Grid,
    pub values: Vec<f64>,
}

impl SpectrumProfile {
    /// `sum(values) * step`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.axis.step
    }

    /// Axis position of the largest value.
    pub fn peak(&self) -> f64 {
        let i = (0..self.values.len()).fold(0, |b, i| {
            if self.values[i] > self.values[b] {
                i
            } else {
                b
            }
        });
        self.axis.at(i)
    }

    /// Linear interpolation, zero outside the axis.
    pub fn interpolate(&self, x: f64) -> f64 {
        crate::dsp::interp_uniform(&self.values, self.axis.start, self.axis.step, x, 0.0)
    }
}

/// `S(nu, tau)`, row-major over Doppler then delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringFunction {
    pub doppler: Grid,
    pub delay: Grid,
    pub values: Vec<f64>,
    /// Delay zero-pad factor of the originating response.
    pub zero_pad: usize,
}

impl ScatteringFunction {
    #[inline]
    pub fn at(&self, q: usize, l: usize) -> f64 {
        self.values[q * self.delay.len + l]
    }

    /// Marginal over delay: `(1/Z) sum_tau S(nu, tau)`.
    pub fn doppler_marginal(&self) -> SpectrumProfile {
        let z = self.zero_pad as f64;
        let values = (0..self.doppler.len)
            .map(|q| {
                self.values[q * self.delay.len..(q + 1) * self.delay.len]
                    .iter()
                    .sum::<f64>()
                    / z
            })
            .collect();
        SpectrumProfile {
            axis: self.doppler,
            values,
        }
    }

    /// Marginal over Doppler: `sum_nu S(nu, tau) dnu`.
    pub fn delay_marginal(&self) -> SpectrumProfile {
        let mut values = vec![0.0; self.delay.len];
        for q in 0..self.doppler.len {
            for (l, v) in values.iter_mut().enumerate() {
                *v += self.at(q, l);
            }
        }
        values.iter_mut().for_each(|v| *v *= self.doppler.step);
        SpectrumProfile {
            axis: self.delay,
            values,
        }
    }
}

fn doppler_axis(m: usize, dt: f64) -> Result<Grid> {
    let f = shifted_fft_freqs(m, dt);
    Grid::new(f[0], 1.0 / (m as f64 * dt), m)
}

/// Windowed periodograms of many series, `|FFT(w x)|^2 dt / sum w^2`, each
/// in centred order.
fn periodograms<F>(
    n_series: usize,
    m: usize,
    dt: f64,
    window: Window,
    nfft: usize,
    series: F,
) -> Vec<Vec<f64>>
where
    F: Fn(usize, &mut [Complex64]) + Sync + Send,
{
    let w = window.coefficients(m);
    let scale = dt / w.iter().map(|v| v * v).sum::<f64>();
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    par::map_range_with(
        n_series,
        || vec![Complex64::default(); nfft],
        |buf, s| {
            buf.iter_mut().for_each(|v| *v = Complex64::default());
            series(s, &mut buf[..m]);
            for (v, wv) in buf.iter_mut().zip(&w) {
                *v *= wv;
            }
            fft.process(buf);
            fftshift(&buf.iter().map(|v| v.norm_sqr() * scale).collect::<Vec<_>>())
        },
    )
}

/// Scattering function from the windowed Fourier transform over time of each
/// delay bin.
pub fn scattering_function(h: &Tvir, window: Window) -> Result<ScatteringFunction> {
    let m = h.n_times();
    if m < 2 {
        return Err(Error::InsufficientData(
            "scattering function needs at least two frames".into(),
        ));
    }
    let cols = periodograms(h.n_delays(), m, h.times.step, window, m, |l, out| {
        for (t, v) in out.iter_mut().enumerate() {
            *v = h.at(t, l);
        }
    });
    let nl = h.n_delays();
    let mut values = vec![0.0; m * nl];
    for (l, col) in cols.iter().enumerate() {
        for (q, v) in col.iter().enumerate() {
            values[q * nl + l] = *v;
        }
    }
    Ok(ScatteringFunction {
        doppler: doppler_axis(m, h.times.step)?,
        delay: h.delays,
        values,
        zero_pad: h.zero_pad,
    })
}

/// Doppler power spectrum via the scattering function (Hann window).
pub fn doppler_spectrum(h: &Tvir) -> Result<SpectrumProfile> {
    doppler_spectrum_with(h, Window::Hann)
}

pub fn doppler_spectrum_with(h: &Tvir, window: Window) -> Result<SpectrumProfile> {
    let m = h.n_times();
    if m < 2 {
        return Err(Error::InsufficientData(
            "Doppler spectrum needs at least two frames".into(),
        ));
    }
    let cols = periodograms(h.n_delays(), m, h.times.step, window, m, |l, out| {
        for (t, v) in out.iter_mut().enumerate() {
            *v = h.at(t, l);
        }
    });
    let z = h.zero_pad as f64;
    let values = (0..m)
        .map(|q| cols.iter().map(|c| c[q]).sum::<f64>() / z)
        .collect();
    Ok(SpectrumProfile {
        axis: doppler_axis(m, h.times.step)?,
        values,
    })
}

/// Doppler spectrum as the Fourier transform of the biased time
/// autocorrelation of the windowed response.
pub fn doppler_spectrum_from_correlation(h: &Tvir, window: Window) -> Result<SpectrumProfile> {
    let m = h.n_times();
    if m < 2 {
        return Err(Error::InsufficientData(
            "Doppler spectrum needs at least two frames".into(),
        ));
    }
    let w = window.coefficients(m);
    let energy: f64 = w.iter().map(|v| v * v).sum();
    let sums = summed_autocorrelation(h.n_delays(), m, |l, out| {
        for (t, v) in out.iter_mut().enumerate() {
            *v = h.at(t, l) * w[t];
        }
    });
    let scale = 1.0 / (h.zero_pad as f64 * energy);
    let one: Vec<Complex64> = sums.iter().map(|v| v * scale).collect();
    let phi = CorrelationFunction::from_one_sided(h.times.step, &one)?;
    Ok(transform_correlation(&phi, m, h.times.step))
}

/// `P(nu_q) = dt sum_k Phi(k) exp(-j 2 pi q k / m)`, centred.
fn transform_correlation(phi: &CorrelationFunction, m: usize, dt: f64) -> SpectrumProfile {
    let mut folded = vec![Complex64::default(); m];
    let k_max = phi.max_lag() as isize;
    for k in -k_max..=k_max {
        folded[k.rem_euclid(m as isize) as usize] += phi.at(k);
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut folded);
    let values = fftshift(&folded.iter().map(|v| v.re * dt).collect::<Vec<_>>());
    SpectrumProfile {
        axis: doppler_axis(m, dt).expect("m >= 2"),
        values,
    }
}

/// Power delay profile `<|h(t, tau)|^2>_t`.
pub fn delay_profile(h: &Tvir) -> SpectrumProfile {
    let m = h.n_times() as f64;
    let nl = h.n_delays();
    let values = (0..nl)
        .map(|l| (0..h.n_times()).map(|t| h.at(t, l).norm_sqr()).sum::<f64>() / m)
        .collect();
    SpectrumProfile {
        axis: h.delays,
        values,
    }
}

/// Power delay profile as the transform of the biased frequency
/// autocorrelation, on the delay grid of `tvir_from_tvfr(h, zero_pad)`.
pub fn delay_profile_from_correlation(h: &Tvfr, zero_pad: usize) -> Result<SpectrumProfile> {
    if zero_pad == 0 {
        return Err(Error::Config("zero-pad factor must be at least 1".into()));
    }
    let phi = freq_autocorrelation_with(h, Normalization::Biased)?;
    let n = h.n_freqs();
    let len = n * zero_pad;
    let mut folded = vec![Complex64::default(); len];
    let k_max = phi.max_lag() as isize;
    for k in -k_max..=k_max {
        folded[k.rem_euclid(len as isize) as usize] += phi.at(k);
    }
    FftPlanner::new().plan_fft_inverse(len).process(&mut folded);
    let values = folded.iter().map(|v| v.re / n as f64).collect();
    Ok(SpectrumProfile {
        axis: Grid::new(0.0, 1.0 / (h.freqs.step * len as f64), len)?,
        values,
    })
}

/// Doppler periodogram of each tone, in tone order.
pub fn tone_doppler_spectra(h: &Tvfr, window: Window) -> Result<Vec<SpectrumProfile>> {
    let m = h.n_times();
    if m < 2 {
        return Err(Error::InsufficientData(
            "tone spectra need at least two frames".into(),
        ));
    }
    let axis = doppler_axis(m, h.times.step)?;
    let rows = periodograms(h.n_freqs(), m, h.times.step, window, m, |i, out| {
        for (t, v) in out.iter_mut().enumerate() {
            *v = h.at(t, i);
        }
    });
    Ok(rows
        .into_iter()
        .map(|values| SpectrumProfile { axis, values })
        .collect())
}

/// Hann periodogram averaged over tones, zero-padded `pad` times for a finer
/// Doppler grid.
pub fn mean_tone_spectrum(h: &Tvfr, pad: usize) -> Result<SpectrumProfile> {
    let m = h.n_times();
    if m < 2 || pad == 0 {
        return Err(Error::InsufficientData(
            "tone spectrum needs two frames and pad >= 1".into(),
        ));
    }
    let nfft = m * pad;
    let rows = periodograms(
        h.n_freqs(),
        m,
        h.times.step,
        Window::Hann,
        nfft,
        |i, out| {
            for (t, v) in out.iter_mut().enumerate() {
                *v = h.at(t, i);
            }
        },
    );
    let n = rows.len() as f64;
    let values = (0..nfft)
        .map(|q| rows.iter().map(|r| r[q]).sum::<f64>() / n)
        .collect();
    Ok(SpectrumProfile {
        axis: doppler_axis(nfft, h.times.step)?,
        values,
    })
}

/// Width of the main peak at half its power, with linear interpolation of
/// both crossings.
pub fn peak_width_3db(p: &SpectrumProfile) -> f64 {
    let v = &p.values;
    let i = (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b });
    let half = 0.5 * v[i];
    let mut r = i;
    while r + 1 < v.len() && v[r + 1] >= half {
        r += 1;
    }
    let right = if r + 1 < v.len() {
        r as f64 + (v[r] - half) / (v[r] - v[r + 1])
    } else {
        r as f64
    };
    let mut l = i;
    while l > 0 && v[l - 1] >= half {
        l -= 1;
    }
    let left = if l > 0 {
        l as f64 - (v[l] - half) / (v[l] - v[l - 1])
    } else {
        l as f64
    };
    (right - left) * p.axis.step
}
