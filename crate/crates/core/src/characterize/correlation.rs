//! Empirical time and frequency autocorrelations.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::response::{Grid, Tvfr, Tvir};
use crate::waveform::Waveform;

/// How lag sums are normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Divide lag `k` by the overlap `n - |k|`.
    #[default]
    Unbiased,
    /// Divide every lag by `n`; the result is positive semidefinite.
    Biased,
}

impl Normalization {
    fn divisor(self, n: usize, k: usize) -> f64 {
        match self {
            Normalization::Unbiased => (n - k) as f64,
            Normalization::Biased => n as f64,
        }
    }
}

/// A correlation function on a lag grid symmetric about zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationFunction {
    /// `-(K) * step ..= K * step`, `2K + 1` points.
    pub lags: Grid,
    pub values: Vec<Complex64>,
}

impl CorrelationFunction {
    /// Builds the two-sided function from lags `0..=K` using Hermitian
    /// symmetry; the zero-lag imaginary part is dropped.
    pub fn from_one_sided(step: f64, one_sided: &[Complex64]) -> Result<Self> {
        if one_sided.is_empty() {
            return Err(Error::InsufficientData("empty correlation".into()));
        }
        let k = one_sided.len() - 1;
        let mut values = Vec::with_capacity(2 * k + 1);
        values.extend(one_sided[1..].iter().rev().map(|v| v.conj()));
        values.push(Complex64::new(one_sided[0].re, 0.0));
        values.extend_from_slice(&one_sided[1..]);
        Ok(Self {
            lags: Grid::new(-(k as f64) * step, step, 2 * k + 1)?,
            values,
        })
    }

    /// Largest lag index `K`.
    pub fn max_lag(&self) -> usize {
        self.values.len() / 2
    }

    pub fn step(&self) -> f64 {
        self.lags.step
    }

    /// Value at signed lag index `k`.
    pub fn at(&self, k: isize) -> Complex64 {
        self.values[(self.max_lag() as isize + k) as usize]
    }

    pub fn zero(&self) -> Complex64 {
        self.at(0)
    }

    /// Lags `0..=K` in physical units.
    pub fn positive_lags(&self) -> Vec<f64> {
        (0..=self.max_lag())
            .map(|k| k as f64 * self.step())
            .collect()
    }

    /// `|c(k)| / |c(0)|` for `k = 0..=K`.
    pub fn normalized_magnitude(&self) -> Vec<f64> {
        let c0 = self.zero().norm();
        (0..=self.max_lag() as isize)
            .map(|k| self.at(k).norm() / c0)
            .collect()
    }

    /// Linear interpolation at a physical lag; `None` beyond the grid.
    pub fn interpolate(&self, lag: f64) -> Option<Complex64> {
        crate::dsp::interp_uniform_c(&self.values, self.lags.start, self.lags.step, lag)
    }
}

/// Sums `sum_m x[m + k] conj(x[m])` for `k = 0..len` over many equal-length
/// series, using zero-padded FFTs.
pub(crate) fn summed_autocorrelation<F>(n_series: usize, len: usize, series: F) -> Vec<Complex64>
where
    F: Fn(usize, &mut [Complex64]) + Sync + Send,
{
    let nfft = (2 * len - 1).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(nfft);
    let inv = planner.plan_fft_inverse(nfft);
    let chunks = n_series.min(64).max(1);
    let per = n_series.div_ceil(chunks);
    let partial = par::map_range(chunks, |c| {
        let mut acc = vec![Complex64::default(); nfft];
        let mut buf = vec![Complex64::default(); nfft];
        for s in c * per..((c + 1) * per).min(n_series) {
            buf.iter_mut().for_each(|v| *v = Complex64::default());
            series(s, &mut buf[..len]);
            fwd.process(&mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += b.norm_sqr();
            }
        }
        acc
    });
    let mut total = vec![Complex64::default(); nfft];
    for p in partial {
        for (a, b) in total.iter_mut().zip(p) {
            *a += b;
        }
    }
    inv.process(&mut total);
    total.truncate(len);
    let scale = 1.0 / nfft as f64;
    total.iter_mut().for_each(|v| *v *= scale);
    total
}

fn finish(
    step: f64,
    sums: &[Complex64],
    n: usize,
    weight: f64,
    norm: Normalization,
) -> Result<CorrelationFunction> {
    let one: Vec<Complex64> = sums
        .iter()
        .enumerate()
        .map(|(k, v)| v * weight / norm.divisor(n, k))
        .collect();
    CorrelationFunction::from_one_sided(step, &one)
}

/// Time autocorrelation averaged over delay with [`Normalization::Unbiased`].
pub fn time_autocorrelation(h: &Tvir) -> Result<CorrelationFunction> {
    time_autocorrelation_with(h, Normalization::Unbiased)
}

/// `Phi(dt) = (1/Z) sum_tau <h(t + dt, tau) h*(t, tau)>_t`, where `Z` is the
/// delay zero-pad factor, so that lag zero equals the mean per-tone power.
pub fn time_autocorrelation_with(h: &Tvir, norm: Normalization) -> Result<CorrelationFunction> {
    let m = h.n_times();
    if m < 2 {
        return Err(Error::InsufficientData(
            "time autocorrelation needs at least two frames".into(),
        ));
    }
    let sums = summed_autocorrelation(h.n_delays(), m, |l, out| {
        for (t, v) in out.iter_mut().enumerate() {
            *v = h.at(t, l);
        }
    });
    finish(h.times.step, &sums, m, 1.0 / h.zero_pad as f64, norm)
}

/// Per-tone time autocorrelations `Phi_H(dt, f_i)`, in tone order.
pub fn tone_time_autocorrelations(
    h: &Tvfr,
    norm: Normalization,
) -> Result<Vec<CorrelationFunction>> {
    let m = h.n_times();
    if m < 2 {
        return Err(Error::InsufficientData(
            "time autocorrelation needs at least two frames".into(),
        ));
    }
    par::map_range(h.n_freqs(), |i| {
        let sums = summed_autocorrelation(1, m, |_, out| {
            for (t, v) in out.iter_mut().enumerate() {
                *v = h.at(t, i);
            }
        });
        finish(h.times.step, &sums, m, 1.0, norm)
    })
    .into_iter()
    .collect()
}

/// Frequency autocorrelation averaged over time with
/// [`Normalization::Unbiased`].
pub fn freq_autocorrelation(h: &Tvfr) -> Result<CorrelationFunction> {
    freq_autocorrelation_with(h, Normalization::Unbiased)
}

/// `Phi(df) = <sum_f H(t, f + df) H*(t, f) / n(df)>_t`.
pub fn freq_autocorrelation_with(h: &Tvfr, norm: Normalization) -> Result<CorrelationFunction> {
    let n = h.n_freqs();
    if n < 2 {
        return Err(Error::InsufficientData(
            "frequency autocorrelation needs at least two tones".into(),
        ));
    }
    let sums = summed_autocorrelation(h.n_times(), n, |m, out| out.copy_from_slice(h.row(m)));
    finish(h.freqs.step, &sums, n, 1.0 / h.n_times() as f64, norm)
}

/// Unbiased autocorrelation of a real waveform for lags `0..=max_lag`
/// samples.
pub fn rx_autocorrelation(y: &Waveform, max_lag: usize) -> Result<CorrelationFunction> {
    let x = &y.samples;
    let n = x.len();
    if max_lag >= n {
        return Err(Error::InsufficientData(format!(
            "{n} samples cannot give lag {max_lag}"
        )));
    }
    let block = (4 * max_lag).max(1 << 14);
    let nfft = (block + max_lag + 1).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(nfft);
    let inv = planner.plan_fft_inverse(nfft);
    let n_blocks = n.div_ceil(block);
    let partial = par::map_range(n_blocks, |b| {
        let s = b * block;
        let mut a = vec![Complex64::default(); nfft];
        let mut c = vec![Complex64::default(); nfft];
        for (i, v) in x[s..(s + block).min(n)].iter().enumerate() {
            a[i].re = *v;
        }
        for (i, v) in x[s..(s + block + max_lag).min(n)].iter().enumerate() {
            c[i].re = *v;
        }
        fwd.process(&mut a);
        fwd.process(&mut c);
        for (cv, av) in c.iter_mut().zip(&a) {
            *cv *= av.conj();
        }
        inv.process(&mut c);
        c.truncate(max_lag + 1);
        c
    });
    let mut sums = vec![Complex64::default(); max_lag + 1];
    for p in partial {
        for (a, b) in sums.iter_mut().zip(p) {
            *a += b;
        }
    }
    let one: Vec<Complex64> = sums
        .iter()
        .enumerate()
        .map(|(k, v)| Complex64::new(v.re / (nfft as f64 * (n - k) as f64), 0.0))
        .collect();
    CorrelationFunction::from_one_sided(1.0 / y.fs, &one)
}


#[cfg(test)]
mod proptests {
    use super::*;
    use crate::estimator::tvir_from_tvfr;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn hermitian_with_real_zero_lag(h in crate::strategies::tvfr()) {
            let ir = tvir_from_tvfr(&h, 1).unwrap();
            for c in [time_autocorrelation(&ir).unwrap(), freq_autocorrelation(&h).unwrap()] {
                let k = c.max_lag() as isize;
                prop_assert_eq!(c.zero().im, 0.0);
                for l in -k..=k {
                    prop_assert_eq!(c.at(-l), c.at(l).conj());
                }
            }
        }
    }
}
