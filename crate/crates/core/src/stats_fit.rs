//! Short-term gain statistics and single-parameter Rician fitting.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::response::Tvfr;

/// Default segment length in time, s.
pub const DEFAULT_T_SEG: f64 = 2.0;
/// Default segment width in frequency, Hz.
pub const DEFAULT_F_SEG: f64 = 2000.0;
/// Largest K considered by the fit.
pub const K_MAX: f64 = 1000.0;

/// Normalized gains `|H|` from one time-frequency cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSamples {
    pub values: Vec<f64>,
    /// `[start, end]` frame times covered, s.
    pub time_span: (f64, f64),
    /// `[low, high]` tone frequencies covered, Hz.
    pub band: (f64, f64),
}

/// `exp(-z) I0(z)` for `z >= 0`.
pub fn bessel_i0e(z: f64) -> f64 {
    if z < 30.0 {
        let q = 0.25 * z * z;
        let (mut term, mut sum, mut k) = (1.0, 1.0, 1.0);
        while term > sum * 1e-17 {
            term *= q / (k * k);
            sum += term;
            k += 1.0;
        }
        sum * (-z).exp()
    } else {
        // Asymptotic series; terms shrink until k ~ 2z, far beyond what is
        // needed at z >= 30.
        let (mut term, mut sum) = (1.0f64, 1.0f64);
        for k in 1..40 {
            let c = (2 * k - 1) as f64;
            let next = term * c * c / (8.0 * k as f64 * z);
            if next.abs() < 1e-17 * sum || next.abs() > term.abs() {
                break;
            }
            term = next;
            sum += term;
        }
        sum / (2.0 * std::f64::consts::PI * z).sqrt()
    }
}

/// Rician density for unit mean-square gain:
/// `2 (1 + K) x exp(-K - (1 + K) x^2) I0(2 x sqrt(K (1 + K)))`.
pub fn rician_pdf(x: f64, k: f64) -> Result<f64> {
    if !(x >= 0.0 && k >= 0.0) || !x.is_finite() || !k.is_finite() {
        return Err(Error::Domain(format!(
            "Rician density needs x >= 0 and K >= 0 (x = {x}, K = {k})"
        )));
    }
    Ok(pdf_unchecked(x, k))
}

fn pdf_unchecked(x: f64, k: f64) -> f64 {
    let a = (1.0 + k).sqrt() * x - k.sqrt();
    let z = 2.0 * x * (k * (1.0 + k)).sqrt();
    2.0 * (1.0 + k) * x * (-a * a).exp() * bessel_i0e(z)
}

/// Draws `n` unit mean-square Rician amplitudes.
pub fn rician_samples(k: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let los = (k / (k + 1.0)).sqrt();
    let s = (0.5 / (k + 1.0)).sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            (Complex64::new(los, 0.0) + s * Complex64::new(re, im)).norm()
        })
        .collect()
}

/// Splits `h` into cells of about `t_seg` by `f_seg` and returns each cell's
/// `|H|` normalized to unit mean square. Cells with zero power are skipped.
pub fn segment_gains(h: &Tvfr, t_seg: f64, f_seg: f64) -> Result<Vec<GainSamples>> {
    let frames = (t_seg / h.times.step).round() as usize;
    let tones = (f_seg / h.freqs.step).round() as usize;
    if !(t_seg > 0.0 && f_seg > 0.0) || frames == 0 || tones == 0 {
        return Err(Error::Range(format!(
            "segment {t_seg} s x {f_seg} Hz is smaller than one grid cell"
        )));
    }
    if frames > h.n_times() || tones > h.n_freqs() {
        return Err(Error::Range(format!(
            "segment of {frames} frames x {tones} tones exceeds the {}x{} grid",
            h.n_times(),
            h.n_freqs()
        )));
    }
    let mut cells = Vec::new();
    for a in 0..h.n_times() / frames {
        for b in 0..h.n_freqs() / tones {
            let mut values: Vec<f64> = (a * frames..(a + 1) * frames)
                .flat_map(|m| (b * tones..(b + 1) * tones).map(move |i| (m, i)))
                .map(|(m, i)| h.at(m, i).norm())
                .collect();
            let ms = values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64;
            if ms == 0.0 {
                continue;
            }
            let scale = ms.sqrt().recip();
            values.iter_mut().for_each(|v| *v *= scale);
            cells.push(GainSamples {
                values,
                time_span: (h.times.at(a * frames), h.times.at((a + 1) * frames - 1)),
                band: (h.freqs.at(b * tones), h.freqs.at((b + 1) * tones - 1)),
            });
        }
    }
    Ok(cells)
}

/// Concatenates the samples of all cells.
pub fn pool(cells: &[GainSamples]) -> Vec<f64> {
    cells
        .iter()
        .flat_map(|c| c.values.iter().copied())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Equal-width histogram bins over `[0, max sample]`.
    pub bins: usize,
    pub min_samples: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            bins: 50,
            min_samples: 500,
        }
    }
}

/// Density-normalized histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub centers: Vec<f64>,
    pub density: Vec<f64>,
    pub width: f64,
}

impl Histogram {
    pub fn new(x: &[f64], bins: usize) -> Result<Self> {
        if bins == 0 || x.is_empty() {
            return Err(Error::InsufficientData(
                "histogram needs samples and at least one bin".into(),
            ));
        }
        let max = x.iter().fold(0.0f64, |a, b| a.max(*b));
        if !(max > 0.0 && max.is_finite()) {
            return Err(Error::Domain("histogram range is empty".into()));
        }
        let width = max / bins as f64;
        let mut counts = vec![0usize; bins];
        for v in x {
            counts[((v / width) as usize).min(bins - 1)] += 1;
        }
        let norm = 1.0 / (x.len() as f64 * width);
        Ok(Self {
            centers: (0..bins).map(|j| (j as f64 + 0.5) * width).collect(),
            density: counts.iter().map(|&c| c as f64 * norm).collect(),
            width,
        })
    }

    /// Mean squared difference between the Rician density and the histogram
    /// at the bin centres.
    pub fn mse(&self, k: f64) -> f64 {
        self.centers
            .iter()
            .zip(&self.density)
            .map(|(&x, &p)| (pdf_unchecked(x, k) - p).powi(2))
            .sum::<f64>()
            / self.centers.len() as f64
    }

    fn mean_square_density(&self) -> f64 {
        self.density.iter().map(|p| p * p).sum::<f64>() / self.density.len() as f64
    }
}

/// Best-fit K and the relative fit error `sqrt(MSE / <p^2>)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicianFit {
    pub k: f64,
    pub epsilon: f64,
    pub mse: f64,
    pub n_samples: usize,
    pub histogram: Histogram,
}

fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, rel: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > rel * 0.5 * (a + b).abs().max(1e-6) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Fits K by minimizing the histogram MSE: coarse scan over zero plus a
/// log-spaced grid on `[1e-3, 1e3]`, then golden-section refinement to 1e-3
/// relative. Samples are re-normalized to unit mean square first.
pub fn fit_rician(samples: &[f64], opts: &FitOptions) -> Result<RicianFit> {
    if samples.len() < opts.min_samples.max(1) {
        return Err(Error::InsufficientData(format!(
            "{} samples, need at least {}",
            samples.len(),
            opts.min_samples
        )));
    }
    if samples.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::Domain(
            "gain samples must be finite and non-negative".into(),
        ));
    }
    let ms = samples.iter().map(|v| v * v).sum::<f64>() / samples.len() as f64;
    if ms == 0.0 {
        return Err(Error::Domain("all gain samples are zero".into()));
    }
    let scale = ms.sqrt().recip();
    let x: Vec<f64> = samples.iter().map(|v| v * scale).collect();
    Ok(fit_histogram(Histogram::new(&x, opts.bins)?, x.len()))
}

fn fit_histogram(hist: Histogram, n_samples: usize) -> RicianFit {
    let mut grid = vec![0.0];
    let top = K_MAX.log10();
    grid.extend((0..=120).map(|i| 10f64.powf(-3.0 + (top + 3.0) * i as f64 / 120.0)));
    let scores: Vec<f64> = grid.iter().map(|&k| hist.mse(k)).collect();
    let best = (0..grid.len()).fold(0, |b, i| if scores[i] < scores[b] { i } else { b });
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let refined = golden(|k| hist.mse(k), lo, hi, 1e-3);
    let k = if hist.mse(refined) <= scores[best] {
        refined
    } else {
        grid[best]
    };
    let mse = hist.mse(k);
    RicianFit {
        k,
        epsilon: (mse / hist.mean_square_density()).sqrt(),
        mse,
        n_samples,
        histogram: hist,
    }
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn fit_ignores_scale(k in 0.0f64..8.0, seed in any::<u64>(), e in -20i32..20, alpha in 1e-3f64..1e3) {
            let x = rician_samples(k, 4000, seed);
            let opts = FitOptions::default();
            let base = fit_rician(&x, &opts).unwrap();
            let pow2: Vec<f64> = x.iter().map(|v| v * 2f64.powi(e)).collect();
            prop_assert_eq!(&fit_rician(&pow2, &opts).unwrap(), &base);
            let scaled: Vec<f64> = x.iter().map(|v| v * alpha).collect();
            let other = fit_rician(&scaled, &opts).unwrap();
            prop_assert!((other.k - base.k).abs() <= 1e-3 * (1.0 + base.k), "{} {}", other.k, base.k);
        }
    }
}
