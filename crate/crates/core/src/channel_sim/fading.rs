//! Rician fading modulators built from a sum of sinusoids.
//!
//! `a(t) = sqrt(K/(K+1)) + sqrt(1/(K+1)) * d(t)` where the diffuse part
//! `d(t) = Ns^{-1/2} sum_n exp(j (2 pi f_n t + phi_n))` places one frequency
//! `f_n` in each of `Ns` equal slots covering `[-B, B]` (a flat Doppler
//! spectrum), jittered within the slot, with random phases. The realization
//! is fully determined by `(K, B, seed)`, so it can be replayed in closed
//! form.
//!
//! The jitter makes the frequencies incommensurate, so the process does not
//! repeat and long records keep yielding new fading states.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Number of diffuse sinusoids.
pub const N_SINUSOIDS: usize = 32;

/// Largest offset of a sinusoid from its slot centre, in slot widths.
pub const SLOT_JITTER: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct FadingProcess {
    specular: f64,
    diffuse: f64,
    /// (Doppler frequency in Hz, phase in rad) per sinusoid.
    components: Vec<(f64, f64)>,
}

impl FadingProcess {
    pub fn new(k: f64, doppler_spread: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ns = N_SINUSOIDS as f64;
        let components = (0..N_SINUSOIDS)
            .map(|n| {
                let centre = n as f64 + 0.5 + rng.random_range(-SLOT_JITTER..SLOT_JITTER);
                let f = doppler_spread * (-1.0 + 2.0 * centre / ns);
                let phase: f64 = rng.random_range(0.0..2.0 * PI);
                (f, phase)
            })
            .collect();
        Self {
            specular: (k / (k + 1.0)).sqrt(),
            diffuse: (1.0 / (k + 1.0)).sqrt(),
            components,
        }
    }

    /// Complex modulator value at time `t` seconds.
    pub fn at(&self, t: f64) -> Complex64 {
        let d: Complex64 = self
            .components
            .iter()
            .map(|&(f, ph)| Complex64::from_polar(1.0, 2.0 * PI * f * t + ph))
            .sum();
        Complex64::new(self.specular, 0.0) + d * (self.diffuse / (N_SINUSOIDS as f64).sqrt())
    }

    /// Samples `a(t)` at `n` points spaced `1/fs`, evaluating the closed form
    /// on a coarse grid and interpolating linearly in between.
    pub fn sample(&self, n: usize, fs: f64, time_scale: f64) -> Vec<Complex64> {
        let max_f = self.components.iter().fold(0.0f64, |m, c| m.max(c.0.abs()));
        // keep 2 pi f dt below 1e-2 on the coarse grid
        let coarse_dt = if max_f > 0.0 {
            (1e-2 / (2.0 * PI * max_f)).min(1e-3)
        } else {
            1e-3
        };
        let stride = ((coarse_dt * fs).floor() as usize).max(1);
        let n_coarse = n / stride + 2;
        let coarse: Vec<Complex64> =
            crate::par::map_range(n_coarse, |j| self.at((j * stride) as f64 / fs * time_scale));
        (0..n)
            .map(|i| {
                let j = i / stride;
                let frac = (i % stride) as f64 / stride as f64;
                coarse[j] * (1.0 - frac) + coarse[j + 1] * frac
            })
            .collect()
    }
}
