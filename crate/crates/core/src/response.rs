//! Time-variant frequency and impulse responses on regular grids.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniform axis `start + i * step`, `i = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Grid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Config("grid must have at least one point".into()));
        }
        if !(start.is_finite() && step.is_finite()) || (len > 1 && step <= 0.0) {
            return Err(Error::Config(format!(
                "grid must be finite and strictly increasing (start {start}, step {step})"
            )));
        }
        Ok(Self { start, step, len })
    }

    /// Builds a grid from explicit points, which must be uniform to 1e-9
    /// relative.
    pub fn from_points(points: &[f64]) -> Result<Self> {
        match points {
            [] => Err(Error::Config("empty grid".into())),
            [x] => Grid::new(*x, 1.0, 1),
            [a, b, ..] => {
                let step = b - a;
                let g = Grid::new(*a, step, points.len())?;
                let tol = 1e-9 * step.abs().max(a.abs()).max(1e-30);
                for (i, p) in points.iter().enumerate() {
                    if (g.at(i) - p).abs() > tol * (i as f64 + 1.0) {
                        return Err(Error::Config("grid points are not uniform".into()));
                    }
                }
                Ok(g)
            }
        }
    }

    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.at(i)).collect()
    }

    pub fn end(&self) -> f64 {
        self.at(self.len.saturating_sub(1))
    }
}

/// Time-variant frequency response `H[m][i]`, rows are times, columns tones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tvfr {
    pub times: Grid,
    pub freqs: Grid,
    /// Row-major `times.len x freqs.len`.
    pub values: Vec<Complex64>,
    /// Number of frames at each end affected by the estimator's transient.
    pub guard_frames: usize,
}

impl Tvfr {
    pub fn new(times: Grid, freqs: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != times.len * freqs.len {
            return Err(Error::Config(format!(
                "TVFR has {} values for a {}x{} grid",
                values.len(),
                times.len,
                freqs.len
            )));
        }
        Ok(Self {
            times,
            freqs,
            values,
            guard_frames: 0,
        })
    }

    pub fn n_times(&self) -> usize {
        self.times.len
    }

    pub fn n_freqs(&self) -> usize {
        self.freqs.len
    }

    #[inline]
    pub fn at(&self, m: usize, i: usize) -> Complex64 {
        self.values[m * self.freqs.len + i]
    }

    pub fn row(&self, m: usize) -> &[Complex64] {
        let n = self.freqs.len;
        &self.values[m * n..(m + 1) * n]
    }

    /// Time series of one tone.
    pub fn column(&self, i: usize) -> Vec<Complex64> {
        (0..self.times.len).map(|m| self.at(m, i)).collect()
    }

    /// Copy without the flagged transient frames.
    pub fn steady(&self) -> Tvfr {
        let g = self.guard_frames.min(self.times.len.saturating_sub(1) / 2);
        let keep = self.times.len - 2 * g;
        let n = self.freqs.len;
        Tvfr {
            times: Grid {
                start: self.times.at(g),
                step: self.times.step,
                len: keep,
            },
            freqs: self.freqs,
            values: self.values[g * n..(g + keep) * n].to_vec(),
            guard_frames: 0,
        }
    }

    /// Restricts to a contiguous range of frames.
    pub fn slice_times(&self, range: std::ops::Range<usize>) -> Tvfr {
        let n = self.freqs.len;
        Tvfr {
            times: Grid {
                start: self.times.at(range.start),
                step: self.times.step,
                len: range.len(),
            },
            freqs: self.freqs,
            values: self.values[range.start * n..range.end * n].to_vec(),
            guard_frames: 0,
        }
    }
}

/// Time-variant impulse response `h[m][l]` on a uniform delay grid.
///
/// The delay axis spans one sounding period. Values are the complex
/// baseband-equivalent response referenced to the lowest tone `f_ref`, so
/// magnitudes equal those of the passband response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tvir {
    pub times: Grid,
    pub delays: Grid,
    pub values: Vec<Complex64>,
    /// Frequency of the first tone used in the transform.
    pub f_ref: f64,
    /// Number of tones in the originating TVFR.
    pub n_tones: usize,
    pub zero_pad: usize,
    pub guard_frames: usize,
}

impl Tvir {
    pub fn n_times(&self) -> usize {
        self.times.len
    }

    pub fn n_delays(&self) -> usize {
        self.delays.len
    }

    #[inline]
    pub fn at(&self, m: usize, l: usize) -> Complex64 {
        self.values[m * self.delays.len + l]
    }

    pub fn row(&self, m: usize) -> &[Complex64] {
        let n = self.delays.len;
        &self.values[m * n..(m + 1) * n]
    }

    /// Time series at one delay bin.
    pub fn column(&self, l: usize) -> Vec<Complex64> {
        (0..self.times.len).map(|m| self.at(m, l)).collect()
    }

    /// Spacing of the un-padded delay grid.
    pub fn raw_delay_step(&self) -> f64 {
        self.delays.step * self.zero_pad as f64
    }

    pub fn steady(&self) -> Tvir {
        let g = self.guard_frames.min(self.times.len.saturating_sub(1) / 2);
        let keep = self.times.len - 2 * g;
        let n = self.delays.len;
        Tvir {
            times: Grid {
                start: self.times.at(g),
                step: self.times.step,
                len: keep,
            },
            values: self.values[g * n..(g + keep) * n].to_vec(),
            guard_frames: 0,
            ..self.clone()
        }
    }

    /// Total energy `sum |h|^2` over the whole grid.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_from_points() {
        let g = Grid::from_points(&[0.0, 0.5, 1.0, 1.5]).unwrap();
        assert_eq!(g.len, 4);
        assert_eq!(g.step, 0.5);
        assert!(Grid::from_points(&[0.0, 0.5, 1.2]).is_err());
        assert!(Grid::from_points(&[1.0, 0.5]).is_err());
    }

    #[test]
    fn steady_drops_guards() {
        let times = Grid::new(0.0, 1.0, 10).unwrap();
        let freqs = Grid::new(0.0, 1.0, 2).unwrap();
        let vals = (0..20).map(|i| Complex64::new(i as f64, 0.0)).collect();
        let mut h = Tvfr::new(times, freqs, vals).unwrap();
        h.guard_frames = 2;
        let s = h.steady();
        assert_eq!(s.n_times(), 6);
        assert_eq!(s.times.start, 2.0);
        assert_eq!(s.at(0, 0).re, 4.0);
    }
}
