//! Receive-chain (projector plus hydrophone) response compensation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::response::Tvfr;

/// Combined transducer response as `(freq Hz, gain dB)` points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCurve {
    points: Vec<(f64, f64)>,
}

impl CalibrationCurve {
    /// Points must be finite and strictly increasing in frequency.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("empty calibration curve".into()));
        }
        if points.iter().any(|(f, g)| !f.is_finite() || !g.is_finite()) {
            return Err(Error::Config(
                "calibration curve has non-finite points".into(),
            ));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Config(
                "calibration frequencies must be strictly increasing".into(),
            ));
        }
        Ok(Self { points })
    }

    /// A frequency-independent curve over `[f_lo, f_hi]`.
    pub fn flat(f_lo: f64, f_hi: f64, gain_db: f64) -> Result<Self> {
        Self::new(vec![(f_lo, gain_db), (f_hi, gain_db)])
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Linear magnitude at `f`, interpolated linearly between the linear
    /// magnitudes of neighbouring points; `None` outside the covered band.
    pub fn magnitude(&self, f: f64) -> Option<f64> {
        let tol = 1e-9 * f.abs().max(1.0);
        let (first, last) = (self.points[0], self.points[self.points.len() - 1]);
        if f < first.0 - tol || f > last.0 + tol {
            return None;
        }
        let lin = |db: f64| 10f64.powf(db / 20.0);
        let j = self.points.partition_point(|p| p.0 <= f);
        if j == 0 {
            return Some(lin(first.1));
        }
        if j == self.points.len() {
            return Some(lin(last.1));
        }
        let (a, b) = (self.points[j - 1], self.points[j]);
        let t = (f - a.0) / (b.0 - a.0);
        Some(lin(a.1) + t * (lin(b.1) - lin(a.1)))
    }
}

/// Divides every tone of `h` by the curve's magnitude at that tone.
pub fn compensate_transducer(h: &Tvfr, cal: &CalibrationCurve) -> Result<Tvfr> {
    let gains = (0..h.n_freqs())
        .map(|i| {
            let f = h.freqs.at(i);
            cal.magnitude(f).ok_or(Error::Calibration { freq: f })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(i) = gains.iter().position(|g| *g <= 0.0) {
        return Err(Error::Calibration {
            freq: h.freqs.at(i),
        });
    }
    let n = h.n_freqs();
    let values = h
        .values
        .iter()
        .enumerate()
        .map(|(j, v)| v / gains[j % n])
        .collect();
    Ok(Tvfr {
        values,
        ..h.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::response::Grid;
    use num_complex::Complex64;

    fn tvfr() -> Tvfr {
        let times = Grid::new(0.0, 1e-3, 3).unwrap();
        let freqs = Grid::new(32_000.0, 1000.0, 5).unwrap();
        let values = (0..15)
            .map(|i| Complex64::new(1.0 + i as f64, -0.5))
            .collect();
        Tvfr::new(times, freqs, values).unwrap()
    }

    #[test]
    fn flat_curves() {
        let h = tvfr();
        let same =
            compensate_transducer(&h, &CalibrationCurve::flat(30e3, 40e3, 0.0).unwrap()).unwrap();
        assert_eq!(same.values, h.values);
        let half =
            compensate_transducer(&h, &CalibrationCurve::flat(30e3, 40e3, 6.02).unwrap()).unwrap();
        for (a, b) in half.values.iter().zip(&h.values) {
            assert!((a.norm() / b.norm() - 0.5).abs() < 1e-3);
        }
    }

    #[test]
    fn piecewise_matches_hand_interpolation() {
        let cal = CalibrationCurve::new(vec![(31e3, 0.0), (33e3, 6.0), (37e3, -6.0)]).unwrap();
        let h = tvfr();
        let out = compensate_transducer(&h, &cal).unwrap();
        // 32 kHz: halfway between 1 and 10^(6/20).
        let g32 = 0.5 * (1.0 + 1.9952623149688795);
        // 34 kHz: a quarter of the way from 10^(6/20) to 10^(-6/20).
        let g34 = 1.9952623149688795 + 0.25 * (0.5011872336272722 - 1.9952623149688795);
        // 36 kHz: three quarters of the way.
        let g36 = 1.9952623149688795 + 0.75 * (0.5011872336272722 - 1.9952623149688795);
        for (i, g) in [(0, g32), (2, g34), (4, g36)] {
            for m in 0..3 {
                assert!((out.at(m, i) * g - h.at(m, i)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn coverage_gap() {
        let cal = CalibrationCurve::new(vec![(33e3, 0.0), (40e3, 0.0)]).unwrap();
        match compensate_transducer(&tvfr(), &cal) {
            Err(Error::Calibration { freq }) => assert_eq!(freq, 32e3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_unsorted() {
        assert!(CalibrationCurve::new(vec![(2.0, 0.0), (1.0, 0.0)]).is_err());
        assert!(CalibrationCurve::new(vec![]).is_err());
    }
}
