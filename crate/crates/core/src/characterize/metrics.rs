//! Scalar channel parameters.

use serde::{Deserialize, Serialize};

use super::correlation::CorrelationFunction;
use super::spectra::SpectrumProfile;
use crate::error::{Error, Result};

/// Default clip level for [`rms_width`], dB below the profile peak.
pub const DEFAULT_NOISE_FLOOR_DB: f64 = 30.0;
/// Default correlation threshold for [`coherence_time`].
pub const DEFAULT_COHERENCE_THRESHOLD: f64 = 0.9;

/// Outcome of a threshold-crossing search on a correlation magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Coherence {
    /// Lag of the first crossing.
    Value(f64),
    /// No crossing within the computed lags; carries the largest lag.
    BeyondSpan(f64),
}

impl Coherence {
    pub fn value(&self) -> Option<f64> {
        match self {
            Coherence::Value(v) => Some(*v),
            Coherence::BeyondSpan(_) => None,
        }
    }
}

/// Outcome of the first-sidelobe search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum SidelobeBandwidth {
    Sidelobe(f64),
    NoSidelobe,
}

impl SidelobeBandwidth {
    pub fn value(&self) -> Option<f64> {
        match self {
            SidelobeBandwidth::Sidelobe(v) => Some(*v),
            SidelobeBandwidth::NoSidelobe => None,
        }
    }
}

/// Standard deviation of the profile treated as a density, after zeroing
/// bins more than `noise_floor_db` below the peak.
pub fn rms_width(p: &SpectrumProfile, noise_floor_db: f64) -> Result<f64> {
    if !(noise_floor_db >= 0.0) {
        return Err(Error::Config(format!(
            "noise floor must be >= 0 dB, got {noise_floor_db}"
        )));
    }
    let peak = p.values.iter().fold(0.0f64, |a, b| a.max(*b));
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::EmptyProfile);
    }
    let floor = peak * 10f64.powf(-noise_floor_db / 10.0);
    let kept: Vec<(f64, f64)> = p
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v >= floor)
        .map(|(i, v)| (p.axis.at(i), *v))
        .collect();
    let mass: f64 = kept.iter().map(|(_, v)| v).sum();
    let mean = kept.iter().map(|(x, v)| x * v).sum::<f64>() / mass;
    let var = kept
        .iter()
        .map(|(x, v)| (x - mean).powi(2) * v)
        .sum::<f64>()
        / mass;
    Ok(var.max(0.0).sqrt())
}

/// Smallest positive lag where `|c| / |c(0)|` falls below `threshold`,
/// linearly interpolated between lag samples.
pub fn coherence_time(c: &CorrelationFunction, threshold: f64) -> Result<Coherence> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Domain(format!(
            "coherence threshold must lie in (0, 1), got {threshold}"
        )));
    }
    if c.zero().norm() == 0.0 {
        return Err(Error::Domain("correlation vanishes at lag zero".into()));
    }
    let mag = c.normalized_magnitude();
    match (1..mag.len()).find(|&k| mag[k] < threshold) {
        Some(k) => {
            let frac = (mag[k - 1] - threshold) / (mag[k - 1] - mag[k]);
            Ok(Coherence::Value(
                (k as f64 - 1.0 + frac.clamp(0.0, 1.0)) * c.step(),
            ))
        }
        None => Ok(Coherence::BeyondSpan(c.max_lag() as f64 * c.step())),
    }
}

/// Rise below which a local maximum of `|c|` counts as rounding ripple.
pub const SIDELOBE_TOLERANCE: f64 = 1e-9;

/// Lag of the first local maximum of `|c|` that follows its first local
/// minimum.
pub fn coherence_bandwidth(c: &CorrelationFunction) -> Result<SidelobeBandwidth> {
    let mag = c.normalized_magnitude();
    if mag.len() < 3 {
        return Err(Error::InsufficientData(
            "coherence bandwidth needs at least three lags".into(),
        ));
    }
    let mut lo = mag[0];
    for k in 1..mag.len() - 1 {
        lo = lo.min(mag[k]);
        let peak = mag[k] > mag[k - 1] && mag[k] >= mag[k + 1];
        if peak && mag[k] - lo > SIDELOBE_TOLERANCE && mag[0] - lo > SIDELOBE_TOLERANCE {
            return Ok(SidelobeBandwidth::Sidelobe(k as f64 * c.step()));
        }
    }
    Ok(SidelobeBandwidth::NoSidelobe)
}

/// Correlation level used when the frequency correlation has no sidelobe.
pub const FALLBACK_BANDWIDTH_THRESHOLD: f64 = 0.5;

/// Coherence bandwidth with the rule that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum BandwidthEstimate {
    /// First sidelobe of the frequency correlation.
    Sidelobe(f64),
    /// No sidelobe; lag where the correlation falls below one half.
    Threshold(f64),
    /// No sidelobe and no crossing within the band; carries the largest lag.
    BeyondSpan(f64),
}

impl BandwidthEstimate {
    pub fn value(&self) -> f64 {
        match *self {
            BandwidthEstimate::Sidelobe(v)
            | BandwidthEstimate::Threshold(v)
            | BandwidthEstimate::BeyondSpan(v) => v,
        }
    }

    /// True when the sidelobe rule did not apply.
    pub fn is_fallback(&self) -> bool {
        !matches!(self, BandwidthEstimate::Sidelobe(_))
    }
}

/// [`coherence_bandwidth`], falling back to the
/// [`FALLBACK_BANDWIDTH_THRESHOLD`] crossing for responses without a sidelobe.
pub fn bandwidth_estimate(c: &CorrelationFunction) -> Result<BandwidthEstimate> {
    Ok(match coherence_bandwidth(c)? {
        SidelobeBandwidth::Sidelobe(v) => BandwidthEstimate::Sidelobe(v),
        SidelobeBandwidth::NoSidelobe => match coherence_time(c, FALLBACK_BANDWIDTH_THRESHOLD)? {
            Coherence::Value(v) => BandwidthEstimate::Threshold(v),
            Coherence::BeyondSpan(v) => BandwidthEstimate::BeyondSpan(v),
        },
    })
}


#[cfg(test)]
mod proptests {
    use super::*;
    use crate::characterize::correlation::time_autocorrelation;
    use crate::estimator::tvir_from_tvfr;
    use crate::response::Grid;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn rms_width_ignores_scale(values in prop::collection::vec(0.0f64..1.0, 4..200), alpha in 1e-6f64..1e6) {
            prop_assume!(values.iter().any(|&v| v > 0.0));
            let axis = Grid::new(0.0, 1e-4, values.len()).unwrap();
            let q = SpectrumProfile { axis, values: values.iter().map(|v| v * alpha).collect() };
            let p = SpectrumProfile { axis, values };
            let (a, b) = (rms_width(&p, 30.0).unwrap(), rms_width(&q, 30.0).unwrap());
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-12), "{a} {b}");
        }

        #[test]
        fn coherence_time_falls_with_threshold(h in crate::strategies::tvfr(), a in 0.05f64..0.95, b in 0.05f64..0.95) {
            let c = time_autocorrelation(&tvir_from_tvfr(&h, 1).unwrap()).unwrap();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let t = |th| match coherence_time(&c, th).unwrap() { Coherence::Value(v) | Coherence::BeyondSpan(v) => v };
            prop_assert!(t(hi) <= t(lo));
        }
    }
}
