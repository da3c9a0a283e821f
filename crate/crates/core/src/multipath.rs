//! Per-path decomposition of a delay-compensated impulse response.
//!
//! Paths are located as peaks of the power delay profile, cut out of the
//! impulse response with disjoint rectangular delay windows and re-referenced
//! to their own delay, then characterized one by one.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::characterize::{
    bandwidth_estimate, characterize, BandwidthEstimate, ChannelParams, CharacterizeOptions,
    SpectrumProfile,
};
use crate::error::{Error, Result};
use crate::estimator::tvfr_from_tvir;
use crate::par;
use crate::response::{Tvfr, Tvir};
use crate::stats_fit::{fit_rician, pool, segment_gains, FitOptions, DEFAULT_F_SEG, DEFAULT_T_SEG};

/// Default leading guard of a path window.
pub const DEFAULT_GUARD: f64 = 0.1e-3;
/// Default window length after the last path.
pub const DEFAULT_TAIL: f64 = 2.0e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectOptions {
    pub max_paths: usize,
    /// Minimum spacing between accepted peaks, seconds.
    pub min_separation: f64,
    /// Required height above the median of the profile within
    /// `min_separation` of the peak.
    pub min_prominence_db: f64,
    /// Peaks more than this far below the strongest one are ignored.
    pub min_rel_level_db: f64,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self {
            max_paths: 4,
            min_separation: 0.1e-3,
            min_prominence_db: 6.0,
            min_rel_level_db: 25.0,
        }
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Delays of the strongest well-separated peaks of `p`, in increasing order.
pub fn detect_paths(p: &SpectrumProfile, opts: &DetectOptions) -> Result<Vec<f64>> {
    let v = &p.values;
    let n = v.len();
    if n < 3 {
        return Err(Error::InsufficientData(
            "path detection needs at least three delay bins".into(),
        ));
    }
    if opts.max_paths == 0 || !(opts.min_separation >= 0.0) {
        return Err(Error::Config(
            "max_paths must be positive and min_separation non-negative".into(),
        ));
    }
    let top = v.iter().fold(0.0f64, |a, b| a.max(*b));
    if !(top > 0.0 && top.is_finite()) {
        return Err(Error::NoPath);
    }
    let level = top * 10f64.powf(-opts.min_rel_level_db / 10.0);
    let prominence = 10f64.powf(opts.min_prominence_db / 10.0);
    let reach = (opts.min_separation / p.axis.step).round().max(1.0) as usize;
    let mut candidates: Vec<usize> = (0..n)
        .filter(|&l| {
            let (prev, next) = (v[(l + n - 1) % n], v[(l + 1) % n]);
            v[l] >= level && v[l] > prev && v[l] >= next
        })
        .filter(|&l| {
            let mut local: Vec<f64> = (1..=reach.min(n / 2))
                .flat_map(|d| [v[(l + d) % n], v[(l + n - d) % n]])
                .collect();
            v[l] >= prominence * median(&mut local)
        })
        .collect();
    candidates.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = Vec::new();
    for l in candidates {
        if chosen.len() == opts.max_paths {
            break;
        }
        let clear = chosen.iter().all(|&c| {
            let d = l.abs_diff(c);
            (d.min(n - d) as f64) * p.axis.step >= opts.min_separation
        });
        if clear {
            chosen.push(l);
        }
    }
    if chosen.is_empty() {
        return Err(Error::NoPath);
    }
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|l| p.axis.at(l)).collect())
}

/// Half-open delay interval `[start, end)` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathWindow {
    pub start: f64,
    pub end: f64,
}

impl PathWindow {
    fn bins(&self, step: f64) -> std::ops::Range<usize> {
        let edge = |x: f64| (x / step - 1e-9).ceil().max(0.0) as usize;
        edge(self.start)..edge(self.end)
    }
}

/// One extracted path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResponse {
    /// Delay of the path on the delay grid of the parent response.
    pub tau: f64,
    /// Masked response, circularly shifted so the path sits at delay zero and
    /// phase-referenced to remove the path delay at every tone.
    pub tvir: Tvir,
    pub tvfr: Tvfr,
}

/// Cuts the window `[tau_p - guard, tau_p + half_width)` out of `h`.
pub fn extract_path(h: &Tvir, tau_p: f64, guard: f64, half_width: f64) -> Result<PathResponse> {
    if !(guard >= 0.0 && half_width > 0.0) {
        return Err(Error::Window(format!(
            "guard {guard} and half width {half_width} must be non-negative"
        )));
    }
    let window = PathWindow {
        start: tau_p - guard,
        end: tau_p + half_width,
    };
    extract_window(h, tau_p, window)
}

fn extract_window(h: &Tvir, tau_p: f64, w: PathWindow) -> Result<PathResponse> {
    let step = h.delays.step;
    let span = step * h.n_delays() as f64;
    let tol = 1e-9 * span;
    if w.start < -tol || w.end > span + tol || w.start >= w.end {
        return Err(Error::Window(format!(
            "window [{:.6e}, {:.6e}) s is not inside the {:.6e} s delay span",
            w.start, w.end, span
        )));
    }
    if tau_p < w.start - tol || tau_p >= w.end {
        return Err(Error::Window(format!(
            "path delay {tau_p:.6e} s lies outside its window"
        )));
    }
    let n = h.n_delays();
    let l_p = ((tau_p / step).round() as usize).min(n - 1);
    let tau = l_p as f64 * step;
    let rot = Complex64::from_polar(1.0, 2.0 * PI * h.f_ref * tau);
    let bins = w.bins(step);
    let mut values = vec![Complex64::default(); h.values.len()];
    for m in 0..h.n_times() {
        let src = h.row(m);
        let dst = &mut values[m * n..(m + 1) * n];
        for l in bins.clone().take_while(|&l| l < n) {
            dst[(l + n - l_p) % n] = src[l] * rot;
        }
    }
    let tvir = Tvir {
        values,
        ..h.clone()
    };
    let tvfr = tvfr_from_tvir(&tvir)?;
    Ok(PathResponse { tau, tvir, tvfr })
}

/// A response split into per-path responses over disjoint delay windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathDecomposition {
    pub paths: Vec<PathResponse>,
    pub window_bounds: Vec<PathWindow>,
}

impl PathDecomposition {
    /// Sum of the extracted responses moved back to their original delays;
    /// equals `h` inside the windows and zero elsewhere.
    pub fn reconstruct(&self) -> Option<Tvir> {
        let first = self.paths.first()?;
        let n = first.tvir.n_delays();
        let step = first.tvir.delays.step;
        let mut values = vec![Complex64::default(); first.tvir.values.len()];
        for p in &self.paths {
            let l_p = (p.tau / step).round() as usize;
            let rot = Complex64::from_polar(1.0, -2.0 * PI * p.tvir.f_ref * p.tau);
            for m in 0..p.tvir.n_times() {
                let src = p.tvir.row(m);
                for (l, v) in src.iter().enumerate() {
                    values[m * n + (l + l_p) % n] += v * rot;
                }
            }
        }
        Some(Tvir {
            values,
            ..first.tvir.clone()
        })
    }
}

/// Default windows: each path starts `guard` before its delay (but not
/// before the midpoint with the previous path) and ends at the midpoint with
/// the next path; the last one ends `tail` after its delay. Windows are
/// clipped to `[0, span)`.
pub fn default_windows(taus: &[f64], span: f64, guard: f64, tail: f64) -> Vec<PathWindow> {
    (0..taus.len())
        .map(|p| {
            let lo = if p == 0 {
                0.0
            } else {
                0.5 * (taus[p - 1] + taus[p])
            };
            let hi = taus
                .get(p + 1)
                .map_or(taus[p] + tail, |next| 0.5 * (taus[p] + next));
            PathWindow {
                start: (taus[p] - guard).max(lo).max(0.0),
                end: hi.min(span),
            }
        })
        .collect()
}

/// Decomposes `h` with [`default_windows`].
pub fn decompose(h: &Tvir, taus: &[f64]) -> Result<PathDecomposition> {
    let span = h.delays.step * h.n_delays() as f64;
    decompose_with_windows(
        h,
        taus,
        &default_windows(taus, span, DEFAULT_GUARD, DEFAULT_TAIL),
    )
}

/// Decomposes `h` with explicit windows, which must be disjoint and in the
/// same increasing order as `taus`.
pub fn decompose_with_windows(
    h: &Tvir,
    taus: &[f64],
    windows: &[PathWindow],
) -> Result<PathDecomposition> {
    if taus.is_empty() {
        return Err(Error::NoPath);
    }
    if taus.len() != windows.len() {
        return Err(Error::Window(format!(
            "{} delays but {} windows",
            taus.len(),
            windows.len()
        )));
    }
    if taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Window(
            "path delays must be strictly increasing".into(),
        ));
    }
    let tol = 1e-9 * h.delays.step;
    for (p, pair) in windows.windows(2).enumerate() {
        if pair[1].start < pair[0].end - tol {
            return Err(Error::Window(format!(
                "window of path {} overlaps path {}",
                p + 2,
                p + 1
            )));
        }
    }
    let paths = par::map_range(taus.len(), |p| extract_window(h, taus[p], windows[p]));
    Ok(PathDecomposition {
        paths: paths.into_iter().collect::<Result<_>>()?,
        window_bounds: windows.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathReportOptions {
    pub characterize: CharacterizeOptions,
    pub fit: FitOptions,
    /// Gain segment length; shortened to the record when longer.
    pub t_seg: f64,
    /// Gain segment bandwidth; shortened to the band when wider.
    pub f_seg: f64,
}

impl Default for PathReportOptions {
    fn default() -> Self {
        Self {
            characterize: CharacterizeOptions::default(),
            fit: FitOptions::default(),
            t_seg: DEFAULT_T_SEG,
            f_seg: DEFAULT_F_SEG,
        }
    }
}

/// Parameters of one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathReport {
    pub tau: f64,
    pub params: ChannelParams,
    pub bandwidth: BandwidthEstimate,
    pub k: f64,
    pub epsilon: f64,
}

/// Segment sizes no larger than the grid of `h`.
pub fn clamp_segments(h: &Tvfr, t_seg: f64, f_seg: f64) -> (f64, f64) {
    let t_max = h.times.step * h.n_times() as f64;
    let f_max = h.freqs.step * h.n_freqs() as f64;
    (t_seg.min(t_max), f_seg.min(f_max))
}

fn report_one(p: &PathResponse, opts: &PathReportOptions) -> Result<PathReport> {
    let c = characterize(&p.tvir, &p.tvfr, &opts.characterize)?;
    let bandwidth = bandwidth_estimate(&c.freq_correlation)?;
    let (t_seg, f_seg) = clamp_segments(&p.tvfr, opts.t_seg, opts.f_seg);
    let fit = fit_rician(&pool(&segment_gains(&p.tvfr, t_seg, f_seg)?), &opts.fit)?;
    Ok(PathReport {
        tau: p.tau,
        params: c.params,
        bandwidth,
        k: fit.k,
        epsilon: fit.epsilon,
    })
}

/// Characterizes and fits every path of `d`, in path order.
pub fn per_path_report(d: &PathDecomposition, opts: &PathReportOptions) -> Result<Vec<PathReport>> {
    par::map_slice(&d.paths, |p| report_one(p, opts))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_sim::{apply_channel, ChannelSpec, DopplerModel, PathSpec};
    use crate::characterize::{delay_profile, Coherence};
    use crate::estimator::{filterbank_estimate, tvir_from_tvfr};
    use crate::response::Grid;
    use crate::signal_gen::{synthesize_multitone, SoundingConfig};

    fn profile(spikes: &[(usize, f64)], n: usize, step: f64) -> SpectrumProfile {
        let mut values = vec![1e-6; n];
        for &(l, v) in spikes {
            values[l] = v;
        }
        SpectrumProfile {
            axis: Grid::new(0.0, step, n).unwrap(),
            values,
        }
    }

    fn response(paths: Vec<PathSpec>, duration: f64, zero_pad: usize) -> Tvir {
        let c = SoundingConfig::fine().with_duration(duration);
        let x = synthesize_multitone(&c).unwrap();
        let y = apply_channel(&x, &ChannelSpec::from_paths(paths)).unwrap();
        let big_h = filterbank_estimate(&y, &c, 3600).unwrap().steady();
        tvir_from_tvfr(&big_h, zero_pad).unwrap()
    }

    #[test]
    fn detects_two_and_one() {
        let opts = DetectOptions {
            min_separation: 0.5e-3,
            ..Default::default()
        };
        let p = profile(&[(100, 1.0), (200, 0.5)], 400, 1e-5);
        let taus = detect_paths(&p, &opts).unwrap();
        assert_eq!(taus.len(), 2);
        assert!((taus[0] - 1e-3).abs() < 1e-12 && (taus[1] - 2e-3).abs() < 1e-12);
        let single = detect_paths(&profile(&[(37, 2.0)], 400, 1e-5), &opts).unwrap();
        assert_eq!(single.len(), 1);
        assert!((single[0] - 0.37e-3).abs() < 1e-12);
    }

    #[test]
    fn detection_limits() {
        let opts = DetectOptions {
            max_paths: 2,
            min_separation: 0.2e-3,
            ..Default::default()
        };
        // weakest of three is dropped; a close neighbour is suppressed
        let p = profile(&[(50, 1.0), (55, 0.9), (150, 0.6), (300, 0.3)], 400, 1e-5);
        let taus = detect_paths(&p, &opts).unwrap();
        assert_eq!(taus.len(), 2);
        assert!((taus[0] - 0.5e-3).abs() < 1e-12 && (taus[1] - 1.5e-3).abs() < 1e-12);
        // below the relative level
        let weak = profile(&[(50, 1.0), (150, 1e-3)], 400, 1e-5);
        assert_eq!(detect_paths(&weak, &Default::default()).unwrap().len(), 1);
        let flat = SpectrumProfile {
            axis: Grid::new(0.0, 1e-5, 50).unwrap(),
            values: vec![1.0; 50],
        };
        assert!(matches!(
            detect_paths(&flat, &Default::default()),
            Err(Error::NoPath)
        ));
        let zero = SpectrumProfile {
            axis: Grid::new(0.0, 1e-5, 50).unwrap(),
            values: vec![0.0; 50],
        };
        assert!(matches!(
            detect_paths(&zero, &Default::default()),
            Err(Error::NoPath)
        ));
    }

    #[test]
    fn isolated_path_energy() {
        let h = response(vec![PathSpec::new(1.0013e-3, 0.8)], 0.3, 16);
        let taus = detect_paths(&delay_profile(&h), &Default::default()).unwrap();
        assert_eq!(taus.len(), 1);
        assert!((taus[0] - 1.0013e-3).abs() <= h.delays.step);
        let d = decompose(&h, &taus).unwrap();
        let w = d.window_bounds[0];
        assert!((w.start - (taus[0] - DEFAULT_GUARD)).abs() < 1e-15);
        assert!((w.end - (taus[0] + DEFAULT_TAIL)).abs() < 1e-15);
        let windowed: f64 = (0..h.n_times())
            .map(|m| {
                w.bins(h.delays.step)
                    .map(|l| h.at(m, l).norm_sqr())
                    .sum::<f64>()
            })
            .sum();
        let extracted = d.paths[0].tvir.energy();
        assert!((extracted / windowed - 1.0).abs() < 1e-12);
        assert!(
            (extracted / h.energy() - 1.0).abs() < 0.01,
            "{}",
            extracted / h.energy()
        );
    }

    #[test]
    fn flat_path_response() {
        let h = response(
            vec![PathSpec::new(0.5e-3, 0.8), PathSpec::new(2.2e-3, 0.4)],
            0.3,
            16,
        );
        let taus = detect_paths(&delay_profile(&h), &Default::default()).unwrap();
        assert_eq!(taus.len(), 2);
        let d = decompose(&h, &taus).unwrap();
        for (p, g) in d.paths.iter().zip([0.8, 0.4]) {
            let n = p.tvfr.n_freqs();
            let power = p.tvfr.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
                / p.tvfr.values.len() as f64;
            assert!((power / (g * g) - 1.0).abs() < 0.02, "{power}");
            // truncation ripple of the rectangular mask, largest near the band edges
            for i in n / 10..n - n / 10 {
                assert!((p.tvfr.at(0, i).norm() / g - 1.0).abs() < 0.05, "{i}");
            }
        }
    }

    #[test]
    fn reconstruction_is_masking() {
        let h = response(
            vec![
                PathSpec::new(0.5e-3, 1.0),
                PathSpec::new(1.1e-3, 0.5),
                PathSpec::new(3.0e-3, 0.3),
            ],
            0.1,
            4,
        );
        let taus = detect_paths(&delay_profile(&h), &Default::default()).unwrap();
        assert_eq!(taus.len(), 3);
        let d = decompose(&h, &taus).unwrap();
        let r = d.reconstruct().unwrap();
        let step = h.delays.step;
        let inside = |l: usize| d.window_bounds.iter().any(|w| w.bins(step).contains(&l));
        for m in 0..h.n_times() {
            for l in 0..h.n_delays() {
                let want = if inside(l) {
                    h.at(m, l)
                } else {
                    Complex64::default()
                };
                assert!((r.at(m, l) - want).norm() < 1e-12);
            }
        }
        let total: f64 = d.paths.iter().map(|p| p.tvir.energy()).sum();
        assert!(total <= h.energy() * (1.0 + 1e-12));
    }

    #[test]
    fn window_errors() {
        let h = response(vec![PathSpec::new(1.0e-3, 1.0)], 0.05, 1);
        let span = h.delays.step * h.n_delays() as f64;
        assert!(matches!(
            extract_path(&h, 1.0e-3, 0.1e-3, span),
            Err(Error::Window(_))
        ));
        assert!(matches!(
            extract_path(&h, 0.05e-3, 0.1e-3, 1e-3),
            Err(Error::Window(_))
        ));
        assert!(extract_path(&h, 1.0e-3, 0.1e-3, 1e-3).is_ok());
        let overlapping = [
            PathWindow {
                start: 0.9e-3,
                end: 2.0e-3,
            },
            PathWindow {
                start: 1.5e-3,
                end: 2.5e-3,
            },
        ];
        assert!(matches!(
            decompose_with_windows(&h, &[1.0e-3, 1.6e-3], &overlapping),
            Err(Error::Window(_))
        ));
        assert!(matches!(decompose(&h, &[]), Err(Error::NoPath)));
    }

    #[test]
    fn close_paths_clamp_guard() {
        let w = default_windows(&[1.0e-3, 1.15e-3], 4e-3, DEFAULT_GUARD, DEFAULT_TAIL);
        assert!((w[0].end - 1.075e-3).abs() < 1e-15);
        assert!((w[1].start - 1.075e-3).abs() < 1e-15);
        assert!((w[1].end - 3.15e-3).abs() < 1e-15);
        let last = default_windows(&[3.5e-3], 4e-3, DEFAULT_GUARD, DEFAULT_TAIL);
        assert_eq!(last[0].end, 4e-3);
    }

    #[test]
    fn channel_eight_preset_paths() {
        let c = SoundingConfig::campaign().with_duration(3.0);
        let spec = crate::channel_sim::campaign_preset(8, 2).unwrap();
        let y = apply_channel(&synthesize_multitone(&c).unwrap(), &spec).unwrap();
        let big_h = filterbank_estimate(&y, &c, 4536).unwrap().steady();
        let h = tvir_from_tvfr(&big_h, 16).unwrap();
        let taus = detect_paths(&delay_profile(&h), &Default::default()).unwrap();
        assert_eq!(taus.len(), 4, "{taus:?}");
        for (t, p) in taus.iter().zip(&spec.paths) {
            assert!((t - p.delay).abs() <= h.delays.step, "{t} {}", p.delay);
        }
    }

    #[test]
    fn static_and_faded_paths() {
        let c = SoundingConfig::campaign().with_duration(20.0);
        let fade = |b: f64, seed: u64| DopplerModel::RicianFading {
            k: 0.0,
            doppler_spread: b,
            seed,
        };
        let paths = vec![
            PathSpec::new(0.5e-3, 1.0),
            PathSpec::new(1.5e-3, 0.7).with_doppler(fade(2.0, 5)),
            PathSpec::new(2.5e-3, 0.5).with_doppler(fade(12.0, 6)),
        ];
        let y = apply_channel(
            &synthesize_multitone(&c).unwrap(),
            &ChannelSpec::from_paths(paths),
        )
        .unwrap();
        let big_h = filterbank_estimate(&y, &c, 4536).unwrap().steady();
        let h = tvir_from_tvfr(&big_h, 4).unwrap();
        let taus = detect_paths(&delay_profile(&h), &Default::default()).unwrap();
        assert_eq!(taus.len(), 3, "{taus:?}");
        let reports = per_path_report(&decompose(&h, &taus).unwrap(), &Default::default()).unwrap();
        assert!(matches!(reports[0].params.t_c, Coherence::BeyondSpan(_)));
        assert!(reports[0].k > 10.0, "{}", reports[0].k);
        let (t2, t3) = (
            reports[1].params.t_c.value().unwrap(),
            reports[2].params.t_c.value().unwrap(),
        );
        assert!(t2 > t3, "{t2} {t3}");
        assert!(
            reports[1].k < 1.0 && reports[2].k < 1.0,
            "{} {}",
            reports[1].k,
            reports[2].k
        );
        assert!(reports.iter().all(|r| r.bandwidth.value() > 0.0));
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use crate::estimator::tvir_from_tvfr;
    use crate::response::Grid;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn disjoint_windows_never_add_energy(h in crate::strategies::tvfr(), zero_pad in 1usize..5, cuts in prop::collection::vec(0.0f64..1.0, 1..4)) {
            let t = tvir_from_tvfr(&h, zero_pad).unwrap();
            let n = t.n_delays() as f64;
            let mut taus: Vec<f64> = cuts.iter().map(|c| (c * n).floor() * t.delays.step).collect();
            taus.sort_by(f64::total_cmp);
            taus.dedup();
            if let Ok(d) = decompose(&t, &taus) {
                let sum: f64 = d.paths.iter().map(|p| p.tvir.energy()).sum();
                prop_assert!(sum <= t.energy() * (1.0 + 1e-12));
            }
        }

        #[test]
        fn detection_is_ordered_and_repeatable(values in prop::collection::vec(0.0f64..1.0, 8..120)) {
            let p = SpectrumProfile { axis: Grid::new(0.0, 1e-4, values.len()).unwrap(), values };
            let opts = DetectOptions { min_separation: 3e-4, ..DetectOptions::default() };
            let a = detect_paths(&p, &opts);
            prop_assert_eq!(format!("{a:?}"), format!("{:?}", detect_paths(&p, &opts)));
            if let Ok(t) = a {
                prop_assert!(t.len() <= opts.max_paths);
                prop_assert!(t.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }
}
