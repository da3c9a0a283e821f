//! CSV import and export.
//!
//! Every file has a header row, `,` separators and `.` decimals. Report
//! tables print values beyond the analysed span as `>x` and coherence
//! bandwidths found by the threshold fallback with a trailing `*`.

use std::path::Path;

use crate::characterize::{
    BandwidthEstimate, ChannelParams, Coherence, CorrelationFunction, SpectrumProfile,
};
use crate::delay_comp::DelayTrack;
use crate::error::{Error, Result};
use crate::estimator::CalibrationCurve;
use crate::multipath::{PathDecomposition, PathReport};
use crate::pipeline::ChannelSummary;
use crate::response::Grid;
use crate::stats_fit::{rician_pdf, RicianFit};

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(source) => Error::io(path, source),
            other => Error::format(path, format!("{other:?}")),
        }
    } else {
        Error::format(path, e.to_string())
    }
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.write_record(r.into_iter().collect::<Vec<_>>())
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let found: Vec<String> = r
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if found != header {
        return Err(Error::format(
            path,
            format!(
                "expected header {}, found {}",
                header.join(","),
                found.join(",")
            ),
        ));
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            rec.iter()
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|_| {
                        Error::format(path, format!("row {}: {f:?} is not a number", i + 2))
                    })
                })
                .collect()
        })
        .collect()
}

/// Calibration curve from `freq_hz,gain_db` rows.
pub fn read_calibration(path: &Path) -> Result<CalibrationCurve> {
    let rows = read_rows(path, &["freq_hz", "gain_db"])?;
    CalibrationCurve::new(rows.into_iter().map(|r| (r[0], r[1])).collect())
        .map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_calibration(path: &Path, cal: &CalibrationCurve) -> Result<()> {
    write_rows(
        path,
        &["freq_hz", "gain_db"],
        cal.points()
            .iter()
            .map(|(f, g)| [f.to_string(), g.to_string()]),
    )
}

pub fn write_delay_track(path: &Path, track: &DelayTrack) -> Result<()> {
    let rows = (0..track.times.len).map(|m| {
        [
            track.times.at(m).to_string(),
            track.tau0[m].to_string(),
            track.ratio[m].to_string(),
        ]
    });
    write_rows(path, &["t_s", "tau0_s", "ratio"], rows)
}

/// Reads a track written by [`write_delay_track`]; the delay step and span
/// are not stored and must be supplied.
pub fn read_delay_track(path: &Path, delay_step: f64, span: f64) -> Result<DelayTrack> {
    let rows = read_rows(path, &["t_s", "tau0_s", "ratio"])?;
    let times = Grid::from_points(&rows.iter().map(|r| r[0]).collect::<Vec<_>>())
        .map_err(|e| Error::format(path, e.to_string()))?;
    let track = DelayTrack {
        times,
        tau0: rows.iter().map(|r| r[1]).collect(),
        ratio: rows.iter().map(|r| r[2]).collect(),
        delay_step,
        span,
    };
    track
        .validate()
        .map_err(|e| Error::format(path, e.to_string()))?;
    Ok(track)
}

pub fn write_profile(path: &Path, axis: &str, value: &str, p: &SpectrumProfile) -> Result<()> {
    write_rows(
        path,
        &[axis, value],
        (0..p.values.len()).map(|i| [p.axis.at(i).to_string(), p.values[i].to_string()]),
    )
}

/// Lag, real and imaginary parts, and magnitude normalized to lag zero.
pub fn write_correlation(path: &Path, lag: &str, c: &CorrelationFunction) -> Result<()> {
    let c0 = c.zero().norm();
    let rows = c.values.iter().enumerate().map(|(i, v)| {
        let mag = if c0 > 0.0 { v.norm() / c0 } else { 0.0 };
        [
            c.lags.at(i).to_string(),
            v.re.to_string(),
            v.im.to_string(),
            mag.to_string(),
        ]
    });
    write_rows(path, &[lag, "re", "im", "normalized_magnitude"], rows)
}

/// Histogram and fitted density at the bin centres.
pub fn write_histogram(path: &Path, fit: &RicianFit) -> Result<()> {
    let h = &fit.histogram;
    let rows = h.centers.iter().zip(&h.density).map(|(&x, &p)| {
        [
            x.to_string(),
            p.to_string(),
            rician_pdf(x, fit.k).unwrap_or(f64::NAN).to_string(),
        ]
    });
    write_rows(path, &["x", "histogram", "rician_pdf"], rows)
}

fn fixed(v: f64, digits: usize) -> String {
    format!("{v:.digits$}")
}

/// `t_c` scaled by `scale`, with `>` for values beyond the span.
pub fn format_coherence(c: Coherence, scale: f64, digits: usize) -> String {
    match c {
        Coherence::Value(v) => fixed(v * scale, digits),
        Coherence::BeyondSpan(v) => format!(">{}", fixed(v * scale, digits)),
    }
}

/// `b_c` scaled by `scale`; threshold fallbacks carry a trailing `*`.
pub fn format_bandwidth(b: BandwidthEstimate, scale: f64, digits: usize) -> String {
    match b {
        BandwidthEstimate::Sidelobe(v) => fixed(v * scale, digits),
        BandwidthEstimate::Threshold(v) => format!("{}*", fixed(v * scale, digits)),
        BandwidthEstimate::BeyondSpan(v) => format!(">{}*", fixed(v * scale, digits)),
    }
}

/// One-row summary of a characterization in SI units.
pub fn write_params(path: &Path, p: &ChannelParams, b: BandwidthEstimate) -> Result<()> {
    let row = [
        format_coherence(p.t_c, 1.0, 6),
        format_bandwidth(b, 1.0, 3),
        p.sigma_tau.to_string(),
        p.sigma_nu.to_string(),
    ];
    write_rows(
        path,
        &["t_c_s", "b_c_hz", "sigma_tau_s", "sigma_nu_hz"],
        [row],
    )
}

pub fn write_path_reports(path: &Path, reports: &[PathReport]) -> Result<()> {
    let rows = reports.iter().enumerate().map(|(i, r)| {
        [
            (i + 1).to_string(),
            r.tau.to_string(),
            format_coherence(r.params.t_c, 1.0, 6),
            format_bandwidth(r.bandwidth, 1.0, 3),
            r.params.sigma_tau.to_string(),
            r.params.sigma_nu.to_string(),
            r.k.to_string(),
            (100.0 * r.epsilon).to_string(),
        ]
    });
    write_rows(
        path,
        &[
            "path",
            "tau_s",
            "t_c_s",
            "b_c_hz",
            "sigma_tau_s",
            "sigma_nu_hz",
            "k",
            "epsilon_pct",
        ],
        rows,
    )
}

pub fn write_path_windows(path: &Path, d: &PathDecomposition) -> Result<()> {
    let rows = d
        .paths
        .iter()
        .zip(&d.window_bounds)
        .enumerate()
        .map(|(i, (p, w))| {
            [
                (i + 1).to_string(),
                p.tau.to_string(),
                w.start.to_string(),
                w.end.to_string(),
            ]
        });
    write_rows(
        path,
        &["path", "tau_s", "window_start_s", "window_end_s"],
        rows,
    )
}

pub fn write_fit(path: &Path, fit: &RicianFit) -> Result<()> {
    let row = [
        fit.k.to_string(),
        (100.0 * fit.epsilon).to_string(),
        fit.n_samples.to_string(),
    ];
    write_rows(path, &["k", "epsilon_pct", "n_samples"], [row])
}

/// Global parameters, one row per channel: `t_c` in ms, `b_c` in kHz,
/// `sigma_tau` in ms, `K`, `epsilon` in percent.
pub fn write_global_table(path: &Path, rows: &[ChannelSummary]) -> Result<()> {
    let out = rows.iter().map(|r| {
        [
            r.channel.clone(),
            format_coherence(r.params.t_c, 1e3, 1),
            format_bandwidth(r.bandwidth, 1e-3, 2),
            fixed(r.params.sigma_tau * 1e3, 3),
            fixed(r.k, 2),
            fixed(100.0 * r.epsilon, 1),
        ]
    });
    write_rows(
        path,
        &[
            "channel",
            "t_c_ms",
            "b_c_khz",
            "sigma_tau_ms",
            "k",
            "epsilon_pct",
        ],
        out,
    )
}

fn path_columns(rows: &[ChannelSummary]) -> usize {
    rows.iter().map(|r| r.paths.len()).max().unwrap_or(0).max(4)
}

fn write_per_path(
    path: &Path,
    rows: &[ChannelSummary],
    prefix: &str,
    unit: &str,
    cell: impl Fn(&PathReport) -> String,
) -> Result<()> {
    let n = path_columns(rows);
    let names: Vec<String> = (1..=n).map(|p| format!("{prefix}{p}{unit}")).collect();
    let mut header = vec!["channel"];
    header.extend(names.iter().map(String::as_str));
    let out = rows.iter().map(|r| {
        let mut rec = vec![r.channel.clone()];
        rec.extend((0..n).map(|p| r.paths.get(p).map(&cell).unwrap_or_default()));
        rec
    });
    write_rows(path, &header, out)
}

/// Per-path coherence time in seconds.
pub fn write_path_coherence_time(path: &Path, rows: &[ChannelSummary]) -> Result<()> {
    write_per_path(path, rows, "t_c", "_s", |r| {
        format_coherence(r.params.t_c, 1.0, 2)
    })
}

/// Per-path coherence bandwidth in kHz.
pub fn write_path_coherence_bandwidth(path: &Path, rows: &[ChannelSummary]) -> Result<()> {
    write_per_path(path, rows, "b_c", "_khz", |r| {
        format_bandwidth(r.bandwidth, 1e-3, 2)
    })
}

/// Per-path Rician K factor.
pub fn write_path_k(path: &Path, rows: &[ChannelSummary]) -> Result<()> {
    write_per_path(path, rows, "k", "", |r| fixed(r.k, 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characterize::SidelobeBandwidth;
    use num_complex::Complex64;

    fn summary(channel: &str, n_paths: usize) -> ChannelSummary {
        let params = ChannelParams {
            t_c: Coherence::BeyondSpan(2.0),
            b_c: SidelobeBandwidth::Sidelobe(5100.0),
            sigma_tau: 0.5e-3,
            sigma_nu: 1.0,
        };
        let path = PathReport {
            tau: 1e-3,
            params: ChannelParams {
                t_c: Coherence::Value(1.1),
                ..params
            },
            bandwidth: BandwidthEstimate::Threshold(5100.0),
            k: 11.2,
            epsilon: 0.059,
        };
        ChannelSummary {
            channel: channel.into(),
            params,
            bandwidth: BandwidthEstimate::Sidelobe(5100.0),
            k: 6.4,
            epsilon: 0.059,
            paths: vec![path; n_paths],
        }
    }

    #[test]
    fn report_layouts() {
        let dir = tempfile::tempdir().unwrap();
        let rows = [summary("1", 4), summary("2", 2)];
        let p = dir.path().join("t.csv");
        write_global_table(&p, &rows).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "channel,t_c_ms,b_c_khz,sigma_tau_ms,k,epsilon_pct"
        );
        assert_eq!(lines[1], "1,>2000.0,5.10,0.500,6.40,5.9");
        write_path_coherence_time(&p, &rows).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "1,1.10,1.10,1.10,1.10");
        assert_eq!(text.lines().nth(2).unwrap(), "2,1.10,1.10,,");
        write_path_coherence_bandwidth(&p, &rows).unwrap();
        assert!(std::fs::read_to_string(&p)
            .unwrap()
            .starts_with("channel,b_c1_khz,b_c2_khz,b_c3_khz,b_c4_khz\n1,5.10*,"));
        write_path_k(&p, &rows).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap().lines().nth(1).unwrap(),
            "1,11.2,11.2,11.2,11.2"
        );
    }

    #[test]
    fn calibration_and_track_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cal.csv");
        std::fs::write(&p, "freq_hz,gain_db\n30000,-1.5\n130000,2.25\n").unwrap();
        let cal = read_calibration(&p).unwrap();
        assert_eq!(cal.points(), &[(30000.0, -1.5), (130000.0, 2.25)]);
        write_calibration(&p, &cal).unwrap();
        assert_eq!(read_calibration(&p).unwrap(), cal);
        std::fs::write(&p, "freq,gain\n1,2\n").unwrap();
        assert!(matches!(read_calibration(&p), Err(Error::Format { .. })));
        std::fs::write(&p, "freq_hz,gain_db\n1,x\n").unwrap();
        assert!(matches!(read_calibration(&p), Err(Error::Format { .. })));

        let track = DelayTrack {
            times: Grid::new(0.002, 0.0009, 3).unwrap(),
            tau0: vec![1e-4, 1.0001e-4, 1.0002e-4],
            ratio: vec![1.00002; 3],
            delay_step: 1e-6,
            span: 1e-3,
        };
        let q = dir.path().join("track.csv");
        write_delay_track(&q, &track).unwrap();
        assert!(std::fs::read_to_string(&q)
            .unwrap()
            .starts_with("t_s,tau0_s,ratio\n"));
        let back = read_delay_track(&q, 1e-6, 1e-3).unwrap();
        assert_eq!(back.tau0, track.tau0);
        assert_eq!(back.ratio, track.ratio);
        assert!((back.times.step - track.times.step).abs() < 1e-15);
    }

    #[test]
    fn correlation_export() {
        let dir = tempfile::tempdir().unwrap();
        let c = CorrelationFunction::from_one_sided(
            0.5,
            &[Complex64::new(2.0, 0.0), Complex64::new(1.0, 1.0)],
        )
        .unwrap();
        let p = dir.path().join("c.csv");
        write_correlation(&p, "lag_s", &c).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "lag_s,re,im,normalized_magnitude"
        );
        assert_eq!(
            text.lines().nth(1).unwrap(),
            format!("-0.5,1,-1,{}", 2f64.sqrt() / 2.0)
        );
        assert_eq!(text.lines().count(), 4);
    }
}
