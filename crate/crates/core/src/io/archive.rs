//! Binary archives of response grids.
//!
//! Layout (all little-endian): the 8-byte magic `UACSGRID`, a `u32` version,
//! a `u32` kind (0 frequency response, 1 impulse response), `u64` rows and
//! columns, `f64` time start and step, `f64` column-axis start and step,
//! `f64` reference frequency, `u64` tone count, zero-pad factor and guard
//! frames, then row-major `complex64` values as `(f32 re, f32 im)` pairs.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::response::{Grid, Tvfr, Tvir};

const MAGIC: &[u8; 8] = b"UACSGRID";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 4 + 8 * 2 + 8 * 5 + 8 * 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Tvfr,
    Tvir,
}

/// Header fields shared by both kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub kind: GridKind,
    pub times: Grid,
    /// Frequency (Hz) or delay (s) axis.
    pub axis: Grid,
    pub f_ref: f64,
    pub n_tones: usize,
    pub zero_pad: usize,
    pub guard_frames: usize,
}

fn encode(h: &GridHeader, values: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(h.kind as u32).to_le_bytes());
    for n in [h.times.len, h.axis.len] {
        out.extend_from_slice(&(n as u64).to_le_bytes());
    }
    for x in [
        h.times.start,
        h.times.step,
        h.axis.start,
        h.axis.step,
        h.f_ref,
    ] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    for n in [h.n_tones, h.zero_pad, h.guard_frames] {
        out.extend_from_slice(&(n as u64).to_le_bytes());
    }
    for v in values {
        out.extend_from_slice(&(v.re as f32).to_le_bytes());
        out.extend_from_slice(&(v.im as f32).to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let b: [u8; N] = self.buf[self.pos..self.pos + N]
            .try_into()
            .expect("length checked");
        self.pos += N;
        b
    }
    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }
    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }
    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
    fn f32(&mut self) -> f32 {
        f32::from_le_bytes(self.take())
    }
}

fn decode(path: &Path, buf: &[u8]) -> Result<(GridHeader, Vec<Complex64>)> {
    if buf.len() < HEADER_LEN || &buf[..8] != MAGIC {
        return Err(Error::format(path, "not a response archive"));
    }
    let mut c = Cursor { buf, pos: 8 };
    let version = c.u32();
    if version != VERSION {
        return Err(Error::format(
            path,
            format!("unsupported archive version {version}"),
        ));
    }
    let kind = match c.u32() {
        0 => GridKind::Tvfr,
        1 => GridKind::Tvir,
        k => return Err(Error::format(path, format!("unknown grid kind {k}"))),
    };
    let (rows, cols) = (c.u64() as usize, c.u64() as usize);
    let (t0, dt, a0, da, f_ref) = (c.f64(), c.f64(), c.f64(), c.f64(), c.f64());
    let (n_tones, zero_pad, guard_frames) = (c.u64() as usize, c.u64() as usize, c.u64() as usize);
    let n = rows
        .checked_mul(cols)
        .filter(|n| n.checked_mul(8).is_some());
    if n.map(|n| HEADER_LEN + 8 * n) != Some(buf.len()) {
        return Err(Error::format(
            path,
            format!("{rows}x{cols} grid does not match the file length"),
        ));
    }
    let bad = |e: Error| Error::format(path, e.to_string());
    let header = GridHeader {
        kind,
        times: Grid::new(t0, dt, rows).map_err(bad)?,
        axis: Grid::new(a0, da, cols).map_err(bad)?,
        f_ref,
        n_tones,
        zero_pad,
        guard_frames,
    };
    let values = (0..rows * cols)
        .map(|_| Complex64::new(c.f32() as f64, c.f32() as f64))
        .collect();
    Ok((header, values))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_expecting(path: &Path, kind: GridKind) -> Result<(GridHeader, Vec<Complex64>)> {
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (h, v) = decode(path, &buf)?;
    if h.kind != kind {
        return Err(Error::format(
            path,
            format!("archive holds {:?}, expected {kind:?}", h.kind),
        ));
    }
    Ok((h, v))
}

pub fn tvfr_header(h: &Tvfr) -> GridHeader {
    GridHeader {
        kind: GridKind::Tvfr,
        times: h.times,
        axis: h.freqs,
        f_ref: h.freqs.start,
        n_tones: h.n_freqs(),
        zero_pad: 1,
        guard_frames: h.guard_frames,
    }
}

pub fn tvir_header(h: &Tvir) -> GridHeader {
    GridHeader {
        kind: GridKind::Tvir,
        times: h.times,
        axis: h.delays,
        f_ref: h.f_ref,
        n_tones: h.n_tones,
        zero_pad: h.zero_pad,
        guard_frames: h.guard_frames,
    }
}

pub fn write_tvfr(path: &Path, h: &Tvfr) -> Result<()> {
    write_bytes(path, &encode(&tvfr_header(h), &h.values))
}

pub fn read_tvfr(path: &Path) -> Result<Tvfr> {
    let (h, values) = read_expecting(path, GridKind::Tvfr)?;
    let mut out =
        Tvfr::new(h.times, h.axis, values).map_err(|e| Error::format(path, e.to_string()))?;
    out.guard_frames = h.guard_frames;
    Ok(out)
}

pub fn write_tvir(path: &Path, h: &Tvir) -> Result<()> {
    write_bytes(path, &encode(&tvir_header(h), &h.values))
}

pub fn read_tvir(path: &Path) -> Result<Tvir> {
    let (h, values) = read_expecting(path, GridKind::Tvir)?;
    if h.zero_pad == 0 || h.n_tones * h.zero_pad != h.axis.len {
        return Err(Error::format(
            path,
            "delay grid does not match tone count and zero-pad factor",
        ));
    }
    Ok(Tvir {
        times: h.times,
        delays: h.axis,
        values,
        f_ref: h.f_ref,
        n_tones: h.n_tones,
        zero_pad: h.zero_pad,
        guard_frames: h.guard_frames,
    })
}

/// Rounds every value to `complex64`, as stored on disk.
pub fn quantize(values: &mut [Complex64]) {
    for v in values {
        *v = Complex64::new(v.re as f32 as f64, v.im as f32 as f64);
    }
}

/// Text index of the archives written by one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    #[serde(flatten)]
    pub header: GridHeader,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::format(path, e.to_string()))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::format(path, e.message().to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::tvir_from_tvfr;

    fn sample() -> Tvfr {
        let times = Grid::new(0.01, 0.9e-3, 5).unwrap();
        let freqs = Grid::new(32_000.0, 1000.0, 7).unwrap();
        let values = (0..35)
            .map(|i| Complex64::new(i as f64 * 0.25, -(i as f64) * 0.5))
            .collect();
        let mut h = Tvfr::new(times, freqs, values).unwrap();
        h.guard_frames = 2;
        h
    }

    #[test]
    fn round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let h = sample();
        let p = dir.path().join("h.bin");
        write_tvfr(&p, &h).unwrap();
        assert_eq!(read_tvfr(&p).unwrap(), h);
        assert_eq!(
            fs::metadata(&p).unwrap().len() as usize,
            HEADER_LEN + 35 * 8
        );

        let mut ir = tvir_from_tvfr(&h, 3).unwrap();
        quantize(&mut ir.values);
        let q = dir.path().join("ir.bin");
        write_tvir(&q, &ir).unwrap();
        assert_eq!(read_tvir(&q).unwrap(), ir);
        assert!(matches!(read_tvfr(&q), Err(Error::Format { .. })));

        let m = Manifest {
            files: vec![
                ManifestEntry {
                    file: "h.bin".into(),
                    header: tvfr_header(&h),
                },
                ManifestEntry {
                    file: "ir.bin".into(),
                    header: tvir_header(&ir),
                },
            ],
        };
        let mp = dir.path().join("manifest.toml");
        m.write(&mp).unwrap();
        assert_eq!(Manifest::read(&mp).unwrap(), m);
    }

    #[test]
    fn rejects_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.bin");
        write_tvfr(&p, &sample()).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes.pop();
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(read_tvfr(&p), Err(Error::Format { .. })));
        fs::write(&p, b"garbage").unwrap();
        assert!(matches!(read_tvfr(&p), Err(Error::Format { .. })));
    }
}
