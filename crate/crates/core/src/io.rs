//! Binary and CSV formats.
//!
//! All binary formats are little-endian and start with a 4-byte magic and a
//! `u32` version (currently 1).
//!
//! * `SGL1` dataset: `N: u32`, `M: u32`, `is_real: i32`, `ℓ_m: u32 × (2M+1)`,
//!   then `N·𝒟` complex values as `(re, im)` `f64` pairs, row-major.
//! * `SGA1` Fourier affinity: `N: u32`, `F: u32`, `ε: f64`, `K: u32`,
//!   `debias: u8`, `density_normalized: u8`, `sparsify: f64` (NaN when unset),
//!   then blocks `m = −F..=F`, each `N × N` row-major complex.
//! * `SGB1` harmonic basis: `N: u32`, `F: u32`, `normalized: u8`,
//!   `degrees: f64 × N`, then for `m = 0..=F` the `N` eigenvalues followed by
//!   the `N × N` eigenvectors column-major.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use faer::Mat;

use crate::dataset::{AngularLayout, SteerableDataset};
use crate::error::{Error, Result};
use crate::harmonics::{HarmonicBasis, SpectrumEntry};
use crate::kernel::{FourierAffinity, KernelConfig};
use crate::C64;

const VERSION: u32 = 1;

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn bytes(&mut self, b: &[u8]) -> Result<()> {
        Ok(self.0.write_all(b)?)
    }
    fn u32(&mut self, v: u32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn i32(&mut self, v: i32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn u8(&mut self, v: u8) -> Result<()> {
        self.bytes(&[v])
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn c64(&mut self, v: C64) -> Result<()> {
        self.f64(v.re)?;
        self.f64(v.im)
    }
    fn len(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit in u32")))?;
        self.u32(v)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| {
                Error::Format(format!(
                    "truncated file: needed {n} bytes at offset {}",
                    self.pos
                ))
            })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn arr<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.arr()?))
    }
    fn usize(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }
    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.arr()?))
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.arr::<1>()?[0])
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.arr()?))
    }
    fn c64(&mut self) -> Result<C64> {
        Ok(C64::new(self.f64()?, self.f64()?))
    }
    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        let got = self.take(4)?;
        if got != magic {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(got),
                String::from_utf8_lossy(magic)
            )));
        }
        let v = self.u32()?;
        if v != VERSION {
            return Err(Error::Format(format!("unsupported version {v}")));
        }
        Ok(())
    }
    /// Guard against absurd counts before allocating.
    fn expect_remaining(&self, bytes: usize) -> Result<()> {
        if self.buf.len() - self.pos < bytes {
            return Err(Error::Format(format!(
                "truncated file: {} bytes left, header promises {bytes}",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn create(path: &Path) -> Result<Writer<BufWriter<fs::File>>> {
    Ok(Writer(BufWriter::new(fs::File::create(path)?)))
}

pub fn encode_dataset(ds: &SteerableDataset) -> Result<Vec<u8>> {
    let mut w = Writer(Vec::with_capacity(32 + ds.values().len() * 16));
    w.bytes(b"SGL1")?;
    w.u32(VERSION)?;
    w.len(ds.len())?;
    w.len(ds.layout().max_freq())?;
    w.i32(ds.is_real() as i32)?;
    for &l in ds.layout().ell_counts() {
        w.len(l)?;
    }
    for &v in ds.values() {
        w.c64(v)?;
    }
    Ok(w.0)
}

pub fn decode_dataset(bytes: &[u8]) -> Result<SteerableDataset> {
    let mut r = Reader { buf: bytes, pos: 0 };
    r.header(b"SGL1")?;
    let n = r.usize()?;
    let m = r.usize()?;
    let is_real = match r.i32()? {
        0 => false,
        1 => true,
        other => return Err(Error::Format(format!("bad is_real flag {other}"))),
    };
    r.expect_remaining((2 * m + 1) * 4)?;
    let ell = (0..2 * m + 1)
        .map(|_| r.usize())
        .collect::<Result<Vec<_>>>()?;
    let layout = AngularLayout::new(ell).map_err(|e| Error::Format(e.to_string()))?;
    let count = n
        .checked_mul(layout.dim())
        .ok_or_else(|| Error::Format("size overflow".into()))?;
    r.expect_remaining(count.saturating_mul(16))?;
    let values = (0..count).map(|_| r.c64()).collect::<Result<Vec<_>>>()?;
    r.finish()?;
    SteerableDataset::new(layout, n, values)
        .and_then(|d| d.with_real_flag(is_real))
        .map_err(|e| Error::Format(e.to_string()))
}

pub fn save_dataset(path: impl AsRef<Path>, ds: &SteerableDataset) -> Result<()> {
    Ok(fs::write(path, encode_dataset(ds)?)?)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<SteerableDataset> {
    decode_dataset(&fs::read(path)?)
}

/// One line per stored coefficient: `i,m,ell,re,im` with `ell` 1-based.
pub fn export_csv(path: impl AsRef<Path>, ds: &SteerableDataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["i", "m", "ell", "re", "im"])?;
    let layout = ds.layout();
    for (i, row) in ds.rows().enumerate() {
        for m in layout.freqs() {
            for (l, c) in layout.columns(m).enumerate() {
                w.write_record(&[
                    i.to_string(),
                    m.to_string(),
                    (l + 1).to_string(),
                    row[c].re.to_string(),
                    row[c].im.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a coefficient CSV. Without a layout one is inferred from the largest
/// `|m|` and per-`m` largest `ell` present.
pub fn import_csv(
    path: impl AsRef<Path>,
    layout: Option<AngularLayout>,
) -> Result<SteerableDataset> {
    let mut rd = csv::Reader::from_path(path)?;
    let headers = rd.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["i", "m", "ell", "re", "im"] {
        return Err(Error::Format(format!("unexpected CSV header {headers:?}")));
    }
    let mut entries = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let field = |k: usize| {
            rec.get(k)
                .ok_or_else(|| Error::Format("short CSV row".into()))
        };
        let parse_err = |e: &dyn std::fmt::Display| Error::Format(format!("bad CSV value: {e}"));
        let i: usize = field(0)?.parse().map_err(|e| parse_err(&e))?;
        let m: i32 = field(1)?.parse().map_err(|e| parse_err(&e))?;
        let l: usize = field(2)?.parse().map_err(|e| parse_err(&e))?;
        let re: f64 = field(3)?.parse().map_err(|e| parse_err(&e))?;
        let im: f64 = field(4)?.parse().map_err(|e| parse_err(&e))?;
        if l == 0 {
            return Err(Error::Format("ell is 1-based".into()));
        }
        entries.push((i, m, l, C64::new(re, im)));
    }
    let layout = match layout {
        Some(l) => l,
        None => {
            let mm = entries
                .iter()
                .map(|e| e.1.unsigned_abs() as usize)
                .max()
                .unwrap_or(0);
            let mut ell = vec![0; 2 * mm + 1];
            for e in &entries {
                let s = (e.1 + mm as i32) as usize;
                ell[s] = ell[s].max(e.2);
            }
            AngularLayout::new(ell)?
        }
    };
    let n = entries.iter().map(|e| e.0 + 1).max().unwrap_or(0);
    let d = layout.dim();
    let mut values = vec![C64::new(0.0, 0.0); n * d];
    let mut seen = vec![false; n * d];
    for (i, m, l, v) in entries {
        let cols = layout.columns(m);
        if l > cols.len() {
            return Err(Error::Format(format!(
                "entry (m={m}, ell={l}) outside the layout"
            )));
        }
        let at = i * d + cols.start + l - 1;
        if std::mem::replace(&mut seen[at], true) {
            return Err(Error::Format(format!(
                "duplicate entry i={i} m={m} ell={l}"
            )));
        }
        values[at] = v;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Format("CSV does not cover every coefficient".into()));
    }
    SteerableDataset::new(layout, n, values)
}

pub fn save_affinity(path: impl AsRef<Path>, fa: &FourierAffinity) -> Result<()> {
    let mut w = create(path.as_ref())?;
    let cfg = fa.config();
    w.bytes(b"SGA1")?;
    w.u32(VERSION)?;
    w.len(fa.n())?;
    w.len(fa.max_freq())?;
    w.f64(cfg.epsilon)?;
    w.len(cfg.n_angles)?;
    w.u8(cfg.debias as u8)?;
    w.u8(fa.is_density_normalized() as u8)?;
    w.f64(cfg.sparsify_threshold.unwrap_or(f64::NAN))?;
    let n = fa.n();
    for m in fa.freqs() {
        for i in 0..n {
            for j in 0..n {
                w.c64(fa.entry(m, i, j))?;
            }
        }
    }
    w.0.flush()?;
    Ok(())
}

pub fn load_affinity(path: impl AsRef<Path>) -> Result<FourierAffinity> {
    let bytes = fs::read(path)?;
    let mut r = Reader {
        buf: &bytes,
        pos: 0,
    };
    r.header(b"SGA1")?;
    let n = r.usize()?;
    let f = r.usize()?;
    let mut cfg = KernelConfig::new(r.f64()?)
        .with_angles(r.usize()?)
        .with_max_freq(f);
    cfg.debias = r.u8()? != 0;
    let density = r.u8()? != 0;
    cfg.density_normalize = density;
    let sp = r.f64()?;
    cfg.sparsify_threshold = (!sp.is_nan()).then_some(sp);
    r.expect_remaining((2 * f + 1).saturating_mul(n * n).saturating_mul(16))?;
    let mut blocks = Vec::with_capacity(f + 1);
    for m in -(f as i32)..=(f as i32) {
        let mut b = Mat::<C64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                b[(i, j)] = r.c64()?;
            }
        }
        if m >= 0 {
            blocks.push(b);
        }
    }
    r.finish()?;
    FourierAffinity::from_parts(cfg, blocks, density)
}

pub fn save_basis(path: impl AsRef<Path>, basis: &HarmonicBasis) -> Result<()> {
    let mut w = create(path.as_ref())?;
    w.bytes(b"SGB1")?;
    w.u32(VERSION)?;
    let n = basis.n();
    w.len(n)?;
    w.len(basis.max_freq())?;
    w.u8(basis.is_normalized() as u8)?;
    for &d in basis.degrees() {
        w.f64(d)?;
    }
    for (m, v) in basis.nonneg_vectors().iter().enumerate() {
        let vals = basis.eigenvalues(m as i32);
        if vals.len() != n || v.ncols() != n {
            return Err(Error::Format("only full bases can be saved".into()));
        }
        for &l in vals {
            w.f64(l)?;
        }
        for j in 0..n {
            for i in 0..n {
                w.c64(v[(i, j)])?;
            }
        }
    }
    w.0.flush()?;
    Ok(())
}

pub fn load_basis(path: impl AsRef<Path>) -> Result<HarmonicBasis> {
    let bytes = fs::read(path)?;
    let mut r = Reader {
        buf: &bytes,
        pos: 0,
    };
    r.header(b"SGB1")?;
    let n = r.usize()?;
    let f = r.usize()?;
    let normalized = r.u8()? != 0;
    r.expect_remaining(n.saturating_mul(8))?;
    let degrees = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    r.expect_remaining((f + 1).saturating_mul(n * 8 + n * n * 16))?;
    let mut eigenvalues = Vec::with_capacity(f + 1);
    let mut vectors = Vec::with_capacity(f + 1);
    for _ in 0..=f {
        eigenvalues.push((0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?);
        let mut v = Mat::<C64>::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                v[(i, j)] = r.c64()?;
            }
        }
        vectors.push(v);
    }
    r.finish()?;
    HarmonicBasis::from_parts(normalized, degrees, eigenvalues, vectors)
}

/// `m,k,lambda` rows.
pub fn write_spectrum_csv(path: impl AsRef<Path>, spectrum: &[SpectrumEntry]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["m", "k", "lambda"])?;
    for e in spectrum {
        w.write_record(&[e.m.to_string(), e.k.to_string(), e.lambda.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::gen_sphere;

    #[test]
    fn dataset_round_trip_bytes() {
        let ds = gen_sphere(10, 1);
        let back = decode_dataset(&encode_dataset(&ds).unwrap()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn corrupt_and_truncated() {
        let mut b = encode_dataset(&gen_sphere(3, 1)).unwrap();
        let good = b.clone();
        b[0] = b'X';
        assert!(matches!(decode_dataset(&b), Err(Error::Format(_))));
        assert!(matches!(
            decode_dataset(&good[..good.len() - 1]),
            Err(Error::Format(_))
        ));
        let mut v = good.clone();
        v[4] = 2;
        assert!(matches!(decode_dataset(&v), Err(Error::Format(_))));
        let mut extra = good;
        extra.push(0);
        assert!(matches!(decode_dataset(&extra), Err(Error::Format(_))));
    }

    #[test]
    fn header_layout() {
        let b = encode_dataset(&gen_sphere(2, 1)).unwrap();
        assert_eq!(&b[..4], b"SGL1");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(b[12..16].try_into().unwrap()), 1);
        assert_eq!(b.len(), 20 + 3 * 4 + 2 * 2 * 16);
    }
}
