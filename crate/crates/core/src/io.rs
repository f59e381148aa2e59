//! File formats.
//!
//! Fields: 32-byte little-endian header followed by row-major `f64` samples
//! (`re, im` pairs when complex).
//!
//! ```text
//! 0  magic "BTLH"     16 j_min (i32, group fields)
//! 4  n (u32)          20 j_max (i32, group fields)
//! 8  J (u32)          24 m     (u32, 0 for plain fields)
//! 12 flags (u32)      28 reserved
//! ```
//!
//! `flags` bit 0 marks complex samples, bit 1 a group field whose rows are
//! stored node by node. Grid sets use magic "BTLS", `n`, `J`, cell count and
//! then one byte per 8 cells, least significant bit first.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::axb::GField;
use crate::error::{Error, Result};
use crate::grid::{SampledField, ScaleGrid};
use crate::hausdorff::GridSet;

const FIELD_MAGIC: &[u8; 4] = b"BTLH";
const SET_MAGIC: &[u8; 4] = b"BTLS";
const COMPLEX: u32 = 1;
const GROUP: u32 = 2;

struct Header {
    n: u32,
    res: u32,
    flags: u32,
    scales: Option<ScaleGrid>,
}

fn write_header<W: Write>(w: &mut W, h: &Header) -> Result<()> {
    let mut buf = [0u8; 32];
    buf[0..4].copy_from_slice(FIELD_MAGIC);
    buf[4..8].copy_from_slice(&h.n.to_le_bytes());
    buf[8..12].copy_from_slice(&h.res.to_le_bytes());
    buf[12..16].copy_from_slice(&h.flags.to_le_bytes());
    if let Some(s) = &h.scales {
        buf[16..20].copy_from_slice(&s.j_min.to_le_bytes());
        buf[20..24].copy_from_slice(&s.j_max.to_le_bytes());
        buf[24..28].copy_from_slice(&s.m.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn u32_at(buf: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(buf[at..at + 4].try_into().unwrap())
}

fn i32_at(buf: &[u8], at: usize) -> i32 {
    i32::from_le_bytes(buf[at..at + 4].try_into().unwrap())
}

fn read_header<R: Read>(r: &mut R) -> Result<Header> {
    let mut buf = [0u8; 32];
    r.read_exact(&mut buf)?;
    if &buf[0..4] != FIELD_MAGIC {
        return Err(Error::format("bad magic, expected BTLH"));
    }
    let flags = u32_at(&buf, 12);
    let scales = if flags & GROUP != 0 {
        Some(ScaleGrid::new(i32_at(&buf, 16), i32_at(&buf, 20), u32_at(&buf, 24))?)
    } else {
        None
    };
    Ok(Header { n: u32_at(&buf, 4), res: u32_at(&buf, 8), flags, scales })
}

fn write_samples<W: Write>(w: &mut W, vals: &[Complex64], complex: bool) -> Result<()> {
    for v in vals {
        w.write_all(&v.re.to_le_bytes())?;
        if complex {
            w.write_all(&v.im.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_samples<R: Read>(r: &mut R, count: usize, complex: bool) -> Result<Vec<Complex64>> {
    let per = if complex { 16 } else { 8 };
    let mut bytes = vec![0u8; count * per];
    r.read_exact(&mut bytes).map_err(|e| Error::format(format!("truncated sample block: {e}")))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::format("trailing bytes after the sample block"));
    }
    let f = |i: usize| f64::from_le_bytes(bytes[i * 8..i * 8 + 8].try_into().unwrap());
    Ok((0..count)
        .map(|k| if complex { Complex64::new(f(2 * k), f(2 * k + 1)) } else { Complex64::new(f(k), 0.0) })
        .collect())
}

pub fn write_field<W: Write>(w: &mut W, f: &SampledField) -> Result<()> {
    let complex = f.is_complex();
    write_header(
        w,
        &Header { n: f.dim() as u32, res: f.resolution(), flags: if complex { COMPLEX } else { 0 }, scales: None },
    )?;
    write_samples(w, f.values(), complex)
}

pub fn read_field<R: Read>(r: &mut R) -> Result<SampledField> {
    let h = read_header(r)?;
    if h.flags & GROUP != 0 {
        return Err(Error::format("file holds a group field"));
    }
    let count = 1usize << (h.res as usize * h.n as usize);
    let vals = read_samples(r, count, h.flags & COMPLEX != 0)?;
    SampledField::new(h.n as usize, h.res, vals)
}

pub fn save_field(path: &Path, f: &SampledField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_field(&mut w, f)?;
    w.flush()?;
    Ok(())
}

pub fn load_field(path: &Path) -> Result<SampledField> {
    read_field(&mut BufReader::new(File::open(path)?))
}

pub fn write_gfield<W: Write>(w: &mut W, f: &GField) -> Result<()> {
    let complex = f.values().iter().any(|v| v.im != 0.0);
    let flags = GROUP | if complex { COMPLEX } else { 0 };
    write_header(w, &Header { n: f.dim() as u32, res: f.resolution(), flags, scales: Some(*f.scales()) })?;
    write_samples(w, f.values(), complex)
}

pub fn read_gfield<R: Read>(r: &mut R) -> Result<GField> {
    let h = read_header(r)?;
    let scales = h.scales.ok_or_else(|| Error::format("file holds a plain field"))?;
    let count = (1usize << (h.res as usize * h.n as usize)) * scales.len();
    let vals = read_samples(r, count, h.flags & COMPLEX != 0)?;
    GField::new(h.n as usize, h.res, scales, vals)
}

/// Columns `x, re, im` for `n = 1`.
pub fn write_field_csv<W: Write>(w: W, f: &SampledField) -> Result<()> {
    if f.dim() != 1 {
        return Err(Error::format("CSV fields are 1-D only"));
    }
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["x", "re", "im"])?;
    let h = f.step();
    for (i, v) in f.values().iter().enumerate() {
        wtr.write_record([format!("{:e}", i as f64 * h), format!("{:e}", v.re), format!("{:e}", v.im)])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_field_csv<R: Read>(r: R) -> Result<SampledField> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut vals = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .ok_or_else(|| Error::format("short CSV row"))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::format(e.to_string()))
        };
        vals.push(Complex64::new(num(1)?, if rec.len() > 2 { num(2)? } else { 0.0 }));
    }
    let len = vals.len();
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::format(format!("CSV field needs 2^J rows, got {len}")));
    }
    SampledField::new(1, len.trailing_zeros(), vals)
}

pub fn write_set<W: Write>(w: &mut W, set: &GridSet) -> Result<()> {
    let mut head = [0u8; 16];
    head[0..4].copy_from_slice(SET_MAGIC);
    head[4..8].copy_from_slice(&(set.dim() as u32).to_le_bytes());
    head[8..12].copy_from_slice(&set.resolution().to_le_bytes());
    head[12..16].copy_from_slice(&(set.count() as u32).to_le_bytes());
    w.write_all(&head)?;
    let bytes: Vec<u8> = set
        .mask()
        .chunks(8)
        .map(|c| c.iter().enumerate().fold(0u8, |b, (i, &on)| if on { b | (1 << i) } else { b }))
        .collect();
    w.write_all(&bytes)?;
    Ok(())
}

pub fn read_set<R: Read>(r: &mut R) -> Result<GridSet> {
    let mut head = [0u8; 16];
    r.read_exact(&mut head)?;
    if &head[0..4] != SET_MAGIC {
        return Err(Error::format("bad magic, expected BTLS"));
    }
    let (n, res, count) = (u32_at(&head, 4) as usize, u32_at(&head, 8), u32_at(&head, 12) as usize);
    if n != 1 && n != 2 || res > 16 {
        return Err(Error::format(format!("unsupported set header n = {n}, J = {res}")));
    }
    let cells = 1usize << (res as usize * n);
    let mut bytes = vec![0u8; cells.div_ceil(8)];
    r.read_exact(&mut bytes)?;
    let mask: Vec<bool> = (0..cells).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect();
    let set = GridSet::new(n, res, mask)?;
    if set.count() != count {
        return Err(Error::format(format!("header says {count} cells, mask has {}", set.count())));
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_round_trip() {
        let f = SampledField::from_fn(2, 3, |x| (x[0] * 7.0).sin() - x[1]).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        assert_eq!(buf.len(), 32 + 64 * 8);
        assert_eq!(&buf[0..4], b"BTLH");
        assert_eq!(read_field(&mut buf.as_slice()).unwrap(), f);
        let c = f.scaled(Complex64::new(0.0, 1.0));
        let mut buf = Vec::new();
        write_field(&mut buf, &c).unwrap();
        assert_eq!(buf.len(), 32 + 64 * 16);
        assert_eq!(read_field(&mut buf.as_slice()).unwrap().values(), c.values());
    }

    #[test]
    fn truncated_field_rejected() {
        let f = SampledField::zeros(1, 4).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        buf.pop();
        assert!(read_field(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn gfield_round_trip() {
        let scales = ScaleGrid::new(1, 3, 2).unwrap();
        let g = GField::from_fn(1, 4, scales, |x, t| x[0] + t).unwrap();
        let mut buf = Vec::new();
        write_gfield(&mut buf, &g).unwrap();
        let back = read_gfield(&mut buf.as_slice()).unwrap();
        assert_eq!(back.values(), g.values());
        assert_eq!(back.scales(), g.scales());
        assert!(read_field(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let f = SampledField::from_fn(1, 5, |x| (x[0] * 3.0).cos()).unwrap();
        let mut buf = Vec::new();
        write_field_csv(&mut buf, &f).unwrap();
        let back = read_field_csv(buf.as_slice()).unwrap();
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn set_round_trip() {
        let set = GridSet::from_cells(2, 3, &[0, 9, 63]).unwrap();
        let mut buf = Vec::new();
        write_set(&mut buf, &set).unwrap();
        assert_eq!(read_set(&mut buf.as_slice()).unwrap(), set);
    }
}
