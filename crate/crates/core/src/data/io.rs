//! Dataset files.
//!
//! ```text
//! "PXRC"  u16 version
//! u32 i  u32 t  u32 b  u16 K
//! K × { u16 len  utf-8 name }
//! i·t·b × f32      row-major (i, t, b)
//! i × u16          labels
//! ```
//!
//! All integers and floats little-endian.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::PixelDataset;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

const MAGIC: &[u8; 4] = b"PXRC";
const VERSION: u16 = 1;

/// Exact size in bytes of the file [`write_dataset`] produces.
pub fn dataset_file_size(d: &PixelDataset) -> usize {
    let header = 4 + 2 + 4 * 3 + 2;
    let names: usize = d.classes().iter().map(|n| 2 + n.len()).sum();
    let [i, t, b] = d.shape();
    header + names + 4 * i * t * b + 2 * i
}

pub fn write_dataset<W: Write>(w: &mut W, d: &PixelDataset) -> Result<()> {
    if d.num_classes() > u16::MAX as usize {
        return Err(Error::data("too many classes for the dataset format"));
    }
    let [i, t, b] = d.shape();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for v in [i, t, b] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    w.write_all(&(d.num_classes() as u16).to_le_bytes())?;
    for name in d.classes() {
        w.write_all(&(name.len() as u16).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
    }
    for v in d.x().data() {
        w.write_all(&v.to_le_bytes())?;
    }
    for &l in d.labels() {
        w.write_all(&(l as u16).to_le_bytes())?;
    }
    Ok(())
}

pub fn save_dataset(path: &Path, d: &PixelDataset) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dataset(&mut w, d)?;
    w.flush()?;
    Ok(())
}

fn read_bytes<R: Read>(r: &mut R, n: usize) -> Result<Vec<u8>> {
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => Error::Corrupt("dataset file is truncated".into()),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

fn read_u16<R: Read>(r: &mut R) -> Result<u16> {
    Ok(u16::from_le_bytes(read_bytes(r, 2)?.try_into().unwrap()))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_bytes(r, 4)?.try_into().unwrap()))
}

pub fn read_dataset<R: Read>(mut r: R) -> Result<PixelDataset> {
    if read_bytes(&mut r, 4)? != MAGIC {
        return Err(Error::Format("not a dataset file (bad magic)".into()));
    }
    let version = read_u16(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported dataset version {version}")));
    }
    let i = read_u32(&mut r)? as usize;
    let t = read_u32(&mut r)? as usize;
    let b = read_u32(&mut r)? as usize;
    if i == 0 || t == 0 || b == 0 {
        return Err(Error::Corrupt(format!("dataset dims {i}×{t}×{b} contain a zero")));
    }
    let k = read_u16(&mut r)? as usize;
    let mut classes = Vec::with_capacity(k);
    for _ in 0..k {
        let len = read_u16(&mut r)? as usize;
        let name = String::from_utf8(read_bytes(&mut r, len)?)
            .map_err(|_| Error::Corrupt("class name is not utf-8".into()))?;
        classes.push(name);
    }
    let n = i.checked_mul(t).and_then(|v| v.checked_mul(b)).ok_or_else(|| Error::Corrupt("dims overflow".into()))?;
    let raw = read_bytes(&mut r, 4 * n)?;
    let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    let raw = read_bytes(&mut r, 2 * i)?;
    let labels = raw.chunks_exact(2).map(|c| u16::from_le_bytes(c.try_into().unwrap()) as usize).collect();
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Corrupt("trailing bytes after labels".into()));
    }
    let x = Tensor::new(vec![i, t, b], data)?;
    PixelDataset::new(x, labels, classes).map_err(|e| Error::Corrupt(e.to_string()))
}

pub fn load_dataset(path: &Path) -> Result<PixelDataset> {
    read_dataset(BufReader::new(File::open(path)?))
}

/// Reads a CSV with a header row of `t·b` feature columns followed by a
/// `label` column. Features are ordered row-major `(t, b)`. Labels may be
/// integer ids or class names; names are catalogued in first-seen order.
pub fn read_csv_dataset<R: Read>(r: R, time_steps: usize) -> Result<PixelDataset> {
    let mut lines = BufReader::new(r).lines();
    let header = lines.next().ok_or_else(|| Error::EmptyDataset("CSV has no header".into()))??;
    let columns = header.split(',').count();
    if columns < 2 {
        return Err(Error::data("CSV needs feature columns and a label column"));
    }
    let features = columns - 1;
    if time_steps == 0 || features % time_steps != 0 {
        return Err(Error::data(format!("{features} feature columns do not split into {time_steps} time steps")));
    }
    let bands = features / time_steps;

    let mut data = Vec::new();
    let mut raw_labels = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns {
            return Err(Error::data(format!("line {}: {} fields, expected {columns}", n + 2, fields.len())));
        }
        for f in &fields[..features] {
            data.push(f.parse::<f32>().map_err(|_| Error::data(format!("line {}: bad number {f:?}", n + 2)))?);
        }
        raw_labels.push(fields[features].to_string());
    }
    if raw_labels.is_empty() {
        return Err(Error::EmptyDataset("CSV has no samples".into()));
    }

    let (labels, classes) = if raw_labels.iter().all(|l| l.parse::<usize>().is_ok()) {
        let ids: Vec<usize> = raw_labels.iter().map(|l| l.parse().unwrap()).collect();
        let k = ids.iter().max().unwrap() + 1;
        (ids, (0..k).map(|c| format!("class_{c}")).collect())
    } else {
        let mut classes: Vec<String> = Vec::new();
        let ids = raw_labels
            .iter()
            .map(|l| match classes.iter().position(|c| c == l) {
                Some(p) => p,
                None => {
                    classes.push(l.clone());
                    classes.len() - 1
                }
            })
            .collect();
        (ids, classes)
    };
    let x = Tensor::new(vec![labels.len(), time_steps, bands], data)?;
    PixelDataset::new(x, labels, classes)
}
