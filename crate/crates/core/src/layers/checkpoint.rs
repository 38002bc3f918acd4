//! Binary model checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "PRCN"  u16 version
//! u16 n_config  n_config × u32        (t b u d_out n1 f1 n2 f2 K peepholes tdd_relu)
//! f64 dropout_p
//! u32 n_tensors
//! n_tensors × { u16 name_len  name  u16 rank  rank × u32 dims  f32 data… }
//! ```
//!
//! Model parameters come first in [`Params::tensors`] order; any further
//! tensors (for example feature-scaling statistics) follow as extras.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{ModelConfig, Params, PixelRcnn};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

const MAGIC: &[u8; 4] = b"PRCN";
const VERSION: u16 = 1;

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub model: PixelRcnn<f32>,
    pub extras: Vec<(String, Tensor<f32>)>,
}

impl Checkpoint {
    pub fn extra(&self, name: &str) -> Option<&Tensor<f32>> {
        self.extras.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

fn write_tensor<W: Write>(w: &mut W, name: &str, t: &Tensor<f32>) -> io::Result<()> {
    w.write_all(&(name.len() as u16).to_le_bytes())?;
    w.write_all(name.as_bytes())?;
    w.write_all(&(t.rank() as u16).to_le_bytes())?;
    for &d in t.shape() {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    for v in t.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_checkpoint<W: Write>(w: &mut W, model: &PixelRcnn<f32>, extras: &[(String, Tensor<f32>)]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let ints = model.config().to_ints();
    w.write_all(&(ints.len() as u16).to_le_bytes())?;
    for v in ints {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&model.config().dropout_p.to_le_bytes())?;
    let tensors = model.params().tensors();
    w.write_all(&((tensors.len() + extras.len()) as u32).to_le_bytes())?;
    for (name, t) in tensors {
        write_tensor(w, &name, t)?;
    }
    for (name, t) in extras {
        write_tensor(w, name, t)?;
    }
    Ok(())
}

pub fn save_checkpoint(path: &Path, model: &PixelRcnn<f32>, extras: &[(String, Tensor<f32>)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(&mut w, model, extras)?;
    w.flush()?;
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; n];
        self.inner.read_exact(&mut buf).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => Error::Corrupt("checkpoint is truncated".into()),
            _ => Error::Io(e),
        })?;
        Ok(buf)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    fn tensor(&mut self) -> Result<(String, Tensor<f32>)> {
        let len = self.u16()? as usize;
        let name = String::from_utf8(self.bytes(len)?).map_err(|_| Error::Corrupt("tensor name is not utf-8".into()))?;
        let rank = self.u16()? as usize;
        let shape = (0..rank).map(|_| self.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let raw = self.bytes(4 * n)?;
        let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        let t = Tensor::new(shape, data).map_err(|e| Error::Corrupt(format!("tensor {name}: {e}")))?;
        Ok((name, t))
    }
}

pub fn read_checkpoint<R: Read>(r: R) -> Result<Checkpoint> {
    let mut r = Reader { inner: r };
    if r.bytes(4)? != MAGIC {
        return Err(Error::Format("not a checkpoint (bad magic)".into()));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let n_config = r.u16()? as usize;
    if n_config != 11 {
        return Err(Error::Format(format!("expected 11 config integers, found {n_config}")));
    }
    let mut ints = [0u32; 11];
    for v in ints.iter_mut() {
        *v = r.u32()?;
    }
    let dropout_p = f64::from_le_bytes(r.bytes(8)?.try_into().unwrap());
    let config = ModelConfig::from_ints(&ints, dropout_p);
    let mut params = Params::<f32>::zeros(&config)?;
    let n_tensors = r.u32()? as usize;
    let expected: Vec<(String, Vec<usize>)> =
        params.tensors().iter().map(|(n, t)| (n.clone(), t.shape().to_vec())).collect();
    if n_tensors < expected.len() {
        return Err(Error::Format(format!("checkpoint holds {n_tensors} tensors, model needs {}", expected.len())));
    }
    for (slot, (name, shape)) in params.tensors_mut().into_iter().zip(&expected) {
        let (found, t) = r.tensor()?;
        if &found != name || t.shape() != &shape[..] {
            return Err(Error::Format(format!("expected tensor {name} {shape:?}, found {found} {:?}", t.shape())));
        }
        *slot = t;
    }
    let extras = (expected.len()..n_tensors).map(|_| r.tensor()).collect::<Result<Vec<_>>>()?;
    Ok(Checkpoint { model: PixelRcnn::from_params(config, params)?, extras })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    read_checkpoint(BufReader::new(File::open(path)?))
}
