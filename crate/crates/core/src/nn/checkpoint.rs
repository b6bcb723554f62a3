//! Binary checkpoint format.
//!
//! ```text
//! magic   8 bytes  "GCANCKPT"
//! version u32 LE
//! count   u32 LE   number of parameter records
//! record  name_len u32 | name utf-8 | rank u32 | dims u64 × rank | values f64 LE × Πdims
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::param::ParamSet;
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"GCANCKPT";
pub const VERSION: u32 = 1;

pub fn write_params<W: Write>(params: &ParamSet, mut w: W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    for p in params.iter() {
        let name = p.name.as_bytes();
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name)?;
        let shape = p.value.shape();
        w.write_all(&(shape.len() as u32).to_le_bytes())?;
        for &d in shape {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for v in p.value.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

fn truncated(e: std::io::Error) -> Error {
    Error::Checkpoint(format!("truncated or unreadable: {e}"))
}

/// Reads every `(name, tensor)` record.
pub fn read_records<R: Read>(mut r: R) -> Result<Vec<(String, Tensor)>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let count = read_u32(&mut r)? as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let len = read_u32(&mut r)? as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name).map_err(truncated)?;
        let name = String::from_utf8(name)
            .map_err(|_| Error::Checkpoint("parameter name is not utf-8".into()))?;
        let rank = read_u32(&mut r)? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u64(&mut r)? as usize);
        }
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f64::from_le_bytes(read_u64(&mut r)?.to_le_bytes()));
        }
        let t = Tensor::new(shape, data).map_err(|e| Error::Checkpoint(e.to_string()))?;
        out.push((name, t));
    }
    Ok(out)
}

/// Overwrites parameter values from checkpoint records. Names and shapes
/// must match the set exactly.
pub fn load_into(params: &mut ParamSet, records: Vec<(String, Tensor)>) -> Result<()> {
    if records.len() != params.len() {
        return Err(Error::Checkpoint(format!(
            "expected {} parameters, checkpoint has {}",
            params.len(),
            records.len()
        )));
    }
    for (p, (name, t)) in params.iter_mut().zip(records) {
        if p.name != name || p.value.shape() != t.shape() {
            return Err(Error::Checkpoint(format!(
                "record `{name}` {:?} does not match parameter `{}` {:?}",
                t.shape(),
                p.name,
                p.value.shape()
            )));
        }
        p.value = t;
        p.grad = None;
    }
    Ok(())
}

pub fn save(params: &ParamSet, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_params(params, std::io::BufWriter::new(f)).map_err(|e| Error::io(path, e))
}

pub fn load(params: &mut ParamSet, path: &Path) -> Result<()> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_into(params, read_records(std::io::BufReader::new(f))?)
}
