//! Binary checkpoint format.
//!
//! ```text
//! "MSQ1"
//! repeated, in store order:
//!   u64 name length | name bytes (UTF-8) | u64 rank | rank x u64 dims | f64 values
//! ```
//!
//! All integers and floats are little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::params::ParamStore;
use super::tensor::Tensor;
use crate::error::{file_error, Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"MSQ1";

pub fn write_checkpoint<W: Write>(store: &ParamStore, mut w: W) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    for (name, t) in store.iter() {
        w.write_all(&(name.len() as u64).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(t.rank() as u64).to_le_bytes())?;
        for &d in t.shape() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for &v in t.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<ParamStore> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Checkpoint("missing magic".into()))?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint(format!("bad magic {magic:?}")));
    }
    let mut store = ParamStore::new();
    loop {
        let mut first = [0u8; 8];
        let n = read_fully(&mut r, &mut first)?;
        if n == 0 {
            break;
        }
        if n < 8 {
            return Err(Error::Checkpoint("truncated name length".into()));
        }
        let name_len = u64::from_le_bytes(first) as usize;
        if name_len > 1 << 20 {
            return Err(Error::Checkpoint(format!("implausible name length {name_len}")));
        }
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name)
            .map_err(|_| Error::Checkpoint("parameter name is not UTF-8".into()))?;
        let rank = read_u64(&mut r)? as usize;
        if rank > 8 {
            return Err(Error::Checkpoint(format!("implausible rank {rank} for {name}")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u64(&mut r)? as usize);
        }
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        let mut buf = [0u8; 8];
        for _ in 0..n {
            r.read_exact(&mut buf)
                .map_err(|_| Error::Checkpoint(format!("truncated values for {name}")))?;
            data.push(f64::from_le_bytes(buf));
        }
        store.insert(&name, Tensor::new(shape, data)?)?;
    }
    Ok(store)
}

fn read_fully<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..])? {
            0 => break,
            k => filled += k,
        }
    }
    Ok(filled)
}

pub fn save_checkpoint(store: &ParamStore, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_checkpoint(store, BufWriter::new(File::create(path).map_err(file_error(path))?))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ParamStore> {
    let path = path.as_ref();
    read_checkpoint(BufReader::new(File::open(path).map_err(file_error(path))?))
}
