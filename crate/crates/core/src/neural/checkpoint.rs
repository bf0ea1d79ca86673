//! Named-tensor checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic  b"DFCP"
//! u32    format version (currently 1)
//! u64    metadata length, then that many bytes of UTF-8 JSON
//! u64    tensor count
//! per tensor:
//!   u64  name length, then the UTF-8 name
//!   u64  rank, then rank u64 dims
//!   f64  row-major values (dims product of them)
//! ```
//!
//! Tensors are written in parameter-store order (sorted by name), so the
//! same store always serializes to the same bytes and round-trips
//! byte-exactly.

use std::fs;
use std::io::{Cursor, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::neural::params::ParamStore;
use crate::neural::tensor::Tensor;

const MAGIC: &[u8; 4] = b"DFCP";
const VERSION: u32 = 1;

pub fn to_bytes(meta_json: &str, store: &ParamStore) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(meta_json.len() as u64).to_le_bytes());
    out.extend_from_slice(meta_json.as_bytes());
    let n = store.names().count() as u64;
    out.extend_from_slice(&n.to_le_bytes());
    for (name, param) in store.iter() {
        out.extend_from_slice(&(name.len() as u64).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        let shape = param.value.shape();
        out.extend_from_slice(&(shape.len() as u64).to_le_bytes());
        for d in shape {
            out.extend_from_slice(&(*d as u64).to_le_bytes());
        }
        for v in param.value.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<(String, ParamStore)> {
    let mut cur = Cursor::new(bytes);
    let mut magic = [0u8; 4];
    cur.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic; not a checkpoint".into()));
    }
    let version = read_u32(&mut cur)?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let meta_len = read_u64(&mut cur)? as usize;
    let mut meta = vec![0u8; meta_len];
    cur.read_exact(&mut meta)?;
    let meta = String::from_utf8(meta)
        .map_err(|_| Error::Checkpoint("metadata is not UTF-8".into()))?;

    let count = read_u64(&mut cur)?;
    let mut store = ParamStore::new();
    for _ in 0..count {
        let name_len = read_u64(&mut cur)? as usize;
        let mut name = vec![0u8; name_len];
        cur.read_exact(&mut name)?;
        let name = String::from_utf8(name)
            .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
        let rank = read_u64(&mut cur)? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u64(&mut cur)? as usize);
        }
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut buf = [0u8; 8];
        for _ in 0..len {
            cur.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        store.insert(&name, Tensor::from_vec(&shape, data)?);
    }
    Ok((meta, store))
}

pub fn save(path: &Path, meta_json: &str, store: &ParamStore) -> Result<()> {
    let bytes = to_bytes(meta_json, store);
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<(String, ParamStore)> {
    let bytes = fs::read(path)?;
    from_bytes(&bytes)
}

fn read_u32(cur: &mut Cursor<&[u8]>) -> Result<u32> {
    let mut buf = [0u8; 4];
    cur.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(cur: &mut Cursor<&[u8]>) -> Result<u64> {
    let mut buf = [0u8; 8];
    cur.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn byte_exact_round_trip() {
        let mut r = rng::seeded(5);
        let mut store = ParamStore::new();
        store.add_uniform("a.w", &[3, 4], &mut r);
        store.add_uniform("b", &[7], &mut r);
        store.add_zeros("z.empty", &[0]);

        let bytes = to_bytes(r#"{"kind":"test"}"#, &store);
        let (meta, loaded) = from_bytes(&bytes).unwrap();
        assert_eq!(meta, r#"{"kind":"test"}"#);
        let rewritten = to_bytes(&meta, &loaded);
        assert_eq!(bytes, rewritten, "write∘read must be byte-identical");
        assert_eq!(loaded.value("a.w"), store.value("a.w"));
        assert_eq!(loaded.shape("a.w"), &[3, 4]);
    }

    #[test]
    fn rejects_garbage() {
        assert!(from_bytes(b"not a checkpoint").is_err());
    }
}
