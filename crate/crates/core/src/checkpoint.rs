//! Binary weight files.
//!
//! Layout, all integers little-endian `u32`:
//!
//! ```text
//! "SRRN" version arch_len arch_utf8 tensor_count
//! { name_len name_utf8 rank dim... f32_le... } * tensor_count
//! ```
//!
//! Tensors appear in [`Network::named_tensors`] order, BN running
//! statistics included, so a round trip reproduces the bytes exactly.

use std::path::Path;

use crate::arch::{parse_arch, Network};
use crate::error::{CheckpointError, Result};

pub const MAGIC: &[u8; 4] = b"SRRN";
pub const VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

pub fn to_bytes(net: &Network) -> Vec<u8> {
    let tensors = net.named_tensors();
    let mut out = Vec::with_capacity(64 + 4 * tensors.iter().map(|t| t.data.len() + 16).sum::<usize>());
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    put_str(&mut out, &net.arch().to_string());
    put_u32(&mut out, tensors.len() as u32);
    for t in &tensors {
        put_str(&mut out, &t.name);
        put_u32(&mut out, t.shape.len() as u32);
        for &d in &t.shape {
            put_u32(&mut out, d as u32);
        }
        for v in t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or(CheckpointError::Truncated(what))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, CheckpointError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn string(&mut self, what: &'static str) -> Result<String, CheckpointError> {
        let n = self.u32(what)? as usize;
        let b = self.take(n, what)?;
        String::from_utf8(b.to_vec())
            .map_err(|_| CheckpointError::Inconsistent(format!("{what} is not UTF-8")))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<Network> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic").map_err(|_| CheckpointError::BadMagic)? != MAGIC {
        return Err(CheckpointError::BadMagic.into());
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(CheckpointError::UnsupportedVersion(version).into());
    }
    let arch_text = r.string("architecture")?;
    let arch = parse_arch(&arch_text)
        .map_err(|e| CheckpointError::Inconsistent(format!("architecture '{arch_text}': {e}")))?;
    let mut net = Network::zeros(&arch)
        .map_err(|e| CheckpointError::Inconsistent(format!("architecture '{arch_text}': {e}")))?;
    let expected: Vec<(String, Vec<usize>)> = net
        .named_tensors()
        .into_iter()
        .map(|t| (t.name, t.shape))
        .collect();
    let count = r.u32("tensor count")? as usize;
    if count != expected.len() {
        return Err(CheckpointError::Inconsistent(format!(
            "{count} tensors stored, architecture {arch_text} has {}",
            expected.len()
        ))
        .into());
    }
    for (name, shape) in expected {
        let stored = r.string("tensor name")?;
        if stored != name {
            return Err(CheckpointError::Inconsistent(format!("expected tensor {name}, found {stored}")).into());
        }
        let rank = r.u32("tensor rank")? as usize;
        let dims = (0..rank)
            .map(|_| r.u32("tensor dims").map(|d| d as usize))
            .collect::<Result<Vec<_>, _>>()?;
        if dims != shape {
            return Err(CheckpointError::Inconsistent(format!(
                "tensor {name} has shape {dims:?}, architecture needs {shape:?}"
            ))
            .into());
        }
        let len: usize = shape.iter().product();
        let raw = r.take(len * 4, "tensor data")?;
        let data: Vec<f32> = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        net.load_tensor(&name, &data)?;
    }
    if r.pos != bytes.len() {
        return Err(CheckpointError::Inconsistent(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        ))
        .into());
    }
    Ok(net)
}

/// Written to a temporary sibling and renamed into place.
pub fn save_checkpoint(net: &Network, path: &Path) -> Result<()> {
    crate::fsutil::write_atomic(path, &to_bytes(net))
}

pub fn load_checkpoint(path: &Path) -> Result<Network> {
    let bytes = std::fs::read(path)
        .map_err(|e| crate::Error::Data(format!("cannot read checkpoint {}: {e}", path.display())))?;
    from_bytes(&bytes)
}
