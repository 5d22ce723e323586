//! Binary checkpoint: magic, format version, length-prefixed metadata JSON,
//! named little-endian `f64` blocks, trailing SHA-256 of everything before it.

use std::path::Path;

use sha2::{Digest, Sha256};

use super::params::{ModelMeta, NetworkParams, ParamLayout};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"TXRKNET\0";
pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

pub fn to_bytes(params: &NetworkParams) -> Result<Vec<u8>> {
    let meta = serde_json::to_vec(&params.meta).map_err(|e| Error::json("checkpoint metadata", e))?;
    let mut out = Vec::with_capacity(64 + meta.len() + params.values.len() * 8);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
    out.extend_from_slice(&meta);
    out.extend_from_slice(&(params.layout.blocks.len() as u32).to_le_bytes());
    for b in &params.layout.blocks {
        out.extend_from_slice(&(b.name.len() as u32).to_le_bytes());
        out.extend_from_slice(b.name.as_bytes());
        out.extend_from_slice(&(b.len as u64).to_le_bytes());
        for x in &params.values[b.range()] {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or("truncated")?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn parse(bytes: &[u8]) -> std::result::Result<NetworkParams, String> {
    if bytes.len() < CHECKPOINT_MAGIC.len() + 32 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err("not a network checkpoint".into());
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err("checksum mismatch".into());
    }
    let mut c = Cursor { buf: body, pos: 8 };
    let version = c.u32()?;
    if version != CHECKPOINT_FORMAT_VERSION {
        return Err(format!("unsupported format version {version}"));
    }
    let meta_len = c.u64()? as usize;
    let meta: ModelMeta = serde_json::from_slice(c.take(meta_len)?).map_err(|e| format!("metadata: {e}"))?;
    meta.config.validate().map_err(|e| e.to_string())?;
    let layout = ParamLayout::new(&meta.config, meta.vocab_size, meta.n_features);
    let n_blocks = c.u32()? as usize;
    if n_blocks != layout.blocks.len() {
        return Err(format!("{n_blocks} blocks, configuration implies {}", layout.blocks.len()));
    }
    let mut values = Vec::with_capacity(layout.total_len());
    for b in &layout.blocks {
        let name_len = c.u32()? as usize;
        let name = std::str::from_utf8(c.take(name_len)?).map_err(|_| "block name is not UTF-8")?;
        let len = c.u64()? as usize;
        if name != b.name || len != b.len {
            return Err(format!("block {name} of length {len}, expected {} of length {}", b.name, b.len));
        }
        let raw = c.take(len.checked_mul(8).ok_or("block too large")?)?;
        values.extend(raw.chunks_exact(8).map(|w| f64::from_le_bytes(w.try_into().unwrap())));
    }
    if c.pos != body.len() {
        return Err("trailing bytes after parameter blocks".into());
    }
    Ok(NetworkParams { meta, layout, values })
}

pub fn from_bytes(bytes: &[u8]) -> Result<NetworkParams> {
    parse(bytes).map_err(|reason| Error::Checkpoint { path: "<memory>".into(), reason })
}

pub fn save_checkpoint(params: &NetworkParams, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(params)?).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_checkpoint(path: &Path) -> Result<NetworkParams> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse(&bytes).map_err(|reason| Error::Checkpoint { path: path.to_path_buf(), reason })
}
