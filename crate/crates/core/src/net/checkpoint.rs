//! `SRW1` checkpoint container: magic, length-prefixed JSON spec header,
//! then named tensors as (name, shape, binary32 payload), little-endian.

use std::fs;
use std::io::{Read as _, Write as _};
use std::path::Path;

use crate::net::model::{ModelParams, ModelSpec};
use crate::net::tensor::Tensor;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"SRW1";

pub fn save_checkpoint(
    path: impl AsRef<Path>,
    spec: &ModelSpec,
    params: &ModelParams<f32>,
) -> Result<()> {
    let header = serde_json::to_vec(spec)
        .map_err(|e| Error::format(format!("spec serialization: {e}")))?;
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(header.len() as u32).to_le_bytes());
    buf.extend_from_slice(&header);
    buf.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for (name, tensor) in params.entries() {
        let name_bytes = name.as_bytes();
        buf.extend_from_slice(&(name_bytes.len() as u32).to_le_bytes());
        buf.extend_from_slice(name_bytes);
        buf.extend_from_slice(&4u32.to_le_bytes());
        for d in tensor.shape() {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in tensor.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(ModelSpec, ModelParams<f32>)> {
    let path = path.as_ref();
    let mut file = fs::File::open(path)
        .map_err(|e| Error::format(format!("cannot open {}: {e}", path.display())))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    let mut cursor = 0usize;
    let take = |cursor: &mut usize, n: usize| -> Result<&[u8]> {
        if *cursor + n > bytes.len() {
            return Err(Error::format(format!(
                "{}: truncated checkpoint",
                path.display()
            )));
        }
        let s = &bytes[*cursor..*cursor + n];
        *cursor += n;
        Ok(s)
    };
    let take_u32 = |cursor: &mut usize| -> Result<u32> {
        Ok(u32::from_le_bytes(take(cursor, 4)?.try_into().unwrap()))
    };

    if take(&mut cursor, 4)? != MAGIC {
        return Err(Error::format(format!("{}: bad magic", path.display())));
    }
    let header_len = take_u32(&mut cursor)? as usize;
    let spec: ModelSpec = serde_json::from_slice(take(&mut cursor, header_len)?)
        .map_err(|e| Error::format(format!("{}: bad spec header: {e}", path.display())))?;
    let count = take_u32(&mut cursor)? as usize;
    let layout = spec.parameter_layout();
    if count != layout.len() {
        return Err(Error::format(format!(
            "{}: {count} tensors but the spec defines {}",
            path.display(),
            layout.len()
        )));
    }
    let mut entries = Vec::with_capacity(count);
    for (want_name, want_shape) in layout {
        let name_len = take_u32(&mut cursor)? as usize;
        let name = String::from_utf8(take(&mut cursor, name_len)?.to_vec())
            .map_err(|_| Error::format("checkpoint tensor name is not UTF-8"))?;
        if name != want_name {
            return Err(Error::format(format!(
                "{}: expected tensor {want_name}, found {name}",
                path.display()
            )));
        }
        let ndim = take_u32(&mut cursor)? as usize;
        if ndim != 4 {
            return Err(Error::format(format!("{name}: expected 4 dims, got {ndim}")));
        }
        let mut shape = [0usize; 4];
        for d in &mut shape {
            *d = take_u32(&mut cursor)? as usize;
        }
        if shape != want_shape {
            return Err(Error::format(format!(
                "{name}: shape {shape:?} does not match spec {want_shape:?}"
            )));
        }
        let n: usize = shape.iter().product();
        let payload = take(&mut cursor, 4 * n)?;
        let data: Vec<f32> = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        entries.push((name, Tensor::from_vec(shape, data)));
    }
    Ok((spec, ModelParams::from_entries(entries)))
}

/// FNV-1a hash of a file, used to identify checkpoints in reports.
pub fn file_hash(path: impl AsRef<Path>) -> Result<String> {
    let bytes = fs::read(path.as_ref())?;
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    Ok(format!("{h:016x}"))
}
