//! Shard blob layout.
//!
//! ```text
//! header   16 bytes: b"STAPSHRD", u32 format version, u32 record count
//! record   u64 id
//!          3×f64 label (x, y, z meters)
//!          f64 rcs (dBsm)
//!          3×f64 polar truth (r meters, θ degrees, φ degrees)
//!          f32 tensor, row-major (bin, θ, φ)
//! ```
//! All fields little-endian; records have a fixed stride.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const SHARD_MAGIC: &[u8; 8] = b"STAPSHRD";
pub const SHARD_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;
const FIXED_RECORD_LEN: usize = 8 + 3 * 8 + 8 + 3 * 8;

/// One serialized example, with the tensor already at storage precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub id: u64,
    pub label: [f64; 3],
    pub rcs_dbsm: f64,
    pub polar: [f64; 3],
    pub tensor: Vec<f32>,
}

pub fn record_len(tensor_len: usize) -> usize {
    FIXED_RECORD_LEN + 4 * tensor_len
}

pub fn encode_shard(records: &[Record], tensor_len: usize) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(HEADER_LEN + records.len() * record_len(tensor_len));
    out.extend_from_slice(SHARD_MAGIC);
    out.extend_from_slice(&SHARD_VERSION.to_le_bytes());
    let count = u32::try_from(records.len())
        .map_err(|_| Error::Data(format!("{} records do not fit one shard", records.len())))?;
    out.extend_from_slice(&count.to_le_bytes());
    for r in records {
        if r.tensor.len() != tensor_len {
            return Err(Error::Shape(format!(
                "record {} has {} tensor values, expected {tensor_len}",
                r.id,
                r.tensor.len()
            )));
        }
        out.extend_from_slice(&r.id.to_le_bytes());
        for v in r.label.iter().chain([&r.rcs_dbsm]).chain(&r.polar) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in &r.tensor {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

fn take<const N: usize>(bytes: &[u8], at: &mut usize) -> [u8; N] {
    let mut buf = [0u8; N];
    buf.copy_from_slice(&bytes[*at..*at + N]);
    *at += N;
    buf
}

pub fn decode_shard(bytes: &[u8], tensor_len: usize) -> Result<Vec<Record>> {
    if bytes.len() < HEADER_LEN || &bytes[..8] != SHARD_MAGIC {
        return Err(Error::Data("shard header is missing or has the wrong magic".into()));
    }
    let mut at = 8;
    let version = u32::from_le_bytes(take(bytes, &mut at));
    if version != SHARD_VERSION {
        return Err(Error::Data(format!("unsupported shard version {version}")));
    }
    let count = u32::from_le_bytes(take(bytes, &mut at)) as usize;
    let stride = record_len(tensor_len);
    if bytes.len() != HEADER_LEN + count * stride {
        return Err(Error::Data(format!(
            "shard holds {} bytes, expected {} for {count} records",
            bytes.len(),
            HEADER_LEN + count * stride
        )));
    }
    let f64_at = |at: &mut usize| f64::from_le_bytes(take(bytes, at));
    let mut records = Vec::with_capacity(count);
    for _ in 0..count {
        let id = u64::from_le_bytes(take(bytes, &mut at));
        let label = [f64_at(&mut at), f64_at(&mut at), f64_at(&mut at)];
        let rcs_dbsm = f64_at(&mut at);
        let polar = [f64_at(&mut at), f64_at(&mut at), f64_at(&mut at)];
        let tensor = (0..tensor_len)
            .map(|_| f32::from_le_bytes(take(bytes, &mut at)))
            .collect();
        records.push(Record {
            id,
            label,
            rcs_dbsm,
            polar,
            tensor,
        });
    }
    Ok(records)
}

pub fn write_all(w: &mut impl Write, bytes: &[u8]) -> std::io::Result<()> {
    w.write_all(bytes)?;
    w.flush()
}

pub fn read_all(r: &mut impl Read) -> std::io::Result<Vec<u8>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    Ok(buf)
}
