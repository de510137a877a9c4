//! Binary model checkpoints: weights, BN running statistics and the
//! normalization needed to run inference on raw heatmaps.

use super::model::{architecture_hash, NetworkParams, INPUT_SHAPE};
use crate::dataset::normalize::{FeatureStats, LabelStats, Normalization};
use crate::error::{Error, Result};
use crate::hash::fnv1a64;
use std::path::Path;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"STAPCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: NetworkParams,
    pub normalization: Normalization,
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Data("checkpoint is truncated".into()));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let state = self.params.state();
        let mut out = Vec::with_capacity(64 + 8 * state.len());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&architecture_hash().to_le_bytes());
        for d in INPUT_SHAPE {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        out.extend_from_slice(&(state.len() as u64).to_le_bytes());
        for v in state {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let f = &self.normalization.features;
        out.extend_from_slice(&(f.transform.len() as u32).to_le_bytes());
        out.extend_from_slice(f.transform.as_bytes());
        let l = &self.normalization.labels;
        for v in [f.mean, f.std].iter().chain(&l.mean).chain(&l.std) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let sum = fnv1a64(&out);
        out.extend_from_slice(&sum.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 {
            return Err(Error::Data("checkpoint is truncated".into()));
        }
        let (body, sum) = bytes.split_at(bytes.len() - 8);
        if fnv1a64(body) != u64::from_le_bytes(sum.try_into().unwrap()) {
            return Err(Error::Data("checkpoint checksum mismatch".into()));
        }
        let mut r = Reader { buf: body };
        if r.take(8)? != CHECKPOINT_MAGIC {
            return Err(Error::Data("not a checkpoint file".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Data(format!("unsupported checkpoint version {version}")));
        }
        if r.u64()? != architecture_hash() {
            return Err(Error::Shape("checkpoint was written for a different architecture".into()));
        }
        let shape = [r.u32()?, r.u32()?, r.u32()?].map(|d| d as usize);
        if shape != INPUT_SHAPE {
            return Err(Error::Shape(format!("checkpoint input shape {shape:?} differs from {INPUT_SHAPE:?}")));
        }
        let n = r.u64()? as usize;
        let mut params = NetworkParams::zeros();
        if n != params.state_len() {
            return Err(Error::Shape(format!(
                "checkpoint holds {n} values, the network has {}",
                params.state_len()
            )));
        }
        let state = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        params.load_state(&state)?;
        let len = r.u32()? as usize;
        let transform = String::from_utf8(r.take(len)?.to_vec())
            .map_err(|_| Error::Data("feature transform id is not UTF-8".into()))?;
        let mut v = [0.0; 8];
        for x in &mut v {
            *x = r.f64()?;
        }
        if !r.buf.is_empty() {
            return Err(Error::Data("trailing bytes after checkpoint".into()));
        }
        Ok(Checkpoint {
            params,
            normalization: Normalization {
                features: FeatureStats {
                    transform,
                    mean: v[0],
                    std: v[1],
                },
                labels: LabelStats {
                    mean: [v[2], v[3], v[4]],
                    std: [v[5], v[6], v[7]],
                },
            },
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn hash(&self) -> u64 {
        fnv1a64(&self.to_bytes())
    }
}
