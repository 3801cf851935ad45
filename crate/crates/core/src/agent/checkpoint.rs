//! Binary checkpoints: `ECORL1`, a little-endian header (task id `u8`,
//! channels `u32`, actions `u32`, the three layer-width lists as `u32`
//! length + `u32` entries, global step `u64`), then every parameter as a
//! little-endian `f32` in declaration order.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::gridworld::Task;
use crate::Scalar;

use super::net::{NetShape, TwoBranchNet};

pub const MAGIC: &[u8; 6] = b"ECORL1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("bad magic bytes at offset 0 (not an ECORL1 checkpoint)")]
    BadMagic,
    #[error("truncated checkpoint: needed {needed} more bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("malformed checkpoint at offset {offset}: {reason}")]
    Malformed { offset: usize, reason: String },
    #[error("{0} trailing bytes after the parameters")]
    Trailing(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Decoded checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<T> {
    pub task: Task,
    pub channels: usize,
    pub n_actions: usize,
    pub global_step: u64,
    pub network: TwoBranchNet<T>,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let shape = self.network.shape();
        let mut out = Vec::with_capacity(64 + 4 * self.network.n_params());
        out.extend_from_slice(MAGIC);
        out.push(self.task.id());
        out.extend_from_slice(&(self.channels as u32).to_le_bytes());
        out.extend_from_slice(&(self.n_actions as u32).to_le_bytes());
        for dims in [&shape.grid, &shape.inventory, &shape.head] {
            out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
            for d in dims {
                out.extend_from_slice(&(*d as u32).to_le_bytes());
            }
        }
        out.extend_from_slice(&self.global_step.to_le_bytes());
        for p in self.network.params() {
            out.extend_from_slice(&p.to_f32().unwrap_or(f32::NAN).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader { bytes, pos: 0 };
        if bytes.len() < MAGIC.len() {
            return if MAGIC.starts_with(bytes) {
                Err(CheckpointError::Truncated { offset: bytes.len(), needed: MAGIC.len() - bytes.len() })
            } else {
                Err(CheckpointError::BadMagic)
            };
        }
        if r.take(MAGIC.len())? != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let task_at = r.pos;
        let task_id = r.take(1)?[0];
        let task = Task::from_id(task_id)
            .ok_or_else(|| CheckpointError::Malformed { offset: task_at, reason: format!("unknown task id {task_id}") })?;
        let channels = r.u32()? as usize;
        let n_actions = r.u32()? as usize;
        let mut lists = Vec::new();
        for _ in 0..3 {
            let at = r.pos;
            let len = r.u32()? as usize;
            if len > 64 {
                return Err(CheckpointError::Malformed { offset: at, reason: format!("implausible layer count {len}") });
            }
            lists.push((0..len).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?);
        }
        let head = lists.pop().unwrap();
        let inventory = lists.pop().unwrap();
        let grid = lists.pop().unwrap();
        let shape = NetShape { grid, inventory, head };
        let shape_at = r.pos;
        shape
            .validate()
            .map_err(|e| CheckpointError::Malformed { offset: shape_at, reason: e.to_string() })?;
        let global_step = r.u64()?;
        let n = shape.n_params();
        let mut params = Vec::with_capacity(n);
        for _ in 0..n {
            let raw = r.take(4)?;
            params.push(T::lit(f32::from_le_bytes(raw.try_into().unwrap()) as f64));
        }
        if r.pos != bytes.len() {
            return Err(CheckpointError::Trailing(bytes.len() - r.pos));
        }
        let network = TwoBranchNet::from_params(shape, params)
            .map_err(|e| CheckpointError::Malformed { offset: shape_at, reason: e.to_string() })?;
        Ok(Self { task, channels, n_actions, global_step, network })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(CheckpointError::Truncated { offset: self.pos, needed: end - self.bytes.len() });
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
