//! Binary checkpoints of a coupled state.
//!
//! Layout, all integers and floats little-endian: the magic `FSICKPT\0`, a `u32`
//! format version, the 32-byte config hash, the `u64` step, then the state as
//! length-prefixed `f64` arrays (displacement, shell velocity, velocity, pressure,
//! distribution values, distribution rate) with the three time stamps and the
//! distribution shape, and finally a length-prefixed JSON block with the config and
//! the run bookkeeping needed to continue the summary.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::output::{RunStats, WindowEntry};
use super::{HarnessError, RunConfig};
use crate::coupler::CoupledState;
use crate::fokker_planck::DistributionState;
use crate::solvent_structure::{FlowState, StructureState};

pub const MAGIC: &[u8; 8] = b"FSICKPT\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunBook {
    pub config: RunConfig,
    pub stats: Option<RunStats>,
    pub windows: Vec<WindowEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub version: u32,
    pub config_hash: [u8; 32],
    pub step: usize,
    pub state: CoupledState,
    pub book: RunBook,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn vec(&mut self, v: &[f64]) {
        self.u64(v.len() as u64);
        v.iter().for_each(|x| self.f64(*x));
    }

    fn bytes(&mut self, b: &[u8]) {
        self.u64(b.len() as u64);
        self.0.extend_from_slice(b);
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], HarnessError> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.data.len());
        let end = end.ok_or_else(|| HarnessError::Checkpoint("truncated checkpoint".into()))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64, HarnessError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, HarnessError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len(&mut self) -> Result<usize, HarnessError> {
        let n = self.u64()? as usize;
        if n > self.data.len() {
            return Err(HarnessError::Checkpoint(format!("array length {n} exceeds the file")));
        }
        Ok(n)
    }

    fn vec(&mut self) -> Result<Vec<f64>, HarnessError> {
        let n = self.len()?;
        (0..n).map(|_| self.f64()).collect()
    }

    fn bytes(&mut self) -> Result<&'a [u8], HarnessError> {
        let n = self.len()?;
        self.take(n)
    }
}

impl Checkpoint {
    pub fn new(step: usize, state: CoupledState, book: RunBook) -> Self {
        Self { version: FORMAT_VERSION, config_hash: book.config.hash(), step, state, book }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(MAGIC);
        w.0.extend_from_slice(&self.version.to_le_bytes());
        w.0.extend_from_slice(&self.config_hash);
        w.u64(self.step as u64);
        let s = &self.state;
        w.vec(&s.structure.eta);
        w.vec(&s.structure.eta_dot);
        w.f64(s.structure.time);
        w.vec(&s.flow.u);
        w.vec(&s.flow.pi);
        w.f64(s.flow.time);
        w.u64(s.distribution.nx as u64);
        w.u64(s.distribution.nq as u64);
        w.vec(&s.distribution.values);
        w.vec(&s.distribution.rate);
        w.f64(s.distribution.time);
        w.bytes(&serde_json::to_vec(&self.book).expect("run book serializes"));
        w.0
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, HarnessError> {
        let mut r = Reader { data, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(HarnessError::Checkpoint("not a checkpoint file".into()));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(HarnessError::Checkpoint(format!("unsupported format version {version}")));
        }
        let config_hash: [u8; 32] = r.take(32)?.try_into().unwrap();
        let step = r.u64()? as usize;
        let structure = StructureState { eta: r.vec()?, eta_dot: r.vec()?, time: r.f64()? };
        let flow = FlowState { u: r.vec()?, pi: r.vec()?, time: r.f64()? };
        let nx = r.u64()? as usize;
        let nq = r.u64()? as usize;
        let distribution = DistributionState { nx, nq, values: r.vec()?, rate: r.vec()?, time: r.f64()? };
        if distribution.values.len() != nx * nq {
            return Err(HarnessError::Checkpoint("distribution size does not match its shape".into()));
        }
        let book: RunBook =
            serde_json::from_slice(r.bytes()?).map_err(|e| HarnessError::Checkpoint(format!("run book: {e}")))?;
        if r.pos != data.len() {
            return Err(HarnessError::Checkpoint("trailing bytes after the run book".into()));
        }
        if book.config.hash() != config_hash {
            return Err(HarnessError::Checkpoint("config hash does not match the stored config".into()));
        }
        Ok(Self { version, config_hash, step, state: CoupledState { structure, flow, distribution }, book })
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_bytes(&fs::read(path)?)
    }
}

/// `load(save(state))`.
pub fn checkpoint_roundtrip(path: &Path, state: &CoupledState, book: &RunBook) -> Result<CoupledState, HarnessError> {
    Checkpoint::new(0, state.clone(), book.clone()).save(path)?;
    Ok(Checkpoint::load(path)?.state)
}
