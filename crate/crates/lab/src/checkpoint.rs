//! Binary checkpoints: a version tag, the config echo, and a trainer
//! snapshot (parameters, AdamW moments, step counter, metrics so far).
//! All numbers are little-endian.

use std::fs;
use std::path::Path;

use sweetspot_core::train::{MetricsRecord, Snapshot, SplitMetrics};

use crate::error::{LabError, Result};

pub const MAGIC: &[u8; 8] = b"SWSPCKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config_echo: String,
    pub snapshot: Snapshot,
}

struct Out(Vec<u8>);

impl Out {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f32s(&mut self, xs: &[f32]) {
        self.u64(xs.len() as u64);
        for x in xs {
            self.0.extend_from_slice(&x.to_le_bytes());
        }
    }
    fn opt(&mut self, v: Option<f64>) {
        self.u8(v.is_some() as u8);
        self.f64(v.unwrap_or(0.0));
    }
    fn split(&mut self, m: &SplitMetrics) {
        self.f64(m.exact_match);
        self.opt(m.suffix_exact_match);
        self.opt(m.suffix_bit_accuracy);
        self.f64(m.token_accuracy);
        self.f64(m.teacher_forced_accuracy);
    }
}

struct In<'a>(&'a [u8]);

impl In<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.0.len() < n {
            return Err(LabError::Data("truncated checkpoint".into()));
        }
        let (head, rest) = self.0.split_at(n);
        self.0 = rest;
        Ok(head)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn len(&mut self, unit: usize) -> Result<usize> {
        let n = self.u64()? as usize;
        if n.saturating_mul(unit) > self.0.len() {
            return Err(LabError::Data("truncated checkpoint".into()));
        }
        Ok(n)
    }
    fn f32s(&mut self) -> Result<Vec<f32>> {
        let n = self.len(4)?;
        Ok(self.take(4 * n)?.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect())
    }
    fn opt(&mut self) -> Result<Option<f64>> {
        let some = self.u8()? != 0;
        let v = self.f64()?;
        Ok(some.then_some(v))
    }
    fn split(&mut self) -> Result<SplitMetrics> {
        Ok(SplitMetrics {
            exact_match: self.f64()?,
            suffix_exact_match: self.opt()?,
            suffix_bit_accuracy: self.opt()?,
            token_accuracy: self.f64()?,
            teacher_forced_accuracy: self.f64()?,
        })
    }
}

pub fn encode(c: &Checkpoint) -> Vec<u8> {
    let s = &c.snapshot;
    let mut o = Out(Vec::with_capacity(16 + 12 * s.params.len()));
    o.0.extend_from_slice(MAGIC);
    o.0.extend_from_slice(&VERSION.to_le_bytes());
    o.u64(c.config_echo.len() as u64);
    o.0.extend_from_slice(c.config_echo.as_bytes());
    o.u64(s.t);
    o.u64(s.streak as u64);
    o.u8(s.early_stopped as u8);
    o.f64(s.loss_sum);
    o.u64(s.loss_count);
    o.f32s(&s.params);
    o.f32s(&s.m);
    o.f32s(&s.v);
    o.u64(s.records.len() as u64);
    for r in &s.records {
        o.u64(r.t);
        o.f64(r.loss);
        o.f64(r.lr);
        o.split(&r.train);
        o.split(&r.validation);
    }
    o.0
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    let mut i = In(bytes);
    if i.take(8)? != MAGIC {
        return Err(LabError::Data("not a checkpoint file".into()));
    }
    let version = i.u32()?;
    if version != VERSION {
        return Err(LabError::Data(format!("checkpoint version {version}, expected {VERSION}")));
    }
    let n = i.len(1)?;
    let config_echo =
        String::from_utf8(i.take(n)?.to_vec()).map_err(|_| LabError::Data("checkpoint config is not UTF-8".into()))?;
    let t = i.u64()?;
    let streak = i.u64()? as usize;
    let early_stopped = i.u8()? != 0;
    let loss_sum = i.f64()?;
    let loss_count = i.u64()?;
    let (params, m, v) = (i.f32s()?, i.f32s()?, i.f32s()?);
    let count = i.len(1)?;
    let mut records = Vec::with_capacity(count);
    for _ in 0..count {
        let (t, loss, lr) = (i.u64()?, i.f64()?, i.f64()?);
        let (train, validation) = (i.split()?, i.split()?);
        records.push(MetricsRecord { t, train, validation, loss, lr });
    }
    if !i.0.is_empty() {
        return Err(LabError::Data("trailing bytes in checkpoint".into()));
    }
    let snapshot = Snapshot { t, params, m, v, records, streak, early_stopped, loss_sum, loss_count };
    Ok(Checkpoint { config_echo, snapshot })
}

/// Writes through a temporary file so a crash never leaves a torn
/// checkpoint behind.
pub fn save(path: &Path, c: &Checkpoint) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, encode(c)).map_err(LabError::io(&tmp))?;
    fs::rename(&tmp, path).map_err(LabError::io(path))
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    decode(&fs::read(path).map_err(LabError::io(path))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let m = SplitMetrics {
            exact_match: 0.5,
            suffix_exact_match: None,
            suffix_bit_accuracy: Some(0.25),
            token_accuracy: 0.75,
            teacher_forced_accuracy: 1.0,
        };
        Checkpoint {
            config_echo: "seed = 3\n".into(),
            snapshot: Snapshot {
                t: 200,
                params: vec![1.0, -2.5, 3.25],
                m: vec![0.1, 0.2, 0.3],
                v: vec![1e-8, 2e-8, 3e-8],
                records: vec![MetricsRecord { t: 100, train: m, validation: m, loss: 2.0, lr: 1e-3 }],
                streak: 1,
                early_stopped: false,
                loss_sum: 4.5,
                loss_count: 3,
            },
        }
    }

    #[test]
    fn round_trip() {
        let c = sample();
        assert_eq!(decode(&encode(&c)).unwrap(), c);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("checkpoint.bin");
        save(&p, &c).unwrap();
        assert_eq!(load(&p).unwrap(), c);
    }

    #[test]
    fn rejects_damage() {
        let bytes = encode(&sample());
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut wrong = bytes.clone();
        wrong[8] = 9;
        assert!(decode(&wrong).is_err());
        assert!(decode(b"not a checkpoint").is_err());
        let mut longer = bytes;
        longer.push(0);
        assert!(decode(&longer).is_err());
    }
}
