//! Little-endian binary containers.
//!
//! Every file is framed the same way:
//!
//! ```text
//! "SWRM"            4 bytes magic
//! version           u16 LE
//! header length     u32 LE
//! header            UTF-8 JSON, `kind` field selects the payload layout
//! payload           raw little-endian arrays, layout given by the header
//! ```
//!
//! Trajectory batches (`kind = "trajectories"`) store, per instance in
//! header order, an f32 array `[steps, n_attackers, 4]` with `(Px, Py, Vx,
//! Vy)` per agent followed by a u8 array `[steps, n_defenders]` of alive
//! flags (0 or 1).
//!
//! Datasets (`kind = "dataset"`) store an f32 feature array `[instances,
//! time, features]`, a u8 tactic id per instance and a u8 `[instances, 2]`
//! attribute array `(comms, pronav)`.

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::sim::{EngagementConfig, TacticLabel, Trajectory};

pub const MAGIC: &[u8; 4] = b"SWRM";
pub const VERSION: u16 = 1;

pub fn write_frame<W: Write, H: Serialize>(mut w: W, header: &H, payload: &[u8]) -> Result<()> {
    let json = serde_json::to_vec(header)?;
    let len = u32::try_from(json.len()).map_err(|_| Error::Format("header too large".into()))?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(&json)?;
    w.write_all(payload)?;
    Ok(())
}

#[derive(Deserialize)]
struct KindOnly {
    kind: String,
}

/// The `kind` field of a container header.
pub fn container_kind<R: Read>(r: R) -> Result<String> {
    let (h, _): (KindOnly, Vec<u8>) = read_frame(r)?;
    Ok(h.kind)
}

/// Reads the frame; returns the parsed header and the raw payload bytes.
pub fn read_frame<R: Read, H: DeserializeOwned>(mut r: R) -> Result<(H, Vec<u8>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("file too short for magic".into()))?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let mut buf2 = [0u8; 2];
    r.read_exact(&mut buf2)?;
    let version = u16::from_le_bytes(buf2);
    if version != VERSION {
        return Err(Error::Version {
            found: version,
            expected: VERSION,
        });
    }
    let mut buf4 = [0u8; 4];
    r.read_exact(&mut buf4)?;
    let mut json = vec![0u8; u32::from_le_bytes(buf4) as usize];
    r.read_exact(&mut json)?;
    let header = serde_json::from_slice(&json)?;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    Ok((header, payload))
}

pub(crate) fn put_f32s(out: &mut Vec<u8>, values: impl IntoIterator<Item = f32>) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Sequential reader over a payload.
pub(crate) struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("payload truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        Ok(self
            .take(n * 4)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        Ok(self
            .take(n * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn u8s(&mut self, n: usize) -> Result<Vec<u8>> {
        Ok(self.take(n)?.to_vec())
    }

    pub fn finish(self) -> Result<()> {
        if self.pos == self.bytes.len() {
            Ok(())
        } else {
            Err(Error::Format(format!(
                "{} trailing payload bytes",
                self.bytes.len() - self.pos
            )))
        }
    }
}

/// One stored engagement.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub tactic: TacticLabel,
    pub seed: u64,
    pub truncated: bool,
    pub steps: usize,
    /// `[steps, n_attackers, 4]` flattened.
    pub states: Vec<f32>,
    /// `[steps, n_defenders]` flattened.
    pub alive: Vec<u8>,
}

impl TrajectoryRecord {
    pub fn from_trajectory(t: &Trajectory, seed: u64) -> Self {
        let mut states = Vec::with_capacity(t.steps() * t.n_attackers * 4);
        for step in &t.attacker_states {
            for k in step {
                states.extend_from_slice(&[
                    k.position.x as f32,
                    k.position.y as f32,
                    k.velocity.x as f32,
                    k.velocity.y as f32,
                ]);
            }
        }
        let alive = t
            .defender_alive
            .iter()
            .flat_map(|s| s.iter().map(|&a| a as u8))
            .collect();
        Self {
            tactic: t.tactic,
            seed,
            truncated: t.truncated,
            steps: t.steps(),
            states,
            alive,
        }
    }

    /// `(Px, Py, Vx, Vy)` of one agent at one step.
    pub fn state(&self, n_attackers: usize, step: usize, agent: usize) -> [f32; 4] {
        let o = (step * n_attackers + agent) * 4;
        self.states[o..o + 4].try_into().unwrap()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
struct InstanceHeader {
    tactic: TacticLabel,
    seed: u64,
    steps: usize,
    truncated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrajectoryHeader {
    kind: String,
    n_attackers: usize,
    n_defenders: usize,
    config: EngagementConfig,
    instances: Vec<InstanceHeader>,
}

/// A batch of engagements sharing one scenario configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBatch {
    /// Scenario echo; `seed` and `tactic` are per-instance.
    pub config: EngagementConfig,
    pub records: Vec<TrajectoryRecord>,
}

impl TrajectoryBatch {
    pub fn n_attackers(&self) -> usize {
        self.config.n_attackers
    }

    pub fn n_defenders(&self) -> usize {
        self.config.n_defenders
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        let (na, nd) = (self.n_attackers(), self.n_defenders());
        let header = TrajectoryHeader {
            kind: "trajectories".into(),
            n_attackers: na,
            n_defenders: nd,
            config: self.config.clone(),
            instances: self
                .records
                .iter()
                .map(|r| InstanceHeader {
                    tactic: r.tactic,
                    seed: r.seed,
                    steps: r.steps,
                    truncated: r.truncated,
                })
                .collect(),
        };
        let mut payload = Vec::new();
        for r in &self.records {
            if r.states.len() != r.steps * na * 4 || r.alive.len() != r.steps * nd {
                return Err(Error::shape(
                    format!("{} steps of {na} attackers / {nd} defenders", r.steps),
                    format!("{} state values, {} alive flags", r.states.len(), r.alive.len()),
                ));
            }
            put_f32s(&mut payload, r.states.iter().copied());
            payload.extend_from_slice(&r.alive);
        }
        write_frame(w, &header, &payload)
    }

    pub fn read<R: Read>(r: R) -> Result<Self> {
        let (header, payload): (TrajectoryHeader, _) = read_frame(r)?;
        if header.kind != "trajectories" {
            return Err(Error::Format(format!(
                "expected a trajectory container, found '{}'",
                header.kind
            )));
        }
        let mut cur = Cursor::new(&payload);
        let mut records = Vec::with_capacity(header.instances.len());
        for inst in &header.instances {
            let states = cur.f32s(inst.steps * header.n_attackers * 4)?;
            let alive = cur.u8s(inst.steps * header.n_defenders)?;
            records.push(TrajectoryRecord {
                tactic: inst.tactic,
                seed: inst.seed,
                truncated: inst.truncated,
                steps: inst.steps,
                states,
                alive,
            });
        }
        cur.finish()?;
        let mut config = header.config;
        config.n_attackers = header.n_attackers;
        config.n_defenders = header.n_defenders;
        Ok(Self { config, records })
    }

    /// Concatenates batches with identical swarm sizes.
    pub fn merge(batches: Vec<TrajectoryBatch>) -> Result<Self> {
        let mut it = batches.into_iter();
        let mut first = it.next().ok_or_else(|| Error::data("no trajectory batches to merge"))?;
        for b in it {
            if b.n_attackers() != first.n_attackers() || b.n_defenders() != first.n_defenders() {
                return Err(Error::data("cannot merge batches with different swarm sizes"));
            }
            first.records.extend(b.records);
        }
        Ok(first)
    }
}
