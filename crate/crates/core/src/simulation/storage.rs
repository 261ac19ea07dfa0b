//! Binary scenario files: `CMCS1`, u64 little-endian metadata length, JSON
//! metadata, then one byte per cell in scenario, time, firm order.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ScenarioSet, SimulationError};
use crate::ratings::FirmState;

pub const MAGIC: &[u8; 5] = b"CMCS1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirmRecord {
    pub id: String,
    pub rating: u8,
    pub sector: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetadata {
    pub n_scenarios: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub firms: Vec<FirmRecord>,
    pub seed: u64,
    pub params_fingerprint: String,
}

impl ScenarioMetadata {
    pub fn of(set: &ScenarioSet) -> Self {
        Self {
            n_scenarios: set.n_scenarios(),
            horizon: set.horizon,
            m: set.m,
            firms: set
                .firms
                .iter()
                .zip(&set.firm_ids)
                .map(|(f, id)| FirmRecord {
                    id: id.clone(),
                    rating: f.rating,
                    sector: f.sector,
                })
                .collect(),
            seed: set.seed,
            params_fingerprint: set.fingerprint.clone(),
        }
    }
}

pub fn to_bytes(set: &ScenarioSet) -> Vec<u8> {
    let meta = serde_json::to_vec(&ScenarioMetadata::of(set)).expect("metadata serializes");
    let mut out = Vec::with_capacity(MAGIC.len() + 8 + meta.len() + set.paths.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
    out.extend_from_slice(&meta);
    out.extend_from_slice(&set.paths);
    out
}

pub fn save(set: &ScenarioSet, path: &Path) -> Result<(), SimulationError> {
    fs::write(path, to_bytes(set))?;
    Ok(())
}

pub fn from_bytes(bytes: &[u8]) -> Result<ScenarioSet, SimulationError> {
    let malformed = |offset: usize, detail: String| SimulationError::Malformed {
        offset: offset as u64,
        detail,
    };
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(malformed(0, "missing CMCS1 magic".into()));
    }
    let len_at = MAGIC.len();
    let Some(len_bytes) = bytes.get(len_at..len_at + 8) else {
        return Err(malformed(len_at, "truncated metadata length".into()));
    };
    let meta_len = u64::from_le_bytes(len_bytes.try_into().expect("8 bytes")) as usize;
    let meta_at = len_at + 8;
    let Some(meta_bytes) = bytes.get(meta_at..meta_at.saturating_add(meta_len)) else {
        return Err(malformed(meta_at, format!("metadata of {meta_len} bytes runs past end of file")));
    };
    let meta: ScenarioMetadata = serde_json::from_slice(meta_bytes).map_err(|e| {
        malformed(meta_at, format!("metadata json line {} column {}: {e}", e.line(), e.column()))
    })?;
    let payload_at = meta_at + meta_len;
    let payload = &bytes[payload_at..];
    let expected = meta.n_scenarios * (meta.horizon + 1) * meta.firms.len();
    if payload.len() != expected {
        return Err(malformed(
            payload_at,
            format!("payload has {} bytes, metadata implies {expected}", payload.len()),
        ));
    }
    let firms: Vec<FirmState> = meta.firms.iter().map(|f| FirmState::new(f.rating, f.sector)).collect();
    let ids = meta.firms.iter().map(|f| f.id.clone()).collect();
    ScenarioSet::from_parts(meta.m, meta.horizon, firms, ids, payload.to_vec(), meta.seed, meta.params_fingerprint)
        .map_err(|e| {
            // point at an out-of-range cell when there is one
            let offset = first_bad_cell(payload, meta.m).map_or(payload_at, |k| payload_at + k);
            malformed(offset, e.to_string())
        })
}

fn first_bad_cell(payload: &[u8], m: usize) -> Option<usize> {
    let default = (m + 1) as u8;
    payload.iter().position(|&c| c == 0 || c > default)
}

pub fn load(path: &Path) -> Result<ScenarioSet, SimulationError> {
    from_bytes(&fs::read(path)?)
}

/// CSV export with columns scenario, t, firm_id, rating.
pub fn export_csv<W: Write>(set: &ScenarioSet, out: W) -> Result<(), SimulationError> {
    let mut w = csv::Writer::from_writer(out);
    let to_io = |e: csv::Error| SimulationError::Io(std::io::Error::other(e));
    w.write_record(["scenario", "t", "firm_id", "rating"]).map_err(to_io)?;
    for s in 0..set.n_scenarios() {
        for t in 0..=set.horizon {
            for (k, id) in set.firm_ids.iter().enumerate() {
                w.write_record([
                    s.to_string(),
                    t.to_string(),
                    id.clone(),
                    set.rating(s, t, k).to_string(),
                ])
                .map_err(to_io)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
