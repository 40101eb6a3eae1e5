//! Binary trajectory checkpoints.
//!
//! Layout, all fields little-endian and 8 bytes wide:
//!
//! | offset | field                                  |
//! |--------|----------------------------------------|
//! | 0      | magic `b"FESIM1\0\0"`                  |
//! | 8      | `n` (u64)                              |
//! | 16     | `γ` (f64)                              |
//! | 24     | `dt` (f64)                             |
//! | 32     | step (u64)                             |
//! | 40     | seed (u64)                             |
//! | 48     | stream position: trajectory stream id (u64) |
//! | 56     | `n²` coefficients as `(re, im)` f64 pairs, row-major in storage order |
//!
//! The random stream is counter based, so `(seed, stream id, step)` fully
//! determines every subsequent draw.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::dynamics::TrajectoryState;
use crate::error::{FelabError, Result};
use crate::rng::StreamId;
use crate::spectral::{Grid2D, SpectralField};

pub const MAGIC: [u8; 8] = *b"FESIM1\0\0";
pub const HEADER_LEN: usize = 56;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointHeader {
    pub n: u64,
    pub gamma: f64,
    pub dt: f64,
    pub step: u64,
    pub seed: u64,
    pub stream: u64,
}

pub fn encode(state: &TrajectoryState, gamma: f64, dt: f64) -> Vec<u8> {
    let n = state.omega.grid().n() as u64;
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * state.omega.coeffs().len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(&gamma.to_le_bytes());
    out.extend_from_slice(&dt.to_le_bytes());
    out.extend_from_slice(&state.step.to_le_bytes());
    out.extend_from_slice(&state.stream.seed.to_le_bytes());
    out.extend_from_slice(&state.stream.stream.to_le_bytes());
    for c in state.omega.coeffs() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

fn word(bytes: &[u8], offset: usize) -> [u8; 8] {
    bytes[offset..offset + 8].try_into().expect("8-byte slice")
}

pub fn decode_header(bytes: &[u8]) -> Result<CheckpointHeader> {
    if bytes.len() < HEADER_LEN {
        return Err(FelabError::Checkpoint(format!(
            "file too short for header: {} bytes",
            bytes.len()
        )));
    }
    if bytes[..8] != MAGIC {
        return Err(FelabError::Checkpoint("bad magic".into()));
    }
    Ok(CheckpointHeader {
        n: u64::from_le_bytes(word(bytes, 8)),
        gamma: f64::from_le_bytes(word(bytes, 16)),
        dt: f64::from_le_bytes(word(bytes, 24)),
        step: u64::from_le_bytes(word(bytes, 32)),
        seed: u64::from_le_bytes(word(bytes, 40)),
        stream: u64::from_le_bytes(word(bytes, 48)),
    })
}

/// Decodes a checkpoint onto `grid`, which must have the stored `n`.
pub fn decode(bytes: &[u8], grid: &Grid2D) -> Result<(CheckpointHeader, TrajectoryState)> {
    let header = decode_header(bytes)?;
    if header.n as usize != grid.n() {
        return Err(FelabError::Checkpoint(format!(
            "checkpoint has n={}, grid has n={}",
            header.n,
            grid.n()
        )));
    }
    let expected = HEADER_LEN + 16 * grid.len();
    if bytes.len() != expected {
        return Err(FelabError::Checkpoint(format!(
            "expected {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let coeffs = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(word(c, 0)),
                f64::from_le_bytes(word(c, 8)),
            )
        })
        .collect();
    let state = TrajectoryState {
        t: header.step as f64 * header.dt,
        step: header.step,
        omega: SpectralField::from_raw(grid, coeffs),
        stream: StreamId::new(header.seed, header.stream),
    };
    Ok((header, state))
}

pub fn save(path: &Path, state: &TrajectoryState, gamma: f64, dt: f64) -> Result<()> {
    fs::write(path, encode(state, gamma, dt)).map_err(|e| FelabError::io(path, e))
}

pub fn load(path: &Path, grid: &Grid2D) -> Result<(CheckpointHeader, TrajectoryState)> {
    let bytes = fs::read(path).map_err(|e| FelabError::io(path, e))?;
    decode(&bytes, grid)
}
