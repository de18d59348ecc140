//! Binary field snapshots.
//!
//! A snapshot is one ASCII header line followed by little-endian `f64`s:
//!
//! ```text
//! GQG1 <N> <M> <time> [key=value ...]\n   M·M grid values, row-major in (x₁, x₂)
//! GQS1 <N> <M> <time> [key=value ...]\n   (2N+1)² pairs (re, im), lattice order
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::spectral::{to_physical, to_spectral, Grid, PhysicalField, SpectralError, SpectralField};

pub const PHYSICAL_MAGIC: &str = "GQG1";
pub const SPECTRAL_MAGIC: &str = "GQS1";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("cannot read snapshot: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad snapshot header: {0}")]
    Header(String),
    #[error("snapshot body has {got} bytes, expected {expected}")]
    Length { expected: usize, got: usize },
    #[error(transparent)]
    Field(#[from] SpectralError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotKind {
    Physical,
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotHeader {
    pub kind: SnapshotKind,
    pub n: usize,
    pub m: usize,
    pub time: f64,
    pub tags: BTreeMap<String, String>,
}

impl SnapshotHeader {
    fn line(&self) -> String {
        let magic = match self.kind {
            SnapshotKind::Physical => PHYSICAL_MAGIC,
            SnapshotKind::Spectral => SPECTRAL_MAGIC,
        };
        let mut s = format!("{magic} {} {} {:e}", self.n, self.m, self.time);
        for (k, v) in &self.tags {
            s.push_str(&format!(" {k}={v}"));
        }
        s.push('\n');
        s
    }

    fn parse(line: &str) -> Result<Self, SnapshotError> {
        let bad = |m: &str| SnapshotError::Header(format!("{m} in {line:?}"));
        let mut it = line.split_ascii_whitespace();
        let kind = match it.next() {
            Some(PHYSICAL_MAGIC) => SnapshotKind::Physical,
            Some(SPECTRAL_MAGIC) => SnapshotKind::Spectral,
            _ => return Err(bad("unknown magic")),
        };
        let n = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad N"))?;
        let m = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad M"))?;
        let time = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad time"))?;
        let mut tags = BTreeMap::new();
        for tok in it {
            let (k, v) = tok.split_once('=').ok_or_else(|| bad("tag without '='"))?;
            tags.insert(k.to_string(), v.to_string());
        }
        Ok(Self { kind, n, m, time, tags })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    Physical {
        header: SnapshotHeader,
        field: PhysicalField,
    },
    Spectral {
        header: SnapshotHeader,
        field: SpectralField,
    },
}

impl Snapshot {
    pub fn header(&self) -> &SnapshotHeader {
        match self {
            Snapshot::Physical { header, .. } | Snapshot::Spectral { header, .. } => header,
        }
    }

    pub fn spectral(&self) -> Result<SpectralField, SnapshotError> {
        match self {
            Snapshot::Physical { field, .. } => Ok(to_spectral(field)?),
            Snapshot::Spectral { field, .. } => Ok(field.clone()),
        }
    }

    pub fn physical(&self) -> Result<PhysicalField, SnapshotError> {
        match self {
            Snapshot::Physical { field, .. } => Ok(field.clone()),
            Snapshot::Spectral { field, .. } => Ok(to_physical(field)?),
        }
    }
}

fn tag_map(tags: &[(&str, &str)]) -> BTreeMap<String, String> {
    // Values may not contain whitespace; it would split the header.
    tags.iter()
        .map(|(k, v)| (k.to_string(), v.split_whitespace().collect::<Vec<_>>().join("/")))
        .collect()
}

pub fn encode_physical(field: &PhysicalField, time: f64, tags: &[(&str, &str)]) -> Vec<u8> {
    let g = field.grid();
    let header = SnapshotHeader {
        kind: SnapshotKind::Physical,
        n: g.n(),
        m: g.m(),
        time,
        tags: tag_map(tags),
    };
    let mut out = header.line().into_bytes();
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn encode_spectral(field: &SpectralField, time: f64, tags: &[(&str, &str)]) -> Vec<u8> {
    let g = field.grid();
    let header = SnapshotHeader {
        kind: SnapshotKind::Spectral,
        n: g.n(),
        m: g.m(),
        time,
        tags: tag_map(tags),
    };
    let mut out = header.line().into_bytes();
    for c in field.coeffs() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

fn read_f64s(body: &[u8], count: usize) -> Result<Vec<f64>, SnapshotError> {
    if body.len() != 8 * count {
        return Err(SnapshotError::Length {
            expected: 8 * count,
            got: body.len(),
        });
    }
    Ok(body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot, SnapshotError> {
    let nl = bytes
        .iter()
        .take(4096)
        .position(|&b| b == b'\n')
        .ok_or_else(|| SnapshotError::Header("no header line".into()))?;
    let line = std::str::from_utf8(&bytes[..nl]).map_err(|_| SnapshotError::Header("header is not UTF-8".into()))?;
    let header = SnapshotHeader::parse(line)?;
    let grid = Grid::new(header.n, header.m)?;
    let body = &bytes[nl + 1..];
    match header.kind {
        SnapshotKind::Physical => {
            let values = read_f64s(body, grid.m() * grid.m())?;
            let field = PhysicalField::new(grid, values)?;
            Ok(Snapshot::Physical { header, field })
        }
        SnapshotKind::Spectral => {
            let raw = read_f64s(body, 2 * grid.num_modes())?;
            let coeffs = raw.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
            let field = SpectralField::from_coeffs(grid, coeffs)?;
            Ok(Snapshot::Spectral { header, field })
        }
    }
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, SnapshotError> {
    decode(&std::fs::read(path)?)
}
