//! Binary field snapshots.
//!
//! Layout, all little-endian, 80-byte header then `M²` `f64` grid values in
//! row-major order:
//!
//! | offset | size | field                       |
//! |--------|------|-----------------------------|
//! | 0      | 8    | magic `b"SQESNAP\0"`        |
//! | 8      | 4    | format version (`u32`)      |
//! | 12     | 4    | grid size `M` (`u32`)       |
//! | 16     | 8    | cutoff base `A` (`f64`)     |
//! | 24     | 4    | cutoff level `N` (`u32`)    |
//! | 28     | 4    | reserved, zero              |
//! | 32     | 8    | time (`f64`)                |
//! | 40     | 8    | seed (`u64`)                |
//! | 48     | 32   | SHA-256 digest of `ν`       |

use std::fs;
use std::path::Path;

use crate::error::{Result, SqeError};
use crate::spectral::{Grid, RealField};

pub const MAGIC: [u8; 8] = *b"SQESNAP\0";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 80;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub grid_size: u32,
    pub a: f64,
    pub n: u32,
    pub time: f64,
    pub seed: u64,
    pub measure_digest: [u8; 32],
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotFile {
    pub header: SnapshotHeader,
    pub values: Vec<f64>,
}

impl SnapshotFile {
    pub fn new(header: SnapshotHeader, values: Vec<f64>) -> Result<Self> {
        let m = header.grid_size as usize;
        if values.len() != m * m {
            return Err(SqeError::DimensionMismatch {
                expected: m * m,
                actual: values.len(),
            });
        }
        Ok(Self { header, values })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.values.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&h.grid_size.to_le_bytes());
        out.extend_from_slice(&h.a.to_le_bytes());
        out.extend_from_slice(&h.n.to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes());
        out.extend_from_slice(&h.time.to_le_bytes());
        out.extend_from_slice(&h.seed.to_le_bytes());
        out.extend_from_slice(&h.measure_digest);
        debug_assert_eq!(out.len(), HEADER_LEN);
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < HEADER_LEN {
            return Err(format!("{} bytes is shorter than the header", bytes.len()));
        }
        if bytes[..8] != MAGIC {
            return Err("bad magic".into());
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
        let version = u32_at(8);
        if version != VERSION {
            return Err(format!("unsupported version {version}"));
        }
        let m = u32_at(12);
        let header = SnapshotHeader {
            grid_size: m,
            a: f64::from_bits(u64_at(16)),
            n: u32_at(24),
            time: f64::from_bits(u64_at(32)),
            seed: u64_at(40),
            measure_digest: bytes[48..80].try_into().expect("32 bytes"),
        };
        let expected = HEADER_LEN + 8 * (m as usize) * (m as usize);
        if bytes.len() != expected {
            return Err(format!("expected {expected} bytes for M = {m}, found {}", bytes.len()));
        }
        let values = bytes[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(Self { header, values })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| SqeError::Snapshot {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| SqeError::Snapshot {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::from_bytes(&bytes).map_err(|reason| SqeError::Snapshot {
            path: path.to_path_buf(),
            reason,
        })
    }

    pub fn field(&self) -> Result<RealField> {
        RealField::new(Grid::new(self.header.grid_size as usize)?, self.values.clone())
    }
}
