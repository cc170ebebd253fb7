//! Snapshot binaries and CSV tables.
//!
//! A snapshot file holds both components on one grid, little-endian:
//!
//! ```text
//! offset  type            content
//! 0       [u8; 8]         magic "STOPLSNP"
//! 8       u32             format version (1)
//! 12      u32             dims d (1 or 2)
//! 16      f64 × d         extents, m
//! ..      u64 × d         points per axis
//! ..      f64             simulation time, s
//! ..      [u8; 32]        SHA-256 of the run configuration text
//! ..      f64 × 2N        ψ₁ as (re, im) pairs, z fastest
//! ..      f64 × 2N        ψ₂ likewise
//! ```
//!
//! Field values are in m^(−d/2). Every CSV file starts with `#` lines giving
//! the crate version, the configuration hash and the column units.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::config::hex;
use crate::error::{Error, Result};
use crate::gpe::ConvergenceRecord;
use crate::grid::{make_grid, ComplexField};
use crate::protocol::{SimObservables, SweepPoint};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"STOPLSNP";
pub const SNAPSHOT_VERSION: u32 = 1;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotFile {
    pub time: f64,
    pub config_hash: [u8; 32],
    pub psi1: ComplexField,
    pub psi2: ComplexField,
}

pub fn write_snapshot<W: Write>(mut w: W, snap: &SnapshotFile) -> Result<()> {
    if !snap.psi1.same_grid(&snap.psi2) {
        return Err(Error::Shape { expected: snap.psi1.values.len(), found: snap.psi2.values.len() });
    }
    let grid = snap.psi1.grid();
    let mut buf = Vec::with_capacity(96 + 32 * grid.len());
    buf.extend_from_slice(SNAPSHOT_MAGIC);
    buf.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.dims() as u32).to_le_bytes());
    for e in grid.extents() {
        buf.extend_from_slice(&e.to_le_bytes());
    }
    for &p in grid.points() {
        buf.extend_from_slice(&(p as u64).to_le_bytes());
    }
    buf.extend_from_slice(&snap.time.to_le_bytes());
    buf.extend_from_slice(&snap.config_hash);
    for field in [&snap.psi1, &snap.psi2] {
        for v in &field.values {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.data.len());
        let Some(end) = end else {
            return Err(Error::Format(format!("truncated at byte {}", self.at)));
        };
        let out = &self.data[self.at..end];
        self.at = end;
        Ok(out)
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
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<SnapshotFile> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    let mut c = Cursor { data: &data, at: 0 };
    if c.take(8)? != SNAPSHOT_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = c.u32()?;
    if version != SNAPSHOT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dims = c.u32()? as usize;
    if !(1..=2).contains(&dims) {
        return Err(Error::Format(format!("unsupported dims {dims}")));
    }
    let extents = (0..dims).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
    let points = (0..dims)
        .map(|_| c.u64().and_then(|p| usize::try_from(p).map_err(|_| Error::Format(format!("{p} points")))))
        .collect::<Result<Vec<_>>>()?;
    let grid = Arc::new(make_grid(dims, &extents, &points).map_err(|e| Error::Format(e.to_string()))?);
    let time = c.f64()?;
    let config_hash: [u8; 32] = c.take(32)?.try_into().expect("32 bytes");
    let mut field = || -> Result<ComplexField> {
        let values = (0..grid.len())
            .map(|_| Ok(Complex64::new(c.f64()?, c.f64()?)))
            .collect::<Result<Vec<_>>>()?;
        ComplexField::from_values(grid.clone(), values)
    };
    let psi1 = field()?;
    let psi2 = field()?;
    if c.at != data.len() {
        return Err(Error::Format(format!("{} trailing bytes", data.len() - c.at)));
    }
    Ok(SnapshotFile { time, config_hash, psi1, psi2 })
}

pub fn save_snapshot(path: &Path, snap: &SnapshotFile) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_snapshot(file, snap)
}

pub fn load_snapshot(path: &Path) -> Result<SnapshotFile> {
    read_snapshot(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// A CSV table with its metadata header.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub config_hash: [u8; 32],
    /// Extra `# key value` header lines.
    pub meta: Vec<(String, String)>,
    pub columns: Vec<(&'static str, &'static str)>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(config_hash: [u8; 32], columns: &[(&'static str, &'static str)]) -> Self {
        Self { config_hash, meta: Vec::new(), columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn with_meta(mut self, key: &str, value: impl std::fmt::Display) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Rendered text. Floats use the shortest round-trip representation.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# stoplight {VERSION}\n"));
        out.push_str(&format!("# config_sha256 {}\n", hex(&self.config_hash)));
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k} {v}\n"));
        }
        let units: Vec<String> = self.columns.iter().map(|(n, u)| format!("{n} [{u}]")).collect();
        out.push_str(&format!("# units {}\n", units.join(", ")));
        let names: Vec<&str> = self.columns.iter().map(|c| c.0).collect();
        out.push_str(&names.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

pub fn observables_table(hash: [u8; 32], obs: &SimObservables) -> CsvTable {
    let mut t = CsvTable::new(hash, &[("t", "s"), ("N1", "atoms"), ("N2", "atoms"), ("COM_z", "m"), ("overlap", "m^-d")]);
    for s in &obs.samples {
        t.push(vec![s.t, s.n1, s.n2, s.com_z, s.overlap]);
    }
    t
}

pub fn sweep_table(hash: [u8; 32], table: &[SweepPoint]) -> CsvTable {
    let mut t = CsvTable::new(hash, &[("B_gauss", "G"), ("tau_s", "s"), ("tau_err_s", "s")]);
    for p in table {
        t.push(vec![p.bias_field, p.fit.tau, p.fit.tau_err]);
    }
    t
}

/// Rows of (storage time, fidelity), sorted by storage time.
pub fn fidelity_table(hash: [u8; 32], rows: &[(f64, f64)]) -> CsvTable {
    let mut t = CsvTable::new(hash, &[("storage_s", "s"), ("fidelity", "1")]);
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (s, f) in rows {
        t.push(vec![s, f]);
    }
    t
}

pub fn convergence_table(hash: [u8; 32], log: &[ConvergenceRecord]) -> CsvTable {
    let mut t = CsvTable::new(hash, &[("iteration", "1"), ("energy", "J"), ("delta", "1")]);
    for r in log {
        t.push(vec![r.iteration as f64, r.energy, r.delta]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SnapshotFile {
        let g = Arc::new(make_grid(2, &[20e-6, 30e-6], &[8, 16]).unwrap());
        let psi1 = ComplexField::from_fn(g.clone(), |p| Complex64::new(p[0] * 1e6, -p[1] * 1e6));
        let psi2 = ComplexField::from_fn(g, |p| Complex64::new((p[0] * p[1] * 1e12).cos(), 0.25));
        SnapshotFile { time: 0.125, config_hash: [7; 32], psi1, psi2 }
    }

    #[test]
    fn snapshot_round_trip_is_exact() {
        let snap = sample();
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, &snap).unwrap();
        assert_eq!(&bytes[..8], SNAPSHOT_MAGIC);
        assert_eq!(bytes.len(), 8 + 4 + 4 + 16 + 16 + 8 + 32 + 2 * 2 * 8 * 128);
        let back = read_snapshot(bytes.as_slice()).unwrap();
        assert_eq!(back, snap);
    }

    #[test]
    fn corrupted_snapshots_are_rejected() {
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, &sample()).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(read_snapshot(bad.as_slice()), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[8] = 9;
        assert!(read_snapshot(bad.as_slice()).is_err());
        assert!(read_snapshot(&bytes[..bytes.len() - 1]).is_err());
        bytes.push(0);
        assert!(read_snapshot(bytes.as_slice()).is_err());
    }

    #[test]
    fn csv_header_and_ordering() {
        let t = fidelity_table([0xab; 32], &[(1.5, 0.005), (0.05, 0.02)]).with_meta("reduction_per_m", 1.5e5);
        let text = t.render();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# stoplight "));
        assert_eq!(lines[1], format!("# config_sha256 {}", "ab".repeat(32)));
        assert_eq!(lines[2], "# reduction_per_m 150000");
        assert_eq!(lines[3], "# units storage_s [s], fidelity [1]");
        assert_eq!(lines[4], "storage_s,fidelity");
        assert_eq!(lines[5], "0.05,0.02");
        assert_eq!(lines[6], "1.5,0.005");
    }
}
