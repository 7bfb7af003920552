//! Self-describing binary snapshots of modal solution data.
//!
//! Layout: an 8-byte magic, a version word, run identity (case, scheme,
//! order, config hash), mesh geometry, polynomial degree, time, then the raw
//! coefficient payload as little-endian f64. Reload restores the field
//! bit-for-bit, so resampling after a round trip is lossless.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Result, SolverError};
use crate::field::Field;
use crate::mesh::Mesh;

pub const MAGIC: &[u8; 8] = b"DGSNAP01";
pub const VERSION: u32 = 1;

/// FNV-1a hash of a canonical configuration string, stored so a snapshot can
/// be matched back to the run that produced it.
pub fn config_hash(text: &str) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for byte in text.as_bytes() {
        h ^= u64::from(*byte);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub case: String,
    pub scheme: String,
    pub order: usize,
    pub config_hash: u64,
    pub dim: usize,
    pub n: [usize; 2],
    pub deg: usize,
    pub nvars: usize,
    pub time: f64,
    pub bounds: [(f64, f64); 2],
    pub coeffs: Vec<f64>,
}

impl Snapshot {
    pub fn from_field(
        case: &str,
        scheme: &str,
        order: usize,
        config_hash: u64,
        mesh: &Mesh,
        field: &Field,
    ) -> Self {
        Snapshot {
            case: case.to_string(),
            scheme: scheme.to_string(),
            order,
            config_hash,
            dim: field.dim,
            n: field.n,
            deg: field.deg,
            nvars: field.nvars,
            time: field.time,
            bounds: [
                (mesh.xmin[0], mesh.xmax[0]),
                (mesh.xmin[1], mesh.xmax[1]),
            ],
            coeffs: field.coeffs.clone(),
        }
    }

    /// Rebuild the mesh and modal field this snapshot was taken from.
    pub fn restore(&self) -> Result<(Mesh, Field)> {
        let mesh = Mesh::new(self.dim, self.bounds, self.n, 1)?;
        let mut field = Field::zeros(&mesh, self.deg);
        if field.coeffs.len() != self.coeffs.len() || field.nvars != self.nvars {
            return Err(SolverError::SnapshotFormat(format!(
                "payload holds {} coefficients, geometry implies {}",
                self.coeffs.len(),
                field.coeffs.len()
            )));
        }
        field.coeffs.copy_from_slice(&self.coeffs);
        field.time = self.time;
        Ok((mesh, field))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&self.config_hash.to_le_bytes())?;
        write_string(&mut w, &self.case)?;
        write_string(&mut w, &self.scheme)?;
        w.write_all(&(self.order as u32).to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.n[0] as u64).to_le_bytes())?;
        w.write_all(&(self.n[1] as u64).to_le_bytes())?;
        w.write_all(&(self.deg as u32).to_le_bytes())?;
        w.write_all(&(self.nvars as u32).to_le_bytes())?;
        w.write_all(&self.time.to_le_bytes())?;
        for axis in 0..2 {
            w.write_all(&self.bounds[axis].0.to_le_bytes())?;
            w.write_all(&self.bounds[axis].1.to_le_bytes())?;
        }
        w.write_all(&(self.coeffs.len() as u64).to_le_bytes())?;
        for c in &self.coeffs {
            w.write_all(&c.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Snapshot> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(SolverError::SnapshotFormat(format!(
                "bad magic {:?}",
                &magic
            )));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(SolverError::SnapshotFormat(format!(
                "unsupported version {version}"
            )));
        }
        let config_hash = read_u64(&mut r)?;
        let case = read_string(&mut r)?;
        let scheme = read_string(&mut r)?;
        let order = read_u32(&mut r)? as usize;
        let dim = read_u32(&mut r)? as usize;
        let n = [read_u64(&mut r)? as usize, read_u64(&mut r)? as usize];
        let deg = read_u32(&mut r)? as usize;
        let nvars = read_u32(&mut r)? as usize;
        let time = read_f64(&mut r)?;
        let mut bounds = [(0.0, 0.0); 2];
        for b in &mut bounds {
            b.0 = read_f64(&mut r)?;
            b.1 = read_f64(&mut r)?;
        }
        let count = read_u64(&mut r)? as usize;
        let expect = n[0] * n[1] * nvars * (deg + 1).pow(dim as u32);
        if count != expect {
            return Err(SolverError::SnapshotFormat(format!(
                "payload length {count} does not match geometry ({expect})"
            )));
        }
        let mut coeffs = vec![0.0f64; count];
        for c in &mut coeffs {
            *c = read_f64(&mut r)?;
        }
        Ok(Snapshot {
            case,
            scheme,
            order,
            config_hash,
            dim,
            n,
            deg,
            nvars,
            time,
            bounds,
            coeffs,
        })
    }
}

fn write_string<W: Write>(w: &mut W, s: &str) -> Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn read_string<R: Read>(r: &mut R) -> Result<String> {
    let len = read_u32(r)? as usize;
    if len > 4096 {
        return Err(SolverError::SnapshotFormat(format!(
            "string field of {len} bytes"
        )));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| SolverError::SnapshotFormat(format!("non-utf8 string: {e}")))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria;

    #[test]
    fn round_trip_is_bitwise_lossless() {
        let eq = equilibria::moving_1d();
        let mesh = Mesh::new_1d(eq.bounds[0], 12).unwrap();
        let mut field = Field::project_conserved(&mesh, 2, |x| eq.conserved_at(x)).unwrap();
        field.time = 0.75;
        let hash = config_hash("case=moving1d scheme=DG3 N=12");
        let snap = Snapshot::from_field("moving1d", "DG3", 3, hash, &mesh, &field);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.snap");
        snap.write(&path).unwrap();
        let back = Snapshot::read(&path).unwrap();
        assert_eq!(back, snap);
        let (mesh2, field2) = back.restore().unwrap();
        assert_eq!(mesh2, mesh);
        assert_eq!(field2.time, field.time);
        for (a, b) in field.coeffs.iter().zip(&field2.coeffs) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn two_dimensional_round_trip_preserves_geometry() {
        let eq = equilibria::hydrostatic_2d();
        let mesh = Mesh::new_2d(eq.bounds[0], eq.bounds[1], 5, 7).unwrap();
        let field = Field::project_conserved(&mesh, 1, |x| eq.conserved_at(x)).unwrap();
        let snap = Snapshot::from_field("hydro2d", "WBDG2", 2, 7, &mesh, &field);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.snap");
        snap.write(&path).unwrap();
        let (mesh2, field2) = Snapshot::read(&path).unwrap().restore().unwrap();
        assert_eq!(mesh2.n, [5, 7]);
        assert_eq!(field2.nvars, 4);
        assert_eq!(field2.coeffs, field.coeffs);
    }

    #[test]
    fn corrupted_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.snap");
        std::fs::write(&path, b"NOTASNAPxxxxxxxxxxxxxxxx").unwrap();
        match Snapshot::read(&path) {
            Err(SolverError::SnapshotFormat(_)) => {}
            other => panic!("expected a format error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_payload_is_an_error() {
        let eq = equilibria::hydrostatic_1d();
        let mesh = Mesh::new_1d(eq.bounds[0], 4).unwrap();
        let field = Field::zeros(&mesh, 1);
        let snap = Snapshot::from_field("hydro1d", "DG2", 2, 0, &mesh, &field);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cut.snap");
        snap.write(&path).unwrap();
        let full = std::fs::read(&path).unwrap();
        std::fs::write(&path, &full[..full.len() - 9]).unwrap();
        assert!(Snapshot::read(&path).is_err());
    }

    #[test]
    fn config_hash_is_stable_and_separates_configs() {
        let a = config_hash("case=hydro1d N=8");
        assert_eq!(a, config_hash("case=hydro1d N=8"));
        assert_ne!(a, config_hash("case=hydro1d N=16"));
    }
}
