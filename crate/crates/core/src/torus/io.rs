//! Field files: raw little-endian `f64` data plus a JSON sidecar.
//!
//! Scalar fields store one value per point. Hermitian fields store, per point,
//! the `n × n` matrix row-major as `(re, im)` pairs. Points follow the grid
//! order (last axis fastest).

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::field::{HermitianField, PotentialField};
use super::grid::TorusGrid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Scalar,
    Hermitian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub kind: FieldKind,
    pub complex_dim: usize,
    pub shape: Vec<usize>,
    pub periods: Vec<f64>,
    pub active_axes: Vec<usize>,
    pub values: usize,
    pub byte_order: String,
    /// Hex SHA-256 of the data file.
    pub sha256: String,
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("bin"), stem.with_extension("json"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn to_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

fn write_raw(stem: &Path, kind: FieldKind, grid: &TorusGrid, values: &[f64]) -> Result<Sidecar> {
    let (bin, json) = paths(stem);
    let bytes = to_bytes(values);
    let sidecar = Sidecar {
        kind,
        complex_dim: grid.complex_dim(),
        shape: grid.resolutions().to_vec(),
        periods: grid.periods().to_vec(),
        active_axes: grid.active_axes(),
        values: values.len(),
        byte_order: "little".into(),
        sha256: sha256_hex(&bytes),
    };
    fs::write(&bin, &bytes)?;
    fs::write(&json, serde_json::to_string_pretty(&sidecar)?)?;
    Ok(sidecar)
}

fn read_raw(stem: &Path, kind: FieldKind) -> Result<(TorusGrid, Vec<f64>)> {
    let (bin, json) = paths(stem);
    let sidecar: Sidecar = serde_json::from_str(&fs::read_to_string(&json)?)?;
    if sidecar.kind != kind {
        return Err(Error::InvalidInput(format!(
            "expected a {kind:?} field, found {:?}",
            sidecar.kind
        )));
    }
    let bytes = fs::read(&bin)?;
    let found = sha256_hex(&bytes);
    if found != sidecar.sha256 {
        return Err(Error::Checksum {
            expected: sidecar.sha256,
            found,
        });
    }
    if bytes.len() != 8 * sidecar.values {
        return Err(Error::InvalidInput("data length disagrees with sidecar".into()));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let grid = TorusGrid::new(sidecar.complex_dim, sidecar.shape, sidecar.periods)?;
    Ok((grid, values))
}

/// Writes `<stem>.bin` and `<stem>.json`.
pub fn write_scalar(stem: &Path, field: &PotentialField) -> Result<Sidecar> {
    write_raw(stem, FieldKind::Scalar, field.grid(), field.values())
}

pub fn read_scalar(stem: &Path) -> Result<PotentialField> {
    let (grid, values) = read_raw(stem, FieldKind::Scalar)?;
    PotentialField::new(grid, values)
}

pub fn write_hermitian(stem: &Path, field: &HermitianField) -> Result<Sidecar> {
    let n = field.dim();
    let mut values = Vec::with_capacity(field.data().len() * 2);
    for p in 0..field.grid().len() {
        for i in 0..n {
            for j in 0..n {
                let z = field.entry(p, i, j);
                values.push(z.re);
                values.push(z.im);
            }
        }
    }
    write_raw(stem, FieldKind::Hermitian, field.grid(), &values)
}

pub fn read_hermitian(stem: &Path) -> Result<HermitianField> {
    let (grid, values) = read_raw(stem, FieldKind::Hermitian)?;
    let n = grid.complex_dim();
    if values.len() != 2 * n * n * grid.len() {
        return Err(Error::InvalidInput("data length disagrees with grid".into()));
    }
    let mut data = vec![Complex64::new(0.0, 0.0); n * n * grid.len()];
    for p in 0..grid.len() {
        for i in 0..n {
            for j in 0..n {
                let k = 2 * ((p * n + i) * n + j);
                data[p * n * n + j * n + i] = Complex64::new(values[k], values[k + 1]);
            }
        }
    }
    HermitianField::from_data(grid, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::{complex_hessian, FieldRecipe};

    #[test]
    fn scalar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = TorusGrid::reduced(2, &[0, 3], 8).unwrap();
        let f = PotentialField::from_fn(&g, |x| (x[0] - x[3]).sin() + 0.25).unwrap();
        let stem = dir.path().join("phi");
        let sc = write_scalar(&stem, &f).unwrap();
        assert_eq!(sc.active_axes, vec![0, 3]);
        assert_eq!(read_scalar(&stem).unwrap(), f);
    }

    #[test]
    fn hermitian_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = TorusGrid::reduced(2, &[0, 3], 6).unwrap();
        let phi = PotentialField::from_fn(&g, |x| x[0].cos() * x[3].sin()).unwrap();
        let x = FieldRecipe::identity()
            .build(&g)
            .unwrap()
            .add(&complex_hessian(&phi))
            .unwrap();
        let stem = dir.path().join("x");
        write_hermitian(&stem, &x).unwrap();
        assert_eq!(read_hermitian(&stem).unwrap(), x);
    }

    #[test]
    fn corruption_detected() {
        let dir = tempfile::tempdir().unwrap();
        let g = TorusGrid::reduced(1, &[0], 4).unwrap();
        let stem = dir.path().join("f");
        write_scalar(&stem, &PotentialField::constant(&g, 1.0)).unwrap();
        let bin = stem.with_extension("bin");
        let mut bytes = fs::read(&bin).unwrap();
        bytes[0] ^= 1;
        fs::write(&bin, bytes).unwrap();
        assert!(matches!(read_scalar(&stem), Err(Error::Checksum { .. })));
        assert!(read_hermitian(&stem).is_err());
    }
}
