//! Field files and data bundles.
//!
//! A field file is a JSON header next to a binary sidecar. The sidecar holds
//! one block per component, in header order; each block is the grid's values
//! in row-major node order (last axis fastest) as little-endian `f64`.
//!
//! A data bundle is JSON lines, one [`FormValue`] per line.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dn_form::FormValue;
use crate::error::{Error, Result};
use crate::tensor::{DensityPerturbationField, SpatialGrid, TIComponents, TIPerturbationField, CHANNEL_NAMES};

pub const LAYOUT: &str = "component-major, row-major nodes (last axis fastest), little-endian f64";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub grid: SpatialGrid,
    pub components: Vec<String>,
    pub data_file: String,
    pub layout: String,
}

/// Named scalar fields sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSet {
    pub grid: SpatialGrid,
    pub names: Vec<String>,
    pub data: Vec<Vec<f64>>,
}

impl FieldSet {
    pub fn new(grid: SpatialGrid) -> Self {
        Self {
            grid,
            names: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn push(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.grid.len() {
            return Err(Error::Mismatch(format!(
                "component {name} has {} values, grid has {}",
                values.len(),
                self.grid.len()
            )));
        }
        self.names.push(name.to_string());
        self.data.push(values);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.data[i].as_slice())
    }

    pub fn from_fields(stiffness: &TIPerturbationField, density: Option<&DensityPerturbationField>) -> Result<Self> {
        let mut fs = Self::new(stiffness.grid);
        for ch in 0..5 {
            fs.push(CHANNEL_NAMES[ch], stiffness.component(ch))?;
        }
        if let Some(d) = density {
            if d.grid != stiffness.grid {
                return Err(Error::Mismatch("density and stiffness grids differ".into()));
            }
            fs.push("rho11", d.rho11.clone())?;
            fs.push("rho33", d.rho33.clone())?;
        }
        Ok(fs)
    }

    pub fn stiffness(&self) -> Result<TIPerturbationField> {
        let mut cols = Vec::with_capacity(5);
        for name in &CHANNEL_NAMES[..5] {
            cols.push(
                self.get(name)
                    .ok_or_else(|| Error::Mismatch(format!("missing component {name}")))?,
            );
        }
        let values = (0..self.grid.len())
            .map(|n| TIComponents::new(cols[0][n], cols[1][n], cols[2][n], cols[3][n], cols[4][n]))
            .collect();
        Ok(TIPerturbationField {
            grid: self.grid,
            values,
        })
    }

    pub fn density(&self) -> Option<DensityPerturbationField> {
        Some(DensityPerturbationField {
            grid: self.grid,
            rho11: self.get("rho11")?.to_vec(),
            rho33: self.get("rho33")?.to_vec(),
        })
    }
}

fn sidecar_path(header: &Path) -> PathBuf {
    header.with_extension("bin")
}

pub fn write_fields(path: &Path, fields: &FieldSet) -> Result<()> {
    let bin = sidecar_path(path);
    let header = FieldHeader {
        grid: fields.grid,
        components: fields.names.clone(),
        data_file: bin
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        layout: LAYOUT.to_string(),
    };
    fs::write(path, serde_json::to_string_pretty(&header)? + "\n")?;
    let mut w = BufWriter::new(fs::File::create(&bin)?);
    for col in &fields.data {
        for v in col {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_fields(path: &Path) -> Result<FieldSet> {
    let header: FieldHeader = serde_json::from_str(&fs::read_to_string(path)?)?;
    header.grid.validate()?;
    let bin = path
        .parent()
        .map(|p| p.join(&header.data_file))
        .unwrap_or_else(|| PathBuf::from(&header.data_file));
    let bytes = fs::read(bin)?;
    let n = header.grid.len();
    let expected = 8 * n * header.components.len();
    if bytes.len() != expected {
        return Err(Error::Mismatch(format!(
            "sidecar has {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let mut fs_out = FieldSet::new(header.grid);
    for (k, name) in header.components.iter().enumerate() {
        let col = bytes[8 * n * k..8 * n * (k + 1)]
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        fs_out.push(name, col)?;
    }
    Ok(fs_out)
}

pub fn write_bundle(path: &Path, values: &[FormValue]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for v in values {
        serde_json::to_writer(&mut w, v)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_bundle(path: &Path) -> Result<Vec<FormValue>> {
    let r = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgo::{PairConfig, PairKind};
    use crate::linalg::c;

    #[test]
    fn field_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = SpatialGrid::new([0.0; 3], [0.5, 0.4, 0.3], [3, 4, 2]).unwrap();
        let st = TIPerturbationField::from_fn(grid, |x| TIComponents::new(x[0], x[1], x[2], x[0] * x[1], 1.0));
        let mut dn = DensityPerturbationField::zeros(grid);
        dn.rho33[5] = 2.5;
        let set = FieldSet::from_fields(&st, Some(&dn)).unwrap();
        let path = dir.path().join("fields.json");
        write_fields(&path, &set).unwrap();
        let back = read_fields(&path).unwrap();
        assert_eq!(back, set);
        assert_eq!(back.stiffness().unwrap(), st);
        assert_eq!(back.density().unwrap(), dn);
    }

    #[test]
    fn bundle_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let vals = vec![
            FormValue {
                config: PairConfig::new(PairKind::AShear, 1.0, 0.5, 0.2, 0.0, 0.0),
                value: c(0.25, -1.0),
                ok: true,
                error: None,
            },
            FormValue {
                config: PairConfig::new(PairKind::ETheta, 0.1, 0.1, 0.0, 0.0, 2.0),
                value: c(0.0, 0.0),
                ok: false,
                error: Some("inside the evanescent disk".into()),
            },
        ];
        let path = dir.path().join("data.jsonl");
        write_bundle(&path, &vals).unwrap();
        assert_eq!(read_bundle(&path).unwrap(), vals);
    }

    #[test]
    fn truncated_sidecar_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let grid = SpatialGrid::unit_cube(2);
        let mut set = FieldSet::new(grid);
        set.push("c1111", vec![1.0; 8]).unwrap();
        let path = dir.path().join("f.json");
        write_fields(&path, &set).unwrap();
        fs::write(dir.path().join("f.bin"), [0u8; 10]).unwrap();
        assert!(matches!(read_fields(&path), Err(Error::Mismatch(_))));
    }
}
