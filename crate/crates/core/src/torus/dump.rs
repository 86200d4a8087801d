use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::domain::TorusDomain;
use super::field::Field;
use crate::error::{Error, Result};

const LAYOUT: &str = "row-major, x index outermost, little-endian f64";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SidecarPuncture {
    pub label: String,
    pub x: f64,
    pub y: f64,
    pub mu: Vec<f64>,
}

/// JSON description stored next to every binary field dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSidecar {
    pub field: String,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub layout: String,
    pub data_file: String,
    pub punctures: Vec<SidecarPuncture>,
}

/// Write `<dir>/<name>.f64` and `<dir>/<name>.json`; returns the sidecar
/// file name relative to `dir`.
pub fn write_field(
    dir: &Path,
    name: &str,
    domain: &TorusDomain,
    field: &Field,
    punctures: &[SidecarPuncture],
) -> Result<String> {
    if field.nx() != domain.nx() || field.ny() != domain.ny() {
        return Err(Error::SizeMismatch {
            expected: domain.nx() * domain.ny(),
            got: field.len(),
        });
    }
    let data_file = format!("{name}.f64");
    let mut bytes = Vec::with_capacity(field.len() * 8);
    for v in field.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(dir.join(&data_file), bytes)?;
    let sidecar = FieldSidecar {
        field: name.to_string(),
        nx: domain.nx(),
        ny: domain.ny(),
        lx: domain.lx(),
        ly: domain.ly(),
        layout: LAYOUT.to_string(),
        data_file,
        punctures: punctures.to_vec(),
    };
    let json_name = format!("{name}.json");
    let mut text = serde_json::to_string_pretty(&sidecar)?;
    text.push('\n');
    fs::write(dir.join(&json_name), text)?;
    Ok(json_name)
}

/// Read a dump through its sidecar, validating layout and byte count.
pub fn read_field(sidecar_path: &Path) -> Result<(FieldSidecar, Field)> {
    let text = fs::read_to_string(sidecar_path)?;
    let sidecar: FieldSidecar = serde_json::from_str(&text)?;
    if sidecar.layout != LAYOUT {
        return Err(Error::invalid(format!("unsupported layout `{}`", sidecar.layout)));
    }
    let dir: PathBuf = sidecar_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let bytes = fs::read(dir.join(&sidecar.data_file))?;
    let expected = sidecar.nx * sidecar.ny;
    if bytes.len() != expected * 8 {
        return Err(Error::SizeMismatch {
            expected,
            got: bytes.len() / 8,
        });
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let field = Field::from_vec(sidecar.nx, sidecar.ny, data)?;
    Ok((sidecar, field))
}
