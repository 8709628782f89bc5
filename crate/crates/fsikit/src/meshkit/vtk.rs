//! Legacy ASCII VTK 2.0 unstructured-grid export for inspection.

use super::{DeformedCoords, Mesh2D};
use crate::error::{FsiError, Result};
use std::io::Write;
use std::path::Path;

/// Nodal field attached to the export.
pub enum FieldData {
    Scalar(Vec<f64>),
    Vector(Vec<[f64; 2]>),
}

impl FieldData {
    fn len(&self) -> usize {
        match self {
            FieldData::Scalar(v) => v.len(),
            FieldData::Vector(v) => v.len(),
        }
    }
}

/// Writes mesh geometry (on the given coordinates) plus named nodal fields.
pub fn export_vtk(
    mesh: &Mesh2D,
    coords: &DeformedCoords,
    fields: &[(String, FieldData)],
    title: &str,
    path: &Path,
) -> Result<()> {
    let n = mesh.num_nodes();
    if coords.0.len() != n {
        return Err(FsiError::Dimension(format!(
            "coords length {} != node count {n}",
            coords.0.len()
        )));
    }
    for (name, f) in fields {
        if f.len() != n {
            return Err(FsiError::Dimension(format!(
                "field '{name}' length {} != node count {n}",
                f.len()
            )));
        }
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "# vtk DataFile Version 2.0")?;
    writeln!(w, "{}", title.lines().next().unwrap_or("fsikit export"))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {n} double")?;
    for p in &coords.0 {
        writeln!(w, "{:.12e} {:.12e} 0.0", p[0], p[1])?;
    }
    let m = mesh.triangles().len();
    writeln!(w, "CELLS {m} {}", 4 * m)?;
    for t in mesh.triangles() {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {m}")?;
    for _ in 0..m {
        writeln!(w, "5")?;
    }
    if !fields.is_empty() {
        writeln!(w, "POINT_DATA {n}")?;
        for (name, f) in fields {
            match f {
                FieldData::Scalar(v) => {
                    writeln!(w, "SCALARS {name} double 1")?;
                    writeln!(w, "LOOKUP_TABLE default")?;
                    for x in v {
                        writeln!(w, "{x:.12e}")?;
                    }
                }
                FieldData::Vector(v) => {
                    writeln!(w, "VECTORS {name} double")?;
                    for x in v {
                        writeln!(w, "{:.12e} {:.12e} 0.0", x[0], x[1])?;
                    }
                }
            }
        }
    }
    Ok(())
}
