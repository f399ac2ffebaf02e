//! Plain-text and legacy VTK mesh output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::Mesh;
use crate::{Error, Result};

/// Node file: one vertex per line, `x y`.
pub fn node_text(mesh: &Mesh) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        writeln!(out, "{:.17e} {:.17e}", v[0], v[1]).unwrap();
    }
    out
}

/// Element file: one triangle per line, `i j k`, 0-based.
pub fn element_text(mesh: &Mesh) -> String {
    let mut out = String::new();
    for t in mesh.triangles() {
        writeln!(out, "{} {} {}", t[0], t[1], t[2]).unwrap();
    }
    out
}

/// Writes `<stem>.node` and `<stem>.ele` into `dir`.
pub fn write_node_element(mesh: &Mesh, dir: &Path, stem: &str) -> Result<()> {
    let node = dir.join(format!("{stem}.node"));
    fs::write(&node, node_text(mesh)).map_err(|e| Error::io(&node, e))?;
    let ele = dir.join(format!("{stem}.ele"));
    fs::write(&ele, element_text(mesh)).map_err(|e| Error::io(&ele, e))?;
    Ok(())
}

/// Legacy ASCII VTK unstructured grid with optional point scalars and cell
/// vectors.
pub struct VtkWriter<'a> {
    mesh: &'a Mesh,
    title: String,
    point_scalars: Vec<(String, &'a [f64])>,
    cell_scalars: Vec<(String, &'a [f64])>,
    cell_vectors: Vec<(String, &'a [[f64; 2]])>,
}

impl<'a> VtkWriter<'a> {
    pub fn new(mesh: &'a Mesh, title: impl Into<String>) -> Self {
        VtkWriter {
            mesh,
            title: title.into(),
            point_scalars: Vec::new(),
            cell_scalars: Vec::new(),
            cell_vectors: Vec::new(),
        }
    }

    pub fn point_scalar(mut self, name: impl Into<String>, values: &'a [f64]) -> Self {
        assert_eq!(values.len(), self.mesh.vertices().len());
        self.point_scalars.push((name.into(), values));
        self
    }

    pub fn cell_scalar(mut self, name: impl Into<String>, values: &'a [f64]) -> Self {
        assert_eq!(values.len(), self.mesh.triangles().len());
        self.cell_scalars.push((name.into(), values));
        self
    }

    pub fn cell_vector(mut self, name: impl Into<String>, values: &'a [[f64; 2]]) -> Self {
        assert_eq!(values.len(), self.mesh.triangles().len());
        self.cell_vectors.push((name.into(), values));
        self
    }

    pub fn render(&self) -> String {
        let mesh = self.mesh;
        let nv = mesh.vertices().len();
        let nt = mesh.triangles().len();
        let mut out = String::new();
        out.push_str("# vtk DataFile Version 3.0\n");
        // the title line must not contain newlines
        writeln!(out, "{}", self.title.replace('\n', " ")).unwrap();
        out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
        writeln!(out, "POINTS {nv} double").unwrap();
        for v in mesh.vertices() {
            writeln!(out, "{:.17e} {:.17e} 0", v[0], v[1]).unwrap();
        }
        writeln!(out, "CELLS {nt} {}", 4 * nt).unwrap();
        for t in mesh.triangles() {
            writeln!(out, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
        }
        writeln!(out, "CELL_TYPES {nt}").unwrap();
        for _ in 0..nt {
            out.push_str("5\n");
        }
        if !self.point_scalars.is_empty() {
            writeln!(out, "POINT_DATA {nv}").unwrap();
            for (name, values) in &self.point_scalars {
                writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
                for v in values.iter() {
                    writeln!(out, "{v:.17e}").unwrap();
                }
            }
        }
        if !self.cell_scalars.is_empty() || !self.cell_vectors.is_empty() {
            writeln!(out, "CELL_DATA {nt}").unwrap();
            for (name, values) in &self.cell_scalars {
                writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
                for v in values.iter() {
                    writeln!(out, "{v:.17e}").unwrap();
                }
            }
            for (name, values) in &self.cell_vectors {
                writeln!(out, "VECTORS {name} double").unwrap();
                for g in values.iter() {
                    writeln!(out, "{:.17e} {:.17e} 0", g[0], g[1]).unwrap();
                }
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }
}
