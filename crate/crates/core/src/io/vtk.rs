//! Legacy VTK (3.0, ASCII) unstructured-grid output.

use std::io::{BufRead, Write};

use crate::mesh::Mesh;
use crate::stress::COMPONENT_NAMES;
use crate::{Error, Point3, Result};

const VTK_TETRA: u8 = 10;

/// Vertex data written with a mesh.
#[derive(Debug, Clone, Default)]
pub struct VtkFields {
    pub displacement: Vec<[f64; 3]>,
    /// Projected stress components in `kappa_11, 22, 33, 12, 13, 23` order.
    pub stress: Option<[Vec<f64>; 6]>,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn emit_vtk<W: Write>(mesh: &Mesh, fields: &VtkFields, label: &str, mut out: W) -> Result<()> {
    let nv = mesh.num_vertices();
    if fields.displacement.len() != nv {
        return Err(Error::InvalidArgument(format!(
            "displacement has {} values for {nv} vertices",
            fields.displacement.len()
        )));
    }
    if let Some(s) = &fields.stress {
        if s.iter().any(|c| c.len() != nv) {
            return Err(Error::InvalidArgument("stress arrays do not match vertex count".into()));
        }
    }
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", label.replace('\n', " "))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {nv} double")?;
    for p in mesh.vertices() {
        writeln!(out, "{} {} {}", num(p[0]), num(p[1]), num(p[2]))?;
    }
    let nt = mesh.num_tets();
    writeln!(out, "CELLS {nt} {}", 5 * nt)?;
    for t in mesh.tets() {
        writeln!(out, "4 {} {} {} {}", t[0], t[1], t[2], t[3])?;
    }
    writeln!(out, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(out, "{VTK_TETRA}")?;
    }
    writeln!(out, "POINT_DATA {nv}")?;
    writeln!(out, "VECTORS displacement double")?;
    for u in &fields.displacement {
        writeln!(out, "{} {} {}", num(u[0]), num(u[1]), num(u[2]))?;
    }
    if let Some(stress) = &fields.stress {
        for (name, comp) in COMPONENT_NAMES.iter().zip(stress) {
            writeln!(out, "SCALARS {name} double 1")?;
            writeln!(out, "LOOKUP_TABLE default")?;
            for v in comp {
                writeln!(out, "{}", num(*v))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads back the `POINTS` block of a legacy VTK file.
pub fn read_vtk_points<R: BufRead>(input: R) -> Result<Vec<Point3>> {
    let bad = |m: &str| Error::InvalidArgument(format!("malformed VTK: {m}"));
    let mut lines = input.lines();
    let count = loop {
        let line = lines.next().ok_or_else(|| bad("no POINTS section"))??;
        let mut it = line.split_whitespace();
        if it.next() == Some("POINTS") {
            break it
                .next()
                .and_then(|c| c.parse::<usize>().ok())
                .ok_or_else(|| bad("point count"))?;
        }
    };
    let mut values = Vec::with_capacity(3 * count);
    while values.len() < 3 * count {
        let line = lines.next().ok_or_else(|| bad("truncated POINTS"))??;
        for tok in line.split_whitespace() {
            values.push(tok.parse::<f64>().map_err(|_| bad("coordinate"))?);
        }
    }
    if values.len() != 3 * count {
        return Err(bad("coordinate count"));
    }
    Ok(values.chunks(3).map(|c| [c[0], c[1], c[2]]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_box_mesh, BoxDomain};

    fn write(mesh: &Mesh, fields: &VtkFields) -> String {
        let mut buf = Vec::new();
        emit_vtk(mesh, fields, "step 0", &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn single_cell_layout() {
        let mesh = build_box_mesh(&BoxDomain::unit_cube(1).unwrap()).unwrap();
        let f = VtkFields {
            displacement: vec![[0.0; 3]; 8],
            stress: Some(std::array::from_fn(|_| vec![0.0; 8])),
        };
        let s = write(&mesh, &f);
        assert!(s.contains("POINTS 8 double"));
        assert!(s.contains("CELLS 6 30"));
        assert_eq!(s.lines().filter(|l| *l == "10").count(), 6);
        assert_eq!(s.matches("SCALARS").count(), 6);
        let data = s.split("POINT_DATA").nth(1).unwrap();
        let values: Vec<f64> = data
            .lines()
            .skip(1)
            .filter(|l| !l.starts_with(char::is_alphabetic))
            .flat_map(|l| l.split_whitespace().map(|t| t.parse::<f64>().unwrap()))
            .collect();
        assert_eq!(values.len(), 8 * 3 + 6 * 8);
        assert!(values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn round_trip_points() {
        let mesh = build_box_mesh(&BoxDomain::new([-1.0; 3], [1.0; 3], [3, 2, 4]).unwrap()).unwrap();
        let f = VtkFields {
            displacement: vec![[1.0 / 3.0, 2.0, -0.1]; mesh.num_vertices()],
            stress: None,
        };
        let s = write(&mesh, &f);
        let pts = read_vtk_points(s.as_bytes()).unwrap();
        assert_eq!(pts.len(), mesh.num_vertices());
        for (a, b) in pts.iter().zip(mesh.vertices()) {
            for i in 0..3 {
                assert!((a[i] - b[i]).abs() <= 1e-15);
            }
        }
        assert_eq!(s, write(&mesh, &f));
    }

    #[test]
    fn length_mismatch_rejected() {
        let mesh = build_box_mesh(&BoxDomain::unit_cube(1).unwrap()).unwrap();
        let f = VtkFields {
            displacement: vec![[0.0; 3]; 3],
            stress: None,
        };
        assert!(emit_vtk(&mesh, &f, "x", Vec::new()).is_err());
    }
}
