//! ASCII Wavefront OBJ restricted to `v` and `f` records.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{TriMesh, Vec3};
use crate::error::{Error, Result};

/// Parses `v x y z` and triangular `f a b c` records (1-based, `a/b/c`
/// forms take the position index). Other record types are ignored.
pub fn parse_obj(text: &str) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let coords: Vec<f64> = tok
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| Error::ObjParse { line: line_no, msg: e.to_string() })?;
                if coords.len() != 3 {
                    return Err(Error::ObjParse { line: line_no, msg: "vertex needs 3 coordinates".into() });
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = tok
                    .map(|t| {
                        let first = t.split('/').next().unwrap_or("");
                        match first.parse::<i64>() {
                            Ok(i) if i >= 1 => Ok(i as usize - 1),
                            _ => Err(Error::ObjParse { line: line_no, msg: format!("bad face index {t:?}") }),
                        }
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(Error::ObjParse {
                        line: line_no,
                        msg: format!("only triangles are supported, got {} vertices", idx.len()),
                    });
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, faces)
}

pub fn to_obj_string(mesh: &TriMesh) -> String {
    let mut s = String::with_capacity(mesh.vertex_count() * 40 + mesh.face_count() * 20);
    for v in mesh.vertices() {
        // `{:?}` prints the shortest representation that round-trips.
        let _ = writeln!(s, "v {:?} {:?} {:?}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn read_obj(path: impl AsRef<Path>) -> Result<TriMesh> {
    parse_obj(&fs::read_to_string(path)?)
}

pub fn write_obj(path: impl AsRef<Path>, mesh: &TriMesh) -> Result<()> {
    fs::write(path, to_obj_string(mesh))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshcore::primitives;

    #[test]
    fn round_trip_is_exact() {
        let m = primitives::icosphere(2, 0.37);
        assert_eq!(parse_obj(&to_obj_string(&m)).unwrap(), m);
    }

    #[test]
    fn rejects_quads_and_bad_indices() {
        let quad = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        assert!(matches!(parse_obj(quad), Err(Error::ObjParse { line: 5, .. })));
        let oob = "v 0 0 0\nv 1 0 0\nv 1 1 0\nf 1 2 4\n";
        assert!(matches!(parse_obj(oob), Err(Error::InvalidMesh(_))));
        assert!(parse_obj("v 0 0 0\nf 0 1 2\n").is_err());
    }

    #[test]
    fn slash_forms_and_comments() {
        let text = "# tri\nv 0 0 0\nv 1 0 0\nvn 0 0 1\nv 0 1 0\nf 1/1/1 2/2/1 3//1\n";
        let m = parse_obj(text).unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2]]);
    }
}
