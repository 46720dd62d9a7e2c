use crate::error::{Error, Result};
use crate::meshcore::TriMesh;

/// Moves each vertex along its normal: `v + d_i * n_i`. Faces are kept as is
/// and the input normals are carried over, so applying `-d` afterwards undoes
/// the displacement.
pub fn apply_displacements(smooth: &TriMesh, d: &[f64]) -> Result<TriMesh> {
    if d.len() != smooth.vertex_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} displacements for {} vertices",
            d.len(),
            smooth.vertex_count()
        )));
    }
    let normals = smooth
        .normals()
        .ok_or_else(|| Error::InvalidArgument("mesh has no vertex normals".into()))?;
    if let Some(i) = d.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("displacement {i}")));
    }
    let vertices = smooth.vertices().iter().zip(normals).zip(d).map(|((v, n), &di)| v + n * di).collect();
    let mut out = TriMesh::new(vertices, smooth.faces().to_vec())?;
    out.set_normals(normals.to_vec())?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshcore::primitives::icosphere;

    fn radial_sphere() -> TriMesh {
        let mut m = icosphere(2, 1.0);
        let n = m.vertices().iter().map(|v| v.normalize()).collect();
        m.set_normals(n).unwrap();
        m
    }

    #[test]
    fn zero_is_identity() {
        let m = radial_sphere();
        let out = apply_displacements(&m, &vec![0.0; m.vertex_count()]).unwrap();
        assert_eq!(out.vertices(), m.vertices());
        assert_eq!(out.faces(), m.faces());
    }

    #[test]
    fn uniform_offset_inflates_sphere() {
        let m = radial_sphere();
        let out = apply_displacements(&m, &vec![0.1; m.vertex_count()]).unwrap();
        for v in out.vertices() {
            assert!((v.norm() - 1.1).abs() < 1e-12);
        }
        let back = apply_displacements(&out, &vec![-0.1; m.vertex_count()]).unwrap();
        for (a, b) in back.vertices().iter().zip(m.vertices()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn length_mismatch_fails() {
        let m = radial_sphere();
        assert!(apply_displacements(&m, &[0.0]).is_err());
    }
}
