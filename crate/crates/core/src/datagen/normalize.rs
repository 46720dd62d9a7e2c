use nalgebra::{Matrix3, Rotation3};

use crate::error::{Error, Result};
use crate::meshcore::{TriMesh, Vec3};
use crate::sampling::{Joint, JointSet};

/// `p -> scale * rotation * (p - origin)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Similarity {
    pub origin: Vec3,
    pub rotation: Rotation3<f64>,
    pub scale: f64,
}

impl Similarity {
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * (p - self.origin) * self.scale
    }
}

/// Canonical frame from the pelvis and both hips: pelvis at the origin,
/// left-minus-right hip along +x, the normal of the (pelvis, right hip,
/// left hip) plane along +z, hip-to-hip distance 1.
pub fn canonical_frame(joints: &JointSet) -> Result<Similarity> {
    let p = joints.get(Joint::Pelvis);
    let l = joints.get(Joint::LeftHip);
    let r = joints.get(Joint::RightHip);
    let across = l - r;
    let width = across.norm();
    if !(width > 1e-12) {
        return Err(Error::DegenerateAnchors("hips coincide".into()));
    }
    let normal = (r - p).cross(&(l - p));
    if normal.norm() <= 1e-9 * width * width.max((p - r).norm()) {
        return Err(Error::DegenerateAnchors("pelvis and hips are collinear".into()));
    }
    let x = across / width;
    let z = normal.normalize();
    let y = z.cross(&x);
    let m = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
    Ok(Similarity { origin: p, rotation: Rotation3::from_matrix_unchecked(m), scale: 1.0 / width })
}

/// Moves mesh and joints into the canonical frame. Image coordinates of the
/// joints are left as they are.
pub fn normalize_pose(mesh: &TriMesh, joints: &JointSet) -> Result<(TriMesh, JointSet, Similarity)> {
    let s = canonical_frame(joints)?;
    let mut out = joints.map_3d(|p| s.apply(p));
    out.joints3d[Joint::Pelvis.index()] = Vec3::zeros();
    Ok((mesh.map_vertices(|p| s.apply(p)), out, s))
}
