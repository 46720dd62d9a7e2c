use nalgebra::Rotation3;

use crate::error::{Error, Result};
use crate::meshcore::{Aabb, MeshQuery, Vec3};
use crate::sampling::JointSet;

/// Orthographic camera looking along -z after a rotation of the scene by
/// `-yaw` about +y; `yaw = 0` sees the body from the front. Image `u` grows
/// to the right (+x), `v` downward (-y), in pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Camera {
    pub yaw: f64,
    pub center: Vec3,
    /// Model units per pixel.
    pub pixel_size: f64,
    pub width: usize,
    pub height: usize,
}

impl Camera {
    /// Frames `bbox` so that its projection fits the image, centered.
    pub fn framing(bbox: &Aabb, yaw: f64, width: usize, height: usize) -> Self {
        let rot = Rotation3::from_axis_angle(&Vec3::y_axis(), -yaw);
        let c = bbox.center();
        let (mut ex, mut ey) = (0.0f64, 0.0f64);
        for i in 0..8 {
            let corner = Vec3::new(
                if i & 1 == 0 { bbox.min.x } else { bbox.max.x },
                if i & 2 == 0 { bbox.min.y } else { bbox.max.y },
                if i & 4 == 0 { bbox.min.z } else { bbox.max.z },
            );
            let q = rot * (corner - c);
            ex = ex.max(q.x.abs());
            ey = ey.max(q.y.abs());
        }
        let pixel_size = (2.0 * ex / width as f64).max(2.0 * ey / height as f64);
        Self { yaw, center: c, pixel_size, width, height }
    }

    fn view(&self) -> Rotation3<f64> {
        Rotation3::from_axis_angle(&Vec3::y_axis(), -self.yaw)
    }

    pub fn project(&self, p: &Vec3) -> [f64; 2] {
        let q = self.view() * (p - self.center);
        [self.width as f64 / 2.0 + q.x / self.pixel_size, self.height as f64 / 2.0 - q.y / self.pixel_size]
    }

    /// Viewing line through the center of pixel `(x, y)`: a point on it and
    /// its unit direction.
    pub fn pixel_ray(&self, x: usize, y: usize) -> (Vec3, Vec3) {
        let inv = self.view().inverse();
        let qx = (x as f64 + 0.5 - self.width as f64 / 2.0) * self.pixel_size;
        let qy = (self.height as f64 / 2.0 - (y as f64 + 0.5)) * self.pixel_size;
        (self.center + inv * Vec3::new(qx, qy, 0.0), inv * Vec3::z())
    }

    pub fn in_frame(&self, uv: [f64; 2]) -> bool {
        uv[0] >= 0.0 && uv[1] >= 0.0 && uv[0] < self.width as f64 && uv[1] < self.height as f64
    }
}

/// Projects the joints and rasterizes the silhouette (row-major, 1 where
/// the pixel's viewing line meets the surface). Fails if any surface vertex
/// falls outside the image.
pub fn project_joints(joints: &JointSet, body: &MeshQuery, camera: &Camera) -> Result<(JointSet, Vec<f64>)> {
    if let Some(v) = body.mesh().vertices().iter().find(|v| !camera.in_frame(camera.project(v))) {
        return Err(Error::OutOfFrame(format!("vertex {v:?} projects outside the image")));
    }
    let mut out = joints.clone();
    for (i, p) in joints.joints3d.iter().enumerate() {
        out.joints2d[i] = camera.project(p);
    }
    let reach = body.mesh().bounds().map_or(1.0, |b| b.diagonal()) + (body.mesh().barycenter() - camera.center).norm();
    let mut silhouette = vec![0.0; camera.width * camera.height];
    for y in 0..camera.height {
        for x in 0..camera.width {
            let (o, d) = camera.pixel_ray(x, y);
            if body.line_crosses(&o, &d, -2.0 * reach, 2.0 * reach) {
                silhouette[y * camera.width + x] = 1.0;
            }
        }
    }
    Ok((out, silhouette))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bbox_center_lands_mid_image() {
        let b = Aabb::new(Vec3::new(-2.0, -3.0, -1.0), Vec3::new(2.0, 5.0, 1.0)).unwrap();
        for yaw in [0.0, 0.5, std::f64::consts::FRAC_PI_2] {
            let cam = Camera::framing(&b, yaw, 64, 64);
            let uv = cam.project(&b.center());
            assert!((uv[0] - 32.0).abs() < 1e-12 && (uv[1] - 32.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pixel_rays_project_to_pixel_centers() {
        let b = Aabb::cube(Vec3::new(0.3, 0.1, 0.0), 2.0);
        let cam = Camera::framing(&b, 1.1, 64, 48);
        let (o, d) = cam.pixel_ray(10, 20);
        for t in [-3.0, 0.0, 2.0] {
            let uv = cam.project(&(o + d * t));
            assert!((uv[0] - 10.5).abs() < 1e-9 && (uv[1] - 20.5).abs() < 1e-9);
        }
    }

    #[test]
    fn front_view_orientation() {
        let b = Aabb::cube(Vec3::zeros(), 1.0);
        let cam = Camera::framing(&b, 0.0, 64, 64);
        let right = cam.project(&Vec3::new(0.5, 0.0, 0.0));
        let up = cam.project(&Vec3::new(0.0, 0.5, 0.0));
        assert!(right[0] > 32.0 && up[1] < 32.0);
    }
}
