mod common;

use common::ray_parity_inside;
use proptest::prelude::*;
use recon_core::meshcore::primitives::icosphere;
use recon_core::meshcore::MeshQuery;
use recon_core::sampling::{
    make_training_points, render_heatmaps, sample_joint_spheres, sample_near_surface, sample_uniform, Joint,
    JointSet, Strategy, StrategyCounts, JOINT_COUNT,
};
use recon_core::{Aabb, Vec3};

fn sphere_joints() -> JointSet {
    let mut js = JointSet::from_3d([Vec3::zeros(); JOINT_COUNT]);
    js.joints3d[Joint::Head.index()] = Vec3::new(0.0, 1.0, 0.0);
    js.joints3d[Joint::Nose.index()] = Vec3::new(0.0, 0.9, 0.4);
    js.joints3d[Joint::LeftWrist.index()] = Vec3::new(1.0, 0.0, 0.0);
    js.joints3d[Joint::RightWrist.index()] = Vec3::new(-1.0, 0.0, 0.0);
    js
}

#[test]
fn near_surface_offsets_are_half_normal() {
    let q = MeshQuery::new(icosphere(5, 1.0));
    let sigma = 0.05;
    let pts = sample_near_surface(&q, 10_000, sigma, 3).unwrap();
    let mean = pts.iter().map(|p| q.distance(p)).sum::<f64>() / pts.len() as f64;
    let expected = sigma * (2.0 / std::f64::consts::PI).sqrt();
    assert!((mean - expected).abs() / expected < 0.05, "{mean} vs {expected}");
    let inside = pts.iter().filter(|p| q.contains(p)).count() as f64 / pts.len() as f64;
    assert!((inside - 0.5).abs() < 0.05, "{inside}");
}

#[test]
fn joint_balls_cover_listed_joints_only() {
    let js = sphere_joints();
    let r = 0.3;
    let pts = sample_joint_spheres(&js, r, 5000, 11).unwrap();
    let centers = [Joint::Head, Joint::Nose, Joint::LeftWrist, Joint::RightWrist].map(|j| js.get(j));
    for p in &pts {
        assert!(centers.iter().any(|c| (p - c).norm() <= r + 1e-12));
    }
}

#[test]
fn joint_balls_hit_the_body_more_than_uniform() {
    let q = MeshQuery::new(icosphere(3, 1.0));
    let js = sphere_joints();
    let bbox = Aabb::cube(Vec3::zeros(), 1.3);
    let frac = |pts: &[Vec3]| pts.iter().filter(|p| q.contains(p)).count() as f64 / pts.len() as f64;
    let balls = frac(&sample_joint_spheres(&js, 0.3, 4000, 2).unwrap());
    let uniform = frac(&sample_uniform(&bbox, 4000, 2));
    // Balls centered on the surface are about half inside; the box about 4.19/17.6.
    assert!(balls > uniform, "{balls} vs {uniform}");
}

#[test]
fn training_points_have_ray_parity_labels() {
    let mesh = icosphere(3, 1.0);
    let q = MeshQuery::new(mesh.clone());
    let bbox = Aabb::cube(Vec3::zeros(), 1.2);
    let counts = StrategyCounts::split(2048);
    let pts = make_training_points(&q, &sphere_joints(), &bbox, counts, 0.05, 0.3, 5).unwrap();
    assert_eq!(pts.len(), 2048);
    assert_eq!(pts.iter().filter(|s| s.strategy == Strategy::DenseSurface).count(), 1024);
    for s in &pts {
        assert_eq!(s.inside, ray_parity_inside(&mesh, &s.point));
        assert_eq!(s.point.map(|x| x as f32 as f64), s.point);
    }
}

#[test]
fn all_uniform_split_is_labeled_uniform_sampling() {
    let q = MeshQuery::new(icosphere(2, 1.0));
    let bbox = Aabb::cube(Vec3::zeros(), 1.2);
    let counts = StrategyCounts { uniform: 300, near_surface: 0, joint_sphere: 0 };
    let pts = make_training_points(&q, &sphere_joints(), &bbox, counts, 0.05, 0.3, 5).unwrap();
    assert!(pts.iter().all(|s| s.strategy == Strategy::Uniform && s.inside == q.contains(&s.point)));
}

#[test]
fn open_mesh_is_rejected() {
    let m = icosphere(1, 1.0);
    let open = recon_core::TriMesh::new(m.vertices().to_vec(), m.faces()[1..].to_vec()).unwrap();
    let q = MeshQuery::new(open);
    let bbox = Aabb::cube(Vec3::zeros(), 1.2);
    assert!(make_training_points(&q, &sphere_joints(), &bbox, StrategyCounts::split(10), 0.05, 0.3, 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn heatmaps_shift_with_joints(u in 16.0f64..40.0, v in 16.0f64..40.0, dx in -6i32..6, dy in -6i32..6) {
        // Quarter-pixel positions keep the shifted coordinates exact.
        let (u, v) = ((u * 4.0).round() / 4.0, (v * 4.0).round() / 4.0);
        let mut a = [[-5.0, -5.0]; JOINT_COUNT];
        let mut b = a;
        a[9] = [u, v];
        b[9] = [u + dx as f64, v + dy as f64];
        let ha = render_heatmaps(&a, 64, 64, 2.0);
        let hb = render_heatmaps(&b, 64, 64, 2.0);
        for y in 8..56usize {
            for x in 8..56usize {
                let (x2, y2) = (x as i32 + dx, y as i32 + dy);
                prop_assert_eq!(ha.value(9, x, y), hb.value(9, x2 as usize, y2 as usize));
            }
        }
    }

    #[test]
    fn heatmap_values_in_unit_range(u in -10.0f64..74.0, v in -10.0f64..74.0) {
        let mut j = [[-5.0, -5.0]; JOINT_COUNT];
        j[0] = [u, v];
        let h = render_heatmaps(&j, 64, 64, 2.0);
        prop_assert!(h.data.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }
}

#[test]
fn displacement_targets_pull_smooth_mesh_toward_gt() {
    use recon_core::extraction::apply_displacements;
    use recon_core::metrics::chamfer;
    use recon_core::sampling::displacement_ground_truth;
    let fixtures = [
        icosphere(4, 1.0).map_vertices(|v| v * (1.0 + 0.06 * (3.0 * v.x).sin() * (2.0 * v.y).cos())),
        icosphere(4, 1.0).map_vertices(|v| Vec3::new(v.x * 1.1, v.y * 0.95, v.z)),
    ];
    for gt in fixtures {
        let smooth = icosphere(3, 1.0).with_normals().unwrap();
        let q = MeshQuery::new(gt.clone());
        let d = displacement_ground_truth(&smooth, &q, 0.3).unwrap();
        let detailed = apply_displacements(&smooth, &d).unwrap();
        let before = chamfer(&smooth, &gt, 20_000, 1).unwrap();
        let after = chamfer(&detailed, &gt, 20_000, 1).unwrap();
        assert!(after < before, "{after} vs {before}");
    }
}
