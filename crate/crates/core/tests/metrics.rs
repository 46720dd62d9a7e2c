use proptest::prelude::*;
use recon_core::meshcore::primitives::{cube, icosphere, plane_patch};
use recon_core::metrics::{
    chamfer, normal_agreement, normal_consistency, point_to_surface, volumetric_iou, MetricsReport,
};
use recon_core::Vec3;

#[test]
fn identical_meshes() {
    let m = icosphere(3, 1.0);
    assert!(volumetric_iou(&m, &m, 100_000, 1).unwrap() >= 0.99);
    assert_eq!(chamfer(&m, &m, 20_000, 1).unwrap(), 0.0);
    assert!(normal_consistency(&m, &m, 20_000, 1).unwrap() >= 0.999);
    assert_eq!(point_to_surface(&m, &m, 100_000, 1).unwrap(), 0.0);
}

#[test]
fn disjoint_cubes_have_zero_iou() {
    let a = cube(Vec3::zeros(), Vec3::repeat(1.0));
    let b = cube(Vec3::repeat(2.0), Vec3::repeat(3.0));
    assert_eq!(volumetric_iou(&a, &b, 20_000, 4).unwrap(), 0.0);
}

#[test]
fn half_overlapping_cubes() {
    let a = cube(Vec3::zeros(), Vec3::repeat(1.0));
    let b = cube(Vec3::new(0.5, 0.0, 0.0), Vec3::new(1.5, 1.0, 1.0));
    let iou = volumetric_iou(&a, &b, 100_000, 9).unwrap();
    assert!((iou - 1.0 / 3.0).abs() < 0.01, "{iou}");
}

#[test]
fn concentric_spheres() {
    let a = icosphere(4, 1.0);
    let b = icosphere(4, 1.1);
    let cd = chamfer(&a, &b, 100_000, 2).unwrap();
    assert!((cd - 0.1).abs() < 0.01, "{cd}");
    let p2s = point_to_surface(&b, &a, 100_000, 2).unwrap();
    assert!((p2s - 0.1).abs() < 0.01, "{p2s}");
}

#[test]
fn parallel_and_perpendicular_planes() {
    let z = Vec3::z();
    let a = plane_patch(Vec3::zeros(), Vec3::x(), Vec3::y(), 1.0, 4);
    let b = plane_patch(0.2 * z, Vec3::x(), Vec3::y(), 1.0, 4);
    assert!((normal_consistency(&a, &b, 2000, 3).unwrap() - 1.0).abs() < 1e-12);
    let c = plane_patch(Vec3::zeros(), Vec3::y(), z, 1.0, 4);
    let per_sample = normal_agreement(&a, &c, 2000, 3).unwrap();
    assert!(per_sample.iter().all(|&v| v < 1e-12));
}

#[test]
fn p2s_matches_chamfer_direction_on_same_points() {
    // With every vertex used, P2S is the mean of exact surface distances, so
    // it never exceeds the point-sampled pred->gt distance from the same
    // vertices.
    let pred = icosphere(2, 1.05);
    let gt = icosphere(3, 1.0);
    let p2s = point_to_surface(&pred, &gt, usize::MAX, 0).unwrap();
    let samples: Vec<Vec3> = recon_core::meshcore::sample_surface(&gt, 50_000, 7).unwrap().into_iter().map(|s| s.point).collect();
    let one_sided = pred
        .vertices()
        .iter()
        .map(|v| samples.iter().map(|s| (s - v).norm()).fold(f64::INFINITY, f64::min))
        .sum::<f64>()
        / pred.vertex_count() as f64;
    assert!(p2s <= one_sided + 1e-12);
}

#[test]
fn report_serializations() {
    let m = icosphere(2, 1.0);
    let r = MetricsReport::evaluate(&m, &m, 5000, 11).unwrap();
    let kv = r.to_key_value();
    let keys: Vec<&str> = kv.lines().map(|l| l.split(" = ").next().unwrap()).collect();
    assert_eq!(keys, MetricsReport::KEYS);
    assert_eq!(MetricsReport::from_json(&r.to_json()).unwrap(), r);
}

#[test]
fn symmetric_in_arguments() {
    let a = icosphere(3, 1.0);
    let b = icosphere(2, 0.9).map_vertices(|v| v + Vec3::new(0.1, 0.0, 0.0));
    assert_eq!(chamfer(&a, &b, 5000, 5).unwrap(), chamfer(&b, &a, 5000, 5).unwrap());
    assert_eq!(volumetric_iou(&a, &b, 5000, 5).unwrap(), volumetric_iou(&b, &a, 5000, 5).unwrap());
    assert_eq!(normal_consistency(&a, &b, 5000, 5).unwrap(), normal_consistency(&b, &a, 5000, 5).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    #[test]
    fn rigid_motion_changes_little(ax in -3.0f64..3.0, ay in -3.0f64..3.0, t in prop::array::uniform3(-3.0f64..3.0)) {
        let rot = nalgebra::Rotation3::from_euler_angles(ax, ay, 0.4);
        let tr = Vec3::new(t[0], t[1], t[2]);
        let a = icosphere(3, 1.0);
        let b = cube(Vec3::repeat(-0.7), Vec3::repeat(0.7));
        let (a2, b2) = (a.map_vertices(|v| rot * v + tr), b.map_vertices(|v| rot * v + tr));
        // IoU noise scales with the sampled box, which grows under rotation.
        let iou = volumetric_iou(&a, &b, 300_000, 1).unwrap();
        let iou2 = volumetric_iou(&a2, &b2, 300_000, 1).unwrap();
        let n = 40_000;
        prop_assert!((iou - iou2).abs() < 0.01 * iou.max(0.1));
        let cd = chamfer(&a, &b, n, 1).unwrap();
        let cd2 = chamfer(&a2, &b2, n, 1).unwrap();
        prop_assert!((cd - cd2).abs() < 0.01 * cd);
        let nc = normal_consistency(&a, &b, n, 1).unwrap();
        let nc2 = normal_consistency(&a2, &b2, n, 1).unwrap();
        prop_assert!((nc - nc2).abs() < 0.01 * nc);
    }
}
