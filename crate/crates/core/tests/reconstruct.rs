use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recon_core::extraction::{displace_mesh, reconstruct_detailed, reconstruct_smooth, ExtractionParams};
use recon_core::meshcore::is_watertight;
use recon_core::neural::*;
use recon_core::sampling::{render_heatmaps, OccupancySample, Strategy, JOINT_COUNT};
use recon_core::{Aabb, Vec3};

/// Disc silhouettes whose radius sets the radius of a target sphere.
fn example(seed: u64) -> CoarseExample {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let joints: [[f64; 2]; JOINT_COUNT] = std::array::from_fn(|_| [r.random_range(8.0..56.0), r.random_range(8.0..56.0)]);
    let rad_px: f64 = r.random_range(10.0..20.0);
    let sil = (0..64 * 64)
        .map(|i| {
            let (x, y) = ((i % 64) as f64 - 31.5, (i / 64) as f64 - 31.5);
            if x * x + y * y < rad_px * rad_px { 1.0 } else { 0.0 }
        })
        .collect();
    let obs = Observation::new(sil, render_heatmaps(&joints, 64, 64, 2.0), Some(joints)).unwrap();
    let radius = rad_px / 32.0;
    let samples = (0..1024)
        .map(|_| {
            let p = Vec3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
            OccupancySample { point: p, inside: p.norm() < radius, strategy: Strategy::Uniform }
        })
        .collect();
    CoarseExample { obs, samples }
}

fn trained() -> (CoarseModel, Vec<CoarseExample>) {
    let data: Vec<_> = (0..6).map(example).collect();
    let mut model = CoarseModel::new(ModelDims { feature: 32, latent: 4, blocks: 2, hidden: 32, ..ModelDims::default() }, 1).unwrap();
    let config = TrainConfig {
        lr_schedule: vec![(0, 2e-3)],
        batch_size: 3,
        k_points: 256,
        n_vertices: 64,
        pos_weight: 5.0,
        kl_weight: 1.0,
        epochs: 60,
        seed: 1,
    };
    train_coarse(&mut model, &data, &config, |_| {}).unwrap();
    (model, data)
}

fn params(tau: f64) -> ExtractionParams {
    ExtractionParams { tau, initial_res: 16, final_res: 64, bbox: Aabb::cube(Vec3::zeros(), 1.0) }
}

#[test]
fn smooth_reconstruction_contracts() {
    assert_eq!(ExtractionParams::default().tau, 0.96);
    let (model, data) = trained();
    let obs = &data[0].obs;
    let mut volumes = Vec::new();
    for tau in [0.5, 0.7, 0.96] {
        let m = reconstruct_smooth(&model, obs, &params(tau)).unwrap();
        assert!(is_watertight(&m));
        volumes.push(m.signed_volume());
    }
    println!("{volumes:?}");
    assert!(volumes[0] >= volumes[1] && volumes[1] >= volumes[2]);
    let a = reconstruct_smooth(&model, obs, &params(0.5)).unwrap();
    let b = reconstruct_smooth(&model, obs, &params(0.5)).unwrap();
    assert_eq!(a, b);
    assert!(reconstruct_smooth(&model, obs, &params(1.0)).is_err());
}

#[test]
fn detailed_reconstruction_keeps_topology() {
    let (model, data) = trained();
    let obs = &data[1].obs;
    let smooth = reconstruct_smooth(&model, obs, &params(0.5)).unwrap();
    let mut disp = DispModel::new(*model.dims(), 4).unwrap();
    let moved = displace_mesh(&disp, obs, &smooth).unwrap();
    assert_eq!(moved.faces(), smooth.faces());
    assert_eq!(moved.vertex_count(), smooth.vertex_count());
    assert_ne!(moved.vertices(), smooth.vertices());
    disp.zero_output_head();
    let same = reconstruct_detailed(&model, &disp, obs, &params(0.5)).unwrap();
    assert_eq!(same.vertices(), smooth.vertices());
    assert_eq!(same.faces(), smooth.faces());
}

