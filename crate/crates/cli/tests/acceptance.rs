//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `cargo test -p recon-cli --test acceptance -- <filter>` runs only the
//! criteria whose name contains `<filter>`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use recon_core::datagen::{build_dataset, item_name, Dataset, DatasetConfig, Split};
use recon_core::extraction::{
    dense_grid, displace_mesh, marching_cubes, mise_extract, reconstruct_smooth, ExtractionParams, FnField,
    OccupancyGrid,
};
use recon_core::meshcore::primitives::{cube, icosphere, unit_cube};
use recon_core::meshcore::{is_watertight, MeshQuery};
use recon_core::metrics::{chamfer, normal_consistency, point_to_surface, volumetric_iou};
use recon_core::neural::*;
use recon_core::pipeline::{coarse_examples, disp_examples, observation, DispSource};
use recon_core::sampling::{sample_uniform, OccupancySample, Strategy, JOINT_COUNT};
use recon_core::{Aabb, TriMesh, Vec3};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Crossing parity along a fixed skew ray, independent of the library's
/// inside test.
fn ray_parity_inside(mesh: &TriMesh, p: &Vec3) -> bool {
    let dir = Vec3::new(0.5377, 0.8361, 0.1093).normalize();
    let mut crossings = 0;
    for f in mesh.faces() {
        let (a, b, c) = (mesh.vertices()[f[0]], mesh.vertices()[f[1]], mesh.vertices()[f[2]]);
        let (e1, e2) = (b - a, c - a);
        let h = dir.cross(&e2);
        let det = e1.dot(&h);
        if det.abs() < 1e-14 {
            continue;
        }
        let s = p - a;
        let u = s.dot(&h) / det;
        if !(0.0..=1.0).contains(&u) {
            continue;
        }
        let q = s.cross(&e1);
        let v = dir.dot(&q) / det;
        if v < 0.0 || u + v > 1.0 {
            continue;
        }
        if e2.dot(&q) / det > 0.0 {
            crossings += 1;
        }
    }
    crossings % 2 == 1
}

fn dumbbell() -> TriMesh {
    let bbox = Aabb::new(Vec3::new(-1.0, -0.6, -0.6), Vec3::new(1.0, 0.6, 0.6)).unwrap();
    let grid = OccupancyGrid::from_fn([40, 24, 24], bbox, |p| {
        let a = (p - Vec3::new(-0.45, 0.0, 0.0)).norm();
        let b = (p - Vec3::new(0.45, 0.05, 0.0)).norm();
        if a.min(b) < 0.42 { 1.0 } else { 0.0 }
    })
    .unwrap();
    marching_cubes(&grid, 0.5).unwrap()
}

fn geometry_oracles() -> Outcome {
    let t = Instant::now();
    let r = 0.3;
    let grid = OccupancyGrid::from_fn([64; 3], Aabb::new(Vec3::repeat(-0.5), Vec3::repeat(0.5)).unwrap(), |p| {
        1.0 / (1.0 + (-40.0 * (r - p.norm())).exp())
    })
    .unwrap();
    let sphere = marching_cubes(&grid, 0.5).unwrap();
    let cell = 1.0 / 64.0;
    let radial = sphere.vertices().iter().map(|v| (v.norm() - r).abs()).fold(0.0, f64::max) / cell;
    let watertight = is_watertight(&sphere);

    let unit = Aabb::new(Vec3::zeros(), Vec3::repeat(1.0)).unwrap();
    let field = FnField(|p: &Vec3| if (p - Vec3::repeat(0.5)).norm() <= 0.3 { 1.0 } else { 0.0 });
    let (mise, _) = mise_extract(&field, unit, 16, 128, 0.5).unwrap();
    let dense = dense_grid(&field, unit, 128).unwrap();
    let mismatches = mise.values().iter().zip(dense.values()).filter(|(a, b)| (**a >= 0.5) != (**b >= 0.5)).count();

    let mut agree = Vec::new();
    for (i, mesh) in [unit_cube(), icosphere(3, 1.0), dumbbell()].into_iter().enumerate() {
        let b = mesh.bounds().unwrap();
        let q = MeshQuery::new(mesh.clone());
        let pts = sample_uniform(&b.padded(0.1 * b.diagonal()), 1000, 17 + i as u64);
        agree.push(pts.iter().filter(|p| q.contains(p) == ray_parity_inside(&mesh, p)).count());
    }
    let secs = t.elapsed().as_secs_f64();
    check(
        watertight && radial < 1.5 && mismatches == 0 && agree.iter().all(|&a| a == 1000) && secs < 30.0,
        format!(
            "sphere watertight={watertight} max radial error {radial:.3} cells (<1.5); MISE vs dense mismatches {mismatches}; \
             contains agreement {agree:?}/1000; {secs:.1} s (<30)"
        ),
    )
}

fn fd_observation(seed: u64) -> Observation {
    let joints: [[f64; 2]; JOINT_COUNT] = std::array::from_fn(|j| {
        let a = (seed as f64 + 1.0) * (j as f64 + 1.0);
        [32.0 + 20.0 * (0.7 * a).sin(), 32.0 + 24.0 * (1.3 * a).cos()]
    });
    let heat = recon_core::sampling::render_heatmaps(&joints, 64, 64, 2.0);
    let rad = 10.0 + seed as f64;
    let sil = (0..64 * 64)
        .map(|i| {
            let (x, y) = ((i % 64) as f64 + 0.5, (i / 64) as f64 + 0.5);
            if (x - 32.0).powi(2) + (y - 30.0).powi(2) < rad * rad { 1.0 } else { 0.0 }
        })
        .collect();
    Observation::new(sil, heat, Some(joints)).unwrap()
}

/// Deterministic noise in [-1, 1) from an index.
fn hash_unit(i: u64) -> f64 {
    let mut x = i.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xD1B5_4A32_D192_ED03;
    x ^= x >> 31;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 29;
    (x >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

/// Central differences at h = 1e-4; parameters whose loss has a kink inside
/// the step (differences at h and h/10 disagree) are redrawn.
fn worst_relative_error(analytic: &[f64], len: usize, count: usize, mut loss_at: impl FnMut(usize, f64) -> f64) -> (f64, usize) {
    let h = 1e-4;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-7);
    let (mut worst, mut accepted): (f64, usize) = (0.0, 0);
    for k in 0..20 * count as u64 {
        if accepted == count {
            break;
        }
        let i = ((hash_unit(k) + 1.0) / 2.0 * len as f64) as usize % len;
        let numeric = (loss_at(i, h) - loss_at(i, -h)) / (2.0 * h);
        let fine = (loss_at(i, h / 10.0) - loss_at(i, -h / 10.0)) / (0.2 * h);
        if rel(numeric, fine) > 1e-5 {
            continue;
        }
        worst = worst.max(rel(analytic[i], numeric));
        accepted += 1;
    }
    (worst, accepted)
}

fn jitter(params: &mut [f64], salt: u64) {
    for (i, p) in params.iter_mut().enumerate() {
        *p += 0.05 * hash_unit(salt ^ (i as u64) << 8);
    }
}

fn gradient_suite() -> Outcome {
    let t = Instant::now();
    let count = 24;
    let obs = [fd_observation(1), fd_observation(2)];

    let mut coarse = CoarseModel::new(ModelDims::default(), 1).unwrap();
    jitter(coarse.params_mut(), 3);
    let samples: Vec<Vec<OccupancySample>> = (0..2u64)
        .map(|s| {
            (0..24u64)
                .map(|k| {
                    let p = Vec3::new(hash_unit(s * 1000 + 3 * k), hash_unit(s * 1000 + 3 * k + 1), hash_unit(s * 1000 + 3 * k + 2));
                    OccupancySample { point: p, inside: p.norm() < 0.6, strategy: Strategy::Uniform }
                })
                .collect()
        })
        .collect();
    let batch: Vec<CoarseBatchItem> = obs.iter().zip(&samples).map(|(o, s)| CoarseBatchItem { obs: o, samples: s }).collect();
    let w = CoarseLossWeights { pos_weight: 25.0, kl_weight: 1.0 };
    let (_, grad) = coarse_loss_grad(&coarse, &batch, w, 9).unwrap();
    let mut probe = coarse.clone();
    let (coarse_worst, coarse_n) = worst_relative_error(&grad, grad.len(), count, |i, d| {
        let old = probe.params()[i];
        probe.params_mut()[i] = old + d;
        let l = coarse_loss(&probe, &batch, w, 9).unwrap();
        probe.params_mut()[i] = old;
        l
    });

    let mut disp = DispModel::new(ModelDims::default(), 2).unwrap();
    jitter(disp.params_mut(), 4);
    let verts: Vec<(Vec<Vec3>, Vec<Vec3>, Vec<f64>)> = (0..2u64)
        .map(|s| {
            (0..24u64)
                .map(|k| {
                    let p = Vec3::new(hash_unit(s * 999 + 5 * k), hash_unit(s * 999 + 5 * k + 1), hash_unit(s * 999 + 5 * k + 2));
                    (p, p.normalize(), 0.05 * hash_unit(s * 999 + 5 * k + 3))
                })
                .fold((Vec::new(), Vec::new(), Vec::new()), |mut acc, (p, n, d)| {
                    acc.0.push(p);
                    acc.1.push(n);
                    acc.2.push(d);
                    acc
                })
        })
        .collect();
    let dbatch: Vec<DispBatchItem> = obs
        .iter()
        .zip(&verts)
        .map(|(o, (p, n, d))| DispBatchItem { obs: o, points: p, normals: n, targets: d })
        .collect();
    let (_, dgrad) = disp_loss_grad(&disp, &dbatch).unwrap();
    let mut dprobe = disp.clone();
    let (disp_worst, disp_n) = worst_relative_error(&dgrad, dgrad.len(), count, |i, d| {
        let old = dprobe.params()[i];
        dprobe.params_mut()[i] = old + d;
        let l = disp_loss(&dprobe, &dbatch).unwrap();
        dprobe.params_mut()[i] = old;
        l
    });
    let secs = t.elapsed().as_secs_f64();
    check(
        coarse_n >= 20 && disp_n >= 20 && coarse_worst < 1e-4 && disp_worst < 1e-4 && secs < 60.0,
        format!(
            "coarse {coarse_n} params max rel {coarse_worst:.2e}; displacement {disp_n} params max rel {disp_worst:.2e} (<1e-4); {secs:.1} s (<60)"
        ),
    )
}

fn closed_form_losses() -> Outcome {
    let a = (wbce(0.5, true, 1.0) - 2f64.ln()).abs();
    let b = kl_gaussian(&[0.0], &[1.0]).abs();
    let c = (kl_gaussian(&[1.0], &[1.0]) - 0.5).abs();
    check(a < 1e-9 && b < 1e-9 && c < 1e-9, format!("|wbce(0.5,1,1)-ln2| {a:.1e}, |KL(0,1)| {b:.1e}, |KL(1,1)-0.5| {c:.1e} (<1e-9)"))
}

fn metric_fixtures() -> Outcome {
    let s = icosphere(3, 1.0);
    let iou_same = volumetric_iou(&s, &s, 100_000, 1).unwrap();
    let cd_same = chamfer(&s, &s, 20_000, 1).unwrap();
    let nc_same = normal_consistency(&s, &s, 20_000, 1).unwrap();
    let p2s_same = point_to_surface(&s, &s, 100_000, 1).unwrap();
    let a = cube(Vec3::zeros(), Vec3::repeat(1.0));
    let b = cube(Vec3::new(0.5, 0.0, 0.0), Vec3::new(1.5, 1.0, 1.0));
    let iou_half = volumetric_iou(&a, &b, 100_000, 9).unwrap();
    let (inner, outer) = (icosphere(4, 1.0), icosphere(4, 1.1));
    let cd = chamfer(&inner, &outer, 100_000, 2).unwrap();
    let p2s = point_to_surface(&outer, &inner, 100_000, 2).unwrap();
    check(
        iou_same >= 0.99
            && cd_same == 0.0
            && nc_same >= 0.999
            && p2s_same == 0.0
            && (iou_half - 1.0 / 3.0).abs() <= 0.01
            && (cd - 0.1).abs() <= 0.01
            && (p2s - 0.1).abs() <= 0.01,
        format!(
            "identical: iou {iou_same:.4} cd {cd_same} nc {nc_same:.5} p2s {p2s_same}; half cubes iou {iou_half:.4}; \
             spheres 1/1.1: cd {cd:.4} p2s {p2s:.4}"
        ),
    )
}

// Toy fixture schedule.
const TOY_SEED: u64 = 7;
const TOY_EPOCHS: usize = 50;
const TOY_BATCH: usize = 1;
const TOY_K: usize = 1024;
const TOY_N: usize = 1024;
const TOY_COARSE_LR: &[(usize, f64)] = &[(0, 1e-3), (30, 3e-4), (42, 1e-4)];
const TOY_DISP_LR: &[(usize, f64)] = &[(0, 1e-3)];
const TOY_EVAL_SAMPLES: usize = 100_000;
const TOY_CHAMFER_SAMPLES: usize = 20_000;

fn toy_train_config(lr_schedule: &[(usize, f64)]) -> TrainConfig {
    TrainConfig {
        lr_schedule: lr_schedule.to_vec(),
        batch_size: TOY_BATCH,
        k_points: TOY_K,
        n_vertices: TOY_N,
        epochs: TOY_EPOCHS,
        seed: TOY_SEED,
        ..TrainConfig::default()
    }
}

fn train_toy_coarse(train: &[CoarseExample], joints: usize) -> CoarseModel {
    let mut model = CoarseModel::new(ModelDims { joints, ..ModelDims::default() }, TOY_SEED).unwrap();
    let log = train_coarse(&mut model, train, &toy_train_config(TOY_COARSE_LR), |_| {}).unwrap();
    let (first, last) = (log.first().unwrap(), log.last().unwrap());
    println!(
        "    coarse J={joints}: loss {:.1} -> {:.1} over {} epochs, {:.0} s",
        first.mean_loss, last.mean_loss, last.epoch, last.wall_seconds
    );
    model
}

/// Smooth reconstructions of the test items, paired with their IoU against
/// the smoothed ground truth. A failed extraction scores 0.
fn test_reconstructions(ds: &Dataset, model: &CoarseModel, params: &ExtractionParams) -> Vec<(Option<TriMesh>, f64)> {
    ds.indices(Split::Test)
        .into_iter()
        .map(|i| {
            let item = ds.load(i).unwrap();
            match reconstruct_smooth(model, &observation(&item).unwrap(), params) {
                Ok(mesh) => {
                    let iou = volumetric_iou(&mesh, &item.smooth, TOY_EVAL_SAMPLES, i as u64).unwrap();
                    (Some(mesh), iou)
                }
                Err(_) => (None, 0.0),
            }
        })
        .collect()
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

fn end_to_end() -> Outcome {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let config = DatasetConfig { n_train: 64, n_test: 16, seed: TOY_SEED, ..DatasetConfig::default() };
    let ds = build_dataset(&config, dir.path().join("toy")).unwrap();
    let train = coarse_examples(&ds, Split::Train).unwrap();
    let params = ExtractionParams::default();

    let with_joints = train_toy_coarse(&train, JOINT_COUNT);
    let without_joints = train_toy_coarse(&train, 0);
    let recon_j = test_reconstructions(&ds, &with_joints, &params);
    let recon_0 = test_reconstructions(&ds, &without_joints, &params);
    let iou_j = mean(recon_j.iter().map(|r| r.1));
    let iou_0 = mean(recon_0.iter().map(|r| r.1));
    println!("    per-item IoU with joints: {:?}", recon_j.iter().map(|r| (r.1 * 1000.0).round() / 1000.0).collect::<Vec<_>>());

    let disp_train = disp_examples(&ds, Split::Train, DispSource::Reconstruction(&with_joints, &params)).unwrap();
    let mut disp = DispModel::new(ModelDims::default(), TOY_SEED).unwrap();
    let log = train_disp(&mut disp, &disp_train, &toy_train_config(TOY_DISP_LR), |_| {}).unwrap();
    println!("    displacement: loss {:.4} -> {:.4}", log.first().unwrap().mean_loss, log.last().unwrap().mean_loss);
    let test_idx = ds.indices(Split::Test);
    let chamfers: Vec<Option<(f64, f64)>> = test_idx
        .par_iter()
        .zip(&recon_j)
        .map(|(&i, (smooth, _))| {
            let smooth = smooth.as_ref()?;
            let item = ds.load(i).unwrap();
            let detailed = displace_mesh(&disp, &observation(&item).unwrap(), smooth).unwrap();
            let before = chamfer(smooth, &item.mesh, TOY_CHAMFER_SAMPLES, i as u64).unwrap();
            let after = chamfer(&detailed, &item.mesh, TOY_CHAMFER_SAMPLES, i as u64).unwrap();
            Some((before, after))
        })
        .collect();
    let improved = chamfers.iter().filter(|c| matches!(c, Some((b, a)) if a < b)).count();
    let frac = improved as f64 / test_idx.len() as f64;
    let (cd_before, cd_after) = (
        mean(chamfers.iter().flatten().map(|c| c.0)),
        mean(chamfers.iter().flatten().map(|c| c.1)),
    );
    let mins = t.elapsed().as_secs_f64() / 60.0;
    let (ok_iou, ok_gain, ok_disp) = (iou_j >= 0.70, iou_j - iou_0 >= 0.03, frac >= 0.8);
    check(
        ok_iou && ok_gain && ok_disp,
        format!(
            "(i) test IoU {iou_j:.3} (>=0.70: {ok_iou}); (ii) no-joints IoU {iou_0:.3}, gain {:.3} (>=0.03: {ok_gain}); \
             (iii) displacement lowers Chamfer on {improved}/{} items ({frac:.2} >=0.80: {ok_disp}), mean {cd_before:.4} -> {cd_after:.4}; \
             {mins:.1} min",
            iou_j - iou_0,
            test_idx.len()
        ),
    )
}

const BIN: &str = env!("CARGO_BIN_EXE_recon");

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(BIN).env_clear().args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((path.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "n_train = 4\nn_test = 1\nsamples_per_item = 2048\nbody_cell = 0.03\nfeature = 32\nlatent = 4\nblocks = 2\n\
         hidden = 32\nk = 512\nn = 256\nbatch_size = 1\nepochs = 30\ndisp_epochs = 2\nlr_schedule = 0:3e-3\n\
         disp_lr_schedule = 0:1e-3\nmise_initial_res = 16\nmise_final_res = 64\neval_samples = 5000\n",
    )
    .unwrap();
    let mut outcomes = Vec::new();
    for run in ["a", "b"] {
        let root = dir.path().join(run);
        let p = |name: &str| root.join(name).display().to_string();
        let c = cfg.display().to_string();
        let base = ["--config", c.as_str(), "--seed", "21"];
        let steps: Vec<Vec<String>> = vec![
            vec!["gen-data".into(), "--out".into(), p("data")],
            vec!["train-coarse".into(), "--data".into(), p("data"), "--out".into(), p("coarse.ckpt")],
            vec!["train-disp".into(), "--data".into(), p("data"), "--out".into(), p("disp.ckpt"), "--coarse".into(), p("coarse.ckpt")],
            vec![
                "reconstruct".into(),
                "--coarse".into(),
                p("coarse.ckpt"),
                "--disp".into(),
                p("disp.ckpt"),
                "--data".into(),
                p("data"),
                "--item".into(),
                "4".into(),
                "--out".into(),
                p("mesh"),
            ],
            vec![
                "evaluate".into(),
                "--pred".into(),
                p("mesh/detailed.obj"),
                "--gt".into(),
                format!("{}/{}/mesh.obj", p("data"), item_name(4)),
                "--out".into(),
                p("report.json"),
            ],
        ];
        for step in &steps {
            let args: Vec<&str> = base.iter().copied().chain(step.iter().map(String::as_str)).collect();
            run_cli(&args)?;
        }
        outcomes.push(tree_bytes(&root));
    }
    let names: Vec<&String> = outcomes[0].iter().map(|(n, _)| n).collect();
    let differing: Vec<&String> = outcomes[0].iter().zip(&outcomes[1]).filter(|(a, b)| a != b).map(|(a, _)| &a.0).collect();
    let has = |suffix: &str| names.iter().any(|n| n.ends_with(suffix));
    let complete = ["coarse.ckpt", "disp.ckpt", "smooth.obj", "detailed.obj", "report.json", "manifest.txt"].iter().all(|s| has(s));
    check(
        differing.is_empty() && outcomes[0].len() == outcomes[1].len() && complete,
        format!("{} files from gen-data, train-coarse, train-disp, reconstruct, evaluate; differing: {differing:?}", names.len()),
    )
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(&str, fn() -> Outcome); 6] = [
        ("geometry_oracles", geometry_oracles),
        ("gradient_suite", gradient_suite),
        ("closed_form_losses", closed_form_losses),
        ("metric_fixtures", metric_fixtures),
        ("determinism", determinism),
        ("end_to_end_trends", end_to_end),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let (status, detail) = match std::panic::catch_unwind(run) {
            Ok(Ok(d)) => ("PASS", d),
            Ok(Err(d)) => ("FAIL", d),
            Err(_) => ("FAIL", "panicked".to_string()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("{status} {name}: {detail} [{:.1?}]", Duration::from_secs_f64(t.elapsed().as_secs_f64()));
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
