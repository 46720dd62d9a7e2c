use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use super::body::generate_body_with_cell;
use super::camera::{project_joints, Camera};
use super::normalize::normalize_pose;
use super::poses::{sample_body, PoseFamily};
use crate::error::{Error, Result};
use crate::meshcore::obj::{read_obj, write_obj};
use crate::meshcore::{laplacian_smooth, Aabb, MeshQuery, SmoothingParams, TriMesh, Vec3};
use crate::rng;
use crate::sampling::io::{read_joints, read_raster_stack, read_samples, write_joints, write_raster_stack, write_samples};
use crate::sampling::{make_training_points, render_heatmaps, Heatmaps, JointSet, OccupancySample, StrategyCounts};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(Error::Format(format!("unknown split '{s}'"))),
        }
    }
}

/// Parameters of a generated dataset. Lengths in the body generator are
/// meters; everything stored on disk is in the canonical frame, where the
/// hips are one unit apart.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetConfig {
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub seed: u64,
    /// Canonical volume every body must fit in; also the reconstruction box.
    pub bbox: Aabb,
    pub image_size: usize,
    pub heatmap_sigma_px: f64,
    /// Number of camera directions (1 = front only, up to 4 at 90 degrees).
    pub views: usize,
    /// Stored occupancy samples per item.
    pub samples_per_item: usize,
    /// Shares of uniform and near-surface samples; joint balls get the rest.
    pub uniform_fraction: f64,
    pub surface_fraction: f64,
    /// Near-surface noise as a fraction of the body's bounding diagonal.
    pub sigma_fraction: f64,
    /// Joint ball radius in hand lengths.
    pub radius_factor: f64,
    pub clothing_amplitude: f64,
    /// Marching cubes cell for body meshes, meters.
    pub cell: f64,
    pub smoothing: SmoothingParams,
    pub families: Vec<PoseFamily>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n_train: 64,
            n_val: 0,
            n_test: 16,
            seed: 0,
            bbox: canonical_bbox(),
            image_size: 64,
            heatmap_sigma_px: 2.0,
            views: 1,
            samples_per_item: 8192,
            uniform_fraction: 0.25,
            surface_fraction: 0.5,
            sigma_fraction: 0.025,
            radius_factor: 1.5,
            clothing_amplitude: 0.012,
            cell: super::body::BODY_CELL,
            smoothing: SmoothingParams::default(),
            families: PoseFamily::ALL.to_vec(),
        }
    }
}

/// Default canonical volume, in hip widths.
pub fn canonical_bbox() -> Aabb {
    Aabb::new(Vec3::new(-4.4, -5.8, -3.8), Vec3::new(4.4, 4.8, 4.4)).expect("ordered corners")
}

impl DatasetConfig {
    pub fn n_items(&self) -> usize {
        self.n_train + self.n_val + self.n_test
    }

    pub fn split_of(&self, index: usize) -> Split {
        if index < self.n_train {
            Split::Train
        } else if index < self.n_train + self.n_val {
            Split::Val
        } else {
            Split::Test
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.image_size == 0 {
            return bad("image_size must be positive");
        }
        if !(self.heatmap_sigma_px > 0.0) {
            return bad("heatmap_sigma_px must be positive");
        }
        if !(1..=4).contains(&self.views) {
            return bad("views must be between 1 and 4");
        }
        if self.samples_per_item == 0 {
            return bad("samples_per_item must be positive");
        }
        let (u, sf) = (self.uniform_fraction, self.surface_fraction);
        if !(u >= 0.0 && sf >= 0.0 && u + sf <= 1.0) {
            return bad("uniform_fraction and surface_fraction must be >= 0 with a sum <= 1");
        }
        if !(self.sigma_fraction > 0.0) || !(self.radius_factor > 0.0) || !(self.cell > 0.0) {
            return bad("sigma_fraction, radius_factor and cell must be positive");
        }
        if !(self.clothing_amplitude >= 0.0) {
            return bad("clothing_amplitude must be >= 0");
        }
        if self.families.is_empty() {
            return bad("at least one pose family is required");
        }
        if !(self.smoothing.lambda > 0.0 && self.smoothing.lambda <= 1.0) {
            return bad("smoothing lambda must be in (0, 1]");
        }
        Ok(())
    }
}

/// One generated item, in memory.
#[derive(Clone, Debug)]
pub struct DatasetItem {
    /// Detailed body in the canonical frame.
    pub mesh: TriMesh,
    /// Laplacian-smoothed body, the target of the occupancy network.
    pub smooth: TriMesh,
    pub joints: JointSet,
    pub silhouette: Vec<f64>,
    pub heatmaps: Heatmaps,
    /// Labels are occupancy of `smooth`.
    pub samples: Vec<OccupancySample>,
}

const MAX_ATTEMPTS: u64 = 200;

/// Generates item `index`, redrawing the body until it is free of
/// self-intersections and fits both the canonical box and the image.
pub fn generate_item(config: &DatasetConfig, index: usize) -> Result<DatasetItem> {
    let item_seed = rng::derive_seed(config.seed, index as u64);
    let mut last = None;
    for attempt in 0..MAX_ATTEMPTS {
        let mut r = rng::substream(item_seed, attempt);
        let family = config.families[r.random_range(0..config.families.len())];
        let spec = sample_body(family, config.clothing_amplitude, &mut r);
        let yaw = std::f64::consts::FRAC_PI_2 * r.random_range(0..config.views) as f64;
        match build_item(config, &spec, yaw, r.random()) {
            Ok(item) => return Ok(item),
            Err(e @ (Error::SelfIntersection(_) | Error::OutOfFrame(_))) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

fn build_item(config: &DatasetConfig, spec: &super::body::BodySpec, yaw: f64, sample_seed: u64) -> Result<DatasetItem> {
    let (body, joints) = generate_body_with_cell(spec, config.cell)?;
    let (mesh, joints, frame) = normalize_pose(&body, &joints)?;
    if let Some(v) = mesh.vertices().iter().find(|v| !config.bbox.contains(v)) {
        return Err(Error::OutOfFrame(format!("vertex {v:?} leaves the canonical box")));
    }
    let camera = Camera::framing(&config.bbox, yaw, config.image_size, config.image_size);
    let detailed = MeshQuery::new(mesh);
    let (joints, silhouette) = project_joints(&joints, &detailed, &camera)?;
    let heatmaps = render_heatmaps(&joints.joints2d, config.image_size, config.image_size, config.heatmap_sigma_px);
    let mesh = detailed.into_mesh();

    let smooth = laplacian_smooth(&mesh, config.smoothing);
    let sigma = config.sigma_fraction * smooth.bounds().expect("nonempty").diagonal();
    let radius = config.radius_factor * spec.lengths.hand * frame.scale;
    let query = MeshQuery::new(smooth);
    let samples = make_training_points(
        &query,
        &joints,
        &config.bbox,
        StrategyCounts::from_fractions(config.samples_per_item, config.uniform_fraction, config.surface_fraction),
        sigma,
        radius,
        sample_seed,
    )?;
    Ok(DatasetItem { mesh, smooth: query.into_mesh(), joints, silhouette, heatmaps, samples })
}

pub fn item_name(index: usize) -> String {
    format!("item_{index:05}")
}

pub fn write_item(dir: &Path, item: &DatasetItem) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_obj(dir.join("mesh.obj"), &item.mesh)?;
    write_obj(dir.join("smooth.obj"), &item.smooth)?;
    write_joints(dir.join("joints.txt"), &item.joints)?;
    write_raster_stack(dir.join("observation.pgm"), &item.silhouette, &item.heatmaps)?;
    write_samples(dir.join("samples.bin"), &item.samples)?;
    Ok(())
}

pub fn read_item(dir: &Path) -> Result<DatasetItem> {
    let (silhouette, heatmaps) = read_raster_stack(dir.join("observation.pgm"))?;
    Ok(DatasetItem {
        mesh: read_obj(dir.join("mesh.obj"))?,
        smooth: read_obj(dir.join("smooth.obj"))?,
        joints: read_joints(dir.join("joints.txt"))?,
        silhouette,
        heatmaps,
        samples: read_samples(dir.join("samples.bin"))?,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub name: String,
    pub seed: u64,
    pub split: Split,
}

/// A dataset directory: manifest plus one subdirectory per item.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub root: PathBuf,
    pub bbox: Aabb,
    pub image_size: usize,
    pub items: Vec<ManifestEntry>,
}

pub const MANIFEST: &str = "manifest.txt";

impl Dataset {
    pub fn manifest_text(&self) -> String {
        let (a, b) = (self.bbox.min, self.bbox.max);
        let mut s = String::from("# item seed split\n");
        s.push_str(&format!("bbox {:?} {:?} {:?} {:?} {:?} {:?}\n", a.x, a.y, a.z, b.x, b.y, b.z));
        s.push_str(&format!("image_size {}\n", self.image_size));
        for e in &self.items {
            s.push_str(&format!("{} {} {}\n", e.name, e.seed, e.split));
        }
        s
    }

    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        let text = fs::read_to_string(root.join(MANIFEST))?;
        let mut bbox = None;
        let mut image_size = None;
        let mut items = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: String| Error::Format(format!("manifest line {}: {m}", n + 1));
            let f: Vec<&str> = line.split_whitespace().collect();
            match f[0] {
                "bbox" => {
                    let v: Vec<f64> = f[1..]
                        .iter()
                        .map(|x| x.parse::<f64>().map_err(|e| err(e.to_string())))
                        .collect::<Result<_>>()?;
                    if v.len() != 6 {
                        return Err(err("bbox needs 6 numbers".into()));
                    }
                    bbox = Some(Aabb::new(Vec3::new(v[0], v[1], v[2]), Vec3::new(v[3], v[4], v[5]))?);
                }
                "image_size" => {
                    image_size = Some(f.get(1).and_then(|x| x.parse().ok()).ok_or_else(|| err("bad image_size".into()))?);
                }
                name => {
                    if f.len() != 3 {
                        return Err(err("expected: item seed split".into()));
                    }
                    items.push(ManifestEntry {
                        name: name.to_string(),
                        seed: f[1].parse().map_err(|e: std::num::ParseIntError| err(e.to_string()))?,
                        split: f[2].parse()?,
                    });
                }
            }
        }
        Ok(Self {
            root,
            bbox: bbox.ok_or_else(|| Error::Format("manifest has no bbox".into()))?,
            image_size: image_size.ok_or_else(|| Error::Format("manifest has no image_size".into()))?,
            items,
        })
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.items.len()).filter(|&i| self.items[i].split == split).collect()
    }

    pub fn item_dir(&self, index: usize) -> PathBuf {
        self.root.join(&self.items[index].name)
    }

    pub fn load(&self, index: usize) -> Result<DatasetItem> {
        read_item(&self.item_dir(index)).map_err(|e| Error::Item { index, source: Box::new(e) })
    }
}

/// Generates and writes every item plus the manifest. Items are produced in
/// parallel; the output bytes depend only on the configuration.
pub fn build_dataset(config: &DatasetConfig, out_dir: impl AsRef<Path>) -> Result<Dataset> {
    config.validate()?;
    let root = out_dir.as_ref().to_path_buf();
    fs::create_dir_all(&root)?;
    let results: Vec<Result<()>> = (0..config.n_items())
        .into_par_iter()
        .map(|i| {
            let item = generate_item(config, i)?;
            write_item(&root.join(item_name(i)), &item)
        })
        .collect();
    for (index, r) in results.into_iter().enumerate() {
        r.map_err(|e| Error::Item { index, source: Box::new(e) })?;
    }
    let dataset = Dataset {
        root: root.clone(),
        bbox: config.bbox,
        image_size: config.image_size,
        items: (0..config.n_items())
            .map(|i| ManifestEntry {
                name: item_name(i),
                seed: rng::derive_seed(config.seed, i as u64),
                split: config.split_of(i),
            })
            .collect(),
    };
    fs::write(root.join(MANIFEST), dataset.manifest_text())?;
    Ok(dataset)
}
