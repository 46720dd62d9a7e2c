//! Coarse occupancy and displacement networks, and their checkpoints.

use std::io::{Read, Write};

use super::decoder::{CondDecoder, DecoderCache};
use super::encoder::{EncoderCache, Encoder, Observation};
use super::layers::{round_to_f32, Layout};
use super::loss::sigmoid;
use super::posterior::{PosteriorCache, PosteriorEncoder};
use crate::error::{Error, Result};
use crate::meshcore::Vec3;
use crate::rng;
use crate::sampling::{OccupancySample, JOINT_COUNT};

/// Architecture sizes. The displacement network uses `2 * blocks` blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelDims {
    /// Global observation feature size.
    pub feature: usize,
    pub latent: usize,
    pub blocks: usize,
    pub hidden: usize,
    pub height: usize,
    pub width: usize,
    /// 0 for a silhouette-only encoder, otherwise the joint count.
    pub joints: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        Self { feature: 128, latent: 16, blocks: 5, hidden: 128, height: 64, width: 64, joints: JOINT_COUNT }
    }
}

impl ModelDims {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.feature == 0 || self.latent == 0 || self.blocks == 0 || self.hidden == 0 {
            return bad("feature, latent, blocks and hidden must be positive");
        }
        if self.height == 0 || self.width == 0 || !self.height.is_multiple_of(16) || !self.width.is_multiple_of(16) {
            return bad("raster height and width must be positive multiples of 16");
        }
        if self.joints != 0 && self.joints != JOINT_COUNT {
            return Err(Error::InvalidArgument(format!("joints must be 0 or {JOINT_COUNT}, got {}", self.joints)));
        }
        Ok(())
    }

    fn to_u32s(self) -> [u32; 7] {
        [self.feature, self.latent, self.blocks, self.hidden, self.height, self.width, self.joints].map(|v| v as u32)
    }

    fn from_u32s(v: [u32; 7]) -> Self {
        let v = v.map(|x| x as usize);
        Self { feature: v[0], latent: v[1], blocks: v[2], hidden: v[3], height: v[4], width: v[5], joints: v[6] }
    }
}

/// Conditional occupancy network with its latent posterior encoder.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseModel {
    dims: ModelDims,
    layout: Layout,
    pub(crate) encoder: Encoder,
    pub(crate) decoder: CondDecoder,
    pub(crate) posterior: PosteriorEncoder,
    params: Vec<f64>,
}

/// Per-vertex displacement regressor.
#[derive(Clone, Debug, PartialEq)]
pub struct DispModel {
    dims: ModelDims,
    layout: Layout,
    pub(crate) encoder: Encoder,
    pub(crate) decoder: CondDecoder,
    params: Vec<f64>,
}

fn points_rows(points: &[Vec3]) -> Vec<f64> {
    points.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::DimensionMismatch(format!("{what} has length {got}, expected {want}")));
    }
    Ok(())
}

impl CoarseModel {
    fn build(dims: ModelDims) -> Result<Self> {
        dims.validate()?;
        let mut layout = Layout::default();
        let encoder = Encoder::declare(&mut layout, "encoder", dims.height, dims.width, dims.joints, dims.feature);
        let decoder = CondDecoder::declare(&mut layout, "decoder", &[3], dims.feature + dims.latent, dims.hidden, dims.blocks);
        let posterior = PosteriorEncoder::declare(&mut layout, "posterior", dims.hidden, dims.latent);
        let params = vec![0.0; layout.len()];
        Ok(Self { dims, layout, encoder, decoder, posterior, params })
    }

    /// Seeded initialization, rounded to `f32`.
    pub fn new(dims: ModelDims, seed: u64) -> Result<Self> {
        let mut m = Self::build(dims)?;
        let mut r = rng::substream(seed, 0xC0A5);
        m.encoder.init(&mut m.params, &mut r);
        m.decoder.init(&mut m.params, &mut r);
        m.posterior.init(&mut m.params, &mut r);
        round_to_f32(&mut m.params);
        Ok(m)
    }

    pub fn dims(&self) -> &ModelDims {
        &self.dims
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Zeroes the final dense layer of the observation encoder.
    pub fn zero_encoder_head(&mut self) {
        self.encoder.head().fill(&mut self.params, 0.0, 0.0);
    }

    /// Zeroes the occupancy output layer.
    pub fn zero_output_head(&mut self) {
        self.decoder.head().fill(&mut self.params, 0.0, 0.0);
    }

    /// Global observation feature.
    pub fn encode(&self, obs: &Observation) -> Result<Vec<f64>> {
        Ok(self.encoder.forward(&self.params, obs)?.0)
    }

    pub(crate) fn encode_cached(&self, obs: &Observation) -> Result<(Vec<f64>, EncoderCache)> {
        self.encoder.forward(&self.params, obs)
    }

    fn condition(&self, feature: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        check_len("feature", feature.len(), self.dims.feature)?;
        check_len("latent", z.len(), self.dims.latent)?;
        Ok([feature, z].concat())
    }

    /// Occupancy logits, one per point.
    pub fn logits(&self, feature: &[f64], z: &[f64], points: &[Vec3]) -> Result<Vec<f64>> {
        let cond = self.condition(feature, z)?;
        Ok(self.decoder.forward(&self.params, &points_rows(points), points.len(), &cond, None))
    }

    /// Occupancy probabilities in [0, 1], one per point.
    pub fn occupancy(&self, feature: &[f64], z: &[f64], points: &[Vec3]) -> Result<Vec<f64>> {
        Ok(self.logits(feature, z, points)?.into_iter().map(sigmoid).collect())
    }

    pub(crate) fn logits_cached(&self, cond: &[f64], points: &[Vec3], cache: &mut DecoderCache) -> Vec<f64> {
        self.decoder.forward(&self.params, &points_rows(points), points.len(), cond, Some(cache))
    }

    /// Posterior mean and standard deviation of the latent code given
    /// labeled samples. Invariant to sample order.
    pub fn posterior(&self, samples: &[OccupancySample]) -> Result<(Vec<f64>, Vec<f64>)> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("posterior needs at least one sample".into()));
        }
        let (mean, log_sigma, _) = self.posterior.forward(&self.params, samples);
        Ok((mean, log_sigma.into_iter().map(f64::exp).collect()))
    }

    pub(crate) fn posterior_cached(&self, samples: &[OccupancySample]) -> (Vec<f64>, Vec<f64>, PosteriorCache) {
        self.posterior.forward(&self.params, samples)
    }

    pub fn save(&self, w: impl Write) -> Result<()> {
        write_checkpoint(w, Kind::Coarse, &self.dims, &self.params)
    }

    pub fn load(r: impl Read) -> Result<Self> {
        let (dims, params) = read_checkpoint(r, Kind::Coarse)?;
        let mut m = Self::build(dims)?;
        check_len("checkpoint parameters", params.len(), m.params.len()).map_err(|e| Error::Checkpoint(e.to_string()))?;
        m.params = params;
        Ok(m)
    }
}

impl DispModel {
    fn build(dims: ModelDims) -> Result<Self> {
        dims.validate()?;
        let mut layout = Layout::default();
        let encoder = Encoder::declare(&mut layout, "encoder", dims.height, dims.width, dims.joints, dims.feature);
        let decoder = CondDecoder::declare(&mut layout, "decoder", &[6, dims.hidden], dims.feature, dims.hidden, 2 * dims.blocks);
        let params = vec![0.0; layout.len()];
        Ok(Self { dims, layout, encoder, decoder, params })
    }

    pub fn new(dims: ModelDims, seed: u64) -> Result<Self> {
        let mut m = Self::build(dims)?;
        let mut r = rng::substream(seed, 0xD15);
        m.encoder.init(&mut m.params, &mut r);
        m.decoder.init(&mut m.params, &mut r);
        round_to_f32(&mut m.params);
        Ok(m)
    }

    pub fn dims(&self) -> &ModelDims {
        &self.dims
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn zero_output_head(&mut self) {
        self.decoder.head().fill(&mut self.params, 0.0, 0.0);
    }

    pub fn encode(&self, obs: &Observation) -> Result<Vec<f64>> {
        Ok(self.encoder.forward(&self.params, obs)?.0)
    }

    pub(crate) fn encode_cached(&self, obs: &Observation) -> Result<(Vec<f64>, EncoderCache)> {
        self.encoder.forward(&self.params, obs)
    }

    /// Signed displacement along the normal for each vertex.
    pub fn displacement(&self, feature: &[f64], points: &[Vec3], normals: &[Vec3]) -> Result<Vec<f64>> {
        check_len("feature", feature.len(), self.dims.feature)?;
        check_len("normals", normals.len(), points.len())?;
        Ok(self.decoder.forward(&self.params, &vertex_rows(points, normals), points.len(), feature, None))
    }

    pub(crate) fn displacement_cached(&self, feature: &[f64], points: &[Vec3], normals: &[Vec3], cache: &mut DecoderCache) -> Vec<f64> {
        self.decoder.forward(&self.params, &vertex_rows(points, normals), points.len(), feature, Some(cache))
    }

    pub fn save(&self, w: impl Write) -> Result<()> {
        write_checkpoint(w, Kind::Disp, &self.dims, &self.params)
    }

    pub fn load(r: impl Read) -> Result<Self> {
        let (dims, params) = read_checkpoint(r, Kind::Disp)?;
        let mut m = Self::build(dims)?;
        check_len("checkpoint parameters", params.len(), m.params.len()).map_err(|e| Error::Checkpoint(e.to_string()))?;
        m.params = params;
        Ok(m)
    }
}

pub(crate) fn vertex_rows(points: &[Vec3], normals: &[Vec3]) -> Vec<f64> {
    points.iter().zip(normals).flat_map(|(p, n)| [p.x, p.y, p.z, n.x, n.y, n.z]).collect()
}

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"RECONNET";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Coarse = 1,
    Disp = 2,
}

/// Layout: magic, version (u32), kind (u32), the seven dims (u32 each:
/// feature, latent, blocks, hidden, height, width, joints), parameter count
/// (u64), then the parameters as `f32`. All little-endian.
fn write_checkpoint(mut w: impl Write, kind: Kind, dims: &ModelDims, params: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(48 + 4 * params.len());
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(kind as u32).to_le_bytes());
    for v in dims.to_u32s() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for &p in params {
        buf.extend_from_slice(&(p as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_checkpoint(mut r: impl Read, kind: Kind) -> Result<(ModelDims, Vec<f64>)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let bad = |m: &str| Error::Checkpoint(m.to_string());
    if bytes.len() < 8 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(bad("missing magic header"));
    }
    let u32_at = |o: usize| -> Result<u32> {
        bytes.get(o..o + 4).map(|b| u32::from_le_bytes(b.try_into().unwrap())).ok_or_else(|| bad("truncated header"))
    };
    let version = u32_at(8)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::CheckpointVersion { found: version, expected: CHECKPOINT_VERSION });
    }
    let found = u32_at(12)?;
    if found != kind as u32 {
        return Err(Error::Checkpoint(format!("checkpoint holds model kind {found}, expected {}", kind as u32)));
    }
    let mut d = [0u32; 7];
    for (i, v) in d.iter_mut().enumerate() {
        *v = u32_at(16 + 4 * i)?;
    }
    let dims = ModelDims::from_u32s(d);
    dims.validate().map_err(|e| Error::Checkpoint(e.to_string()))?;
    let count = bytes.get(44..52).map(|b| u64::from_le_bytes(b.try_into().unwrap())).ok_or_else(|| bad("truncated header"))? as usize;
    let body = &bytes[52..];
    if body.len() != 4 * count {
        return Err(Error::Checkpoint(format!("expected {count} parameters, found {} bytes", body.len())));
    }
    let params: Vec<f64> = body.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64).collect();
    if params.iter().any(|v| !v.is_finite()) {
        return Err(bad("non-finite parameter"));
    }
    Ok((dims, params))
}
