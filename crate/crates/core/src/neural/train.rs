//! Batch losses with analytic gradients, and the training loops.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::adam::Adam;
use super::decoder::CondDecoder;
use super::encoder::Observation;
use super::layers::round_to_f32;
use super::loss::{kl_gaussian, wbce_logit};
use super::model::{CoarseModel, DispModel};
use crate::error::{Error, Result};
use crate::meshcore::Vec3;
use crate::rng;
use crate::sampling::OccupancySample;

/// One conditioning observation with its labeled query points.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseExample {
    pub obs: Observation,
    pub samples: Vec<OccupancySample>,
}

/// One observation with smooth-mesh vertices, their normals and target
/// displacements along those normals.
#[derive(Clone, Debug, PartialEq)]
pub struct DispExample {
    pub obs: Observation,
    pub points: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub targets: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct CoarseBatchItem<'a> {
    pub obs: &'a Observation,
    pub samples: &'a [OccupancySample],
}

#[derive(Clone, Copy, Debug)]
pub struct DispBatchItem<'a> {
    pub obs: &'a Observation,
    pub points: &'a [Vec3],
    pub normals: &'a [Vec3],
    pub targets: &'a [f64],
}

/// Weights of the coarse objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoarseLossWeights {
    pub pos_weight: f64,
    pub kl_weight: f64,
}

/// Standard normal draws for the latent of batch item `index`.
pub fn latent_noise(seed: u64, index: usize, latent: usize) -> Vec<f64> {
    let mut r = rng::substream(seed, index as u64);
    (0..latent).map(|_| StandardNormal.sample(&mut r)).collect()
}

fn coarse_item(
    model: &CoarseModel,
    item: &CoarseBatchItem,
    w: CoarseLossWeights,
    eps: &[f64],
    want_grad: bool,
) -> Result<(f64, Option<Vec<f64>>)> {
    if item.samples.is_empty() {
        return Err(Error::InvalidArgument("batch item has no samples".into()));
    }
    let p = model.params();
    let (phi, enc_cache) = model.encode_cached(item.obs)?;
    let (mean, log_sigma, post_cache) = model.posterior_cached(item.samples);
    let sigma: Vec<f64> = log_sigma.iter().map(|v| v.exp()).collect();
    let z: Vec<f64> = mean.iter().zip(&sigma).zip(eps).map(|((m, s), e)| m + s * e).collect();
    let cond = [phi.as_slice(), &z].concat();
    let points: Vec<Vec3> = item.samples.iter().map(|s| s.point).collect();
    let mut dec_cache = CondDecoder::new_cache();
    let logits = model.logits_cached(&cond, &points, &mut dec_cache);
    let mut loss = w.kl_weight * kl_gaussian(&mean, &sigma);
    let mut dlogits = Vec::with_capacity(logits.len());
    for (s, sample) in logits.iter().zip(item.samples) {
        let (l, d) = wbce_logit(*s, sample.inside, w.pos_weight);
        loss += l;
        dlogits.push(d);
    }
    if !want_grad {
        return Ok((loss, None));
    }
    let mut g = vec![0.0; p.len()];
    let dcond = model.decoder.backward(p, &mut g, &dec_cache, &cond, &dlogits);
    let (dphi, dz) = dcond.split_at(phi.len());
    let dmean: Vec<f64> = dz.iter().zip(&mean).map(|(d, m)| d + w.kl_weight * m).collect();
    let dlog_sigma: Vec<f64> =
        dz.iter().zip(&sigma).zip(eps).map(|((d, s), e)| d * e * s + w.kl_weight * (s * s - 1.0)).collect();
    model.posterior.backward(p, &mut g, &post_cache, &dmean, &dlog_sigma);
    model.encoder.backward(p, &mut g, &enc_cache, dphi);
    Ok((loss, Some(g)))
}

/// Mean over batch items and fixed-order sum of per-item gradients.
fn reduce(parts: Vec<(f64, Option<Vec<f64>>)>, n_params: usize) -> (f64, Vec<f64>) {
    let n = parts.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; n_params];
    for (l, g) in parts {
        loss += l;
        if let Some(g) = g {
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
    }
    for v in &mut grad {
        *v /= n;
    }
    (loss / n, grad)
}

/// Coarse objective over a batch: the mean over items of the summed
/// weighted cross-entropy plus the weighted KL term. Latents are drawn by
/// reparameterization with noise from `noise_seed`.
pub fn coarse_loss(model: &CoarseModel, batch: &[CoarseBatchItem], w: CoarseLossWeights, noise_seed: u64) -> Result<f64> {
    Ok(coarse_loss_impl(model, batch, w, noise_seed, false)?.0)
}

/// [`coarse_loss`] and its gradient with respect to every parameter.
pub fn coarse_loss_grad(
    model: &CoarseModel,
    batch: &[CoarseBatchItem],
    w: CoarseLossWeights,
    noise_seed: u64,
) -> Result<(f64, Vec<f64>)> {
    coarse_loss_impl(model, batch, w, noise_seed, true)
}

fn coarse_loss_impl(
    model: &CoarseModel,
    batch: &[CoarseBatchItem],
    w: CoarseLossWeights,
    noise_seed: u64,
    want_grad: bool,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let latent = model.dims().latent;
    let parts = batch
        .par_iter()
        .enumerate()
        .map(|(i, item)| coarse_item(model, item, w, &latent_noise(noise_seed, i, latent), want_grad))
        .collect::<Result<Vec<_>>>()?;
    Ok(reduce(parts, if want_grad { model.params().len() } else { 0 }))
}

fn disp_item(model: &DispModel, item: &DispBatchItem, want_grad: bool) -> Result<(f64, Option<Vec<f64>>)> {
    let n = item.points.len();
    if n == 0 || item.normals.len() != n || item.targets.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} points, {} normals, {} targets",
            n,
            item.normals.len(),
            item.targets.len()
        )));
    }
    let p = model.params();
    let (phi, enc_cache) = model.encode_cached(item.obs)?;
    let mut cache = CondDecoder::new_cache();
    let pred = model.displacement_cached(&phi, item.points, item.normals, &mut cache);
    let mut loss = 0.0;
    let mut dpred = Vec::with_capacity(n);
    for (h, d) in pred.iter().zip(item.targets) {
        let r = h - d;
        loss += r.abs();
        dpred.push(if r > 0.0 {
            1.0
        } else if r < 0.0 {
            -1.0
        } else {
            0.0
        });
    }
    if !want_grad {
        return Ok((loss, None));
    }
    let mut g = vec![0.0; p.len()];
    let dphi = model.decoder.backward(p, &mut g, &cache, &phi, &dpred);
    model.encoder.backward(p, &mut g, &enc_cache, &dphi);
    Ok((loss, Some(g)))
}

/// Displacement objective: mean over items of the summed per-vertex
/// distance `|h(v) - d|`.
pub fn disp_loss(model: &DispModel, batch: &[DispBatchItem]) -> Result<f64> {
    Ok(disp_loss_impl(model, batch, false)?.0)
}

pub fn disp_loss_grad(model: &DispModel, batch: &[DispBatchItem]) -> Result<(f64, Vec<f64>)> {
    disp_loss_impl(model, batch, true)
}

fn disp_loss_impl(model: &DispModel, batch: &[DispBatchItem], want_grad: bool) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let parts = batch.par_iter().map(|item| disp_item(model, item, want_grad)).collect::<Result<Vec<_>>>()?;
    Ok(reduce(parts, if want_grad { model.params().len() } else { 0 }))
}

/// Optimization settings shared by both training loops.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    /// `(first epoch, learning rate)` pairs with increasing epochs starting
    /// at 0.
    pub lr_schedule: Vec<(usize, f64)>,
    pub batch_size: usize,
    /// Occupancy samples drawn per item per step.
    pub k_points: usize,
    /// Vertices drawn per item per step for the displacement loss.
    pub n_vertices: usize,
    pub pos_weight: f64,
    pub kl_weight: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr_schedule: vec![(0, 1e-4)],
            batch_size: 14,
            k_points: 2048,
            n_vertices: 10_000,
            pos_weight: 25.0,
            kl_weight: 1.0,
            epochs: 645,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.batch_size == 0 || self.k_points == 0 || self.n_vertices == 0 {
            return bad("batch_size, k_points and n_vertices must be positive".into());
        }
        if !(self.pos_weight > 0.0 && self.pos_weight.is_finite()) {
            return bad(format!("pos_weight must be positive, got {}", self.pos_weight));
        }
        if !(self.kl_weight >= 0.0 && self.kl_weight.is_finite()) {
            return bad(format!("kl_weight must be nonnegative, got {}", self.kl_weight));
        }
        match self.lr_schedule.first() {
            Some((0, _)) => {}
            _ => return bad("lr_schedule must start at epoch 0".into()),
        }
        for w in self.lr_schedule.windows(2) {
            if w[1].0 <= w[0].0 {
                return bad("lr_schedule epochs must increase".into());
            }
        }
        if self.lr_schedule.iter().any(|&(_, lr)| !(lr >= 0.0 && lr.is_finite())) {
            return bad("learning rates must be finite and nonnegative".into());
        }
        Ok(())
    }

    /// Learning rate in effect at 0-based `epoch`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.lr_schedule.iter().rev().find(|(e, _)| *e <= epoch).map_or(0.0, |&(_, lr)| lr)
    }

    pub fn loss_weights(&self) -> CoarseLossWeights {
        CoarseLossWeights { pos_weight: self.pos_weight, kl_weight: self.kl_weight }
    }
}

/// One row of the loss curve. `epoch` counts from 1; `wall_seconds` is the
/// time since training started.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub mean_loss: f64,
    pub wall_seconds: f64,
}

/// Shuffled batches of item indices for one epoch.
fn epoch_batches(n: usize, batch: usize, seed: u64, epoch: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::substream(seed, 0xE0C0 ^ ((epoch as u64) << 20)));
    order.chunks(batch).map(|c| c.to_vec()).collect()
}

/// `k` distinct indices out of `n` (all of them, in order, when `k >= n`).
fn subset(n: usize, k: usize, seed: u64) -> Vec<usize> {
    if k >= n {
        return (0..n).collect();
    }
    let mut idx = rand::seq::index::sample(&mut rng::seeded(seed), n, k).into_vec();
    idx.sort_unstable();
    idx
}

fn item_seed(seed: u64, epoch: usize, item: usize) -> u64 {
    rng::derive_seed(seed, ((epoch as u64) << 32) | item as u64)
}

fn step_seed(seed: u64, epoch: usize, step: usize) -> u64 {
    rng::derive_seed(seed ^ 0x5EED, ((epoch as u64) << 32) | step as u64)
}

fn check_finite(loss: f64, grad: &[f64], epoch: usize, step: usize) -> Result<()> {
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("loss is {loss} at epoch {} step {step}", epoch + 1)));
    }
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("gradient of parameter {i} at epoch {} step {step}", epoch + 1)));
    }
    Ok(())
}

/// Trains the coarse model in place. Parameters are rounded to `f32` after
/// every step so checkpoints reproduce the trained model exactly.
pub fn train_coarse(
    model: &mut CoarseModel,
    data: &[CoarseExample],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLoss),
) -> Result<Vec<EpochLoss>> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("no training items".into()));
    }
    if let Some(i) = data.iter().position(|d| d.samples.is_empty()) {
        return Err(Error::InvalidArgument(format!("training item {i} has no samples")));
    }
    let start = Instant::now();
    let mut opt = Adam::new(model.params().len());
    let mut curve = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let lr = config.lr_at(epoch);
        let mut total = 0.0;
        let batches = epoch_batches(data.len(), config.batch_size, config.seed, epoch);
        for (step, idx) in batches.iter().enumerate() {
            let picked: Vec<Vec<OccupancySample>> = idx
                .iter()
                .map(|&i| {
                    let s = &data[i].samples;
                    subset(s.len(), config.k_points, item_seed(config.seed, epoch, i)).into_iter().map(|j| s[j]).collect()
                })
                .collect();
            let batch: Vec<CoarseBatchItem> =
                idx.iter().zip(&picked).map(|(&i, s)| CoarseBatchItem { obs: &data[i].obs, samples: s }).collect();
            let (loss, grad) = coarse_loss_grad(model, &batch, config.loss_weights(), step_seed(config.seed, epoch, step))?;
            check_finite(loss, &grad, epoch, step)?;
            opt.step(model.params_mut(), &grad, lr);
            round_to_f32(model.params_mut());
            total += loss;
        }
        let row = EpochLoss { epoch: epoch + 1, mean_loss: total / batches.len() as f64, wall_seconds: start.elapsed().as_secs_f64() };
        on_epoch(&row);
        curve.push(row);
    }
    Ok(curve)
}

/// Trains the displacement model in place; see [`train_coarse`].
pub fn train_disp(
    model: &mut DispModel,
    data: &[DispExample],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLoss),
) -> Result<Vec<EpochLoss>> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("no training items".into()));
    }
    for (i, d) in data.iter().enumerate() {
        if d.points.is_empty() || d.normals.len() != d.points.len() || d.targets.len() != d.points.len() {
            return Err(Error::DimensionMismatch(format!("training item {i} has mismatched vertex arrays")));
        }
    }
    let start = Instant::now();
    let mut opt = Adam::new(model.params().len());
    let mut curve = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let lr = config.lr_at(epoch);
        let mut total = 0.0;
        let batches = epoch_batches(data.len(), config.batch_size, config.seed, epoch);
        for (step, idx) in batches.iter().enumerate() {
            let picked: Vec<(Vec<Vec3>, Vec<Vec3>, Vec<f64>)> = idx
                .iter()
                .map(|&i| {
                    let d = &data[i];
                    let sel = subset(d.points.len(), config.n_vertices, item_seed(config.seed, epoch, i));
                    (
                        sel.iter().map(|&j| d.points[j]).collect(),
                        sel.iter().map(|&j| d.normals[j]).collect(),
                        sel.iter().map(|&j| d.targets[j]).collect(),
                    )
                })
                .collect();
            let batch: Vec<DispBatchItem> = idx
                .iter()
                .zip(&picked)
                .map(|(&i, (p, n, t))| DispBatchItem { obs: &data[i].obs, points: p, normals: n, targets: t })
                .collect();
            let (loss, grad) = disp_loss_grad(model, &batch)?;
            check_finite(loss, &grad, epoch, step)?;
            opt.step(model.params_mut(), &grad, lr);
            round_to_f32(model.params_mut());
            total += loss;
        }
        let row = EpochLoss { epoch: epoch + 1, mean_loss: total / batches.len() as f64, wall_seconds: start.elapsed().as_secs_f64() };
        on_epoch(&row);
        curve.push(row);
    }
    Ok(curve)
}
