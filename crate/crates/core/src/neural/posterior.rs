//! Point-set encoder for the latent posterior: a shared MLP on every
//! (point, label) pair, max-pooled, then linear heads for the mean and the
//! log standard deviation.

use super::layers::{relu_backward, relu_inplace, Dense, Layout};
use crate::rng;
use crate::sampling::OccupancySample;

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct PosteriorEncoder {
    fc0: Dense,
    fc1: Dense,
    mean: Dense,
    log_sigma: Dense,
}

pub(crate) struct PosteriorCache {
    rows: usize,
    x: Vec<f64>,
    pre0: Vec<f64>,
    a0: Vec<f64>,
    pooled: Vec<f64>,
    argmax: Vec<usize>,
}

/// Inside maps to +1, outside to -1.
pub(crate) fn sample_rows(samples: &[OccupancySample]) -> Vec<f64> {
    samples
        .iter()
        .flat_map(|s| [s.point.x, s.point.y, s.point.z, if s.inside { 1.0 } else { -1.0 }])
        .collect()
}

impl PosteriorEncoder {
    pub fn declare(layout: &mut Layout, name: &str, hidden: usize, latent: usize) -> Self {
        Self {
            fc0: layout.dense(&format!("{name}.fc0"), 4, hidden),
            fc1: layout.dense(&format!("{name}.fc1"), hidden, hidden),
            mean: layout.dense(&format!("{name}.mean"), hidden, latent),
            log_sigma: layout.dense(&format!("{name}.log_sigma"), hidden, latent),
        }
    }

    /// Heads start at zero, so the initial posterior is the prior.
    pub fn init(&self, p: &mut [f64], rng: &mut rng::Rng) {
        self.fc0.init_uniform(p, rng);
        self.fc1.init_uniform(p, rng);
        self.mean.fill(p, 0.0, 0.0);
        self.log_sigma.fill(p, 0.0, 0.0);
    }

    /// Returns (mean, log sigma).
    pub fn forward(&self, p: &[f64], samples: &[OccupancySample]) -> (Vec<f64>, Vec<f64>, PosteriorCache) {
        let rows = samples.len();
        let x = sample_rows(samples);
        let mut pre0 = Vec::new();
        self.fc0.forward(p, &x, rows, &mut pre0);
        let mut a0 = pre0.clone();
        relu_inplace(&mut a0);
        let mut pre1 = Vec::new();
        self.fc1.forward(p, &a0, rows, &mut pre1);
        let hidden = self.fc1.out;
        // Max of ReLU outputs equals ReLU of the max pre-activation.
        let mut pooled = vec![f64::NEG_INFINITY; hidden];
        let mut argmax = vec![0; hidden];
        for (r, row) in pre1.chunks_exact(hidden).enumerate() {
            for k in 0..hidden {
                if row[k] > pooled[k] {
                    pooled[k] = row[k];
                    argmax[k] = r;
                }
            }
        }
        relu_inplace(&mut pooled);
        let (mut mean, mut log_sigma) = (Vec::new(), Vec::new());
        self.mean.forward(p, &pooled, 1, &mut mean);
        self.log_sigma.forward(p, &pooled, 1, &mut log_sigma);
        (mean, log_sigma, PosteriorCache { rows, x, pre0, a0, pooled, argmax })
    }

    pub fn backward(&self, p: &[f64], g: &mut [f64], cache: &PosteriorCache, dmean: &[f64], dlog_sigma: &[f64]) {
        let hidden = self.fc1.out;
        let (mut dp1, mut dp2) = (Vec::new(), Vec::new());
        self.mean.backward(p, g, &cache.pooled, 1, dmean, Some(&mut dp1));
        self.log_sigma.backward(p, g, &cache.pooled, 1, dlog_sigma, Some(&mut dp2));
        let mut dpre1 = vec![0.0; cache.rows * hidden];
        for k in 0..hidden {
            if cache.pooled[k] > 0.0 {
                dpre1[cache.argmax[k] * hidden + k] = dp1[k] + dp2[k];
            }
        }
        let mut da0 = Vec::new();
        self.fc1.backward(p, g, &cache.a0, cache.rows, &dpre1, Some(&mut da0));
        relu_backward(&cache.pre0, &mut da0);
        self.fc0.backward(p, g, &cache.x, cache.rows, &da0, None);
    }
}
