//! Pointwise residual decoder modulated by a conditioning vector.
//!
//! Each normalization site standardizes a point's features, then applies a
//! per-feature scale and shift predicted from the conditioning vector. No
//! statistics are taken over the point batch, so a point's output never
//! depends on the other points it is evaluated with.

use super::layers::{relu_backward, relu_inplace, Dense, Layout};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Block {
    norm0: Dense,
    fc0: Dense,
    norm1: Dense,
    fc1: Dense,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct CondDecoder {
    /// Pointwise input MLP, ReLU between layers.
    input: Vec<Dense>,
    blocks: Vec<Block>,
    norm_out: Dense,
    head: Dense,
    hidden: usize,
}

/// Activations kept for the backward pass.
pub(crate) struct DecoderCache {
    rows: usize,
    input_acts: Vec<Vec<f64>>,
    input_pre: Vec<Vec<f64>>,
    /// Scale/shift per normalization site, in forward order.
    mods: Vec<Vec<f64>>,
    /// Residual stream entering each block, then the final stream.
    stream: Vec<Vec<f64>>,
    /// (h entering the site, modulated pre-activation) per site.
    sites: Vec<(Vec<f64>, Vec<f64>)>,
}

const NORM_EPS: f64 = 1e-5;

/// Per-row mean and inverse standard deviation over the features.
fn row_stats(row: &[f64]) -> (f64, f64) {
    let n = row.len() as f64;
    let mean = row.iter().sum::<f64>() / n;
    let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, 1.0 / (var + NORM_EPS).sqrt())
}

/// Normalizes each point's features, then applies the conditional scale and shift.
fn modulate(h: &[f64], m: &[f64], hidden: usize, out: &mut Vec<f64>) {
    let (scale, shift) = m.split_at(hidden);
    out.clear();
    out.extend_from_slice(h);
    for row in out.chunks_exact_mut(hidden) {
        let (mean, inv) = row_stats(row);
        for ((v, s), b) in row.iter_mut().zip(scale).zip(shift) {
            *v = (*v - mean) * inv * s + b;
        }
    }
}

impl CondDecoder {
    pub fn declare(layout: &mut Layout, name: &str, input_dims: &[usize], cond: usize, hidden: usize, blocks: usize) -> Self {
        let mut input = Vec::new();
        for (i, &d) in input_dims.iter().enumerate() {
            input.push(layout.dense(&format!("{name}.input{i}"), d, hidden));
        }
        let blocks = (0..blocks)
            .map(|b| Block {
                norm0: layout.dense(&format!("{name}.block{b}.norm0"), cond, 2 * hidden),
                fc0: layout.dense(&format!("{name}.block{b}.fc0"), hidden, hidden),
                norm1: layout.dense(&format!("{name}.block{b}.norm1"), cond, 2 * hidden),
                fc1: layout.dense(&format!("{name}.block{b}.fc1"), hidden, hidden),
            })
            .collect();
        let norm_out = layout.dense(&format!("{name}.norm_out"), cond, 2 * hidden);
        let head = layout.dense(&format!("{name}.head"), hidden, 1);
        Self { input, blocks, norm_out, head, hidden }
    }

    fn norms(&self) -> impl Iterator<Item = Dense> + '_ {
        self.blocks.iter().flat_map(|b| [b.norm0, b.norm1]).chain(std::iter::once(self.norm_out))
    }

    /// Normalization maps start as the identity (scale 1, shift 0, no
    /// dependence on the condition) and every block starts as the identity.
    pub fn init(&self, p: &mut [f64], rng: &mut rng::Rng) {
        for d in &self.input {
            d.init_uniform(p, rng);
        }
        for b in &self.blocks {
            b.fc0.init_uniform(p, rng);
            b.fc1.fill(p, 0.0, 0.0);
        }
        for n in self.norms() {
            n.fill(p, 0.0, 0.0);
            p[n.b..n.b + self.hidden].fill(1.0);
        }
        self.head.init_uniform(p, rng);
    }

    pub fn head(&self) -> Dense {
        self.head
    }

    /// Raw outputs for `rows` points given as `[rows x input_dim]`.
    pub fn forward(&self, p: &[f64], x: &[f64], rows: usize, cond: &[f64], mut cache: Option<&mut DecoderCache>) -> Vec<f64> {
        let hidden = self.hidden;
        let mut mods = Vec::with_capacity(2 * self.blocks.len() + 1);
        for n in self.norms() {
            let mut m = Vec::new();
            n.forward(p, cond, 1, &mut m);
            mods.push(m);
        }
        let mut h = x.to_vec();
        for (i, d) in self.input.iter().enumerate() {
            let mut y = Vec::new();
            d.forward(p, &h, rows, &mut y);
            let last = i + 1 == self.input.len();
            if let Some(c) = cache.as_deref_mut() {
                c.input_acts.push(std::mem::take(&mut h));
                if !last {
                    c.input_pre.push(y.clone());
                }
            }
            if !last {
                relu_inplace(&mut y);
            }
            h = y;
        }
        let mut a = Vec::new();
        let mut t = Vec::new();
        let mut u = Vec::new();
        for (bi, b) in self.blocks.iter().enumerate() {
            modulate(&h, &mods[2 * bi], hidden, &mut a);
            if let Some(c) = cache.as_deref_mut() {
                c.stream.push(h.clone());
                c.sites.push((Vec::new(), a.clone()));
            }
            relu_inplace(&mut a);
            b.fc0.forward(p, &a, rows, &mut t);
            let t_in = t.clone();
            modulate(&t, &mods[2 * bi + 1], hidden, &mut a);
            if let Some(c) = cache.as_deref_mut() {
                c.sites.push((t_in, a.clone()));
            }
            relu_inplace(&mut a);
            b.fc1.forward(p, &a, rows, &mut u);
            for (hv, uv) in h.iter_mut().zip(&u) {
                *hv += uv;
            }
        }
        modulate(&h, &mods[2 * self.blocks.len()], hidden, &mut a);
        if let Some(c) = cache.as_deref_mut() {
            c.stream.push(h.clone());
            c.sites.push((Vec::new(), a.clone()));
        }
        relu_inplace(&mut a);
        let mut out = Vec::new();
        self.head.forward(p, &a, rows, &mut out);
        if let Some(c) = cache {
            c.rows = rows;
            c.mods = mods;
        }
        out
    }

    pub fn new_cache() -> DecoderCache {
        DecoderCache { rows: 0, input_acts: Vec::new(), input_pre: Vec::new(), mods: Vec::new(), stream: Vec::new(), sites: Vec::new() }
    }

    /// Accumulates parameter gradients and returns the gradient with respect
    /// to the conditioning vector.
    pub fn backward(&self, p: &[f64], g: &mut [f64], cache: &DecoderCache, cond: &[f64], dout: &[f64]) -> Vec<f64> {
        let hidden = self.hidden;
        let rows = cache.rows;
        let nb = self.blocks.len();
        let mut dmods: Vec<Vec<f64>> = cache.mods.iter().map(|m| vec![0.0; m.len()]).collect();

        // Backward through one modulation site: `dpre` is the gradient at the
        // modulated pre-activation, `h` the site input. Returns dh.
        let site_back = |dpre: &mut Vec<f64>, pre: &[f64], h: &[f64], m: &[f64], dm: &mut [f64]| -> Vec<f64> {
            relu_backward(pre, dpre);
            let (scale, _) = m.split_at(hidden);
            let (dscale, dshift) = dm.split_at_mut(hidden);
            let mut dh = vec![0.0; dpre.len()];
            let mut norm = vec![0.0; hidden];
            let mut dnorm = vec![0.0; hidden];
            for ((drow, hrow), dhrow) in dpre.chunks_exact(hidden).zip(h.chunks_exact(hidden)).zip(dh.chunks_exact_mut(hidden)) {
                let (mean, inv) = row_stats(hrow);
                let (mut sum_d, mut sum_dn) = (0.0, 0.0);
                for k in 0..hidden {
                    norm[k] = (hrow[k] - mean) * inv;
                    dscale[k] += drow[k] * norm[k];
                    dshift[k] += drow[k];
                    dnorm[k] = drow[k] * scale[k];
                    sum_d += dnorm[k];
                    sum_dn += dnorm[k] * norm[k];
                }
                let n = hidden as f64;
                for k in 0..hidden {
                    dhrow[k] = inv * (dnorm[k] - (sum_d + norm[k] * sum_dn) / n);
                }
            }
            dh
        };

        // Head and final site.
        let (_, pre_out) = &cache.sites[2 * nb];
        let mut a = pre_out.clone();
        relu_inplace(&mut a);
        let mut da = Vec::new();
        self.head.backward(p, g, &a, rows, dout, Some(&mut da));
        let mut dh = site_back(&mut da, pre_out, &cache.stream[nb], &cache.mods[2 * nb], &mut dmods[2 * nb]);

        for (bi, b) in self.blocks.iter().enumerate().rev() {
            let (t_in, pre1) = &cache.sites[2 * bi + 1];
            let (_, pre0) = &cache.sites[2 * bi];
            // u = fc1(relu(pre1)); dh flows to u unchanged.
            let mut a1 = pre1.clone();
            relu_inplace(&mut a1);
            let mut da1 = Vec::new();
            b.fc1.backward(p, g, &a1, rows, &dh, Some(&mut da1));
            let dt = site_back(&mut da1, pre1, t_in, &cache.mods[2 * bi + 1], &mut dmods[2 * bi + 1]);
            let mut a0 = pre0.clone();
            relu_inplace(&mut a0);
            let mut da0 = Vec::new();
            b.fc0.backward(p, g, &a0, rows, &dt, Some(&mut da0));
            let dh_site = site_back(&mut da0, pre0, &cache.stream[bi], &cache.mods[2 * bi], &mut dmods[2 * bi]);
            for (x, y) in dh.iter_mut().zip(&dh_site) {
                *x += y;
            }
        }

        for (i, d) in self.input.iter().enumerate().rev() {
            if i + 1 < self.input.len() {
                relu_backward(&cache.input_pre[i], &mut dh);
            }
            if i == 0 {
                d.backward(p, g, &cache.input_acts[i], rows, &dh, None);
            } else {
                let mut dx = Vec::new();
                d.backward(p, g, &cache.input_acts[i], rows, &dh, Some(&mut dx));
                dh = dx;
            }
        }

        let mut dcond = vec![0.0; cond.len()];
        for (n, dm) in self.norms().zip(&dmods) {
            let mut dc = Vec::new();
            n.backward(p, g, cond, 1, dm, Some(&mut dc));
            for (x, y) in dcond.iter_mut().zip(&dc) {
                *x += y;
            }
        }
        dcond
    }
}
