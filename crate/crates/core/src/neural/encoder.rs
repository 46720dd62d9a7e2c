//! Strided convolution encoder over the silhouette and joint heatmaps.

use super::layers::{relu_backward, relu_inplace, Dense, Layout};
use crate::error::{Error, Result};
use crate::rng;
use crate::sampling::{Heatmaps, JOINT_COUNT};

/// Conditioning input: a binary silhouette, one heatmap per joint and the
/// joint pixel coordinates they were rendered from.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub height: usize,
    pub width: usize,
    /// Row-major `height x width`, values in {0, 1}.
    pub silhouette: Vec<f64>,
    pub heatmaps: Heatmaps,
    pub joints2d: Option<[[f64; 2]; JOINT_COUNT]>,
}

impl Observation {
    pub fn new(silhouette: Vec<f64>, heatmaps: Heatmaps, joints2d: Option<[[f64; 2]; JOINT_COUNT]>) -> Result<Self> {
        let (height, width) = (heatmaps.height, heatmaps.width);
        if silhouette.len() != height * width || heatmaps.data.len() != JOINT_COUNT * height * width {
            return Err(Error::DimensionMismatch(format!(
                "silhouette has {} pixels, heatmaps are {}x{} with {} values",
                silhouette.len(),
                height,
                width,
                heatmaps.data.len()
            )));
        }
        Ok(Self { height, width, silhouette, heatmaps, joints2d })
    }
}

pub(crate) const CONV_CHANNELS: [usize; 4] = [16, 32, 64, 64];

/// 3x3 convolution, stride 2, zero padding 1, on `[pixels x channels]`
/// activations. The weight is a dense `[cout x 9*cin]` map over im2col rows.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Conv {
    dense: Dense,
    cin: usize,
    hin: usize,
    win: usize,
}

impl Conv {
    fn hout(&self) -> usize {
        self.hin / 2
    }

    fn wout(&self) -> usize {
        self.win / 2
    }

    fn im2col(&self, x: &[f64], col: &mut Vec<f64>) {
        let (cin, ho, wo) = (self.cin, self.hout(), self.wout());
        let row_len = 9 * cin;
        col.clear();
        col.resize(ho * wo * row_len, 0.0);
        for oy in 0..ho {
            for ox in 0..wo {
                let row = &mut col[(oy * wo + ox) * row_len..][..row_len];
                for ky in 0..3 {
                    let iy = (2 * oy + ky) as isize - 1;
                    if iy < 0 || iy >= self.hin as isize {
                        continue;
                    }
                    for kx in 0..3 {
                        let ix = (2 * ox + kx) as isize - 1;
                        if ix < 0 || ix >= self.win as isize {
                            continue;
                        }
                        let src = (iy as usize * self.win + ix as usize) * cin;
                        row[(ky * 3 + kx) * cin..][..cin].copy_from_slice(&x[src..src + cin]);
                    }
                }
            }
        }
    }

    fn col2im(&self, dcol: &[f64], dx: &mut Vec<f64>) {
        let (cin, ho, wo) = (self.cin, self.hout(), self.wout());
        let row_len = 9 * cin;
        dx.clear();
        dx.resize(self.hin * self.win * cin, 0.0);
        for oy in 0..ho {
            for ox in 0..wo {
                let row = &dcol[(oy * wo + ox) * row_len..][..row_len];
                for ky in 0..3 {
                    let iy = (2 * oy + ky) as isize - 1;
                    if iy < 0 || iy >= self.hin as isize {
                        continue;
                    }
                    for kx in 0..3 {
                        let ix = (2 * ox + kx) as isize - 1;
                        if ix < 0 || ix >= self.win as isize {
                            continue;
                        }
                        let dst = (iy as usize * self.win + ix as usize) * cin;
                        for (d, s) in dx[dst..dst + cin].iter_mut().zip(&row[(ky * 3 + kx) * cin..][..cin]) {
                            *d += s;
                        }
                    }
                }
            }
        }
    }
}

/// Four stride-2 convolutions with ReLU, then a dense map from the
/// flattened activations (and normalized joint coordinates) to the feature.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Encoder {
    convs: Vec<Conv>,
    head: Dense,
    height: usize,
    width: usize,
    joints: usize,
}

pub(crate) struct EncoderCache {
    cols: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    head_in: Vec<f64>,
}

impl Encoder {
    /// `joints` is 0 (silhouette only) or the joint count.
    pub fn declare(layout: &mut Layout, name: &str, height: usize, width: usize, joints: usize, feature: usize) -> Self {
        let mut convs = Vec::new();
        let (mut h, mut w, mut cin) = (height, width, 1 + joints);
        for (i, &cout) in CONV_CHANNELS.iter().enumerate() {
            let dense = layout.dense(&format!("{name}.conv{i}"), 9 * cin, cout);
            convs.push(Conv { dense, cin, hin: h, win: w });
            h /= 2;
            w /= 2;
            cin = cout;
        }
        let head = layout.dense(&format!("{name}.fc"), h * w * cin + 2 * joints, feature);
        Self { convs, head, height, width, joints }
    }

    pub fn init(&self, p: &mut [f64], rng: &mut rng::Rng) {
        for c in &self.convs {
            c.dense.init_uniform(p, rng);
        }
        self.head.init_uniform(p, rng);
    }

    pub fn head(&self) -> Dense {
        self.head
    }

    /// Interleaves the rasters into `[pixels x channels]`.
    fn input(&self, obs: &Observation) -> Result<Vec<f64>> {
        if obs.height != self.height || obs.width != self.width {
            return Err(Error::DimensionMismatch(format!(
                "observation is {}x{}, model expects {}x{}",
                obs.height, obs.width, self.height, self.width
            )));
        }
        let (n, c) = (self.height * self.width, 1 + self.joints);
        let mut x = vec![0.0; n * c];
        for i in 0..n {
            x[i * c] = obs.silhouette[i];
            for j in 0..self.joints {
                x[i * c + 1 + j] = obs.heatmaps.data[j * n + i];
            }
        }
        Ok(x)
    }

    fn joint_coords(&self, obs: &Observation) -> Result<Vec<f64>> {
        if self.joints == 0 {
            return Ok(Vec::new());
        }
        let joints = obs
            .joints2d
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("model conditions on joints but the observation has none".into()))?;
        Ok(joints
            .iter()
            .flat_map(|&[u, v]| [2.0 * u / self.width as f64 - 1.0, 2.0 * v / self.height as f64 - 1.0])
            .collect())
    }

    pub fn forward(&self, p: &[f64], obs: &Observation) -> Result<(Vec<f64>, EncoderCache)> {
        let mut x = self.input(obs)?;
        let mut cache = EncoderCache { cols: Vec::new(), pre: Vec::new(), head_in: Vec::new() };
        for conv in &self.convs {
            let mut col = Vec::new();
            conv.im2col(&x, &mut col);
            let mut y = Vec::new();
            conv.dense.forward(p, &col, conv.hout() * conv.wout(), &mut y);
            cache.cols.push(col);
            cache.pre.push(y.clone());
            relu_inplace(&mut y);
            x = y;
        }
        x.extend(self.joint_coords(obs)?);
        let mut phi = Vec::new();
        self.head.forward(p, &x, 1, &mut phi);
        cache.head_in = x;
        Ok((phi, cache))
    }

    pub fn backward(&self, p: &[f64], g: &mut [f64], cache: &EncoderCache, dphi: &[f64]) {
        let mut dx = Vec::new();
        self.head.backward(p, g, &cache.head_in, 1, dphi, Some(&mut dx));
        dx.truncate(dx.len() - 2 * self.joints);
        let mut dy = dx;
        for (i, conv) in self.convs.iter().enumerate().rev() {
            relu_backward(&cache.pre[i], &mut dy);
            let rows = conv.hout() * conv.wout();
            if i == 0 {
                conv.dense.backward(p, g, &cache.cols[i], rows, &dy, None);
            } else {
                let mut dcol = Vec::new();
                conv.dense.backward(p, g, &cache.cols[i], rows, &dy, Some(&mut dcol));
                conv.col2im(&dcol, &mut dy);
            }
        }
    }
}
