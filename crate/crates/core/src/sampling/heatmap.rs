use super::JOINT_COUNT;

/// Per-joint Gaussian rasters, stored channel-major: value for joint `j` at
/// column `x`, row `y` is `data[(j * height + y) * width + x]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmaps {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Heatmaps {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self { height, width, data: vec![0.0; JOINT_COUNT * height * width] }
    }

    pub fn channel(&self, j: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[j * n..(j + 1) * n]
    }

    pub fn value(&self, j: usize, x: usize, y: usize) -> f64 {
        self.data[(j * self.height + y) * self.width + x]
    }
}

/// Renders one Gaussian bump per joint. `joints2d` are continuous pixel
/// coordinates where pixel `(x, y)` covers `[x, x+1) x [y, y+1)` and its
/// center is at `(x + 0.5, y + 0.5)`. A joint outside the frame leaves its
/// channel at zero.
pub fn render_heatmaps(joints2d: &[[f64; 2]; JOINT_COUNT], height: usize, width: usize, sigma_px: f64) -> Heatmaps {
    let mut maps = Heatmaps::zeros(height, width);
    let inv = 1.0 / (2.0 * sigma_px * sigma_px);
    for (j, &[u, v]) in joints2d.iter().enumerate() {
        if !(u >= 0.0 && v >= 0.0 && u < width as f64 && v < height as f64) {
            continue;
        }
        let base = j * height * width;
        for y in 0..height {
            let dy = y as f64 + 0.5 - v;
            for x in 0..width {
                let dx = x as f64 + 0.5 - u;
                maps.data[base + y * width + x] = (-(dx * dx + dy * dy) * inv).exp();
            }
        }
    }
    maps
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_joint(u: f64, v: f64) -> [[f64; 2]; JOINT_COUNT] {
        let mut j = [[-1.0, -1.0]; JOINT_COUNT];
        j[3] = [u, v];
        j
    }

    #[test]
    fn peak_and_one_sigma() {
        let m = render_heatmaps(&one_joint(20.5, 30.5), 64, 64, 2.0);
        assert_eq!(m.value(3, 20, 30), 1.0);
        assert!((m.value(3, 22, 30) - (-0.5f64).exp()).abs() < 1e-12);
        assert!(m.channel(0).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn channel_mass_is_gaussian_integral() {
        let sigma = 2.0;
        let m = render_heatmaps(&one_joint(31.3, 27.8), 64, 64, sigma);
        let sum: f64 = m.channel(3).iter().sum();
        let expected = 2.0 * std::f64::consts::PI * sigma * sigma;
        assert!((sum - expected).abs() / expected < 0.02, "{sum} vs {expected}");
    }

    #[test]
    fn integer_shift_moves_channel() {
        let a = render_heatmaps(&one_joint(20.25, 25.75), 64, 64, 2.0);
        let b = render_heatmaps(&one_joint(23.25, 21.75), 64, 64, 2.0);
        for y in 12..40 {
            for x in 10..40 {
                assert_eq!(a.value(3, x, y), b.value(3, x + 3, y - 4));
            }
        }
    }
}
