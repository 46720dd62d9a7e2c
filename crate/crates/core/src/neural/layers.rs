//! Flat parameter storage and the dense building blocks the networks use.
//!
//! Every model keeps its weights in one `Vec<f64>`; layers only remember
//! offsets into it. Gradients share the same layout, which keeps the
//! optimizer, checkpoints and finite-difference checks trivial.
//!
//! Activations are row-major `[rows x features]` matrices.

use rand::Rng;

use crate::rng;

/// Row-major `c = a * b (+ c)`, where `a` is `m x k` and `b` is `k x n`,
/// each given with explicit row and column strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    c: &mut [f64],
    accumulate: bool,
) {
    if m == 0 || n == 0 {
        return;
    }
    let beta = if accumulate { 1.0 } else { 0.0 };
    if k == 0 {
        if !accumulate {
            c[..m * n].fill(0.0);
        }
        return;
    }
    assert!(a.len() > (m - 1) * rsa + (k - 1) * csa, "gemm: a too short");
    assert!(b.len() > (k - 1) * rsb + (n - 1) * csb, "gemm: b too short");
    assert!(c.len() >= m * n, "gemm: c too short");
    // SAFETY: the asserts above keep every strided access inside the slices.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// A named slice of the parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamEntry {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

/// Declaration-ordered list of parameter tensors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Layout {
    pub entries: Vec<ParamEntry>,
    len: usize,
}

impl Layout {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn push(&mut self, name: String, len: usize) -> usize {
        let offset = self.len;
        self.entries.push(ParamEntry { name, offset, len });
        self.len += len;
        offset
    }

    pub(crate) fn dense(&mut self, name: &str, inp: usize, out: usize) -> Dense {
        let w = self.push(format!("{name}.weight"), inp * out);
        let b = self.push(format!("{name}.bias"), out);
        Dense { w, b, inp, out }
    }

    pub fn entry(&self, name: &str) -> Option<&ParamEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// Affine map `y = x W^T + b` with `W` stored `[out x inp]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Dense {
    pub w: usize,
    pub b: usize,
    pub inp: usize,
    pub out: usize,
}

impl Dense {
    pub fn weight<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[self.w..self.w + self.inp * self.out]
    }

    pub fn bias<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[self.b..self.b + self.out]
    }

    /// `y` is overwritten with `rows x out` values.
    pub fn forward(&self, p: &[f64], x: &[f64], rows: usize, y: &mut Vec<f64>) {
        y.clear();
        y.resize(rows * self.out, 0.0);
        gemm(rows, self.inp, self.out, x, (self.inp, 1), self.weight(p), (1, self.inp), y, false);
        let b = self.bias(p);
        for row in y.chunks_exact_mut(self.out) {
            for (v, bb) in row.iter_mut().zip(b) {
                *v += bb;
            }
        }
    }

    /// Accumulates parameter gradients into `g` and, when asked, writes the
    /// input gradient into `dx` (overwriting it).
    pub fn backward(&self, p: &[f64], g: &mut [f64], x: &[f64], rows: usize, dy: &[f64], dx: Option<&mut Vec<f64>>) {
        let (inp, out) = (self.inp, self.out);
        gemm(out, rows, inp, dy, (1, out), x, (inp, 1), &mut g[self.w..self.w + inp * out], true);
        let gb = &mut g[self.b..self.b + out];
        for row in dy.chunks_exact(out) {
            for (acc, d) in gb.iter_mut().zip(row) {
                *acc += d;
            }
        }
        if let Some(dx) = dx {
            dx.clear();
            dx.resize(rows * inp, 0.0);
            gemm(rows, out, inp, dy, (out, 1), self.weight(p), (inp, 1), dx, false);
        }
    }

    /// Uniform in `±1/sqrt(inp)` for weights and biases.
    pub fn init_uniform(&self, p: &mut [f64], rng: &mut rng::Rng) {
        let bound = 1.0 / (self.inp as f64).sqrt();
        for v in &mut p[self.w..self.w + self.inp * self.out] {
            *v = rng.random_range(-bound..bound);
        }
        for v in &mut p[self.b..self.b + self.out] {
            *v = rng.random_range(-bound..bound);
        }
    }

    pub fn fill(&self, p: &mut [f64], weight: f64, bias: f64) {
        p[self.w..self.w + self.inp * self.out].fill(weight);
        p[self.b..self.b + self.out].fill(bias);
    }
}

pub(crate) fn relu_inplace(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Zeroes `d` wherever the pre-activation was not positive.
pub(crate) fn relu_backward(pre: &[f64], d: &mut [f64]) {
    for (g, &x) in d.iter_mut().zip(pre) {
        if x <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Rounds every parameter to the nearest `f32`.
pub fn round_to_f32(p: &mut [f64]) {
    for v in p {
        *v = *v as f32 as f64;
    }
}
