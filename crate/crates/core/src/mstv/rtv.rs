//! Relative total variation smoothing.
//!
//! Minimizes `Σ (S − G)² + λ Σ (Dx/(Lx + εL) + Dy/(Ly + εL))`, where `Dx` is
//! the Gaussian-windowed sum of `|∂x S|` and `Lx` the magnitude of the
//! Gaussian-windowed sum of `∂x S`. Each outer iteration freezes the
//! nonlinear weights at the current estimate,
//!
//! ```text
//! ax = (Gσ ∗ 1/(|Gσ ∗ ∂x S| + εL)) · 1/(|∂x S| + εS)
//! ```
//!
//! and solves the sparse SPD system `(I + λ Lw) S = G`, with `Lw` the
//! 5-point Laplacian weighted by `ax`/`ay`, by Jacobi-preconditioned
//! conjugate gradients. `Lw` has zero row sums, so the image mean is kept.
//!
//! Input is min-max scaled to `[0, 1]` before smoothing and mapped back
//! afterwards, so one `λ` fits bands of any dynamic range.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Image;
use crate::linalg::dot;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RtvParams {
    pub lambda: f64,
    pub sigma: f64,
    #[serde(default = "RtvParams::default_iterations")]
    pub iterations: usize,
    #[serde(default = "RtvParams::default_epsilon_s")]
    pub epsilon_s: f64,
    #[serde(default = "RtvParams::default_epsilon_l")]
    pub epsilon_l: f64,
}

impl RtvParams {
    pub fn new(lambda: f64, sigma: f64) -> Self {
        Self {
            lambda,
            sigma,
            iterations: Self::default_iterations(),
            epsilon_s: Self::default_epsilon_s(),
            epsilon_l: Self::default_epsilon_l(),
        }
    }

    fn default_iterations() -> usize {
        4
    }

    fn default_epsilon_s() -> f64 {
        1e-2
    }

    fn default_epsilon_l() -> f64 {
        1e-3
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda >= 0.0
            && self.lambda.is_finite()
            && self.sigma > 0.0
            && self.sigma.is_finite()
            && self.iterations >= 1
            && self.epsilon_s > 0.0
            && self.epsilon_l > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid RTV parameters {self:?}")))
        }
    }
}

const CG_TOLERANCE: f64 = 1e-10;

pub fn rtv_smooth(image: &Image<f64>, params: &RtvParams) -> Result<Image<f64>> {
    params.validate()?;
    if let Some(index) = image.data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    if params.lambda == 0.0 {
        return Ok(image.clone());
    }
    let (lo, hi) = image
        .data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    if range == 0.0 {
        return Ok(image.clone());
    }
    let (h, w) = (image.height, image.width);
    let guide: Vec<f64> = image.data.iter().map(|v| (v - lo) / range).collect();
    let mut s = guide.clone();
    for _ in 0..params.iterations {
        let (ax, ay) = texture_weights(&s, h, w, params);
        s = solve_weighted_system(&guide, &s, &ax, &ay, h, w, params.lambda)?;
    }
    Ok(Image {
        height: h,
        width: w,
        data: s.into_iter().map(|v| v * range + lo).collect(),
    })
}

/// Forward differences with a zero last column / row.
fn gradients(s: &[f64], h: usize, w: usize) -> (Vec<f64>, Vec<f64>) {
    let mut dx = vec![0.0; h * w];
    let mut dy = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let p = r * w + c;
            if c + 1 < w {
                dx[p] = s[p + 1] - s[p];
            }
            if r + 1 < h {
                dy[p] = s[p + w] - s[p];
            }
        }
    }
    (dx, dy)
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur with replicated borders.
pub(crate) fn gaussian_blur(data: &[f64], h: usize, w: usize, sigma: f64) -> Vec<f64> {
    let k = gaussian_kernel(sigma);
    let radius = (k.len() / 2) as isize;
    let mut tmp = vec![0.0; h * w];
    for r in 0..h {
        let row = &data[r * w..(r + 1) * w];
        for c in 0..w {
            let mut acc = 0.0;
            for (t, &kv) in k.iter().enumerate() {
                let cc = (c as isize + t as isize - radius).clamp(0, w as isize - 1) as usize;
                acc += kv * row[cc];
            }
            tmp[r * w + c] = acc;
        }
    }
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (t, &kv) in k.iter().enumerate() {
                let rr = (r as isize + t as isize - radius).clamp(0, h as isize - 1) as usize;
                acc += kv * tmp[rr * w + c];
            }
            out[r * w + c] = acc;
        }
    }
    out
}

fn texture_weights(s: &[f64], h: usize, w: usize, p: &RtvParams) -> (Vec<f64>, Vec<f64>) {
    let (dx, dy) = gradients(s, h, w);
    let axis_weight = |d: &[f64]| -> Vec<f64> {
        let windowed = gaussian_blur(d, h, w, p.sigma);
        let inv: Vec<f64> = windowed.iter().map(|l| 1.0 / (l.abs() + p.epsilon_l)).collect();
        let u = gaussian_blur(&inv, h, w, p.sigma);
        u.iter()
            .zip(d)
            .map(|(u, g)| u / (g.abs() + p.epsilon_s))
            .collect()
    };
    let mut ax = axis_weight(&dx);
    let mut ay = axis_weight(&dy);
    for r in 0..h {
        ax[r * w + w - 1] = 0.0;
    }
    ay[(h - 1) * w..].iter_mut().for_each(|v| *v = 0.0);
    (ax, ay)
}

/// `(I + λ Lw) x`.
fn apply(x: &[f64], ax: &[f64], ay: &[f64], h: usize, w: usize, lambda: f64, out: &mut [f64]) {
    for r in 0..h {
        for c in 0..w {
            let p = r * w + c;
            let xp = x[p];
            let mut acc = 0.0;
            if c + 1 < w {
                acc += ax[p] * (xp - x[p + 1]);
            }
            if c > 0 {
                acc += ax[p - 1] * (xp - x[p - 1]);
            }
            if r + 1 < h {
                acc += ay[p] * (xp - x[p + w]);
            }
            if r > 0 {
                acc += ay[p - w] * (xp - x[p - w]);
            }
            out[p] = xp + lambda * acc;
        }
    }
}

fn solve_weighted_system(
    rhs: &[f64],
    start: &[f64],
    ax: &[f64],
    ay: &[f64],
    h: usize,
    w: usize,
    lambda: f64,
) -> Result<Vec<f64>> {
    let n = h * w;
    let diag: Vec<f64> = (0..n)
        .map(|p| {
            let (r, c) = (p / w, p % w);
            let mut s = ax[p] + ay[p];
            if c > 0 {
                s += ax[p - 1];
            }
            if r > 0 {
                s += ay[p - w];
            }
            1.0 + lambda * s
        })
        .collect();
    let mut x = start.to_vec();
    let mut ax_buf = vec![0.0; n];
    apply(&x, ax, ay, h, w, lambda, &mut ax_buf);
    let mut r: Vec<f64> = rhs.iter().zip(&ax_buf).map(|(b, a)| b - a).collect();
    let rhs_norm = dot(rhs, rhs).sqrt().max(f64::MIN_POSITIVE);
    let mut res = dot(&r, &r).sqrt() / rhs_norm;
    if res <= CG_TOLERANCE {
        return Ok(x);
    }
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let max_iter = (10 * n).max(1000);
    for _ in 0..max_iter {
        apply(&p, ax, ay, h, w, lambda, &mut ax_buf);
        let alpha = rz / dot(&p, &ax_buf);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ax_buf[i];
        }
        res = dot(&r, &r).sqrt() / rhs_norm;
        if res <= CG_TOLERANCE {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverDiverged { residual: res })
}
