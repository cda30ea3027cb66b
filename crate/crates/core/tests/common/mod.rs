//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mlskelm::Image;

/// Explicit inverse by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse(a: &[f64], n: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| m[x * n + col].abs().total_cmp(&m[y * n + col].abs()))
            .unwrap();
        if pivot != col {
            for j in 0..n {
                m.swap(col * n + j, pivot * n + j);
                inv.swap(col * n + j, pivot * n + j);
            }
        }
        let p = m[col * n + col];
        for j in 0..n {
            m[col * n + j] /= p;
            inv[col * n + j] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r * n + col];
                if f != 0.0 {
                    for j in 0..n {
                        m[r * n + j] -= f * m[col * n + j];
                        inv[r * n + j] -= f * inv[col * n + j];
                    }
                }
            }
        }
    }
    inv
}

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d).exp()
}

/// Scores `k(q)ᵀ (Ω + I/C)⁻¹ Y` for every query, with `labels` in `1..=m`.
pub fn kelm_oracle_scores(
    train: &[Vec<f64>],
    labels: &[u16],
    m: usize,
    c: f64,
    gamma: f64,
    queries: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let n = train.len();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = rbf(&train[i], &train[j], gamma);
        }
        a[i * n + i] += 1.0 / c;
    }
    let inv = gauss_jordan_inverse(&a, n);
    let mut alpha = vec![vec![0.0; m]; n];
    for i in 0..n {
        for k in 0..n {
            alpha[i][usize::from(labels[k]) - 1] += inv[i * n + k];
        }
    }
    queries
        .iter()
        .map(|q| {
            let mut s = vec![0.0; m];
            for (t, a) in train.iter().zip(&alpha) {
                let k = rbf(q, t, gamma);
                for j in 0..m {
                    s[j] += k * a[j];
                }
            }
            s
        })
        .collect()
}

/// LBP by direct enumeration of the eight neighbors, clockwise from the
/// top-left, with edge pixels replicated.
pub fn lbp_oracle(img: &Image<f64>, r: usize, c: usize) -> u8 {
    let at = |dr: i64, dc: i64| {
        let rr = (r as i64 + dr).max(0).min(img.height as i64 - 1) as usize;
        let cc = (c as i64 + dc).max(0).min(img.width as i64 - 1) as usize;
        img.data[rr * img.width + cc]
    };
    let center = at(0, 0);
    let ring = [
        at(-1, -1),
        at(-1, 0),
        at(-1, 1),
        at(0, 1),
        at(1, 1),
        at(1, 0),
        at(1, -1),
        at(0, -1),
    ];
    let mut code = 0u32;
    for (bit, v) in ring.iter().enumerate() {
        if *v >= center {
            code += 1 << bit;
        }
    }
    code as u8
}

/// Integer-valued gray image in `0..levels`.
pub fn random_integer_image(rng: &mut impl Rng, h: usize, w: usize, levels: u32) -> Image<f64> {
    Image::new(h, w, (0..h * w).map(|_| f64::from(rng.random_range(0..levels))).collect()).unwrap()
}

/// Principal component scores `U·Σ` of the column-centered data, first `k`.
pub fn pca_scores(rows: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let (n, d) = (rows.len(), rows[0].len());
    let mut x = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
    for j in 0..d {
        let mean = x.column(j).mean();
        x.column_mut(j).add_scalar_mut(-mean);
    }
    let svd = x.svd(true, false);
    let u = svd.u.unwrap();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    (0..n)
        .map(|i| order[..k].iter().map(|&c| u[(i, c)] * svd.singular_values[c]).collect())
        .collect()
}

/// Anisotropic total variation with forward differences.
pub fn total_variation(img: &Image<f64>) -> f64 {
    let (h, w) = (img.height, img.width);
    let mut tv = 0.0;
    for r in 0..h {
        for c in 0..w {
            let v = img.data[r * w + c];
            if c + 1 < w {
                tv += (img.data[r * w + c + 1] - v).abs();
            }
            if r + 1 < h {
                tv += (img.data[(r + 1) * w + c] - v).abs();
            }
        }
    }
    tv
}

pub fn mean(img: &Image<f64>) -> f64 {
    img.data.iter().sum::<f64>() / img.data.len() as f64
}

/// Piecewise-constant regions overlaid with a fine checkerboard and noise.
pub fn texture_image(seed: u64, h: usize, w: usize) -> Image<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let split = rng.random_range(h / 4..3 * h / 4);
    let (lo, hi) = (rng.random_range(0.1..0.4), rng.random_range(0.6..0.9));
    let amp = rng.random_range(0.02..0.08);
    let cell = rng.random_range(1..3);
    let data = (0..h * w)
        .map(|p| {
            let (r, c) = (p / w, p % w);
            let base = if c < split { lo } else { hi };
            let check = if (r / cell + c / cell) % 2 == 0 { amp } else { -amp };
            base + check + rng.random_range(-0.01..0.01)
        })
        .collect();
    Image::new(h, w, data).unwrap()
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
