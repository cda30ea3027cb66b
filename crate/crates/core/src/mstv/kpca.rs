//! Landmark kernel PCA.
//!
//! A seeded subset of `m` rows serves as landmarks. Their kernel matrix is
//! double-centered and eigendecomposed; every row is then projected onto the
//! top components as `zᵢ = vᵢᵀ k̃(x) / √λᵢ`, with `k̃(x)` the centered kernel
//! vector of `x` against the landmarks. With a linear kernel and every row as
//! a landmark this reproduces classical PCA scores.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::{dot, squared_distance};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KpcaKernel {
    Linear,
    Rbf { gamma: f64 },
}

impl KpcaKernel {
    /// `gamma == 0` selects the linear kernel.
    pub fn from_gamma(gamma: f64) -> Self {
        if gamma == 0.0 {
            KpcaKernel::Linear
        } else {
            KpcaKernel::Rbf { gamma }
        }
    }

    #[inline]
    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            KpcaKernel::Linear => dot(a, b),
            KpcaKernel::Rbf { gamma } => (-gamma * squared_distance(a, b)).exp(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct KpcaModel {
    kernel: KpcaKernel,
    landmarks: FeatureMatrix,
    /// `m × N`, column `i` already divided by `√λᵢ`.
    projection: Vec<f64>,
    eigenvalues: Vec<f64>,
    landmark_means: Vec<f64>,
    grand_mean: f64,
}

impl KpcaModel {
    pub fn fit(
        data: &FeatureMatrix,
        kernel: KpcaKernel,
        n_components: usize,
        landmark_count: usize,
        seed: u64,
    ) -> Result<Self> {
        let rows = data.rows();
        if landmark_count == 0 || landmark_count > rows {
            return Err(Error::Config(format!(
                "landmark count {landmark_count} must lie in 1..={rows}"
            )));
        }
        if n_components == 0 || n_components > landmark_count {
            return Err(Error::Config(format!(
                "component count {n_components} must lie in 1..={landmark_count}"
            )));
        }
        if matches!(kernel, KpcaKernel::Linear) && n_components > data.cols() {
            return Err(Error::Config(format!(
                "linear kernel yields at most {} components, {n_components} requested",
                data.cols()
            )));
        }
        if let KpcaKernel::Rbf { gamma } = kernel {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(Error::Config(format!("KPCA gamma {gamma} must be positive")));
            }
        }

        let landmarks = if landmark_count == rows {
            data.clone()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx = rand::seq::index::sample(&mut rng, rows, landmark_count).into_vec();
            idx.sort_unstable();
            data.select_rows(&idx)
        };
        let m = landmark_count;

        let rows_k = par::map_range(m, |i| {
            let li = landmarks.row(i);
            (0..m).map(|j| kernel.eval(li, landmarks.row(j))).collect::<Vec<_>>()
        });
        let k = DMatrix::from_fn(m, m, |i, j| rows_k[i][j]);
        let landmark_means: Vec<f64> = (0..m).map(|i| k.row(i).sum() / m as f64).collect();
        let grand_mean = landmark_means.iter().sum::<f64>() / m as f64;
        let centered = DMatrix::from_fn(m, m, |i, j| {
            k[(i, j)] - landmark_means[i] - landmark_means[j] + grand_mean
        });
        let mean_diag = (0..m).map(|i| k[(i, i)]).sum::<f64>() / m as f64;

        let eig = SymmetricEigen::new(centered);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let tolerance = 1e-10 * mean_diag.abs().max(f64::MIN_POSITIVE);
        let achievable = order
            .iter()
            .take_while(|&&i| eig.eigenvalues[i] > tolerance)
            .count();
        if achievable < n_components {
            return Err(Error::RankDeficient {
                requested: n_components,
                achievable,
            });
        }

        let mut projection = vec![0.0; m * n_components];
        let mut eigenvalues = Vec::with_capacity(n_components);
        for (c, &i) in order.iter().take(n_components).enumerate() {
            let lambda = eig.eigenvalues[i];
            let v = eig.eigenvectors.column(i);
            // sign convention: largest-magnitude entry positive
            let pivot = v
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |best, (j, &x)| if x.abs() > best.1.abs() { (j, x) } else { best })
                .0;
            let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
            let scale = sign / lambda.sqrt();
            for j in 0..m {
                projection[j * n_components + c] = v[j] * scale;
            }
            eigenvalues.push(lambda);
        }

        Ok(Self {
            kernel,
            landmarks,
            projection,
            eigenvalues,
            landmark_means,
            grand_mean,
        })
    }

    /// Eigenvalues of the retained components, non-increasing.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn n_components(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn transform(&self, data: &FeatureMatrix) -> Result<FeatureMatrix> {
        if data.cols() != self.landmarks.cols() {
            return Err(Error::dims(
                format!("{} features", self.landmarks.cols()),
                format!("{} features", data.cols()),
            ));
        }
        let m = self.landmarks.rows();
        let nc = self.n_components();
        let mut out = FeatureMatrix::zeros(data.rows(), nc);
        par::for_each_row_mut(out.as_mut_slice(), nc, |r, z| {
            let x = data.row(r);
            let kx: Vec<f64> = (0..m).map(|j| self.kernel.eval(x, self.landmarks.row(j))).collect();
            let mean = kx.iter().sum::<f64>() / m as f64;
            for (j, &kv) in kx.iter().enumerate() {
                let centered = kv - mean - self.landmark_means[j] + self.grand_mean;
                let proj = &self.projection[j * nc..(j + 1) * nc];
                for (zc, &pc) in z.iter_mut().zip(proj) {
                    *zc += centered * pc;
                }
            }
        });
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_rows_are_rank_deficient() {
        let data = FeatureMatrix::from_rows(&vec![vec![0.3, 0.7, 1.0]; 8]).unwrap();
        let err = KpcaModel::fit(&data, KpcaKernel::Rbf { gamma: 0.5 }, 1, 8, 0).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { requested: 1, achievable: 0 }));
        assert!(err.to_string().contains("fewer than 1 positive eigenvalues"));
    }

    #[test]
    fn two_clusters_split_by_first_component() {
        let mut rows = vec![vec![0.0, 0.0]; 5];
        rows.extend(vec![vec![1.0, 1.0]; 5]);
        let data = FeatureMatrix::from_rows(&rows).unwrap();
        let model = KpcaModel::fit(&data, KpcaKernel::Rbf { gamma: 1.0 }, 1, 10, 0).unwrap();
        let z = model.transform(&data).unwrap();
        let a = z.get(0, 0);
        let b = z.get(9, 0);
        assert!(a * b < 0.0, "clusters should land on opposite sides: {a} {b}");
        // equal-sized clusters: the centered scores are exact negatives
        assert!((a + b).abs() < 1e-12);
    }

    #[test]
    fn too_many_linear_components_rejected() {
        let data = FeatureMatrix::from_rows(&[vec![1.0], vec![2.0], vec![4.0]]).unwrap();
        assert!(KpcaModel::fit(&data, KpcaKernel::Linear, 2, 3, 0).is_err());
    }
}
