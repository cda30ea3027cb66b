//! Kernel extreme learning machine.
//!
//! Training solves `(Ω + I/C) α = Y` with `Ω_ij = exp(−γ‖xᵢ − xⱼ‖²)` and `Y`
//! the one-hot targets; prediction is `scores = k(x)ᵀ α` followed by an
//! argmax. A kernel written with a width `K` as `exp(−‖x−y‖²/K²)` corresponds
//! to `γ = 1/K²`.

mod io;

pub use io::{load_model, read_model, save_model, write_model};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::{cholesky_in_place, cholesky_solve, matmul_square, squared_distance};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KelmHyperparams {
    /// Regularization coefficient.
    #[serde(rename = "C")]
    pub c: f64,
    /// RBF width.
    pub gamma: f64,
}

impl KelmHyperparams {
    pub fn new(c: f64, gamma: f64) -> Result<Self> {
        let h = Self { c, gamma };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if self.c > 0.0 && self.gamma > 0.0 && self.c.is_finite() && self.gamma.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "KELM hyperparameters must be positive and finite, got C={} gamma={}",
                self.c, self.gamma
            )))
        }
    }
}

pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dims(a.len(), b.len()));
    }
    Ok((-gamma * squared_distance(a, b)).exp())
}

/// One-hot targets: one row per sample, a single `1` in the column of its class.
#[derive(Debug, Clone, PartialEq)]
pub struct OneHotLabels {
    matrix: FeatureMatrix,
}

impl OneHotLabels {
    pub fn new(labels: &[u16], class_ids: &[u16]) -> Result<Self> {
        let mut matrix = FeatureMatrix::zeros(labels.len(), class_ids.len());
        for (i, l) in labels.iter().enumerate() {
            let j = class_ids.iter().position(|c| c == l).ok_or(Error::LabelOutOfRange {
                label: *l,
                num_classes: class_ids.len() as u16,
            })?;
            matrix.set(i, j, 1.0);
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &FeatureMatrix {
        &self.matrix
    }
}

/// Mean of `(score − y)²` over every entry.
pub fn mse_fitness(scores: &FeatureMatrix, targets: &OneHotLabels) -> Result<f64> {
    let y = targets.matrix();
    if (scores.rows(), scores.cols()) != (y.rows(), y.cols()) {
        return Err(Error::dims(
            format!("{}x{}", y.rows(), y.cols()),
            format!("{}x{}", scores.rows(), scores.cols()),
        ));
    }
    if y.as_slice().is_empty() {
        return Err(Error::Data("MSE of an empty score matrix".into()));
    }
    Ok(mse(scores.as_slice(), y.as_slice()))
}

pub(crate) fn mse(scores: &[f64], y: &[f64]) -> f64 {
    let sum: f64 = scores
        .iter()
        .zip(y)
        .map(|(s, t)| (s - t) * (s - t))
        .sum();
    sum / y.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct KelmModel {
    train_x: FeatureMatrix,
    alpha: FeatureMatrix,
    hyper: KelmHyperparams,
    class_ids: Vec<u16>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub scores: FeatureMatrix,
    pub labels: Vec<u16>,
}

/// `exp(−γ‖xᵢ − xⱼ‖²)` for all training pairs, row-major.
pub fn kernel_matrix(x: &FeatureMatrix, gamma: f64) -> Vec<f64> {
    let n = x.rows();
    let mut omega = vec![0.0; n * n];
    par::for_each_row_mut(&mut omega, n, |i, row| {
        let xi = x.row(i);
        for (j, v) in row.iter_mut().enumerate() {
            *v = if i == j {
                1.0
            } else {
                (-gamma * squared_distance(xi, x.row(j))).exp()
            };
        }
    });
    omega
}

const JITTER: f64 = 1e-10;

/// Solves `(Ω + I/C) α = Y` in place of `omega`. `y` is `n × m` row-major.
pub(crate) fn solve_kernel_system(mut omega: Vec<f64>, n: usize, c: f64, y: &[f64], m: usize) -> Result<Vec<f64>> {
    for i in 0..n {
        omega[i * n + i] += 1.0 / c;
    }
    let system = omega.clone();
    let mut factor = omega;
    if cholesky_in_place(&mut factor, n).is_err() {
        factor.copy_from_slice(&system);
        for i in 0..n {
            factor[i * n + i] += JITTER;
        }
        cholesky_in_place(&mut factor, n)?;
    }
    let mut alpha = y.to_vec();
    cholesky_solve(&factor, n, &mut alpha, m);

    let y_norm = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tolerance = 1e-8 * (1.0 + y_norm);
    let residual = |alpha: &[f64]| -> Vec<f64> {
        let ax = matmul_square(&system, n, alpha, m);
        y.iter().zip(&ax).map(|(a, b)| a - b).collect()
    };
    let inf_norm = |r: &[f64]| r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut r = residual(&alpha);
    // up to two rounds of iterative refinement for ill-conditioned systems
    for _ in 0..2 {
        if inf_norm(&r) <= tolerance {
            break;
        }
        cholesky_solve(&factor, n, &mut r, m);
        alpha.iter_mut().zip(&r).for_each(|(a, d)| *a += d);
        r = residual(&alpha);
    }
    let res = inf_norm(&r);
    if !(res <= tolerance) {
        return Err(Error::ResidualTooLarge {
            residual: res,
            tolerance,
        });
    }
    Ok(alpha)
}

/// Trains on samples labeled `1..=num_classes`; every class must occur.
pub fn train(
    x: &FeatureMatrix,
    labels: &[u16],
    num_classes: u16,
    hyper: KelmHyperparams,
) -> Result<KelmModel> {
    hyper.validate()?;
    if labels.len() != x.rows() {
        return Err(Error::dims(format!("{} labels", x.rows()), labels.len()));
    }
    if !x.is_finite() {
        return Err(Error::Data("training features contain non-finite values".into()));
    }
    let class_ids: Vec<u16> = (1..=num_classes).collect();
    for &c in &class_ids {
        if !labels.contains(&c) {
            return Err(Error::ClassAbsent {
                class: c,
                num_classes,
            });
        }
    }
    let targets = OneHotLabels::new(labels, &class_ids)?;
    let n = x.rows();
    let m = class_ids.len();
    let alpha = solve_kernel_system(kernel_matrix(x, hyper.gamma), n, hyper.c, targets.matrix().as_slice(), m)?;
    Ok(KelmModel {
        train_x: x.clone(),
        alpha: FeatureMatrix::new(n, m, alpha)?,
        hyper,
        class_ids,
    })
}

/// Index of the largest score; ties go to the lowest index.
pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

impl KelmModel {
    pub fn from_parts(
        train_x: FeatureMatrix,
        alpha: FeatureMatrix,
        hyper: KelmHyperparams,
        class_ids: Vec<u16>,
    ) -> Result<Self> {
        hyper.validate()?;
        if alpha.rows() != train_x.rows() || alpha.cols() != class_ids.len() {
            return Err(Error::dims(
                format!("alpha {}x{}", train_x.rows(), class_ids.len()),
                format!("{}x{}", alpha.rows(), alpha.cols()),
            ));
        }
        Ok(Self {
            train_x,
            alpha,
            hyper,
            class_ids,
        })
    }

    pub fn hyper(&self) -> KelmHyperparams {
        self.hyper
    }

    pub fn class_ids(&self) -> &[u16] {
        &self.class_ids
    }

    pub fn train_x(&self) -> &FeatureMatrix {
        &self.train_x
    }

    pub fn alpha(&self) -> &FeatureMatrix {
        &self.alpha
    }

    pub fn feature_dim(&self) -> usize {
        self.train_x.cols()
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Prediction> {
        if x.rows() > 0 && x.cols() != self.feature_dim() {
            return Err(Error::dims(
                format!("{} features", self.feature_dim()),
                format!("{} features", x.cols()),
            ));
        }
        let c = self.class_ids.len();
        let n = self.train_x.rows();
        let gamma = self.hyper.gamma;
        let mut scores = FeatureMatrix::zeros(x.rows(), c);
        par::for_each_row_mut(scores.as_mut_slice(), c, |i, out| {
            let xi = x.row(i);
            for j in 0..n {
                let k = (-gamma * squared_distance(xi, self.train_x.row(j))).exp();
                for (o, a) in out.iter_mut().zip(self.alpha.row(j)) {
                    *o += k * a;
                }
            }
        });
        let labels = (0..x.rows())
            .map(|i| self.class_ids[argmax(scores.row(i))])
            .collect();
        Ok(Prediction { scores, labels })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point_model() -> KelmModel {
        let x = FeatureMatrix::from_rows(&[[0.0], [1.0]]).unwrap();
        train(&x, &[1, 2], 2, KelmHyperparams::new(1.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn rbf_values() {
        assert_eq!(rbf_kernel(&[0.3, 2.0], &[0.3, 2.0], 5.0).unwrap(), 1.0);
        let v = rbf_kernel(&[0.0], &[1.0], 1.0).unwrap();
        assert!((v - 0.367_879_4).abs() < 1e-7);
        assert!(rbf_kernel(&[0.0], &[1.0, 2.0], 1.0).is_err());
        let mut prev = 1.0;
        for g in [0.1, 1.0, 10.0, 100.0] {
            let v = rbf_kernel(&[0.0], &[0.5], g).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn two_point_alpha() {
        let m = two_point_model();
        let a = m.alpha();
        for (got, want) in a.as_slice().iter().zip([0.517509, -0.095195, -0.095195, 0.517509]) {
            assert!((got - want).abs() < 1e-5, "{got} vs {want}");
        }
    }

    #[test]
    fn two_point_scores_at_origin() {
        let m = two_point_model();
        let p = m.predict(&FeatureMatrix::from_rows(&[[0.0]]).unwrap()).unwrap();
        assert!((p.scores.get(0, 0) - 0.48249).abs() < 1e-5);
        assert!((p.scores.get(0, 1) - 0.09519).abs() < 1e-5);
        assert_eq!(p.labels, vec![1]);
    }

    #[test]
    fn identity_kernel_limit_reproduces_targets() {
        let x = FeatureMatrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [3.0, 3.0]]).unwrap();
        let labels = [1, 2, 3, 2];
        let m = train(&x, &labels, 3, KelmHyperparams::new(1e9, 1e4).unwrap()).unwrap();
        let y = OneHotLabels::new(&labels, &[1, 2, 3]).unwrap();
        for (a, t) in m.alpha().as_slice().iter().zip(y.matrix().as_slice()) {
            assert!((a - t).abs() < 1e-6);
        }
        assert_eq!(m.predict(&x).unwrap().labels, labels.to_vec());
    }

    #[test]
    fn missing_class_rejected() {
        let x = FeatureMatrix::from_rows(&[[0.0]]).unwrap();
        let err = train(&x, &[1], 2, KelmHyperparams::new(1.0, 1.0).unwrap()).unwrap_err();
        assert!(err.to_string().contains("class 2 absent"));
    }

    #[test]
    fn empty_prediction() {
        let p = two_point_model().predict(&FeatureMatrix::zeros(0, 1)).unwrap();
        assert_eq!(p.scores.rows(), 0);
        assert!(p.labels.is_empty());
    }

    #[test]
    fn dimension_mismatch_on_predict() {
        let m = two_point_model();
        assert!(m.predict(&FeatureMatrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn ties_go_to_lowest_class() {
        assert_eq!(argmax(&[0.5, 0.5, 0.1]), 0);
        assert_eq!(argmax(&[0.1, 0.5, 0.5]), 1);
    }

    #[test]
    fn mse_cases() {
        let y = OneHotLabels::new(&[1, 2, 3], &[1, 2, 3]).unwrap();
        assert_eq!(mse_fitness(y.matrix(), &y).unwrap(), 0.0);
        let zeros = FeatureMatrix::zeros(3, 3);
        assert!((mse_fitness(&zeros, &y).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let half = FeatureMatrix::from_rows(&[[0.5, 0.5]]).unwrap();
        let y1 = OneHotLabels::new(&[1], &[1, 2]).unwrap();
        assert_eq!(mse_fitness(&half, &y1).unwrap(), 0.25);
        assert!(mse_fitness(&zeros, &y1).is_err());
    }

    #[test]
    fn bad_hyperparams_rejected() {
        assert!(KelmHyperparams::new(0.0, 1.0).is_err());
        assert!(KelmHyperparams::new(1.0, -1.0).is_err());
    }
}
