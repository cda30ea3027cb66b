//! Searching KELM's `(log10 C, log10 γ)` with the sparrow search.

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{optimize, Objective, SearchOutcome, SsaConfig};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::kelm::{mse, solve_kernel_system, KelmHyperparams, OneHotLabels};
use crate::linalg::squared_distance;

/// Fitness assigned when a candidate's kernel system cannot be solved.
pub const FAILED_SOLVE_FITNESS: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    pub hyper: KelmHyperparams,
    /// Absent when the search box is a single point.
    pub search: Option<SearchOutcome>,
    /// Number of folds actually used.
    pub folds: usize,
}

/// Assigns every sample a fold in `0..k`, dealing each class's shuffled
/// members round-robin. `k` is lowered to the smallest class size if needed.
pub fn stratified_folds(labels: &[u16], folds: usize, seed: u64) -> Result<(Vec<usize>, usize)> {
    if folds == 0 {
        return Err(Error::Config("fold count must be at least 1".into()));
    }
    if labels.is_empty() {
        return Err(Error::Data("no training samples to fold".into()));
    }
    let mut classes: Vec<u16> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let members: Vec<Vec<usize>> = classes
        .iter()
        .map(|&c| (0..labels.len()).filter(|&i| labels[i] == c).collect())
        .collect();
    let smallest = members.iter().map(Vec::len).min().unwrap_or(0);
    let k = folds.min(smallest);
    if k < folds {
        warn!("reducing folds from {folds} to {k}: smallest class has {smallest} samples");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    for mut idx in members {
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            assignment[i] = pos % k;
        }
    }
    Ok((assignment, k))
}

struct Fold {
    n_train: usize,
    sq_train: Vec<f64>,
    y_train: Vec<f64>,
    n_eval: usize,
    sq_eval: Vec<f64>,
    y_eval: Vec<f64>,
}

struct CrossValidation {
    folds: Vec<Fold>,
    m: usize,
}

fn pairwise(a: &FeatureMatrix, ai: &[usize], b: &FeatureMatrix, bi: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(ai.len() * bi.len());
    for &i in ai {
        out.extend(bi.iter().map(|&j| squared_distance(a.row(i), b.row(j))));
    }
    out
}

impl CrossValidation {
    fn new(x: &FeatureMatrix, y: &FeatureMatrix, assignment: &[usize], k: usize) -> Self {
        let all: Vec<usize> = (0..x.rows()).collect();
        let folds = (0..k)
            .map(|f| {
                let (train, eval): (Vec<usize>, Vec<usize>) = if k == 1 {
                    (all.clone(), all.clone())
                } else {
                    all.iter().partition(|&&i| assignment[i] != f)
                };
                let rows = |idx: &[usize]| idx.iter().flat_map(|&i| y.row(i).iter().copied()).collect::<Vec<_>>();
                Fold {
                    n_train: train.len(),
                    sq_train: pairwise(x, &train, x, &train),
                    y_train: rows(&train),
                    n_eval: eval.len(),
                    sq_eval: pairwise(x, &eval, x, &train),
                    y_eval: rows(&eval),
                }
            })
            .collect();
        Self { folds, m: y.cols() }
    }

    fn fold_mse(&self, fold: &Fold, hyper: KelmHyperparams) -> Option<f64> {
        let omega = fold.sq_train.iter().map(|d| (-hyper.gamma * d).exp()).collect();
        let alpha = solve_kernel_system(omega, fold.n_train, hyper.c, &fold.y_train, self.m).ok()?;
        let m = self.m;
        let mut scores = vec![0.0; fold.n_eval * m];
        for (i, out) in scores.chunks_exact_mut(m).enumerate() {
            let dists = &fold.sq_eval[i * fold.n_train..(i + 1) * fold.n_train];
            for (j, d) in dists.iter().enumerate() {
                let k = (-hyper.gamma * d).exp();
                for (o, a) in out.iter_mut().zip(&alpha[j * m..(j + 1) * m]) {
                    *o += k * a;
                }
            }
        }
        let e = mse(&scores, &fold.y_eval);
        e.is_finite().then_some(e)
    }
}

fn decode(x: &[f64]) -> KelmHyperparams {
    KelmHyperparams {
        c: 10f64.powf(x[0]),
        gamma: 10f64.powf(x[1]),
    }
}

impl Objective for CrossValidation {
    fn dim(&self) -> usize {
        2
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        let hyper = decode(x);
        let mut total = 0.0;
        for fold in &self.folds {
            match self.fold_mse(fold, hyper) {
                Some(e) => total += e,
                None => return FAILED_SOLVE_FITNESS,
            }
        }
        total / self.folds.len() as f64
    }
}

/// Picks `(C, γ)` minimizing the mean held-out MSE over stratified folds of
/// the given training samples. `folds = 1` scores the training-set MSE.
pub fn tune_kelm(
    x: &FeatureMatrix,
    labels: &[u16],
    num_classes: u16,
    cfg: &SsaConfig,
    folds: usize,
) -> Result<TuneOutcome> {
    if cfg.lower.len() != 2 || cfg.upper.len() != 2 {
        return Err(Error::Config(
            "KELM search space is (log10 C, log10 gamma): bounds need 2 entries".into(),
        ));
    }
    if labels.len() != x.rows() {
        return Err(Error::dims(format!("{} labels", x.rows()), labels.len()));
    }
    let class_ids: Vec<u16> = (1..=num_classes).collect();
    let targets = OneHotLabels::new(labels, &class_ids)?;
    let (assignment, k) = stratified_folds(labels, folds, cfg.seed)?;
    if cfg.lower == cfg.upper {
        return Ok(TuneOutcome {
            hyper: decode(&cfg.lower),
            search: None,
            folds: k,
        });
    }
    let cv = CrossValidation::new(x, targets.matrix(), &assignment, k);
    let search = optimize(&cv, cfg)?;
    Ok(TuneOutcome {
        hyper: decode(&search.best_pos),
        search: Some(search),
        folds: k,
    })
}
