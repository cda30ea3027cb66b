//! Global-best particle swarm with constriction coefficients, kept as a
//! comparison baseline for the sparrow search.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rng::{substream, Role};
use super::{evaluate_all, argmin, Objective, SearchOutcome, TraceRow};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct PsoConfig {
    pub pop_size: usize,
    pub max_iter: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Velocity limit as a fraction of each bound range.
    pub velocity_limit: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            pop_size: 30,
            max_iter: 20,
            inertia: 0.7298,
            cognitive: 1.49618,
            social: 1.49618,
            velocity_limit: 0.2,
            lower: vec![-2.0, -3.0],
            upper: vec![4.0, 3.0],
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn with_bounds(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self {
            lower,
            upper,
            ..Self::default()
        }
    }
}

pub fn pso_optimize<O: Objective + ?Sized>(obj: &O, cfg: &PsoConfig) -> Result<SearchOutcome> {
    let d = cfg.lower.len();
    if cfg.pop_size < 1 || d == 0 || d != cfg.upper.len() || d != obj.dim() {
        return Err(Error::Config("invalid swarm size or bounds".into()));
    }
    if (0..d).any(|e| !(cfg.lower[e] < cfg.upper[e])) {
        return Err(Error::Config("lower bounds must be below upper bounds".into()));
    }
    let vmax: Vec<f64> = (0..d)
        .map(|e| cfg.velocity_limit * (cfg.upper[e] - cfg.lower[e]))
        .collect();

    let mut x: Vec<Vec<f64>> = Vec::with_capacity(cfg.pop_size);
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(cfg.pop_size);
    for p in 0..cfg.pop_size {
        let mut rng = substream(cfg.seed, 0, p as u64, Role::Swarm);
        x.push((0..d).map(|e| cfg.lower[e] + rng.random::<f64>() * (cfg.upper[e] - cfg.lower[e])).collect());
        v.push((0..d).map(|e| (2.0 * rng.random::<f64>() - 1.0) * vmax[e]).collect());
    }
    let mut fit = evaluate_all(obj, &x.iter().map(Vec::as_slice).collect::<Vec<_>>())?;
    let mut evaluations = x.len();
    let mut pbest = x.clone();
    let mut pbest_fit = fit.clone();
    let g = argmin(&fit);
    let mut gbest = x[g].clone();
    let mut gbest_fit = fit[g];
    let mut trace = Vec::with_capacity(cfg.max_iter);

    for t in 1..=cfg.max_iter {
        for p in 0..cfg.pop_size {
            let mut rng = substream(cfg.seed, t as u64, p as u64, Role::Swarm);
            for e in 0..d {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let vel = cfg.inertia * v[p][e]
                    + cfg.cognitive * r1 * (pbest[p][e] - x[p][e])
                    + cfg.social * r2 * (gbest[e] - x[p][e]);
                v[p][e] = vel.clamp(-vmax[e], vmax[e]);
                x[p][e] = (x[p][e] + v[p][e]).clamp(cfg.lower[e], cfg.upper[e]);
            }
        }
        fit = evaluate_all(obj, &x.iter().map(Vec::as_slice).collect::<Vec<_>>())?;
        evaluations += x.len();
        for p in 0..cfg.pop_size {
            if fit[p] < pbest_fit[p] {
                pbest_fit[p] = fit[p];
                pbest[p].clone_from(&x[p]);
                if fit[p] < gbest_fit {
                    gbest_fit = fit[p];
                    gbest.clone_from(&x[p]);
                }
            }
        }
        trace.push(TraceRow {
            iteration: t,
            best_fit: gbest_fit,
            mean_fit: fit.iter().sum::<f64>() / fit.len() as f64,
        });
    }
    Ok(SearchOutcome {
        best_pos: gbest,
        best_fit: gbest_fit,
        trace,
        evaluations,
    })
}
