//! Sparrow search algorithm.
//!
//! Each iteration ranks the population by fitness and moves three roles:
//!
//! * producers (the best `PD·n`): shrink toward the origin while the alarm
//!   value stays below the safety threshold, otherwise take a Gaussian step;
//! * joiners (the rest): the worse half scatter relative to the worst
//!   position, the better half move around the best producer;
//! * scouts (`SD·n` drawn at random, overriding their role move): jump toward
//!   the global best, or, for the current best itself, away from the worst.
//!
//! Every sparrow keeps its new position only if it improves its fitness, so
//! the best-so-far fitness never increases. All random draws for an
//! iteration are made before any objective is evaluated.

pub mod functions;
mod pso;
mod rng;
mod tune;

pub use pso::{pso_optimize, PsoConfig};
pub use tune::{stratified_folds, tune_kelm, TuneOutcome};

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use rng::{substream, Role, POPULATION};

/// Denominator guard in the scout move of the best sparrow.
pub const DELTA: f64 = 1e-50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SsaConfig {
    pub pop_size: usize,
    pub max_iter: usize,
    pub producer_ratio: f64,
    pub scout_ratio: f64,
    /// Safety threshold `ST`; producers take the shrinking move while the
    /// alarm value `R₂ < ST`.
    pub safety_threshold: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub seed: u64,
    /// Draw the scout step factor `V` from `{0, 1}` instead of `N(0, 1)`.
    pub paper_literal_v: bool,
}

impl Default for SsaConfig {
    fn default() -> Self {
        Self {
            pop_size: 30,
            max_iter: 20,
            producer_ratio: 0.2,
            scout_ratio: 0.1,
            safety_threshold: 0.8,
            lower: vec![-2.0, -3.0],
            upper: vec![4.0, 3.0],
            seed: 0,
            paper_literal_v: false,
        }
    }
}

impl SsaConfig {
    pub fn with_bounds(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self {
            lower,
            upper,
            ..Self::default()
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.pop_size < 2 {
            return fail(format!("population size {} must be at least 2", self.pop_size));
        }
        for (name, r) in [
            ("producer ratio", self.producer_ratio),
            ("scout ratio", self.scout_ratio),
            ("safety threshold", self.safety_threshold),
        ] {
            if !(r > 0.0 && r < 1.0) {
                return fail(format!("{name} {r} must lie in (0, 1)"));
            }
        }
        if self.lower.is_empty() || self.lower.len() != self.upper.len() {
            return fail(format!(
                "bounds must be non-empty and of equal length ({} vs {})",
                self.lower.len(),
                self.upper.len()
            ));
        }
        if let Some(e) = (0..self.dim()).find(|&e| {
            !(self.lower[e] < self.upper[e]) || !self.lower[e].is_finite() || !self.upper[e].is_finite()
        }) {
            return fail(format!(
                "bound {e}: lower {} must be below upper {}",
                self.lower[e], self.upper[e]
            ));
        }
        Ok(())
    }

    pub fn producer_count(&self) -> usize {
        ((self.producer_ratio * self.pop_size as f64).round() as usize).clamp(1, self.pop_size - 1)
    }

    pub fn scout_count(&self) -> usize {
        ((self.scout_ratio * self.pop_size as f64).round() as usize).clamp(1, self.pop_size)
    }

    fn clamp_into(&self, candidate: &mut [f64], previous: &[f64]) {
        for e in 0..candidate.len() {
            let v = candidate[e];
            candidate[e] = if v.is_nan() {
                previous[e]
            } else {
                v.clamp(self.lower[e], self.upper[e])
            };
        }
    }
}

/// Fitness to minimize over a box.
pub trait Objective: Sync {
    fn dim(&self) -> usize;
    fn evaluate(&self, x: &[f64]) -> f64;
}

/// Adapts a closure to [`Objective`].
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnObjective<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsaState {
    pub positions: Vec<Vec<f64>>,
    pub fitness: Vec<f64>,
    pub best_pos: Vec<f64>,
    pub best_fit: f64,
    pub worst_pos: Vec<f64>,
    pub worst_fit: f64,
    pub iteration: usize,
}

impl SsaState {
    fn from_population(positions: Vec<Vec<f64>>, fitness: Vec<f64>) -> Self {
        let best = argmin(&fitness);
        let worst = argmax(&fitness);
        Self {
            best_pos: positions[best].clone(),
            best_fit: fitness[best],
            worst_pos: positions[worst].clone(),
            worst_fit: fitness[worst],
            positions,
            fitness,
            iteration: 0,
        }
    }

    /// Sparrow indices by ascending fitness; ties keep index order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.fitness.len()).collect();
        order.sort_by(|&a, &b| self.fitness[a].total_cmp(&self.fitness[b]));
        order
    }

    pub fn mean_fitness(&self) -> f64 {
        self.fitness.iter().sum::<f64>() / self.fitness.len() as f64
    }

    fn refresh_extremes(&mut self) {
        let best = argmin(&self.fitness);
        if self.fitness[best] < self.best_fit {
            self.best_fit = self.fitness[best];
            self.best_pos = self.positions[best].clone();
        }
        let worst = argmax(&self.fitness);
        self.worst_fit = self.fitness[worst];
        self.worst_pos = self.positions[worst].clone();
    }
}

fn argmin(v: &[f64]) -> usize {
    (1..v.len()).fold(0, |b, i| if v[i] < v[b] { i } else { b })
}

fn argmax(v: &[f64]) -> usize {
    (1..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProducerDraw {
    /// `α ∈ (0, 1]`.
    pub alpha: f64,
    pub q: f64,
}

impl ProducerDraw {
    fn sample(rng: &mut impl Rng) -> Self {
        Self {
            alpha: 1.0 - rng.random::<f64>(),
            q: rng.sample(StandardNormal),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JoinerDraw {
    pub q: f64,
    /// Row `A` of `±1` entries.
    pub signs: Vec<f64>,
}

impl JoinerDraw {
    fn sample(rng: &mut impl Rng, dim: usize) -> Self {
        Self {
            q: rng.sample(StandardNormal),
            signs: (0..dim)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoutDraw {
    pub v: Vec<f64>,
    /// `O ∈ [−1, 1)`.
    pub o: f64,
}

impl ScoutDraw {
    fn sample(rng: &mut impl Rng, dim: usize, literal_v: bool) -> Self {
        let v = (0..dim)
            .map(|_| {
                if literal_v {
                    f64::from(u8::from(rng.random::<bool>()))
                } else {
                    rng.sample(StandardNormal)
                }
            })
            .collect();
        Self {
            v,
            o: 2.0 * rng.random::<f64>() - 1.0,
        }
    }
}

/// Producer move for the sparrow ranked `rank` (1-based). `calm` is `R₂ < ST`.
pub fn producer_step(pos: &[f64], rank: usize, calm: bool, draw: &ProducerDraw, max_iter: usize) -> Vec<f64> {
    if calm {
        let factor = (-(rank as f64) / (draw.alpha * max_iter as f64)).exp();
        pos.iter().map(|x| x * factor).collect()
    } else {
        pos.iter().map(|x| x + draw.q).collect()
    }
}

/// Joiner move for the sparrow ranked `rank` (1-based) in a population of
/// `pop_size`. The pseudo-inverse of the `1 × d` sign row is `Aᵀ/d`, so the
/// better-half move shifts every coordinate of the best producer by
/// `Σₑ |xₑ − bₑ|·Aₑ / d`.
pub fn joiner_step(
    pos: &[f64],
    rank: usize,
    pop_size: usize,
    worst: &[f64],
    best_producer: &[f64],
    draw: &JoinerDraw,
) -> Vec<f64> {
    if rank as f64 > pop_size as f64 / 2.0 {
        let c2 = (rank * rank) as f64;
        pos.iter()
            .zip(worst)
            .map(|(x, w)| draw.q * ((w - x) / c2).exp())
            .collect()
    } else {
        let shift = pos
            .iter()
            .zip(best_producer)
            .zip(&draw.signs)
            .map(|((x, b), a)| (x - b).abs() * a)
            .sum::<f64>()
            / pos.len() as f64;
        best_producer.iter().map(|b| b + shift).collect()
    }
}

/// Scout move. Sparrows worse than the global best jump toward it; the best
/// (`fit == best_fit`) steps relative to the worst position.
pub fn scout_step(
    pos: &[f64],
    fit: f64,
    best_pos: &[f64],
    best_fit: f64,
    worst_pos: &[f64],
    worst_fit: f64,
    draw: &ScoutDraw,
) -> Vec<f64> {
    if fit > best_fit {
        best_pos
            .iter()
            .zip(pos)
            .zip(&draw.v)
            .map(|((b, x), v)| b + v * (x - b).abs())
            .collect()
    } else {
        let denom = (fit - worst_fit) + DELTA;
        pos.iter()
            .zip(worst_pos)
            .map(|(x, w)| x + draw.o * ((x - w).abs() / denom))
            .collect()
    }
}

/// Candidate position for one sparrow.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub sparrow: usize,
    pub position: Vec<f64>,
}

/// Draw source for one iteration.
#[derive(Debug, Clone, Copy)]
pub struct IterationStreams {
    seed: u64,
    iteration: u64,
}

impl IterationStreams {
    pub fn new(seed: u64, iteration: usize) -> Self {
        Self {
            seed,
            iteration: iteration as u64,
        }
    }

    fn rng(&self, sparrow: u64, role: Role) -> rand_chacha::ChaCha8Rng {
        substream(self.seed, self.iteration, sparrow, role)
    }

    /// Alarm value `R₂` and the scout set for this iteration.
    pub fn population_draws(&self, cfg: &SsaConfig) -> (f64, Vec<usize>) {
        let mut rng = self.rng(POPULATION, Role::Global);
        let r2 = rng.random::<f64>();
        let mut scouts =
            rand::seq::index::sample(&mut rng, cfg.pop_size, cfg.scout_count()).into_vec();
        scouts.sort_unstable();
        (r2, scouts)
    }
}

pub fn update_producers(
    state: &SsaState,
    ranking: &[usize],
    cfg: &SsaConfig,
    r2: f64,
    streams: &IterationStreams,
) -> Vec<Proposal> {
    let calm = r2 < cfg.safety_threshold;
    ranking[..cfg.producer_count()]
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let draw = ProducerDraw::sample(&mut streams.rng(s as u64, Role::Producer));
            let old = &state.positions[s];
            let mut position = producer_step(old, i + 1, calm, &draw, cfg.max_iter);
            cfg.clamp_into(&mut position, old);
            Proposal { sparrow: s, position }
        })
        .collect()
}

/// Joiner moves for every non-producer not in `skip`.
pub fn update_joiners(
    state: &SsaState,
    ranking: &[usize],
    cfg: &SsaConfig,
    best_producer: &[f64],
    skip: &[bool],
    streams: &IterationStreams,
) -> Vec<Proposal> {
    let dim = cfg.dim();
    ranking
        .iter()
        .enumerate()
        .skip(cfg.producer_count())
        .filter(|(_, &s)| !skip[s])
        .map(|(i, &s)| {
            let draw = JoinerDraw::sample(&mut streams.rng(s as u64, Role::Joiner), dim);
            let old = &state.positions[s];
            let mut position =
                joiner_step(old, i + 1, cfg.pop_size, &state.worst_pos, best_producer, &draw);
            cfg.clamp_into(&mut position, old);
            Proposal { sparrow: s, position }
        })
        .collect()
}

pub fn update_scouts(
    state: &SsaState,
    scouts: &[usize],
    cfg: &SsaConfig,
    streams: &IterationStreams,
) -> Vec<Proposal> {
    let dim = cfg.dim();
    scouts
        .iter()
        .map(|&s| {
            let draw = ScoutDraw::sample(&mut streams.rng(s as u64, Role::Scout), dim, cfg.paper_literal_v);
            let old = &state.positions[s];
            let mut position = scout_step(
                old,
                state.fitness[s],
                &state.best_pos,
                state.best_fit,
                &state.worst_pos,
                state.worst_fit,
                &draw,
            );
            cfg.clamp_into(&mut position, old);
            Proposal { sparrow: s, position }
        })
        .collect()
}

fn evaluate_all<O: Objective + ?Sized>(obj: &O, positions: &[&[f64]]) -> Result<Vec<f64>> {
    let fits = par::map_range(positions.len(), |i| obj.evaluate(positions[i]));
    if let Some(i) = fits.iter().position(|f| f.is_nan()) {
        return Err(Error::ObjectiveNan {
            position: positions[i].to_vec(),
        });
    }
    Ok(fits)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceRow {
    pub iteration: usize,
    pub best_fit: f64,
    pub mean_fit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best_pos: Vec<f64>,
    pub best_fit: f64,
    /// One row per iteration.
    pub trace: Vec<TraceRow>,
    pub evaluations: usize,
}

impl SearchOutcome {
    pub fn best_fit_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.best_fit).collect()
    }
}

/// Convergence trace as CSV: `iteration,bestFit,meanFit`.
pub fn write_trace_csv(trace: &[TraceRow], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "iteration,bestFit,meanFit")?;
    for r in trace {
        writeln!(w, "{},{},{}", r.iteration, r.best_fit, r.mean_fit)?;
    }
    Ok(())
}

pub fn save_trace_csv(trace: &[TraceRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_trace_csv(trace, &mut buf).expect("writing to memory");
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Stepwise driver; [`optimize`] runs it to completion.
pub struct Ssa<'a, O: Objective + ?Sized> {
    obj: &'a O,
    cfg: SsaConfig,
    state: SsaState,
    trace: Vec<TraceRow>,
    evaluations: usize,
}

impl<'a, O: Objective + ?Sized> Ssa<'a, O> {
    /// Samples the population uniformly inside the bounds and evaluates it.
    pub fn new(obj: &'a O, cfg: &SsaConfig) -> Result<Self> {
        cfg.validate()?;
        if obj.dim() != cfg.dim() {
            return Err(Error::Config(format!(
                "objective has {} dimensions, bounds have {}",
                obj.dim(),
                cfg.dim()
            )));
        }
        let positions: Vec<Vec<f64>> = (0..cfg.pop_size)
            .map(|s| {
                let mut rng = substream(cfg.seed, 0, s as u64, Role::Init);
                (0..cfg.dim())
                    .map(|e| cfg.lower[e] + rng.random::<f64>() * (cfg.upper[e] - cfg.lower[e]))
                    .collect()
            })
            .collect();
        let refs: Vec<&[f64]> = positions.iter().map(Vec::as_slice).collect();
        let fitness = evaluate_all(obj, &refs)?;
        Ok(Self {
            obj,
            cfg: cfg.clone(),
            evaluations: positions.len(),
            state: SsaState::from_population(positions, fitness),
            trace: Vec::with_capacity(cfg.max_iter),
        })
    }

    pub fn state(&self) -> &SsaState {
        &self.state
    }

    pub fn trace(&self) -> &[TraceRow] {
        &self.trace
    }

    pub fn step(&mut self) -> Result<()> {
        let cfg = &self.cfg;
        let state = &self.state;
        let t = state.iteration + 1;
        let streams = IterationStreams::new(cfg.seed, t);
        let ranking = state.ranking();
        let (r2, scouts) = streams.population_draws(cfg);
        let mut is_scout = vec![false; cfg.pop_size];
        scouts.iter().for_each(|&s| is_scout[s] = true);

        let producers = update_producers(state, &ranking, cfg, r2, &streams);
        let prod_fit = evaluate_all(self.obj, &producers.iter().map(|p| p.position.as_slice()).collect::<Vec<_>>())?;
        let best_producer = producers[argmin(&prod_fit)].position.clone();

        let joiners = update_joiners(state, &ranking, cfg, &best_producer, &is_scout, &streams);
        let join_fit = evaluate_all(self.obj, &joiners.iter().map(|p| p.position.as_slice()).collect::<Vec<_>>())?;

        let scout_moves = update_scouts(state, &scouts, cfg, &streams);
        let scout_fit = evaluate_all(self.obj, &scout_moves.iter().map(|p| p.position.as_slice()).collect::<Vec<_>>())?;

        self.evaluations += producers.len() + joiners.len() + scout_moves.len();

        let mut candidate: Vec<Option<(Vec<f64>, f64)>> = vec![None; cfg.pop_size];
        for (p, f) in producers.into_iter().zip(prod_fit) {
            if !is_scout[p.sparrow] {
                candidate[p.sparrow] = Some((p.position, f));
            }
        }
        for (p, f) in joiners.into_iter().chain(scout_moves).zip(join_fit.into_iter().chain(scout_fit)) {
            candidate[p.sparrow] = Some((p.position, f));
        }

        let state = &mut self.state;
        for (s, c) in candidate.into_iter().enumerate() {
            if let Some((pos, f)) = c {
                if f < state.fitness[s] {
                    state.positions[s] = pos;
                    state.fitness[s] = f;
                }
            }
        }
        state.refresh_extremes();
        state.iteration = t;
        self.trace.push(TraceRow {
            iteration: t,
            best_fit: state.best_fit,
            mean_fit: state.mean_fitness(),
        });
        Ok(())
    }

    pub fn into_outcome(self) -> SearchOutcome {
        SearchOutcome {
            best_pos: self.state.best_pos,
            best_fit: self.state.best_fit,
            trace: self.trace,
            evaluations: self.evaluations,
        }
    }
}

/// Runs `cfg.max_iter` iterations from a fresh population.
pub fn optimize<O: Objective + ?Sized>(obj: &O, cfg: &SsaConfig) -> Result<SearchOutcome> {
    let mut ssa = Ssa::new(obj, cfg)?;
    for _ in 0..cfg.max_iter {
        ssa.step()?;
    }
    Ok(ssa.into_outcome())
}
