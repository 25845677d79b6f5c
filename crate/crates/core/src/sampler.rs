//! Hybrid sequential sampler.
//!
//! Each adaptive iteration:
//!
//! 1. throws a fresh Monte-Carlo pool and assigns it to Voronoi cells
//!    (exploration score `v`, cell shares summing to 1);
//! 2. scores every design point by local nonlinearity (`e`);
//! 3. aggregates `h_i = v_i + e_i / Σe` and ranks the points;
//! 4. proposes, inside the best-ranked cell, the pool point farthest from
//!    the design (maximin).
//!
//! One point is proposed per iteration. The pool seed of iteration `k` is
//! derived from the master seed and `k` alone, so a persisted [`RunState`]
//! reproduces the same future proposals.

use serde::{Deserialize, Serialize};

use crate::design::{
    initial_design, Design, DesignSpace, EvaluatedPoint, InitialScheme, DUPLICATE_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lola::{default_max_neighbors, score_design};
use crate::seed::{derive_seed, stream};
use crate::voronoi::{
    assign_owners_with, build_pool, default_pool_size, estimate_volumes, MonteCarloPool,
};

/// Below this total nonlinearity the ranking falls back to `h = v`.
pub const EXPLOITATION_FLOOR: f64 = 1e-12;

/// Version of the persisted [`RunState`] document.
pub const STATE_SCHEMA_VERSION: u32 = 1;

pub type EvalFailure = Box<dyn std::error::Error + Send + Sync>;

/// An expensive black-box function.
pub trait Evaluator {
    fn evaluate(&mut self, coords: &[f64]) -> std::result::Result<f64, EvalFailure>;

    /// Called before resuming a run that already holds `evaluations`
    /// results, so evaluators with per-call random streams can realign.
    fn resume_at(&mut self, _evaluations: u64) {}
}

/// Adapts a plain closure into an [`Evaluator`].
pub struct FnEvaluator<F>(pub F);

impl<F: FnMut(&[f64]) -> f64> Evaluator for FnEvaluator<F> {
    fn evaluate(&mut self, coords: &[f64]) -> std::result::Result<f64, EvalFailure> {
        Ok((self.0)(coords))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Exploration plus exploitation.
    #[default]
    Hybrid,
    /// Exploration only: `h = v`.
    VoronoiOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub space: DesignSpace,
    /// Total number of evaluations `N`, initial design included.
    pub budget: usize,
    /// Output-noise variance of the evaluator. Recorded for synthetic
    /// evaluators; the scores never use it.
    pub lambda: f64,
    pub max_neighbors: usize,
    /// Fixed pool size; `None` means `max(1000, 100 n)`.
    pub mc_points: Option<usize>,
    pub seed: u64,
    pub initial: InitialScheme,
    #[serde(default)]
    pub strategy: Strategy,
}

impl SamplerConfig {
    pub fn new(space: DesignSpace, budget: usize, seed: u64) -> Self {
        let dim = space.dim();
        Self {
            space,
            budget,
            lambda: 0.0,
            max_neighbors: default_max_neighbors(dim),
            mc_points: None,
            seed,
            initial: InitialScheme::default_for(dim),
            strategy: Strategy::Hybrid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let init = self.initial.size(self.space.dim());
        initial_design(&self.space, self.initial, self.seed)?;
        if self.budget < init {
            return Err(Error::Config(format!(
                "budget {} is smaller than the initial design ({init} points)",
                self.budget
            )));
        }
        if self.max_neighbors == 0 {
            return Err(Error::Config("max_neighbors must be >= 1".into()));
        }
        if self.mc_points == Some(0) {
            return Err(Error::Config("mc_points must be >= 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "noise variance must be >= 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    pub fn pool_size(&self, n_design: usize) -> usize {
        self.mc_points
            .unwrap_or_else(|| default_pool_size(n_design))
    }
}

/// Scores of every design point for one adaptive iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub iteration: usize,
    pub v: Vec<f64>,
    pub e: Vec<f64>,
    pub h: Vec<f64>,
}

/// `h_i = v_i + e_i / Σ_j e_j`, or `h = v` when `Σe` is below
/// [`EXPLOITATION_FLOOR`].
pub fn aggregate_scores(v: &[f64], e: &[f64]) -> Result<Vec<f64>> {
    if v.len() != e.len() {
        return Err(Error::Usage(format!(
            "{} exploration scores but {} exploitation scores",
            v.len(),
            e.len()
        )));
    }
    let total: f64 = e.iter().sum();
    if total < EXPLOITATION_FLOOR {
        return Ok(v.to_vec());
    }
    Ok(v.iter().zip(e).map(|(v, e)| v + e / total).collect())
}

/// Indices by `h` descending, then `v` descending, then index ascending.
pub fn rank(h: &[f64], v: &[f64]) -> Result<Vec<usize>> {
    if h.len() != v.len() {
        return Err(Error::Usage("rank needs equal-length h and v".into()));
    }
    let mut order: Vec<usize> = (0..h.len()).collect();
    order.sort_by(|&a, &b| {
        h[b].total_cmp(&h[a])
            .then_with(|| v[b].total_cmp(&v[a]))
            .then_with(|| a.cmp(&b))
    });
    Ok(order)
}

/// Maximin candidate in the best-ranked cell that owns a usable pool point.
/// Returns raw coordinates.
///
/// Cells are visited in rank order. A cell whose pool points all sit on the
/// design (within the duplicate threshold) counts as empty. If every cell is
/// empty the global maximin pool point is returned.
pub fn propose_next(
    design: &Design,
    pool: &MonteCarloPool,
    scores: &ScoreTable,
) -> Result<Vec<f64>> {
    if pool.is_empty() {
        return Err(Error::Config("empty Monte-Carlo pool".into()));
    }
    let (owners, dists) = match (pool.owners(), pool.owner_distances()) {
        (Some(o), Some(d)) if pool.assigned_design_len() == Some(design.len()) => (o, d),
        _ => {
            return Err(Error::Usage(
                "pool ownership must be assigned against the current design".into(),
            ))
        }
    };
    let n = design.len();
    if scores.h.len() != n || scores.v.len() != n {
        return Err(Error::Usage("score table does not match the design".into()));
    }

    // best pool point per cell, lowest pool index on ties
    let mut best: Vec<Option<usize>> = vec![None; n];
    let mut global: Option<usize> = None;
    for (j, (&o, &d)) in owners.iter().zip(dists).enumerate() {
        if best[o].is_none_or(|b| d > dists[b]) {
            best[o] = Some(j);
        }
        if global.is_none_or(|g| d > dists[g]) {
            global = Some(j);
        }
    }

    let chosen = rank(&scores.h, &scores.v)?
        .into_iter()
        .filter_map(|i| best[i])
        .find(|&j| dists[j] > DUPLICATE_THRESHOLD)
        .or(global)
        .expect("non-empty pool");

    let raw = design.space().denormalize(pool.point(chosen));
    Ok(clamp_to_space(raw, design.space()))
}

fn clamp_to_space(mut raw: Vec<f64>, space: &DesignSpace) -> Vec<f64> {
    for (x, (lo, hi)) in raw.iter_mut().zip(space.lower().iter().zip(space.upper())) {
        *x = x.clamp(*lo, *hi);
    }
    raw
}

/// Exploration, exploitation and hybrid scores of `design` at adaptive
/// iteration `iteration`, with the owned pool they were computed from.
pub fn compute_scores(
    design: &Design,
    config: &SamplerConfig,
    iteration: usize,
    exec: Execution,
) -> Result<(ScoreTable, MonteCarloPool)> {
    let n = design.len();
    let pool_seed = derive_seed(config.seed, stream::POOL, iteration as u64);
    let pool = build_pool(design.space(), config.pool_size(n), pool_seed)?;
    let pool = assign_owners_with(pool, design, exec)?;
    let v = estimate_volumes(&pool, n)?.v;
    let e = match config.strategy {
        Strategy::Hybrid => score_design(design, config.max_neighbors, exec)?,
        Strategy::VoronoiOnly => vec![0.0; n],
    };
    let h = aggregate_scores(&v, &e)?;
    Ok((ScoreTable { iteration, v, e, h }, pool))
}

/// The next point to evaluate and the scores behind it (adaptive phase only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub coords: Vec<f64>,
    /// 0 while filling the initial design, else the adaptive iteration.
    pub iteration: usize,
    pub scores: Option<ScoreTable>,
}

/// Everything needed to continue a run: configuration, evaluated design,
/// iteration counter and evaluation count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunState {
    pub schema_version: u32,
    pub config: SamplerConfig,
    pub design: Design,
    /// Adaptive iterations completed.
    pub iteration: usize,
    /// Evaluations recorded so far; realigns per-call noise streams.
    pub evaluations: u64,
    /// Proposal handed out but not yet answered (ask/tell).
    #[serde(default)]
    pub pending: Option<Proposal>,
}

impl RunState {
    pub fn new(config: SamplerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            schema_version: STATE_SCHEMA_VERSION,
            design: Design::new(config.space.clone()),
            config,
            iteration: 0,
            evaluations: 0,
            pending: None,
        })
    }

    pub fn initial_size(&self) -> usize {
        self.config.initial.size(self.config.space.dim())
    }

    pub fn is_complete(&self) -> bool {
        self.design.len() >= self.config.budget
    }

    /// What to evaluate next. Pure in the state.
    pub fn next_proposal(&self, exec: Execution) -> Result<Proposal> {
        if self.is_complete() {
            return Err(Error::BudgetExhausted {
                budget: self.config.budget,
            });
        }
        let n = self.design.len();
        if n < self.initial_size() {
            let pts = initial_design(&self.config.space, self.config.initial, self.config.seed)?;
            return Ok(Proposal {
                coords: pts[n].clone(),
                iteration: 0,
                scores: None,
            });
        }
        let iteration = self.iteration + 1;
        let (scores, pool) = compute_scores(&self.design, &self.config, iteration, exec)?;
        let coords = propose_next(&self.design, &pool, &scores)?;
        Ok(Proposal {
            coords,
            iteration,
            scores: Some(scores),
        })
    }

    /// Appends the answer to `proposal`. The state is unchanged on error.
    pub fn record(&mut self, proposal: &Proposal, response: f64) -> Result<()> {
        if self.is_complete() {
            return Err(Error::BudgetExhausted {
                budget: self.config.budget,
            });
        }
        self.design.push(EvaluatedPoint::new(
            proposal.coords.clone(),
            response,
            proposal.iteration,
        ))?;
        if proposal.iteration > 0 {
            self.iteration = proposal.iteration;
        }
        self.evaluations += 1;
        self.pending = None;
        Ok(())
    }

    /// Proposes, evaluates and records one point. On evaluator failure the
    /// state is unchanged and the error carries the proposed point.
    pub fn step<E: Evaluator + ?Sized>(&mut self, evaluator: &mut E) -> Result<Proposal> {
        self.step_with(evaluator, Execution::default())
    }

    pub fn step_with<E: Evaluator + ?Sized>(
        &mut self,
        evaluator: &mut E,
        exec: Execution,
    ) -> Result<Proposal> {
        let proposal = self.next_proposal(exec)?;
        let y = evaluator
            .evaluate(&proposal.coords)
            .map_err(|e| Error::Evaluation {
                point: proposal.coords.clone(),
                message: e.to_string(),
            })?;
        self.record(&proposal, y)?;
        Ok(proposal)
    }

    /// Steps until the budget is reached, returning the adaptive score
    /// tables in order.
    pub fn run_to_budget<E: Evaluator + ?Sized>(
        &mut self,
        evaluator: &mut E,
        exec: Execution,
    ) -> Result<Vec<ScoreTable>> {
        evaluator.resume_at(self.evaluations);
        let mut history = Vec::new();
        while !self.is_complete() {
            if let Some(scores) = self.step_with(evaluator, exec)?.scores {
                history.push(scores);
            }
        }
        Ok(history)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let state: RunState =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        if state.schema_version > STATE_SCHEMA_VERSION {
            return Err(Error::Serialization(format!(
                "state schema {} is newer than supported {}",
                state.schema_version, STATE_SCHEMA_VERSION
            )));
        }
        if state.design.space() != &state.config.space {
            return Err(Error::Serialization(
                "design space differs from configured space".into(),
            ));
        }
        state.config.validate()?;
        Ok(state)
    }
}

/// Final design plus the per-iteration score history.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub design: Design,
    pub history: Vec<ScoreTable>,
}

/// Evaluates the initial design, then adds adaptive points until the
/// budget is used up.
pub fn run<E: Evaluator + ?Sized>(config: SamplerConfig, evaluator: &mut E) -> Result<RunOutcome> {
    run_with(config, evaluator, Execution::default())
}

pub fn run_with<E: Evaluator + ?Sized>(
    config: SamplerConfig,
    evaluator: &mut E,
    exec: Execution,
) -> Result<RunOutcome> {
    let mut state = RunState::new(config)?;
    let history = state.run_to_budget(evaluator, exec)?;
    Ok(RunOutcome {
        design: state.design,
        history,
    })
}
