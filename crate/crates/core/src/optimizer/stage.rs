//! MOO-STAGE: greedy hypervolume-driven local search, a regression tree
//! learned from past searches, and tree-guided restarts.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tree::{fit_tree, RegressionTree, TrainingSet, DEFAULT_MAX_DEPTH};
use super::{random_neighbor, Evaluated, IterationRecord, Observer, OptimizerError, Problem, SearchOutcome, Tally};
use crate::arch::Design;
use crate::pareto::ParetoArchive;

// Hypervolume gains at or below this (unit box) count as no improvement.
const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct StageConfig {
    pub max_iterations: usize,
    /// Relative global-PHV change regarded as "no progress".
    pub convergence_eps: f64,
    /// Consecutive no-progress iterations that end the run.
    pub convergence_window: usize,
    /// Random neighbours sampled per local-search step.
    pub neighbors_per_step: usize,
    /// Random restart candidates scored by the learned model.
    pub meta_candidates: usize,
    pub local_steps: usize,
    pub max_depth: usize,
    /// Optional cap on objective evaluations for the whole run.
    pub max_evaluations: Option<usize>,
    pub seed: u64,
}

impl Default for StageConfig {
    fn default() -> Self {
        StageConfig {
            max_iterations: 50,
            convergence_eps: 0.02,
            convergence_window: 5,
            neighbors_per_step: 64,
            meta_candidates: 100,
            local_steps: 200,
            max_depth: DEFAULT_MAX_DEPTH,
            max_evaluations: None,
            seed: 0,
        }
    }
}

impl StageConfig {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        if self.max_iterations == 0
            || self.convergence_window == 0
            || self.neighbors_per_step == 0
            || self.meta_candidates == 0
            || self.local_steps == 0
        {
            return Err(OptimizerError::Config("stage counts must be at least 1"));
        }
        if !(self.convergence_eps > 0.0 && self.convergence_eps < 1.0) {
            return Err(OptimizerError::Config("convergence_eps must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Upper bound on evaluations implied by the iteration structure.
    pub fn evaluation_bound(&self) -> usize {
        self.max_iterations * (self.local_steps * self.neighbors_per_step + self.meta_candidates)
    }
}

/// Result of one local search.
#[derive(Debug, Clone)]
pub struct LocalSearch {
    pub archive: ParetoArchive<Design>,
    /// Designs the search moved through, start first.
    pub trajectory: Vec<Evaluated>,
}

/// Greedy hill climbing on hypervolume. Each step samples up to `K` valid
/// neighbours, moves to the one adding the most hypervolume to the local
/// archive, and offers every evaluated neighbour to that archive. Stops at
/// a local optimum, after `local_steps` steps, or when the budget runs out.
pub fn local_search<R: Rng + ?Sized, O: Observer + ?Sized>(
    problem: &Problem,
    start: Evaluated,
    config: &StageConfig,
    rng: &mut R,
    observer: &mut O,
) -> Result<LocalSearch, OptimizerError> {
    let mut tally = Tally::new(None);
    tally.evaluations = start.id + 1;
    local_search_with(problem, start, config, rng, &mut tally, observer)
}

pub(crate) fn local_search_with<R: Rng + ?Sized, O: Observer + ?Sized>(
    problem: &Problem,
    start: Evaluated,
    config: &StageConfig,
    rng: &mut R,
    tally: &mut Tally,
    observer: &mut O,
) -> Result<LocalSearch, OptimizerError> {
    let mut archive = ParetoArchive::new(problem.reference.clone())?;
    archive.insert(start.id, start.values.clone(), start.design.clone())?;
    let mut current = start.design.clone();
    let mut trajectory = alloc::vec![start];
    for _ in 0..config.local_steps {
        let mut best: Option<(f64, Evaluated)> = None;
        let mut sampled = Vec::with_capacity(config.neighbors_per_step);
        for _ in 0..config.neighbors_per_step {
            let Some((_, next)) = random_neighbor(&current, &problem.space, rng) else { break };
            let Some(e) = tally.evaluate(problem, next, observer)? else { break };
            let gain = archive.normalized_gain(&e.values);
            if best.as_ref().is_none_or(|(g, _)| gain > *g) {
                best = Some((gain, e.clone()));
            }
            sampled.push(e);
        }
        for e in sampled {
            archive.insert(e.id, e.values, e.design)?;
        }
        match best {
            Some((gain, e)) if gain > GAIN_EPS => {
                current = e.design.clone();
                trajectory.push(e);
            }
            _ => break,
        }
        if tally.exhausted() {
            break;
        }
    }
    Ok(LocalSearch { archive, trajectory })
}

/// Scores `meta_candidates` random valid designs with `model` and returns
/// the best (first on ties). `None` when the budget runs out first.
pub fn meta_select<R: Rng + ?Sized, O: Observer + ?Sized>(
    model: &RegressionTree,
    problem: &Problem,
    config: &StageConfig,
    rng: &mut R,
    observer: &mut O,
) -> Result<Option<Evaluated>, OptimizerError> {
    let mut tally = Tally::new(None);
    meta_select_with(model, problem, config, rng, &mut tally, observer)
}

pub(crate) fn meta_select_with<R: Rng + ?Sized, O: Observer + ?Sized>(
    model: &RegressionTree,
    problem: &Problem,
    config: &StageConfig,
    rng: &mut R,
    tally: &mut Tally,
    observer: &mut O,
) -> Result<Option<Evaluated>, OptimizerError> {
    let mut best: Option<(f64, Evaluated)> = None;
    for _ in 0..config.meta_candidates {
        let design = problem.random_design(rng)?;
        let Some(e) = tally.evaluate(problem, design, observer)? else { break };
        let score = model.predict(&problem.features(&e));
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, e));
        }
    }
    Ok(best.map(|(_, e)| e))
}

/// Runs MOO-STAGE from `initial` and returns the global Pareto archive.
pub fn moo_stage<O: Observer + ?Sized>(
    problem: &Problem,
    initial: &Design,
    config: &StageConfig,
    observer: &mut O,
) -> Result<SearchOutcome, OptimizerError> {
    config.validate()?;
    initial.validate(problem.space.max_degree).map_err(OptimizerError::InvalidInitial)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut tally = Tally::new(config.max_evaluations);
    let mut global = ParetoArchive::new(problem.reference.clone())?;
    let mut training = TrainingSet::new();
    let mut log = Vec::new();

    let Some(mut start) = tally.evaluate(problem, initial.clone(), observer)? else {
        return Ok(SearchOutcome { archive: global, evaluations: 0, log });
    };
    let mut previous: Option<f64> = None;
    let mut calm = 0;
    for iter in 0..config.max_iterations {
        let search = local_search_with(problem, start, config, &mut rng, &mut tally, observer)?;
        let local_phv = search.archive.normalized_hypervolume();
        for e in &search.trajectory {
            training.push(problem.features(e), local_phv).map_err(|_| OptimizerError::Config("bad features"))?;
        }
        global.merge(&search.archive)?;
        let phv = global.normalized_hypervolume();
        let record = IterationRecord {
            iter,
            global_phv: phv,
            archive_size: global.len(),
            evals_so_far: tally.evaluations,
        };
        observer.iteration(&record);
        log.push(record);

        if let Some(prev) = previous {
            let change = if prev > 0.0 { (phv - prev).abs() / prev } else if phv > 0.0 { 1.0 } else { 0.0 };
            calm = if change < config.convergence_eps { calm + 1 } else { 0 };
        }
        previous = Some(phv);
        if calm >= config.convergence_window || tally.exhausted() || iter + 1 == config.max_iterations {
            break;
        }

        let model = fit_tree(&training, config.max_depth).map_err(|_| OptimizerError::Config("empty training set"))?;
        match meta_select_with(&model, problem, config, &mut rng, &mut tally, observer)? {
            Some(next) => start = next,
            None => break,
        }
    }
    Ok(SearchOutcome { archive: global, evaluations: tally.evaluations, log })
}
