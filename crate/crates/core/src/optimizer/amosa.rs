//! Archived multi-objective simulated annealing (AMOSA).
//!
//! The acceptance rules follow the three domination cases of the original
//! scheme; the amount of domination between two vectors is the product of
//! their absolute differences over the objectives where they differ,
//! measured in reference-normalised units.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{random_neighbor, Evaluated, IterationRecord, Observer, OptimizerError, Problem, SearchOutcome, Tally};
use crate::arch::Design;
use crate::math;
use crate::pareto::{dominates_unchecked, ArchiveEntry, ParetoArchive};

#[derive(Debug, Clone, PartialEq)]
pub struct AmosaConfig {
    /// Archive size that triggers clustering.
    pub soft_limit: usize,
    /// Archive size clustering reduces to.
    pub hard_limit: usize,
    /// Geometric cooling factor.
    pub cooling: f64,
    pub iters_per_temperature: usize,
    /// Starting temperature; calibrated from sampled moves when `None`.
    pub t_initial: Option<f64>,
    /// Moves sampled to calibrate the starting temperature.
    pub calibration_moves: usize,
    /// Mean acceptance probability of sampled moves at the start.
    pub target_acceptance: f64,
    /// Stop once the temperature falls below `t_initial * min_temperature_ratio`.
    pub min_temperature_ratio: f64,
    pub max_evaluations: usize,
    pub seed: u64,
}

impl Default for AmosaConfig {
    fn default() -> Self {
        AmosaConfig {
            soft_limit: 100,
            hard_limit: 50,
            cooling: 0.95,
            iters_per_temperature: 50,
            t_initial: None,
            calibration_moves: 20,
            target_acceptance: 0.48,
            min_temperature_ratio: 1e-12,
            max_evaluations: 10_000,
            seed: 0,
        }
    }
}

impl AmosaConfig {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        if self.hard_limit == 0 || self.soft_limit < self.hard_limit {
            return Err(OptimizerError::Config("need 1 <= hard_limit <= soft_limit"));
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(OptimizerError::Config("cooling must lie in (0, 1)"));
        }
        if self.iters_per_temperature == 0 || self.max_evaluations == 0 {
            return Err(OptimizerError::Config("amosa counts must be at least 1"));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 0.5) {
            return Err(OptimizerError::Config("target_acceptance must lie in (0, 0.5)"));
        }
        if self.t_initial.is_some_and(|t| !(t.is_finite() && t > 0.0)) {
            return Err(OptimizerError::Config("t_initial must be positive"));
        }
        Ok(())
    }
}

/// Amount of domination between two normalised vectors.
pub fn amount_of_domination(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).filter(|(x, y)| x != y).map(|(x, y)| (x - y).abs()).product()
}

/// Probability of accepting a move whose (average) amount of domination is
/// `delta` at `temperature`.
pub fn acceptance_probability(delta: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return if delta <= 0.0 { 0.5 } else { 0.0 };
    }
    1.0 / (1.0 + math::exp(delta / temperature))
}

/// Starting temperature at which a move of mean domination `mean_delta` is
/// accepted with probability `target`.
pub fn calibrated_temperature(mean_delta: f64, target: f64) -> f64 {
    if !(mean_delta > 0.0) {
        return 1.0;
    }
    mean_delta / math::ln(1.0 / target - 1.0)
}

struct Point {
    e: Evaluated,
    norm: Vec<f64>,
}

/// Runs AMOSA from `initial` and returns its archive (at most
/// `hard_limit` entries).
pub fn amosa<O: Observer + ?Sized>(
    problem: &Problem,
    initial: &Design,
    config: &AmosaConfig,
    observer: &mut O,
) -> Result<SearchOutcome, OptimizerError> {
    config.validate()?;
    initial.validate(problem.space.max_degree).map_err(OptimizerError::InvalidInitial)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut tally = Tally::new(Some(config.max_evaluations));
    let mut archive: ParetoArchive<Design> = ParetoArchive::new(problem.reference.clone())?;
    let mut log = Vec::new();
    let normalize = |v: &[f64]| -> Vec<f64> { v.iter().zip(&problem.reference).map(|(x, r)| x / r).collect() };

    let Some(first) = tally.evaluate(problem, initial.clone(), observer)? else {
        return Ok(SearchOutcome { archive, evaluations: 0, log });
    };
    archive.insert(first.id, first.values.clone(), first.design.clone())?;
    let mut current = Point { norm: normalize(&first.values), e: first };

    let t0 = match config.t_initial {
        Some(t) => t,
        None => {
            let mut deltas = Vec::new();
            for _ in 0..config.calibration_moves {
                let Some((_, d)) = random_neighbor(&current.e.design, &problem.space, &mut rng) else { break };
                let Some(e) = tally.evaluate(problem, d, observer)? else { break };
                deltas.push(amount_of_domination(&current.norm, &normalize(&e.values)));
            }
            let mean = if deltas.is_empty() { 0.0 } else { deltas.iter().sum::<f64>() / deltas.len() as f64 };
            calibrated_temperature(mean, config.target_acceptance)
        }
    };

    let mut temperature = t0;
    let mut level = 0;
    'anneal: while temperature >= t0 * config.min_temperature_ratio {
        for _ in 0..config.iters_per_temperature {
            let Some((_, d)) = random_neighbor(&current.e.design, &problem.space, &mut rng) else { break 'anneal };
            let Some(e) = tally.evaluate(problem, d, observer)? else { break 'anneal };
            let new = Point { norm: normalize(&e.values), e };
            step(&mut current, new, &mut archive, problem, config, temperature, &mut rng, &normalize)?;
        }
        let record = IterationRecord {
            iter: level,
            global_phv: archive.normalized_hypervolume(),
            archive_size: archive.len(),
            evals_so_far: tally.evaluations,
        };
        observer.iteration(&record);
        log.push(record);
        level += 1;
        temperature *= config.cooling;
        if tally.exhausted() {
            break;
        }
    }
    if archive.len() > config.hard_limit {
        cluster(&mut archive, config.hard_limit, &normalize);
    }
    let record = IterationRecord {
        iter: level,
        global_phv: archive.normalized_hypervolume(),
        archive_size: archive.len(),
        evals_so_far: tally.evaluations,
    };
    observer.iteration(&record);
    log.push(record);
    Ok(SearchOutcome { archive, evaluations: tally.evaluations, log })
}

#[allow(clippy::too_many_arguments)]
fn step<R: Rng + ?Sized, F: Fn(&[f64]) -> Vec<f64>>(
    current: &mut Point,
    new: Point,
    archive: &mut ParetoArchive<Design>,
    problem: &Problem,
    config: &AmosaConfig,
    temperature: f64,
    rng: &mut R,
    normalize: &F,
) -> Result<(), OptimizerError> {
    // archive members at least as good as the new point, with their domination amounts
    let dominating: Vec<(usize, f64)> = archive
        .entries()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.objectives.iter().zip(&new.e.values).all(|(x, y)| x <= y))
        .map(|(i, a)| (i, amount_of_domination(&normalize(&a.objectives), &new.norm)))
        .collect();
    let k = dominating.len();

    if dominates_unchecked(&current.e.values, &new.e.values) {
        let total: f64 = dominating.iter().map(|(_, d)| d).sum::<f64>() + amount_of_domination(&current.norm, &new.norm);
        let avg = total / (k + 1) as f64;
        if rng.gen::<f64>() < acceptance_probability(avg, temperature) {
            *current = new;
        }
    } else if dominates_unchecked(&new.e.values, &current.e.values) {
        if k > 0 {
            let &(idx, min) = dominating
                .iter()
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .expect("k > 0");
            if rng.gen::<f64>() < 1.0 / (1.0 + math::exp(-min)) {
                let a = &archive.entries()[idx];
                let e = problem.evaluate(a.id, a.item.clone())?;
                *current = Point { norm: normalize(&e.values), e };
            } else {
                *current = new;
            }
        } else {
            archive.insert(new.e.id, new.e.values.clone(), new.e.design.clone())?;
            *current = new;
            trim(archive, config, normalize);
        }
    } else if k > 0 {
        let avg = dominating.iter().map(|(_, d)| d).sum::<f64>() / k as f64;
        if rng.gen::<f64>() < acceptance_probability(avg, temperature) {
            *current = new;
        }
    } else {
        archive.insert(new.e.id, new.e.values.clone(), new.e.design.clone())?;
        *current = new;
        trim(archive, config, normalize);
    }
    Ok(())
}

fn trim<F: Fn(&[f64]) -> Vec<f64>>(archive: &mut ParetoArchive<Design>, config: &AmosaConfig, normalize: &F) {
    if archive.len() > config.soft_limit {
        cluster(archive, config.hard_limit, normalize);
    }
}

/// Single-linkage clustering down to `target` clusters; each cluster keeps
/// its medoid.
fn cluster<T, F: Fn(&[f64]) -> Vec<f64>>(archive: &mut ParetoArchive<T>, target: usize, normalize: &F) {
    let points: Vec<Vec<f64>> = archive.entries().iter().map(|e| normalize(&e.objectives)).collect();
    let keep = cluster_representatives(&points, target);
    let ids: Vec<usize> = keep.iter().map(|&i| archive.entries()[i].id).collect();
    archive.retain(|e: &ArchiveEntry<T>| ids.contains(&e.id));
}

/// Indices of the representatives of a single-linkage clustering of
/// `points` into `target` clusters.
pub fn cluster_representatives(points: &[Vec<f64>], target: usize) -> Vec<usize> {
    let n = points.len();
    if n <= target {
        return (0..n).collect();
    }
    let dist = |a: &[f64], b: &[f64]| math::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum());
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = dist(&points[i], &points[j]);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut alive = vec![true; n];
    let mut cd = d.clone();
    let mut clusters = n;
    while clusters > target {
        let mut best = (f64::INFINITY, 0, 0);
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            for j in (i + 1)..n {
                if alive[j] && cd[i][j] < best.0 {
                    best = (cd[i][j], i, j);
                }
            }
        }
        let (_, i, j) = best;
        let moved = core::mem::take(&mut members[j]);
        members[i].extend(moved);
        alive[j] = false;
        for m in 0..n {
            if alive[m] && m != i {
                let v = cd[i][m].min(cd[j][m]);
                cd[i][m] = v;
                cd[m][i] = v;
            }
        }
        clusters -= 1;
    }
    let mut reps: Vec<usize> = members
        .iter()
        .zip(&alive)
        .filter(|(_, &a)| a)
        .map(|(group, _)| {
            *group
                .iter()
                .min_by(|&&a, &&b| {
                    let sa: f64 = group.iter().map(|&o| d[a][o]).sum();
                    let sb: f64 = group.iter().map(|&o| d[b][o]).sum();
                    sa.total_cmp(&sb).then(a.cmp(&b))
                })
                .expect("clusters are non-empty")
        })
        .collect();
    reps.sort_unstable();
    reps
}
