//! Search engines over the design space: MOO-STAGE (greedy local search
//! alternating with a regression-tree meta search) and the AMOSA baseline.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::arch::{sample_connected_links, ArchError, Design, TileKind, DEFAULT_LINK_ALPHA, DEFAULT_MAX_DEGREE};
use crate::objectives::{EvalContext, ObjectiveError, ObjectiveVector};
use crate::pareto::{reference_from_samples, ParetoError};
use crate::routing::{compute_routes, RoutingTable};

pub mod amosa;
pub mod perturb;
pub mod stage;
pub mod tree;

pub use amosa::{amosa, AmosaConfig};
pub use perturb::{random_neighbor, Perturbation};
pub use stage::{local_search, meta_select, moo_stage, StageConfig};
pub use tree::{fit_tree, RegressionTree, TrainingSet};

/// Random designs sampled to fix the hypervolume reference point.
pub const REFERENCE_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizerError {
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error(transparent)]
    Pareto(#[from] ParetoError),
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("initial design is invalid: {0}")]
    InvalidInitial(crate::arch::Violation),
}

/// Which parts of a design the search may change.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub max_degree: usize,
    /// Power-law exponent used when re-sampling links for random designs.
    pub alpha: f64,
    pub swap_tiles: bool,
    pub move_links: bool,
    /// Slots whose tile never moves.
    pub pinned_slots: Vec<usize>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            max_degree: DEFAULT_MAX_DEGREE,
            alpha: DEFAULT_LINK_ALPHA,
            swap_tiles: true,
            move_links: true,
            pinned_slots: Vec::new(),
        }
    }
}

impl SearchSpace {
    pub fn free_slots(&self, slot_count: usize) -> Vec<usize> {
        (0..slot_count).filter(|s| !self.pinned_slots.contains(s)).collect()
    }
}

/// A design together with its evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluated {
    pub id: usize,
    pub design: Design,
    pub objectives: ObjectiveVector,
    pub values: Vec<f64>,
    /// Mean CPU→LLC hops, mean link length (mm), max per-stack power share.
    pub structure: [f64; 3],
}

/// Optimisation problem shared by both engines: objectives, search space,
/// the design used as template for random restarts, and the fixed
/// hypervolume reference point.
#[derive(Debug, Clone)]
pub struct Problem {
    pub ctx: EvalContext,
    pub space: SearchSpace,
    pub template: Design,
    pub reference: Vec<f64>,
}

impl Problem {
    /// Fixes the reference point from [`REFERENCE_SAMPLES`] random valid
    /// designs drawn with `seed`.
    pub fn new(ctx: EvalContext, space: SearchSpace, template: Design, seed: u64) -> Result<Self, OptimizerError> {
        Self::with_reference_samples(ctx, space, template, seed, REFERENCE_SAMPLES)
    }

    pub fn with_reference_samples(
        ctx: EvalContext,
        space: SearchSpace,
        template: Design,
        seed: u64,
        samples: usize,
    ) -> Result<Self, OptimizerError> {
        template.validate(space.max_degree).map_err(OptimizerError::InvalidInitial)?;
        let mut problem = Problem { ctx, space, template, reference: Vec::new() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5_eed0_f4ef);
        let mut values = Vec::with_capacity(samples.max(1));
        for _ in 0..samples.max(1) {
            let d = problem.random_design(&mut rng)?;
            values.push(problem.ctx.evaluate(&d)?.to_vec());
        }
        problem.reference = reference_from_samples(&values);
        Ok(problem)
    }

    /// Problem with an explicit reference point.
    pub fn with_reference(ctx: EvalContext, space: SearchSpace, template: Design, reference: Vec<f64>) -> Self {
        Problem { ctx, space, template, reference }
    }

    /// Random valid design: free tiles shuffled over free slots and, when
    /// links may move, a fresh small-world link set. Otherwise wires stay at
    /// the template's router positions.
    pub fn random_design<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Design, OptimizerError> {
        let t = &self.template;
        let n = t.tile_count();
        let mut placement = t.placement().to_vec();
        if self.space.swap_tiles {
            let free = self.space.free_slots(n);
            let mut tiles: Vec<usize> = free.iter().map(|&s| placement[s]).collect();
            tiles.shuffle(rng);
            for (&s, tile) in free.iter().zip(tiles) {
                placement[s] = tile;
            }
        }
        let links = if self.space.move_links {
            let positions: Vec<[f64; 3]> =
                (0..n).map(|s| t.grid().position(s, self.ctx.tech.tile_footprint_scale)).collect();
            let slot_links =
                sample_connected_links(&positions, t.link_count(), self.space.alpha, self.space.max_degree, rng)?;
            slot_links.into_iter().map(|(a, b)| (placement[a], placement[b])).collect()
        } else {
            t.links()
                .iter()
                .map(|&(a, b)| (placement[t.slot_index_of(a)], placement[t.slot_index_of(b)]))
                .collect()
        };
        Ok(Design::from_parts(t.grid().clone(), placement, t.kinds().to_vec(), links)?)
    }

    pub fn evaluate(&self, id: usize, design: Design) -> Result<Evaluated, OptimizerError> {
        let table = compute_routes(&design, &self.ctx.tech).map_err(ObjectiveError::from)?;
        let objectives = self.ctx.evaluate_with_routes(&design, &table)?;
        let structure = structural_features(&design, &self.ctx, &table);
        Ok(Evaluated { id, values: objectives.to_vec(), design, objectives, structure })
    }

    /// Learner input: objectives normalised by the reference point followed
    /// by the structural features.
    pub fn features(&self, e: &Evaluated) -> Vec<f64> {
        let mut f: Vec<f64> = e.values.iter().zip(&self.reference).map(|(v, r)| v / r).collect();
        f.extend_from_slice(&e.structure);
        f
    }
}

fn structural_features(design: &Design, ctx: &EvalContext, table: &RoutingTable) -> [f64; 3] {
    let cpus: Vec<usize> = design.tiles_of(TileKind::Cpu).collect();
    let llcs: Vec<usize> = design.tiles_of(TileKind::Llc).collect();
    let pairs = (cpus.len() * llcs.len()) as f64;
    let hops = if pairs > 0.0 {
        cpus.iter().flat_map(|&c| llcs.iter().map(move |&l| (c, l))).map(|(c, l)| table.hops(c, l) as f64).sum::<f64>()
            / pairs
    } else {
        0.0
    };
    let lengths = design.link_lengths(&ctx.tech);
    let mean_len = if lengths.is_empty() { 0.0 } else { lengths.iter().sum::<f64>() / lengths.len() as f64 };
    let grid = design.grid();
    let stacks = grid.stack_count();
    let windows = ctx.power.window_count();
    let mut share = 0.0;
    for w in 0..windows {
        let watts = ctx.power.window(w);
        let total: f64 = watts.iter().sum();
        if total <= 0.0 {
            continue;
        }
        let mut per_stack = vec![0.0; stacks];
        for (slot, &tile) in design.placement().iter().enumerate() {
            per_stack[slot % stacks] += watts[tile];
        }
        share += per_stack.iter().fold(0.0f64, |a, &b| a.max(b)) / total;
    }
    if windows > 0 {
        share /= windows as f64;
    }
    [hops, mean_len, share]
}

/// One line of a run log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub global_phv: f64,
    pub archive_size: usize,
    pub evals_so_far: usize,
}

/// Hooks into a running search; both default to no-ops.
pub trait Observer {
    fn evaluated(&mut self, _e: &Evaluated) {}
    fn iteration(&mut self, _record: &IterationRecord) {}
}

impl Observer for () {}

/// Counts objective evaluations against an optional budget and hands out
/// design ids.
#[derive(Debug, Clone)]
pub(crate) struct Tally {
    pub evaluations: usize,
    pub limit: Option<usize>,
}

impl Tally {
    pub fn new(limit: Option<usize>) -> Self {
        Tally { evaluations: 0, limit }
    }

    pub fn exhausted(&self) -> bool {
        self.limit.is_some_and(|l| self.evaluations >= l)
    }

    /// Evaluates `design` unless the budget is spent.
    pub fn evaluate<O: Observer + ?Sized>(
        &mut self,
        problem: &Problem,
        design: Design,
        observer: &mut O,
    ) -> Result<Option<Evaluated>, OptimizerError> {
        if self.exhausted() {
            return Ok(None);
        }
        let e = problem.evaluate(self.evaluations, design)?;
        self.evaluations += 1;
        observer.evaluated(&e);
        Ok(Some(e))
    }
}

/// Final state of a search.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub archive: crate::pareto::ParetoArchive<Design>,
    pub evaluations: usize,
    pub log: Vec<IterationRecord>,
}
