//! Instances and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;

use hem3d_core::arch::{build_design, DesignSpec, Design, GridSpec, Technology, TileKind, TileMix};
use hem3d_core::objectives::{EvalContext, Mode};
use hem3d_core::optimizer::{Problem, SearchSpace};
use hem3d_core::traffic::{synth_many_to_few, SynthParams};

pub fn approx(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

/// A random valid design on a small grid; the grid shape and mix are drawn
/// from `seed` as well.
pub fn small_design(seed: u64) -> Design {
    let tiers = 1 + (seed % 3) as usize;
    let rows = 2 + (seed / 3 % 2) as usize;
    let cols = 2 + (seed / 6 % 2) as usize;
    let n = tiers * rows * cols;
    let cpu = 1 + (seed / 12 % 2) as usize;
    let llc = 1 + (seed / 24 % 2) as usize;
    let spec = DesignSpec {
        grid: GridSpec::new(tiers, rows, cols, 0.1, 2.0).unwrap(),
        mix: TileMix::new(cpu, llc, n - cpu - llc),
        link_count: None,
        alpha: 1.8,
        max_degree: 7,
    };
    build_design(&spec, &Technology::tsv(), seed).unwrap()
}

/// Hop counts by plain BFS over the link list.
pub fn bfs_hops(design: &Design) -> Vec<Vec<u32>> {
    let n = design.tile_count();
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in design.links() {
        adj[a].push(b);
        adj[b].push(a);
    }
    (0..n)
        .map(|s| {
            let mut dist = vec![u32::MAX; n];
            dist[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(v) = q.pop_front() {
                for &w in &adj[v] {
                    if dist[w] == u32::MAX {
                        dist[w] = dist[v] + 1;
                        q.push_back(w);
                    }
                }
            }
            dist
        })
        .collect()
}

/// Pairwise non-dominated filter with duplicates collapsed.
pub fn brute_front(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dominated = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x <= y) && a != b;
    let mut out: Vec<Vec<f64>> = Vec::new();
    for p in points {
        if points.iter().any(|q| dominated(q, p)) || out.contains(p) {
            continue;
        }
        out.push(p.clone());
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// The 8-tile toy: 2 tiers of 2x2, the 12 mesh links, four GPUs pinned on
/// tier 0 and one CPU, one LLC and two GPUs free on tier 1.
pub fn toy_design() -> Design {
    let grid = GridSpec::new(2, 2, 2, 0.1, 2.0).unwrap();
    let kinds = vec![
        TileKind::Gpu,
        TileKind::Gpu,
        TileKind::Gpu,
        TileKind::Gpu,
        TileKind::Cpu,
        TileKind::Llc,
        TileKind::Gpu,
        TileKind::Gpu,
    ];
    let mut links = Vec::new();
    for s in 0..8usize {
        let (t, r, c) = (s / 4, s / 2 % 2, s % 2);
        if c == 0 {
            links.push((s, s + 1));
        }
        if r == 0 {
            links.push((s, s + 2));
        }
        if t == 0 {
            links.push((s, s + 4));
        }
    }
    Design::from_parts(grid, (0..8).collect(), kinds, links).unwrap()
}

pub fn toy_space() -> SearchSpace {
    SearchSpace { move_links: false, pinned_slots: vec![0, 1, 2, 3], ..SearchSpace::default() }
}

pub fn toy_context(mode: Mode) -> EvalContext {
    let d = toy_design();
    let (traffic, power) = synth_many_to_few(&d, &SynthParams { windows: 4, seed: 3, ..SynthParams::default() }).unwrap();
    EvalContext::new(Technology::tsv().with_tiers(2), traffic, power, mode)
}

pub fn toy_problem(mode: Mode) -> Problem {
    Problem::new(toy_context(mode), toy_space(), toy_design(), 11).unwrap()
}

/// All 24 arrangements of the four free tiles.
pub fn toy_enumeration() -> Vec<Design> {
    let base = toy_design();
    let mut out = Vec::new();
    let free = [4usize, 5, 6, 7];
    for perm in permutations(&free) {
        let mut placement: Vec<usize> = (0..8).collect();
        for (slot, tile) in free.iter().zip(&perm) {
            placement[*slot] = *tile;
        }
        // wires stay at router positions
        let links = base.links().iter().map(|&(a, b)| (placement[a], placement[b])).collect();
        out.push(Design::from_parts(base.grid().clone(), placement, base.kinds().to_vec(), links).unwrap());
    }
    out
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}
