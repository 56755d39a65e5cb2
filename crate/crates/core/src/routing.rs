//! Deterministic single-path routing over a design's link graph.
//!
//! The route between two tiles is hop-minimal; ties go to the shortest total
//! wire length, then to the lexicographically smallest vertex sequence
//! walked from the lower tile id. The reverse direction reuses the same path.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::arch::{Design, Technology};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoutingError {
    #[error("tile {0} cannot reach tile {1}")]
    Disconnected(usize, usize),
    #[error("unknown tile id {0}")]
    UnknownTile(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutingTable {
    tiles: usize,
    hops: Vec<u32>,
    dist: Vec<f64>,
    // canonical pairs (i < j) only, flattened
    offsets: Vec<u32>,
    vertices: Vec<u32>,
    links: Vec<u32>,
}

impl RoutingTable {
    pub fn tiles(&self) -> usize {
        self.tiles
    }

    fn pair(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        // index of (a, b) in row-major enumeration of the upper triangle
        a * (2 * self.tiles - a - 1) / 2 + (b - a - 1)
    }

    fn check(&self, tile: usize) -> Result<(), RoutingError> {
        if tile < self.tiles {
            Ok(())
        } else {
            Err(RoutingError::UnknownTile(tile))
        }
    }

    /// Hop count from `i` to `j`.
    pub fn hops(&self, i: usize, j: usize) -> u32 {
        self.hops[i * self.tiles + j]
    }

    /// Summed Euclidean wire length (mm) along the route.
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.tiles + j]
    }

    /// Link ids along the route from `i` to `j`, in travel order.
    pub fn path_links(&self, i: usize, j: usize) -> Vec<usize> {
        if i == j {
            return Vec::new();
        }
        let p = self.pair(i, j);
        let slice = &self.links[self.offsets[p] as usize..self.offsets[p + 1] as usize];
        let mut out: Vec<usize> = slice.iter().map(|&l| l as usize).collect();
        if i > j {
            out.reverse();
        }
        out
    }

    /// Link ids on the route, unordered; cheaper than [`Self::path_links`].
    pub fn route_link_ids(&self, i: usize, j: usize) -> &[u32] {
        if i == j {
            return &[];
        }
        let p = self.pair(i, j);
        &self.links[self.offsets[p] as usize..self.offsets[p + 1] as usize]
    }

    /// Tiles visited from `i` to `j`, both endpoints included.
    pub fn path(&self, i: usize, j: usize) -> Vec<usize> {
        if i == j {
            return vec![i];
        }
        let p = self.pair(i, j);
        let start = self.offsets[p] as usize + p;
        let end = self.offsets[p + 1] as usize + p + 1;
        let mut out: Vec<usize> = self.vertices[start..end].iter().map(|&v| v as usize).collect();
        if i > j {
            out.reverse();
        }
        out
    }

    /// `q_ijk`: whether link `k` carries traffic from `i` to `j`.
    pub fn uses_link(&self, i: usize, j: usize, link: usize) -> bool {
        self.route_link_ids(i, j).iter().any(|&l| l as usize == link)
    }
}

/// Computes the route of every ordered tile pair.
pub fn compute_routes(design: &Design, tech: &Technology) -> Result<RoutingTable, RoutingError> {
    let n = design.tile_count();
    let adj = design.adjacency();
    let lengths = design.link_lengths(tech);

    let pairs = n * n.saturating_sub(1) / 2;
    let mut hops = vec![0u32; n * n];
    let mut dist = vec![0.0f64; n * n];
    let mut offsets = Vec::with_capacity(pairs + 1);
    let mut links_flat = Vec::new();
    let mut vertices_flat = Vec::new();

    // Per-target tables, filled once per target and reused by all sources
    // below it. Paths for pair (i, j), i < j, are walked towards j.
    let mut level = vec![u32::MAX; n];
    let mut best = vec![f64::INFINITY; n];
    let mut order = Vec::with_capacity(n);
    let mut by_target: Vec<(Vec<u32>, Vec<f64>)> = Vec::with_capacity(n);
    for target in 0..n {
        level.iter_mut().for_each(|l| *l = u32::MAX);
        best.iter_mut().for_each(|b| *b = f64::INFINITY);
        order.clear();
        let mut queue = VecDeque::from([target]);
        level[target] = 0;
        best[target] = 0.0;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &(w, _) in &adj[v] {
                if level[w] == u32::MAX {
                    level[w] = level[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        if order.len() != n {
            let missing = level.iter().position(|&l| l == u32::MAX).unwrap_or(0);
            return Err(RoutingError::Disconnected(missing, target));
        }
        for &v in order.iter().skip(1) {
            let mut m = f64::INFINITY;
            for &(w, k) in &adj[v] {
                if level[w] + 1 == level[v] {
                    let cand = lengths[k] + best[w];
                    if cand < m {
                        m = cand;
                    }
                }
            }
            best[v] = m;
        }
        by_target.push((level.clone(), best.clone()));
    }

    for i in 0..n {
        for j in (i + 1)..n {
            let (lvl, len) = &by_target[j];
            offsets.push(links_flat.len() as u32);
            vertices_flat.push(i as u32);
            let mut v = i;
            while v != j {
                // smallest-id neighbour that keeps the path hop- and length-optimal
                let &(w, k) = adj[v]
                    .iter()
                    .find(|&&(w, k)| lvl[w] + 1 == lvl[v] && lengths[k] + len[w] == len[v])
                    .expect("optimal successor exists on a connected graph");
                links_flat.push(k as u32);
                vertices_flat.push(w as u32);
                v = w;
            }
            hops[i * n + j] = lvl[i];
            hops[j * n + i] = lvl[i];
            dist[i * n + j] = len[i];
            dist[j * n + i] = len[i];
        }
    }
    offsets.push(links_flat.len() as u32);

    Ok(RoutingTable { tiles: n, hops, dist, offsets, vertices: vertices_flat, links: links_flat })
}

/// `d_ij`: wire delay in NoC cycles along the route from `i` to `j`.
pub fn link_delay(table: &RoutingTable, tech: &Technology, i: usize, j: usize) -> Result<f64, RoutingError> {
    table.check(i)?;
    table.check(j)?;
    Ok(table.dist(i, j) * tech.link_delay_per_mm)
}
