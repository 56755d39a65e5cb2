//! Chip model: tiles, the tiered grid they sit on, NoC links, and the
//! physical parameters that distinguish monolithic (M3D) from TSV stacking.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::math;

/// Default exponent of the distance power law used when sampling links.
pub const DEFAULT_LINK_ALPHA: f64 = 1.8;
/// Default router radix limit (six mesh-like ports plus one spare).
pub const DEFAULT_MAX_DEGREE: usize = 7;
/// Default planar tile pitch in millimetres.
pub const DEFAULT_CELL_PITCH_MM: f64 = 2.0;
/// Sampling attempts before link generation gives up.
pub const LINK_SAMPLING_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArchError {
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("invalid technology: {0}")]
    InvalidTechnology(&'static str),
    #[error("unknown tile id {0}")]
    UnknownTile(usize),
    #[error("tile mix of {mix} tiles does not fill {slots} grid slots")]
    MixMismatch { mix: usize, slots: usize },
    #[error("malformed design: {0}")]
    Malformed(&'static str),
    #[error("link ({0}, {1}) is not present")]
    MissingLink(usize, usize),
    #[error("link ({0}, {1}) cannot be added")]
    BadLink(usize, usize),
    #[error("could not sample a connected, degree-feasible link set in {attempts} attempts")]
    SamplingFailed { attempts: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TileKind {
    Cpu,
    Gpu,
    Llc,
}

impl TileKind {
    pub const ALL: [TileKind; 3] = [TileKind::Cpu, TileKind::Gpu, TileKind::Llc];

    pub fn as_str(self) -> &'static str {
        match self {
            TileKind::Cpu => "cpu",
            TileKind::Gpu => "gpu",
            TileKind::Llc => "llc",
        }
    }
}

impl fmt::Display for TileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TileKind {
    type Err = ArchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cpu" | "CPU" | "Cpu" => Ok(TileKind::Cpu),
            "gpu" | "GPU" | "Gpu" => Ok(TileKind::Gpu),
            "llc" | "LLC" | "Llc" => Ok(TileKind::Llc),
            _ => Err(ArchError::Malformed("unknown tile kind")),
        }
    }
}

/// Number of tiles of each kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TileMix {
    pub cpu: usize,
    pub llc: usize,
    pub gpu: usize,
}

impl TileMix {
    pub const fn new(cpu: usize, llc: usize, gpu: usize) -> Self {
        TileMix { cpu, llc, gpu }
    }

    pub fn total(&self) -> usize {
        self.cpu + self.llc + self.gpu
    }

    pub fn count(&self, kind: TileKind) -> usize {
        match kind {
            TileKind::Cpu => self.cpu,
            TileKind::Gpu => self.gpu,
            TileKind::Llc => self.llc,
        }
    }
}

/// A position on the grid. Tier 0 is the tier adjacent to the heat sink.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slot {
    pub tier: usize,
    pub row: usize,
    pub col: usize,
}

impl Slot {
    pub const fn new(tier: usize, row: usize, col: usize) -> Self {
        Slot { tier, row, col }
    }
}

/// Tiered grid geometry. Slots are indexed tier-major, then row, then column.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub tiers: usize,
    pub rows: usize,
    pub cols: usize,
    /// Vertical distance between adjacent tiers (mm).
    pub tier_pitch: f64,
    /// Planar tile pitch (mm) before any footprint scaling.
    pub cell_pitch: f64,
}

impl GridSpec {
    pub fn new(
        tiers: usize,
        rows: usize,
        cols: usize,
        tier_pitch: f64,
        cell_pitch: f64,
    ) -> Result<Self, ArchError> {
        let grid = GridSpec { tiers, rows, cols, tier_pitch, cell_pitch };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<(), ArchError> {
        if self.tiers == 0 || self.rows == 0 || self.cols == 0 {
            return Err(ArchError::InvalidGrid("tiers, rows and cols must be at least 1"));
        }
        if !(self.tier_pitch.is_finite() && self.tier_pitch > 0.0) {
            return Err(ArchError::InvalidGrid("tier pitch must be positive"));
        }
        if !(self.cell_pitch.is_finite() && self.cell_pitch > 0.0) {
            return Err(ArchError::InvalidGrid("cell pitch must be positive"));
        }
        Ok(())
    }

    pub fn slot_count(&self) -> usize {
        self.tiers * self.rows * self.cols
    }

    /// Number of vertical stacks (one per planar position).
    pub fn stack_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn slot(&self, index: usize) -> Slot {
        let per_tier = self.rows * self.cols;
        let tier = index / per_tier;
        let rem = index % per_tier;
        Slot::new(tier, rem / self.cols, rem % self.cols)
    }

    pub fn slot_index(&self, slot: Slot) -> Option<usize> {
        if slot.tier >= self.tiers || slot.row >= self.rows || slot.col >= self.cols {
            return None;
        }
        Some((slot.tier * self.rows + slot.row) * self.cols + slot.col)
    }

    pub fn stack_of(&self, slot_index: usize) -> usize {
        slot_index % (self.rows * self.cols)
    }

    /// Edge count of the 3D mesh spanning this grid.
    pub fn mesh_link_count(&self) -> usize {
        let (t, r, c) = (self.tiers, self.rows, self.cols);
        t * r * (c - 1) + t * (r - 1) * c + (t - 1) * r * c
    }

    /// Physical position (mm) of a slot under a planar footprint scale.
    pub fn position(&self, slot_index: usize, footprint_scale: f64) -> [f64; 3] {
        let s = self.slot(slot_index);
        let planar = self.cell_pitch * footprint_scale;
        [s.col as f64 * planar, s.row as f64 * planar, s.tier as f64 * self.tier_pitch]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TechKind {
    M3d,
    Tsv,
}

impl TechKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TechKind::M3d => "m3d",
            TechKind::Tsv => "tsv",
        }
    }
}

impl fmt::Display for TechKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TechKind {
    type Err = ArchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "m3d" | "M3D" | "M3d" => Ok(TechKind::M3d),
            "tsv" | "TSV" | "Tsv" => Ok(TechKind::Tsv),
            _ => Err(ArchError::InvalidTechnology("unknown technology name")),
        }
    }
}

/// Physical parameters of one integration technology.
#[derive(Debug, Clone, PartialEq)]
pub struct Technology {
    pub kind: TechKind,
    /// Vertical thermal resistance of each tier, sink side first (K/W).
    pub r_tier: Vec<f64>,
    /// Thermal resistance of the base layer (K/W).
    pub r_base: f64,
    /// Multiplicative lateral heat-flow factor on the stack temperature rise.
    pub lateral_factor: f64,
    /// Wire delay in NoC cycles per millimetre.
    pub link_delay_per_mm: f64,
    /// Router pipeline depth.
    pub router_stages: u32,
    pub cpu_freq_ghz: f64,
    pub gpu_freq_ghz: f64,
    pub llc_latency_scale: f64,
    /// Multiplier applied to raw tile power.
    pub power_scale: f64,
    /// Planar dimension multiplier from splitting a tile over several tiers.
    pub tile_footprint_scale: f64,
}

/// Net-length scale obtained by spreading a block over `tiers` tiers.
pub fn footprint_scale(tiers: u32) -> f64 {
    1.0 / math::sqrt(tiers.max(1) as f64)
}

impl Technology {
    /// Monolithic 3D preset for a four-tier stack.
    pub fn m3d() -> Self {
        Technology {
            kind: TechKind::M3d,
            r_tier: vec![0.5; 4],
            r_base: 0.8,
            lateral_factor: 1.0,
            link_delay_per_mm: 1.0,
            router_stages: 3,
            cpu_freq_ghz: 2.28,
            gpu_freq_ghz: 0.77,
            llc_latency_scale: 1.0 - 0.233,
            power_scale: 0.79,
            tile_footprint_scale: footprint_scale(2),
        }
    }

    /// TSV preset for a four-tier stack.
    pub fn tsv() -> Self {
        Technology {
            kind: TechKind::Tsv,
            r_tier: vec![1.2; 4],
            r_base: 0.8,
            lateral_factor: 1.0,
            link_delay_per_mm: 1.0,
            router_stages: 3,
            cpu_freq_ghz: 2.0,
            gpu_freq_ghz: 0.7,
            llc_latency_scale: 1.0,
            power_scale: 1.0,
            tile_footprint_scale: 1.0,
        }
    }

    pub fn preset(kind: TechKind) -> Self {
        match kind {
            TechKind::M3d => Self::m3d(),
            TechKind::Tsv => Self::tsv(),
        }
    }

    /// Default inter-tier distance: a thin inter-layer dielectric for M3D,
    /// a bonded die for TSV.
    pub fn default_tier_pitch(&self) -> f64 {
        match self.kind {
            TechKind::M3d => 0.001,
            TechKind::Tsv => 0.05,
        }
    }

    /// Copy whose per-tier resistances cover `tiers` tiers: truncated, or
    /// extended by repeating the last value.
    pub fn with_tiers(&self, tiers: usize) -> Self {
        let mut tech = self.clone();
        let last = tech.r_tier.last().copied().unwrap_or(1.0);
        tech.r_tier.resize(tiers, last);
        tech
    }

    pub fn validate(&self) -> Result<(), ArchError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.r_tier.is_empty() || !self.r_tier.iter().all(|&r| positive(r)) {
            return Err(ArchError::InvalidTechnology("tier resistances must be positive"));
        }
        if !positive(self.r_base) {
            return Err(ArchError::InvalidTechnology("base resistance must be positive"));
        }
        if !positive(self.lateral_factor) {
            return Err(ArchError::InvalidTechnology("lateral factor must be positive"));
        }
        if !positive(self.link_delay_per_mm) {
            return Err(ArchError::InvalidTechnology("link delay must be positive"));
        }
        if self.router_stages == 0 {
            return Err(ArchError::InvalidTechnology("router stages must be at least 1"));
        }
        if !positive(self.cpu_freq_ghz) || !positive(self.gpu_freq_ghz) {
            return Err(ArchError::InvalidTechnology("frequencies must be positive"));
        }
        if !(positive(self.llc_latency_scale) && self.llc_latency_scale <= 1.0) {
            return Err(ArchError::InvalidTechnology("llc latency scale must be in (0, 1]"));
        }
        if !(positive(self.power_scale) && self.power_scale <= 1.0) {
            return Err(ArchError::InvalidTechnology("power scale must be in (0, 1]"));
        }
        if !(positive(self.tile_footprint_scale) && self.tile_footprint_scale <= 1.0) {
            return Err(ArchError::InvalidTechnology("footprint scale must be in (0, 1]"));
        }
        Ok(())
    }
}

/// First invariant a candidate design violates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Slot-to-tile placement is not a bijection.
    Placement { slot: usize },
    SelfLoop { tile: usize },
    DuplicateLink { a: usize, b: usize },
    /// Tile not reachable from tile 0.
    Connectivity { unreachable: usize },
    Degree { tile: usize, degree: usize, max: usize },
}

impl Violation {
    pub fn name(&self) -> &'static str {
        match self {
            Violation::Placement { .. } => "placement",
            Violation::SelfLoop { .. } => "self-loop",
            Violation::DuplicateLink { .. } => "duplicate-link",
            Violation::Connectivity { .. } => "connectivity",
            Violation::Degree { .. } => "degree",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Placement { slot } => write!(f, "placement: slot {slot} breaks the bijection"),
            Violation::SelfLoop { tile } => write!(f, "self-loop: link on tile {tile}"),
            Violation::DuplicateLink { a, b } => write!(f, "duplicate-link: ({a}, {b})"),
            Violation::Connectivity { unreachable } => {
                write!(f, "connectivity: tile {unreachable} is unreachable")
            }
            Violation::Degree { tile, degree, max } => {
                write!(f, "degree: tile {tile} has {degree} links (max {max})")
            }
        }
    }
}

/// A candidate architecture: tile placement on the grid plus the NoC links.
///
/// Links are unordered tile-id pairs stored as `(min, max)` and kept sorted,
/// so the link at index `k` is link id `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    grid: GridSpec,
    tile_at_slot: Vec<usize>,
    slot_of_tile: Vec<usize>,
    kinds: Vec<TileKind>,
    links: Vec<(usize, usize)>,
}

impl Design {
    /// Assembles a design from raw parts. Only shape is checked here (array
    /// lengths, ids in range); semantic invariants are reported by
    /// [`Design::validate`].
    pub fn from_parts(
        grid: GridSpec,
        tile_at_slot: Vec<usize>,
        kinds: Vec<TileKind>,
        links: Vec<(usize, usize)>,
    ) -> Result<Self, ArchError> {
        grid.validate()?;
        let n = grid.slot_count();
        if tile_at_slot.len() != n {
            return Err(ArchError::Malformed("placement must cover every slot"));
        }
        if kinds.len() != n {
            return Err(ArchError::Malformed("one kind per tile is required"));
        }
        let mut slot_of_tile = vec![usize::MAX; n];
        for (slot, &tile) in tile_at_slot.iter().enumerate() {
            if tile >= n {
                return Err(ArchError::UnknownTile(tile));
            }
            slot_of_tile[tile] = slot;
        }
        let mut links: Vec<(usize, usize)> = links
            .into_iter()
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect();
        if let Some(&(_, b)) = links.iter().find(|&&(_, b)| b >= n) {
            return Err(ArchError::UnknownTile(b));
        }
        links.sort_unstable();
        Ok(Design { grid, tile_at_slot, slot_of_tile, kinds, links })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn tile_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn kinds(&self) -> &[TileKind] {
        &self.kinds
    }

    pub fn kind(&self, tile: usize) -> TileKind {
        self.kinds[tile]
    }

    pub fn tiles_of(&self, kind: TileKind) -> impl Iterator<Item = usize> + '_ {
        self.kinds
            .iter()
            .enumerate()
            .filter(move |(_, &k)| k == kind)
            .map(|(i, _)| i)
    }

    pub fn mix(&self) -> TileMix {
        let mut mix = TileMix::default();
        for &k in &self.kinds {
            match k {
                TileKind::Cpu => mix.cpu += 1,
                TileKind::Gpu => mix.gpu += 1,
                TileKind::Llc => mix.llc += 1,
            }
        }
        mix
    }

    pub fn placement(&self) -> &[usize] {
        &self.tile_at_slot
    }

    pub fn tile_at(&self, slot_index: usize) -> usize {
        self.tile_at_slot[slot_index]
    }

    pub fn slot_index_of(&self, tile: usize) -> usize {
        self.slot_of_tile[tile]
    }

    pub fn slot_of(&self, tile: usize) -> Slot {
        self.grid.slot(self.slot_of_tile[tile])
    }

    pub fn links(&self) -> &[(usize, usize)] {
        &self.links
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn has_link(&self, a: usize, b: usize) -> bool {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.links.binary_search(&key).is_ok()
    }

    pub fn link_id(&self, a: usize, b: usize) -> Option<usize> {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.links.binary_search(&key).ok()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.tile_count()];
        for &(a, b) in &self.links {
            deg[a] += 1;
            if a != b {
                deg[b] += 1;
            }
        }
        deg
    }

    /// Neighbour lists `(neighbour, link id)` sorted by neighbour id.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.tile_count()];
        for (k, &(a, b)) in self.links.iter().enumerate() {
            if a == b {
                continue;
            }
            adj[a].push((b, k));
            adj[b].push((a, k));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Physical position (mm) of a tile under `tech`'s footprint scale.
    pub fn coordinates(&self, tech: &Technology, tile: usize) -> Result<[f64; 3], ArchError> {
        if tile >= self.tile_count() {
            return Err(ArchError::UnknownTile(tile));
        }
        Ok(self.grid.position(self.slot_of_tile[tile], tech.tile_footprint_scale))
    }

    /// Euclidean length (mm) of every link, indexed by link id.
    pub fn link_lengths(&self, tech: &Technology) -> Vec<f64> {
        let pos: Vec<[f64; 3]> = (0..self.tile_count())
            .map(|t| self.grid.position(self.slot_of_tile[t], tech.tile_footprint_scale))
            .collect();
        self.links.iter().map(|&(a, b)| distance(&pos[a], &pos[b])).collect()
    }

    pub fn is_connected(&self) -> bool {
        first_unreachable(self.tile_count(), &self.links).is_none()
    }

    /// Checks every design invariant and reports the first one violated.
    pub fn validate(&self, max_degree: usize) -> Result<(), Violation> {
        for (slot, &tile) in self.tile_at_slot.iter().enumerate() {
            if self.slot_of_tile[tile] != slot {
                return Err(Violation::Placement { slot });
            }
        }
        for &(a, b) in &self.links {
            if a == b {
                return Err(Violation::SelfLoop { tile: a });
            }
        }
        for pair in self.links.windows(2) {
            if pair[0] == pair[1] {
                return Err(Violation::DuplicateLink { a: pair[0].0, b: pair[0].1 });
            }
        }
        if let Some(unreachable) = first_unreachable(self.tile_count(), &self.links) {
            return Err(Violation::Connectivity { unreachable });
        }
        for (tile, degree) in self.degrees().into_iter().enumerate() {
            if degree > max_degree {
                return Err(Violation::Degree { tile, degree, max: max_degree });
            }
        }
        Ok(())
    }

    /// Exchanges the tiles sitting at two slots. Wires stay attached to the
    /// router positions, so link endpoints are relabelled accordingly.
    pub fn swap_slots(&mut self, slot_a: usize, slot_b: usize) {
        if slot_a == slot_b {
            return;
        }
        let ta = self.tile_at_slot[slot_a];
        let tb = self.tile_at_slot[slot_b];
        self.tile_at_slot.swap(slot_a, slot_b);
        self.slot_of_tile[ta] = slot_b;
        self.slot_of_tile[tb] = slot_a;
        let relabel = |t: usize| {
            if t == ta {
                tb
            } else if t == tb {
                ta
            } else {
                t
            }
        };
        for link in &mut self.links {
            let (a, b) = (relabel(link.0), relabel(link.1));
            *link = if a <= b { (a, b) } else { (b, a) };
        }
        self.links.sort_unstable();
    }

    /// Replaces link `old` by the currently absent link `new`.
    pub fn move_link(&mut self, old: (usize, usize), new: (usize, usize)) -> Result<(), ArchError> {
        let idx = self.link_id(old.0, old.1).ok_or(ArchError::MissingLink(old.0, old.1))?;
        let n = self.tile_count();
        if new.0 == new.1 || new.0 >= n || new.1 >= n || self.has_link(new.0, new.1) {
            return Err(ArchError::BadLink(new.0, new.1));
        }
        self.links.remove(idx);
        let key = if new.0 <= new.1 { new } else { (new.1, new.0) };
        let pos = self.links.binary_search(&key).unwrap_or_else(|p| p);
        self.links.insert(pos, key);
        Ok(())
    }

    /// Replaces the whole link set.
    pub fn with_links(&self, links: Vec<(usize, usize)>) -> Result<Design, ArchError> {
        Design::from_parts(self.grid.clone(), self.tile_at_slot.clone(), self.kinds.clone(), links)
    }
}

pub(crate) fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    math::sqrt(dx * dx + dy * dy + dz * dz)
}

fn first_unreachable(n: usize, links: &[(usize, usize)]) -> Option<usize> {
    if n == 0 {
        return None;
    }
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in links {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen.iter().position(|&s| !s)
}

/// Parameters for constructing a random initial design.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpec {
    pub grid: GridSpec,
    pub mix: TileMix,
    /// Number of links; `None` means the edge count of the equivalent mesh.
    pub link_count: Option<usize>,
    pub alpha: f64,
    pub max_degree: usize,
}

impl DesignSpec {
    /// 4 tiers of 4x4 tiles: 8 CPUs, 16 LLCs and 40 GPUs.
    pub fn hem3d_default(tech: &Technology) -> Self {
        DesignSpec {
            grid: GridSpec {
                tiers: 4,
                rows: 4,
                cols: 4,
                tier_pitch: tech.default_tier_pitch(),
                cell_pitch: DEFAULT_CELL_PITCH_MM,
            },
            mix: TileMix::new(8, 16, 40),
            link_count: None,
            alpha: DEFAULT_LINK_ALPHA,
            max_degree: DEFAULT_MAX_DEGREE,
        }
    }

    pub fn links(&self) -> usize {
        self.link_count.unwrap_or_else(|| self.grid.mesh_link_count())
    }
}

/// Builds a random valid design: kinds permuted over tile ids by `seed`,
/// tile `i` placed at slot `i`, and a small-world link set.
pub fn build_design(spec: &DesignSpec, tech: &Technology, seed: u64) -> Result<Design, ArchError> {
    spec.grid.validate()?;
    tech.validate()?;
    let n = spec.grid.slot_count();
    if spec.mix.total() != n {
        return Err(ArchError::MixMismatch { mix: spec.mix.total(), slots: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kinds = Vec::with_capacity(n);
    kinds.extend(core::iter::repeat_n(TileKind::Cpu, spec.mix.cpu));
    kinds.extend(core::iter::repeat_n(TileKind::Llc, spec.mix.llc));
    kinds.extend(core::iter::repeat_n(TileKind::Gpu, spec.mix.gpu));
    kinds.shuffle(&mut rng);
    let placement: Vec<usize> = (0..n).collect();
    let positions: Vec<[f64; 3]> =
        (0..n).map(|s| spec.grid.position(s, tech.tile_footprint_scale)).collect();
    let links = sample_connected_links(&positions, spec.links(), spec.alpha, spec.max_degree, &mut rng)?;
    Design::from_parts(spec.grid.clone(), placement, kinds, links)
}

/// The default 64-tile, four-tier architecture.
pub fn build_hem3d_default(tech: &Technology, seed: u64) -> Result<Design, ArchError> {
    build_design(&DesignSpec::hem3d_default(tech), tech, seed)
}

/// Samples small-world links over the given vertex positions until the link
/// graph is connected, retrying up to [`LINK_SAMPLING_ATTEMPTS`] times.
pub fn sample_connected_links<R: Rng + ?Sized>(
    positions: &[[f64; 3]],
    link_count: usize,
    alpha: f64,
    max_degree: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>, ArchError> {
    for _ in 0..LINK_SAMPLING_ATTEMPTS {
        if let Some(links) = sample_links_once(positions, link_count, alpha, max_degree, rng) {
            if first_unreachable(positions.len(), &links).is_none() {
                return Ok(links);
            }
        }
    }
    Err(ArchError::SamplingFailed { attempts: LINK_SAMPLING_ATTEMPTS })
}

/// One pass of weighted sampling without replacement: pair `(i, j)` is drawn
/// with weight `dist(i, j)^-alpha`, skipping pairs whose routers are full.
fn sample_links_once<R: Rng + ?Sized>(
    positions: &[[f64; 3]],
    link_count: usize,
    alpha: f64,
    max_degree: usize,
    rng: &mut R,
) -> Option<Vec<(usize, usize)>> {
    let n = positions.len();
    let mut candidates: Vec<(usize, usize, f64)> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = distance(&positions[i], &positions[j]);
            candidates.push((i, j, math::powf(d, -alpha)));
        }
    }
    let mut degree = vec![0usize; n];
    let mut links = Vec::with_capacity(link_count);
    while links.len() < link_count {
        let total: f64 = candidates
            .iter()
            .filter(|&&(a, b, _)| degree[a] < max_degree && degree[b] < max_degree)
            .map(|c| c.2)
            .sum();
        if !(total > 0.0) {
            return None;
        }
        let mut target = rng.gen::<f64>() * total;
        let mut chosen = None;
        let mut last_open = None;
        for (idx, &(a, b, w)) in candidates.iter().enumerate() {
            if degree[a] >= max_degree || degree[b] >= max_degree {
                continue;
            }
            last_open = Some(idx);
            if target < w {
                chosen = Some(idx);
                break;
            }
            target -= w;
        }
        let idx = chosen.or(last_open)?;
        let (a, b, _) = candidates.swap_remove(idx);
        degree[a] += 1;
        degree[b] += 1;
        links.push((a, b));
    }
    links.sort_unstable();
    Some(links)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(tiers: usize, rows: usize, cols: usize) -> GridSpec {
        GridSpec::new(tiers, rows, cols, 0.1, 2.0).unwrap()
    }

    #[test]
    fn mesh_link_counts() {
        assert_eq!(grid(4, 4, 4).mesh_link_count(), 144);
        assert_eq!(grid(2, 2, 2).mesh_link_count(), 12);
        assert_eq!(grid(1, 2, 2).mesh_link_count(), 4);
    }

    #[test]
    fn slot_indexing_is_tier_major() {
        let g = grid(2, 2, 3);
        assert_eq!(g.slot(0), Slot::new(0, 0, 0));
        assert_eq!(g.slot(3), Slot::new(0, 1, 0));
        assert_eq!(g.slot(6), Slot::new(1, 0, 0));
        for i in 0..g.slot_count() {
            assert_eq!(g.slot_index(g.slot(i)), Some(i));
        }
        assert_eq!(g.slot_index(Slot::new(2, 0, 0)), None);
    }

    #[test]
    fn coordinates_follow_pitches() {
        let g = GridSpec::new(2, 1, 3, 0.1, 2.0).unwrap();
        let n = g.slot_count();
        let d = Design::from_parts(g, (0..n).collect(), vec![TileKind::Gpu; n], vec![]).unwrap();
        let mut tsv = Technology::tsv();
        tsv.tile_footprint_scale = 1.0;
        assert_eq!(d.coordinates(&tsv, 0).unwrap(), [0.0, 0.0, 0.0]);
        // tier 1, row 0, col 2
        let c = d.coordinates(&tsv, 5).unwrap();
        assert!((c[0] - 4.0).abs() < 1e-12 && c[1] == 0.0 && (c[2] - 0.1).abs() < 1e-12);
        let m3d = Technology::m3d();
        let c = d.coordinates(&m3d, 5).unwrap();
        assert!((c[0] - 2.828_427_124_746_19).abs() < 1e-12);
        assert!((c[2] - 0.1).abs() < 1e-12);
        assert_eq!(d.coordinates(&m3d, 6), Err(ArchError::UnknownTile(6)));
    }

    #[test]
    fn default_design_shape() {
        for tech in [Technology::m3d(), Technology::tsv()] {
            let d = build_hem3d_default(&tech, 1).unwrap();
            assert_eq!(d.tile_count(), 64);
            assert_eq!(d.link_count(), 144);
            assert_eq!(d.mix(), TileMix::new(8, 16, 40));
            assert_eq!(d.validate(DEFAULT_MAX_DEGREE), Ok(()));
        }
    }

    #[test]
    fn small_grid_uses_mesh_budget() {
        let tech = Technology::tsv();
        let spec = DesignSpec {
            grid: GridSpec::new(2, 2, 2, 0.05, 2.0).unwrap(),
            mix: TileMix::new(1, 1, 6),
            link_count: None,
            alpha: DEFAULT_LINK_ALPHA,
            max_degree: DEFAULT_MAX_DEGREE,
        };
        let d = build_design(&spec, &tech, 3).unwrap();
        assert_eq!(d.tile_count(), 8);
        assert_eq!(d.link_count(), 12);
        assert!(d.validate(DEFAULT_MAX_DEGREE).is_ok());
    }

    #[test]
    fn mix_must_fill_grid() {
        let tech = Technology::tsv();
        let mut spec = DesignSpec::hem3d_default(&tech);
        spec.mix = TileMix::new(9, 16, 40);
        assert_eq!(build_design(&spec, &tech, 1), Err(ArchError::MixMismatch { mix: 65, slots: 64 }));
    }

    #[test]
    fn validate_reports_connectivity() {
        let d = build_hem3d_default(&Technology::tsv(), 2).unwrap();
        let kept: Vec<_> = d.links().iter().copied().filter(|&(a, b)| a != 5 && b != 5).collect();
        let cut = d.with_links(kept).unwrap();
        assert_eq!(cut.validate(7).unwrap_err().name(), "connectivity");
    }

    #[test]
    fn validate_reports_degree() {
        // star on 9 tiles: hub degree 8
        let g = GridSpec::new(1, 3, 3, 0.1, 2.0).unwrap();
        let links: Vec<_> = (1..9).map(|i| (0, i)).collect();
        let d = Design::from_parts(g, (0..9).collect(), vec![TileKind::Gpu; 9], links).unwrap();
        assert_eq!(d.validate(7), Err(Violation::Degree { tile: 0, degree: 8, max: 7 }));
        assert_eq!(d.validate(8), Ok(()));
    }

    #[test]
    fn validate_reports_loops_and_duplicates() {
        let g = GridSpec::new(1, 1, 3, 0.1, 2.0).unwrap();
        let kinds = vec![TileKind::Gpu; 3];
        let d = Design::from_parts(g.clone(), vec![0, 1, 2], kinds.clone(), vec![(0, 1), (1, 1), (1, 2)]).unwrap();
        assert_eq!(d.validate(7), Err(Violation::SelfLoop { tile: 1 }));
        let d = Design::from_parts(g.clone(), vec![0, 1, 2], kinds.clone(), vec![(0, 1), (1, 0), (1, 2)]).unwrap();
        assert_eq!(d.validate(7), Err(Violation::DuplicateLink { a: 0, b: 1 }));
        let d = Design::from_parts(g, vec![0, 0, 2], kinds, vec![(0, 1), (1, 2)]).unwrap();
        assert_eq!(d.validate(7).unwrap_err().name(), "placement");
    }

    #[test]
    fn swap_keeps_wires_in_place() {
        let g = GridSpec::new(1, 1, 3, 0.1, 2.0).unwrap();
        let kinds = vec![TileKind::Cpu, TileKind::Llc, TileKind::Gpu];
        let mut d = Design::from_parts(g, vec![0, 1, 2], kinds, vec![(0, 1), (1, 2)]).unwrap();
        d.swap_slots(0, 2);
        assert_eq!(d.tile_at(0), 2);
        assert_eq!(d.slot_index_of(0), 2);
        // the wire between slots 0 and 1 now joins tiles 2 and 1
        assert_eq!(d.links(), &[(0, 1), (1, 2)]);
        assert_eq!(d.validate(7), Ok(()));
        d.swap_slots(0, 1);
        assert_eq!(d.links(), &[(0, 2), (1, 2)]);
    }

    #[test]
    fn move_link_rules() {
        let g = GridSpec::new(1, 1, 3, 0.1, 2.0).unwrap();
        let mut d = Design::from_parts(g, vec![0, 1, 2], vec![TileKind::Gpu; 3], vec![(0, 1), (1, 2)]).unwrap();
        assert_eq!(d.move_link((0, 2), (0, 1)), Err(ArchError::MissingLink(0, 2)));
        assert_eq!(d.move_link((0, 1), (2, 1)), Err(ArchError::BadLink(2, 1)));
        d.move_link((1, 0), (2, 0)).unwrap();
        assert_eq!(d.links(), &[(0, 2), (1, 2)]);
    }

    #[test]
    fn presets_are_valid() {
        Technology::m3d().validate().unwrap();
        Technology::tsv().validate().unwrap();
        let mut bad = Technology::tsv();
        bad.r_base = 0.0;
        assert!(bad.validate().is_err());
    }
}
