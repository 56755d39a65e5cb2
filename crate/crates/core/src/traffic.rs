//! Time-windowed communication and power profiles.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::arch::{Design, TileKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrafficError {
    #[error("window {window}: diagonal entry for tile {tile}")]
    Diagonal { window: usize, tile: usize },
    #[error("window {window}: entry ({src}, {dst}) is negative or not finite")]
    BadRate { window: usize, src: usize, dst: usize },
    #[error("window {window}: duplicate entry ({src}, {dst})")]
    DuplicateEntry { window: usize, src: usize, dst: usize },
    #[error("window {window}: tile {tile} outside the {tiles}-tile universe")]
    TileOutOfRange { window: usize, tile: usize, tiles: usize },
    #[error("window {window}: power entry for tile {tile} is negative or not finite")]
    BadPower { window: usize, tile: usize },
    #[error("window {window}: expected {expected} power values, found {found}")]
    PowerArity { window: usize, expected: usize, found: usize },
    #[error("traffic has {traffic} windows but power has {power}")]
    WindowMismatch { traffic: usize, power: usize },
    #[error("profile covers {profile} tiles but the design has {design}")]
    TileMismatch { profile: usize, design: usize },
    #[error("profile needs at least one window")]
    NoWindows,
    #[error("cannot average an empty list")]
    EmptyAverage,
    #[error("invalid synthesis parameter: {0}")]
    InvalidParameter(&'static str),
}

/// One directed flow: messages per cycle from `src` to `dst`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flow {
    pub src: usize,
    pub dst: usize,
    pub rate: f64,
}

/// Directed communication frequencies per window, stored sparsely.
///
/// Each window holds only its nonzero flows, sorted by `(src, dst)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficProfile {
    tiles: usize,
    windows: Vec<Vec<Flow>>,
}

impl TrafficProfile {
    /// Builds a profile from per-window `(src, dst, rate)` entries. Zero
    /// entries are dropped; anything else that breaks the invariants is an
    /// error.
    pub fn new(tiles: usize, windows: Vec<Vec<(usize, usize, f64)>>) -> Result<Self, TrafficError> {
        if windows.is_empty() {
            return Err(TrafficError::NoWindows);
        }
        let mut out = Vec::with_capacity(windows.len());
        for (w, entries) in windows.into_iter().enumerate() {
            let mut flows = Vec::with_capacity(entries.len());
            for (src, dst, rate) in entries {
                for tile in [src, dst] {
                    if tile >= tiles {
                        return Err(TrafficError::TileOutOfRange { window: w, tile, tiles });
                    }
                }
                if !(rate.is_finite() && rate >= 0.0) {
                    return Err(TrafficError::BadRate { window: w, src, dst });
                }
                if src == dst {
                    if rate != 0.0 {
                        return Err(TrafficError::Diagonal { window: w, tile: src });
                    }
                    continue;
                }
                flows.push(Flow { src, dst, rate });
            }
            flows.sort_by_key(|f| (f.src, f.dst));
            if let Some(pair) = flows.windows(2).find(|p| (p[0].src, p[0].dst) == (p[1].src, p[1].dst)) {
                return Err(TrafficError::DuplicateEntry { window: w, src: pair[0].src, dst: pair[0].dst });
            }
            flows.retain(|f| f.rate != 0.0);
            out.push(flows);
        }
        Ok(TrafficProfile { tiles, windows: out })
    }

    pub fn tiles(&self) -> usize {
        self.tiles
    }

    pub fn window_count(&self) -> usize {
        self.windows.len()
    }

    pub fn flows(&self, window: usize) -> &[Flow] {
        &self.windows[window]
    }

    /// `f[window][src][dst]`, zero when absent.
    pub fn rate(&self, window: usize, src: usize, dst: usize) -> f64 {
        self.windows[window]
            .binary_search_by_key(&(src, dst), |f| (f.src, f.dst))
            .map(|i| self.windows[window][i].rate)
            .unwrap_or(0.0)
    }

    pub fn window_total(&self, window: usize) -> f64 {
        self.windows[window].iter().map(|f| f.rate).sum()
    }

    /// Profile with every rate multiplied by `factor` (must be ≥ 0).
    pub fn scaled(&self, factor: f64) -> Self {
        let windows = self
            .windows
            .iter()
            .map(|w| {
                w.iter()
                    .map(|f| Flow { rate: f.rate * factor, ..*f })
                    .filter(|f| f.rate != 0.0)
                    .collect()
            })
            .collect();
        TrafficProfile { tiles: self.tiles, windows }
    }

    pub fn check_design(&self, design: &Design) -> Result<(), TrafficError> {
        if self.tiles != design.tile_count() {
            return Err(TrafficError::TileMismatch { profile: self.tiles, design: design.tile_count() });
        }
        Ok(())
    }
}

/// Per-tile power (W) per window. Raw watts; technology scaling is applied
/// by the thermal model.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile {
    tiles: usize,
    watts: Vec<Vec<f64>>,
}

impl PowerProfile {
    pub fn new(tiles: usize, watts: Vec<Vec<f64>>) -> Result<Self, TrafficError> {
        if watts.is_empty() {
            return Err(TrafficError::NoWindows);
        }
        for (w, row) in watts.iter().enumerate() {
            if row.len() != tiles {
                return Err(TrafficError::PowerArity { window: w, expected: tiles, found: row.len() });
            }
            if let Some(tile) = row.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(TrafficError::BadPower { window: w, tile });
            }
        }
        Ok(PowerProfile { tiles, watts })
    }

    pub fn tiles(&self) -> usize {
        self.tiles
    }

    pub fn window_count(&self) -> usize {
        self.watts.len()
    }

    pub fn window(&self, window: usize) -> &[f64] {
        &self.watts[window]
    }

    pub fn watts(&self, window: usize, tile: usize) -> f64 {
        self.watts[window][tile]
    }

    pub fn with_watts(&self, window: usize, tile: usize, watts: f64) -> Result<Self, TrafficError> {
        let mut next = self.watts.clone();
        next[window][tile] = watts;
        PowerProfile::new(self.tiles, next)
    }

    pub fn check_design(&self, design: &Design) -> Result<(), TrafficError> {
        if self.tiles != design.tile_count() {
            return Err(TrafficError::TileMismatch { profile: self.tiles, design: design.tile_count() });
        }
        Ok(())
    }
}

/// Checks that a traffic and power profile can be used together.
pub fn check_pair(traffic: &TrafficProfile, power: &PowerProfile) -> Result<(), TrafficError> {
    if traffic.window_count() != power.window_count() {
        return Err(TrafficError::WindowMismatch { traffic: traffic.window_count(), power: power.window_count() });
    }
    if traffic.tiles() != power.tiles() {
        return Err(TrafficError::TileMismatch { profile: power.tiles(), design: traffic.tiles() });
    }
    Ok(())
}

/// Arithmetic mean over windows; every window weighs the same.
pub fn window_average(values: &[f64]) -> Result<f64, TrafficError> {
    if values.is_empty() {
        return Err(TrafficError::EmptyAverage);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Knobs of the many-to-few-to-many generator.
///
/// Every CPU or GPU `c` has a home LLC `h(c)`. In window `t`, with window
/// factor `m_t` uniform in `[1 - skew, 1 + skew]`, it sends
/// `home_share * w_c * intensity * m_t` to `h(c)` plus
/// `(1 - home_share) * w_c * intensity * m_t / M` to each of the `M` LLCs,
/// and every LLC answers with the same rate. Hence the total traffic of
/// window `t` is `2 * intensity * m_t * (C * cpu_weight + G * gpu_weight)`.
/// Tile power is `base(kind) * m_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub windows: usize,
    pub intensity: f64,
    pub skew: f64,
    pub seed: u64,
    pub cpu_weight: f64,
    pub gpu_weight: f64,
    pub home_share: f64,
    pub cpu_watts: f64,
    pub gpu_watts: f64,
    pub llc_watts: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            windows: 8,
            intensity: 0.05,
            skew: 0.1,
            seed: 0,
            cpu_weight: 1.0,
            gpu_weight: 3.0,
            home_share: 0.8,
            cpu_watts: 1.5,
            gpu_watts: 2.5,
            llc_watts: 0.8,
        }
    }
}

/// Synthesises CPU/GPU ↔ LLC traffic and matching power traces.
pub fn synth_many_to_few(
    design: &Design,
    params: &SynthParams,
) -> Result<(TrafficProfile, PowerProfile), TrafficError> {
    if params.windows == 0 {
        return Err(TrafficError::NoWindows);
    }
    if !(params.intensity.is_finite() && params.intensity > 0.0) {
        return Err(TrafficError::InvalidParameter("intensity must be positive"));
    }
    if !(0.0..=1.0).contains(&params.skew) {
        return Err(TrafficError::InvalidParameter("skew must lie in [0, 1]"));
    }
    if !(0.0..=1.0).contains(&params.home_share) {
        return Err(TrafficError::InvalidParameter("home share must lie in [0, 1]"));
    }
    let weights = [params.cpu_weight, params.gpu_weight, params.cpu_watts, params.gpu_watts, params.llc_watts];
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(TrafficError::InvalidParameter("weights and watts must be non-negative"));
    }
    let llcs: Vec<usize> = design.tiles_of(TileKind::Llc).collect();
    if llcs.is_empty() {
        return Err(TrafficError::InvalidParameter("design has no LLC"));
    }
    let n = design.tile_count();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let homes: Vec<usize> = (0..n).map(|_| llcs[rng.gen_range(0..llcs.len())]).collect();
    let factors: Vec<f64> = (0..params.windows)
        .map(|_| 1.0 + params.skew * (2.0 * rng.gen::<f64>() - 1.0))
        .collect();
    let spread = (1.0 - params.home_share) / llcs.len() as f64;

    let mut traffic = Vec::with_capacity(params.windows);
    let mut power = Vec::with_capacity(params.windows);
    for &m in &factors {
        let mut rates = vec![0.0; n * n];
        for core in 0..n {
            let weight = match design.kind(core) {
                TileKind::Cpu => params.cpu_weight,
                TileKind::Gpu => params.gpu_weight,
                TileKind::Llc => continue,
            };
            let volume = weight * params.intensity * m;
            for &llc in &llcs {
                let mut r = spread * volume;
                if llc == homes[core] {
                    r += params.home_share * volume;
                }
                rates[core * n + llc] += r;
                rates[llc * n + core] += r;
            }
        }
        let entries = rates
            .iter()
            .enumerate()
            .filter(|(_, &r)| r > 0.0)
            .map(|(idx, &r)| (idx / n, idx % n, r))
            .collect();
        traffic.push(entries);
        power.push(
            design
                .kinds()
                .iter()
                .map(|k| {
                    m * match k {
                        TileKind::Cpu => params.cpu_watts,
                        TileKind::Gpu => params.gpu_watts,
                        TileKind::Llc => params.llc_watts,
                    }
                })
                .collect(),
        );
    }
    Ok((TrafficProfile::new(n, traffic)?, PowerProfile::new(n, power)?))
}
