//! Objective models: CPU–LLC latency, link-load mean and spread, and the
//! steady-state peak temperature of the tier stack.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::arch::{Design, Technology, TileKind};
use crate::routing::{compute_routes, RoutingError, RoutingTable};
use crate::traffic::{window_average, PowerProfile, TrafficError, TrafficProfile};

/// Default ambient temperature (°C).
pub const DEFAULT_AMBIENT_C: f64 = 45.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObjectiveError {
    #[error("latency needs at least one CPU and one LLC")]
    NoCpuOrLlc,
    #[error("design has no links")]
    NoLinks,
    #[error("window {0} out of range")]
    BadWindow(usize),
    #[error("technology lists {resistances} tier resistances for a {tiers}-tier grid")]
    StackGeometry { resistances: usize, tiers: usize },
    #[error("thermal resistances and lateral factor must be positive")]
    NonPositiveResistance,
    #[error(transparent)]
    Profile(#[from] TrafficError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
}

/// Performance-only or joint performance-thermal objective set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Po,
    Pt,
}

impl Mode {
    pub fn arity(self) -> usize {
        match self {
            Mode::Po => 3,
            Mode::Pt => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Po => "po",
            Mode::Pt => "pt",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = &'static str;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "po" | "PO" => Ok(Mode::Po),
            "pt" | "PT" => Ok(Mode::Pt),
            _ => Err("mode must be po or pt"),
        }
    }
}

/// Evaluation of one design; every component is minimised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveVector {
    pub lat: f64,
    pub u_mean: f64,
    pub u_std: f64,
    /// Peak temperature, present in PT mode only.
    pub temp: Option<f64>,
}

impl ObjectiveVector {
    pub fn arity(&self) -> usize {
        if self.temp.is_some() {
            4
        } else {
            3
        }
    }

    /// Components in the order `lat, u_mean, u_std[, temp]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.lat, self.u_mean, self.u_std];
        v.extend(self.temp);
        v
    }

    pub fn from_slice(values: &[f64]) -> Option<Self> {
        match *values {
            [lat, u_mean, u_std] => Some(ObjectiveVector { lat, u_mean, u_std, temp: None }),
            [lat, u_mean, u_std, temp] => Some(ObjectiveVector { lat, u_mean, u_std, temp: Some(temp) }),
            _ => None,
        }
    }
}

/// Window-averaged CPU↔LLC latency:
/// `avg_t (1/(C·M)) Σ_{cpu i, llc j} (r·h_ij + d_ij)·(f_ij(t) + f_ji(t))`.
pub fn latency(
    design: &Design,
    tech: &Technology,
    table: &RoutingTable,
    traffic: &TrafficProfile,
) -> Result<f64, ObjectiveError> {
    traffic.check_design(design)?;
    let mix = design.mix();
    if mix.cpu == 0 || mix.llc == 0 {
        return Err(ObjectiveError::NoCpuOrLlc);
    }
    let norm = (mix.cpu * mix.llc) as f64;
    let r = tech.router_stages as f64;
    let kinds = design.kinds();
    let per_window: Vec<f64> = (0..traffic.window_count())
        .map(|w| {
            let mut sum = 0.0;
            for f in traffic.flows(w) {
                let pair = (kinds[f.src], kinds[f.dst]);
                if matches!(pair, (TileKind::Cpu, TileKind::Llc) | (TileKind::Llc, TileKind::Cpu)) {
                    let cost = r * table.hops(f.src, f.dst) as f64 + table.dist(f.src, f.dst) * tech.link_delay_per_mm;
                    sum += cost * f.rate;
                }
            }
            sum / norm
        })
        .collect();
    Ok(window_average(&per_window)?)
}

/// Expected utilisation `u_k` of every link in one window.
pub fn link_loads(
    design: &Design,
    table: &RoutingTable,
    traffic: &TrafficProfile,
    window: usize,
) -> Result<Vec<f64>, ObjectiveError> {
    traffic.check_design(design)?;
    if window >= traffic.window_count() {
        return Err(ObjectiveError::BadWindow(window));
    }
    let mut loads = vec![0.0; design.link_count()];
    for f in traffic.flows(window) {
        for &k in table.route_link_ids(f.src, f.dst) {
            loads[k as usize] += f.rate;
        }
    }
    Ok(loads)
}

/// Mean and population standard deviation of one window's link loads.
pub fn window_load_stats(loads: &[f64]) -> (f64, f64) {
    let l = loads.len() as f64;
    let mean = loads.iter().sum::<f64>() / l;
    let var = loads.iter().map(|u| (u - mean) * (u - mean)).sum::<f64>() / l;
    (mean, crate::math::sqrt(var))
}

/// Window-averaged link-load mean and standard deviation.
pub fn load_stats(
    design: &Design,
    table: &RoutingTable,
    traffic: &TrafficProfile,
) -> Result<(f64, f64), ObjectiveError> {
    if design.link_count() == 0 {
        return Err(ObjectiveError::NoLinks);
    }
    let mut means = Vec::with_capacity(traffic.window_count());
    let mut stds = Vec::with_capacity(traffic.window_count());
    for w in 0..traffic.window_count() {
        let (m, s) = window_load_stats(&link_loads(design, table, traffic, w)?);
        means.push(m);
        stds.push(s);
    }
    Ok((window_average(&means)?, window_average(&stds)?))
}

fn check_thermal(design: &Design, tech: &Technology) -> Result<(), ObjectiveError> {
    let tiers = design.grid().tiers;
    if tech.r_tier.len() != tiers {
        return Err(ObjectiveError::StackGeometry { resistances: tech.r_tier.len(), tiers });
    }
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if !tech.r_tier.iter().all(|&r| positive(r)) || !positive(tech.r_base) || !positive(tech.lateral_factor) {
        return Err(ObjectiveError::NonPositiveResistance);
    }
    Ok(())
}

/// Worst temperature rise over stacks and tiers in one window (before the
/// lateral factor and ambient offset).
fn window_stack_rise(design: &Design, tech: &Technology, watts: &[f64], cumulative_r: &[f64]) -> f64 {
    let grid = design.grid();
    let stacks = grid.stack_count();
    let mut worst: f64 = 0.0;
    for stack in 0..stacks {
        let mut rise = 0.0;
        let mut stack_power = 0.0;
        for tier in 0..grid.tiers {
            let tile = design.tile_at(tier * stacks + stack);
            let p = watts[tile] * tech.power_scale;
            rise += p * cumulative_r[tier];
            stack_power += p;
            let s = rise + tech.r_base * stack_power;
            if s > worst {
                worst = s;
            }
        }
    }
    worst
}

/// Peak temperature (°C) over all windows of the vertical stack model:
/// for stack `n` and tier `k` (tier 1 next to the sink),
/// `S = Σ_{i≤k} P_{n,i}·Σ_{j≤i} R_j + R_b·Σ_{i≤k} P_{n,i}`, and the window
/// temperature is `ambient + T_H · max_{n,k} S`.
pub fn peak_temperature(
    design: &Design,
    tech: &Technology,
    power: &PowerProfile,
    ambient: f64,
) -> Result<f64, ObjectiveError> {
    power.check_design(design)?;
    check_thermal(design, tech)?;
    let cumulative_r: Vec<f64> = tech
        .r_tier
        .iter()
        .scan(0.0, |acc, r| {
            *acc += r;
            Some(*acc)
        })
        .collect();
    let worst = (0..power.window_count())
        .map(|w| window_stack_rise(design, tech, power.window(w), &cumulative_r))
        .fold(0.0, f64::max);
    Ok(ambient + tech.lateral_factor * worst)
}

/// Everything needed to turn a design into an objective vector.
#[derive(Debug, Clone)]
pub struct EvalContext {
    pub tech: Technology,
    pub traffic: TrafficProfile,
    pub power: PowerProfile,
    pub mode: Mode,
    pub ambient: f64,
}

impl EvalContext {
    pub fn new(tech: Technology, traffic: TrafficProfile, power: PowerProfile, mode: Mode) -> Self {
        EvalContext { tech, traffic, power, mode, ambient: DEFAULT_AMBIENT_C }
    }

    pub fn evaluate(&self, design: &Design) -> Result<ObjectiveVector, ObjectiveError> {
        let table = compute_routes(design, &self.tech)?;
        self.evaluate_with_routes(design, &table)
    }

    pub fn evaluate_with_routes(&self, design: &Design, table: &RoutingTable) -> Result<ObjectiveVector, ObjectiveError> {
        let lat = latency(design, &self.tech, table, &self.traffic)?;
        let (u_mean, u_std) = load_stats(design, table, &self.traffic)?;
        let temp = match self.mode {
            Mode::Po => None,
            Mode::Pt => Some(peak_temperature(design, &self.tech, &self.power, self.ambient)?),
        };
        Ok(ObjectiveVector { lat, u_mean, u_std, temp })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::GridSpec;

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs().max(1.0)
    }

    #[test]
    fn two_tier_stack_fixture() {
        let g = GridSpec::new(2, 1, 1, 0.1, 2.0).unwrap();
        let d = Design::from_parts(g, vec![0, 1], vec![TileKind::Gpu, TileKind::Gpu], vec![(0, 1)]).unwrap();
        let mut tech = Technology::tsv();
        tech.r_tier = vec![1.0, 1.0];
        tech.r_base = 0.5;
        tech.lateral_factor = 1.0;
        tech.power_scale = 1.0;
        let power = PowerProfile::new(2, vec![vec![2.0, 1.0]]).unwrap();
        assert!(approx(peak_temperature(&d, &tech, &power, 45.0).unwrap(), 50.5));
        let zero = PowerProfile::new(2, vec![vec![0.0, 0.0]]).unwrap();
        assert_eq!(peak_temperature(&d, &tech, &zero, 45.0).unwrap(), 45.0);
        tech.r_tier = vec![1.0];
        assert!(matches!(peak_temperature(&d, &tech, &power, 45.0), Err(ObjectiveError::StackGeometry { .. })));
    }

    #[test]
    fn load_stats_of_zero_and_six() {
        assert_eq!(window_load_stats(&[0.0, 6.0]), (3.0, 3.0));
        assert_eq!(window_load_stats(&[2.5; 4]), (2.5, 0.0));
    }

    #[test]
    fn mode_round_trip() {
        assert_eq!("pt".parse::<Mode>(), Ok(Mode::Pt));
        assert_eq!(Mode::Po.arity(), 3);
        let v = ObjectiveVector { lat: 1.0, u_mean: 2.0, u_std: 3.0, temp: Some(4.0) };
        assert_eq!(ObjectiveVector::from_slice(&v.to_vec()), Some(v));
    }
}
