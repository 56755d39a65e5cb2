//! Picks the final design from a Pareto set by execution time, optionally
//! under a peak-temperature threshold.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use thiserror::Error;

use crate::objectives::{Mode, ObjectiveVector};
use crate::pareto::ArchiveEntry;

/// Default peak-temperature threshold (°C).
pub const DEFAULT_T_TH: f64 = 85.0;
/// Default surrogate weights for `(lat, u_mean, u_std)`.
pub const DEFAULT_ET_WEIGHTS: [f64; 3] = [0.5, 0.25, 0.25];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectError {
    #[error("cannot select from an empty archive")]
    Empty,
    #[error("no execution time for design {0}")]
    MissingDesign(usize),
    #[error("no temperature for design {0}")]
    MissingTemperature(usize),
    #[error("surrogate weights must be finite and non-negative")]
    NegativeWeight,
    #[error("expected {expected} surrogate weights, found {found}")]
    WeightArity { expected: usize, found: usize },
    #[error("normalisation reference must be positive")]
    BadReference,
}

/// One design competing for selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub id: usize,
    pub et: f64,
    pub temp: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub id: usize,
    /// False when PT selection found no design under the threshold and fell
    /// back to the coolest one.
    pub feasible: bool,
}

/// Externally measured execution time and, optionally, temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub et: f64,
    pub temp: Option<f64>,
}

/// Where execution times come from.
#[derive(Debug, Clone, PartialEq)]
pub enum EtSource {
    /// Weighted sum of normalised `(lat, u_mean, u_std)`.
    Surrogate { weights: [f64; 3] },
    /// Per-design measurements, e.g. from a full-system simulator.
    External(BTreeMap<usize, Measurement>),
}

impl Default for EtSource {
    fn default() -> Self {
        EtSource::Surrogate { weights: DEFAULT_ET_WEIGHTS }
    }
}

/// Surrogate execution-time score: `Σ w_c · v_c / ref_c` over
/// `(lat, u_mean, u_std)`. `reference` holds at least those three values.
pub fn surrogate_et(v: &ObjectiveVector, weights: &[f64], reference: &[f64]) -> Result<f64, SelectError> {
    if weights.len() != 3 {
        return Err(SelectError::WeightArity { expected: 3, found: weights.len() });
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(SelectError::NegativeWeight);
    }
    if reference.len() < 3 || reference[..3].iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(SelectError::BadReference);
    }
    let comps = [v.lat, v.u_mean, v.u_std];
    Ok(comps.iter().zip(weights).zip(reference).map(|((x, w), r)| w * x / r).sum())
}

/// PO: lowest ET. PT: lowest ET among designs strictly below `t_th`, else
/// the coolest design flagged infeasible. Ties go to the lowest id.
pub fn select(candidates: &[Candidate], mode: Mode, t_th: f64) -> Result<Selection, SelectError> {
    if candidates.is_empty() {
        return Err(SelectError::Empty);
    }
    let by = |key: fn(&Candidate) -> f64, pool: &mut dyn Iterator<Item = &Candidate>| {
        pool.min_by(|a, b| key(a).total_cmp(&key(b)).then(a.id.cmp(&b.id))).map(|c| c.id)
    };
    match mode {
        Mode::Po => Ok(Selection { id: by(|c| c.et, &mut candidates.iter()).unwrap(), feasible: true }),
        Mode::Pt => {
            if let Some(c) = candidates.iter().find(|c| c.temp.is_none()) {
                return Err(SelectError::MissingTemperature(c.id));
            }
            let mut feasible = candidates.iter().filter(|c| c.temp.unwrap() < t_th);
            match by(|c| c.et, &mut feasible) {
                Some(id) => Ok(Selection { id, feasible: true }),
                None => Ok(Selection { id: by(|c| c.temp.unwrap(), &mut candidates.iter()).unwrap(), feasible: false }),
            }
        }
    }
}

/// Resolves ET (and temperature) for every archive entry from `source`.
/// External temperatures override the model's when present.
pub fn candidates<T>(
    entries: &[ArchiveEntry<T>],
    reference: &[f64],
    source: &EtSource,
) -> Result<Vec<Candidate>, SelectError> {
    entries
        .iter()
        .map(|e| {
            let v = ObjectiveVector::from_slice(&e.objectives).ok_or(SelectError::WeightArity {
                expected: 3,
                found: e.objectives.len(),
            })?;
            match source {
                EtSource::Surrogate { weights } => {
                    Ok(Candidate { id: e.id, et: surrogate_et(&v, weights, reference)?, temp: v.temp })
                }
                EtSource::External(table) => {
                    let m = table.get(&e.id).ok_or(SelectError::MissingDesign(e.id))?;
                    Ok(Candidate { id: e.id, et: m.et, temp: m.temp.or(v.temp) })
                }
            }
        })
        .collect()
}

/// Convenience wrapper: resolve candidates and select.
pub fn select_from_archive<T>(
    entries: &[ArchiveEntry<T>],
    reference: &[f64],
    mode: Mode,
    t_th: f64,
    source: &EtSource,
) -> Result<Selection, SelectError> {
    select(&candidates(entries, reference, source)?, mode, t_th)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(id: usize, et: f64, temp: f64) -> Candidate {
        Candidate { id, et, temp: Some(temp) }
    }

    #[test]
    fn singleton() {
        let only = [c(7, 1.0, 99.0)];
        assert_eq!(select(&only, Mode::Po, 85.0).unwrap().id, 7);
        assert_eq!(select(&only, Mode::Pt, 85.0).unwrap(), Selection { id: 7, feasible: false });
        assert_eq!(select(&[], Mode::Po, 85.0), Err(SelectError::Empty));
    }

    #[test]
    fn threshold_overrides_speed() {
        let pool = [c(0, 10.0, 80.0), c(1, 5.0, 90.0)];
        assert_eq!(select(&pool, Mode::Pt, 85.0).unwrap(), Selection { id: 0, feasible: true });
        assert_eq!(select(&pool, Mode::Po, 85.0).unwrap().id, 1);
    }

    #[test]
    fn cool_pool_matches_po() {
        let pool = [c(0, 10.0, 60.0), c(1, 5.0, 70.0), c(2, 7.0, 50.0)];
        assert_eq!(select(&pool, Mode::Pt, 85.0).unwrap().id, select(&pool, Mode::Po, 85.0).unwrap().id);
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let pool = [c(4, 1.0, 50.0), c(2, 1.0, 50.0), c(9, 1.0, 50.0)];
        assert_eq!(select(&pool, Mode::Po, 85.0).unwrap().id, 2);
        assert_eq!(select(&pool, Mode::Pt, 40.0).unwrap(), Selection { id: 2, feasible: false });
    }

    #[test]
    fn surrogate_rules() {
        let zero = ObjectiveVector { lat: 0.0, u_mean: 0.0, u_std: 0.0, temp: None };
        assert_eq!(surrogate_et(&zero, &DEFAULT_ET_WEIGHTS, &[1.0, 1.0, 1.0]).unwrap(), 0.0);
        let v = ObjectiveVector { lat: 4.0, u_mean: 9.0, u_std: 9.0, temp: None };
        assert_eq!(surrogate_et(&v, &[1.0, 0.0, 0.0], &[8.0, 1.0, 1.0]).unwrap(), 0.5);
        assert_eq!(surrogate_et(&v, &[-1.0, 0.0, 0.0], &[1.0; 3]), Err(SelectError::NegativeWeight));
        assert!(surrogate_et(&v, &[1.0, 0.0], &[1.0; 3]).is_err());
    }

    #[test]
    fn external_source_must_cover_archive() {
        let entries = [ArchiveEntry { id: 3, objectives: alloc::vec![1.0, 1.0, 1.0], item: () }];
        let source = EtSource::External(BTreeMap::new());
        assert_eq!(candidates(&entries, &[2.0; 3], &source), Err(SelectError::MissingDesign(3)));
    }
}
