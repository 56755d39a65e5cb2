//! Pareto dominance, non-dominated archives and exact hypervolume.
//!
//! All objectives are minimised.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParetoError {
    #[error("objective arity mismatch: expected {expected}, found {found}")]
    Arity { expected: usize, found: usize },
    #[error("reference point must be non-empty, finite and positive")]
    InvalidReference,
}

/// `a` dominates `b` iff it is no worse everywhere and better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool, ParetoError> {
    if a.len() != b.len() {
        return Err(ParetoError::Arity { expected: a.len(), found: b.len() });
    }
    Ok(dominates_unchecked(a, b))
}

pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

fn weakly_dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Exact volume of the region dominated by `points` and bounded above by
/// `reference`. Coordinates beyond the reference are clamped to it, so such
/// points contribute nothing.
pub fn hypervolume<P: AsRef<[f64]>>(points: &[P], reference: &[f64]) -> f64 {
    let d = reference.len();
    let mut pts: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.as_ref())
        .filter(|p| p.len() == d && p.iter().zip(reference).all(|(x, r)| x < r))
        .map(|p| p.to_vec())
        .collect();
    if pts.is_empty() || d == 0 {
        return 0.0;
    }
    pts = non_dominated(pts, d);
    sweep(pts, reference, d)
}

/// Volume `point` would add to `others` (both bounded by `reference`).
pub fn hypervolume_gain<P: AsRef<[f64]>>(point: &[f64], others: &[P], reference: &[f64]) -> f64 {
    if point.len() != reference.len() || point.iter().zip(reference).any(|(x, r)| x >= r) {
        return 0.0;
    }
    let own: f64 = point.iter().zip(reference).map(|(x, r)| r - x).product();
    let limited: Vec<Vec<f64>> = others
        .iter()
        .map(|o| o.as_ref().iter().zip(point).map(|(a, b)| a.max(*b)).collect())
        .collect();
    (own - hypervolume(&limited, reference)).max(0.0)
}

// Keeps the points not weakly dominated by another (first copy of equal
// points survives). Only the first `d` coordinates are compared.
fn non_dominated(mut pts: Vec<Vec<f64>>, d: usize) -> Vec<Vec<f64>> {
    pts.sort_by(|a, b| lex_cmp(&a[..d], &b[..d]));
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(pts.len());
    // lexicographic order guarantees a point can only be dominated by an earlier one
    for p in pts {
        if !kept.iter().any(|k| weakly_dominates(&k[..d], &p[..d])) {
            kept.push(p);
        }
    }
    kept
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

// Dimension sweep: slice along the last coordinate and recurse on the
// projection of the points below each slice.
fn sweep(mut pts: Vec<Vec<f64>>, reference: &[f64], d: usize) -> f64 {
    match d {
        0 => 0.0,
        1 => reference[0] - pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
        2 => {
            pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
            let mut area = 0.0;
            let mut floor = reference[1];
            for p in &pts {
                if p[1] < floor {
                    area += (reference[0] - p[0]) * (floor - p[1]);
                    floor = p[1];
                }
            }
            area
        }
        _ => {
            let last = d - 1;
            pts.sort_by(|a, b| a[last].total_cmp(&b[last]));
            let mut front: Vec<Vec<f64>> = Vec::new();
            let mut volume = 0.0;
            for i in 0..pts.len() {
                let p = &pts[i][..last];
                if !front.iter().any(|f| weakly_dominates(f, p)) {
                    front.retain(|f| !weakly_dominates(p, f));
                    front.push(p.to_vec());
                }
                let upper = if i + 1 < pts.len() { pts[i + 1][last] } else { reference[last] };
                let height = upper - pts[i][last];
                if height > 0.0 {
                    volume += height * sweep(front.clone(), reference, last);
                }
            }
            volume
        }
    }
}

/// Reference point from sampled objective vectors: 1.1 × the worst value
/// per objective (1.0 where every sample is zero).
pub fn reference_from_samples<P: AsRef<[f64]>>(samples: &[P]) -> Vec<f64> {
    let d = samples.first().map_or(0, |s| s.as_ref().len());
    let mut worst = vec![0.0f64; d];
    for s in samples {
        for (w, &x) in worst.iter_mut().zip(s.as_ref()) {
            *w = w.max(x);
        }
    }
    worst.into_iter().map(|w| if w > 0.0 { 1.1 * w } else { 1.0 }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Insertion {
    /// The vector entered the archive and evicted `removed` entries.
    /// `beyond_reference` flags a vector outside the reference box.
    Added { removed: usize, beyond_reference: bool },
    /// An existing entry is at least as good everywhere; archive unchanged.
    Dominated,
}

impl Insertion {
    pub fn is_added(self) -> bool {
        matches!(self, Insertion::Added { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveEntry<T> {
    pub id: usize,
    pub objectives: Vec<f64>,
    pub item: T,
}

/// Non-dominated set of `(id, objectives, item)` with a fixed reference point.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoArchive<T> {
    reference: Vec<f64>,
    entries: Vec<ArchiveEntry<T>>,
}

impl<T> ParetoArchive<T> {
    pub fn new(reference: Vec<f64>) -> Result<Self, ParetoError> {
        if reference.is_empty() || !reference.iter().all(|r| r.is_finite() && *r > 0.0) {
            return Err(ParetoError::InvalidReference);
        }
        Ok(ParetoArchive { reference, entries: Vec::new() })
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn arity(&self) -> usize {
        self.reference.len()
    }

    pub fn entries(&self) -> &[ArchiveEntry<T>] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<ArchiveEntry<T>> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn check(&self, v: &[f64]) -> Result<(), ParetoError> {
        if v.len() != self.reference.len() {
            return Err(ParetoError::Arity { expected: self.reference.len(), found: v.len() });
        }
        Ok(())
    }

    /// Whether some entry is at least as good as `v` in every objective.
    pub fn covers(&self, v: &[f64]) -> bool {
        self.entries.iter().any(|e| weakly_dominates(&e.objectives, v))
    }

    pub fn insert(&mut self, id: usize, objectives: Vec<f64>, item: T) -> Result<Insertion, ParetoError> {
        self.check(&objectives)?;
        if self.covers(&objectives) {
            return Ok(Insertion::Dominated);
        }
        let before = self.entries.len();
        self.entries.retain(|e| !dominates_unchecked(&objectives, &e.objectives));
        let removed = before - self.entries.len();
        let beyond_reference = objectives.iter().zip(&self.reference).any(|(x, r)| x >= r);
        self.entries.push(ArchiveEntry { id, objectives, item });
        Ok(Insertion::Added { removed, beyond_reference })
    }

    /// Objective vector scaled into the unit box spanned by the reference.
    pub fn normalize(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(&self.reference).map(|(x, r)| (x / r).min(1.0)).collect()
    }

    /// Raw hypervolume against the reference point.
    pub fn hypervolume(&self) -> f64 {
        let pts: Vec<&[f64]> = self.entries.iter().map(|e| e.objectives.as_slice()).collect();
        hypervolume(&pts, &self.reference)
    }

    /// Hypervolume of the normalised objectives inside the unit box.
    pub fn normalized_hypervolume(&self) -> f64 {
        let pts: Vec<Vec<f64>> = self.entries.iter().map(|e| self.normalize(&e.objectives)).collect();
        hypervolume(&pts, &vec![1.0; self.reference.len()])
    }

    /// Normalised hypervolume that inserting `v` would add.
    pub fn normalized_gain(&self, v: &[f64]) -> f64 {
        if self.covers(v) {
            return 0.0;
        }
        let ones = vec![1.0; self.reference.len()];
        let pts: Vec<Vec<f64>> = self.entries.iter().map(|e| self.normalize(&e.objectives)).collect();
        hypervolume_gain(&self.normalize(v), &pts, &ones)
    }
}

impl<T> ParetoArchive<T> {
    /// Keeps only the entries for which `keep` returns true.
    pub fn retain<F: FnMut(&ArchiveEntry<T>) -> bool>(&mut self, keep: F) {
        self.entries.retain(keep);
    }
}

impl<T: Clone> ParetoArchive<T> {
    /// Offers every entry of `other` to this archive.
    pub fn merge(&mut self, other: &ParetoArchive<T>) -> Result<usize, ParetoError> {
        let mut added = 0;
        for e in &other.entries {
            if self.insert(e.id, e.objectives.clone(), e.item.clone())?.is_added() {
                added += 1;
            }
        }
        Ok(added)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominance_cases() {
        assert_eq!(dominates(&[1.0, 2.0], &[2.0, 3.0]), Ok(true));
        assert_eq!(dominates(&[1.0, 2.0], &[1.0, 2.0]), Ok(false));
        assert_eq!(dominates(&[1.0, 3.0], &[2.0, 2.0]), Ok(false));
        assert!(dominates(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn two_point_front() {
        let front = [[1.0, 2.0], [2.0, 1.0]];
        assert_eq!(hypervolume(&front, &[3.0, 3.0]), 3.0);
        let empty: [[f64; 2]; 0] = [];
        assert_eq!(hypervolume(&empty, &[3.0, 3.0]), 0.0);
    }

    #[test]
    fn boxes_in_higher_dimensions() {
        assert!((hypervolume(&[[0.0, 0.0, 0.0]], &[1.0, 2.0, 3.0]) - 6.0).abs() < 1e-12);
        // two 3-D boxes overlapping in a unit cube
        let pts = [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]];
        assert!((hypervolume(&pts, &[2.0, 2.0, 1.0]) - 3.0).abs() < 1e-12);
        let pts = [[0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 1.0, 0.0]];
        assert!((hypervolume(&pts, &[1.0, 1.0, 2.0, 2.0]) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn gain_matches_difference() {
        let others = [[1.0, 2.0], [2.0, 1.0]];
        let p = [1.5, 1.5];
        let with: Vec<[f64; 2]> = others.iter().copied().chain([p]).collect();
        let diff = hypervolume(&with, &[3.0, 3.0]) - hypervolume(&others, &[3.0, 3.0]);
        assert!((hypervolume_gain(&p, &others, &[3.0, 3.0]) - diff).abs() < 1e-12);
    }

    #[test]
    fn archive_insertions() {
        let mut a = ParetoArchive::new(vec![10.0, 10.0]).unwrap();
        assert!(a.insert(0, vec![2.0, 2.0], ()).unwrap().is_added());
        assert_eq!(a.insert(1, vec![1.0, 1.0], ()).unwrap(), Insertion::Added { removed: 1, beyond_reference: false });
        assert_eq!(a.len(), 1);
        assert_eq!(a.entries()[0].objectives, vec![1.0, 1.0]);
        assert_eq!(a.insert(2, vec![3.0, 3.0], ()).unwrap(), Insertion::Dominated);
        assert_eq!(a.insert(3, vec![1.0, 1.0], ()).unwrap(), Insertion::Dominated);
        assert_eq!(a.len(), 1);
        assert!(a.insert(4, vec![0.5], ()).is_err());
    }

    #[test]
    fn points_beyond_reference_are_kept_but_weightless() {
        let mut a = ParetoArchive::new(vec![2.0, 2.0]).unwrap();
        assert_eq!(a.insert(0, vec![0.0, 3.0], ()).unwrap(), Insertion::Added { removed: 0, beyond_reference: true });
        assert_eq!(a.len(), 1);
        assert_eq!(a.hypervolume(), 0.0);
        a.insert(1, vec![1.0, 1.0], ()).unwrap();
        assert_eq!(a.hypervolume(), 1.0);
        assert_eq!(a.normalized_hypervolume(), 0.25);
    }

    #[test]
    fn reference_from_worst() {
        let r = reference_from_samples(&[[1.0, 0.0], [2.0, 0.0]]);
        assert!((r[0] - 2.2).abs() < 1e-12);
        assert_eq!(r[1], 1.0);
    }
}
