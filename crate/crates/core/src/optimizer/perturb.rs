use rand::Rng;

use super::SearchSpace;
use crate::arch::{ArchError, Design};

/// Attempts at drawing a valid neighbour before giving up.
pub const PERTURB_ATTEMPTS: usize = 100;

/// A single move in the design space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Perturbation {
    /// Exchange the tiles at two distinct slots.
    SwapTiles { slot_a: usize, slot_b: usize },
    /// Remove link `old` and add the absent link `new`.
    MoveLink { old: (usize, usize), new: (usize, usize) },
}

impl Perturbation {
    pub fn apply(&self, design: &Design) -> Result<Design, ArchError> {
        let mut next = design.clone();
        match *self {
            Perturbation::SwapTiles { slot_a, slot_b } => {
                let n = design.tile_count();
                if slot_a == slot_b || slot_a >= n || slot_b >= n {
                    return Err(ArchError::Malformed("swap needs two distinct slots"));
                }
                next.swap_slots(slot_a, slot_b);
            }
            Perturbation::MoveLink { old, new } => next.move_link(old, new)?,
        }
        Ok(next)
    }
}

/// Draws a random perturbation whose result passes validation. Returns
/// `None` when the space allows no move or every attempt failed.
pub fn random_neighbor<R: Rng + ?Sized>(
    design: &Design,
    space: &SearchSpace,
    rng: &mut R,
) -> Option<(Perturbation, Design)> {
    let n = design.tile_count();
    let free = space.free_slots(n);
    let can_swap = space.swap_tiles && free.len() >= 2;
    let can_move = space.move_links && design.link_count() > 0 && design.link_count() < n * (n - 1) / 2;
    if !can_swap && !can_move {
        return None;
    }
    for _ in 0..PERTURB_ATTEMPTS {
        let swap = match (can_swap, can_move) {
            (true, true) => rng.gen_bool(0.5),
            (s, _) => s,
        };
        let p = if swap {
            let a = rng.gen_range(0..free.len());
            let mut b = rng.gen_range(0..free.len() - 1);
            if b >= a {
                b += 1;
            }
            Perturbation::SwapTiles { slot_a: free[a], slot_b: free[b] }
        } else {
            let old = design.links()[rng.gen_range(0..design.link_count())];
            let p = rng.gen_range(0..n);
            let q = rng.gen_range(0..n);
            if p == q || design.has_link(p, q) {
                continue;
            }
            Perturbation::MoveLink { old, new: (p.min(q), p.max(q)) }
        };
        let Ok(next) = p.apply(design) else { continue };
        if next.validate(space.max_degree).is_ok() {
            return Some((p, next));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{build_hem3d_default, Technology};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn neighbours_are_valid_and_conserve_structure() {
        let d = build_hem3d_default(&Technology::m3d(), 4).unwrap();
        let space = SearchSpace::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let (p, next) = random_neighbor(&d, &space, &mut rng).unwrap();
            assert!(next.validate(7).is_ok());
            assert_eq!(next.link_count(), d.link_count());
            assert_eq!(next.mix(), d.mix());
            match p {
                Perturbation::SwapTiles { .. } => assert_eq!(next.grid(), d.grid()),
                Perturbation::MoveLink { .. } => assert_eq!(next.placement(), d.placement()),
            }
        }
    }

    #[test]
    fn pinned_slots_never_move() {
        let d = build_hem3d_default(&Technology::tsv(), 4).unwrap();
        let space = SearchSpace {
            move_links: false,
            pinned_slots: (0..62).collect(),
            ..SearchSpace::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (p, _) = random_neighbor(&d, &space, &mut rng).unwrap();
        assert!(matches!(p, Perturbation::SwapTiles { slot_a: 62, slot_b: 63 } | Perturbation::SwapTiles { slot_a: 63, slot_b: 62 }));
        let frozen = SearchSpace { swap_tiles: false, move_links: false, ..SearchSpace::default() };
        assert!(random_neighbor(&d, &frozen, &mut rng).is_none());
    }
}
