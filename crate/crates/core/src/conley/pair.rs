//! Index pairs (N, L) for isolated invariant sets of the combinatorial outer
//! approximation, with re-checkable certificates for the three conditions:
//! the invariant set interior to N∖L, L an exit set, L positively invariant.

use super::grid::CubicalGrid;
use super::outer::{build_outer_map, OuterMap, OuterMapConfig, VectorFlow};

#[derive(Clone, Debug, PartialEq)]
pub enum ConleyError {
    /// The invariant set touches the region boundary.
    IsolationFailure { cell: Vec<usize> },
    /// L grew into the collar of S; the grid is too coarse.
    CollarTooThin,
    /// Same, with the first offending invariant cell.
    CollarTooThinAt { cell: Vec<usize> },
    EmptyRegion,
    /// Transversality of a level split failed at a sampled point.
    TransversalityFailure { at: Vec<f64>, pairing: f64 },
    /// A face outside the single-active-slot regime was needed.
    MultiSlotCell,
}

impl std::fmt::Display for ConleyError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConleyError::IsolationFailure { cell } => {
                write!(f, "invariant set touches the region boundary at cell {cell:?}")
            }
            ConleyError::CollarTooThin => write!(f, "exit set closure reached the invariant set"),
            ConleyError::CollarTooThinAt { cell } => {
                write!(f, "exit set closure reached the invariant set at cell {cell:?}")
            }
            ConleyError::EmptyRegion => write!(f, "no active cells in the region"),
            ConleyError::TransversalityFailure { at, pairing } => {
                write!(f, "level split not transverse at {at:?} (pairing {pairing:.3e})")
            }
            ConleyError::MultiSlotCell => {
                write!(f, "cell with several positive slot radii; one active slot supported")
            }
        }
    }
}

impl std::error::Error for ConleyError {}

#[derive(Clone, Debug, Default)]
pub struct PairCertificate {
    /// Condition 1: S contained in the combinatorial interior of N∖L.
    pub interior_ok: bool,
    /// Condition 2: cells of N∖L map into N.
    pub exit_ok: bool,
    /// Condition 3: image of L inside N stays in L.
    pub positively_invariant_ok: bool,
    pub s_cells: usize,
    pub n_cells: usize,
    pub l_cells: usize,
}

impl PairCertificate {
    pub fn all_ok(&self) -> bool {
        self.interior_ok && self.exit_ok && self.positively_invariant_ok
    }
}

/// A certified index pair over a cubical outer approximation.
pub struct IndexPair {
    pub outer: OuterMap,
    pub s: Vec<bool>,
    pub n: Vec<bool>,
    pub l: Vec<bool>,
    pub certificate: PairCertificate,
}

impl IndexPair {
    pub fn grid(&self) -> &CubicalGrid {
        &self.outer.grid
    }

    pub fn n_cell_indices(&self) -> Vec<usize> {
        (0..self.n.len()).filter(|&i| self.n[i]).collect()
    }

    pub fn l_cell_indices(&self) -> Vec<usize> {
        (0..self.l.len()).filter(|&i| self.l[i]).collect()
    }
}

/// Independently re-check the three conditions for an arbitrary (N, L) and
/// invariant set S over an outer map.
pub fn check_pair_conditions(
    outer: &OuterMap,
    s: &[bool],
    n: &[bool],
    l: &[bool],
) -> PairCertificate {
    let grid = &outer.grid;
    let count = grid.cell_count();
    let mut interior_ok = true;
    for idx in 0..count {
        if !s[idx] {
            continue;
        }
        if !n[idx] || l[idx] {
            interior_ok = false;
            break;
        }
        // neighbors must stay in N∖L; beyond a hard wall there is no room
        let multi = grid.multi_of(idx);
        for nb in grid.neighbors(&multi) {
            let nidx = grid.index_of(&nb);
            if !n[nidx] || l[nidx] {
                interior_ok = false;
                break;
            }
        }
        if !interior_ok {
            break;
        }
    }
    let mut exit_ok = true;
    for idx in 0..count {
        if !n[idx] || l[idx] {
            continue;
        }
        if outer.leaves[idx] {
            exit_ok = false;
            break;
        }
        if outer.images[idx].iter().any(|&w| !n[w as usize]) {
            exit_ok = false;
            break;
        }
    }
    let mut positively_invariant_ok = true;
    for idx in 0..count {
        if !l[idx] {
            continue;
        }
        for &w in &outer.images[idx] {
            let w = w as usize;
            if n[w] && !l[w] {
                positively_invariant_ok = false;
                break;
            }
        }
        if !positively_invariant_ok {
            break;
        }
    }
    PairCertificate {
        interior_ok,
        exit_ok,
        positively_invariant_ok,
        s_cells: s.iter().filter(|x| **x).count(),
        n_cells: n.iter().filter(|x| **x).count(),
        l_cells: l.iter().filter(|x| **x).count(),
    }
}

/// Build an index pair for the maximal invariant set of the active region:
/// S = chain-recurrent over-approximation, N = S plus forward collars,
/// L = cells of N mapping outside, closed under images within N.
pub fn build_index_pair_from_outer(outer: OuterMap) -> Result<IndexPair, ConleyError> {
    let grid = outer.grid.clone();
    let count = grid.cell_count();
    if !outer.active.iter().any(|a| *a) {
        return Err(ConleyError::EmptyRegion);
    }
    let s = outer.invariant_part();
    for idx in 0..count {
        if !s[idx] {
            continue;
        }
        let multi = grid.multi_of(idx);
        if grid.on_hard_boundary(&multi) {
            return Err(ConleyError::IsolationFailure { cell: multi });
        }
        for nb in grid.neighbors(&multi) {
            if !outer.active[grid.index_of(&nb)] {
                return Err(ConleyError::IsolationFailure { cell: multi });
            }
        }
    }

    for collar_steps in 1..=3 {
        // N: S plus `collar_steps` forward images, plus the one-ring of S so
        // the combinatorial interior condition has room
        let mut n = s.clone();
        for idx in 0..count {
            if s[idx] {
                for nb in grid.neighbors(&grid.multi_of(idx)) {
                    let nidx = grid.index_of(&nb);
                    if outer.active[nidx] {
                        n[nidx] = true;
                    }
                }
            }
        }
        for _ in 0..collar_steps {
            let current: Vec<usize> = (0..count).filter(|&i| n[i]).collect();
            for idx in current {
                for &w in &outer.images[idx] {
                    n[w as usize] = true;
                }
            }
        }
        // L: cells of N whose image leaves N, closed under forward images in N
        let mut l = vec![false; count];
        for idx in 0..count {
            if !n[idx] {
                continue;
            }
            if outer.leaves[idx] || outer.images[idx].iter().any(|&w| !n[w as usize]) {
                l[idx] = true;
            }
        }
        // positive invariance closure: anything in N hit from L joins L
        loop {
            let mut grew = false;
            for idx in 0..count {
                if !l[idx] {
                    continue;
                }
                for &w in &outer.images[idx] {
                    let w = w as usize;
                    if n[w] && !l[w] {
                        l[w] = true;
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        let certificate = check_pair_conditions(&outer, &s, &n, &l);
        if certificate.all_ok() {
            return Ok(IndexPair {
                outer,
                s,
                n,
                l,
                certificate,
            });
        }
        if collar_steps == 3 {
            if !certificate.interior_ok {
                // locate a witness for the report
                for idx in 0..count {
                    if !s[idx] {
                        continue;
                    }
                    let multi = grid.multi_of(idx);
                    let bad = !n[idx]
                        || l[idx]
                        || grid.neighbors(&multi).iter().any(|nb| {
                            let ni = grid.index_of(nb);
                            !n[ni] || l[ni]
                        });
                    if bad {
                        return Err(ConleyError::CollarTooThinAt { cell: multi });
                    }
                }
                return Err(ConleyError::CollarTooThin);
            }
            return Ok(IndexPair {
                outer,
                s,
                n,
                l,
                certificate,
            });
        }
    }
    unreachable!()
}

/// Convenience: build the outer approximation over `active` cells of the grid
/// and extract the index pair.
pub fn build_index_pair(
    flow: &dyn VectorFlow,
    grid: &CubicalGrid,
    active: Vec<bool>,
    config: &OuterMapConfig,
) -> Result<IndexPair, ConleyError> {
    let outer = build_outer_map(flow, grid, active, config);
    build_index_pair_from_outer(outer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conley::outer::FnFlow;

    #[test]
    fn attracting_point_pair_has_empty_exit() {
        let grid = CubicalGrid::new(vec![-1.0], 0.05, vec![40], vec![]).unwrap();
        let flow = FnFlow {
            dims: 1,
            f: |x: &[f64]| vec![-x[0]],
        };
        let pair =
            build_index_pair(&flow, &grid, vec![true; 40], &OuterMapConfig::default()).unwrap();
        assert!(pair.certificate.all_ok());
        assert_eq!(pair.certificate.l_cells, 0, "attractor needs no exit set");
    }

    #[test]
    fn repelling_point_pair_has_two_exit_components() {
        let grid = CubicalGrid::new(vec![-1.0], 0.05, vec![40], vec![]).unwrap();
        let flow = FnFlow {
            dims: 1,
            f: |x: &[f64]| vec![x[0]],
        };
        let pair =
            build_index_pair(&flow, &grid, vec![true; 40], &OuterMapConfig::default()).unwrap();
        assert!(pair.certificate.all_ok());
        assert!(pair.certificate.l_cells >= 2);
    }

    #[test]
    fn isolation_failure_when_invariant_set_hits_wall() {
        // flow with rest point at the right wall
        let grid = CubicalGrid::new(vec![0.0], 0.05, vec![20], vec![]).unwrap();
        let flow = FnFlow {
            dims: 1,
            f: |x: &[f64]| vec![1.0 - x[0]],
        };
        let err = build_index_pair(&flow, &grid, vec![true; 20], &OuterMapConfig::default());
        assert!(matches!(err, Err(ConleyError::IsolationFailure { .. })));
    }
}
