//! Attractor-repeller decompositions along a transverse level split and the
//! induced long exact sequence of index homologies, realized by the triple
//! L ⊆ (A-side ∪ L) ⊆ N on a common grid.

use super::grid::FaceTable;
use super::homology::{
    build_cell_model, connecting_map, induced_theory_map, relative_pair, theory_homology,
    TheoryHomology,
};
use super::outer::{build_outer_map, OuterMap, OuterMapConfig, VectorFlow};
use super::pair::{build_index_pair_from_outer, check_pair_conditions, ConleyError, IndexPair};
use crate::algebra::module::{check_exact, ExactnessReport, GradedZUModule, ModuleMap};
use crate::equivariant::Theory;

/// A level split of the region: the attractor side is {f ≤ value}.
pub struct LevelSplit<'a> {
    pub f: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    pub value: f64,
}

pub struct AttractorRepeller {
    pub attractor: GradedZUModule,
    pub total: GradedZUModule,
    pub repeller: GradedZUModule,
    pub attractor_map: ModuleMap,
    pub repeller_map: ModuleMap,
    pub connecting: ModuleMap,
    pub exactness: ExactnessReport,
    pub attractor_certified: bool,
    pub repeller_certified: bool,
}

impl AttractorRepeller {
    pub fn sequence_exact(&self) -> bool {
        self.exactness.is_exact()
    }
}

/// Sample transversality of the split surface: the flow field must pair with
/// ∇f with one strict sign on the band of cells straddling the level.
fn check_transversality(
    flow: &dyn VectorFlow,
    outer: &OuterMap,
    split: &LevelSplit,
) -> Result<(), ConleyError> {
    let grid = &outer.grid;
    let eps = grid.h * 0.05;
    let mut sign = 0.0f64;
    for idx in 0..grid.cell_count() {
        if !outer.active[idx] {
            continue;
        }
        let c = grid.center(&grid.multi_of(idx));
        let v = (split.f)(&c);
        if (v - split.value).abs() > grid.h {
            continue;
        }
        let field = flow.field(&c);
        let mut pairing = 0.0;
        for a in 0..grid.dims() {
            let mut cp = c.clone();
            cp[a] += eps;
            let mut cm = c.clone();
            cm[a] -= eps;
            let df = ((split.f)(&cp) - (split.f)(&cm)) / (2.0 * eps);
            pairing += field[a] * df;
        }
        if pairing.abs() < 1e-12 {
            return Err(ConleyError::TransversalityFailure { at: c, pairing });
        }
        if sign == 0.0 {
            sign = pairing.signum();
        } else if sign != pairing.signum() {
            return Err(ConleyError::TransversalityFailure { at: c, pairing });
        }
    }
    Ok(())
}

/// Build the A-R triple for the maximal invariant set of the active region,
/// split by the level surface. Homologies in the requested theory together
/// with the two structure maps and the connecting homomorphism.
pub fn attractor_repeller(
    flow: &dyn VectorFlow,
    outer: OuterMap,
    split: &LevelSplit,
    theory: Theory,
    window: (i64, i64),
) -> Result<(AttractorRepeller, IndexPair), ConleyError> {
    check_transversality(flow, &outer, split)?;
    let total_pair = build_index_pair_from_outer(outer)?;
    let sequence = attractor_repeller_of_pair(&total_pair, split, theory, window)?;
    Ok((sequence, total_pair))
}

/// The same construction on an already certified total pair.
pub fn attractor_repeller_of_pair(
    total_pair: &IndexPair,
    split: &LevelSplit,
    theory: Theory,
    window: (i64, i64),
) -> Result<AttractorRepeller, ConleyError> {
    let outer = &total_pair.outer;
    let grid = &outer.grid;
    let count = grid.cell_count();
    let a_side: Vec<bool> = (0..count)
        .map(|idx| (split.f)(&grid.center(&grid.multi_of(idx))) <= split.value)
        .collect();

    let n0 = &total_pair.n;
    let l0 = &total_pair.l;
    // N1 = (N0 ∩ A-side) ∪ L0, N2 = L0
    let n1: Vec<bool> = (0..count).map(|i| (n0[i] && a_side[i]) || l0[i]).collect();

    // certify the sub-pairs against their own invariant sets
    let sub_invariant = |side: &dyn Fn(usize) -> bool| -> Vec<bool> {
        let mut active = vec![false; count];
        for i in 0..count {
            active[i] = outer.active[i] && side(i);
        }
        let restricted = OuterMap {
            grid: grid.clone(),
            active: active.clone(),
            images: (0..count)
                .map(|i| {
                    if active[i] {
                        outer.images[i]
                            .iter()
                            .copied()
                            .filter(|&w| active[w as usize])
                            .collect()
                    } else {
                        Vec::new()
                    }
                })
                .collect(),
            leaves: outer.leaves.clone(),
            step_time: outer.step_time,
            lipschitz: outer.lipschitz,
        };
        restricted.invariant_part()
    };
    let s_a = sub_invariant(&|i| a_side[i]);
    let s_r = sub_invariant(&|i| !a_side[i]);
    let cert_a = check_pair_conditions(outer, &s_a, &n1, l0);
    let cert_r = check_pair_conditions(outer, &s_r, n0, &n1);

    let cells_of = |v: &Vec<bool>| -> Vec<usize> { (0..count).filter(|&i| v[i]).collect() };
    let mut table = FaceTable::default();
    let pair_s = relative_pair(grid, &cells_of(n0), &cells_of(l0), &mut table);
    let pair_a = relative_pair(grid, &cells_of(&n1), &cells_of(l0), &mut table);
    let pair_r = relative_pair(grid, &cells_of(n0), &cells_of(&n1), &mut table);
    let model_s = build_cell_model(grid, &pair_s, &table)?;
    let model_a = build_cell_model(grid, &pair_a, &table)?;
    let model_r = build_cell_model(grid, &pair_r, &table)?;
    let th_s = theory_homology(&model_s, theory, window);
    let th_a = theory_homology(&model_a, theory, window);
    let th_r = theory_homology(&model_r, theory, window);

    let attractor_map = induced_theory_map(&th_a, &model_a, &th_s, &model_s);
    let repeller_map = induced_theory_map(&th_s, &model_s, &th_r, &model_r);
    let connecting = connecting_map(&th_r, &model_r, &model_s, &th_a, &model_a);

    let exactness = check_exact(
        &[
            &th_a.module,
            &th_s.module,
            &th_r.module,
            &th_a.module,
            &th_s.module,
        ],
        &[&attractor_map, &repeller_map, &connecting, &attractor_map],
    );
    Ok(AttractorRepeller {
        attractor: th_a.module,
        total: th_s.module,
        repeller: th_r.module,
        attractor_map,
        repeller_map,
        connecting,
        exactness,
        attractor_certified: cert_a.all_ok(),
        repeller_certified: cert_r.all_ok(),
    })
}

/// Convenience wrapper: build the outer map over the full grid first.
pub fn attractor_repeller_on_grid(
    flow: &dyn VectorFlow,
    grid: &super::grid::CubicalGrid,
    active: Vec<bool>,
    config: &OuterMapConfig,
    split: &LevelSplit,
    theory: Theory,
    window: (i64, i64),
) -> Result<(AttractorRepeller, IndexPair), ConleyError> {
    let outer = build_outer_map(flow, grid, active, config);
    attractor_repeller(flow, outer, split, theory, window)
}

pub use super::homology::TheoryHomology as _TheoryHomologyReexport;
pub type TheoryPair = TheoryHomology;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::module::Component;
    use crate::conley::grid::CubicalGrid;
    use crate::conley::outer::FnFlow;

    #[test]
    fn double_well_attractor_repeller_sequence() {
        // ẋ = x - x³: attractor {±1}, repeller {0}; split by |x| at 1/2
        let grid = CubicalGrid::new(vec![-1.5], 0.04, vec![75], vec![]).unwrap();
        let flow = FnFlow {
            dims: 1,
            f: |x: &[f64]| vec![x[0] - x[0].powi(3)],
        };
        let split = LevelSplit {
            f: &|x: &[f64]| -(x[0].abs()),
            value: -0.5,
        };
        let (seq, total) = attractor_repeller_on_grid(
            &flow,
            &grid,
            vec![true; grid.cell_count()],
            &OuterMapConfig::default(),
            &split,
            Theory::Ordinary,
            (0, 4),
        )
        .unwrap();
        assert!(total.certificate.all_ok());
        assert!(seq.attractor_certified);
        assert!(seq.repeller_certified);
        assert_eq!(seq.attractor.component(0), Component::free(2), "two wells");
        assert_eq!(seq.total.component(0), Component::free(1));
        assert_eq!(seq.repeller.component(1), Component::free(1));
        assert!(seq.sequence_exact(), "{:?}", seq.exactness.first_failure());
    }

    #[test]
    fn empty_repeller_side_gives_isomorphism() {
        let grid = CubicalGrid::new(vec![-1.0], 0.05, vec![40], vec![]).unwrap();
        let flow = FnFlow {
            dims: 1,
            f: |x: &[f64]| vec![-x[0]],
        };
        // split far above: everything is the attractor side
        let split = LevelSplit {
            f: &|x: &[f64]| x[0],
            value: 10.0,
        };
        let (seq, _) = attractor_repeller_on_grid(
            &flow,
            &grid,
            vec![true; grid.cell_count()],
            &OuterMapConfig::default(),
            &split,
            Theory::Ordinary,
            (0, 3),
        )
        .unwrap();
        assert!(seq.repeller.is_zero());
        assert!(seq.sequence_exact());
        assert!(crate::algebra::module::map_is_iso(
            &seq.attractor,
            &seq.total,
            &seq.attractor_map
        ));
    }

    #[test]
    fn transversality_failure_detected() {
        // split along a level surface tangent to the flow at the origin
        let grid = CubicalGrid::new(vec![-1.0, -1.0], 0.1, vec![20, 20], vec![]).unwrap();
        let flow = FnFlow {
            dims: 2,
            f: |x: &[f64]| vec![-x[0], -x[1]],
        };
        let split = LevelSplit {
            f: &|x: &[f64]| x[0],
            value: 0.05,
        };
        let outer = build_outer_map(
            &flow,
            &grid,
            vec![true; grid.cell_count()],
            &OuterMapConfig::default(),
        );
        let r = attractor_repeller(&flow, outer, &split, Theory::Ordinary, (0, 3));
        assert!(matches!(r, Err(ConleyError::TransversalityFailure { .. })));
    }
}
