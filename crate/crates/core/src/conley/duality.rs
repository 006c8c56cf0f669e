//! Flow-reversal duality: the index homology of the reversed flow pairs with
//! the cohomology of the forward index through k ↔ n - k.

use super::grid::{CubicalGrid, FaceTable};
use super::homology::{
    build_cell_model, cohomology_table, relative_pair, table_is_zero, tables_equal_shifted,
    theory_homology,
};
use super::outer::{build_outer_map, OuterMapConfig, VectorFlow};
use super::pair::{build_index_pair_from_outer, ConleyError};
use crate::equivariant::Theory;
use num_bigint::BigInt;
use std::collections::BTreeMap;

struct ReversedFlow<'a> {
    inner: &'a dyn VectorFlow,
}

impl<'a> VectorFlow for ReversedFlow<'a> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn field(&self, x: &[f64]) -> Vec<f64> {
        self.inner.field(x).into_iter().map(|v| -v).collect()
    }
}

pub struct DualityReport {
    pub forward: BTreeMap<i64, (usize, Vec<BigInt>)>,
    pub reverse: BTreeMap<i64, (usize, Vec<BigInt>)>,
    pub reverse_cohomology: BTreeMap<i64, (usize, Vec<BigInt>)>,
    /// Ambient real dimension carrying the pairing (radius axes count twice).
    pub ambient_dim: i64,
    pub pairing_holds: bool,
}

/// Compute forward and reversed index homology over the same active region
/// and check H̃_k(forward) ≅ H̃^{n-k}(reverse) degreewise.
pub fn reverse_flow_dual(
    flow: &dyn VectorFlow,
    grid: &CubicalGrid,
    active: Vec<bool>,
    config: &OuterMapConfig,
) -> Result<DualityReport, ConleyError> {
    let n = (grid.dims() + grid.radius_axes.len()) as i64;
    let window = (0, n + 2);
    let table_of = |f: &dyn VectorFlow, active: Vec<bool>| -> Result<_, ConleyError> {
        let outer = build_outer_map(f, grid, active, config);
        let pair = build_index_pair_from_outer(outer)?;
        let mut faces = FaceTable::default();
        let rel = relative_pair(grid, &pair.n_cell_indices(), &pair.l_cell_indices(), &mut faces);
        let model = build_cell_model(grid, &rel, &faces)?;
        Ok(theory_homology(&model, Theory::Ordinary, window).module.table())
    };
    let forward = table_of(flow, active.clone())?;
    let reversed = ReversedFlow { inner: flow };
    let reverse = table_of(&reversed, active)?;
    let reverse_cohomology = cohomology_table(&reverse);
    // H_k(forward) against H^{n-k}(reverse): flip and shift the cohomology
    let flipped: BTreeMap<i64, (usize, Vec<BigInt>)> = reverse_cohomology
        .iter()
        .map(|(&d, v)| (n - d, v.clone()))
        .collect();
    let pairing_holds = tables_equal_shifted(&forward, &flipped, 0, (-(n + 2), n + 2));
    Ok(DualityReport {
        forward,
        reverse,
        reverse_cohomology,
        ambient_dim: n,
        pairing_holds,
    })
}

pub fn report_is_trivial(r: &DualityReport) -> bool {
    table_is_zero(&r.forward) && table_is_zero(&r.reverse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conley::outer::FnFlow;

    #[test]
    fn attracting_point_duality_in_r1() {
        let grid = CubicalGrid::new(vec![-1.0], 0.05, vec![40], vec![]).unwrap();
        let flow = FnFlow {
            dims: 1,
            f: |x: &[f64]| vec![-x[0]],
        };
        let rep = reverse_flow_dual(&flow, &grid, vec![true; 40], &OuterMapConfig::default()).unwrap();
        assert_eq!(rep.forward.get(&0), Some(&(1, vec![])));
        assert_eq!(rep.reverse.get(&1), Some(&(1, vec![])));
        assert!(rep.pairing_holds);
    }

    #[test]
    fn saddle_duality_in_r2() {
        let grid = CubicalGrid::new(vec![-1.0, -1.0], 0.1, vec![20, 20], vec![]).unwrap();
        let flow = FnFlow {
            dims: 2,
            f: |x: &[f64]| vec![-x[0], x[1]],
        };
        let rep = reverse_flow_dual(
            &flow,
            &grid,
            vec![true; grid.cell_count()],
            &OuterMapConfig::default(),
        )
        .unwrap();
        assert_eq!(rep.forward.get(&1), Some(&(1, vec![])));
        assert_eq!(rep.reverse.get(&1), Some(&(1, vec![])));
        assert!(rep.pairing_holds);
    }

    #[test]
    fn double_well_invariant_set_duality() {
        let grid = CubicalGrid::new(vec![-1.5], 0.04, vec![75], vec![]).unwrap();
        let flow = FnFlow {
            dims: 1,
            f: |x: &[f64]| vec![x[0] - x[0].powi(3)],
        };
        let rep = reverse_flow_dual(
            &flow,
            &grid,
            vec![true; grid.cell_count()],
            &OuterMapConfig::default(),
        )
        .unwrap();
        assert_eq!(rep.forward.get(&0), Some(&(1, vec![])));
        assert_eq!(rep.reverse.get(&1), Some(&(1, vec![])));
        assert!(rep.pairing_holds);
    }

    #[test]
    fn quotient_slot_duality_counts_complex_dimensions() {
        // one radius axis: ambient dimension 2; stable slot index Z@0 pairs
        // with unstable slot index Z@2 of the reversed flow
        let grid = CubicalGrid::new(vec![0.0], 0.05, vec![16], vec![0]).unwrap();
        let flow = FnFlow {
            dims: 1,
            f: |x: &[f64]| vec![-x[0]],
        };
        let rep = reverse_flow_dual(&flow, &grid, vec![true; 16], &OuterMapConfig::default()).unwrap();
        assert_eq!(rep.ambient_dim, 2);
        assert_eq!(rep.forward.get(&0), Some(&(1, vec![])));
        assert_eq!(rep.reverse.get(&2), Some(&(1, vec![])));
        assert!(rep.pairing_holds);
    }
}
