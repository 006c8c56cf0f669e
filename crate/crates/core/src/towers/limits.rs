//! Direct and inverse systems of graded Z[U]-modules: colimits with
//! stabilization detection, Mittag-Leffler inverse limits, and symbolic
//! pro-objects for towers that do not stabilize.

use crate::algebra::matrix::IntMatrix;
use crate::algebra::module::{map_is_iso_at, Component, GradedZUModule, ModuleMap};
use crate::algebra::snf::{kernel_basis, lattices_equal, smith_normal_form};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Direct,
    Inverse,
}

/// Optional periodicity datum: shifting the index by `index_shift` shifts the
/// value tables by `degree_shift`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TowerPeriodicity {
    pub index_shift: usize,
    pub degree_shift: i64,
}

/// An indexed family of graded modules with structure maps:
/// direct towers map term i to term i+1, inverse towers map term i+1 to i.
#[derive(Clone, Debug)]
pub struct ModuleTower {
    pub direction: Direction,
    pub terms: Vec<GradedZUModule>,
    pub maps: Vec<ModuleMap>,
    pub periodicity: Option<TowerPeriodicity>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TowerError {
    NonStabilizing { degree: i64, range: (usize, usize) },
    ShapeMismatch,
}

impl std::fmt::Display for TowerError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TowerError::NonStabilizing { degree, range } => write!(
                f,
                "tower does not stabilize at degree {degree} within index range {range:?}"
            ),
            TowerError::ShapeMismatch => write!(f, "terms and maps out of step"),
        }
    }
}

impl std::error::Error for TowerError {}

impl ModuleTower {
    pub fn new_direct(terms: Vec<GradedZUModule>, maps: Vec<ModuleMap>) -> Result<Self, TowerError> {
        if terms.len() != maps.len() + 1 {
            return Err(TowerError::ShapeMismatch);
        }
        Ok(ModuleTower {
            direction: Direction::Direct,
            terms,
            maps,
            periodicity: None,
        })
    }

    pub fn new_inverse(terms: Vec<GradedZUModule>, maps: Vec<ModuleMap>) -> Result<Self, TowerError> {
        if terms.len() != maps.len() + 1 {
            return Err(TowerError::ShapeMismatch);
        }
        Ok(ModuleTower {
            direction: Direction::Inverse,
            terms,
            maps,
            periodicity: None,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The subtower on the given term indices (cofinal subsequences for
    /// invariance checks). Maps are composed along the skipped terms.
    pub fn subsequence(&self, indices: &[usize]) -> ModuleTower {
        assert!(indices.windows(2).all(|w| w[0] < w[1]));
        let terms: Vec<GradedZUModule> = indices.iter().map(|&i| self.terms[i].clone()).collect();
        let mut maps = Vec::new();
        for w in indices.windows(2) {
            maps.push(self.composed_map(w[0], w[1]));
        }
        ModuleTower {
            direction: self.direction,
            terms,
            maps,
            periodicity: None,
        }
    }

    /// Composite structure map between term lo and term hi: direct towers
    /// give terms[lo] -> terms[hi], inverse towers terms[hi] -> terms[lo].
    pub fn composed_map(&self, lo: usize, hi: usize) -> ModuleMap {
        assert!(lo <= hi);
        match self.direction {
            Direction::Direct => {
                let mut acc = ModuleMap::identity(&self.terms[lo]);
                for k in lo..hi {
                    acc = compose(&self.terms[lo], &self.terms[k], &self.terms[k + 1], &acc, &self.maps[k]);
                }
                acc
            }
            Direction::Inverse => {
                let mut acc = ModuleMap::identity(&self.terms[hi]);
                for k in (lo..hi).rev() {
                    acc = compose(&self.terms[hi], &self.terms[k + 1], &self.terms[k], &acc, &self.maps[k]);
                }
                acc
            }
        }
    }
}

/// g ∘ f for f: A -> B, g: B -> C.
pub fn compose(
    a: &GradedZUModule,
    b: &GradedZUModule,
    c: &GradedZUModule,
    f: &ModuleMap,
    g: &ModuleMap,
) -> ModuleMap {
    let mut out = ModuleMap::zero(f.degree_shift + g.degree_shift);
    let (lo, hi) = a.window();
    for d in lo..=hi {
        if a.component(d).generator_count() == 0 {
            continue;
        }
        let fb = f.block(a, b, d);
        let gb = g.block(b, c, d + f.degree_shift);
        let m = gb.mul(&fb);
        if m.rows() > 0 || m.cols() > 0 {
            out.insert_block(d, m);
        }
    }
    out
}

const STABLE_RUN: usize = 2;

/// Colimit of a direct tower: per degree, the maps must become isomorphisms
/// within the supplied range; the stable value is reported.
pub fn colimit(t: &ModuleTower) -> Result<GradedZUModule, TowerError> {
    assert_eq!(t.direction, Direction::Direct);
    if t.terms.is_empty() {
        return Err(TowerError::ShapeMismatch);
    }
    let last = t.terms.last().unwrap();
    let window = t
        .terms
        .iter()
        .fold((i64::MAX, i64::MIN), |acc, m| {
            (acc.0.min(m.window().0), acc.1.max(m.window().1))
        });
    let mut components = BTreeMap::new();
    for d in window.0..=window.1 {
        // find the terminal run of isomorphisms at this degree
        let mut run = 0usize;
        for k in 0..t.maps.len() {
            if map_is_iso_at(&t.terms[k], &t.terms[k + 1], &t.maps[k], d) {
                run += 1;
            } else {
                run = 0;
            }
        }
        let needed = STABLE_RUN.min(t.maps.len());
        if run < needed {
            return Err(TowerError::NonStabilizing {
                degree: d,
                range: (0, t.terms.len()),
            });
        }
        let c = last.component(d);
        if !c.is_zero() {
            components.insert(d, c);
        }
    }
    Ok(GradedZUModule::from_components(window, components))
}

/// The group structure of the subgroup of ⊕ Z/o_i generated by the columns of
/// `gens`.
pub fn subgroup_structure(gens: &IntMatrix, orders: &[BigInt]) -> Component {
    let m = gens.cols();
    if m == 0 {
        return Component::default();
    }
    // relations among the generators: coefficient vectors c with Σ c_a g_a ≡ 0
    let n = orders.len();
    let mut rel = IntMatrix::zeros(n, orders.iter().filter(|o| !o.is_zero()).count());
    let mut col = 0;
    for (i, o) in orders.iter().enumerate() {
        if !o.is_zero() {
            rel.set(i, col, o.clone());
            col += 1;
        }
    }
    let stacked = gens.hstack(&rel);
    let kernel = kernel_basis(&stacked);
    let coeff_kernel = IntMatrix::from_fn(m, kernel.cols(), |i, j| kernel.get(i, j).clone());
    let snf = smith_normal_form(&coeff_kernel);
    let mut torsion = Vec::new();
    let mut free = m;
    for i in 0..snf.rank() {
        let dval = snf.s.get(i, i).clone();
        if dval.is_one() {
            free -= 1;
        } else {
            torsion.push(dval);
            free -= 1;
        }
    }
    torsion.sort();
    Component {
        torsion,
        free_rank: free,
    }
}

pub enum InverseOutcome {
    /// Degreewise limit with lim¹ = 0 certified through the Mittag-Leffler
    /// condition.
    Limit { value: GradedZUModule },
    /// Images do not stabilize within the window; the tower is kept
    /// symbolically instead of being collapsed.
    Pro { tower: ModuleTower },
}

impl InverseOutcome {
    pub fn value(&self) -> Option<&GradedZUModule> {
        match self {
            InverseOutcome::Limit { value } => Some(value),
            InverseOutcome::Pro { .. } => None,
        }
    }
}

/// Inverse limit of an inverse tower (terms[0] is the target of the system).
/// Verifies the Mittag-Leffler condition degreewise: the images of the deep
/// composites into each fixed term must stabilize, and the stable image
/// system must become an isomorphism tower.
pub fn inverse_limit(t: &ModuleTower) -> InverseOutcome {
    assert_eq!(t.direction, Direction::Inverse);
    let n = t.terms.len();
    if n == 0 {
        return InverseOutcome::Pro { tower: t.clone() };
    }
    let window = t.terms[0].window();
    // image lattices of composites into term j, from depth k ≥ j
    let image_stable = |j: usize, d: i64| -> Option<Component> {
        let tgt = t.terms[j].component(d);
        let orders = tgt.orders();
        let mut prev: Option<IntMatrix> = None;
        let mut stable_since = None;
        for k in j + 1..n {
            let comp = t.composed_map(j, k);
            let block = comp.block(&t.terms[k], &t.terms[j], d);
            let aug = block.hstack(&tgt.relations());
            if let Some(p) = &prev {
                if lattices_equal(p, &aug) {
                    if stable_since.is_none() {
                        stable_since = Some(k);
                    }
                } else {
                    stable_since = None;
                }
            }
            prev = Some(aug);
        }
        if stable_since.is_some() || n <= 2 {
            let block = t
                .composed_map(j, n - 1)
                .block(&t.terms[n - 1], &t.terms[j], d);
            Some(subgroup_structure(&block, &orders))
        } else {
            None
        }
    };
    let mut components = BTreeMap::new();
    for d in window.0..=window.1 {
        // Mittag-Leffler into the front of the tower
        let Some(front) = image_stable(0, d) else {
            return InverseOutcome::Pro { tower: t.clone() };
        };
        // the stable images must agree a step deeper (iso image system)
        if n > 2 {
            let Some(next) = image_stable(1, d) else {
                return InverseOutcome::Pro { tower: t.clone() };
            };
            if front != next {
                return InverseOutcome::Pro { tower: t.clone() };
            }
        }
        if !front.is_zero() {
            components.insert(d, front);
        }
    }
    InverseOutcome::Limit {
        value: GradedZUModule::from_components(window, components),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::module::free_z_in_degrees;

    fn z_mod(w: (i64, i64)) -> GradedZUModule {
        free_z_in_degrees(w, &[0])
    }

    fn id_map(m: &GradedZUModule) -> ModuleMap {
        ModuleMap::identity(m)
    }

    #[test]
    fn constant_direct_tower_colimits_to_value() {
        let w = (0, 2);
        let m = z_mod(w);
        let t = ModuleTower::new_direct(
            vec![m.clone(), m.clone(), m.clone(), m.clone()],
            vec![id_map(&m), id_map(&m), id_map(&m)],
        )
        .unwrap();
        let c = colimit(&t).unwrap();
        assert_eq!(c.component(0), Component::free(1));
    }

    #[test]
    fn eventually_constant_tower_colimits() {
        let w = (0, 2);
        let zero = GradedZUModule::zero(w);
        let m = z_mod(w);
        let mut first = ModuleMap::zero(0);
        first.insert_block(0, IntMatrix::zeros(1, 0));
        let t = ModuleTower::new_direct(
            vec![zero, m.clone(), m.clone(), m.clone()],
            vec![first, id_map(&m), id_map(&m)],
        )
        .unwrap();
        let c = colimit(&t).unwrap();
        assert_eq!(c.component(0), Component::free(1));
    }

    #[test]
    fn non_stabilizing_tower_detected() {
        let w = (0, 0);
        let m = z_mod(w);
        let mut two = ModuleMap::zero(0);
        two.insert_block(0, IntMatrix::from_rows(&[vec![2]]));
        let t = ModuleTower::new_direct(
            vec![m.clone(), m.clone(), m.clone(), m.clone()],
            vec![two.clone(), two.clone(), two],
        )
        .unwrap();
        match colimit(&t) {
            Err(TowerError::NonStabilizing { degree: 0, .. }) => {}
            other => panic!("expected NonStabilizing, got {other:?}"),
        }
    }

    #[test]
    fn colimit_invariant_under_cofinal_subsequence() {
        let w = (0, 1);
        let m = z_mod(w);
        let terms = vec![m.clone(), m.clone(), m.clone(), m.clone(), m.clone()];
        let maps = vec![id_map(&m), id_map(&m), id_map(&m), id_map(&m)];
        let t = ModuleTower::new_direct(terms, maps).unwrap();
        let full = colimit(&t).unwrap();
        let sub = colimit(&t.subsequence(&[0, 2, 4])).unwrap();
        assert!(crate::algebra::module::tables_isomorphic(&full, &sub));
    }

    #[test]
    fn eventually_constant_inverse_tower_limits() {
        let w = (0, 2);
        let m = z_mod(w);
        let t = ModuleTower::new_inverse(
            vec![m.clone(), m.clone(), m.clone(), m.clone()],
            vec![id_map(&m), id_map(&m), id_map(&m)],
        )
        .unwrap();
        match inverse_limit(&t) {
            InverseOutcome::Limit { value } => {
                assert_eq!(value.component(0), Component::free(1));
            }
            InverseOutcome::Pro { .. } => panic!("expected a limit"),
        }
    }

    #[test]
    fn doubling_inverse_tower_stays_symbolic() {
        let w = (0, 0);
        let m = z_mod(w);
        let mut two = ModuleMap::zero(0);
        two.insert_block(0, IntMatrix::from_rows(&[vec![2]]));
        let t = ModuleTower::new_inverse(
            vec![m.clone(), m.clone(), m.clone(), m.clone(), m.clone()],
            vec![two.clone(), two.clone(), two.clone(), two],
        )
        .unwrap();
        assert!(matches!(inverse_limit(&t), InverseOutcome::Pro { .. }));
    }

    #[test]
    fn subgroup_structure_examples() {
        // subgroup of Z generated by 2: free of rank 1
        let g = IntMatrix::from_rows(&[vec![2]]);
        let s = subgroup_structure(&g, &[BigInt::zero()]);
        assert_eq!(s, Component::free(1));
        // subgroup of Z/4 generated by 2: Z/2
        let s = subgroup_structure(&g, &[BigInt::from(4)]);
        assert_eq!(s.free_rank, 0);
        assert_eq!(s.torsion, vec![BigInt::from(2)]);
        // zero generator
        let g = IntMatrix::from_rows(&[vec![0]]);
        let s = subgroup_structure(&g, &[BigInt::zero()]);
        assert!(s.is_zero());
    }
}
