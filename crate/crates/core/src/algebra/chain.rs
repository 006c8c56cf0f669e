//! Integer chain complexes and their homology, computed through Smith normal
//! form with explicit generator representatives so that induced maps on
//! homology can be evaluated later.

use super::matrix::IntMatrix;
use super::module::{Component, GradedZUModule};
use super::snf::{inverse_unimodular, smith_normal_form, solve};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    /// d∘d != 0 at the stated degree.
    NotAComplex { degree: i64 },
    /// Boundary matrix shapes inconsistent with the generator counts.
    ShapeMismatch { degree: i64 },
    /// A purported cycle failed to lie in the kernel lattice.
    NotACycle { degree: i64 },
}

impl std::fmt::Display for AlgebraError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AlgebraError::NotAComplex { degree } => {
                write!(f, "boundary squared nonzero entering degree {degree}")
            }
            AlgebraError::ShapeMismatch { degree } => {
                write!(f, "boundary shape mismatch at degree {degree}")
            }
            AlgebraError::NotACycle { degree } => {
                write!(f, "chain at degree {degree} is not a cycle")
            }
        }
    }
}

impl std::error::Error for AlgebraError {}

/// A bounded chain complex of free Z-modules. `ranks[k]` counts generators in
/// degree `d_min + k`; `boundary(d)` maps degree d to degree d-1.
#[derive(Clone, Debug)]
pub struct ChainComplex {
    d_min: i64,
    ranks: Vec<usize>,
    boundaries: Vec<IntMatrix>,
}

impl ChainComplex {
    /// `boundaries[k]` is the map from degree `d_min + k` down to `d_min + k - 1`
    /// (so `boundaries[0]` has zero rows). Checks d∘d = 0.
    pub fn new(d_min: i64, ranks: Vec<usize>, boundaries: Vec<IntMatrix>) -> Result<Self, AlgebraError> {
        assert_eq!(ranks.len(), boundaries.len());
        for k in 0..ranks.len() {
            let expected_rows = if k == 0 { 0 } else { ranks[k - 1] };
            if boundaries[k].rows() != expected_rows || boundaries[k].cols() != ranks[k] {
                return Err(AlgebraError::ShapeMismatch {
                    degree: d_min + k as i64,
                });
            }
        }
        for k in 1..ranks.len() {
            if k >= 2 {
                let prod = boundaries[k - 1].mul(&boundaries[k]);
                if !prod.is_zero() {
                    return Err(AlgebraError::NotAComplex {
                        degree: d_min + k as i64,
                    });
                }
            }
        }
        Ok(ChainComplex {
            d_min,
            ranks,
            boundaries,
        })
    }

    pub fn d_min(&self) -> i64 {
        self.d_min
    }

    pub fn d_max(&self) -> i64 {
        self.d_min + self.ranks.len() as i64 - 1
    }

    pub fn rank(&self, degree: i64) -> usize {
        let k = degree - self.d_min;
        if k < 0 || k as usize >= self.ranks.len() {
            0
        } else {
            self.ranks[k as usize]
        }
    }

    /// Boundary out of `degree`; zero-shaped matrix outside the window.
    pub fn boundary(&self, degree: i64) -> IntMatrix {
        let k = degree - self.d_min;
        if k < 0 || k as usize >= self.ranks.len() {
            return IntMatrix::zeros(self.rank(degree - 1), self.rank(degree));
        }
        self.boundaries[k as usize].clone()
    }
}

/// Homology at one degree with enough data to express arbitrary cycles in the
/// chosen generator basis.
#[derive(Clone, Debug)]
pub struct DegreeHomology {
    /// Order of each generator: 0 for a Z summand, t >= 2 for Z/t.
    pub orders: Vec<BigInt>,
    /// Columns are representative cycles in chain coordinates.
    pub representatives: IntMatrix,
    kernel: IntMatrix,
    p_transform: IntMatrix,
    /// Diagonal of the image SNF, padded with zeros; length = kernel rank.
    image_divisors: Vec<BigInt>,
    /// Positions (in the adapted kernel basis) kept as generators.
    kept: Vec<usize>,
}

impl DegreeHomology {
    pub fn generator_count(&self) -> usize {
        self.orders.len()
    }

    pub fn free_rank(&self) -> usize {
        self.orders.iter().filter(|o| o.is_zero()).count()
    }

    pub fn torsion(&self) -> Vec<BigInt> {
        self.orders.iter().filter(|o| !o.is_zero()).cloned().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.orders.is_empty()
    }

    /// Coordinates of a cycle in the generator basis, torsion coordinates
    /// reduced mod the order. Errors when z is not a cycle.
    pub fn cycle_coordinates(&self, z: &[BigInt]) -> Result<Vec<BigInt>, AlgebraError> {
        let zmat = IntMatrix::from_columns(self.kernel.rows(), &[z.to_vec()]);
        let y = solve(&self.kernel, &zmat).ok_or(AlgebraError::NotACycle { degree: 0 })?;
        let w = self.p_transform.mul(&y);
        let mut out = Vec::with_capacity(self.kept.len());
        for (gi, &pos) in self.kept.iter().enumerate() {
            let mut c = w.get(pos, 0).clone();
            if !self.orders[gi].is_zero() {
                c = num_integer::Integer::mod_floor(&c, &self.orders[gi]);
            }
            out.push(c);
        }
        Ok(out)
    }
}

/// Kernel-mod-image homology of a chain complex at every degree, with
/// representatives.
pub fn homology_with_basis(c: &ChainComplex) -> BTreeMap<i64, DegreeHomology> {
    let mut out = BTreeMap::new();
    for d in c.d_min()..=c.d_max() {
        let n = c.rank(d);
        if n == 0 {
            continue;
        }
        let bd = c.boundary(d);
        let kernel = if bd.rows() == 0 {
            IntMatrix::identity(n)
        } else {
            super::snf::kernel_basis(&bd)
        };
        let k = kernel.cols();
        if k == 0 {
            continue;
        }
        let bd_up = c.boundary(d + 1);
        let x = if bd_up.cols() == 0 {
            IntMatrix::zeros(k, 0)
        } else {
            solve(&kernel, &bd_up).expect("image of boundary must lie in kernel")
        };
        let snf = smith_normal_form(&x);
        let r = snf.rank();
        let mut image_divisors = vec![BigInt::zero(); k];
        for (i, d_i) in snf.diagonal().into_iter().enumerate() {
            image_divisors[i] = d_i;
        }
        let p_inv = inverse_unimodular(&snf.p);
        let mut orders = Vec::new();
        let mut kept = Vec::new();
        let mut reps: Vec<Vec<BigInt>> = Vec::new();
        for i in 0..k {
            let order = if i < r {
                image_divisors[i].clone()
            } else {
                BigInt::zero()
            };
            if order.is_one() {
                continue;
            }
            orders.push(order);
            kept.push(i);
            let rep = kernel.mul_vec(&p_inv.column(i));
            reps.push(rep);
        }
        if orders.is_empty() {
            continue;
        }
        let representatives = IntMatrix::from_columns(n, &reps);
        out.insert(
            d,
            DegreeHomology {
                orders,
                representatives,
                kernel,
                p_transform: snf.p.clone(),
                image_divisors,
                kept,
            },
        );
    }
    out
}

/// Homology packaged as a graded Z[U]-module with trivial U action.
pub fn homology(c: &ChainComplex) -> GradedZUModule {
    let by_degree = homology_with_basis(c);
    let mut components = BTreeMap::new();
    for (d, h) in &by_degree {
        components.insert(
            *d,
            Component {
                torsion: h.torsion(),
                free_rank: h.free_rank(),
            },
        );
    }
    GradedZUModule::from_components((c.d_min(), c.d_max()), components)
}

/// Push a chain map through two homology computations: for each generator of
/// `source_h`, apply `map` (chain coordinates) and express in `target_h`.
/// Returns the matrix of the induced map in the generator bases.
pub fn induced_map(
    source_h: &DegreeHomology,
    target_h: &DegreeHomology,
    map: impl Fn(&[BigInt]) -> Vec<BigInt>,
) -> Result<IntMatrix, AlgebraError> {
    let mut cols = Vec::new();
    for g in 0..source_h.generator_count() {
        let rep = source_h.representatives.column(g);
        let image = map(&rep);
        let coords = target_h.cycle_coordinates(&image)?;
        cols.push(coords);
    }
    Ok(IntMatrix::from_columns(target_h.generator_count(), &cols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn torsion_i64(h: &DegreeHomology) -> Vec<i64> {
        h.torsion().iter().map(|t| t.to_i64().unwrap()).collect()
    }

    #[test]
    fn circle_homology() {
        // one 0-cell, one 1-cell, zero boundary
        let c = ChainComplex::new(
            0,
            vec![1, 1],
            vec![IntMatrix::zeros(0, 1), IntMatrix::zeros(1, 1)],
        )
        .unwrap();
        let h = homology_with_basis(&c);
        assert_eq!(h[&0].free_rank(), 1);
        assert_eq!(h[&1].free_rank(), 1);
    }

    #[test]
    fn two_sphere_homology() {
        // one 0-cell, one 2-cell
        let c = ChainComplex::new(
            0,
            vec![1, 0, 1],
            vec![
                IntMatrix::zeros(0, 1),
                IntMatrix::zeros(1, 0),
                IntMatrix::zeros(0, 1),
            ],
        )
        .unwrap();
        let h = homology_with_basis(&c);
        assert_eq!(h[&0].free_rank(), 1);
        assert!(!h.contains_key(&1));
        assert_eq!(h[&2].free_rank(), 1);
    }

    #[test]
    fn torsion_from_degree_two_attachment() {
        // one 1-cell, one 2-cell, boundary multiplication by 2
        let c = ChainComplex::new(
            1,
            vec![1, 1],
            vec![IntMatrix::zeros(0, 1), IntMatrix::from_rows(&[vec![2]])],
        )
        .unwrap();
        let h = homology_with_basis(&c);
        assert_eq!(h[&1].free_rank(), 0);
        assert_eq!(torsion_i64(&h[&1]), vec![2]);
        assert!(!h.contains_key(&2));
    }

    #[test]
    fn rejects_non_complex() {
        let err = ChainComplex::new(
            0,
            vec![1, 1, 1],
            vec![
                IntMatrix::zeros(0, 1),
                IntMatrix::from_rows(&[vec![1]]),
                IntMatrix::from_rows(&[vec![1]]),
            ],
        );
        assert!(matches!(err, Err(AlgebraError::NotAComplex { degree: 2 })));
    }

    #[test]
    fn cycle_coordinates_roundtrip() {
        // RP^2-style: 2 one-cells a,b; one 2-cell with boundary 2a
        let c = ChainComplex::new(
            1,
            vec![2, 1],
            vec![IntMatrix::zeros(0, 2), IntMatrix::from_rows(&[vec![2], vec![0]])],
        )
        .unwrap();
        let h = &homology_with_basis(&c)[&1];
        assert_eq!(h.free_rank(), 1);
        assert_eq!(torsion_i64(h), vec![2]);
        for g in 0..h.generator_count() {
            let rep = h.representatives.column(g);
            let coords = h.cycle_coordinates(&rep).unwrap();
            for (i, c) in coords.iter().enumerate() {
                let expect = if i == g { 1 } else { 0 };
                assert_eq!(c.to_i64().unwrap(), expect);
            }
        }
    }

    // Brute-force oracle over Q: betti_d = rank ker - rank im by rank-nullity.
    #[test]
    fn homology_matches_rank_nullity_oracle_on_random_complexes() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..40 {
            let n0 = rng.gen_range(1..=8);
            let n1 = rng.gen_range(1..=8);
            let n2 = rng.gen_range(1..=8);
            // random d1, then d2 built inside ker d1 to force d1*d2 = 0
            let d1 = IntMatrix::from_fn(n0, n1, |_, _| BigInt::from(rng.gen_range(-2i64..=2)));
            let k = super::super::snf::kernel_basis(&d1);
            let mix = IntMatrix::from_fn(k.cols(), n2, |_, _| BigInt::from(rng.gen_range(-2i64..=2)));
            let d2 = k.mul(&mix);
            let c = ChainComplex::new(0, vec![n0, n1, n2], vec![IntMatrix::zeros(0, n0), d1.clone(), d2.clone()])
                .unwrap();
            let h = homology_with_basis(&c);
            let rk = |m: &IntMatrix| super::super::snf::rank(m);
            let betti1 = (n1 - rk(&d1)) - rk(&d2);
            let got1 = h.get(&1).map_or(0, |x| x.free_rank());
            assert_eq!(got1, betti1, "betti mismatch at degree 1");
            let betti0 = n0 - rk(&d1);
            let got0 = h.get(&0).map_or(0, |x| x.free_rank());
            assert_eq!(got0, betti0, "betti mismatch at degree 0");
        }
    }
}
