//! The K-theoretic framing obstruction computed from cup-structure data: the
//! alternating triple product restricted to the sublattice of H^1 pairing to
//! zero with c_1, together with the gcd period.

use crate::algebra::matrix::IntMatrix;
use crate::algebra::snf::kernel_basis;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Rank of H^1, the alternating triple-product tensor T_{ijk} = (a_i ∪ a_j ∪
/// a_k)[Y], and the pairing vector ℓ_i = (a_i ∪ c_1)[Y].
#[derive(Clone, Debug)]
pub struct CupSystem {
    b1: usize,
    /// Independent components keyed by i < j < k.
    triple: BTreeMap<(usize, usize, usize), i64>,
    ell: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CupSystemError {
    IndexOutOfRange { index: usize },
    NotAntisymmetric { indices: (usize, usize, usize) },
    EllLength { expected: usize, got: usize },
}

impl fmt::Display for CupSystemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CupSystemError::IndexOutOfRange { index } => write!(f, "index {index} out of range"),
            CupSystemError::NotAntisymmetric { indices } => {
                write!(f, "triple product not antisymmetric at {indices:?}")
            }
            CupSystemError::EllLength { expected, got } => {
                write!(f, "ell vector has length {got}, expected {expected}")
            }
        }
    }
}

impl std::error::Error for CupSystemError {}

impl CupSystem {
    /// Build from a list of (i, j, k, value) entries with arbitrary index
    /// order; entries are normalized through the sign of the permutation.
    /// Conflicting duplicates are rejected as non-antisymmetric.
    pub fn new(b1: usize, entries: &[(usize, usize, usize, i64)], ell: Vec<i64>) -> Result<Self, CupSystemError> {
        if ell.len() != b1 {
            return Err(CupSystemError::EllLength {
                expected: b1,
                got: ell.len(),
            });
        }
        let mut triple = BTreeMap::new();
        for &(i, j, k, v) in entries {
            for idx in [i, j, k] {
                if idx >= b1 {
                    return Err(CupSystemError::IndexOutOfRange { index: idx });
                }
            }
            if i == j || j == k || i == k {
                if v != 0 {
                    return Err(CupSystemError::NotAntisymmetric { indices: (i, j, k) });
                }
                continue;
            }
            let (sorted, sign) = sort3(i, j, k);
            let val = sign * v;
            match triple.get(&sorted) {
                Some(&old) if old != val => {
                    return Err(CupSystemError::NotAntisymmetric { indices: (i, j, k) });
                }
                _ => {
                    if val != 0 {
                        triple.insert(sorted, val);
                    }
                }
            }
        }
        Ok(CupSystem { b1, triple, ell })
    }

    pub fn b1(&self) -> usize {
        self.b1
    }

    pub fn ell_vector(&self) -> &[i64] {
        &self.ell
    }

    pub fn independent_components(&self) -> &BTreeMap<(usize, usize, usize), i64> {
        &self.triple
    }

    /// Full antisymmetric evaluation T(x, y, z) for integer vectors.
    pub fn evaluate(&self, x: &[i64], y: &[i64], z: &[i64]) -> i64 {
        let mut acc: i64 = 0;
        for (&(i, j, k), &t) in &self.triple {
            // sum over the 6 permutations with signs
            let det = x[i] * (y[j] * z[k] - y[k] * z[j]) - x[j] * (y[i] * z[k] - y[k] * z[i])
                + x[k] * (y[i] * z[j] - y[j] * z[i]);
            acc += t * det;
        }
        acc
    }

    /// Direct sum of cup structures (connected sum of the underlying
    /// manifolds: H^1 splits, triple products block, pairings concatenate).
    pub fn direct_sum(&self, other: &CupSystem) -> CupSystem {
        let off = self.b1;
        let mut triple = self.triple.clone();
        for (&(i, j, k), &v) in &other.triple {
            triple.insert((i + off, j + off, k + off), v);
        }
        let mut ell = self.ell.clone();
        ell.extend_from_slice(&other.ell);
        CupSystem {
            b1: self.b1 + other.b1,
            triple,
            ell,
        }
    }
}

fn sort3(i: usize, j: usize, k: usize) -> ((usize, usize, usize), i64) {
    let mut v = [(i, 0), (j, 1), (k, 2)];
    v.sort_by_key(|p| p.0);
    let perm = [v[0].1, v[1].1, v[2].1];
    let sign = match perm {
        [0, 1, 2] | [1, 2, 0] | [2, 0, 1] => 1,
        _ => -1,
    };
    ((v[0].0, v[1].0, v[2].0), sign)
}

/// ℓ = gcd |ℓ_i|; 0 when every pairing vanishes (torsion c_1, fully periodic
/// functional).
pub fn period_ell(sys: &CupSystem) -> u64 {
    sys.ell.iter().fold(0u64, |a, &b| a.gcd(&b.unsigned_abs()))
}

/// Integer basis of {a : Σ a^i ℓ_i = 0}, saturated, computed through the
/// kernel of the 1 × b1 pairing matrix.
pub fn c1_perp_basis(sys: &CupSystem) -> Vec<Vec<i64>> {
    if sys.b1 == 0 {
        return Vec::new();
    }
    let m = IntMatrix::from_rows(&[sys.ell.iter().map(|&v| v).collect::<Vec<i64>>()]);
    let k = kernel_basis(&m);
    (0..k.cols())
        .map(|j| {
            k.column(j)
                .iter()
                .map(|v| v.to_i64().expect("basis entry overflow"))
                .collect()
        })
        .collect()
}

/// The restricted alternating 3-form: coefficients T(b_i, b_j, b_k) over the
/// c_1-perp basis, i < j < k.
#[derive(Clone, Debug)]
pub struct ObstructionClass {
    pub basis: Vec<Vec<i64>>,
    pub coefficients: BTreeMap<(usize, usize, usize), i64>,
}

impl ObstructionClass {
    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }
}

pub fn obstruction_class(sys: &CupSystem) -> ObstructionClass {
    let basis = c1_perp_basis(sys);
    let mut coefficients = BTreeMap::new();
    let r = basis.len();
    for i in 0..r {
        for j in i + 1..r {
            for k in j + 1..r {
                let v = sys.evaluate(&basis[i], &basis[j], &basis[k]);
                if v != 0 {
                    coefficients.insert((i, j, k), v);
                }
            }
        }
    }
    ObstructionClass {
        basis,
        coefficients,
    }
}

/// Where in K^1 of the perp torus the class sits, with the degree-4 Taylor
/// term resolved: only the H^3 component can be nonzero, and its coefficients
/// in the dual basis are exactly the restricted triple products.
#[derive(Clone, Debug)]
pub struct ChernCharacterReport {
    pub b1: usize,
    pub perp_rank: usize,
    pub h1_component_zero: bool,
    pub h3_terms: BTreeMap<(usize, usize, usize), i64>,
    pub higher_components_zero: bool,
    /// The b1 ≤ 3 vanishing statement presumes nontorsion c_1; flagged when a
    /// nonzero class appears with torsion pairing (the three-torus situation).
    pub torsion_caveat: bool,
}

impl ChernCharacterReport {
    pub fn is_zero(&self) -> bool {
        self.h3_terms.is_empty()
    }
}

impl fmt::Display for ChernCharacterReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "b1 = {}, rank of c1-perp = {}", self.b1, self.perp_rank)?;
        if self.h3_terms.is_empty() {
            writeln!(f, "ch(q) = 0")?;
        } else {
            let terms: Vec<String> = self
                .h3_terms
                .iter()
                .map(|(&(i, j, k), &v)| format!("{v}·a{i}^a{j}^a{k}"))
                .collect();
            writeln!(f, "ch(q) = {}  (H^3 component of K^1)", terms.join(" + "))?;
        }
        writeln!(f, "H^1 component: 0; H^5 and higher: 0")?;
        if self.torsion_caveat {
            writeln!(f, "note: nonzero class with torsion pairing (b1 <= 3 vanishing presumes nontorsion c1)")?;
        }
        Ok(())
    }
}

pub fn chern_character_report(sys: &CupSystem) -> ChernCharacterReport {
    let class = obstruction_class(sys);
    let torsion = period_ell(sys) == 0;
    ChernCharacterReport {
        b1: sys.b1(),
        perp_rank: class.basis.len(),
        h1_component_zero: true,
        higher_components_zero: true,
        torsion_caveat: torsion && !class.is_zero() && sys.b1() <= 3,
        h3_terms: class.coefficients,
    }
}

/// A unimodular change of the H^1 basis applied to both T and ℓ.
pub fn change_basis(sys: &CupSystem, basis: &IntMatrix) -> CupSystem {
    let n = sys.b1();
    assert_eq!(basis.rows(), n);
    assert_eq!(basis.cols(), n);
    let cols: Vec<Vec<i64>> = (0..n)
        .map(|j| {
            basis
                .column(j)
                .iter()
                .map(|v| v.to_i64().expect("basis entry overflow"))
                .collect()
        })
        .collect();
    let mut entries = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let v = sys.evaluate(&cols[i], &cols[j], &cols[k]);
                if v != 0 {
                    entries.push((i, j, k, v));
                }
            }
        }
    }
    let ell: Vec<i64> = (0..n)
        .map(|j| {
            cols[j]
                .iter()
                .zip(sys.ell_vector())
                .map(|(&c, &l)| c * l)
                .sum()
        })
        .collect();
    CupSystem::new(n, &entries, ell).expect("basis change preserves antisymmetry")
}

/// Shipped presets, mirrored by the JSON files in presets/.
pub fn preset(name: &str) -> Option<CupSystem> {
    match name {
        // three-torus with torsion spin-c structure: the nonzero example
        "t3_torsion" => Some(CupSystem::new(3, &[(0, 1, 2, 1)], vec![0, 0, 0]).unwrap()),
        // S^1 x S^2 with a nontorsion structure of pairing 2
        "s1xs2" => Some(CupSystem::new(1, &[], vec![2]).unwrap()),
        // rank four with one nontorsion direction and the triple product on the perp
        "b4_mixed" => Some(CupSystem::new(4, &[(0, 1, 2, 1)], vec![0, 0, 0, 1]).unwrap()),
        "t3_nontorsion" => Some(CupSystem::new(3, &[(0, 1, 2, 1)], vec![1, 0, 0]).unwrap()),
        _ => None,
    }
}

pub fn gcd_big(values: &[BigInt]) -> BigInt {
    values.iter().fold(BigInt::zero(), |a, b| a.gcd(&b.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn period_ell_examples() {
        let s = CupSystem::new(2, &[], vec![2, 4]).unwrap();
        assert_eq!(period_ell(&s), 2);
        let s = CupSystem::new(3, &[], vec![0, 0, 0]).unwrap();
        assert_eq!(period_ell(&s), 0);
        let s = CupSystem::new(3, &[], vec![6, 10, 15]).unwrap();
        assert_eq!(period_ell(&s), 1);
    }

    #[test]
    fn perp_basis_examples() {
        let s = CupSystem::new(3, &[], vec![1, 0, 0]).unwrap();
        let b = c1_perp_basis(&s);
        assert_eq!(b.len(), 2);
        for v in &b {
            assert_eq!(v[0], 0);
        }
        let s = CupSystem::new(3, &[], vec![0, 0, 0]).unwrap();
        assert_eq!(c1_perp_basis(&s).len(), 3);
        let s = CupSystem::new(2, &[], vec![2, 3]).unwrap();
        let b = c1_perp_basis(&s);
        assert_eq!(b.len(), 1);
        let v = &b[0];
        assert_eq!(2 * v[0] + 3 * v[1], 0);
        assert_eq!(v[0].abs(), 3);
        assert_eq!(v[1].abs(), 2);
    }

    #[test]
    fn obstruction_t3_torsion_nonzero() {
        let s = preset("t3_torsion").unwrap();
        let c = obstruction_class(&s);
        assert!(!c.is_zero());
        assert_eq!(c.coefficients.len(), 1);
        assert_eq!(c.coefficients.values().next().unwrap().abs(), 1);
    }

    #[test]
    fn obstruction_vanishes_for_nontorsion_rank_three() {
        let s = preset("t3_nontorsion").unwrap();
        let c = obstruction_class(&s);
        assert!(c.is_zero(), "perp has rank 2, no triple products");
    }

    #[test]
    fn obstruction_b4_mixed() {
        let s = preset("b4_mixed").unwrap();
        let c = obstruction_class(&s);
        assert!(!c.is_zero());
        assert_eq!(c.coefficients.get(&(0, 1, 2)).copied().map(i64::abs), Some(1));
    }

    #[test]
    fn chern_report_matches_class() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let b1 = 4;
            let mut entries = Vec::new();
            for i in 0..b1 {
                for j in i + 1..b1 {
                    for k in j + 1..b1 {
                        entries.push((i, j, k, rng.gen_range(-3i64..=3)));
                    }
                }
            }
            let s = CupSystem::new(b1, &entries, vec![0; b1]).unwrap();
            let class = obstruction_class(&s);
            let rep = chern_character_report(&s);
            assert_eq!(class.coefficients, rep.h3_terms);
        }
    }

    #[test]
    fn rank_identity_and_invariance_under_unimodular_change() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..50 {
            let b1 = rng.gen_range(1usize..=5);
            let mut entries = Vec::new();
            for i in 0..b1 {
                for j in i + 1..b1 {
                    for k in j + 1..b1 {
                        entries.push((i, j, k, rng.gen_range(-2i64..=2)));
                    }
                }
            }
            let ell: Vec<i64> = (0..b1).map(|_| rng.gen_range(-4i64..=4)).collect();
            let s = CupSystem::new(b1, &entries, ell.clone()).unwrap();
            let nonzero = ell.iter().any(|&v| v != 0);
            assert_eq!(
                c1_perp_basis(&s).len(),
                b1 - usize::from(nonzero),
                "rank identity"
            );
            if c1_perp_basis(&s).len() <= 2 {
                assert!(obstruction_class(&s).is_zero());
            }
            // random elementary unimodular transformation
            let mut u = IntMatrix::identity(b1);
            if b1 >= 2 {
                for _ in 0..4 {
                    let i = rng.gen_range(0..b1);
                    let mut j = rng.gen_range(0..b1);
                    if i == j {
                        j = (j + 1) % b1;
                    }
                    let f = BigInt::from(rng.gen_range(-2i64..=2));
                    u.col_axpy(j, i, &f);
                }
            }
            let s2 = change_basis(&s, &u);
            assert_eq!(period_ell(&s), period_ell(&s2), "period invariant");
            assert_eq!(
                obstruction_class(&s).is_zero(),
                obstruction_class(&s2).is_zero(),
                "is_zero invariant"
            );
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(CupSystem::new(3, &[(0, 0, 1, 1)], vec![0, 0, 0]).is_err());
        assert!(CupSystem::new(3, &[(0, 1, 2, 1), (1, 0, 2, 1)], vec![0, 0, 0]).is_err());
        assert!(CupSystem::new(2, &[], vec![1]).is_err());
        // consistent permuted duplicates are fine
        assert!(CupSystem::new(3, &[(0, 1, 2, 1), (1, 0, 2, -1)], vec![0, 0, 0]).is_ok());
    }
}
