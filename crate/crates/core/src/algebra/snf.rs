//! Smith normal form with unimodular transforms, plus the integer linear
//! algebra built on it: solving A·x = b over Z, kernel lattices, unimodular
//! inverses and lattice membership.
//!
//! Pivoting always picks the smallest nonzero entry of the working submatrix,
//! which keeps intermediate entries from blowing up on the complexes we feed it.

use super::matrix::IntMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Debug)]
pub struct SmithDecomposition {
    /// Diagonal matrix with nonnegative entries d_1 | d_2 | ...
    pub s: IntMatrix,
    /// Row transform, |det| = 1.
    pub p: IntMatrix,
    /// Column transform, |det| = 1.
    pub q: IntMatrix,
}

impl SmithDecomposition {
    pub fn rank(&self) -> usize {
        let n = self.s.rows().min(self.s.cols());
        (0..n).filter(|&i| !self.s.get(i, i).is_zero()).count()
    }

    pub fn diagonal(&self) -> Vec<BigInt> {
        let n = self.s.rows().min(self.s.cols());
        (0..n).map(|i| self.s.get(i, i).clone()).collect()
    }
}

/// Rounded integer division: quotient minimizing |a - q*b|.
fn div_round(a: &BigInt, b: &BigInt) -> BigInt {
    let (mut q, r) = a.div_rem(b);
    let two_r = BigInt::from(2) * r.abs();
    if two_r > b.abs() {
        if (a.sign() == b.sign()) || a.is_zero() {
            q += BigInt::one();
        } else {
            q -= BigInt::one();
        }
    }
    q
}

fn find_min_nonzero(m: &IntMatrix, from: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, BigInt)> = None;
    for i in from..m.rows() {
        for j in from..m.cols() {
            let v = m.get(i, j);
            if v.is_zero() {
                continue;
            }
            let a = v.abs();
            match &best {
                Some((_, _, cur)) if *cur <= a => {}
                _ => best = Some((i, j, a)),
            }
        }
    }
    best.map(|(i, j, _)| (i, j))
}

/// P·M·Q = S with S diagonal, entries nonnegative, d_1 | d_2 | ... .
pub fn smith_normal_form(m: &IntMatrix) -> SmithDecomposition {
    let mut s = m.clone();
    let mut p = IntMatrix::identity(m.rows());
    let mut q = IntMatrix::identity(m.cols());
    let n = m.rows().min(m.cols());

    let mut t = 0;
    while t < n {
        let Some((pi, pj)) = find_min_nonzero(&s, t) else {
            break;
        };
        s.swap_rows(t, pi);
        p.swap_rows(t, pi);
        s.swap_cols(t, pj);
        q.swap_cols(t, pj);

        loop {
            let mut dirty = false;
            for i in 0..s.rows() {
                if i == t || s.get(i, t).is_zero() {
                    continue;
                }
                let f = -div_round(s.get(i, t), s.get(t, t));
                s.row_axpy(i, t, &f);
                p.row_axpy(i, t, &f);
                if !s.get(i, t).is_zero() {
                    // remainder strictly smaller than the pivot: promote it
                    s.swap_rows(t, i);
                    p.swap_rows(t, i);
                    dirty = true;
                }
            }
            if dirty {
                continue;
            }
            for j in 0..s.cols() {
                if j == t || s.get(t, j).is_zero() {
                    continue;
                }
                let f = -div_round(s.get(t, j), s.get(t, t));
                s.col_axpy(j, t, &f);
                q.col_axpy(j, t, &f);
                if !s.get(t, j).is_zero() {
                    s.swap_cols(t, j);
                    q.swap_cols(t, j);
                    dirty = true;
                }
            }
            if dirty {
                continue;
            }
            // pivot row/col clear; enforce divisibility of the remaining block
            let piv = s.get(t, t).clone();
            let mut fixed = true;
            'scan: for i in t + 1..s.rows() {
                for j in t + 1..s.cols() {
                    if !s.get(i, j).mod_floor(&piv).is_zero() {
                        let one = BigInt::one();
                        s.row_axpy(t, i, &one);
                        p.row_axpy(t, i, &one);
                        fixed = false;
                        break 'scan;
                    }
                }
            }
            if fixed {
                break;
            }
        }
        t += 1;
    }

    for i in 0..n {
        if s.get(i, i).is_negative() {
            s.negate_row(i);
            p.negate_row(i);
        }
    }
    SmithDecomposition { s, p, q }
}

/// Solve A·X = B over the integers, columnwise. Returns None when any column
/// has no integral solution.
pub fn solve(a: &IntMatrix, b: &IntMatrix) -> Option<IntMatrix> {
    assert_eq!(a.rows(), b.rows(), "solve: shape mismatch");
    let snf = smith_normal_form(a);
    let c = snf.p.mul(b);
    let n = a.rows().min(a.cols());
    let mut y = IntMatrix::zeros(a.cols(), b.cols());
    for col in 0..b.cols() {
        for i in 0..a.rows() {
            let rhs = c.get(i, col);
            if i < n && !snf.s.get(i, i).is_zero() {
                let d = snf.s.get(i, i);
                let (qt, r) = rhs.div_rem(d);
                if !r.is_zero() {
                    return None;
                }
                y.set(i, col, qt);
            } else if !rhs.is_zero() {
                return None;
            }
        }
    }
    Some(snf.q.mul(&y))
}

/// Columns form a basis of the kernel lattice {x : A·x = 0}; the lattice is
/// saturated because Q is unimodular.
pub fn kernel_basis(a: &IntMatrix) -> IntMatrix {
    let snf = smith_normal_form(a);
    let rank = snf.rank();
    let cols: Vec<Vec<BigInt>> = (rank..a.cols()).map(|j| snf.q.column(j)).collect();
    IntMatrix::from_columns(a.cols(), &cols)
}

pub fn rank(a: &IntMatrix) -> usize {
    smith_normal_form(a).rank()
}

/// Inverse of a unimodular square matrix. Panics if the matrix is not
/// invertible over Z.
pub fn inverse_unimodular(a: &IntMatrix) -> IntMatrix {
    assert_eq!(a.rows(), a.cols());
    solve(a, &IntMatrix::identity(a.rows())).expect("matrix not invertible over Z")
}

/// Does v lie in the column lattice of A?
pub fn lattice_contains(a: &IntMatrix, v: &[BigInt]) -> bool {
    let b = IntMatrix::from_columns(a.rows(), &[v.to_vec()]);
    solve(a, &b).is_some()
}

/// Is the column lattice of A all of Z^rows? (All elementary divisors 1.)
pub fn lattice_is_full(a: &IntMatrix) -> bool {
    let snf = smith_normal_form(a);
    if snf.rank() < a.rows() {
        return false;
    }
    (0..a.rows()).all(|i| snf.s.get(i, i).is_one())
}

/// Mutual inclusion of two column lattices in Z^rows.
pub fn lattices_equal(a: &IntMatrix, b: &IntMatrix) -> bool {
    assert_eq!(a.rows(), b.rows());
    (0..b.cols()).all(|j| lattice_contains(a, &b.column(j)))
        && (0..a.cols()).all(|j| lattice_contains(b, &a.column(j)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;
    use proptest::prelude::*;

    fn diag_of(s: &IntMatrix) -> Vec<i64> {
        let n = s.rows().min(s.cols());
        (0..n).map(|i| s.get(i, i).to_i64().unwrap()).collect()
    }

    #[test]
    fn snf_identity_case() {
        let m = IntMatrix::from_rows(&[vec![1]]);
        let snf = smith_normal_form(&m);
        assert_eq!(diag_of(&snf.s), vec![1]);
        assert_eq!(snf.p, IntMatrix::identity(1));
        assert_eq!(snf.q, IntMatrix::identity(1));
    }

    #[test]
    fn snf_permutation_matrix() {
        let m = IntMatrix::from_rows(&[vec![0, 1], vec![1, 0]]);
        let snf = smith_normal_form(&m);
        assert_eq!(diag_of(&snf.s), vec![1, 1]);
        assert_eq!(snf.p.mul(&m).mul(&snf.q), snf.s);
    }

    // Independent oracle: d_1 = gcd of entries, d_1*d_2 = gcd of 2x2 minors (= |det| here).
    #[test]
    fn snf_matches_gcd_of_minors_oracle() {
        let m = IntMatrix::from_rows(&[vec![2, 4], vec![6, 8]]);
        // gcd of entries
        let d1 = gcd_all(&[2, 4, 6, 8]);
        // |det| = |2*8 - 4*6| = 8
        let det: i64 = 8;
        let snf = smith_normal_form(&m);
        let diag = diag_of(&snf.s);
        assert_eq!(diag[0], d1);
        assert_eq!(diag[0] * diag[1], det);
        assert_eq!(diag, vec![2, 4]);
    }

    fn gcd_all(v: &[i64]) -> i64 {
        v.iter().fold(0i64, |a, &b| num_integer::gcd(a, b.abs()))
    }

    fn check_snf_contract(rows: &[Vec<i64>]) {
        let m = IntMatrix::from_rows(rows);
        let snf = smith_normal_form(&m);
        assert_eq!(snf.p.mul(&m).mul(&snf.q), snf.s, "P*M*Q != S");
        let n = m.rows().min(m.cols());
        for i in 0..n {
            assert!(!snf.s.get(i, i).is_negative());
            if i + 1 < n && !snf.s.get(i, i).is_zero() && !snf.s.get(i + 1, i + 1).is_zero() {
                assert!(
                    snf.s.get(i + 1, i + 1).mod_floor(snf.s.get(i, i)).is_zero(),
                    "divisibility chain broken"
                );
            }
            if snf.s.get(i, i).is_zero() && i + 1 < n {
                assert!(snf.s.get(i + 1, i + 1).is_zero());
            }
        }
        for i in 0..snf.s.rows() {
            for j in 0..snf.s.cols() {
                if i != j {
                    assert!(snf.s.get(i, j).is_zero());
                }
            }
        }
        // unimodularity via integral inverses
        let _ = inverse_unimodular(&snf.p);
        let _ = inverse_unimodular(&snf.q);
    }

    proptest! {
        #[test]
        fn snf_contract_random(rows in proptest::collection::vec(
            proptest::collection::vec(-9i64..=9, 4), 1..=5)) {
            check_snf_contract(&rows);
        }
    }

    #[test]
    fn solve_and_kernel() {
        let a = IntMatrix::from_rows(&[vec![2, 0], vec![0, 3]]);
        let b = IntMatrix::from_rows(&[vec![4], vec![9]]);
        let x = solve(&a, &b).unwrap();
        assert_eq!(a.mul(&x), b);
        let b2 = IntMatrix::from_rows(&[vec![1], vec![0]]);
        assert!(solve(&a, &b2).is_none());

        let k = kernel_basis(&IntMatrix::from_rows(&[vec![1, 2, 3]]));
        assert_eq!(k.cols(), 2);
        for j in 0..2 {
            let col = k.column(j);
            let s = &col[0] + BigInt::from(2) * &col[1] + BigInt::from(3) * &col[2];
            assert!(s.is_zero());
        }
    }
}
