//! Spectral flow of eigenvalue families. Convention: a crossing from positive
//! to negative counts +1 (the count of modes entering the negative part of the
//! spectrum), so the model family j + θ - s contributes +ℓ per unit of s.

use super::dynamics::FlowError;
use super::model::SpectralModel;

/// Spectral flow of the slot family λ_j(s) = j + θ - s from s0 to s1, counted
/// with complex multiplicity. Exact: crossings happen at s = j + θ.
pub fn spectral_flow(model: &SpectralModel, s0: f64, s1: f64) -> Result<i64, FlowError> {
    for &s in &[s0, s1] {
        for j in model.slots() {
            if (model.slot_eigenvalue_at(j, s)).abs() < 1e-12 {
                return Err(FlowError::EndpointEigenvalueZero { s });
            }
        }
    }
    let mut count = 0i64;
    for j in model.slots() {
        let crossing = j as f64 + model.theta;
        if s0 < s1 {
            if s0 < crossing && crossing < s1 {
                count += model.multiplicity as i64; // downward crossing
            }
        } else if s1 < crossing && crossing < s0 {
            count -= model.multiplicity as i64; // traversed upward
        }
    }
    Ok(count)
}

/// Signed crossing count for a sampled family of eigenvalue paths: each path
/// is a list of values at increasing parameter samples, linear in between.
/// Positive-to-negative crossings count +1 per unit multiplicity.
pub fn spectral_flow_sampled(paths: &[Vec<f64>], multiplicity: i64) -> Result<i64, FlowError> {
    let mut total = 0i64;
    for path in paths {
        if let (Some(first), Some(last)) = (path.first(), path.last()) {
            if first.abs() < 1e-12 || last.abs() < 1e-12 {
                return Err(FlowError::EndpointEigenvalueZero { s: 0.0 });
            }
        }
        for w in path.windows(2) {
            if w[0] > 0.0 && w[1] < 0.0 {
                total += multiplicity;
            } else if w[0] < 0.0 && w[1] > 0.0 {
                total -= multiplicity;
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn constant_spectrum_has_zero_flow() {
        let paths = vec![vec![1.0, 1.0, 1.0], vec![-0.5, -0.5]];
        assert_eq!(spectral_flow_sampled(&paths, 1).unwrap(), 0);
    }

    #[test]
    fn sign_convention_is_downward_positive() {
        // λ(s) = s - 1/2 crosses upward: -1 in this convention
        let up = vec![vec![-0.5, 0.5]];
        assert_eq!(spectral_flow_sampled(&up, 1).unwrap(), -1);
        let down = vec![vec![0.5, -0.5]];
        assert_eq!(spectral_flow_sampled(&down, 1).unwrap(), 1);
    }

    #[test]
    fn model_family_flows_by_multiplicity() {
        let m = SpectralModel::new(-3, 3, 0.3, 3, 0.0, vec![], -0.5, 0.5).unwrap();
        // exactly the j = 0 band crosses on (0, 1), with multiplicity 3
        assert_eq!(spectral_flow(&m, 0.0, 1.0).unwrap(), 3);
        assert_eq!(spectral_flow(&m, 1.0, 0.0).unwrap(), -3);
        // endpoint on an eigenvalue is rejected
        assert!(spectral_flow(&m, 0.3, 1.0).is_err());
    }

    #[test]
    fn additive_under_concatenation_and_negates_under_reversal() {
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..50 {
            let n_paths = rng.gen_range(1..=4);
            let n_knots = rng.gen_range(3..=7);
            let paths: Vec<Vec<f64>> = (0..n_paths)
                .map(|_| {
                    (0..n_knots)
                        .map(|_| {
                            let v: f64 = rng.gen_range(-2.0..2.0);
                            if v.abs() < 1e-3 {
                                v + 0.01
                            } else {
                                v
                            }
                        })
                        .collect()
                })
                .collect();
            let split = rng.gen_range(1..n_knots - 1);
            let first: Vec<Vec<f64>> = paths.iter().map(|p| p[..=split].to_vec()).collect();
            let second: Vec<Vec<f64>> = paths.iter().map(|p| p[split..].to_vec()).collect();
            let whole = spectral_flow_sampled(&paths, 1).unwrap();
            let a = spectral_flow_sampled(&first, 1).unwrap();
            let b = spectral_flow_sampled(&second, 1).unwrap();
            assert_eq!(whole, a + b, "additivity");
            let reversed: Vec<Vec<f64>> =
                paths.iter().map(|p| p.iter().rev().copied().collect()).collect();
            assert_eq!(spectral_flow_sampled(&reversed, 1).unwrap(), -whole, "reversal");
        }
    }
}
