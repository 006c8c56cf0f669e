//! Transverse functions f = g∘p ± CSD used to cut the strip when the
//! functional itself is gauge-periodic, together with their sampled
//! certificates.

use super::dynamics::{csd_value, flatten, gradient, FlowError};
use super::model::{Point, SpectralModel, ToyCsdParams};
use num_complex::Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransverseSign {
    Positive,
    Negative,
}

/// The ramp profile: g ≡ 0 on [0, α], a smoothstep climb to δ on [α, β],
/// g ≡ δ on [β, 1], extended by g(u+1) = g(u) + δ.
#[derive(Clone, Debug)]
pub struct RampProfile {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
}

impl RampProfile {
    pub fn value(&self, u: f64) -> f64 {
        if self.delta == 0.0 {
            return 0.0;
        }
        let k = u.floor();
        let frac = u - k;
        k * self.delta + self.partial(frac)
    }

    fn partial(&self, t: f64) -> f64 {
        if t <= self.alpha {
            0.0
        } else if t >= self.beta {
            self.delta
        } else {
            let s = (t - self.alpha) / (self.beta - self.alpha);
            self.delta * (3.0 * s * s - 2.0 * s * s * s)
        }
    }

    pub fn slope(&self, u: f64) -> f64 {
        if self.delta == 0.0 {
            return 0.0;
        }
        let frac = u - u.floor();
        if frac <= self.alpha || frac >= self.beta {
            0.0
        } else {
            let w = self.beta - self.alpha;
            let s = (frac - self.alpha) / w;
            self.delta * (6.0 * s - 6.0 * s * s) / w
        }
    }

    pub fn max_slope(&self) -> f64 {
        if self.delta == 0.0 {
            0.0
        } else {
            1.5 * self.delta / (self.beta - self.alpha)
        }
    }
}

/// A certified transverse function with its exact translation step
/// f(Tx) = f(x) + step.
#[derive(Clone, Debug)]
pub struct TransverseFunction {
    pub sign: TransverseSign,
    pub ramp: RampProfile,
    pub step: f64,
    params: ToyCsdParams,
    model: SpectralModel,
    pub certificate: TransverseCertificate,
}

#[derive(Clone, Debug, Default)]
pub struct TransverseCertificate {
    /// Bound M of condition 1 and the margin attained at the sampled extremes.
    pub bound_m: f64,
    pub condition1_margin: f64,
    /// Worst |f(Tx) - f(x) - step| over samples.
    pub translation_defect: f64,
    /// Minimal sign·⟨∇CSD, ∇f⟩ over near-zero-level samples.
    pub condition3_margin: f64,
    /// Minimal ‖∇CSD‖ - ‖∇(g∘p)‖ over ramp-band samples.
    pub slope_margin: f64,
    pub samples: usize,
}

impl TransverseFunction {
    pub fn eval(&self, x: &Point) -> f64 {
        let csd = csd_value(x, &self.params, &self.model);
        match self.sign {
            TransverseSign::Positive => self.ramp.value(x.p) + csd,
            TransverseSign::Negative => self.ramp.value(x.p) - csd,
        }
    }

    pub fn grad(&self, x: &Point) -> Point {
        let mut g = gradient(x, &self.params, &self.model);
        if self.sign == TransverseSign::Negative {
            g.p = -g.p;
            for z in g.z.iter_mut() {
                *z = -*z;
            }
            for w in g.w.iter_mut() {
                *w = -*w;
            }
        }
        g.p += self.ramp.slope(x.p);
        g
    }

    pub fn model(&self) -> &SpectralModel {
        &self.model
    }

    pub fn params(&self) -> &ToyCsdParams {
        &self.params
    }
}

/// Carry a certified function to a translated model (base parameter moved by
/// an integer): the ramp and step transport exactly by the translation
/// identity, and the certificate is re-verified on the new model.
pub fn transport_transverse_function(
    f: &TransverseFunction,
    model: &SpectralModel,
    sampling: &TransverseSampling,
) -> Result<TransverseFunction, FlowError> {
    let mut out = TransverseFunction {
        sign: f.sign,
        ramp: f.ramp.clone(),
        step: f.step,
        params: f.params().clone(),
        model: model.clone(),
        certificate: TransverseCertificate::default(),
    };
    out.certificate = certify(&out, sampling)?;
    Ok(out)
}

pub struct TransverseSampling {
    pub p_range: (f64, f64),
    pub p_samples: usize,
    pub radius: f64,
    pub radial_samples: usize,
}

impl Default for TransverseSampling {
    fn default() -> Self {
        TransverseSampling {
            p_range: (-3.0, 4.0),
            p_samples: 281,
            radius: 0.45,
            radial_samples: 4,
        }
    }
}

fn sample_points(model: &SpectralModel, sampling: &TransverseSampling) -> Vec<Point> {
    let mut out = Vec::new();
    let (lo, hi) = sampling.p_range;
    let nz = model.slot_count() * model.multiplicity;
    for i in 0..sampling.p_samples {
        let p = lo + (hi - lo) * i as f64 / (sampling.p_samples - 1) as f64;
        for ri in 0..sampling.radial_samples {
            let r = sampling.radius * ri as f64 / (sampling.radial_samples.max(2) - 1) as f64;
            let mut x = Point {
                p,
                z: vec![Complex64::new(0.0, 0.0); nz],
                w: vec![0.0; 2 * model.form_mu.len()],
            };
            if ri == 0 || nz == 0 {
                out.push(x);
                continue;
            }
            // spread the radius over whichever slot is closest to crossing
            let slot = (ri - 1) % nz.max(1);
            x.z[slot] = Complex64::new(r, 0.0);
            out.push(x);
        }
    }
    out
}

/// Build a transverse function of the requested sign and certify conditions
/// 1-3 on a sample grid. For ε = 0, κ > 0 the functional itself is returned
/// (trivial ramp). Negative sign requires the gauge-periodic regime κ = 0.
pub fn build_transverse_function(
    params: &ToyCsdParams,
    model: &SpectralModel,
    sign: TransverseSign,
    sampling: &TransverseSampling,
) -> Result<TransverseFunction, FlowError> {
    if sign == TransverseSign::Negative && params.kappa != 0.0 {
        return Err(FlowError::NegativeTransverseNeedsPeriodic);
    }
    let ramp = if params.epsilon == 0.0 && params.kappa > 0.0 && sign == TransverseSign::Positive {
        RampProfile {
            alpha: 0.0,
            beta: 0.5,
            delta: 0.0,
        }
    } else {
        choose_ramp(params, model, sampling)
    };
    let step = match sign {
        TransverseSign::Positive => ramp.delta + params.kappa,
        TransverseSign::Negative => ramp.delta,
    };
    let mut f = TransverseFunction {
        sign,
        ramp,
        step,
        params: params.clone(),
        model: model.clone(),
        certificate: TransverseCertificate::default(),
    };
    f.certificate = certify(&f, sampling)?;
    Ok(f)
}

/// The widest subinterval of (0,1) on which the sampled gradient norm exceeds
/// twice its minimum over the strip carries the ramp; the climb height comes
/// from the slope bound over that run.
fn choose_ramp(
    params: &ToyCsdParams,
    model: &SpectralModel,
    sampling: &TransverseSampling,
) -> RampProfile {
    const BUCKETS: usize = 40;
    let mut bucket_min = vec![f64::INFINITY; BUCKETS];
    for x in sample_points(model, sampling) {
        let frac = x.p - x.p.floor();
        let b = ((frac * BUCKETS as f64) as usize).min(BUCKETS - 1);
        let g = flatten(&gradient(&x, params, model));
        let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        bucket_min[b] = bucket_min[b].min(n);
    }
    let overall = bucket_min.iter().cloned().fold(f64::INFINITY, f64::min);
    let peak = bucket_min.iter().cloned().fold(0.0f64, f64::max);
    // twice the strip minimum, with an absolute floor so near-critical
    // buckets are excluded even when the minimum is numerically zero
    let threshold = (2.0 * overall).max(0.35 * peak);
    // widest circular run of qualifying buckets
    let qualifies: Vec<bool> = bucket_min.iter().map(|&m| m > threshold).collect();
    let mut best = (0usize, 0usize);
    for start in 0..BUCKETS {
        if !qualifies[start] {
            continue;
        }
        let mut len = 0;
        while len < BUCKETS && qualifies[(start + len) % BUCKETS] {
            len += 1;
        }
        if len > best.1 {
            best = (start, len);
        }
    }
    let (start, len) = if best.1 == 0 { (0, BUCKETS) } else { best };
    // shrink by one bucket on each side, keep inside a single period
    let len = len.min(BUCKETS - 1);
    let a = (start as f64 + 0.5 + 0.15 * len as f64) / BUCKETS as f64;
    let b = (start as f64 + 0.5 + 0.85 * len as f64) / BUCKETS as f64;
    let (alpha, beta) = (a - a.floor(), a - a.floor() + (b - a));
    let beta = beta.min(0.999);
    let run_min = (0..len)
        .map(|i| bucket_min[(start + i) % BUCKETS])
        .fold(f64::INFINITY, f64::min);
    let slope_cap = 0.9 * run_min.max(1e-6);
    let delta = slope_cap * (beta - alpha) / 1.5;
    RampProfile { alpha, beta, delta }
}

fn certify(
    f: &TransverseFunction,
    sampling: &TransverseSampling,
) -> Result<TransverseCertificate, FlowError> {
    let model = f.model.clone();
    let params = f.params.clone();
    let pts = sample_points(&model, sampling);
    // condition 1: linear growth bound
    let rate = f.step.max(1e-9);
    let mut offset: f64 = 0.0;
    for x in &pts {
        offset = offset.max((f.eval(x) - rate * x.p).abs());
    }
    let bound_m = (offset + 1.0) / rate;
    let mut cert = TransverseCertificate {
        bound_m,
        condition1_margin: f64::INFINITY,
        translation_defect: 0.0,
        condition3_margin: f64::INFINITY,
        slope_margin: f64::INFINITY,
        samples: pts.len(),
    };
    let band = 0.35 * f.step.max(1e-6);
    for x in &pts {
        let v = f.eval(x);
        if x.p < -bound_m {
            cert.condition1_margin = cert.condition1_margin.min(-v);
            if v >= 0.0 {
                return Err(FlowError::CertificateFailure {
                    condition: 1,
                    witness_p: x.p,
                });
            }
        }
        if x.p > bound_m {
            cert.condition1_margin = cert.condition1_margin.min(v);
            if v <= 0.0 {
                return Err(FlowError::CertificateFailure {
                    condition: 1,
                    witness_p: x.p,
                });
            }
        }
        // condition 2 via the exact translation identity
        let tx = super::model::translate_point_ideal(x, 1, &model);
        let defect = (f.eval(&tx) - v - f.step).abs();
        // the ideal translate drops the bottom slot; skip samples that lose norm
        let lost: f64 = (0..model.multiplicity.min(x.z.len()))
            .map(|m| x.z[m].norm_sqr())
            .sum();
        if lost < 1e-20 {
            cert.translation_defect = cert.translation_defect.max(defect);
            if defect > 1e-9 * (1.0 + f.step.abs()) {
                return Err(FlowError::CertificateFailure {
                    condition: 2,
                    witness_p: x.p,
                });
            }
        }
        // condition 3 near the zero levels of every translate: |f mod step| small
        let level_dist = if f.step > 0.0 {
            let r = v.rem_euclid(f.step);
            r.min(f.step - r)
        } else {
            v.abs()
        };
        if level_dist < band {
            let gc = flatten(&gradient(x, &params, &model));
            let gf = flatten(&f.grad(x));
            let pairing: f64 = gc.iter().zip(&gf).map(|(a, b)| a * b).sum();
            let signed = match f.sign {
                TransverseSign::Positive => pairing,
                TransverseSign::Negative => -pairing,
            };
            cert.condition3_margin = cert.condition3_margin.min(signed);
            if signed <= 0.0 {
                return Err(FlowError::CertificateFailure {
                    condition: 3,
                    witness_p: x.p,
                });
            }
        }
        // slope bound on the ramp band
        let frac = x.p - x.p.floor();
        if frac > f.ramp.alpha && frac < f.ramp.beta && f.ramp.delta > 0.0 {
            let gc = flatten(&gradient(x, &params, &model));
            let csd_norm = gc.iter().map(|v| v * v).sum::<f64>().sqrt();
            cert.slope_margin = cert.slope_margin.min(csd_norm - f.ramp.slope(x.p));
        }
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> SpectralModel {
        SpectralModel::new(-2, 2, 0.3, 1, 0.0, vec![2.0], -1.5, 2.5).unwrap()
    }

    #[test]
    fn csd_itself_positively_transverse_when_unperturbed() {
        let m = model();
        let params = ToyCsdParams::new(1.0, 0.0, 2.0);
        let f = build_transverse_function(&params, &m, TransverseSign::Positive, &Default::default())
            .unwrap();
        assert_eq!(f.ramp.delta, 0.0);
        assert_eq!(f.step, params.kappa);
        let x = Point::zero(&m);
        assert!((f.eval(&x) - csd_value(&x, &params, &m)).abs() < 1e-14);
        assert!(f.certificate.condition3_margin > 0.0);
    }

    #[test]
    fn periodic_regime_positive_function_steps_by_delta() {
        let m = model();
        let params = ToyCsdParams::new(0.0, 0.25, 2.0);
        let f = build_transverse_function(&params, &m, TransverseSign::Positive, &Default::default())
            .unwrap();
        assert!(f.ramp.delta > 0.0);
        assert!((f.step - f.ramp.delta).abs() < 1e-15, "κ = 0: equality case");
        assert!(f.certificate.translation_defect < 1e-9);
        assert!(f.certificate.condition3_margin > 0.0);
        assert!(f.certificate.slope_margin > 0.0);
    }

    #[test]
    fn negative_transverse_exists_only_in_periodic_regime() {
        let m = model();
        let bad = ToyCsdParams::new(1.0, 0.25, 2.0);
        assert!(matches!(
            build_transverse_function(&bad, &m, TransverseSign::Negative, &Default::default()),
            Err(FlowError::NegativeTransverseNeedsPeriodic)
        ));
        let params = ToyCsdParams::new(0.0, 0.25, 2.0);
        let f = build_transverse_function(&params, &m, TransverseSign::Negative, &Default::default())
            .unwrap();
        assert!(f.certificate.condition3_margin > 0.0);
        // f increases under T even though -CSD flips the functional part
        let x = Point::zero(&m);
        let tx = super::super::model::translate_point_ideal(&x, 1, &m);
        assert!((f.eval(&tx) - f.eval(&x) - f.step).abs() < 1e-12);
    }

    #[test]
    fn ramp_profile_shape() {
        let r = RampProfile {
            alpha: 0.3,
            beta: 0.7,
            delta: 0.2,
        };
        assert_eq!(r.value(0.1), 0.0);
        assert_eq!(r.value(0.9), 0.2);
        assert!((r.value(1.1) - 0.2).abs() < 1e-15);
        assert!((r.value(2.5) - r.value(0.5) - 2.0 * r.delta).abs() < 1e-12);
        assert!((r.value(0.5) - 0.1).abs() < 1e-12, "smoothstep midpoint");
        assert!(r.max_slope() >= r.slope(0.5));
    }
}
