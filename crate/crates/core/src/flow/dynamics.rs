//! The functional, its gradient split l + c, the residual gauge translation T,
//! the smoothed spectral projections, trajectory integration, and critical
//! point search with Hessian signatures.

use super::model::{Point, Region, SpectralModel, ToyCsdParams};
use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq)]
pub enum FlowError {
    /// T pushed nonzero content off the truncated slot window.
    WindowOverflow { lost_norm: f64 },
    GridTooLarge { cells: usize },
    EndpointEigenvalueZero { s: f64 },
    /// A transverse-function certificate condition failed at a sample.
    CertificateFailure { condition: u8, witness_p: f64 },
    NegativeTransverseNeedsPeriodic,
    /// A spectator mode's effective eigenvalue changes sign over the region.
    SpectatorUndetermined { slot: i64 },
}

impl std::fmt::Display for FlowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FlowError::WindowOverflow { lost_norm } => {
                write!(f, "slot shift lost norm {lost_norm:.3e} off the window")
            }
            FlowError::GridTooLarge { cells } => write!(f, "seed grid too large: {cells} cells"),
            FlowError::EndpointEigenvalueZero { s } => {
                write!(f, "eigenvalue vanishes at endpoint s = {s}")
            }
            FlowError::CertificateFailure { condition, witness_p } => {
                write!(f, "transversality condition {condition} failed near p = {witness_p}")
            }
            FlowError::NegativeTransverseNeedsPeriodic => {
                write!(f, "negatively transverse functions require kappa = 0")
            }
            FlowError::SpectatorUndetermined { slot } => {
                write!(f, "slot {slot} changes stability over the region; include it in the grid")
            }
        }
    }
}

impl std::error::Error for FlowError {}

/// CSD(p,z,w) = κp + ε sin(2πp) + ½Σλ_j|z_j|² + ½Σe_k w_k² + γ(Σ|z_j|²)²
/// + p·c·Σ|z_j|².
pub fn csd_value(x: &Point, params: &ToyCsdParams, model: &SpectralModel) -> f64 {
    let mut v = params.kappa * x.p + params.epsilon * (2.0 * PI * x.p).sin();
    let mut s = 0.0;
    for (idx, j) in model.slots().enumerate() {
        let lambda = model.slot_eigenvalue(j);
        for m in 0..model.multiplicity {
            let n = x.z[idx * model.multiplicity + m].norm_sqr();
            v += 0.5 * lambda * n;
            s += n;
        }
    }
    for (k, e) in model.form_eigenvalues().iter().enumerate() {
        v += 0.5 * e * x.w[k] * x.w[k];
    }
    v += params.gamma * s * s + x.p * params.coupling * s;
    v
}

/// Diagonal spectral part l: (0·p, λ_j z_j, e_k w_k).
pub fn linear_part(x: &Point, model: &SpectralModel) -> Point {
    let mut out = x.clone();
    out.p = 0.0;
    for (idx, j) in model.slots().enumerate() {
        let lambda = model.slot_eigenvalue(j);
        for m in 0..model.multiplicity {
            out.z[idx * model.multiplicity + m] = x.z[idx * model.multiplicity + m] * lambda;
        }
    }
    for (k, e) in model.form_eigenvalues().iter().enumerate() {
        out.w[k] = e * x.w[k];
    }
    out
}

/// Everything the linear part misses: the forcing and perturbation along p,
/// the quartic and the p-coupling on the spinor modes.
pub fn nonlinear_part(x: &Point, params: &ToyCsdParams, model: &SpectralModel) -> Point {
    let s = x.spinor_norm_sq();
    let mut out = Point::zero(model);
    out.p = params.kappa + 2.0 * PI * params.epsilon * (2.0 * PI * x.p).cos() + params.coupling * s;
    let scalar = 4.0 * params.gamma * s + 2.0 * params.coupling * x.p;
    for (i, z) in x.z.iter().enumerate() {
        out.z[i] = z * scalar;
    }
    out
}

pub fn gradient(x: &Point, params: &ToyCsdParams, model: &SpectralModel) -> Point {
    let mut g = linear_part(x, model);
    let c = nonlinear_part(x, params, model);
    g.scale_add(&c, 1.0);
    g
}

/// T: p -> p+1, slot contents shifted one slot down (weight preserving), w
/// fixed. Errors when the bottom slot would push nonzero content off the
/// window.
pub fn apply_t(x: &Point, model: &SpectralModel) -> Result<Point, FlowError> {
    let mult = model.multiplicity;
    let lost: f64 = (0..mult).map(|m| x.z[m].norm_sqr()).sum();
    if lost.sqrt() > 1e-12 {
        return Err(FlowError::WindowOverflow { lost_norm: lost.sqrt() });
    }
    Ok(super::model::translate_point_ideal(x, 1, model))
}

pub fn apply_t_inverse(x: &Point, model: &SpectralModel) -> Result<Point, FlowError> {
    let mult = model.multiplicity;
    let top = (model.slot_count() - 1) * mult;
    let lost: f64 = (0..mult).map(|m| x.z[top + m].norm_sqr()).sum();
    if lost.sqrt() > 1e-12 {
        return Err(FlowError::WindowOverflow { lost_norm: lost.sqrt() });
    }
    Ok(super::model::translate_point_ideal(x, -1, model))
}

/// Smoothed projection factor: 0 below λ, ramp up on [λ, λ+w], 1 on
/// [λ+w, μ-w], ramp down on [μ-w, μ], 0 above μ. Continuous in (λ, μ) and
/// equal to the sharp projection on eigenvalues at distance > w from the cuts.
pub fn projection_factor(eigenvalue: f64, lambda: f64, mu: f64, width: f64) -> f64 {
    assert!(width > 0.0, "smoothing width must be positive");
    let up = ((eigenvalue - lambda) / width).clamp(0.0, 1.0);
    let down = ((mu - eigenvalue) / width).clamp(0.0, 1.0);
    up * down
}

pub fn project(x: &Point, lambda: f64, mu: f64, width: f64, model: &SpectralModel) -> Point {
    let mut out = x.clone();
    out.p *= projection_factor(0.0, lambda, mu, width);
    for (idx, j) in model.slots().enumerate() {
        let f = projection_factor(model.slot_eigenvalue(j), lambda, mu, width);
        for m in 0..model.multiplicity {
            out.z[idx * model.multiplicity + m] = x.z[idx * model.multiplicity + m] * f;
        }
    }
    for (k, e) in model.form_eigenvalues().iter().enumerate() {
        out.w[k] = x.w[k] * projection_factor(*e, lambda, mu, width);
    }
    out
}

/// Right-hand side of the approximated downward flow: -(l + p^μ_λ c)(x).
pub fn projected_negative_gradient(
    x: &Point,
    params: &ToyCsdParams,
    model: &SpectralModel,
    width: f64,
) -> Point {
    let mut v = linear_part(x, model);
    let c = nonlinear_part(x, params, model);
    let pc = project(&c, model.lambda_cut, model.mu_cut, width, model);
    v.scale_add(&pc, 1.0);
    v.p = -v.p;
    for z in v.z.iter_mut() {
        *z = -*z;
    }
    for w in v.w.iter_mut() {
        *w = -*w;
    }
    v
}

#[derive(Clone, Debug)]
pub struct TrajectorySample {
    pub t: f64,
    pub point: Point,
    pub in_region: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    /// First time the norm exceeded the divergence bound, if any.
    pub escape: Option<(f64, f64)>,
}

/// Fixed-step fourth-order Runge-Kutta on ẋ = -(l + p^μ_λ c)(x).
pub fn integrate_trajectory(
    x0: &Point,
    t_end: f64,
    step: f64,
    params: &ToyCsdParams,
    model: &SpectralModel,
    width: f64,
    region: Option<&Region>,
    divergence_bound: f64,
) -> Trajectory {
    assert!(step > 0.0, "step must be positive");
    let mut samples = Vec::new();
    let mut x = x0.clone();
    let mut t = 0.0;
    let mut escape = None;
    let field = |x: &Point| projected_negative_gradient(x, params, model, width);
    let record =
        |t: f64, x: &Point, samples: &mut Vec<TrajectorySample>| {
            samples.push(TrajectorySample {
                t,
                point: x.clone(),
                in_region: region.map(|r| r.contains(x, model)),
            })
        };
    record(t, &x, &mut samples);
    let n = (t_end / step).ceil() as usize;
    for _ in 0..n {
        let k1 = field(&x);
        let mut x2 = x.clone();
        x2.scale_add(&k1, step / 2.0);
        let k2 = field(&x2);
        let mut x3 = x.clone();
        x3.scale_add(&k2, step / 2.0);
        let k3 = field(&x3);
        let mut x4 = x.clone();
        x4.scale_add(&k3, step);
        let k4 = field(&x4);
        x.scale_add(&k1, step / 6.0);
        x.scale_add(&k2, step / 3.0);
        x.scale_add(&k3, step / 3.0);
        x.scale_add(&k4, step / 6.0);
        t += step;
        record(t, &x, &mut samples);
        if !x.is_finite() || x.norm() > divergence_bound {
            escape = Some((t, x.norm()));
            break;
        }
    }
    Trajectory { samples, escape }
}

// ---- dense f64 numerics for the Newton search ----

/// Gaussian elimination with partial pivoting; returns None on (near-)singular
/// systems.
pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().cloned().collect();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let (piv, mag) = (col..n)
            .map(|r| (r, m[r][col].abs()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())?;
        if mag < 1e-13 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut acc = rhs[r];
        for c in r + 1..n {
            acc -= m[r][c] * x[c];
        }
        x[r] = acc / m[r][r];
    }
    Some(x)
}

/// Cyclic Jacobi iteration; eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.iter().cloned().collect();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[i][j] * m[i][j];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-15 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eigs
}

/// Real coordinates (p, Re z_0, Im z_0, ..., w_0, ...) of a point.
pub fn flatten(x: &Point) -> Vec<f64> {
    let mut v = Vec::with_capacity(1 + 2 * x.z.len() + x.w.len());
    v.push(x.p);
    for z in &x.z {
        v.push(z.re);
        v.push(z.im);
    }
    v.extend_from_slice(&x.w);
    v
}

pub fn unflatten(v: &[f64], model: &SpectralModel) -> Point {
    let nz = model.slot_count() * model.multiplicity;
    let mut z = Vec::with_capacity(nz);
    for i in 0..nz {
        z.push(Complex64::new(v[1 + 2 * i], v[2 + 2 * i]));
    }
    let w = v[1 + 2 * nz..].to_vec();
    Point { p: v[0], z, w }
}

/// Analytic Hessian of the functional in flattened coordinates.
pub fn hessian(x: &Point, params: &ToyCsdParams, model: &SpectralModel) -> Vec<Vec<f64>> {
    let nz = model.slot_count() * model.multiplicity;
    let n = 1 + 2 * nz + x.w.len();
    let mut h = vec![vec![0.0; n]; n];
    let s = x.spinor_norm_sq();
    h[0][0] = -4.0 * PI * PI * params.epsilon * (2.0 * PI * x.p).sin();
    let zr = |i: usize| 1 + 2 * i;
    let zi = |i: usize| 2 + 2 * i;
    for (idx, j) in model.slots().enumerate() {
        let lambda = model.slot_eigenvalue(j);
        for m in 0..model.multiplicity {
            let i = idx * model.multiplicity + m;
            let scalar = lambda + 4.0 * params.gamma * s + 2.0 * params.coupling * x.p;
            h[zr(i)][zr(i)] += scalar;
            h[zi(i)][zi(i)] += scalar;
            h[0][zr(i)] = 2.0 * params.coupling * x.z[i].re;
            h[zr(i)][0] = h[0][zr(i)];
            h[0][zi(i)] = 2.0 * params.coupling * x.z[i].im;
            h[zi(i)][0] = h[0][zi(i)];
        }
    }
    for i in 0..nz {
        for k in 0..nz {
            let f = 8.0 * params.gamma;
            h[zr(i)][zr(k)] += f * x.z[i].re * x.z[k].re;
            h[zr(i)][zi(k)] += f * x.z[i].re * x.z[k].im;
            h[zi(i)][zr(k)] += f * x.z[i].im * x.z[k].re;
            h[zi(i)][zi(k)] += f * x.z[i].im * x.z[k].im;
        }
    }
    for (k, e) in model.form_eigenvalues().iter().enumerate() {
        let i = 1 + 2 * nz + k;
        h[i][i] = *e;
    }
    h
}

#[derive(Clone, Debug)]
pub struct CriticalPoint {
    pub point: Point,
    pub gradient_norm: f64,
    pub hessian_eigenvalues: Vec<f64>,
    pub negative_count: usize,
    pub zero_count: usize,
    pub degenerate: bool,
    pub reducible: bool,
}

#[derive(Clone, Debug)]
pub struct CriticalPointReport {
    pub points: Vec<CriticalPoint>,
    /// Good pair: every critical point nondegenerate modulo the orbit
    /// direction (reducibles must be fully nondegenerate).
    pub good: bool,
}

pub struct SearchBox {
    /// Inclusive coordinate ranges in flattened coordinates.
    pub ranges: Vec<(f64, f64)>,
    pub resolution: f64,
}

const NEWTON_TOL: f64 = 1e-10;
const DEDUP_RADIUS: f64 = 1e-6;
const HESSIAN_ZERO_TOL: f64 = 1e-6;
const MAX_SEEDS: usize = 4_000_000;

/// Newton refinement from grid seeds over the box; returns deduplicated
/// critical points with Hessian signatures. Degenerate points are flagged,
/// never dropped.
pub fn find_critical_points(
    params: &ToyCsdParams,
    model: &SpectralModel,
    bounds: &SearchBox,
    region: Option<&Region>,
) -> Result<CriticalPointReport, FlowError> {
    let dims = bounds.ranges.len();
    let mut counts = Vec::with_capacity(dims);
    let mut total: usize = 1;
    for &(lo, hi) in &bounds.ranges {
        let n = if hi - lo < bounds.resolution {
            1
        } else {
            (((hi - lo) / bounds.resolution).ceil() as usize) + 1
        };
        counts.push(n);
        total = total.saturating_mul(n);
        if total > MAX_SEEDS {
            return Err(FlowError::GridTooLarge { cells: total });
        }
    }
    let mut found: Vec<CriticalPoint> = Vec::new();
    let mut idx = vec![0usize; dims];
    loop {
        let seed: Vec<f64> = (0..dims)
            .map(|d| {
                let (lo, hi) = bounds.ranges[d];
                if counts[d] == 1 {
                    lo
                } else {
                    lo + (hi - lo) * idx[d] as f64 / (counts[d] - 1) as f64
                }
            })
            .collect();
        if let Some(cp) = newton_refine(&seed, params, model, bounds) {
            let inside = region.map_or(true, |r| r.contains(&cp.point, model));
            if inside && !found.iter().any(|f| f.point.distance(&cp.point) < DEDUP_RADIUS) {
                found.push(cp);
            }
        }
        if !advance(&mut idx, &counts) {
            let good = found.iter().all(|c| !c.degenerate);
            found.sort_by(|a, b| {
                a.point
                    .p
                    .partial_cmp(&b.point.p)
                    .unwrap()
                    .then(a.gradient_norm.partial_cmp(&b.gradient_norm).unwrap())
            });
            return Ok(CriticalPointReport { points: found, good });
        }
    }
}

fn advance(idx: &mut [usize], counts: &[usize]) -> bool {
    for d in 0..idx.len() {
        idx[d] += 1;
        if idx[d] < counts[d] {
            return true;
        }
        idx[d] = 0;
    }
    false
}

fn newton_refine(
    seed: &[f64],
    params: &ToyCsdParams,
    model: &SpectralModel,
    bounds: &SearchBox,
) -> Option<CriticalPoint> {
    let mut v = seed.to_vec();
    for _ in 0..60 {
        let x = unflatten(&v, model);
        let g = flatten(&gradient(&x, params, model));
        let gnorm = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        if gnorm < NEWTON_TOL {
            return Some(classify(&x, params, model));
        }
        let mut h = hessian(&x, params, model);
        // damp toward gradient descent when the Hessian is singular along the
        // orbit direction
        let mut step = solve_dense(&h, &g.iter().map(|a| -a).collect::<Vec<f64>>());
        if step.is_none() {
            for (i, row) in h.iter_mut().enumerate() {
                row[i] += 1e-6;
            }
            step = solve_dense(&h, &g.iter().map(|a| -a).collect::<Vec<f64>>());
        }
        let step = step?;
        let norm = step.iter().map(|a| a * a).sum::<f64>().sqrt();
        let clamp = if norm > 0.5 { 0.5 / norm } else { 1.0 };
        for (vi, si) in v.iter_mut().zip(&step) {
            *vi += clamp * si;
        }
        // abandon seeds wandering far outside the box
        for (d, &(lo, hi)) in bounds.ranges.iter().enumerate() {
            let margin = (hi - lo).max(1.0);
            if v[d] < lo - margin || v[d] > hi + margin {
                return None;
            }
        }
    }
    None
}

fn classify(x: &Point, params: &ToyCsdParams, model: &SpectralModel) -> CriticalPoint {
    let g = gradient(x, params, model);
    let h = hessian(x, params, model);
    let eigs = symmetric_eigenvalues(&h);
    let negative_count = eigs.iter().filter(|&&e| e < -HESSIAN_ZERO_TOL).count();
    let zero_count = eigs.iter().filter(|&&e| e.abs() <= HESSIAN_ZERO_TOL).count();
    let reducible = x.spinor_norm_sq().sqrt() < 1e-8;
    // the circle orbit direction is null at irreducibles
    let allowed_zeros = usize::from(!reducible);
    CriticalPoint {
        point: x.clone(),
        gradient_norm: flatten(&g).iter().map(|a| a * a).sum::<f64>().sqrt(),
        hessian_eigenvalues: eigs,
        negative_count,
        degenerate: zero_count != allowed_zeros,
        zero_count,
        reducible,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn model() -> SpectralModel {
        SpectralModel::new(-2, 2, 0.3, 1, 0.0, vec![2.0], -1.5, 2.5).unwrap()
    }

    fn random_point(rng: &mut StdRng, m: &SpectralModel) -> Point {
        let mut x = Point::zero(m);
        x.p = rng.gen_range(-2.0..2.0);
        for z in x.z.iter_mut() {
            *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        for w in x.w.iter_mut() {
            *w = rng.gen_range(-1.0..1.0);
        }
        x
    }

    #[test]
    fn csd_basic_values() {
        let m = model();
        let params = ToyCsdParams::new(1.0, 0.0, 2.0);
        let zero = Point::zero(&m);
        assert_eq!(csd_value(&zero, &params, &m), 0.0);
        let mut x = Point::zero(&m);
        x.p = 1.0;
        assert!((csd_value(&x, &params, &m) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn t_shifts_csd_by_kappa_exactly() {
        let m = model();
        let kappa = 4.0 * PI * PI * 2.0;
        let params = ToyCsdParams::new(kappa, 0.7, 2.0);
        assert!(params.is_t_exact());
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..100 {
            let mut x = random_point(&mut rng, &m);
            // keep the bottom slot empty so T stays on-window
            x.z[0] = Complex64::new(0.0, 0.0);
            let tx = apply_t(&x, &m).unwrap();
            let delta = csd_value(&tx, &params, &m) - csd_value(&x, &params, &m);
            assert!(
                (delta - kappa).abs() < 1e-12 * kappa.max(1.0),
                "delta = {delta}, kappa = {kappa}"
            );
        }
    }

    #[test]
    fn t_is_isometry_and_inverse_roundtrips() {
        let m = model();
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..20 {
            let mut x = random_point(&mut rng, &m);
            x.z[0] = Complex64::new(0.0, 0.0);
            let tx = apply_t(&x, &m).unwrap();
            assert!((tx.norm_sq() - (x.norm_sq() + 2.0 * x.p + 1.0)).abs() < 1e-9);
            let back = apply_t_inverse(&tx, &m).unwrap();
            assert!(back.distance(&x) < 1e-12);
        }
        // overflow detection
        let mut x = Point::zero(&m);
        x.z[0] = Complex64::new(0.5, 0.0);
        assert!(matches!(apply_t(&x, &m), Err(FlowError::WindowOverflow { .. })));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = model();
        let params = ToyCsdParams::new(0.5, 0.3, 1.5);
        let mut rng = StdRng::seed_from_u64(3);
        let h = 1e-5;
        for _ in 0..100 {
            let x = random_point(&mut rng, &m);
            let g = flatten(&gradient(&x, &params, &m));
            let v = flatten(&x);
            let mut max_rel = 0.0f64;
            for d in 0..v.len() {
                let mut vp = v.clone();
                vp[d] += h;
                let mut vm = v.clone();
                vm[d] -= h;
                let fd = (csd_value(&unflatten(&vp, &m), &params, &m)
                    - csd_value(&unflatten(&vm, &m), &params, &m))
                    / (2.0 * h);
                let denom = g[d].abs().max(1.0);
                max_rel = max_rel.max((fd - g[d]).abs() / denom);
            }
            assert!(max_rel < 1e-6, "finite difference mismatch {max_rel}");
        }
    }

    #[test]
    fn gradient_split_examples() {
        let m = model();
        let params = ToyCsdParams::new(2.0, 0.0, 1.0);
        let g = gradient(&Point::zero(&m), &params, &m);
        assert_eq!(g.p, 2.0);
        assert!(g.z.iter().all(|z| z.norm() == 0.0));
        assert!(g.w.iter().all(|w| *w == 0.0));

        // pure spinor mode with quartic and couplings off: gradient = λ_j z_j
        let params0 = ToyCsdParams {
            kappa: 0.0,
            epsilon: 0.0,
            gamma: 1e-300,
            coupling: 0.0,
        };
        let mut x = Point::zero(&m);
        let slot_idx = 2; // j = 0, eigenvalue 0.3
        x.z[slot_idx] = Complex64::new(1.0, 0.0);
        let g = gradient(&x, &params0, &m);
        assert!((g.z[slot_idx].re - 0.3).abs() < 1e-9);
        assert!(g.z[slot_idx].im.abs() < 1e-12);
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let m = model();
        let params = ToyCsdParams::new(0.4, 0.2, 1.3);
        let mut rng = StdRng::seed_from_u64(9);
        let x = random_point(&mut rng, &m);
        let h = hessian(&x, &params, &m);
        let v = flatten(&x);
        let eps = 1e-6;
        for d in 0..v.len() {
            let mut vp = v.clone();
            vp[d] += eps;
            let mut vm = v.clone();
            vm[d] -= eps;
            let gp = flatten(&gradient(&unflatten(&vp, &m), &params, &m));
            let gm = flatten(&gradient(&unflatten(&vm, &m), &params, &m));
            for r in 0..v.len() {
                let fd = (gp[r] - gm[r]) / (2.0 * eps);
                assert!(
                    (fd - h[r][d]).abs() < 1e-5 * (1.0 + h[r][d].abs()),
                    "hessian mismatch at ({r},{d})"
                );
            }
        }
    }

    #[test]
    fn projection_examples() {
        let m = model();
        let w = 0.1;
        let mut rng = StdRng::seed_from_u64(5);
        let x = random_point(&mut rng, &m);
        // cuts far beyond the spectrum: identity
        let px = project(&x, -50.0, 50.0, w, &m);
        assert!(px.distance(&x) < 1e-12);
        // empty interval: zero map
        let p0 = project(&x, 0.4, 0.4, w, &m);
        assert!(p0.norm() < 1e-12);
        // ramp evaluation: eigenvalue exactly at λ + w/2 scales by 0.5
        assert!((projection_factor(-1.0 + w / 2.0, -1.0, 50.0, w) - 0.5).abs() < 1e-12);
        // operator norm ≤ 1 and near idempotence away from cuts
        let p1 = project(&x, m.lambda_cut, m.mu_cut, w, &m);
        assert!(p1.norm() <= x.norm() + 1e-12);
        let p2 = project(&p1, m.lambda_cut, m.mu_cut, w, &m);
        // ramp band here misses all eigenvalues, so exactly idempotent
        assert!(p2.distance(&p1) < 1e-12);
    }

    #[test]
    fn trajectory_constant_at_critical_point_and_linear_decay() {
        let m = model();
        // κ = 0, ε > 0: reducible critical point at p = 3/4 (cos zero, sin < 0)
        let params = ToyCsdParams::new(0.0, 0.3, 1.0);
        let mut x0 = Point::zero(&m);
        x0.p = 0.75;
        let g = gradient(&x0, &params, &m);
        assert!(flatten(&g).iter().all(|v| v.abs() < 1e-12));
        let traj = integrate_trajectory(&x0, 2.0, 0.01, &params, &m, 0.1, None, 1e6);
        assert!(traj.escape.is_none());
        let last = &traj.samples.last().unwrap().point;
        assert!(last.distance(&x0) < 1e-9);

        // single positive mode decays like exp(-λ t): slot j=0 eigenvalue 0.3
        let params0 = ToyCsdParams {
            kappa: 0.0,
            epsilon: 0.0,
            gamma: 1e-300,
            coupling: 0.0,
        };
        let mut x1 = Point::zero(&m);
        x1.z[2] = Complex64::new(1.0, 0.0);
        let t_end = 3.0;
        let traj = integrate_trajectory(&x1, t_end, 0.005, &params0, &m, 0.1, None, 1e6);
        let expected = (-0.3 * t_end).exp();
        let got = traj.samples.last().unwrap().point.z[2].re;
        assert!(
            (got - expected).abs() < 1e-8 * t_end.max(1.0),
            "got {got}, expected {expected}"
        );
    }

    #[test]
    fn critical_points_of_periodic_reducible_scenario() {
        let m = model();
        // κ = 0, ε > 0, couplings 0: reducibles at p ∈ {1/4, 3/4} + Z
        let params = ToyCsdParams::new(0.0, 0.3, 1.0).with_coupling(0.0);
        let bounds = SearchBox {
            ranges: vec![(0.0, 1.0)],
            resolution: 0.05,
        };
        // search along the reducible axis: other coordinates seeded at 0
        let full_ranges: Vec<(f64, f64)> = {
            let mut r = vec![(0.0, 1.0)];
            r.extend(std::iter::repeat((0.0, 0.0)).take(2 * m.slot_count() + 2));
            r
        };
        let report = find_critical_points(
            &params,
            &m,
            &SearchBox {
                ranges: full_ranges,
                resolution: bounds.resolution,
            },
            None,
        )
        .unwrap();
        let ps: Vec<f64> = report.points.iter().map(|c| c.point.p).collect();
        assert_eq!(ps.len(), 2, "{ps:?}");
        assert!((ps[0] - 0.25).abs() < 1e-8);
        assert!((ps[1] - 0.75).abs() < 1e-8);
        assert!(report.points.iter().all(|c| c.reducible));
    }

    #[test]
    fn no_critical_points_when_kappa_dominates() {
        let m = model();
        // κ > 2πε: the p-gradient never vanishes on the reducible axis
        let params = ToyCsdParams::new(2.0, 0.2, 1.0);
        let mut ranges = vec![(-1.0, 1.0)];
        ranges.extend(std::iter::repeat((0.0, 0.0)).take(2 * m.slot_count() + 2));
        let report =
            find_critical_points(&params, &m, &SearchBox { ranges, resolution: 0.05 }, None).unwrap();
        assert!(report.points.is_empty(), "{:?}", report.points);
    }

    #[test]
    fn single_negative_form_mode_signature() {
        // model with only forms in the cut: origin is a rest point with one
        // unstable real direction
        let m = SpectralModel::new(5, 4, 0.3, 1, 0.0, vec![1.0], -1.5, 1.5).unwrap();
        // empty slot window (j_min > j_max) keeps the spinor sector trivial
        assert_eq!(m.slot_count(), 0);
        let params = ToyCsdParams::new(0.0, 0.0, 1.0);
        let mut ranges = vec![(-0.5, 0.5)];
        ranges.extend(std::iter::repeat((-0.5, 0.5)).take(2));
        let report =
            find_critical_points(&params, &m, &SearchBox { ranges, resolution: 0.1 }, None);
        // p-direction has zero gradient everywhere when κ = ε = 0: the whole
        // p-axis is critical; restrict the p range to a point instead
        let mut ranges = vec![(0.0, 0.0)];
        ranges.extend(std::iter::repeat((-0.5, 0.5)).take(2));
        let _ = report;
        let report =
            find_critical_points(&params, &m, &SearchBox { ranges, resolution: 0.1 }, None).unwrap();
        assert_eq!(report.points.len(), 1);
        let cp = &report.points[0];
        assert_eq!(cp.negative_count, 1); // the -μ form mode
        assert!(cp.reducible);
    }
}
