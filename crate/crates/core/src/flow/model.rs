//! The finite-dimensional spectral model: a window of spinor eigenvalue slots
//! λ_j(s) = j + θ - s carrying a weight-1 circle action with complex
//! multiplicity ℓ, a symmetric family of weight-0 form eigenvalues ±μ_k, the
//! harmonic coordinate p, and the quartic-coupled functional on top of it.

use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub struct SpectralModel {
    pub j_min: i64,
    pub j_max: i64,
    /// θ ∈ (0,1); keeps the spinor spectrum off zero at s = 0.
    pub theta: f64,
    /// Complex multiplicity ℓ of each slot.
    pub multiplicity: usize,
    /// Base-connection parameter; slot j has eigenvalue j + θ - s.
    pub s: f64,
    /// Positive form eigenvalues; the spectrum carries ±μ_k.
    pub form_mu: Vec<f64>,
    /// Cut levels λ < 0 < μ selecting the approximation subspace.
    pub lambda_cut: f64,
    pub mu_cut: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelError {
    ThetaIntegral,
    FormEigenvalueNotPositive { index: usize },
    BadCutLevels,
    CutOnEigenvalue { eigenvalue: f64 },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::ThetaIntegral => write!(f, "theta must not be an integer"),
            ModelError::FormEigenvalueNotPositive { index } => {
                write!(f, "form eigenvalue {index} must be positive")
            }
            ModelError::BadCutLevels => write!(f, "cut levels must satisfy lambda < 0 < mu"),
            ModelError::CutOnEigenvalue { eigenvalue } => {
                write!(f, "cut level collides with eigenvalue {eigenvalue}")
            }
        }
    }
}

impl std::error::Error for ModelError {}

impl SpectralModel {
    pub fn new(
        j_min: i64,
        j_max: i64,
        theta: f64,
        multiplicity: usize,
        s: f64,
        form_mu: Vec<f64>,
        lambda_cut: f64,
        mu_cut: f64,
    ) -> Result<Self, ModelError> {
        if (theta - theta.round()).abs() < 1e-12 {
            return Err(ModelError::ThetaIntegral);
        }
        for (i, &m) in form_mu.iter().enumerate() {
            if m <= 0.0 {
                return Err(ModelError::FormEigenvalueNotPositive { index: i });
            }
        }
        if !(lambda_cut < 0.0 && 0.0 < mu_cut) {
            return Err(ModelError::BadCutLevels);
        }
        let model = SpectralModel {
            j_min,
            j_max,
            theta,
            multiplicity,
            s,
            form_mu,
            lambda_cut,
            mu_cut,
        };
        for e in model.all_eigenvalues() {
            if (e - lambda_cut).abs() < 1e-9 || (e - mu_cut).abs() < 1e-9 {
                return Err(ModelError::CutOnEigenvalue { eigenvalue: e });
            }
        }
        Ok(model)
    }

    pub fn slot_count(&self) -> usize {
        (self.j_max - self.j_min + 1) as usize
    }

    pub fn slots(&self) -> impl Iterator<Item = i64> + '_ {
        self.j_min..=self.j_max
    }

    pub fn slot_eigenvalue(&self, j: i64) -> f64 {
        j as f64 + self.theta - self.s
    }

    pub fn slot_eigenvalue_at(&self, j: i64, s: f64) -> f64 {
        j as f64 + self.theta - s
    }

    /// Signed form eigenvalues, w-coordinate order: +μ_0, -μ_0, +μ_1, ...
    pub fn form_eigenvalues(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.form_mu.len());
        for &m in &self.form_mu {
            out.push(m);
            out.push(-m);
        }
        out
    }

    pub fn all_eigenvalues(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.slots().map(|j| self.slot_eigenvalue(j)).collect();
        out.extend(self.form_eigenvalues());
        out
    }

    pub fn in_cut(&self, eigenvalue: f64) -> bool {
        self.lambda_cut < eigenvalue && eigenvalue <= self.mu_cut
    }

    pub fn slots_in_cut(&self) -> Vec<i64> {
        self.slots().filter(|&j| self.in_cut(self.slot_eigenvalue(j))).collect()
    }

    pub fn form_indices_in_cut(&self) -> Vec<usize> {
        self.form_eigenvalues()
            .iter()
            .enumerate()
            .filter(|(_, &e)| self.in_cut(e))
            .map(|(i, _)| i)
            .collect()
    }

    /// Eigenvalue count in (λ, μ] with multiplicity: ℓ per complex slot plus
    /// one per form eigenvalue.
    pub fn eigenvalue_count_in_cut(&self) -> usize {
        self.slots_in_cut().len() * self.multiplicity + self.form_indices_in_cut().len()
    }

    /// Real dimension of the approximation subspace, including the harmonic
    /// coordinate which always carries eigenvalue 0.
    pub fn real_dim_in_cut(&self) -> usize {
        1 + 2 * self.slots_in_cut().len() * self.multiplicity + self.form_indices_in_cut().len()
    }

    /// Negative part of the cut spectrum: Ω^{V^0_λ} ledger data.
    pub fn desuspension_ledger(&self) -> DesuspensionLedger {
        let complex_shift = self
            .slots()
            .filter(|&j| {
                let e = self.slot_eigenvalue(j);
                self.lambda_cut < e && e <= 0.0
            })
            .count()
            * self.multiplicity;
        let real_shift = self
            .form_eigenvalues()
            .iter()
            .filter(|&&e| self.lambda_cut < e && e <= 0.0)
            .count();
        DesuspensionLedger {
            real_shift: real_shift as i64,
            complex_shift: complex_shift as i64,
        }
    }

    /// Half the minimal spectral gap: the default smoothing width.
    pub fn default_smoothing_width(&self) -> f64 {
        let mut eigs = self.all_eigenvalues();
        eigs.push(0.0);
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut gap = f64::INFINITY;
        for w in eigs.windows(2) {
            let g = w[1] - w[0];
            if g > 1e-9 {
                gap = gap.min(g);
            }
        }
        if gap.is_finite() {
            gap / 2.0
        } else {
            0.5
        }
    }
}

/// Formal record of suspensions removed to normalize the index grading.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DesuspensionLedger {
    pub real_shift: i64,
    pub complex_shift: i64,
}

impl DesuspensionLedger {
    pub fn degree_shift(&self) -> i64 {
        self.real_shift + 2 * self.complex_shift
    }
}

/// Parameters of the model functional. The exact identity
/// CSD(Tx) = CSD(x) + κ pins the p-to-spinor coupling at one half of the unit
/// slot spacing; `new` uses that value and `is_t_exact` reports it.
#[derive(Clone, Debug)]
pub struct ToyCsdParams {
    /// Period increment under T; κ = 0 models the nonexact regime.
    pub kappa: f64,
    /// Amplitude of the sin(2πp) perturbation.
    pub epsilon: f64,
    /// Quartic self-coupling, > 0.
    pub gamma: f64,
    /// Per-slot coupling of p to the spinor mode norms (constant across slots
    /// so that the couplings repeat under the window shift).
    pub coupling: f64,
}

pub const T_EXACT_COUPLING: f64 = 0.5;

impl ToyCsdParams {
    pub fn new(kappa: f64, epsilon: f64, gamma: f64) -> Self {
        assert!(kappa >= 0.0, "kappa must be nonnegative");
        assert!(gamma > 0.0, "gamma must be positive");
        ToyCsdParams {
            kappa,
            epsilon,
            gamma,
            coupling: T_EXACT_COUPLING,
        }
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn is_t_exact(&self) -> bool {
        self.coupling == T_EXACT_COUPLING
    }
}

/// A configuration: the harmonic coordinate, one complex coordinate per
/// (slot, multiplicity) pair, and one real coordinate per signed form
/// eigenvalue.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub p: f64,
    /// Slot-major: z[slot_index * multiplicity + m].
    pub z: Vec<Complex64>,
    pub w: Vec<f64>,
}

impl Point {
    pub fn zero(model: &SpectralModel) -> Self {
        Point {
            p: 0.0,
            z: vec![Complex64::new(0.0, 0.0); model.slot_count() * model.multiplicity],
            w: vec![0.0; 2 * model.form_mu.len()],
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.p * self.p
            + self.z.iter().map(|z| z.norm_sqr()).sum::<f64>()
            + self.w.iter().map(|w| w * w).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn spinor_norm_sq(&self) -> f64 {
        self.z.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite()
            && self.z.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            && self.w.iter().all(|w| w.is_finite())
    }

    pub fn scale_add(&mut self, other: &Point, factor: f64) {
        self.p += factor * other.p;
        for (a, b) in self.z.iter_mut().zip(&other.z) {
            *a += b * factor;
        }
        for (a, b) in self.w.iter_mut().zip(&other.w) {
            *a += factor * b;
        }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        let mut d = (self.p - other.p).powi(2);
        for (a, b) in self.z.iter().zip(&other.z) {
            d += (a - b).norm_sqr();
        }
        for (a, b) in self.w.iter().zip(&other.w) {
            d += (a - b).powi(2);
        }
        d.sqrt()
    }
}

pub type PointPredicate = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

/// Pointwise-decidable regions of the configuration space.
#[derive(Clone)]
pub enum Region {
    /// Union of T-translates of the radius-R ball.
    Strip { radius: f64 },
    /// f(x) ∈ (lo, hi].
    LevelCut { f: PointPredicate, lo: f64, hi: f64 },
    Intersection(Vec<Region>),
    /// T^n of an inner region (idealized slot shift).
    TranslatePower { n: i64, inner: Box<Region> },
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Strip { radius } => write!(f, "Strip(R={radius})"),
            Region::LevelCut { lo, hi, .. } => write!(f, "LevelCut({lo}, {hi}]"),
            Region::Intersection(rs) => f.debug_list().entries(rs.iter()).finish(),
            Region::TranslatePower { n, inner } => write!(f, "T^{n}({inner:?})"),
        }
    }
}

impl Region {
    pub fn contains(&self, x: &Point, model: &SpectralModel) -> bool {
        match self {
            Region::Strip { radius } => {
                let zz: f64 = x.z.iter().map(|z| z.norm_sqr()).sum();
                let ww: f64 = x.w.iter().map(|w| w * w).sum();
                let n0 = x.p.round();
                [n0 - 1.0, n0, n0 + 1.0].iter().any(|n| {
                    let d = (x.p - n).powi(2) + zz + ww;
                    d <= radius * radius
                })
            }
            Region::LevelCut { f, lo, hi } => {
                let v = f(x);
                *lo < v && v <= *hi
            }
            Region::Intersection(rs) => rs.iter().all(|r| r.contains(x, model)),
            Region::TranslatePower { n, inner } => {
                let shifted = translate_point_ideal(x, -n, model);
                inner.contains(&shifted, model)
            }
        }
    }
}

/// Idealized T^n: shifts p by n and the slot contents down by n, zero-filling
/// at the ends. Content shifted off the window is dropped (callers needing
/// the checked version use `apply_t`).
pub fn translate_point_ideal(x: &Point, n: i64, model: &SpectralModel) -> Point {
    let mut out = x.clone();
    out.p = x.p + n as f64;
    let slots = model.slot_count() as i64;
    let mult = model.multiplicity;
    let mut z = vec![Complex64::new(0.0, 0.0); x.z.len()];
    for slot in 0..slots {
        let src = slot + n;
        if src >= 0 && src < slots {
            for m in 0..mult {
                z[slot as usize * mult + m] = x.z[src as usize * mult + m];
            }
        }
    }
    out.z = z;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> SpectralModel {
        SpectralModel::new(-2, 2, 0.3, 1, 0.0, vec![2.0], -1.5, 2.5).unwrap()
    }

    #[test]
    fn cut_counting() {
        let m = model();
        // slot eigenvalues: -1.7, -0.7, 0.3, 1.3, 2.3; forms ±2
        assert_eq!(m.slots_in_cut(), vec![-1, 0, 1, 2]);
        assert_eq!(m.form_indices_in_cut(), vec![0]);
        assert_eq!(m.eigenvalue_count_in_cut(), 5);
        assert_eq!(m.real_dim_in_cut(), 1 + 8 + 1);
        let ledger = m.desuspension_ledger();
        assert_eq!(ledger.complex_shift, 1); // slot -1 at -0.7
        assert_eq!(ledger.real_shift, 0); // -2 below the cut
        assert_eq!(ledger.degree_shift(), 2);
    }

    #[test]
    fn rejects_integral_theta_and_bad_cuts() {
        assert!(SpectralModel::new(0, 1, 1.0, 1, 0.0, vec![], -1.0, 1.0).is_err());
        assert!(SpectralModel::new(0, 1, 0.3, 1, 0.0, vec![], 1.0, 2.0).is_err());
        assert!(SpectralModel::new(0, 1, 0.5, 1, 0.0, vec![1.0], -1.0, 1.0).is_err());
    }

    #[test]
    fn strip_membership_is_translation_invariant() {
        let m = model();
        let region = Region::Strip { radius: 0.4 };
        for n in -3..=3 {
            let mut x = Point::zero(&m);
            x.p = n as f64 + 0.3;
            assert!(region.contains(&x, &m), "p = {}", x.p);
            x.p = n as f64 + 0.5;
            assert!(!region.contains(&x, &m), "p = {}", x.p);
        }
    }
}
