//! Finitely presented graded modules over Z[U] (deg U = -2), kept in the
//! normal form "free rank + elementary divisors per degree, U-action as a
//! matrix in that basis", over a finite degree window with an optional
//! periodicity flag.

use super::matrix::IntMatrix;
use super::snf::{kernel_basis, lattice_contains, lattice_is_full};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// One degree of a module: Z^free_rank ⊕ Z/t_1 ⊕ ... with t_1 | t_2 | ... .
/// Generator order: torsion generators first, then free generators.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Component {
    pub torsion: Vec<BigInt>,
    pub free_rank: usize,
}

impl Component {
    pub fn free(rank: usize) -> Self {
        Component {
            torsion: Vec::new(),
            free_rank: rank,
        }
    }

    pub fn generator_count(&self) -> usize {
        self.torsion.len() + self.free_rank
    }

    pub fn is_zero(&self) -> bool {
        self.generator_count() == 0
    }

    /// Orders aligned with the generator basis: torsion values then zeros.
    pub fn orders(&self) -> Vec<BigInt> {
        let mut v = self.torsion.clone();
        v.extend(std::iter::repeat(BigInt::zero()).take(self.free_rank));
        v
    }

    /// Columns t_i e_i over the torsion generators (free generators carry no
    /// relation).
    pub fn relations(&self) -> IntMatrix {
        let n = self.generator_count();
        let mut m = IntMatrix::zeros(n, self.torsion.len());
        for (j, t) in self.torsion.iter().enumerate() {
            m.set(j, j, t.clone());
        }
        m
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        if self.free_rank == 1 {
            parts.push("Z".to_string());
        } else if self.free_rank > 1 {
            parts.push(format!("Z^{}", self.free_rank));
        }
        for t in &self.torsion {
            parts.push(format!("Z/{t}"));
        }
        write!(f, "{}", parts.join(" + "))
    }
}

/// A graded Z[U]-module materialized over a finite degree window.
/// Missing degrees are zero. `u_maps[d]` is the action U: M_d -> M_{d-2}
/// written in the generator bases; a missing entry is the zero map.
#[derive(Clone, Debug)]
pub struct GradedZUModule {
    window: (i64, i64),
    components: BTreeMap<i64, Component>,
    u_maps: BTreeMap<i64, IntMatrix>,
    pub stably_periodic: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModuleError {
    UMapShape { degree: i64 },
    UMapNotWellDefined { degree: i64, generator: usize },
    MapShape { degree: i64 },
    MapBreaksRelations { degree: i64, generator: usize },
    MapBreaksUAction { degree: i64 },
}

impl fmt::Display for ModuleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModuleError::UMapShape { degree } => write!(f, "U map shape mismatch at degree {degree}"),
            ModuleError::UMapNotWellDefined { degree, generator } => write!(
                f,
                "U map not well defined on torsion generator {generator} at degree {degree}"
            ),
            ModuleError::MapShape { degree } => write!(f, "module map shape mismatch at degree {degree}"),
            ModuleError::MapBreaksRelations { degree, generator } => write!(
                f,
                "module map does not kill the relation of generator {generator} at degree {degree}"
            ),
            ModuleError::MapBreaksUAction { degree } => {
                write!(f, "module map does not commute with U at degree {degree}")
            }
        }
    }
}

impl std::error::Error for ModuleError {}

/// x represents 0 in ⊕ Z/o_i ⟺ each coordinate is divisible by its order
/// (coordinates over free generators must vanish).
fn congruent_zero(x: &[BigInt], orders: &[BigInt]) -> bool {
    x.iter().zip(orders).all(|(v, o)| {
        if o.is_zero() {
            v.is_zero()
        } else {
            v.mod_floor(o).is_zero()
        }
    })
}

impl GradedZUModule {
    pub fn zero(window: (i64, i64)) -> Self {
        GradedZUModule {
            window,
            components: BTreeMap::new(),
            u_maps: BTreeMap::new(),
            stably_periodic: None,
        }
    }

    pub fn from_components(window: (i64, i64), components: BTreeMap<i64, Component>) -> Self {
        let components = components.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        GradedZUModule {
            window,
            components,
            u_maps: BTreeMap::new(),
            stably_periodic: None,
        }
    }

    pub fn window(&self) -> (i64, i64) {
        self.window
    }

    pub fn component(&self, degree: i64) -> Component {
        self.components.get(&degree).cloned().unwrap_or_default()
    }

    pub fn degrees(&self) -> impl Iterator<Item = i64> + '_ {
        self.components.keys().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    pub fn set_u_map(&mut self, degree: i64, m: IntMatrix) {
        if !m.is_zero() {
            self.u_maps.insert(degree, m);
        }
    }

    pub fn u_map(&self, degree: i64) -> IntMatrix {
        self.u_maps.get(&degree).cloned().unwrap_or_else(|| {
            IntMatrix::zeros(
                self.component(degree - 2).generator_count(),
                self.component(degree).generator_count(),
            )
        })
    }

    /// U well defined on the quotient: U·(relations) ⊆ relations, and shapes
    /// line up with the graded pieces (degree of U·g = degree of g − 2 is
    /// structural in the indexing).
    pub fn validate(&self) -> Result<(), ModuleError> {
        for (&d, m) in &self.u_maps {
            let src = self.component(d);
            let tgt = self.component(d - 2);
            if m.rows() != tgt.generator_count() || m.cols() != src.generator_count() {
                return Err(ModuleError::UMapShape { degree: d });
            }
            let tgt_orders = tgt.orders();
            for (i, o) in src.orders().iter().enumerate() {
                if o.is_zero() {
                    continue;
                }
                let col: Vec<BigInt> = m.column(i).iter().map(|v| v * o).collect();
                if !congruent_zero(&col, &tgt_orders) {
                    return Err(ModuleError::UMapNotWellDefined {
                        degree: d,
                        generator: i,
                    });
                }
            }
        }
        Ok(())
    }

    /// Per-degree table: (free rank, torsion chain).
    pub fn table(&self) -> BTreeMap<i64, (usize, Vec<BigInt>)> {
        self.components
            .iter()
            .map(|(&d, c)| (d, (c.free_rank, c.torsion.clone())))
            .collect()
    }

    pub fn shifted(&self, shift: i64) -> Self {
        GradedZUModule {
            window: (self.window.0 + shift, self.window.1 + shift),
            components: self.components.iter().map(|(&d, c)| (d + shift, c.clone())).collect(),
            u_maps: self.u_maps.iter().map(|(&d, m)| (d + shift, m.clone())).collect(),
            stably_periodic: self.stably_periodic,
        }
    }

    pub fn direct_sum(&self, other: &GradedZUModule) -> Self {
        let window = (self.window.0.min(other.window.0), self.window.1.max(other.window.1));
        let mut components = BTreeMap::new();
        let mut u_maps = BTreeMap::new();
        let degrees: std::collections::BTreeSet<i64> = self
            .components
            .keys()
            .chain(other.components.keys())
            .copied()
            .collect();
        for &d in &degrees {
            let a = self.component(d);
            let b = other.component(d);
            let mut torsion = a.torsion.clone();
            torsion.extend(b.torsion.clone());
            torsion.sort();
            components.insert(
                d,
                Component {
                    torsion,
                    free_rank: a.free_rank + b.free_rank,
                },
            );
        }
        // block-diagonal U maps only when both sides have torsion-free or
        // identically ordered bases; sorting torsion above loses alignment, so
        // U data is dropped for sums with torsion on both sides.
        for &d in &degrees {
            let ma = self.u_map(d);
            let mb = other.u_map(d);
            if ma.is_zero() && mb.is_zero() {
                continue;
            }
            let a_src = self.component(d);
            let b_src = other.component(d);
            let a_tgt = self.component(d - 2);
            let b_tgt = other.component(d - 2);
            if a_src.torsion.is_empty()
                && b_src.torsion.is_empty()
                && a_tgt.torsion.is_empty()
                && b_tgt.torsion.is_empty()
            {
                let rows = a_tgt.free_rank + b_tgt.free_rank;
                let cols = a_src.free_rank + b_src.free_rank;
                let mut m = IntMatrix::zeros(rows, cols);
                for i in 0..a_tgt.free_rank {
                    for j in 0..a_src.free_rank {
                        m.set(i, j, ma.get(i, j).clone());
                    }
                }
                for i in 0..b_tgt.free_rank {
                    for j in 0..b_src.free_rank {
                        m.set(a_tgt.free_rank + i, a_src.free_rank + j, mb.get(i, j).clone());
                    }
                }
                u_maps.insert(d, m);
            }
        }
        GradedZUModule {
            window,
            components,
            u_maps,
            stably_periodic: None,
        }
    }
}

impl fmt::Display for GradedZUModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0 on [{}, {}]", self.window.0, self.window.1);
        }
        for (d, c) in self.components.iter().rev() {
            writeln!(f, "  {d}: {c}")?;
        }
        if let Some(p) = self.stably_periodic {
            writeln!(f, "  (stably periodic, period {p})")?;
        }
        Ok(())
    }
}

/// Do the per-degree tables agree, comparing degree d of `a` with degree
/// d + shift of `b`, over the intersection of the (shifted) windows?
pub fn tables_isomorphic_shifted(a: &GradedZUModule, b: &GradedZUModule, shift: i64) -> bool {
    let lo = a.window.0.max(b.window.0 - shift);
    let hi = a.window.1.min(b.window.1 - shift);
    for d in lo..=hi {
        if a.component(d) != b.component(d + shift) {
            return false;
        }
    }
    // degrees outside the overlap are not compared
    true
}

pub fn tables_isomorphic(a: &GradedZUModule, b: &GradedZUModule) -> bool {
    tables_isomorphic_shifted(a, b, 0)
}

/// A degree-homogeneous map of graded Z[U]-modules, one integer block per
/// source degree.
#[derive(Clone, Debug)]
pub struct ModuleMap {
    pub degree_shift: i64,
    pub blocks: BTreeMap<i64, IntMatrix>,
}

impl ModuleMap {
    pub fn zero(shift: i64) -> Self {
        ModuleMap {
            degree_shift: shift,
            blocks: BTreeMap::new(),
        }
    }

    pub fn block(&self, source: &GradedZUModule, target: &GradedZUModule, degree: i64) -> IntMatrix {
        self.blocks.get(&degree).cloned().unwrap_or_else(|| {
            IntMatrix::zeros(
                target.component(degree + self.degree_shift).generator_count(),
                source.component(degree).generator_count(),
            )
        })
    }

    pub fn insert_block(&mut self, degree: i64, m: IntMatrix) {
        if m.rows() > 0 || m.cols() > 0 {
            self.blocks.insert(degree, m);
        }
    }

    /// Identity on a module (shift 0).
    pub fn identity(m: &GradedZUModule) -> Self {
        let mut map = ModuleMap::zero(0);
        for d in m.degrees() {
            map.insert_block(d, IntMatrix::identity(m.component(d).generator_count()));
        }
        map
    }
}

/// Checks: shape per degree, relations sent to relations, commutation with U.
pub fn validate_map(
    source: &GradedZUModule,
    target: &GradedZUModule,
    map: &ModuleMap,
) -> Result<(), ModuleError> {
    let s = map.degree_shift;
    for (&d, m) in &map.blocks {
        let src = source.component(d);
        let tgt = target.component(d + s);
        if m.rows() != tgt.generator_count() || m.cols() != src.generator_count() {
            return Err(ModuleError::MapShape { degree: d });
        }
        let tgt_orders = tgt.orders();
        for (i, o) in src.orders().iter().enumerate() {
            if o.is_zero() {
                continue;
            }
            let col: Vec<BigInt> = m.column(i).iter().map(|v| v * o).collect();
            if !congruent_zero(&col, &tgt_orders) {
                return Err(ModuleError::MapBreaksRelations {
                    degree: d,
                    generator: i,
                });
            }
        }
    }
    // U f = f U mod relations, wherever all four blocks live in-window
    let (lo, hi) = source.window();
    for d in lo..=hi {
        if d - 2 < lo {
            continue;
        }
        let f_d = map.block(source, target, d);
        let f_down = map.block(source, target, d - 2);
        let u_src = source.u_map(d);
        let u_tgt = target.u_map(d + s);
        if f_d.cols() == 0 {
            continue;
        }
        let lhs = u_tgt.mul(&f_d);
        let rhs = f_down.mul(&u_src);
        let tgt_orders = target.component(d + s - 2).orders();
        for j in 0..lhs.cols() {
            let diff: Vec<BigInt> = (0..lhs.rows())
                .map(|i| lhs.get(i, j) - rhs.get(i, j))
                .collect();
            if !congruent_zero(&diff, &tgt_orders) {
                return Err(ModuleError::MapBreaksUAction { degree: d });
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct DegreeFailure {
    pub degree: i64,
    pub witness: Vec<BigInt>,
    pub composite_nonzero: bool,
}

#[derive(Clone, Debug)]
pub struct JointReport {
    /// Index of the middle module in the supplied sequence.
    pub joint: usize,
    pub failures: Vec<DegreeFailure>,
    /// Degrees of the middle window that the neighbor windows do not cover.
    pub window_gaps: Vec<i64>,
}

#[derive(Clone, Debug, Default)]
pub struct ExactnessReport {
    pub joints: Vec<JointReport>,
}

impl ExactnessReport {
    pub fn is_exact(&self) -> bool {
        self.joints.iter().all(|j| j.failures.is_empty())
    }

    pub fn has_gaps(&self) -> bool {
        self.joints.iter().any(|j| !j.window_gaps.is_empty())
    }

    pub fn first_failure(&self) -> Option<(usize, &DegreeFailure)> {
        self.joints
            .iter()
            .find(|j| !j.failures.is_empty())
            .map(|j| (j.joint, &j.failures[0]))
    }
}

/// Verify im = ker degreewise at every interior joint of
/// M_0 -> M_1 -> ... -> M_k.
pub fn check_exact(modules: &[&GradedZUModule], maps: &[&ModuleMap]) -> ExactnessReport {
    assert_eq!(modules.len(), maps.len() + 1, "sequence shape");
    let mut report = ExactnessReport::default();
    for joint in 1..modules.len() - 1 {
        let m_prev = modules[joint - 1];
        let m_mid = modules[joint];
        let m_next = modules[joint + 1];
        let f = maps[joint - 1];
        let g = maps[joint];
        let mut failures = Vec::new();
        let mut gaps = Vec::new();
        let (lo, hi) = m_mid.window();
        for e in lo..=hi {
            let d_src = e - f.degree_shift;
            let d_out = e + g.degree_shift;
            let src_in = d_src >= m_prev.window().0 && d_src <= m_prev.window().1;
            let out_in = d_out >= m_next.window().0 && d_out <= m_next.window().1;
            if !src_in || !out_in {
                if !m_mid.component(e).is_zero() {
                    gaps.push(e);
                }
                continue;
            }
            let mid = m_mid.component(e);
            let n = mid.generator_count();
            if n == 0 {
                // im(f) ⊆ 0 automatically; ker(g) ⊆ 0 too
                continue;
            }
            let f_block = f.block(m_prev, m_mid, d_src);
            let g_block = g.block(m_mid, m_next, e);
            let rel_mid = mid.relations();
            let rel_next = m_next.component(d_out).relations();
            // composite zero check
            let comp = g_block.mul(&f_block);
            let next_orders = m_next.component(d_out).orders();
            for j in 0..comp.cols() {
                let col: Vec<BigInt> = (0..comp.rows()).map(|i| comp.get(i, j).clone()).collect();
                if !congruent_zero(&col, &next_orders) {
                    failures.push(DegreeFailure {
                        degree: e,
                        witness: f_block.column(j),
                        composite_nonzero: true,
                    });
                }
            }
            // image lattice (with relations)
            let image = f_block.hstack(&rel_mid);
            // kernel lattice: {x : g x ∈ rel_next}
            let kernel = if g_block.rows() == 0 {
                IntMatrix::identity(n)
            } else {
                let stacked = g_block.hstack(&rel_next);
                let k = kernel_basis(&stacked);
                IntMatrix::from_fn(n, k.cols(), |i, j| k.get(i, j).clone())
            };
            let kernel_aug = kernel.hstack(&rel_mid);
            // im ⊆ ker always given composite zero; exactness needs ker ⊆ im
            for j in 0..kernel_aug.cols() {
                let col = kernel_aug.column(j);
                if !lattice_contains(&image, &col) {
                    failures.push(DegreeFailure {
                        degree: e,
                        witness: col,
                        composite_nonzero: false,
                    });
                    break;
                }
            }
        }
        report.joints.push(JointReport {
            joint,
            failures,
            window_gaps: gaps,
        });
    }
    report
}

/// Is the map an isomorphism in the given degree?
pub fn map_is_iso_at(
    source: &GradedZUModule,
    target: &GradedZUModule,
    map: &ModuleMap,
    degree: i64,
) -> bool {
    let src = source.component(degree);
    let tgt = target.component(degree + map.degree_shift);
    if src.generator_count() == 0 && tgt.generator_count() == 0 {
        return true;
    }
    let block = map.block(source, target, degree);
    if tgt.generator_count() > 0 {
        let aug = block.hstack(&tgt.relations());
        if !lattice_is_full(&aug) {
            return false;
        }
    } else if src.generator_count() == 0 {
        return true;
    }
    // injectivity: kernel of (x -> block x mod rel_tgt) inside rel_src
    let n = src.generator_count();
    let stacked = block.hstack(&tgt.relations());
    let k = kernel_basis(&stacked);
    let proj = IntMatrix::from_fn(n, k.cols(), |i, j| k.get(i, j).clone());
    let rel_src = src.relations();
    (0..proj.cols()).all(|j| lattice_contains(&rel_src, &proj.column(j)))
}

pub fn map_is_iso(source: &GradedZUModule, target: &GradedZUModule, map: &ModuleMap) -> bool {
    let (lo, hi) = source.window();
    (lo..=hi).all(|d| map_is_iso_at(source, target, map, d))
}

/// Invert U: compute the stable value of M_d -> M_{d-2} -> ... per parity
/// class, spread it across the window, and flag 2-periodicity. U-torsion dies;
/// towers whose U maps never become isomorphisms inside the window come back
/// with `stabilized = false` on that parity.
#[derive(Clone, Debug)]
pub struct Localization {
    pub module: GradedZUModule,
    pub stabilized: bool,
}

pub fn localize_u(m: &GradedZUModule) -> Localization {
    let (lo, hi) = m.window();
    let mut components = BTreeMap::new();
    let mut stabilized = true;
    for parity in 0..2i64 {
        // degrees of this parity, descending
        let mut degs: Vec<i64> = (lo..=hi).filter(|d| d.rem_euclid(2) == parity).collect();
        degs.reverse();
        if degs.is_empty() {
            continue;
        }
        if degs.iter().all(|&d| m.component(d).is_zero()) {
            continue;
        }
        // walk down; find the longest terminal run of iso steps
        let mut run = 0usize;
        let mut steps = 0usize;
        for w in degs.windows(2) {
            let (d, d2) = (w[0], w[1]);
            debug_assert_eq!(d - 2, d2);
            steps += 1;
            let mut map = ModuleMap::zero(-2);
            map.insert_block(d, m.u_map(d));
            if map_is_iso_at(m, m, &map, d) {
                run += 1;
            } else {
                run = 0;
            }
        }
        let bottom = *degs.last().unwrap();
        let stable = m.component(bottom);
        let needed = 2.min(steps);
        if run < needed {
            stabilized = false;
        }
        if stable.is_zero() {
            continue;
        }
        for &d in &degs {
            components.insert(d, stable.clone());
        }
    }
    let nonzero = !components.is_empty();
    let mut module = GradedZUModule::from_components((lo, hi), components);
    if nonzero {
        module.stably_periodic = Some(2);
        // localized U acts invertibly; record it as the identity in the stable basis
        for d in lo..=hi {
            let src = module.component(d);
            let tgt = module.component(d - 2);
            if !src.is_zero() && src == tgt {
                module.set_u_map(d, IntMatrix::identity(src.generator_count()));
            }
        }
    }
    Localization { module, stabilized }
}

/// Build a module whose degree-d piece is Z for d in `degrees`.
pub fn free_z_in_degrees(window: (i64, i64), degrees: &[i64]) -> GradedZUModule {
    let mut components = BTreeMap::new();
    for &d in degrees {
        components.insert(d, Component::free(1));
    }
    GradedZUModule::from_components(window, components)
}

/// Z[U] with generator in degree `top`: Z in degrees top, top-2, ... within
/// the window, U the identity downward.
pub fn z_u_polynomial(window: (i64, i64), top: i64) -> GradedZUModule {
    let mut components = BTreeMap::new();
    let mut d = top;
    while d >= window.0 {
        if d <= window.1 {
            components.insert(d, Component::free(1));
        }
        d -= 2;
    }
    let mut m = GradedZUModule::from_components(window, components);
    let mut d = top;
    while d - 2 >= window.0 {
        if d <= window.1 && !m.component(d).is_zero() && !m.component(d - 2).is_zero() {
            m.set_u_map(d, IntMatrix::identity(1));
        }
        d -= 2;
    }
    m
}

/// Z[U]/U^k with generator in degree `top`.
pub fn z_u_truncated(window: (i64, i64), top: i64, k: usize) -> GradedZUModule {
    let mut components = BTreeMap::new();
    for i in 0..k {
        let d = top - 2 * i as i64;
        if d >= window.0 && d <= window.1 {
            components.insert(d, Component::free(1));
        }
    }
    let mut m = GradedZUModule::from_components(window, components);
    for i in 1..k {
        let d = top - 2 * (i as i64 - 1);
        if !m.component(d).is_zero() && !m.component(d - 2).is_zero() {
            m.set_u_map(d, IntMatrix::identity(1));
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactness_of_multiplication_by_two() {
        // 0 -> Z --2--> Z -> Z/2 -> 0, all in degree 0
        let w = (0, 0);
        let zero = GradedZUModule::zero(w);
        let z = free_z_in_degrees(w, &[0]);
        let mut z2_components = BTreeMap::new();
        z2_components.insert(
            0,
            Component {
                torsion: vec![BigInt::from(2)],
                free_rank: 0,
            },
        );
        let z_mod_2 = GradedZUModule::from_components(w, z2_components);

        let inj = ModuleMap::zero(0);
        let mut two = ModuleMap::zero(0);
        two.insert_block(0, IntMatrix::from_rows(&[vec![2]]));
        let mut quot = ModuleMap::zero(0);
        quot.insert_block(0, IntMatrix::from_rows(&[vec![1]]));
        let out = ModuleMap::zero(0);

        let report = check_exact(&[&zero, &z, &z, &z_mod_2, &zero], &[&inj, &two, &quot, &out]);
        assert!(report.is_exact(), "{report:?}");
    }

    #[test]
    fn identity_sequence_exact() {
        let w = (0, 0);
        let zero = GradedZUModule::zero(w);
        let z = free_z_in_degrees(w, &[0]);
        let inj = ModuleMap::zero(0);
        let id = ModuleMap::identity(&z);
        let out = ModuleMap::zero(0);
        let report = check_exact(&[&zero, &z, &z, &zero], &[&inj, &id, &out]);
        assert!(report.is_exact());
    }

    #[test]
    fn detects_inexactness() {
        // 0 -> Z --0--> Z -> 0 is not exact at either Z
        let w = (0, 0);
        let zero = GradedZUModule::zero(w);
        let z = free_z_in_degrees(w, &[0]);
        let f = ModuleMap::zero(0);
        let report = check_exact(&[&zero, &z, &z, &zero], &[&f, &ModuleMap::zero(0), &ModuleMap::zero(0)]);
        // joint at index 1: ker(0->Z... ) wait: sequence 0 -> Z -> Z -> 0 with zero middle map
        assert!(!report.is_exact());
        assert!(report.first_failure().is_some());
    }

    #[test]
    fn localize_z_u_polynomial_gives_laurent_pattern() {
        let w = (-10, 10);
        let m = z_u_polynomial(w, 0);
        let loc = localize_u(&m);
        assert!(loc.stabilized);
        assert_eq!(loc.module.stably_periodic, Some(2));
        for d in (-10..=10).filter(|d| d % 2 == 0) {
            assert_eq!(loc.module.component(d), Component::free(1), "degree {d}");
        }
        for d in (-10..=10).filter(|d| d % 2 != 0) {
            assert!(loc.module.component(d).is_zero());
        }
    }

    #[test]
    fn localize_kills_u_torsion() {
        let w = (-10, 0);
        let m = z_u_truncated(w, 0, 3);
        let loc = localize_u(&m);
        assert!(loc.module.is_zero());
    }

    #[test]
    fn localize_kills_trivial_u_summand() {
        // Z[U] ⊕ Z/2 with trivial U on the second summand
        let w = (-10, 0);
        let zu = z_u_polynomial(w, 0);
        let mut torsion = BTreeMap::new();
        torsion.insert(
            0,
            Component {
                torsion: vec![BigInt::from(2)],
                free_rank: 0,
            },
        );
        let t = GradedZUModule::from_components(w, torsion);
        let mut sum = zu.direct_sum(&t);
        // U: degree 0 (Z + Z/2) -> degree -2 (Z): kill the torsion generator,
        // carry the free one. Generator order: torsion first.
        sum.set_u_map(0, IntMatrix::from_rows(&[vec![0, 1]]));
        for d in ((w.0 + 2)..=-2).filter(|d| d % 2 == 0) {
            sum.set_u_map(d, IntMatrix::identity(1));
        }
        sum.validate().unwrap();
        let loc = localize_u(&sum);
        assert!(loc.stabilized);
        for d in (w.0..=w.1).filter(|d| d % 2 == 0) {
            assert_eq!(loc.module.component(d), Component::free(1));
        }
    }

    #[test]
    fn localize_idempotent() {
        let w = (-8, 8);
        let m = z_u_polynomial(w, 4);
        let once = localize_u(&m).module;
        let twice = localize_u(&once).module;
        assert!(tables_isomorphic(&once, &twice));
    }
}
