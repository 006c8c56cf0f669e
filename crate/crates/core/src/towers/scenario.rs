//! Scenario plumbing: the quotient flow on (p, slot radii), cut-function
//! families with equally spaced levels, spectator certification, and the
//! big-grid window computation that towers are assembled from.

use crate::conley::{
    build_cell_model, build_index_pair_from_outer, build_outer_map, check_pair_conditions,
    relative_pair, theory_homology, CellModel, ConleyError, CubicalGrid, FaceTable, IndexPair,
    OuterMap, OuterMapConfig, TheoryHomology, VectorFlow,
};
use crate::equivariant::Theory;
use crate::flow::{
    build_transverse_function, csd_value, projection_factor, DesuspensionLedger, FlowError, Point,
    SpectralModel, ToyCsdParams, TransverseFunction, TransverseSampling, TransverseSign,
};
use num_complex::Complex64;
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Exact,
    Nonexact,
}

/// A scenario: the model data plus discretization and window choices.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub model: SpectralModel,
    pub params: ToyCsdParams,
    pub regime: Regime,
    pub grid_h: f64,
    pub r_max: f64,
    pub step_time: f64,
    pub substeps: usize,
    /// Window index ranges (levels of the primary cut function).
    pub m_range: (i64, i64),
    pub n_range: (i64, i64),
    /// Base value v of the cutting.
    pub cut_offset: f64,
    pub p_margin: f64,
    pub degree_window: (i64, i64),
    pub theories: Vec<Theory>,
    /// Explicit cut-value span for the stabilization check.
    pub stab_span: (f64, f64),
}

impl Scenario {
    /// Shipped scenarios, mirrored by the JSON presets.
    pub fn builtin(name: &str) -> Option<Scenario> {
        match name {
            "default_exact" => Some(Scenario {
                name: name.into(),
                model: SpectralModel::new(-1, 0, 0.3, 1, 0.0, vec![], -1.5, 1.5).unwrap(),
                params: ToyCsdParams::new(1.0, 0.25, 2.0),
                regime: Regime::Exact,
                grid_h: 0.03,
                r_max: 0.54,
                step_time: 0.5,
                substeps: 8,
                m_range: (0, 2),
                n_range: (1, 3),
                cut_offset: 0.0,
                p_margin: 0.25,
                degree_window: (-4, 6),
                theories: vec![Theory::Ordinary, Theory::Borel, Theory::Tate],
                stab_span: (0.5, 1.0),
            }),
            "s1xs2_exact" => Some(Scenario {
                name: name.into(),
                model: SpectralModel::new(-1, 0, 0.3, 1, 0.0, vec![], -1.5, 1.5).unwrap(),
                params: ToyCsdParams::new(1.0, 0.1, 2.0),
                regime: Regime::Exact,
                grid_h: 0.05,
                r_max: 0.5,
                step_time: 0.5,
                substeps: 8,
                m_range: (0, 1),
                n_range: (1, 2),
                cut_offset: 0.0,
                p_margin: 0.25,
                degree_window: (-4, 6),
                theories: vec![Theory::Ordinary, Theory::Borel, Theory::Tate],
                stab_span: (0.5, 1.0),
            }),
            "s1xs2_nonexact" => Some(Scenario {
                name: name.into(),
                model: SpectralModel::new(-1, 0, 0.45, 1, 0.0, vec![], -0.2, 1.5).unwrap(),
                params: ToyCsdParams::new(0.0, 0.1, 2.0),
                regime: Regime::Nonexact,
                grid_h: 0.0125,
                r_max: 0.5,
                step_time: 0.5,
                substeps: 8,
                m_range: (-1, 0),
                n_range: (1, 2),
                // in units of the level step, on top of the auto-centered base
                cut_offset: 0.0,
                p_margin: 0.25,
                degree_window: (-4, 6),
                theories: vec![Theory::Ordinary, Theory::Borel, Theory::CoBorel, Theory::Tate],
                stab_span: (0.0, 1.0),
            }),
            "stab_default" => Some(Scenario {
                name: name.into(),
                model: SpectralModel::new(-1, 2, 0.3, 1, 0.0, vec![2.0], -0.5, 0.6).unwrap(),
                params: ToyCsdParams::new(0.15, 0.05, 2.0),
                regime: Regime::Exact,
                grid_h: 0.04,
                r_max: 0.4,
                step_time: 0.4,
                substeps: 8,
                m_range: (0, 0),
                n_range: (1, 1),
                cut_offset: 0.0,
                p_margin: 0.2,
                degree_window: (0, 6),
                theories: vec![Theory::Ordinary],
                stab_span: (0.075, 0.12),
            }),
            _ => None,
        }
    }
}

#[derive(Debug)]
pub enum ScenarioError {
    Flow(FlowError),
    Conley(ConleyError),
    Tower(crate::towers::limits::TowerError),
    Grid(crate::conley::GridError),
    /// A cut level sits too close to a critical value.
    CutNotRegular { level: f64, critical_value: f64 },
    EmptyWindow,
}

impl std::fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScenarioError::Flow(e) => write!(f, "flow: {e}"),
            ScenarioError::Conley(e) => write!(f, "conley: {e}"),
            ScenarioError::Tower(e) => write!(f, "tower: {e}"),
            ScenarioError::Grid(e) => write!(f, "grid: {e}"),
            ScenarioError::CutNotRegular {
                level,
                critical_value,
            } => write!(f, "cut level {level} within tolerance of critical value {critical_value}"),
            ScenarioError::EmptyWindow => write!(f, "window region contains no cells"),
        }
    }
}

impl std::error::Error for ScenarioError {}

impl From<FlowError> for ScenarioError {
    fn from(e: FlowError) -> Self {
        ScenarioError::Flow(e)
    }
}

impl From<ConleyError> for ScenarioError {
    fn from(e: ConleyError) -> Self {
        ScenarioError::Conley(e)
    }
}

impl From<crate::towers::limits::TowerError> for ScenarioError {
    fn from(e: crate::towers::limits::TowerError) -> Self {
        ScenarioError::Tower(e)
    }
}

impl From<crate::conley::GridError> for ScenarioError {
    fn from(e: crate::conley::GridError) -> Self {
        ScenarioError::Grid(e)
    }
}

/// The reduced flow on (p, r_a, ...) for the active slots; spectator slots and
/// all form modes stay exactly at the origin of their coordinates, where the
/// model flow leaves this subspace invariant.
pub struct QuotientFlow {
    pub model: SpectralModel,
    pub params: ToyCsdParams,
    /// Ascending slot indices carried as radius axes (at most two).
    pub active_slots: Vec<i64>,
    pub width: f64,
}

impl QuotientFlow {
    pub fn embed(&self, coords: &[f64]) -> Point {
        let mut x = Point::zero(&self.model);
        x.p = coords[0];
        for (i, &j) in self.active_slots.iter().enumerate() {
            let slot_idx = (j - self.model.j_min) as usize * self.model.multiplicity;
            x.z[slot_idx] = Complex64::new(coords[1 + i], 0.0);
        }
        x
    }
}

impl VectorFlow for QuotientFlow {
    fn dim(&self) -> usize {
        1 + self.active_slots.len()
    }

    fn field(&self, x: &[f64]) -> Vec<f64> {
        let p = x[0];
        let s: f64 = x[1..].iter().map(|r| r * r).sum();
        let q = 4.0 * self.params.gamma * s + 2.0 * self.params.coupling * p;
        let lam = self.model.lambda_cut;
        let mu = self.model.mu_cut;
        let mut out = Vec::with_capacity(x.len());
        let p_force = self.params.kappa
            + 2.0 * std::f64::consts::PI
                * self.params.epsilon
                * (2.0 * std::f64::consts::PI * p).cos()
            + self.params.coupling * s;
        out.push(-projection_factor(0.0, lam, mu, self.width) * p_force);
        for (i, &j) in self.active_slots.iter().enumerate() {
            let lambda = self.model.slot_eigenvalue(j);
            let ramp = projection_factor(lambda, lam, mu, self.width);
            out.push(-(lambda + ramp * q) * x[1 + i]);
        }
        out
    }
}

/// A cut function with equally spaced regular levels: level(k) = base + k·step.
pub enum CutFamily {
    Csd {
        model: SpectralModel,
        params: ToyCsdParams,
        base: f64,
        step: f64,
    },
    Transverse {
        f: TransverseFunction,
        base: f64,
    },
}

impl CutFamily {
    pub fn eval(&self, x: &Point) -> f64 {
        match self {
            CutFamily::Csd { model, params, .. } => csd_value(x, params, model),
            CutFamily::Transverse { f, .. } => f.eval(x),
        }
    }

    pub fn step(&self) -> f64 {
        match self {
            CutFamily::Csd { step, .. } => *step,
            CutFamily::Transverse { f, .. } => f.step,
        }
    }

    pub fn level(&self, k: i64) -> f64 {
        match self {
            CutFamily::Csd { base, step, .. } => base + step * k as f64,
            CutFamily::Transverse { f, base } => base + f.step * k as f64,
        }
    }

    pub fn base_value(&self) -> f64 {
        match self {
            CutFamily::Csd { base, .. } => *base,
            CutFamily::Transverse { base, .. } => *base,
        }
    }
}

/// Slots in the cut split into certified-stable spectators and gridded
/// actives, by interval sign of the radial rate λ_j + ramp·(4γS + 2cp) over
/// the region bounds.
#[derive(Clone, Debug)]
pub struct SpectatorSplit {
    pub active_slots: Vec<i64>,
    pub stable_slots: Vec<i64>,
    pub stable_forms: Vec<usize>,
    pub unstable_forms: Vec<usize>,
}

pub fn classify_spectators(
    model: &SpectralModel,
    params: &ToyCsdParams,
    p_range: (f64, f64),
    s_max: f64,
    width: f64,
) -> Result<SpectatorSplit, FlowError> {
    let mut active = Vec::new();
    let mut stable = Vec::new();
    let q_lo = (2.0 * params.coupling * p_range.0).min(2.0 * params.coupling * p_range.1);
    let q_hi = 4.0 * params.gamma * s_max
        + (2.0 * params.coupling * p_range.0).max(2.0 * params.coupling * p_range.1);
    for j in model.slots_in_cut() {
        let lambda = model.slot_eigenvalue(j);
        let ramp = projection_factor(lambda, model.lambda_cut, model.mu_cut, width);
        let lo = lambda + ramp * q_lo;
        let hi = lambda + ramp * q_hi;
        if lo > 1e-9 {
            stable.push(j);
        } else if hi < -1e-9 {
            // definitely unstable everywhere: still gridded, the index pair
            // machinery handles it honestly
            active.push(j);
        } else {
            active.push(j);
        }
    }
    let mut stable_forms = Vec::new();
    let mut unstable_forms = Vec::new();
    for k in model.form_indices_in_cut() {
        let e = model.form_eigenvalues()[k];
        if e > 0.0 {
            stable_forms.push(k);
        } else {
            unstable_forms.push(k);
        }
    }
    Ok(SpectatorSplit {
        active_slots: active,
        stable_slots: stable,
        stable_forms,
        unstable_forms,
    })
}

/// The p interval on which the reducible-axis cut value sweeps the level
/// window, padded by the off-axis variation bound and the margin.
pub fn p_range_for_levels(
    cut: &CutFamily,
    model: &SpectralModel,
    params: &ToyCsdParams,
    lvl_lo: f64,
    lvl_hi: f64,
    r_max: f64,
    margin: f64,
) -> (f64, f64) {
    // The scan needs to capture the cut-window band around the invariant
    // content (critical points sit near the reducible axis; irreducibles at
    // radius ~sqrt(|λ|/4γ)). The far radial tails of the level region may be
    // truncated by the grid box; the pair certificates are verified on the
    // box. Cover the moderate-radius offsets only.
    let irr_r2 = (1.0 / (4.0 * params.gamma)).min(r_max * r_max);
    let max_abs_lambda = model
        .all_eigenvalues()
        .iter()
        .fold(0.0f64, |a, b| a.max(b.abs()));
    let slack = 0.5 * (max_abs_lambda + 2.0 * params.coupling.abs()) * irr_r2
        + params.gamma * irr_r2 * irr_r2
        + 0.05;
    let _ = r_max;
    let reducible_val = |p: f64| {
        let mut x = Point::zero(model);
        x.p = p;
        cut.eval(&x)
    };
    let mut p_lo = f64::INFINITY;
    let mut p_hi = f64::NEG_INFINITY;
    let scan = 4000;
    for i in 0..=scan {
        let p = -20.0 + 40.0 * i as f64 / scan as f64;
        let v = reducible_val(p);
        if v > lvl_lo - slack && v <= lvl_hi + slack {
            p_lo = p_lo.min(p);
            p_hi = p_hi.max(p);
        }
    }
    if !p_lo.is_finite() {
        (0.0, 1.0)
    } else {
        (p_lo - margin, p_hi + margin)
    }
}

/// The big-grid computation a tower is carved out of: one outer approximation
/// and certified total pair over the full level window, with sub-pairs read
/// off by level predicates.
pub struct WindowComputation {
    pub grid: CubicalGrid,
    pub flow: QuotientFlow,
    pub cut1: CutFamily,
    pub cut2: Option<CutFamily>,
    pub pair: IndexPair,
    pub ledger: DesuspensionLedger,
    /// Degrees shift from unstable decoupled form modes.
    pub form_shift: i64,
    pub split: SpectatorSplit,
    /// Raw degree window used for every theory computation on this grid.
    pub raw_degree_window: (i64, i64),
    computed: Vec<(CellModel, HashMap<u8, TheoryHomology>)>,
    pair_keys: Vec<Vec<u8>>,
}

/// A cut-value bound for carving sub-pairs out of the big pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    /// The bottom of the big region.
    RegionBottom,
    /// Strictly above the primary cut value.
    Cut1(f64),
    /// Strictly above the secondary cut value.
    Cut2(f64),
}

/// Critical values of a 1-parameter profile on the reducible axis, located by
/// sign changes of the derivative over a fine scan.
fn axis_critical_values(eval: impl Fn(f64) -> f64) -> Vec<f64> {
    let scan = 6000;
    let (lo, hi) = (-6.0, 6.0);
    let h = (hi - lo) / scan as f64;
    let d = |p: f64| (eval(p + 1e-5) - eval(p - 1e-5)) / 2e-5;
    let mut out = Vec::new();
    let mut prev = d(lo);
    for i in 1..=scan {
        let p = lo + h * i as f64;
        let cur = d(p);
        if prev.signum() != cur.signum() && prev.signum() != 0.0 {
            // bisect
            let (mut a, mut b) = (p - h, p);
            for _ in 0..40 {
                let m = 0.5 * (a + b);
                if d(a).signum() == d(m).signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            out.push(eval(0.5 * (a + b)));
        }
        prev = cur;
    }
    out
}

/// The level offset maximizing the distance from every critical value to the
/// level grid {base + k·step}.
fn regular_base(critical_values: &[f64], step: f64) -> f64 {
    if critical_values.is_empty() || step <= 0.0 {
        return 0.0;
    }
    let mut residues: Vec<f64> = critical_values
        .iter()
        .map(|v| v.rem_euclid(step))
        .collect();
    residues.sort_by(|a, b| a.partial_cmp(b).unwrap());
    residues.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut best = (0.0, -1.0);
    let n = residues.len();
    for i in 0..n {
        let next = if i + 1 == n {
            residues[0] + step
        } else {
            residues[i + 1]
        };
        let mid = 0.5 * (residues[i] + next);
        let gap = 0.5 * (next - residues[i]);
        if gap > best.1 {
            best = (mid.rem_euclid(step), gap);
        }
    }
    best.0
}

/// The primary cut family of a scenario: the functional itself in the exact
/// regime (levels spaced by κ), a positively transverse function otherwise.
/// The base level is auto-centered in the widest gap of the critical-value
/// residues mod the step; the scenario offset (in step units) is added on
/// top.
pub fn make_cut1(scenario: &Scenario) -> Result<CutFamily, ScenarioError> {
    let model = &scenario.model;
    let params = &scenario.params;
    Ok(match scenario.regime {
        Regime::Exact => {
            let m = model.clone();
            let pr = params.clone();
            let crit = axis_critical_values(|p| {
                let mut x = Point::zero(&m);
                x.p = p;
                csd_value(&x, &pr, &m)
            });
            let base = regular_base(&crit, params.kappa) + scenario.cut_offset * params.kappa;
            CutFamily::Csd {
                model: model.clone(),
                params: params.clone(),
                base,
                step: params.kappa,
            }
        }
        Regime::Nonexact => {
            let f = build_transverse_function(
                params,
                model,
                TransverseSign::Positive,
                &TransverseSampling::default(),
            )?;
            let m = model.clone();
            let fc = f.clone();
            let crit = axis_critical_values(move |p| {
                let mut x = Point::zero(&m);
                x.p = p;
                fc.eval(&x)
            });
            let base = regular_base(&crit, f.step) + scenario.cut_offset * f.step;
            CutFamily::Transverse { f, base }
        }
    })
}

pub fn make_cut2(scenario: &Scenario) -> Result<CutFamily, ScenarioError> {
    let f = build_transverse_function(
        &scenario.params,
        &scenario.model,
        TransverseSign::Negative,
        &TransverseSampling::default(),
    )?;
    let m = scenario.model.clone();
    let fc = f.clone();
    let crit = axis_critical_values(move |p| {
        let mut x = Point::zero(&m);
        x.p = p;
        fc.eval(&x)
    });
    let base = regular_base(&crit, f.step) + scenario.cut_offset * f.step;
    Ok(CutFamily::Transverse { f, base })
}

impl WindowComputation {
    /// Window between the cut levels with the given indices.
    pub fn build_indices(
        scenario: &Scenario,
        lvl_lo: i64,
        lvl_hi: i64,
        with_cut2: bool,
    ) -> Result<WindowComputation, ScenarioError> {
        let cut1 = make_cut1(scenario)?;
        let (lo, hi) = (cut1.level(lvl_lo), cut1.level(lvl_hi));
        WindowComputation::build_values(scenario, lo, hi, with_cut2)
    }

    pub fn build_values(
        scenario: &Scenario,
        lvl_lo_value: f64,
        lvl_hi_value: f64,
        with_cut2: bool,
    ) -> Result<WindowComputation, ScenarioError> {
        let cut1 = make_cut1(scenario)?;
        let cut2 = if with_cut2 {
            Some(make_cut2(scenario)?)
        } else {
            None
        };
        WindowComputation::build_with_cuts(scenario, lvl_lo_value, lvl_hi_value, cut1, cut2)
    }

    /// Build with externally supplied cut families (used by the periodicity
    /// check, which transports the cuts instead of re-deriving them).
    pub fn build_with_cuts(
        scenario: &Scenario,
        lvl_lo_value: f64,
        lvl_hi_value: f64,
        cut1: CutFamily,
        cut2: Option<CutFamily>,
    ) -> Result<WindowComputation, ScenarioError> {
        let model = &scenario.model;
        let params = &scenario.params;
        let width = model.default_smoothing_width().min(0.1);
        let p_range = p_range_for_levels(
            &cut1,
            model,
            params,
            lvl_lo_value,
            lvl_hi_value,
            scenario.r_max,
            scenario.p_margin,
        );
        let split = classify_spectators(
            model,
            params,
            p_range,
            scenario.r_max * scenario.r_max * 2.0,
            width,
        )?;
        if split.active_slots.len() > 2 {
            return Err(ScenarioError::Conley(ConleyError::MultiSlotCell));
        }
        let flow = QuotientFlow {
            model: model.clone(),
            params: params.clone(),
            active_slots: split.active_slots.clone(),
            width,
        };
        let mut ranges = vec![p_range];
        let mut radius_axes = Vec::new();
        for i in 0..split.active_slots.len() {
            ranges.push((0.0, scenario.r_max));
            radius_axes.push(1 + i);
        }
        let grid = CubicalGrid::covering(&ranges, scenario.grid_h, radius_axes)?;
        // active cells: between the extreme levels (and above cut2's lowest
        // level when present)
        let lo_val = lvl_lo_value;
        let hi_val = lvl_hi_value;
        let mut active = vec![false; grid.cell_count()];
        let mut any = false;
        for idx in 0..grid.cell_count() {
            let c = grid.center(&grid.multi_of(idx));
            let x = flow.embed(&c);
            let v = cut1.eval(&x);
            let inside = v > lo_val && v <= hi_val;
            if inside {
                active[idx] = true;
                any = true;
            }
        }
        if !any {
            return Err(ScenarioError::EmptyWindow);
        }
        let outer = build_outer_map(
            &flow,
            &grid,
            active,
            &OuterMapConfig {
                step_time: scenario.step_time,
                substeps: scenario.substeps,
                lipschitz: None,
                safety_pad: 0.05,
            },
        );
        let pair = build_index_pair_from_outer(outer)?;
        let ledger = model.desuspension_ledger();
        let form_shift = split.unstable_forms.len() as i64;
        let shift = form_shift - ledger.degree_shift();
        let ambient = grid.dims() as i64 + grid.radius_axes.len() as i64;
        let raw_degree_window = (
            (scenario.degree_window.0 - shift).min(0) - 1,
            (scenario.degree_window.1 - shift).max(ambient + 2) + 1,
        );
        Ok(WindowComputation {
            grid,
            flow,
            cut1,
            cut2,
            pair,
            ledger,
            form_shift,
            split,
            raw_degree_window,
            computed: Vec::new(),
            pair_keys: Vec::new(),
        })
    }

    /// Net shift applied to raw tables: unstable-form suspensions minus the
    /// ledger desuspension.
    pub fn reported_shift(&self) -> i64 {
        self.form_shift - self.ledger.degree_shift()
    }

    /// Attractor-block membership: N0-cells between the bound and the top
    /// primary-cut value.
    fn window_cells(&self, bound: Bound, top_value: f64) -> Vec<bool> {
        let grid = &self.grid;
        let count = grid.cell_count();
        let n0 = &self.pair.n;
        let mut n_cells = vec![false; count];
        for idx in 0..count {
            if !n0[idx] {
                continue;
            }
            let x = self.flow.embed(&grid.center(&grid.multi_of(idx)));
            let below_top = self.cut1.eval(&x) <= top_value;
            let above_bottom = match bound {
                Bound::RegionBottom => true,
                Bound::Cut1(v) => self.cut1.eval(&x) > v,
                Bound::Cut2(v) => {
                    let c2 = self.cut2.as_ref().expect("cut2 requested but absent");
                    c2.eval(&x) > v
                }
            };
            n_cells[idx] = below_top && above_bottom;
        }
        n_cells
    }

    /// The attractor-block pair for the window: N = big-pair cells at or
    /// below the top cut value, L = the part below the bound plus the big
    /// exit set. Orbits leave the window only downward (transversality) or
    /// through the lateral exit, both of which land in L.
    fn side_cells(&self, bound: Bound, top_value: f64) -> (Vec<bool>, Vec<bool>) {
        let count = self.grid.cell_count();
        let grid = &self.grid;
        let n0 = &self.pair.n;
        let l0 = &self.pair.l;
        let mut n_sub = vec![false; count];
        let mut l_sub = vec![false; count];
        for idx in 0..count {
            if !n0[idx] {
                continue;
            }
            let x = self.flow.embed(&grid.center(&grid.multi_of(idx)));
            if self.cut1.eval(&x) > top_value {
                continue;
            }
            n_sub[idx] = true;
            let below = match bound {
                Bound::RegionBottom => false,
                Bound::Cut1(v) => self.cut1.eval(&x) <= v,
                Bound::Cut2(v) => {
                    let c2 = self.cut2.as_ref().expect("cut2 requested but absent");
                    c2.eval(&x) <= v
                }
            };
            if below || l0[idx] {
                l_sub[idx] = true;
            }
        }
        (n_sub, l_sub)
    }

    /// Certified relative pair for the invariant set between the bound and
    /// the top level, valid because the level sets are transverse to the
    /// flow. Returns an index into internal storage.
    fn ensure_pair(&mut self, bound: Bound, top_value: f64) -> Result<usize, ScenarioError> {
        let key = pair_key(bound, top_value);
        if let Some(pos) = self.pair_keys.iter().position(|k| *k == key) {
            return Ok(pos);
        }
        let (n_sub, l_sub) = self.side_cells(bound, top_value);
        // certify against the invariant part of the sub-digraph
        let outer = &self.pair.outer;
        let count = self.grid.cell_count();
        let window_active: Vec<bool> = (0..count).map(|i| n_sub[i] && !l_sub[i]).collect();
        let restricted = OuterMap {
            grid: self.grid.clone(),
            active: window_active.clone(),
            images: (0..count)
                .map(|i| {
                    if window_active[i] {
                        outer.images[i]
                            .iter()
                            .copied()
                            .filter(|&w| window_active[w as usize])
                            .collect()
                    } else {
                        Vec::new()
                    }
                })
                .collect(),
            leaves: outer.leaves.clone(),
            step_time: outer.step_time,
            lipschitz: outer.lipschitz,
        };
        let s_sub = restricted.invariant_part();
        let cert = check_pair_conditions(outer, &s_sub, &n_sub, &l_sub);
        if !cert.all_ok() {
            if std::env::var("FLOERFORGE_LOG").is_ok() {
                eprintln!("sub-pair certificate failed: {cert:?} bound {bound:?} top {top_value}");
            }
            return Err(ScenarioError::Conley(ConleyError::CollarTooThin));
        }
        let mut table = FaceTable::default();
        let n_idx: Vec<usize> = (0..count).filter(|&i| n_sub[i]).collect();
        let l_idx: Vec<usize> = (0..count).filter(|&i| l_sub[i]).collect();
        let rel = relative_pair(&self.grid, &n_idx, &l_idx, &mut table);
        let model = build_cell_model(&self.grid, &rel, &table)?;
        self.computed.push((model, HashMap::new()));
        self.pair_keys.push(key);
        Ok(self.computed.len() - 1)
    }

    /// Raw-degree theory homology of the sub-pair (no shifts applied).
    pub fn theory_of(
        &mut self,
        bound: Bound,
        top_value: f64,
        theory: Theory,
    ) -> Result<usize, ScenarioError> {
        let pos = self.ensure_pair(bound, top_value)?;
        let tkey = theory_key(theory);
        if !self.computed[pos].1.contains_key(&tkey) {
            let th = theory_homology(&self.computed[pos].0, theory, self.raw_degree_window);
            self.computed[pos].1.insert(tkey, th);
        }
        Ok(pos)
    }

    pub fn homology(&self, pos: usize, theory: Theory) -> &TheoryHomology {
        &self.computed[pos].1[&theory_key(theory)]
    }

    pub fn cell_model(&self, pos: usize) -> &CellModel {
        &self.computed[pos].0
    }

    /// Relative pair between nested attractor blocks: the index of the part
    /// of the window above the primary value `outer_bottom` and below the
    /// secondary value `inner_c2` (the wedge between the two cut families).
    pub fn wedge_pair(
        &mut self,
        outer_bottom: f64,
        inner_c2: f64,
        top_value: f64,
        theory: Theory,
    ) -> Result<usize, ScenarioError> {
        let mut key = vec![9u8];
        key.extend_from_slice(&outer_bottom.to_le_bytes());
        key.extend_from_slice(&inner_c2.to_le_bytes());
        key.extend_from_slice(&top_value.to_le_bytes());
        let pos = if let Some(pos) = self.pair_keys.iter().position(|k| *k == key) {
            pos
        } else {
            let (n_outer, _) = self.side_cells(Bound::Cut1(outer_bottom), top_value);
            let (n_inner, _) = self.side_cells(Bound::Cut2(inner_c2), top_value);
            let count = self.grid.cell_count();
            for i in 0..count {
                if n_inner[i] && !n_outer[i] {
                    return Err(ScenarioError::Conley(ConleyError::CollarTooThin));
                }
            }
            // certify (n_outer, n_inner) for the invariant part between them
            let outer = &self.pair.outer;
            let window_active: Vec<bool> = (0..count).map(|i| n_outer[i] && !n_inner[i]).collect();
            let restricted = OuterMap {
                grid: self.grid.clone(),
                active: window_active.clone(),
                images: (0..count)
                    .map(|i| {
                        if window_active[i] {
                            outer.images[i]
                                .iter()
                                .copied()
                                .filter(|&w| window_active[w as usize])
                                .collect()
                        } else {
                            Vec::new()
                        }
                    })
                    .collect(),
                leaves: outer.leaves.clone(),
                step_time: outer.step_time,
                lipschitz: outer.lipschitz,
            };
            let s_sub = restricted.invariant_part();
            let cert = check_pair_conditions(outer, &s_sub, &n_outer, &n_inner);
            if !cert.all_ok() {
                return Err(ScenarioError::Conley(ConleyError::CollarTooThin));
            }
            let mut table = FaceTable::default();
            let n_idx: Vec<usize> = (0..count).filter(|&i| n_outer[i]).collect();
            let l_idx: Vec<usize> = (0..count).filter(|&i| n_inner[i]).collect();
            let rel = relative_pair(&self.grid, &n_idx, &l_idx, &mut table);
            let model = build_cell_model(&self.grid, &rel, &table)?;
            self.computed.push((model, HashMap::new()));
            self.pair_keys.push(key);
            self.computed.len() - 1
        };
        let tkey = theory_key(theory);
        if !self.computed[pos].1.contains_key(&tkey) {
            let th = theory_homology(&self.computed[pos].0, theory, self.raw_degree_window);
            self.computed[pos].1.insert(tkey, th);
        }
        Ok(pos)
    }

    /// Reported-degree module of a computed sub-pair.
    pub fn reported_module(&self, pos: usize, theory: Theory) -> crate::algebra::module::GradedZUModule {
        let mut m = self.homology(pos, theory).module.shifted(self.reported_shift());
        if theory == Theory::Tate && !m.is_zero() {
            m.stably_periodic = Some(2);
        }
        m
    }
}

fn pair_key(bound: Bound, top_value: f64) -> Vec<u8> {
    let mut v = Vec::new();
    match bound {
        Bound::RegionBottom => v.push(0u8),
        Bound::Cut1(x) => {
            v.push(1);
            v.extend_from_slice(&x.to_le_bytes());
        }
        Bound::Cut2(x) => {
            v.push(2);
            v.extend_from_slice(&x.to_le_bytes());
        }
    }
    v.extend_from_slice(&top_value.to_le_bytes());
    v
}

fn theory_key(theory: Theory) -> u8 {
    match theory {
        Theory::Ordinary => 0,
        Theory::Borel => 1,
        Theory::CoBorel => 2,
        Theory::Tate => 3,
    }
}

/// Regularity of cut levels: minimal distance from any level to any critical
/// value of the cut function on the reducible axis.
pub fn check_levels_regular(
    cut: &CutFamily,
    model: &SpectralModel,
    critical_points: &[Point],
    levels: &[f64],
    tol: f64,
) -> Result<(), ScenarioError> {
    let _ = model;
    for cp in critical_points {
        let v = cut.eval(cp);
        for &lvl in levels {
            if (v - lvl).abs() < tol {
                return Err(ScenarioError::CutNotRegular {
                    level: lvl,
                    critical_value: v,
                });
            }
        }
    }
    Ok(())
}
