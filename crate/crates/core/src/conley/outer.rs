//! Combinatorial outer approximation of the time-h flow map on a cubical
//! grid, and the chain-recurrent over-approximation of the invariant set.

use super::grid::CubicalGrid;

/// A smooth vector field on R^n; the flows fed to the index machinery.
pub trait VectorFlow: Sync {
    fn dim(&self) -> usize;
    fn field(&self, x: &[f64]) -> Vec<f64>;
}

/// Closure-backed flow for tests and classical examples.
pub struct FnFlow<F: Fn(&[f64]) -> Vec<f64> + Sync> {
    pub dims: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> Vec<f64> + Sync> VectorFlow for FnFlow<F> {
    fn dim(&self) -> usize {
        self.dims
    }

    fn field(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }
}

/// Classical RK4 integration of the field for total time t in `steps` pieces.
pub fn flow_map(flow: &dyn VectorFlow, x: &[f64], t: f64, steps: usize) -> Vec<f64> {
    let n = x.len();
    let mut y = x.to_vec();
    let h = t / steps as f64;
    for _ in 0..steps {
        let k1 = flow.field(&y);
        let mut y2 = y.clone();
        for i in 0..n {
            y2[i] += 0.5 * h * k1[i];
        }
        let k2 = flow.field(&y2);
        let mut y3 = y.clone();
        for i in 0..n {
            y3[i] += 0.5 * h * k2[i];
        }
        let k3 = flow.field(&y3);
        let mut y4 = y.clone();
        for i in 0..n {
            y4[i] += h * k3[i];
        }
        let k4 = flow.field(&y4);
        let prev = y.clone();
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        // finite-time blowup: freeze at the last finite state, clamped; the
        // direction of escape is preserved
        if y.iter().any(|v| !v.is_finite() || v.abs() > 1e9) {
            for (v, p) in y.iter_mut().zip(&prev) {
                if !v.is_finite() {
                    *v = p.clamp(-1e9, 1e9);
                } else {
                    *v = v.clamp(-1e9, 1e9);
                }
            }
            break;
        }
    }
    y
}

/// Finite-difference Jacobian ∞-norm of the field at a point: the local
/// Lipschitz estimate entering the image padding.
pub fn local_lipschitz(flow: &dyn VectorFlow, x: &[f64], eps: f64) -> f64 {
    let d = x.len();
    let mut rows = vec![0.0f64; d];
    for a in 0..d {
        let mut cp = x.to_vec();
        cp[a] += eps;
        let mut cm = x.to_vec();
        cm[a] -= eps;
        let fp = flow.field(&cp);
        let fm = flow.field(&cm);
        for i in 0..d {
            rows[i] += ((fp[i] - fm[i]) / (2.0 * eps)).abs();
        }
    }
    rows.into_iter().fold(0.1, f64::max)
}

/// Per-axis logarithmic norms of the Jacobian: row i gives
/// J_ii + Σ_{a≠i} |J_ia|, the growth rate of the axis-i deviation. Negative
/// rows contract.
pub fn local_log_norm_rows(flow: &dyn VectorFlow, x: &[f64], eps: f64) -> Vec<f64> {
    let d = x.len();
    let mut jac = vec![vec![0.0f64; d]; d];
    for a in 0..d {
        let mut cp = x.to_vec();
        cp[a] += eps;
        let mut cm = x.to_vec();
        cm[a] -= eps;
        let fp = flow.field(&cp);
        let fm = flow.field(&cm);
        for i in 0..d {
            jac[i][a] = (fp[i] - fm[i]) / (2.0 * eps);
        }
    }
    (0..d)
        .map(|i| {
            jac[i][i]
                + (0..d)
                    .filter(|&a| a != i)
                    .map(|a| jac[i][a].abs())
                    .sum::<f64>()
        })
        .collect()
}

/// Worst-row logarithmic ∞-norm.
pub fn local_log_norm(flow: &dyn VectorFlow, x: &[f64], eps: f64) -> f64 {
    local_log_norm_rows(flow, x, eps)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Sampled global Lipschitz estimate over the active cells.
pub fn estimate_lipschitz(flow: &dyn VectorFlow, grid: &CubicalGrid, active: &[bool]) -> f64 {
    let eps = grid.h * 0.1;
    let stride = (active.iter().filter(|a| **a).count() / 200).max(1);
    let mut best: f64 = 0.1;
    let mut seen = 0usize;
    for idx in 0..grid.cell_count() {
        if !active[idx] {
            continue;
        }
        seen += 1;
        if seen % stride != 0 {
            continue;
        }
        best = best.max(local_lipschitz(flow, &grid.center(&grid.multi_of(idx)), eps));
    }
    best
}

/// The multivalued cubical map: per active cell, the set of active cells its
/// padded time-h image touches, plus a flag when the image leaves the active
/// set or the grid.
pub struct OuterMap {
    pub grid: CubicalGrid,
    pub active: Vec<bool>,
    pub images: Vec<Vec<u32>>,
    pub leaves: Vec<bool>,
    pub step_time: f64,
    pub lipschitz: f64,
}

pub struct OuterMapConfig {
    /// Upper bound on the per-cell integration time.
    pub step_time: f64,
    pub substeps: usize,
    pub lipschitz: Option<f64>,
    /// Extra padding in cell units on top of the Lipschitz estimate.
    pub safety_pad: f64,
}

impl Default for OuterMapConfig {
    fn default() -> Self {
        OuterMapConfig {
            step_time: 0.4,
            substeps: 8,
            lipschitz: None,
            safety_pad: 0.05,
        }
    }
}

/// How far the expansion factor exp(μ t) may grow before the step is cut.
const EXPANSION_BUDGET: f64 = 1.2;
/// Target displacement per step, in cell units.
const TARGET_MOVE_CELLS: f64 = 2.5;

pub fn build_outer_map(
    flow: &dyn VectorFlow,
    grid: &CubicalGrid,
    active: Vec<bool>,
    config: &OuterMapConfig,
) -> OuterMap {
    assert_eq!(flow.dim(), grid.dims());
    let eps = grid.h * 0.1;
    let global_lip = config.lipschitz;
    let n = grid.cell_count();
    let mut images = vec![Vec::new(); n];
    let mut leaves = vec![false; n];
    let mut worst_lip: f64 = 0.1;
    for idx in 0..n {
        if !active[idx] {
            continue;
        }
        let multi = grid.multi_of(idx);
        let center = grid.center(&multi);
        // adaptive step: aim to move a few cells, but keep the expansion
        // factor exp(μ t) within budget where the flow locally expands
        let speed = flow
            .field(&center)
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        let mu_rows_here = match global_lip {
            Some(l) => vec![l; grid.dims()],
            None => local_log_norm_rows(flow, &center, eps),
        };
        let mu_here = mu_rows_here.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let t_base = (TARGET_MOVE_CELLS * grid.h / speed.max(1e-9))
            .clamp(config.step_time / 16.0, config.step_time);
        let t_cap = if mu_here > 0.0 {
            (EXPANSION_BUDGET / mu_here)
                .max(config.step_time / 16.0)
                .min(config.step_time)
        } else {
            config.step_time
        };
        let mut pts = grid.corners(&multi);
        pts.push(center.clone());
        // candidate steps: a short one, the move-targeted one, then growth
        // toward the cap. Pick the first that vacates the cell's own padded
        // image box; a cell that never vacates is a genuine recurrence
        // candidate and gets the tightest box instead.
        let mut candidates = vec![(config.step_time / 16.0).min(t_cap)];
        let mut t = t_base.min(t_cap);
        for _ in 0..5 {
            if t > candidates.last().unwrap() + 1e-12 {
                candidates.push(t);
            }
            if t >= t_cap - 1e-12 {
                break;
            }
            t = (t * 1.7).min(t_cap);
        }
        let evaluate = |t_cell: f64, worst: &mut f64| -> (Vec<f64>, Vec<f64>, bool, f64) {
            let mut b_lo = vec![f64::INFINITY; grid.dims()];
            let mut b_hi = vec![f64::NEG_INFINITY; grid.dims()];
            let mut center_img = Vec::new();
            for (pi, p) in pts.iter().enumerate() {
                let img = flow_map(flow, p, t_cell, config.substeps);
                for a in 0..grid.dims() {
                    b_lo[a] = b_lo[a].min(img[a]);
                    b_hi[a] = b_hi[a].max(img[a]);
                }
                if pi + 1 == pts.len() {
                    center_img = img;
                }
            }
            // every cell point sits within h/4 (sup norm) of a corner or the
            // center; deviations grow like exp(∫μ dt) with μ the logarithmic
            // norm, estimated at the cell and at its image, the latter
            // clamped into the grid box so off-box blowups cannot poison it
            let clamped_img: Vec<f64> = (0..grid.dims())
                .map(|a| {
                    let hi = grid.lo[a] + grid.h * grid.counts[a] as f64;
                    center_img[a].clamp(grid.lo[a], hi)
                })
                .collect();
            let mu_rows: Vec<f64> = match global_lip {
                Some(l) => vec![l; grid.dims()],
                None => {
                    let img_rows = local_log_norm_rows(flow, &clamped_img, eps);
                    mu_rows_here
                        .iter()
                        .zip(&img_rows)
                        .map(|(a, b)| a.max(*b))
                        .collect()
                }
            };
            *worst = worst.max(mu_rows.iter().copied().fold(0.1, f64::max));
            let mut volume = 1.0;
            for a in 0..grid.dims() {
                let factor = (mu_rows[a] * t_cell).exp().clamp(0.25, 3.0e3);
                let pad = factor * grid.h * 0.25 + config.safety_pad * grid.h + 1e-9;
                b_lo[a] -= pad;
                b_hi[a] += pad;
                if grid.radius_axes.contains(&a) && b_lo[a] < 0.0 {
                    b_lo[a] = 0.0;
                }
                volume *= (b_hi[a] - b_lo[a]).max(grid.h);
            }
            let self_overlap = (0..grid.dims()).all(|a| {
                let cell_lo = grid.lo[a] + grid.h * multi[a] as f64;
                let cell_hi = cell_lo + grid.h;
                b_lo[a] < cell_hi - 1e-12 && b_hi[a] > cell_lo + 1e-12
            });
            (b_lo, b_hi, self_overlap, volume)
        };
        let mut best: Option<(Vec<f64>, Vec<f64>, f64, f64)> = None;
        let mut vacated = false;
        let mut t_cell = candidates[0];
        for &tc in &candidates {
            let (lo, hi, overlap, volume) = evaluate(tc, &mut worst_lip);
            if !overlap {
                best = Some((lo, hi, volume, tc));
                vacated = true;
                break;
            }
            match &best {
                Some((_, _, v, _)) if *v <= volume => {}
                _ => best = Some((lo, hi, volume, tc)),
            }
        }
        let (b_lo, b_hi, _, tc) = best.expect("at least one candidate");
        t_cell = tc;
        let _ = (vacated, t_cell);
        let (ranges, outside) = grid.cells_touching(&b_lo, &b_hi);
        leaves[idx] = outside;
        if std::env::var("FLOERFORGE_DEBUG_CELL").ok().as_deref() == Some(&format!("{multi:?}")) {
            eprintln!("DEBUG cell {multi:?} t={t_cell} box lo {b_lo:?} hi {b_hi:?} outside {outside}");
        }
        if ranges.is_empty() {
            continue;
        }
        let mut target = ranges.iter().map(|r| r.0).collect::<Vec<_>>();
        loop {
            let t_idx = grid.index_of(&target);
            if active[t_idx] {
                images[idx].push(t_idx as u32);
            } else {
                leaves[idx] = true;
            }
            let mut a = 0;
            loop {
                if a == grid.dims() {
                    images[idx].sort_unstable();
                    images[idx].dedup();
                    break;
                }
                target[a] += 1;
                if target[a] <= ranges[a].1 {
                    break;
                }
                target[a] = ranges[a].0;
                a += 1;
            }
            if target.iter().zip(&ranges).all(|(t, r)| *t == r.0) {
                break;
            }
        }
    }
    OuterMap {
        grid: grid.clone(),
        active,
        images,
        leaves,
        step_time: config.step_time,
        lipschitz: worst_lip,
    }
}

impl OuterMap {
    /// Strongly connected components with a cycle (size > 1 or a self loop),
    /// by iterative Tarjan.
    pub fn cyclic_scc_members(&self) -> Vec<bool> {
        let n = self.grid.cell_count();
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut on_stack = vec![false; n];
        let mut stack: Vec<usize> = Vec::new();
        let mut cyclic = vec![false; n];
        let mut counter = 0usize;
        // iterative Tarjan: (node, child position)
        let mut call: Vec<(usize, usize)> = Vec::new();
        for start in 0..n {
            if !self.active[start] || index[start] != usize::MAX {
                continue;
            }
            call.push((start, 0));
            index[start] = counter;
            low[start] = counter;
            counter += 1;
            stack.push(start);
            on_stack[start] = true;
            while let Some(&mut (v, ref mut ci)) = call.last_mut() {
                if *ci < self.images[v].len() {
                    let w = self.images[v][*ci] as usize;
                    *ci += 1;
                    if index[w] == usize::MAX {
                        index[w] = counter;
                        low[w] = counter;
                        counter += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        call.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                } else {
                    call.pop();
                    if let Some(&mut (parent, _)) = call.last_mut() {
                        low[parent] = low[parent].min(low[v]);
                    }
                    if low[v] == index[v] {
                        let mut comp = Vec::new();
                        loop {
                            let w = stack.pop().unwrap();
                            on_stack[w] = false;
                            comp.push(w);
                            if w == v {
                                break;
                            }
                        }
                        let has_cycle = comp.len() > 1
                            || self.images[comp[0]].binary_search(&(comp[0] as u32)).is_ok();
                        if has_cycle {
                            for &w in &comp {
                                cyclic[w] = true;
                            }
                        }
                    }
                }
            }
        }
        cyclic
    }

    /// Chain-recurrent over-approximation: cells both reachable from and
    /// co-reachable to the cyclic part (paths between components retained).
    pub fn invariant_part(&self) -> Vec<bool> {
        let n = self.grid.cell_count();
        let cyclic = self.cyclic_scc_members();
        let mut fwd = cyclic.clone();
        let mut queue: Vec<usize> = (0..n).filter(|&i| cyclic[i]).collect();
        while let Some(v) = queue.pop() {
            for &w in &self.images[v] {
                let w = w as usize;
                if !fwd[w] {
                    fwd[w] = true;
                    queue.push(w);
                }
            }
        }
        // reverse adjacency
        let mut rev: Vec<Vec<u32>> = vec![Vec::new(); n];
        for v in 0..n {
            for &w in &self.images[v] {
                rev[w as usize].push(v as u32);
            }
        }
        let mut bwd = cyclic.clone();
        let mut queue: Vec<usize> = (0..n).filter(|&i| cyclic[i]).collect();
        while let Some(v) = queue.pop() {
            for &w in &rev[v] {
                let w = w as usize;
                if !bwd[w] {
                    bwd[w] = true;
                    queue.push(w);
                }
            }
        }
        (0..n).map(|i| fwd[i] && bwd[i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn contraction_1d() -> (CubicalGrid, OuterMap) {
        let grid = CubicalGrid::new(vec![-1.0], 0.1, vec![20], vec![]).unwrap();
        let flow = FnFlow {
            dims: 1,
            f: |x: &[f64]| vec![-x[0]],
        };
        let active = vec![true; grid.cell_count()];
        let om = build_outer_map(&flow, &grid, active, &OuterMapConfig::default());
        (grid, om)
    }

    #[test]
    fn attracting_origin_invariant_part_is_central() {
        let (grid, om) = contraction_1d();
        let inv = om.invariant_part();
        let members: Vec<usize> = (0..grid.cell_count()).filter(|&i| inv[i]).collect();
        assert!(!members.is_empty());
        // all invariant cells near the middle of the interval
        for &m in &members {
            let c = grid.center(&grid.multi_of(m));
            assert!(c[0].abs() < 0.4, "cell at {c:?}");
        }
    }

    #[test]
    fn expansion_leaves_grid() {
        let grid = CubicalGrid::new(vec![-1.0], 0.1, vec![20], vec![]).unwrap();
        let flow = FnFlow {
            dims: 1,
            f: |x: &[f64]| vec![x[0]],
        };
        let active = vec![true; grid.cell_count()];
        let om = build_outer_map(&flow, &grid, active, &OuterMapConfig::default());
        // boundary cells flow outward
        assert!(om.leaves[0]);
        assert!(om.leaves[grid.cell_count() - 1]);
        let inv = om.invariant_part();
        assert!((0..grid.cell_count()).any(|i| inv[i]), "repelling origin is invariant");
    }
}
