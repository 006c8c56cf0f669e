//! Uniform cubical grids: cells, faces and the cubical boundary operator.

use std::collections::HashMap;

/// A box [lo_a, lo_a + h·counts_a] per axis, subdivided into cubes of side h.
/// Axes listed in `radius_axes` have their lower end on the fixed stratum
/// (a quotient radius coordinate): invariant sets may touch that wall, and
/// faces lying entirely on it are "fixed" for the circle action.
#[derive(Clone, Debug)]
pub struct CubicalGrid {
    pub lo: Vec<f64>,
    pub h: f64,
    pub counts: Vec<usize>,
    pub radius_axes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GridError {
    TooManyCells { cells: usize },
    EmptyAxis,
    RadiusAxisNotAtZero { axis: usize },
}

impl std::fmt::Display for GridError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GridError::TooManyCells { cells } => write!(f, "grid too large: {cells} cells"),
            GridError::EmptyAxis => write!(f, "every axis needs at least one cell"),
            GridError::RadiusAxisNotAtZero { axis } => {
                write!(f, "radius axis {axis} must start at 0")
            }
        }
    }
}

impl std::error::Error for GridError {}

pub const MAX_GRID_CELLS: usize = 6_000_000;

impl CubicalGrid {
    pub fn new(
        lo: Vec<f64>,
        h: f64,
        counts: Vec<usize>,
        radius_axes: Vec<usize>,
    ) -> Result<Self, GridError> {
        assert!(h > 0.0);
        assert_eq!(lo.len(), counts.len());
        if counts.iter().any(|&c| c == 0) {
            return Err(GridError::EmptyAxis);
        }
        let cells: usize = counts.iter().product();
        if cells > MAX_GRID_CELLS {
            return Err(GridError::TooManyCells { cells });
        }
        for &a in &radius_axes {
            if lo[a].abs() > 1e-12 {
                return Err(GridError::RadiusAxisNotAtZero { axis: a });
            }
        }
        Ok(CubicalGrid {
            lo,
            h,
            counts,
            radius_axes,
        })
    }

    /// Cover [lo, hi] per axis with cells of side h (box ends snapped outward).
    pub fn covering(
        ranges: &[(f64, f64)],
        h: f64,
        radius_axes: Vec<usize>,
    ) -> Result<Self, GridError> {
        let mut lo = Vec::new();
        let mut counts = Vec::new();
        for (a, &(a_lo, a_hi)) in ranges.iter().enumerate() {
            if radius_axes.contains(&a) {
                lo.push(0.0);
                counts.push(((a_hi / h).ceil() as usize).max(1));
            } else {
                let snapped = (a_lo / h).floor() * h;
                lo.push(snapped);
                counts.push((((a_hi - snapped) / h).ceil() as usize).max(1));
            }
        }
        CubicalGrid::new(lo, h, counts, radius_axes)
    }

    pub fn dims(&self) -> usize {
        self.counts.len()
    }

    pub fn cell_count(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn index_of(&self, multi: &[usize]) -> usize {
        let mut idx = 0;
        for (a, &m) in multi.iter().enumerate() {
            debug_assert!(m < self.counts[a]);
            idx = idx * self.counts[a] + m;
        }
        idx
    }

    pub fn multi_of(&self, mut idx: usize) -> Vec<usize> {
        let mut multi = vec![0; self.dims()];
        for a in (0..self.dims()).rev() {
            multi[a] = idx % self.counts[a];
            idx /= self.counts[a];
        }
        multi
    }

    pub fn center(&self, multi: &[usize]) -> Vec<f64> {
        multi
            .iter()
            .enumerate()
            .map(|(a, &m)| self.lo[a] + self.h * (m as f64 + 0.5))
            .collect()
    }

    pub fn corners(&self, multi: &[usize]) -> Vec<Vec<f64>> {
        let d = self.dims();
        let mut out = Vec::with_capacity(1 << d);
        for mask in 0..(1usize << d) {
            out.push(
                (0..d)
                    .map(|a| {
                        let off = if mask & (1 << a) != 0 { 1.0 } else { 0.0 };
                        self.lo[a] + self.h * (multi[a] as f64 + off)
                    })
                    .collect(),
            );
        }
        out
    }

    /// Cell index ranges intersecting the closed box [b_lo, b_hi]; also
    /// reports whether the box pokes outside the grid.
    pub fn cells_touching(&self, b_lo: &[f64], b_hi: &[f64]) -> (Vec<(usize, usize)>, bool) {
        let mut ranges = Vec::with_capacity(self.dims());
        let mut outside = false;
        for a in 0..self.dims() {
            let max = self.lo[a] + self.h * self.counts[a] as f64;
            if b_lo[a] < self.lo[a] - 1e-12 || b_hi[a] > max + 1e-12 {
                outside = true;
            }
            let i_lo = (((b_lo[a] - self.lo[a]) / self.h).floor() as i64).max(0);
            let i_hi = (((b_hi[a] - self.lo[a]) / self.h).ceil() as i64 - 1)
                .min(self.counts[a] as i64 - 1);
            if i_hi < i_lo {
                return (Vec::new(), true);
            }
            ranges.push((i_lo as usize, i_hi as usize));
        }
        (ranges, outside)
    }

    /// Sup-norm neighbor cells (the combinatorial-interior test set).
    pub fn neighbors(&self, multi: &[usize]) -> Vec<Vec<usize>> {
        let d = self.dims();
        let mut out = Vec::new();
        let mut offs = vec![-1i64; d];
        loop {
            if offs.iter().any(|&o| o != 0) {
                let mut m = Vec::with_capacity(d);
                let mut ok = true;
                for a in 0..d {
                    let v = multi[a] as i64 + offs[a];
                    if v < 0 || v >= self.counts[a] as i64 {
                        ok = false;
                        break;
                    }
                    m.push(v as usize);
                }
                if ok {
                    out.push(m);
                }
            }
            let mut a = 0;
            loop {
                if a == d {
                    return out;
                }
                offs[a] += 1;
                if offs[a] <= 1 {
                    break;
                }
                offs[a] = -1;
                a += 1;
            }
        }
    }

    /// True when the cell sits against a hard grid wall (any axis end except
    /// the fixed-stratum wall of a radius axis).
    pub fn on_hard_boundary(&self, multi: &[usize]) -> bool {
        for a in 0..self.dims() {
            if multi[a] + 1 == self.counts[a] {
                return true;
            }
            if multi[a] == 0 && !self.radius_axes.contains(&a) {
                return true;
            }
        }
        false
    }
}

/// A face of the grid: per axis an interval [i, i+extent] in lattice units.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaceKey(pub Vec<(u32, u8)>);

impl FaceKey {
    pub fn dim(&self) -> usize {
        self.0.iter().filter(|(_, e)| *e == 1).count()
    }

    /// Lies entirely on the fixed stratum: degenerate at 0 along every radius
    /// axis.
    pub fn is_fixed(&self, grid: &CubicalGrid) -> bool {
        grid.radius_axes
            .iter()
            .all(|&a| self.0[a] == (0, 0))
    }

    /// Signed boundary faces.
    pub fn boundary(&self) -> Vec<(FaceKey, i64)> {
        let mut out = Vec::new();
        let mut sign = 1i64;
        for (a, &(i, e)) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let mut right = self.clone();
            right.0[a] = (i + 1, 0);
            let mut left = self.clone();
            left.0[a] = (i, 0);
            out.push((right, sign));
            out.push((left, -sign));
            sign = -sign;
        }
        out
    }
}

/// All 3^d faces of the closed cube at `multi`.
pub fn faces_of_cube(multi: &[usize]) -> Vec<FaceKey> {
    let d = multi.len();
    let mut out = Vec::with_capacity(3usize.pow(d as u32));
    let mut choice = vec![0u8; d]; // 0: left endpoint, 1: extent, 2: right endpoint
    loop {
        let key = FaceKey(
            (0..d)
                .map(|a| match choice[a] {
                    0 => (multi[a] as u32, 0),
                    1 => (multi[a] as u32, 1),
                    _ => (multi[a] as u32 + 1, 0),
                })
                .collect(),
        );
        out.push(key);
        let mut a = 0;
        loop {
            if a == d {
                return out;
            }
            choice[a] += 1;
            if choice[a] <= 2 {
                break;
            }
            choice[a] = 0;
            a += 1;
        }
    }
}

/// Interned face universe shared by every complex on one grid.
#[derive(Default)]
pub struct FaceTable {
    pub keys: Vec<FaceKey>,
    pub index: HashMap<FaceKey, usize>,
}

impl FaceTable {
    pub fn intern(&mut self, key: FaceKey) -> usize {
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.keys.len();
        self.index.insert(key.clone(), i);
        self.keys.push(key);
        i
    }

    pub fn get(&self, key: &FaceKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn cube_faces_and_boundary_squared() {
        let faces = faces_of_cube(&[0, 0]);
        assert_eq!(faces.len(), 9);
        let top = FaceKey(vec![(0, 1), (0, 1)]);
        let mut acc: HashMap<FaceKey, i64> = HashMap::new();
        for (f, s) in top.boundary() {
            for (g, t) in f.boundary() {
                *acc.entry(g).or_insert(0) += s * t;
            }
        }
        assert!(acc.values().all(|&v| v == 0), "boundary squared nonzero");
    }

    #[test]
    fn grid_indexing_roundtrip() {
        let g = CubicalGrid::new(vec![0.0, -1.0], 0.5, vec![4, 6], vec![0]).unwrap();
        for idx in 0..g.cell_count() {
            assert_eq!(g.index_of(&g.multi_of(idx)), idx);
        }
        assert_eq!(g.neighbors(&[0, 0]).len(), 3);
        assert_eq!(g.neighbors(&[1, 1]).len(), 8);
    }

    #[test]
    fn hard_boundary_respects_radius_axes() {
        let g = CubicalGrid::new(vec![0.0, -1.0], 0.5, vec![4, 4], vec![0]).unwrap();
        // r = 0 wall is soft; p lower end is hard
        assert!(!g.on_hard_boundary(&[0, 1]));
        assert!(g.on_hard_boundary(&[1, 0]));
        assert!(g.on_hard_boundary(&[3, 1]));
        assert!(!g.on_hard_boundary(&[1, 1]));
    }

    #[test]
    fn fixed_faces_on_radius_wall() {
        let g = CubicalGrid::new(vec![0.0, -1.0], 0.5, vec![4, 4], vec![0]).unwrap();
        let wall = FaceKey(vec![(0, 0), (2, 1)]);
        assert!(wall.is_fixed(&g));
        let off_wall = FaceKey(vec![(1, 0), (2, 1)]);
        assert!(!off_wall.is_fixed(&g));
        let radial = FaceKey(vec![(0, 1), (2, 0)]);
        assert!(!radial.is_fixed(&g));
    }
}
