//! Relative cubical homology of index pairs, the circle-equivariant cell
//! model built from the fixed/free strata of a quotient grid, and homology of
//! the four theories together with maps induced by inclusions and quotients
//! of pairs on a shared grid.

use super::grid::{faces_of_cube, CubicalGrid, FaceKey, FaceTable};
use super::pair::{ConleyError, IndexPair};
use crate::algebra::module::{Component, GradedZUModule, ModuleMap};
use crate::algebra::sparse::{ReducedHomology, SparseChain, SparseComplex};
use crate::equivariant::Theory;
use crate::flow::DesuspensionLedger;
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use std::collections::{BTreeMap, HashMap, HashSet};

/// The set of faces of a cell set, as global ids in a shared table.
pub fn face_set(grid: &CubicalGrid, cells: &[usize], table: &mut FaceTable) -> HashSet<usize> {
    let mut out = HashSet::new();
    for &idx in cells {
        let multi = grid.multi_of(idx);
        for key in faces_of_cube(&multi) {
            out.insert(table.intern(key));
        }
    }
    out
}

/// Torus-fiber cell types over a face: a face with k positive slot radii has
/// a T^k preimage. After splitting off the diagonal circle, the cells are
/// slice/sweep pairs of the residual torus. One positive radius gives
/// {1, σ}; two give {1, φ, σ, φσ} where φ is the residual phase circle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TorusType {
    One,
    Phi,
    Sigma,
    PhiSigma,
}

impl TorusType {
    pub fn degree_offset(self) -> i64 {
        match self {
            TorusType::One => 0,
            TorusType::Phi | TorusType::Sigma => 1,
            TorusType::PhiSigma => 2,
        }
    }
}

/// The equivariant cell model of a relative cubical pair. Fixed faces appear
/// once; a face with one positive radius contributes a slice and a diagonal
/// sweep; a face with two positive radii carries the four torus types, with
/// the residual phase circle collapsing (or surjecting onto the sweep) when a
/// radius dies at the fixed wall.
pub struct CellModel {
    /// (global face id, torus type)
    pub cells: Vec<(usize, TorusType)>,
    pub degrees: Vec<i64>,
    pub fixed: Vec<bool>,
    pub d: Vec<Vec<(usize, i64)>>,
    pub iota: Vec<Vec<(usize, i64)>>,
    pub index_of: HashMap<(usize, TorusType), usize>,
}

/// Relative pair (N, L) over the face table: the chain universe is
/// faces(N) ∖ faces(L).
pub struct RelativePair {
    pub universe: Vec<usize>,
    pub member: HashSet<usize>,
}

pub fn relative_pair(
    grid: &CubicalGrid,
    n_cells: &[usize],
    l_cells: &[usize],
    table: &mut FaceTable,
) -> RelativePair {
    let n_faces = face_set(grid, n_cells, table);
    let l_faces = face_set(grid, l_cells, table);
    let mut universe: Vec<usize> = n_faces.difference(&l_faces).copied().collect();
    universe.sort_unstable();
    let member = universe.iter().copied().collect();
    RelativePair { universe, member }
}

/// Positive radius axes of a face, in the grid's radius-axis order; the first
/// entry is the trivialization base.
fn positive_axes(key: &FaceKey, grid: &CubicalGrid) -> Vec<usize> {
    grid.radius_axes
        .iter()
        .copied()
        .filter(|&a| key.0[a] != (0, 0))
        .collect()
}

/// Collapse map of torus cells along a face inclusion g ⊂ f; None kills the
/// cell. `died` is the radius axis (if any) that hit the fixed wall.
fn collapse_type(u: TorusType, p_f: &[usize], p_g: &[usize]) -> Option<TorusType> {
    if p_f.len() == p_g.len() {
        return Some(u);
    }
    debug_assert_eq!(p_f.len(), p_g.len() + 1);
    match p_f.len() {
        1 => match u {
            TorusType::One => Some(TorusType::One),
            _ => None,
        },
        2 => {
            let died_base = p_g.first() != p_f.first();
            match (u, died_base) {
                (TorusType::One, _) => Some(TorusType::One),
                (TorusType::Sigma, _) => Some(TorusType::Sigma),
                // the residual phase circle surjects onto the surviving sweep
                // when the base phase dies, and collapses otherwise
                (TorusType::Phi, true) => Some(TorusType::Sigma),
                (TorusType::Phi, false) => None,
                (TorusType::PhiSigma, _) => None,
            }
        }
        _ => unreachable!("more than two positive radii rejected at construction"),
    }
}

pub fn build_cell_model(
    grid: &CubicalGrid,
    pair: &RelativePair,
    table: &FaceTable,
) -> Result<CellModel, ConleyError> {
    let mut cells = Vec::new();
    let mut degrees = Vec::new();
    let mut fixed_flags = Vec::new();
    let mut index_of = HashMap::new();
    for &f in &pair.universe {
        let key = &table.keys[f];
        let p = positive_axes(key, grid);
        if p.len() > 2 {
            return Err(ConleyError::MultiSlotCell);
        }
        let types: &[TorusType] = match p.len() {
            0 => &[TorusType::One],
            1 => &[TorusType::One, TorusType::Sigma],
            _ => &[
                TorusType::One,
                TorusType::Phi,
                TorusType::Sigma,
                TorusType::PhiSigma,
            ],
        };
        for &u in types {
            index_of.insert((f, u), cells.len());
            cells.push((f, u));
            degrees.push(key.dim() as i64 + u.degree_offset());
            fixed_flags.push(p.is_empty());
        }
    }
    let mut d = vec![Vec::new(); cells.len()];
    let mut iota = vec![Vec::new(); cells.len()];
    for (ci, &(f, u)) in cells.iter().enumerate() {
        let key = &table.keys[f];
        let p_f = positive_axes(key, grid);
        let sign = if u.degree_offset() % 2 == 0 { 1 } else { -1 };
        for (bkey, coeff) in key.boundary() {
            let Some(bid) = table.get(&bkey) else { continue };
            if !pair.member.contains(&bid) {
                continue;
            }
            let p_g = positive_axes(&bkey, grid);
            if let Some(v) = collapse_type(u, &p_f, &p_g) {
                d[ci].push((index_of[&(bid, v)], sign * coeff));
            }
        }
        match u {
            TorusType::One if !p_f.is_empty() => {
                iota[ci].push((index_of[&(f, TorusType::Sigma)], 1));
            }
            TorusType::Phi => {
                iota[ci].push((index_of[&(f, TorusType::PhiSigma)], -1));
            }
            _ => {}
        }
    }
    Ok(CellModel {
        cells,
        degrees,
        fixed: fixed_flags,
        d,
        iota,
        index_of,
    })
}

/// Structural sanity of a cell model: d² = 0, ι² = 0, dι + ιd = 0.
pub fn validate_cell_model(model: &CellModel) -> bool {
    let n = model.cells.len();
    let compose = |first: &Vec<Vec<(usize, i64)>>, second: &Vec<Vec<(usize, i64)>>, g: usize| {
        let mut acc: HashMap<usize, i64> = HashMap::new();
        for &(h, c) in &first[g] {
            for &(k, c2) in &second[h] {
                *acc.entry(k).or_insert(0) += c * c2;
            }
        }
        acc.retain(|_, v| *v != 0);
        acc
    };
    for g in 0..n {
        if !compose(&model.d, &model.d, g).is_empty() {
            return false;
        }
        if !compose(&model.iota, &model.iota, g).is_empty() {
            return false;
        }
        let mut anti = compose(&model.d, &model.iota, g);
        for (k, c) in compose(&model.iota, &model.d, g) {
            *anti.entry(k).or_insert(0) += c;
        }
        anti.retain(|_, v| *v != 0);
        if !anti.is_empty() {
            return false;
        }
    }
    true
}

/// Cells of the theory total complex: (model cell, power of U).
pub struct TheoryComplex {
    pub model_len: usize,
    pub cells: Vec<(usize, i64)>,
    pub index_of: HashMap<(usize, i64), usize>,
    pub sparse: SparseComplex,
    pub window: (i64, i64),
}

pub fn build_theory_complex(model: &CellModel, theory: Theory, window: (i64, i64)) -> TheoryComplex {
    let (lo, hi) = (window.0 - 1, window.1 + 1);
    let mut cells = Vec::new();
    let mut index_of = HashMap::new();
    for (ci, &deg) in model.degrees.iter().enumerate() {
        let j_min = (deg - hi).div_euclid(2);
        let j_max = (deg - lo).div_euclid(2);
        for j in j_min..=j_max {
            let total = deg - 2 * j;
            if total < lo || total > hi {
                continue;
            }
            let allowed = match theory {
                Theory::Ordinary => j == 0,
                Theory::Borel => j <= 0,
                Theory::CoBorel => j >= 0,
                Theory::Tate => true,
            };
            if !allowed {
                continue;
            }
            index_of.insert((ci, j), cells.len());
            cells.push((ci, j));
        }
    }
    let mut degrees = Vec::with_capacity(cells.len());
    let mut boundary = Vec::with_capacity(cells.len());
    for &(ci, j) in &cells {
        degrees.push(model.degrees[ci] - 2 * j);
        let mut bd: SparseChain = HashMap::new();
        for &(t, c) in &model.d[ci] {
            if let Some(&pos) = index_of.get(&(t, j)) {
                *bd.entry(pos).or_insert(0) += c;
            }
        }
        if theory != Theory::Ordinary {
            for &(t, c) in &model.iota[ci] {
                if let Some(&pos) = index_of.get(&(t, j + 1)) {
                    *bd.entry(pos).or_insert(0) += c;
                }
            }
        }
        bd.retain(|_, v| *v != 0);
        boundary.push(bd);
    }
    TheoryComplex {
        model_len: model.cells.len(),
        cells,
        index_of,
        sparse: SparseComplex::new(degrees, boundary),
        window,
    }
}

/// Homology of a theory complex as a graded module with U maps, plus the
/// reduction machinery for later induced maps.
pub struct TheoryHomology {
    pub complex: TheoryComplex,
    pub reduced: ReducedHomology,
    pub module: GradedZUModule,
}

pub fn theory_homology(model: &CellModel, theory: Theory, window: (i64, i64)) -> TheoryHomology {
    let complex = build_theory_complex(model, theory, window);
    let reduced = ReducedHomology::compute(&complex.sparse);
    let mut components = BTreeMap::new();
    for (&d, h) in &reduced.homology {
        if d < window.0 || d > window.1 {
            continue;
        }
        components.insert(
            d,
            Component {
                torsion: h.torsion(),
                free_rank: h.free_rank(),
            },
        );
    }
    let mut module = GradedZUModule::from_components(window, components);
    // U action: (cell, j) -> (cell, j+1)
    for d in (window.0 + 2)..=window.1 {
        let (Some(src), Some(tgt)) = (reduced.homology.get(&d), reduced.homology.get(&(d - 2)))
        else {
            continue;
        };
        let mut cols = Vec::new();
        let mut ok = true;
        for g in 0..src.generator_count() {
            let cycle = reduced.generator_cycle(d, g);
            let mut image: SparseChain = HashMap::new();
            for (&cell, &coeff) in &cycle {
                let (ci, j) = complex.cells[cell];
                if let Some(&pos) = complex.index_of.get(&(ci, j + 1)) {
                    *image.entry(pos).or_insert(0) += coeff;
                }
            }
            image.retain(|_, v| *v != 0);
            match reduced.class_of_cycle(&image, d - 2) {
                Ok(coords) => cols.push(coords),
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            let m = crate::algebra::matrix::IntMatrix::from_columns(tgt.generator_count(), &cols);
            module.set_u_map(d, m);
        }
    }
    if theory == Theory::Tate && !module.is_zero() {
        module.stably_periodic = Some(2);
    }
    TheoryHomology {
        complex,
        reduced,
        module,
    }
}

/// Map theory homology along a face-level correspondence: each model cell of
/// the source is sent to the target cell with the same face id and sigma flag
/// when present (inclusions of universes and quotient projections are both of
/// this shape).
pub fn induced_theory_map(
    source: &TheoryHomology,
    source_model: &CellModel,
    target: &TheoryHomology,
    target_model: &CellModel,
) -> ModuleMap {
    let mut map = ModuleMap::zero(0);
    let (lo, hi) = source.module.window();
    for d in lo..=hi {
        let (Some(sh), Some(th)) = (
            source.reduced.homology.get(&d),
            target.reduced.homology.get(&d),
        ) else {
            continue;
        };
        let mut cols = Vec::new();
        let mut ok = true;
        for g in 0..sh.generator_count() {
            let cycle = source.reduced.generator_cycle(d, g);
            let mut image: SparseChain = HashMap::new();
            for (&cell, &coeff) in &cycle {
                let (ci, j) = source.complex.cells[cell];
                let key = source_model.cells[ci];
                let Some(&tci) = target_model.index_of.get(&key) else {
                    continue;
                };
                if let Some(&pos) = target.complex.index_of.get(&(tci, j)) {
                    *image.entry(pos).or_insert(0) += coeff;
                }
            }
            image.retain(|_, v| *v != 0);
            match target.reduced.class_of_cycle(&image, d) {
                Ok(coords) => cols.push(coords),
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            map.insert_block(
                d,
                crate::algebra::matrix::IntMatrix::from_columns(th.generator_count(), &cols),
            );
        }
    }
    map
}

/// Connecting homomorphism of the triple N2 ⊆ N1 ⊆ N0 in a given theory:
/// H_d(N0, N1) -> H_{d-1}(N1, N2), by lifting a relative cycle to the big
/// universe, applying the boundary there, and reading the class downstairs.
pub fn connecting_map(
    top: &TheoryHomology,
    top_model: &CellModel,
    big_model: &CellModel,
    bottom: &TheoryHomology,
    bottom_model: &CellModel,
) -> ModuleMap {
    let mut map = ModuleMap::zero(-1);
    let (lo, hi) = top.module.window();
    for d in lo..=hi {
        let (Some(sh), Some(th)) = (
            top.reduced.homology.get(&d),
            bottom.reduced.homology.get(&(d - 1)),
        ) else {
            continue;
        };
        let mut cols = Vec::new();
        let mut ok = true;
        for g in 0..sh.generator_count() {
            let cycle = top.reduced.generator_cycle(d, g);
            // lift to the big universe (same faces), apply the big boundary,
            // project to the bottom pair
            let mut image: SparseChain = HashMap::new();
            for (&cell, &coeff) in &cycle {
                let (ci, j) = top.complex.cells[cell];
                let key = top_model.cells[ci];
                let Some(&bci) = big_model.index_of.get(&key) else {
                    continue;
                };
                for &(t, c) in &big_model.d[bci] {
                    let tkey = big_model.cells[t];
                    let Some(&dci) = bottom_model.index_of.get(&tkey) else {
                        continue;
                    };
                    if let Some(&pos) = bottom.complex.index_of.get(&(dci, j)) {
                        *image.entry(pos).or_insert(0) += coeff * c;
                    }
                }
                // ι part of D = d + U·ι lands one U power up; ordinary-theory
                // complexes have no such cells, so the lookup filters it
                for &(t, c) in &big_model.iota[bci] {
                    let tkey = big_model.cells[t];
                    let Some(&dci) = bottom_model.index_of.get(&tkey) else {
                        continue;
                    };
                    if let Some(&pos) = bottom.complex.index_of.get(&(dci, j + 1)) {
                        *image.entry(pos).or_insert(0) += coeff * c;
                    }
                }
            }
            image.retain(|_, v| *v != 0);
            match bottom.reduced.class_of_cycle(&image, d - 1) {
                Ok(coords) => cols.push(coords),
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            map.insert_block(
                d,
                crate::algebra::matrix::IntMatrix::from_columns(th.generator_count(), &cols),
            );
        }
    }
    map
}

/// Ordinary Conley index homology of a certified pair, desuspended by the
/// ledger.
pub struct ConleyIndex {
    pub homology: GradedZUModule,
    pub ledger: DesuspensionLedger,
    pub raw_table: BTreeMap<i64, (usize, Vec<BigInt>)>,
}

pub fn conley_homology(pair: &IndexPair, ledger: DesuspensionLedger) -> Result<ConleyIndex, ConleyError> {
    let grid = pair.grid().clone();
    let mut table = FaceTable::default();
    let rel = relative_pair(&grid, &pair.n_cell_indices(), &pair.l_cell_indices(), &mut table);
    let model = build_cell_model(&grid, &rel, &table)?;
    let dim_hi = grid.dims() as i64 + 2;
    let th = theory_homology(&model, Theory::Ordinary, (0, dim_hi));
    let raw_table = th
        .module
        .table()
        .into_iter()
        .collect::<BTreeMap<_, _>>();
    let homology = th.module.shifted(-ledger.degree_shift());
    Ok(ConleyIndex {
        homology,
        ledger,
        raw_table,
    })
}

/// Drop coefficients and convert a homology table into a cohomology table via
/// universal coefficients: H^m = free(H_m) + torsion(H_{m-1}).
pub fn cohomology_table(
    homology: &BTreeMap<i64, (usize, Vec<BigInt>)>,
) -> BTreeMap<i64, (usize, Vec<BigInt>)> {
    let mut out: BTreeMap<i64, (usize, Vec<BigInt>)> = BTreeMap::new();
    for (&d, (free, torsion)) in homology {
        if *free > 0 {
            out.entry(d).or_insert((0, Vec::new())).0 += *free;
        }
        if !torsion.is_empty() {
            let e = out.entry(d + 1).or_insert((0, Vec::new()));
            e.1.extend(torsion.iter().cloned());
            e.1.sort();
        }
    }
    out.retain(|_, (f, t)| *f > 0 || !t.is_empty());
    out
}

pub fn table_is_zero(t: &BTreeMap<i64, (usize, Vec<BigInt>)>) -> bool {
    t.values().all(|(f, tors)| *f == 0 && tors.is_empty())
}

pub fn format_table(t: &BTreeMap<i64, (usize, Vec<BigInt>)>) -> String {
    if table_is_zero(t) {
        return "0".to_string();
    }
    let mut parts = Vec::new();
    for (d, (f, tors)) in t.iter().rev() {
        let mut terms = Vec::new();
        if *f == 1 {
            terms.push("Z".to_string());
        } else if *f > 1 {
            terms.push(format!("Z^{f}"));
        }
        for x in tors {
            terms.push(format!("Z/{x}"));
        }
        if !terms.is_empty() {
            parts.push(format!("{d}: {}", terms.join("+")));
        }
    }
    parts.join(", ")
}

pub fn big_table_free_rank(t: &BTreeMap<i64, (usize, Vec<BigInt>)>, d: i64) -> usize {
    t.get(&d).map_or(0, |(f, _)| *f)
}

/// Tables equal after shifting the second by `shift` (degree d of `a` against
/// degree d + shift of `b`) over the given degree range.
pub fn tables_equal_shifted(
    a: &BTreeMap<i64, (usize, Vec<BigInt>)>,
    b: &BTreeMap<i64, (usize, Vec<BigInt>)>,
    shift: i64,
    range: (i64, i64),
) -> bool {
    for d in range.0..=range.1 {
        let ea = a.get(&d).cloned().unwrap_or((0, Vec::new()));
        let eb = b.get(&(d + shift)).cloned().unwrap_or((0, Vec::new()));
        if ea != eb {
            return false;
        }
    }
    true
}

pub fn module_of_table(
    table: &BTreeMap<i64, (usize, Vec<BigInt>)>,
    window: (i64, i64),
) -> GradedZUModule {
    let mut components = BTreeMap::new();
    for (&d, (f, tors)) in table {
        components.insert(
            d,
            Component {
                torsion: tors.clone(),
                free_rank: *f,
            },
        );
    }
    GradedZUModule::from_components(window, components)
}

/// Total free rank over all degrees (used by the duality pairing check).
pub fn total_rank(t: &BTreeMap<i64, (usize, Vec<BigInt>)>) -> usize {
    t.values().map(|(f, _)| f).sum()
}

pub fn zero_big() -> BigInt {
    BigInt::zero()
}

pub fn big_to_string(v: &BigInt) -> String {
    v.to_i64().map(|x| x.to_string()).unwrap_or_else(|| v.to_string())
}


#[cfg(test)]
mod torus_tests {
    use super::*;
    use crate::conley::outer::{FnFlow, OuterMapConfig};
    use crate::conley::pair::build_index_pair;

    fn model_of_pair(
        pair: &crate::conley::pair::IndexPair,
    ) -> (CellModel, FaceTable) {
        let mut table = FaceTable::default();
        let rel = relative_pair(
            pair.grid(),
            &pair.n_cell_indices(),
            &pair.l_cell_indices(),
            &mut table,
        );
        let model = build_cell_model(pair.grid(), &rel, &table).unwrap();
        (model, table)
    }

    #[test]
    fn two_unstable_slots_give_twice_suspended_index() {
        // ṙ_a = r_a, ṙ_b = r_b on the quotient orthant: the index of the
        // origin is the smash of two weight-1 rep spheres: Z in degree 4
        let grid = CubicalGrid::new(vec![0.0, 0.0], 0.1, vec![10, 10], vec![0, 1]).unwrap();
        let flow = FnFlow {
            dims: 2,
            f: |x: &[f64]| vec![x[0], x[1]],
        };
        let pair = build_index_pair(
            &flow,
            &grid,
            vec![true; grid.cell_count()],
            &OuterMapConfig::default(),
        )
        .unwrap();
        assert!(pair.certificate.all_ok());
        let (model, _) = model_of_pair(&pair);
        assert!(validate_cell_model(&model), "cell model identities fail");
        let th = theory_homology(&model, Theory::Ordinary, (0, 8));
        for d in 0..=8i64 {
            let expect = if d == 4 { 1 } else { 0 };
            assert_eq!(th.module.component(d).free_rank, expect, "degree {d}: {}", th.module);
            assert!(th.module.component(d).torsion.is_empty());
        }
        // Borel: the twice-twisted tower, Z in degrees 4, 6, 8, ...
        let b = theory_homology(&model, Theory::Borel, (0, 10));
        for d in 0..=10i64 {
            let expect = usize::from(d >= 4 && d % 2 == 0);
            assert_eq!(b.module.component(d).free_rank, expect, "borel degree {d}");
        }
        // Tate: the fixed stratum is the corner vertex: Laurent pattern
        let t = theory_homology(&model, Theory::Tate, (-4, 4));
        for d in (-4..=4i64).filter(|d| d % 2 == 0) {
            assert_eq!(t.module.component(d).free_rank, 1, "tate degree {d}");
        }
    }

    #[test]
    fn mixed_stability_two_slots() {
        // ṙ_a = r_a (unstable), ṙ_b = -r_b (stable): index = one rep sphere
        let grid = CubicalGrid::new(vec![0.0, 0.0], 0.1, vec![10, 10], vec![0, 1]).unwrap();
        let flow = FnFlow {
            dims: 2,
            f: |x: &[f64]| vec![x[0], -x[1]],
        };
        let pair = build_index_pair(
            &flow,
            &grid,
            vec![true; grid.cell_count()],
            &OuterMapConfig::default(),
        )
        .unwrap();
        let (model, _) = model_of_pair(&pair);
        assert!(validate_cell_model(&model));
        let th = theory_homology(&model, Theory::Ordinary, (0, 8));
        for d in 0..=8i64 {
            let expect = usize::from(d == 2);
            assert_eq!(th.module.component(d).free_rank, expect, "degree {d}: {}", th.module);
        }
    }
}
