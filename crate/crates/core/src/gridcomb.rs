//! Grids, hyperplane unions, margin-matched array families, and the
//! exhaustive subset-sum collision oracle with a randomized family search.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exactnum::Scalar;

/// Bitmask over cells in row-major order (last coordinate fastest).
pub type CellSet = u64;

pub const MAX_CELLS: usize = 63;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridShape {
    dims: Vec<usize>,
}

impl GridShape {
    /// Dimensions must be ascending and at least 2.
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::invalid("grid needs at least one dimension"));
        }
        if dims.iter().any(|&n| n < 2) {
            return Err(Error::invalid("lengths must exceed 1"));
        }
        if dims.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("grid dimensions must be ascending"));
        }
        let n = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        match n {
            Some(n) if n <= MAX_CELLS => Ok(GridShape { dims }),
            _ => Err(Error::capacity(format!("grid {dims:?} has more than {MAX_CELLS} cells"))),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn k(&self) -> usize {
        self.dims.len()
    }

    pub fn cell_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn full(&self) -> CellSet {
        low_mask(self.cell_count())
    }

    /// 0-based coordinates of a cell index.
    pub fn coords(&self, mut idx: usize) -> Vec<usize> {
        let mut c = vec![0; self.k()];
        for (slot, &d) in c.iter_mut().zip(&self.dims).rev() {
            *slot = idx % d;
            idx /= d;
        }
        c
    }

    pub fn index(&self, coords: &[usize]) -> Option<usize> {
        if coords.len() != self.k() {
            return None;
        }
        let mut idx = 0;
        for (&c, &d) in coords.iter().zip(&self.dims) {
            if c >= d {
                return None;
            }
            idx = idx * d + c;
        }
        Some(idx)
    }

    pub fn cells_of(&self, set: CellSet) -> Vec<Vec<usize>> {
        bits(set).map(|i| self.coords(i)).collect()
    }

    pub fn set_of(&self, cells: &[Vec<usize>]) -> Result<CellSet> {
        cells.iter().try_fold(0, |acc, c| {
            self.index(c)
                .map(|i| acc | (1 << i))
                .ok_or_else(|| Error::invalid(format!("cell {c:?} outside grid {:?}", self.dims)))
        })
    }

    /// The 2^N table marking hyperplane unions (∅ included).
    pub fn hyperplane_union_table(&self) -> Vec<bool> {
        let mut table = vec![false; 1usize << self.cell_count()];
        for axis in 0..self.k() {
            for levels in 0..(1u64 << self.dims[axis]) {
                let levels: Vec<usize> = bits(levels).collect();
                table[hyperplane(self, axis, &levels).unwrap() as usize] = true;
            }
        }
        table
    }
}

fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Indices of set bits, ascending.
pub fn bits(mut set: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if set == 0 {
            None
        } else {
            let i = set.trailing_zeros() as usize;
            set &= set - 1;
            Some(i)
        }
    })
}

/// H_axis(levels): every cell whose coordinate on `axis` lies in `levels`
/// (0-based axis and levels).
pub fn hyperplane(shape: &GridShape, axis: usize, levels: &[usize]) -> Result<CellSet> {
    if axis >= shape.k() {
        return Err(Error::invalid(format!("axis {axis} out of range")));
    }
    if let Some(l) = levels.iter().find(|&&l| l >= shape.dims[axis]) {
        return Err(Error::invalid(format!("level {l} out of range on axis {axis}")));
    }
    let mut set = 0;
    for i in 0..shape.cell_count() {
        if levels.contains(&shape.coords(i)[axis]) {
            set |= 1 << i;
        }
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HyperplaneUnion {
    Empty,
    Union { axis: usize, levels: Vec<usize> },
    NotAUnion,
}

/// Smallest axis wins when a set is a union along several axes.
pub fn as_hyperplane_union(shape: &GridShape, set: CellSet) -> HyperplaneUnion {
    if set == 0 {
        return HyperplaneUnion::Empty;
    }
    for axis in 0..shape.k() {
        let levels: BTreeSet<usize> = bits(set).map(|i| shape.coords(i)[axis]).collect();
        let levels: Vec<usize> = levels.into_iter().collect();
        if hyperplane(shape, axis, &levels).ok() == Some(set) {
            return HyperplaneUnion::Union { axis, levels };
        }
    }
    HyperplaneUnion::NotAUnion
}

pub fn in_z_i<T: Scalar>(shape: &GridShape, m: &[T], set: CellSet) -> bool {
    debug_assert_eq!(m.len(), shape.cell_count());
    bits(set).fold(T::zero(), |acc, i| acc + m[i].clone()).is_zero()
}

/// All hyperplane sums vanish.
pub fn in_z<T: Scalar>(shape: &GridShape, m: &[T]) -> bool {
    (0..shape.k()).all(|axis| {
        (0..shape.dims[axis]).all(|l| in_z_i(shape, m, hyperplane(shape, axis, &[l]).unwrap()))
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrayFamily {
    pub shape: GridShape,
    pub q: usize,
    /// Row-major arrays in class order.
    pub arrays: Vec<Vec<u64>>,
}

impl ArrayFamily {
    pub fn new(shape: GridShape, arrays: Vec<Vec<u64>>) -> Result<Self> {
        let q = arrays.len();
        if q < 2 {
            return Err(Error::invalid("a family needs at least two arrays"));
        }
        let n = shape.cell_count();
        if arrays.iter().any(|a| a.len() != n) {
            return Err(Error::invalid(format!("every array needs {n} entries")));
        }
        if arrays.iter().flatten().any(|&x| x == 0) {
            return Err(Error::invalid("array entries must be positive"));
        }
        Ok(ArrayFamily { shape, q, arrays })
    }

    /// Entry of class `s` (1-based) at a cell index.
    pub fn entry(&self, s: usize, cell: usize) -> u64 {
        self.arrays[s - 1][cell]
    }

    pub fn total(&self, s: usize) -> u64 {
        self.arrays[s - 1].iter().sum()
    }

    pub fn sum_over(&self, s: usize, set: CellSet) -> u64 {
        bits(set).map(|i| self.arrays[s - 1][i]).sum()
    }

    pub fn min_entry(&self) -> u64 {
        self.arrays.iter().flatten().copied().min().unwrap_or(0)
    }

    /// Sums over every single-level hyperplane, per axis.
    pub fn hyperplane_sums(&self, s: usize) -> Vec<Vec<u64>> {
        (0..self.shape.k())
            .map(|axis| {
                (0..self.shape.dims[axis])
                    .map(|l| self.sum_over(s, hyperplane(&self.shape, axis, &[l]).unwrap()))
                    .collect()
            })
            .collect()
    }
}

/// Hyperplane sums agree across all arrays.
pub fn in_zbar(family: &ArrayFamily) -> bool {
    let first = family.hyperplane_sums(1);
    (2..=family.q).all(|s| family.hyperplane_sums(s) == first)
}

/// The table of all 2^N subset sums, indexed by mask.
pub fn subset_sums(array: &[u64]) -> Vec<u64> {
    let n = array.len();
    let mut out = vec![0u64; 1usize << n];
    for m in 1..out.len() {
        let low = m.trailing_zeros() as usize;
        out[m] = out[m & (m - 1)] + array[low];
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Collision {
    pub value: u64,
    /// Per class, the subsets reaching `value` (truncated to a few).
    pub achievers: Vec<Vec<CellSet>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollisionReport {
    pub passed: bool,
    /// Values reached in every array.
    pub common_values: usize,
    pub violation_count: usize,
    /// Violations in ascending order of value (truncated).
    pub violations: Vec<Collision>,
}

impl CollisionReport {
    pub fn witness(&self) -> Option<&Collision> {
        self.violations.first()
    }
}

const MAX_REPORTED: usize = 32;
const MAX_ACHIEVERS: usize = 16;

fn check_capacity(shape: &GridShape, exhaustive_cap: u64) -> Result<()> {
    let n = shape.cell_count();
    if n >= 40 || (1u64 << n) > exhaustive_cap {
        return Err(Error::capacity(format!(
            "2^{n} subset-sum entries per array exceed the exhaustive cap {exhaustive_cap}"
        )));
    }
    Ok(())
}

/// Exhaustive check that every value reached by all arrays is reached by a
/// single subset in each, the same subset everywhere, and that subset is a
/// hyperplane union.
pub fn verify_family(family: &ArrayFamily, exhaustive_cap: u64) -> Result<CollisionReport> {
    check_capacity(&family.shape, exhaustive_cap)?;
    if !in_zbar(family) {
        return Err(Error::invalid("family hyperplane sums do not match across arrays"));
    }
    let hu = family.shape.hyperplane_union_table();
    let sorted: Vec<Vec<(u64, u32)>> = family
        .arrays
        .par_iter()
        .map(|a| {
            let mut v: Vec<(u64, u32)> = subset_sums(a)
                .into_iter()
                .enumerate()
                .map(|(m, s)| (s, m as u32))
                .collect();
            v.sort_unstable();
            v
        })
        .collect();

    let group = |v: &[(u64, u32)], value: u64| -> Vec<CellSet> {
        let lo = v.partition_point(|&(s, _)| s < value);
        let hi = v.partition_point(|&(s, _)| s <= value);
        v[lo..hi].iter().map(|&(_, m)| m as CellSet).collect()
    };

    let mut report = CollisionReport {
        passed: true,
        common_values: 0,
        violation_count: 0,
        violations: Vec::new(),
    };
    let first = &sorted[0];
    let mut i = 0;
    while i < first.len() {
        let value = first[i].0;
        let mut j = i;
        while j < first.len() && first[j].0 == value {
            j += 1;
        }
        let achievers: Vec<Vec<CellSet>> = std::iter::once(first[i..j].iter().map(|&(_, m)| m as CellSet).collect())
            .chain(sorted[1..].iter().map(|v| group(v, value)))
            .collect();
        i = j;
        if achievers.iter().any(|a| a.is_empty()) {
            continue;
        }
        report.common_values += 1;
        let m0 = achievers[0][0];
        let ok = achievers.iter().all(|a| a.len() == 1 && a[0] == m0) && hu[m0 as usize];
        if !ok {
            report.passed = false;
            report.violation_count += 1;
            if report.violations.len() < MAX_REPORTED {
                report.violations.push(Collision {
                    value,
                    achievers: achievers
                        .into_iter()
                        .map(|mut a| {
                            a.truncate(MAX_ACHIEVERS);
                            a
                        })
                        .collect(),
                });
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchParams {
    /// Entries are drawn from `[2, entry_cap]`.
    pub entry_cap: u64,
    pub max_rounds: u64,
    /// Annealing steps spent repairing each round's sample.
    pub repair_steps: u64,
    pub exhaustive_cap: u64,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            entry_cap: 50,
            max_rounds: 100_000,
            repair_steps: 20_000,
            exhaustive_cap: 1 << 20,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FoundFamily {
    pub family: ArrayFamily,
    /// 0-based round that produced the family.
    pub round: u64,
    pub report: CollisionReport,
}

/// Rectangle move: +δ on `plus`, -δ on `minus`; all hyperplane sums stay put.
#[derive(Debug, Clone, Copy)]
struct Rect {
    plus: [usize; 2],
    minus: [usize; 2],
}

struct Searcher {
    shape: GridShape,
    q: usize,
    cap: u64,
    hu: Vec<bool>,
    rects: Vec<Rect>,
}

impl Searcher {
    fn new(shape: &GridShape, q: usize, cap: u64) -> Self {
        let mut rects = Vec::new();
        let k = shape.k();
        let n = shape.cell_count();
        for a in 0..k {
            for b in a + 1..k {
                for base in 0..n {
                    let c = shape.coords(base);
                    if c[a] != 0 || c[b] != 0 {
                        continue;
                    }
                    for a0 in 0..shape.dims[a] {
                        for a1 in a0 + 1..shape.dims[a] {
                            for b0 in 0..shape.dims[b] {
                                for b1 in b0 + 1..shape.dims[b] {
                                    let at = |x: usize, y: usize| {
                                        let mut d = c.clone();
                                        d[a] = x;
                                        d[b] = y;
                                        shape.index(&d).unwrap()
                                    };
                                    rects.push(Rect {
                                        plus: [at(a0, b0), at(a1, b1)],
                                        minus: [at(a0, b1), at(a1, b0)],
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        Searcher {
            shape: shape.clone(),
            q,
            cap,
            hu: shape.hyperplane_union_table(),
            rects,
        }
    }

    fn apply(&self, arr: &mut [u64], r: Rect, delta: i64) -> bool {
        let ok = r.plus.iter().all(|&i| in_range(arr[i] as i64 + delta, self.cap))
            && r.minus.iter().all(|&i| in_range(arr[i] as i64 - delta, self.cap));
        if ok {
            for &i in &r.plus {
                arr[i] = (arr[i] as i64 + delta) as u64;
            }
            for &i in &r.minus {
                arr[i] = (arr[i] as i64 - delta) as u64;
            }
        }
        ok
    }

    /// Zero exactly when the family passes `verify_family`; otherwise the
    /// number of offending subset tuples.
    fn cost(&self, arrays: &[Vec<u64>]) -> u64 {
        let total = arrays[0].iter().sum::<u64>() as usize;
        let mut counts = vec![vec![0u32; total + 1]; self.q];
        let mut first = vec![vec![0u32; total + 1]; self.q];
        for (s, a) in arrays.iter().enumerate() {
            for (m, v) in subset_sums(a).into_iter().enumerate() {
                let v = v as usize;
                if counts[s][v] == 0 {
                    first[s][v] = m as u32;
                }
                counts[s][v] += 1;
            }
        }
        let mut cost = 0u64;
        for v in 0..=total {
            let mut prod = 1u64;
            for c in &counts {
                prod = prod.saturating_mul(c[v] as u64);
            }
            if prod == 0 {
                continue;
            }
            let m0 = first[0][v];
            if prod == 1 && self.hu[m0 as usize] && first.iter().all(|f| f[v] == m0) {
                continue;
            }
            cost = cost.saturating_add(prod);
        }
        cost
    }

    fn round(&self, seed: u64, round: u64, params: &SearchParams) -> Option<Vec<Vec<u64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(round);
        let n = self.shape.cell_count();
        let m1: Vec<u64> = (0..n).map(|_| rng.gen_range(2..=self.cap)).collect();
        let mut arrays = vec![m1; self.q];
        let max_delta = ((self.cap - 2) / 2).max(1) as i64;
        for arr in arrays.iter_mut().skip(1) {
            for _ in 0..2 * n {
                let r = self.rects[rng.gen_range(0..self.rects.len())];
                let d = rng.gen_range(1..=max_delta) * if rng.gen_bool(0.5) { 1 } else { -1 };
                self.apply(arr, r, d);
            }
        }
        let mut cost = self.cost(&arrays);
        let steps = params.repair_steps;
        let mut it = 0;
        while cost > 0 && it < steps {
            let mut cand = arrays.clone();
            let moved = if rng.gen_bool(0.5) {
                let i = rng.gen_range(0..n);
                let d: i64 = if rng.gen_bool(0.5) { 1 } else { -1 };
                if cand.iter().all(|a| in_range(a[i] as i64 + d, self.cap)) {
                    for a in cand.iter_mut() {
                        a[i] = (a[i] as i64 + d) as u64;
                    }
                    true
                } else {
                    false
                }
            } else {
                let s = rng.gen_range(0..self.q);
                let r = self.rects[rng.gen_range(0..self.rects.len())];
                let d = rng.gen_range(1..=2) * if rng.gen_bool(0.5) { 1 } else { -1 };
                self.apply(&mut cand[s], r, d)
            };
            let temp = 1.0 - it as f64 / steps as f64 + 1e-3;
            it += 1;
            if !moved {
                continue;
            }
            let c = self.cost(&cand);
            if c <= cost || rng.gen::<f64>() < ((cost as f64 - c as f64) / temp).exp() {
                arrays = cand;
                cost = c;
            }
        }
        (cost == 0).then_some(arrays)
    }
}

fn in_range(x: i64, cap: u64) -> bool {
    x >= 2 && x as u64 <= cap
}

/// Randomized search for a family passing [`verify_family`]. Each round
/// draws M_1 uniformly, derives the other arrays by rectangle moves, and
/// then anneals with margin-preserving moves. Rounds are seeded
/// independently, so the result does not depend on thread count.
pub fn search_family(shape: &GridShape, q: usize, seed: u64, params: &SearchParams) -> Result<FoundFamily> {
    if shape.k() < 2 {
        return Err(Error::invalid("k ≥ 2 required for array search"));
    }
    if q < 2 {
        return Err(Error::invalid("q ≥ 2 required for array search"));
    }
    if params.entry_cap < 2 {
        return Err(Error::invalid("entry cap must be at least 2"));
    }
    check_capacity(shape, params.exhaustive_cap)?;
    if params.entry_cap == 2 {
        // the all-2 family is the only candidate
        let family = ArrayFamily::new(shape.clone(), vec![vec![2; shape.cell_count()]; q])?;
        let report = verify_family(&family, params.exhaustive_cap)?;
        if report.passed {
            return Ok(FoundFamily { family, round: 0, report });
        }
        return Err(Error::SearchExhausted { rounds: 1 });
    }
    let searcher = Searcher::new(shape, q, params.entry_cap);
    const BATCH: u64 = 16;
    let mut start = 0;
    while start < params.max_rounds {
        let end = (start + BATCH).min(params.max_rounds);
        let hit = (start..end)
            .into_par_iter()
            .find_map_first(|r| searcher.round(seed, r, params).map(|a| (r, a)));
        if let Some((round, arrays)) = hit {
            let family = ArrayFamily::new(shape.clone(), arrays)?;
            let report = verify_family(&family, params.exhaustive_cap)?;
            assert!(report.passed, "search cost and oracle disagree");
            return Ok(FoundFamily { family, round, report });
        }
        start = end;
    }
    Err(Error::SearchExhausted { rounds: params.max_rounds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shape(d: &[usize]) -> GridShape {
        GridShape::new(d.to_vec()).unwrap()
    }

    fn fam(d: &[usize], arrays: &[&[u64]]) -> ArrayFamily {
        ArrayFamily::new(shape(d), arrays.iter().map(|a| a.to_vec()).collect()).unwrap()
    }

    fn cells(s: &GridShape, c: &[[usize; 2]]) -> CellSet {
        s.set_of(&c.iter().map(|x| x.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn shape_validation() {
        assert!(GridShape::new(vec![]).is_err());
        assert!(GridShape::new(vec![1, 2]).is_err());
        assert!(GridShape::new(vec![3, 2]).is_err());
        assert!(matches!(GridShape::new(vec![8, 8]), Err(Error::Capacity(_))));
        let s = shape(&[2, 3]);
        assert_eq!(s.coords(4), vec![1, 1]);
        assert_eq!(s.index(&[1, 2]), Some(5));
        assert_eq!(s.index(&[2, 0]), None);
    }

    #[test]
    fn hyperplane_examples() {
        let s = shape(&[2, 2]);
        assert_eq!(hyperplane(&s, 0, &[0]).unwrap(), cells(&s, &[[0, 0], [0, 1]]));
        assert_eq!(hyperplane(&s, 1, &[0, 1]).unwrap(), s.full());
        let s = shape(&[2, 3]);
        assert_eq!(hyperplane(&s, 1, &[1]).unwrap(), cells(&s, &[[0, 1], [1, 1]]));
        assert!(hyperplane(&s, 2, &[0]).is_err());
        assert!(hyperplane(&s, 0, &[2]).is_err());
    }

    #[test]
    fn union_examples() {
        let s = shape(&[2, 2]);
        assert_eq!(
            as_hyperplane_union(&s, cells(&s, &[[0, 0], [0, 1]])),
            HyperplaneUnion::Union { axis: 0, levels: vec![0] }
        );
        assert_eq!(as_hyperplane_union(&s, cells(&s, &[[0, 0]])), HyperplaneUnion::NotAUnion);
        assert_eq!(as_hyperplane_union(&s, 0), HyperplaneUnion::Empty);
        assert_eq!(
            as_hyperplane_union(&s, s.full()),
            HyperplaneUnion::Union { axis: 0, levels: vec![0, 1] }
        );
    }

    #[test]
    fn z_examples() {
        let s = shape(&[2, 2]);
        let m: Vec<i64> = vec![1, -1, -1, 1];
        assert!(in_z(&s, &m));
        assert!(in_z(&s, &[0i64; 4]));
        assert!(!in_z_i(&s, &m, cells(&s, &[[0, 0], [1, 1]])));
        assert!(!in_z(&s, &[1i64, 0, 0, 0]));
    }

    #[test]
    fn zbar_examples() {
        assert!(in_zbar(&fam(&[2, 2], &[&[2, 3, 4, 5], &[4, 1, 2, 7]])));
        assert!(in_zbar(&fam(&[2, 3], &[&[2, 3, 4, 5, 6, 7], &[2, 3, 4, 5, 6, 7]])));
        assert!(!in_zbar(&fam(&[2, 2], &[&[2, 3, 4, 5], &[3, 2, 5, 4]])));
    }

    #[test]
    fn negative_pair_fails() {
        let f = fam(&[2, 2], &[&[2, 3, 4, 5], &[4, 1, 2, 7]]);
        let r = verify_family(&f, 1 << 20).unwrap();
        assert!(!r.passed);
        let s = &f.shape;
        let v4 = r.violations.iter().find(|c| c.value == 4).unwrap();
        assert_eq!(v4.achievers, vec![vec![cells(s, &[[1, 0]])], vec![cells(s, &[[0, 0]])]]);
        // ascending order puts the value-2 collision first
        assert_eq!(r.witness().unwrap().value, 2);
    }

    #[test]
    fn identical_arrays_fail() {
        for d in [&[2usize, 2][..], &[2, 3], &[2, 2, 2]] {
            let s = shape(d);
            let a: Vec<u64> = (0..s.cell_count() as u64).map(|i| 2 + 3 * i).collect();
            let f = ArrayFamily::new(s, vec![a.clone(), a]).unwrap();
            assert!(!verify_family(&f, 1 << 20).unwrap().passed);
        }
    }

    #[test]
    fn verify_rejects_out_of_zbar_and_capacity() {
        let f = fam(&[2, 2], &[&[2, 3, 4, 5], &[3, 2, 5, 4]]);
        assert!(matches!(verify_family(&f, 1 << 20), Err(Error::Invalid(_))));
        let f = fam(&[2, 2], &[&[2, 3, 4, 5], &[4, 1, 2, 7]]);
        assert!(matches!(verify_family(&f, 8), Err(Error::Capacity(_))));
    }

    #[test]
    fn known_good_family_passes() {
        let f = fam(&[2, 2], &[&[2, 5, 9, 14], &[3, 4, 8, 15]]);
        let r = verify_family(&f, 1 << 20).unwrap();
        assert!(r.passed, "{r:?}");
        let searcher = Searcher::new(&f.shape, 2, 50);
        assert_eq!(searcher.cost(&f.arrays), 0);
    }

    #[test]
    fn search_small_cap_fails() {
        let p = SearchParams { entry_cap: 2, max_rounds: 50, ..Default::default() };
        let r = search_family(&shape(&[2, 2]), 2, 1, &p);
        assert_eq!(r.unwrap_err(), Error::SearchExhausted { rounds: 1 });
        let p3 = SearchParams { entry_cap: 3, max_rounds: 4, repair_steps: 100, ..Default::default() };
        let r = search_family(&shape(&[2, 2]), 2, 1, &p3);
        assert_eq!(r.unwrap_err(), Error::SearchExhausted { rounds: 4 });
        assert!(search_family(&shape(&[3]), 2, 1, &p).is_err());
    }

    #[test]
    fn search_is_deterministic_and_certified() {
        let p = SearchParams { entry_cap: 20, max_rounds: 2000, ..Default::default() };
        let s = shape(&[2, 2]);
        let a = search_family(&s, 2, 11, &p).unwrap();
        let b = search_family(&s, 2, 11, &p).unwrap();
        assert_eq!(a.family, b.family);
        assert_eq!(a.round, b.round);
        assert!(verify_family(&a.family, 1 << 20).unwrap().passed);
        assert!(a.family.min_entry() >= 2);
        assert!(a.family.arrays.iter().flatten().all(|&x| x <= 20));
    }

    #[test]
    fn hyperplane_tuples_match_on_passing_family() {
        let p = SearchParams { entry_cap: 30, max_rounds: 2000, ..Default::default() };
        let s = shape(&[2, 3]);
        let f = search_family(&s, 2, 3, &SearchParams { entry_cap: 80, ..p }).unwrap().family;
        for axis in 0..s.k() {
            for levels in 0..(1u64 << s.dims()[axis]) {
                let levels: Vec<usize> = bits(levels).collect();
                let h = hyperplane(&s, axis, &levels).unwrap();
                assert!((2..=f.q).all(|t| f.sum_over(t, h) == f.sum_over(1, h)));
            }
        }
        let doubled = ArrayFamily::new(
            s.clone(),
            f.arrays.iter().map(|a| a.iter().map(|x| 2 * x).collect()).collect(),
        )
        .unwrap();
        assert!(verify_family(&doubled, 1 << 20).unwrap().passed);
    }

    fn brute_union(shape: &GridShape, set: CellSet) -> HyperplaneUnion {
        if set == 0 {
            return HyperplaneUnion::Empty;
        }
        for axis in 0..shape.k() {
            for lv in 0..(1u64 << shape.dims()[axis]) {
                let levels: Vec<usize> = bits(lv).collect();
                if hyperplane(shape, axis, &levels).unwrap() == set {
                    return HyperplaneUnion::Union { axis, levels };
                }
            }
        }
        HyperplaneUnion::NotAUnion
    }

    fn small_shape() -> impl Strategy<Value = GridShape> {
        prop_oneof![
            Just(vec![2, 2]),
            Just(vec![2, 3]),
            Just(vec![2, 4]),
            Just(vec![3, 3]),
            Just(vec![3, 4]),
            Just(vec![2, 2, 2]),
            Just(vec![2, 2, 3]),
            Just(vec![2, 6]),
            Just(vec![5]),
        ]
        .prop_map(|d| GridShape::new(d).unwrap())
    }

    proptest! {
        #[test]
        fn union_matches_brute_force(s in small_shape(), raw in any::<u64>()) {
            let set = raw & s.full();
            prop_assert_eq!(as_hyperplane_union(&s, set), brute_union(&s, set));
        }

        #[test]
        fn union_table_matches(s in small_shape()) {
            let t = s.hyperplane_union_table();
            for m in 0..t.len() as u64 {
                prop_assert_eq!(t[m as usize], as_hyperplane_union(&s, m) != HyperplaneUnion::NotAUnion);
            }
        }
    }

    fn slice_hypothesis(s: &GridShape, set: CellSet) -> bool {
        (0..s.k()).all(|i| {
            (0..s.dims()[i]).all(|r| {
                let slice = hyperplane(s, i, &[r]).unwrap();
                let inter = set & slice;
                (0..s.k()).filter(|&j| j != i).any(|j| {
                    (0..(1u64 << s.dims()[j])).any(|t| {
                        let levels: Vec<usize> = bits(t).collect();
                        hyperplane(s, j, &levels).unwrap() & slice == inter
                    })
                })
            })
        })
    }

    #[test]
    fn slice_unions_glue_exhaustively() {
        for d in [&[2usize, 2, 2][..], &[2, 2, 3], &[2, 3, 3], &[2, 2, 2, 2]] {
            let s = shape(d);
            let mut hits = 0;
            for set in 0..=s.full() {
                if slice_hypothesis(&s, set) {
                    hits += 1;
                    assert_ne!(as_hyperplane_union(&s, set), HyperplaneUnion::NotAUnion, "{d:?} {set:b}");
                }
            }
            assert!(hits > 2);
        }
    }
}
