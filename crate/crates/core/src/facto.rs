//! Factorizations of a witness read off from its valuation data: each one
//! is a partition of every class's cells into parts with matching sums.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Pow;

use crate::error::{Error, Result};
use crate::forge::WitnessBundle;
use crate::gridcomb::{bits, subset_sums, ArrayFamily, CellSet};
use crate::{IntPoly, RatPoly};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Part {
    /// One cell set per class, in class order.
    pub index_sets: Vec<CellSet>,
    pub e: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FactorizationCertificate {
    /// Ordered by smallest class-1 cell.
    pub parts: Vec<Part>,
}

impl FactorizationCertificate {
    pub fn length(&self) -> usize {
        self.parts.len()
    }
}

/// The common sum of the tuple, if all classes agree.
pub fn part_denominator(family: &ArrayFamily, index_sets: &[CellSet]) -> Option<u64> {
    if index_sets.len() != family.q {
        return None;
    }
    let v = family.sum_over(1, index_sets[0]);
    (2..=family.q)
        .all(|s| family.sum_over(s, index_sets[s - 1]) == v)
        .then_some(v)
}

fn proper_subset_sums(family: &ArrayFamily, s: usize, set: CellSet) -> HashSet<u64> {
    let mut out = HashSet::new();
    let mut sub = (set.wrapping_sub(1)) & set;
    while sub != 0 {
        out.insert(family.sum_over(s, sub));
        sub = (sub - 1) & set;
    }
    out
}

/// No tuple of non-empty proper subsets has equal sums in every class.
pub fn is_irreducible_part(family: &ArrayFamily, index_sets: &[CellSet]) -> bool {
    let mut common = proper_subset_sums(family, 1, index_sets[0]);
    for s in 2..=family.q {
        if common.is_empty() {
            break;
        }
        let here = proper_subset_sums(family, s, index_sets[s - 1]);
        common.retain(|v| here.contains(v));
    }
    common.is_empty()
}

pub const DEFAULT_MAX_STEPS: u64 = 100_000_000;

struct Enumerator<'a> {
    family: &'a ArrayFamily,
    sums: Vec<Vec<u64>>,
    steps: u64,
    max_steps: u64,
    out: Vec<FactorizationCertificate>,
}

impl Enumerator<'_> {
    fn tick(&mut self, n: u64) -> Result<()> {
        self.steps += n;
        if self.steps > self.max_steps {
            return Err(Error::capacity(format!(
                "factorization enumeration exceeded {} steps",
                self.max_steps
            )));
        }
        Ok(())
    }

    fn submasks_by_sum(&mut self, s: usize, set: CellSet) -> Result<Vec<(u64, CellSet)>> {
        let mut v = Vec::new();
        let mut sub = set;
        while sub != 0 {
            v.push((self.sums[s - 1][sub as usize], sub));
            sub = (sub - 1) & set;
        }
        self.tick(v.len() as u64)?;
        v.sort_unstable();
        Ok(v)
    }

    fn rec(&mut self, unused: Vec<CellSet>, parts: &mut Vec<Part>) -> Result<()> {
        if unused[0] == 0 {
            if unused.iter().all(|&u| u == 0) {
                self.out.push(FactorizationCertificate { parts: parts.clone() });
            }
            return Ok(());
        }
        let q = self.family.q;
        let anchor = unused[0] & unused[0].wrapping_neg();
        let tables: Vec<Vec<(u64, CellSet)>> = (2..=q)
            .map(|s| self.submasks_by_sum(s, unused[s - 1]))
            .collect::<Result<_>>()?;
        let rest = unused[0] & !anchor;
        let mut sub = rest;
        loop {
            let first = anchor | sub;
            let v = self.sums[0][first as usize];
            let choices: Vec<&[(u64, CellSet)]> = tables
                .iter()
                .map(|t| {
                    let lo = t.partition_point(|&(x, _)| x < v);
                    let hi = t.partition_point(|&(x, _)| x <= v);
                    &t[lo..hi]
                })
                .collect();
            if choices.iter().all(|c| !c.is_empty()) {
                let mut idx = vec![0usize; choices.len()];
                loop {
                    self.tick(1)?;
                    let mut sets = vec![first];
                    sets.extend(idx.iter().zip(&choices).map(|(&i, c)| c[i].1));
                    if is_irreducible_part(self.family, &sets) {
                        let next: Vec<CellSet> = unused.iter().zip(&sets).map(|(u, s)| u & !s).collect();
                        parts.push(Part { index_sets: sets, e: v });
                        self.rec(next, parts)?;
                        parts.pop();
                    }
                    // odometer over the per-class choices
                    let mut j = 0;
                    while j < idx.len() {
                        idx[j] += 1;
                        if idx[j] < choices[j].len() {
                            break;
                        }
                        idx[j] = 0;
                        j += 1;
                    }
                    if j == idx.len() {
                        break;
                    }
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        Ok(())
    }
}

/// All partitions of the family's cells into irreducible equal-sum parts,
/// each reported once, in canonical order.
pub fn enumerate_family(family: &ArrayFamily, exhaustive_cap: u64, max_steps: u64) -> Result<Vec<FactorizationCertificate>> {
    let n = family.shape.cell_count();
    if n >= 40 || (1u64 << n) > exhaustive_cap {
        return Err(Error::capacity(format!(
            "2^{n} subset sums per class exceed the exhaustive cap {exhaustive_cap}"
        )));
    }
    let mut en = Enumerator {
        family,
        sums: family.arrays.iter().map(|a| subset_sums(a)).collect(),
        steps: 0,
        max_steps,
        out: Vec::new(),
    };
    en.rec(vec![family.shape.full(); family.q], &mut Vec::new())?;
    let mut out = en.out;
    out.sort();
    Ok(out)
}

pub fn enumerate_factorizations(bundle: &WitnessBundle) -> Result<Vec<FactorizationCertificate>> {
    enumerate_factorizations_with(bundle, 1 << 20, DEFAULT_MAX_STEPS)
}

pub fn enumerate_factorizations_with(
    bundle: &WitnessBundle,
    exhaustive_cap: u64,
    max_steps: u64,
) -> Result<Vec<FactorizationCertificate>> {
    match &bundle.family {
        None => Ok(vec![single_length_certificate(bundle.lengths[0])]),
        Some(f) => enumerate_family(f, exhaustive_cap, max_steps),
    }
}

/// X^n = X · … · X.
pub fn single_length_certificate(n: usize) -> FactorizationCertificate {
    FactorizationCertificate {
        parts: (0..n).map(|i| Part { index_sets: vec![1 << i], e: 0 }).collect(),
    }
}

/// Sorted lengths with multiplicity.
pub fn lengths_multiset(certs: &[FactorizationCertificate]) -> Vec<usize> {
    let mut v: Vec<usize> = certs.iter().map(|c| c.length()).collect();
    v.sort_unstable();
    v
}

/// Product of the bundle's factors named by the part.
pub fn part_numerator(bundle: &WitnessBundle, part: &Part) -> Result<IntPoly> {
    if bundle.family.is_none() {
        return Ok(IntPoly::x());
    }
    let mut polys = Vec::new();
    for (s, &set) in part.index_sets.iter().enumerate() {
        for cell in bits(set) {
            let f = bundle
                .factor(cell, s + 1)
                .ok_or_else(|| Error::invalid(format!("bundle has no factor at cell {cell}, class {}", s + 1)))?;
            polys.push(f.poly.clone());
        }
    }
    Ok(IntPoly::product(&polys))
}

/// G = (product of the part's factors) / p^e.
pub fn part_polynomial(bundle: &WitnessBundle, part: &Part) -> Result<RatPoly> {
    let den = BigInt::from(bundle.p).pow(part.e as u32);
    Ok(part_numerator(bundle, part)?.map(|c| BigRational::new(c.clone(), den.clone())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridcomb::{hyperplane, GridShape};

    fn fam(d: &[usize], arrays: &[&[u64]]) -> ArrayFamily {
        ArrayFamily::new(GridShape::new(d.to_vec()).unwrap(), arrays.iter().map(|a| a.to_vec()).collect()).unwrap()
    }

    fn good_2x2() -> ArrayFamily {
        fam(&[2, 2], &[&[2, 5, 9, 14], &[3, 4, 8, 15]])
    }

    #[test]
    fn denominators() {
        let f = fam(&[2, 2], &[&[2, 3, 4, 5], &[4, 1, 2, 7]]);
        assert_eq!(part_denominator(&f, &[0b0100, 0b0001]), Some(4));
        assert_eq!(part_denominator(&f, &[0b0001, 0b0001]), None);
        let g = good_2x2();
        let row = hyperplane(&g.shape, 0, &[0]).unwrap();
        assert_eq!(part_denominator(&g, &[row, row]), Some(7));
    }

    #[test]
    fn irreducibility_examples() {
        let g = good_2x2();
        for i in 0..4 {
            assert!(is_irreducible_part(&g, &[1 << i, 1 << i]));
        }
        assert!(!is_irreducible_part(&g, &[g.shape.full(), g.shape.full()]));
        for axis in 0..2 {
            for l in 0..2 {
                let h = hyperplane(&g.shape, axis, &[l]).unwrap();
                assert!(is_irreducible_part(&g, &[h, h]));
            }
        }
    }

    #[test]
    fn good_family_has_axis_partitions_only() {
        let g = good_2x2();
        let certs = enumerate_family(&g, 1 << 20, DEFAULT_MAX_STEPS).unwrap();
        assert_eq!(lengths_multiset(&certs), vec![2, 2]);
        let rows = [hyperplane(&g.shape, 0, &[0]).unwrap(), hyperplane(&g.shape, 0, &[1]).unwrap()];
        let cols = [hyperplane(&g.shape, 1, &[0]).unwrap(), hyperplane(&g.shape, 1, &[1]).unwrap()];
        let as_sets = |c: &FactorizationCertificate| -> Vec<CellSet> {
            c.parts.iter().map(|p| {
                assert!(p.index_sets.iter().all(|&s| s == p.index_sets[0]));
                p.index_sets[0]
            }).collect()
        };
        let mut got: Vec<Vec<CellSet>> = certs.iter().map(as_sets).collect();
        got.sort();
        let mut want = vec![rows.to_vec(), cols.to_vec()];
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn identical_arrays_have_extra_factorizations() {
        let f = fam(&[2, 2], &[&[2, 3, 4, 5], &[2, 3, 4, 5]]);
        let certs = enumerate_family(&f, 1 << 20, DEFAULT_MAX_STEPS).unwrap();
        // the diagonal pairs give a third partition, and singletons a fourth
        assert!(certs.len() > 2);
        assert!(certs.iter().any(|c| c.length() == 4));
        let mut dedup = certs.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), certs.len());
    }

    #[test]
    fn step_limit_is_enforced() {
        let g = good_2x2();
        assert!(matches!(enumerate_family(&g, 1 << 20, 5), Err(Error::Capacity(_))));
        assert!(matches!(enumerate_family(&g, 8, DEFAULT_MAX_STEPS), Err(Error::Capacity(_))));
    }

    #[test]
    fn lengths_examples() {
        assert_eq!(lengths_multiset(&[]), Vec::<usize>::new());
        let c = |n| single_length_certificate(n);
        assert_eq!(lengths_multiset(&[c(3), c(2), c(2)]), vec![2, 2, 3]);
        assert_eq!(lengths_multiset(&[c(2), c(2)]), vec![2, 2]);
    }

    /// Every candidate partition into equal-sum parts, by brute force over
    /// set partitions of class 1 and matching per-class assignments.
    fn brute_count(f: &ArrayFamily) -> usize {
        fn go(f: &ArrayFamily, unused: Vec<CellSet>, count: &mut usize) {
            if unused[0] == 0 {
                if unused.iter().all(|&u| u == 0) {
                    *count += 1;
                }
                return;
            }
            let anchor = unused[0] & unused[0].wrapping_neg();
            let per_class: Vec<Vec<CellSet>> = unused
                .iter()
                .map(|&u| {
                    let mut v = Vec::new();
                    let mut s = u;
                    while s != 0 {
                        v.push(s);
                        s = (s - 1) & u;
                    }
                    v
                })
                .collect();
            let mut idx = vec![0usize; f.q];
            loop {
                let sets: Vec<CellSet> = idx.iter().zip(&per_class).map(|(&i, c)| c[i]).collect();
                if sets[0] & anchor != 0
                    && part_denominator(f, &sets).is_some()
                    && is_irreducible_part(f, &sets)
                {
                    let next = unused.iter().zip(&sets).map(|(u, s)| u & !s).collect();
                    go(f, next, count);
                }
                let mut j = 0;
                while j < f.q {
                    idx[j] += 1;
                    if idx[j] < per_class[j].len() {
                        break;
                    }
                    idx[j] = 0;
                    j += 1;
                }
                if j == f.q {
                    break;
                }
            }
        }
        let mut count = 0;
        go(f, vec![f.shape.full(); f.q], &mut count);
        count
    }

    #[test]
    fn enumeration_matches_brute_force() {
        let cases = [
            fam(&[2, 2], &[&[2, 3, 4, 5], &[2, 3, 4, 5]]),
            fam(&[2, 2], &[&[2, 3, 4, 5], &[4, 1, 2, 7]]),
            good_2x2(),
            fam(&[2, 2], &[&[2, 2, 2, 2], &[2, 2, 2, 2], &[2, 2, 2, 2]]),
            fam(&[2, 3], &[&[2, 3, 4, 5, 6, 7], &[3, 2, 4, 4, 7, 7]]),
        ];
        for f in &cases {
            let certs = enumerate_family(f, 1 << 20, DEFAULT_MAX_STEPS).unwrap();
            assert_eq!(certs.len(), brute_count(f));
            for c in &certs {
                for s in 0..f.q {
                    let union = c.parts.iter().fold(0, |acc, p| {
                        assert_eq!(acc & p.index_sets[s], 0);
                        acc | p.index_sets[s]
                    });
                    assert_eq!(union, f.shape.full());
                }
                let total: u64 = c.parts.iter().map(|p| p.e).sum();
                assert_eq!(total, f.total(1));
            }
        }
    }

    #[test]
    fn single_length_numerators() {
        let b = crate::forge::forge_witness(2, &[3], 0).unwrap();
        let certs = enumerate_factorizations(&b).unwrap();
        assert_eq!(certs.len(), 1);
        assert_eq!(certs[0].length(), 3);
        let g = part_polynomial(&b, &certs[0].parts[0]).unwrap();
        assert_eq!(g, RatPoly::x());
    }
}
