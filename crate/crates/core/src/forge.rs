//! Irreducible factors with prescribed class valuations and the assembled
//! witness polynomial.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exactnum::{require_prime, residue_system, ResidueSystem};
use crate::gridcomb::{search_family, ArrayFamily, GridShape, SearchParams};
use crate::{IntPoly, RatPoly};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForgeParams {
    pub search: SearchParams,
    /// Refuse to assemble H when its estimated size in bits exceeds this.
    pub max_h_bits: u64,
}

impl Default for ForgeParams {
    fn default() -> Self {
        ForgeParams {
            search: SearchParams::default(),
            max_h_bits: 1 << 31,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrreducibleFactor {
    /// Row-major cell index.
    pub cell: usize,
    /// 1-based residue class.
    pub class: usize,
    pub n: u64,
    pub m: u64,
    pub poly: IntPoly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessBundle {
    pub p: u64,
    pub lengths: Vec<usize>,
    pub seed: u64,
    /// Total degree bound; zero for a single length.
    pub sigma: u64,
    pub e: u64,
    pub residues: Option<ResidueSystem>,
    pub family: Option<ArrayFamily>,
    /// Ordered by cell, then class.
    pub factors: Vec<IrreducibleFactor>,
    pub h_numerator: IntPoly,
}

impl WitnessBundle {
    pub fn k(&self) -> usize {
        self.lengths.len()
    }

    /// Number of residue classes in play (1 for the single-length bundle).
    pub fn q(&self) -> usize {
        self.family.as_ref().map_or(1, |f| f.q)
    }

    pub fn shape(&self) -> Result<GridShape> {
        GridShape::new(self.lengths.clone())
    }

    pub fn factor(&self, cell: usize, class: usize) -> Option<&IrreducibleFactor> {
        self.factors.iter().find(|f| f.cell == cell && f.class == class)
    }

    /// The sum of one array's entries.
    pub fn single_array_total(&self) -> u64 {
        self.family.as_ref().map_or(0, |f| f.total(1))
    }

    /// H = H_numerator / p^e.
    pub fn h(&self) -> RatPoly {
        let den = BigInt::from(self.p).pow(self.e as u32);
        self.h_numerator
            .map(|c| BigRational::new(c.clone(), den.clone()))
    }
}

/// X^n + p^m X^(n-1) + p^(n+1) (X^(n-2) + ... + 1).
pub fn class_one_template(p: u64, n: u64, m: u64) -> IntPoly {
    let pb = BigInt::from(p);
    let c = pb.clone().pow((n + 1) as u32);
    let mut coeffs = vec![c; (n - 1) as usize];
    coeffs.push(pb.pow(m as u32));
    coeffs.push(BigInt::one());
    IntPoly::new(coeffs)
}

/// The class-s factor: the class-1 template shifted by r_s - r_1.
pub fn build_irreducible(p: u64, n: u64, m: u64, s: usize, residues: &ResidueSystem) -> Result<IntPoly> {
    require_prime(p)?;
    if residues.p != p {
        return Err(Error::invalid("residue system belongs to another prime"));
    }
    if n < 2 {
        return Err(Error::invalid(format!("factor degree {n} must be at least 2")));
    }
    if m < n + 1 {
        return Err(Error::invalid(format!("m = {m} must be at least n + 1 = {}", n + 1)));
    }
    if s < 1 || s > residues.q() {
        return Err(Error::invalid(format!("class {s} outside 1..={}", residues.q())));
    }
    let template = class_one_template(p, n, m);
    Ok(if s == 1 { template } else { template.shift(&residues.offset(s)) })
}

/// q times the total of the first array.
pub fn sigma_of(family: &ArrayFamily) -> u64 {
    family.q as u64 * family.total(1)
}

fn check_lengths(lengths: &[usize]) -> Result<Vec<usize>> {
    if lengths.is_empty() {
        return Err(Error::invalid("at least one length is required"));
    }
    if lengths.iter().any(|&n| n < 2) {
        return Err(Error::invalid("lengths must exceed 1"));
    }
    let mut sorted = lengths.to_vec();
    sorted.sort_unstable();
    Ok(sorted)
}

/// Upper bound on the bit size of H_numerator.
pub fn estimate_h_bits(family: &ArrayFamily, residues: &ResidueSystem) -> u64 {
    let p_bits = 64 - residues.p.leading_zeros() as u64;
    let mut per_coeff = 0u64;
    let mut counter = 0u64;
    for cell in 0..family.shape.cell_count() {
        for s in 1..=family.q {
            let n = family.entry(s, cell);
            let m = n + 1 + counter;
            counter += 1;
            let t_bits = residues.offset(s).bits();
            per_coeff += n * (t_bits + 1) + m * p_bits + 64;
        }
    }
    per_coeff.saturating_mul(sigma_of(family) + 1)
}

pub fn forge_witness(p: u64, lengths: &[usize], seed: u64) -> Result<WitnessBundle> {
    forge_witness_with(p, lengths, seed, &ForgeParams::default())
}

pub fn forge_witness_with(p: u64, lengths: &[usize], seed: u64, params: &ForgeParams) -> Result<WitnessBundle> {
    require_prime(p)?;
    let lengths = check_lengths(lengths)?;
    if lengths.len() == 1 {
        return Ok(WitnessBundle {
            p,
            lengths: lengths.clone(),
            seed,
            sigma: 0,
            e: 0,
            residues: None,
            family: None,
            factors: Vec::new(),
            h_numerator: IntPoly::monomial(BigInt::one(), lengths[0]),
        });
    }
    let shape = GridShape::new(lengths.clone())?;
    let q = usize::try_from(p).map_err(|_| Error::invalid("p too large"))?;
    let family = search_family(&shape, q, seed, &params.search)?.family;
    assemble(p, lengths, seed, family, params.max_h_bits)
}

/// Builds factors and H for a given family, which must lie in Z̄ with all
/// entries at least 2.
pub fn assemble(p: u64, lengths: Vec<usize>, seed: u64, family: ArrayFamily, max_h_bits: u64) -> Result<WitnessBundle> {
    if family.min_entry() < 2 {
        return Err(Error::invalid("family entries must be at least 2"));
    }
    if family.q as u64 != p {
        return Err(Error::invalid("family needs one array per residue class"));
    }
    let sigma = sigma_of(&family);
    let residues = residue_system(p, sigma)?;
    let est = estimate_h_bits(&family, &residues);
    if est > max_h_bits {
        return Err(Error::capacity(format!(
            "H_numerator of degree {sigma} estimated at {est} bits, above the limit of {max_h_bits}"
        )));
    }
    let q = family.q;
    let jobs: Vec<(usize, usize)> = (0..family.shape.cell_count())
        .flat_map(|cell| (1..=q).map(move |s| (cell, s)))
        .collect();
    let factors = jobs
        .par_iter()
        .enumerate()
        .map(|(counter, &(cell, class))| {
            let n = family.entry(class, cell);
            let m = n + 1 + counter as u64;
            build_irreducible(p, n, m, class, &residues).map(|poly| IrreducibleFactor { cell, class, n, m, poly })
        })
        .collect::<Result<Vec<_>>>()?;
    let e = family.total(1);
    let polys: Vec<IntPoly> = factors.iter().map(|f| f.poly.clone()).collect();
    let h_numerator = IntPoly::product(&polys);
    debug_assert!(!h_numerator.coeffs().iter().all(Zero::is_zero));
    Ok(WitnessBundle {
        p,
        lengths,
        seed,
        sigma,
        e,
        residues: Some(residues),
        family: Some(family),
        factors,
        h_numerator,
    })
}
