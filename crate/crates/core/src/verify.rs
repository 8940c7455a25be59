//! Independent certification of witness bundles.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Pow, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exactnum::{primes_up_to, require_prime, PValued, ResidueSystem, Valuation};
use crate::facto::{enumerate_family, lengths_multiset, part_numerator, FactorizationCertificate, Part, DEFAULT_MAX_STEPS};
use crate::forge::WitnessBundle;
use crate::gridcomb::{bits, ArrayFamily};
use crate::poly::slope_irreducible;
use crate::IntPoly;

/// Minimum of vp(F(a)) over one residue class, up to a cutoff.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassMin {
    /// The exact minimum (below the cutoff) and a point attaining it.
    Exact { value: u64, at: BigInt },
    /// Every point has valuation at least the cutoff.
    AtLeast(u64),
}

impl ClassMin {
    /// The minimum, or the cutoff when it was not reached.
    pub fn floor(&self) -> u64 {
        match self {
            ClassMin::Exact { value, .. } => *value,
            ClassMin::AtLeast(t) => *t,
        }
    }
}

const MAX_NODES: u64 = 1_000_000;

fn reduce(coeffs: &[BigInt], m: &BigInt) -> Vec<BigInt> {
    coeffs.iter().map(|c| c.mod_floor(m)).collect()
}

/// g(c + d·X) mod m.
fn compose_affine_mod(g: &[BigInt], c: &BigInt, d: &BigInt, m: &BigInt) -> Vec<BigInt> {
    let mut acc: Vec<BigInt> = Vec::with_capacity(g.len());
    for coeff in g.iter().rev() {
        // acc <- acc * (c + d X) + coeff
        let mut next = vec![BigInt::zero(); acc.len() + 1];
        for (i, a) in acc.iter().enumerate() {
            next[i] += a * c;
            next[i + 1] += a * d;
        }
        next[0] += coeff;
        acc = next.into_iter().map(|x| x.mod_floor(m)).collect();
    }
    acc
}

fn mul_mod(a: &[BigInt], b: &[BigInt], m: &BigInt) -> Vec<BigInt> {
    reduce(&IntPoly::mul(&IntPoly::new(a.to_vec()), &IntPoly::new(b.to_vec())).into_coeffs(), m)
}

struct Refiner {
    p: u64,
    pb: BigInt,
    cutoff: u64,
    modulus: BigInt,
    nodes: u64,
}

impl Refiner {
    /// Minimum over t of vp(G(t)) where G(t) = F(point + scale·t) mod p^T.
    fn rec(&mut self, g: &[BigInt], point: &BigInt, scale: &BigInt) -> Result<ClassMin> {
        self.nodes += 1;
        if self.nodes > MAX_NODES {
            return Err(Error::capacity(format!("class refinement exceeded {MAX_NODES} nodes")));
        }
        let mu = g
            .iter()
            .filter_map(|c| c.valuation(self.p).finite())
            .min()
            .map_or(self.cutoff, |v| v as u64);
        if mu >= self.cutoff {
            return Ok(ClassMin::AtLeast(self.cutoff));
        }
        let unit = self.pb.clone().pow(mu as u32);
        let reduced: Vec<u64> = g
            .iter()
            .map(|c| (c / &unit).mod_floor(&self.pb).to_u64().unwrap())
            .collect();
        let p = self.p as u128;
        for t0 in 0..self.p {
            let v = reduced.iter().rev().fold(0u128, |acc, &c| (acc * t0 as u128 + c as u128) % p);
            if v != 0 {
                return Ok(ClassMin::Exact { value: mu, at: point + scale * BigInt::from(t0) });
            }
        }
        let mut best = ClassMin::AtLeast(self.cutoff);
        let next_scale = scale * &self.pb;
        for t0 in 0..self.p {
            let t0b = BigInt::from(t0);
            let child = compose_affine_mod(g, &t0b, &self.pb, &self.modulus);
            let r = self.rec(&child, &(point + scale * &t0b), &next_scale)?;
            if r.floor() < best.floor() {
                best = r;
            }
        }
        Ok(best)
    }
}

fn class_start(p: u64, s: usize, residues: &ResidueSystem) -> Result<BigInt> {
    require_prime(p)?;
    if residues.p != p {
        return Err(Error::invalid("residue system belongs to another prime"));
    }
    if s < 1 || s > residues.q() {
        return Err(Error::invalid(format!("class {s} outside 1..={}", residues.q())));
    }
    Ok(BigInt::from(s as u64 - 1))
}

/// Exact minimum of vp(p, F(a)) over integers a in class s, or `AtLeast(T)`.
///
/// Works on F(c + p·t) mod p^T: if the lowest coefficient layer does not
/// vanish identically mod p, its valuation is the minimum; otherwise every
/// residue of t is refined.
pub fn min_valuation_on_class(p: u64, f: &IntPoly, s: usize, residues: &ResidueSystem, cutoff: u64) -> Result<ClassMin> {
    let c = class_start(p, s, residues)?;
    if cutoff < 1 {
        return Err(Error::invalid("cutoff must be at least 1"));
    }
    let pb = BigInt::from(p);
    let modulus = pb.clone().pow(cutoff as u32);
    let g = compose_affine_mod(&reduce(f.coeffs(), &modulus), &c, &pb, &modulus);
    let mut r = Refiner { p, pb: pb.clone(), cutoff, modulus, nodes: 0 };
    r.rec(&g, &c, &pb)
}

/// The literal scan over the p^(T-1) residues of class s modulo p^T.
pub fn min_valuation_scan(p: u64, f: &IntPoly, s: usize, residues: &ResidueSystem, cutoff: u64, budget: u64) -> Result<ClassMin> {
    let c = class_start(p, s, residues)?;
    if cutoff < 1 {
        return Err(Error::invalid("cutoff must be at least 1"));
    }
    let count = (p as u128).checked_pow(cutoff as u32 - 1).filter(|&n| n <= budget as u128);
    let Some(count) = count else {
        return Err(Error::capacity(format!("scan of {p}^{} residues exceeds budget {budget}", cutoff - 1)));
    };
    let pb = BigInt::from(p);
    let mut best = ClassMin::AtLeast(cutoff);
    for j in 0..count as u64 {
        let a = &c + &pb * BigInt::from(j);
        if let Valuation::Finite(v) = f.eval(&a).valuation(p) {
            if (v as u64) < best.floor() {
                best = ClassMin::Exact { value: v as u64, at: a };
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub witness: Option<Value>,
    pub detail: Option<String>,
}

impl CheckOutcome {
    fn pass(name: &str, detail: Option<String>) -> Self {
        CheckOutcome { name: name.into(), passed: true, witness: None, detail }
    }

    fn fail(name: &str, witness: Value) -> Self {
        CheckOutcome { name: name.into(), passed: false, witness: Some(witness), detail: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

pub const CHECK_NAMES: [&str; 7] = [
    "lemma33_minima",
    "lemma52_iii_totals",
    "lemma52_iv_small_primes",
    "lemma52_v_degree_bound",
    "integrality",
    "irreducibility_certificates",
    "lengths_match",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    /// Bound on p^e for the literal integrality scan, and on 2^N tables.
    pub exhaustive_cap: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { exhaustive_cap: 1 << 20 }
    }
}

struct Parts<'a> {
    bundle: &'a WitnessBundle,
    family: &'a ArrayFamily,
    residues: &'a ResidueSystem,
}

fn well_formed(bundle: &WitnessBundle) -> Result<Option<Parts<'_>>> {
    require_prime(bundle.p)?;
    let shape = bundle.shape()?;
    if bundle.lengths.len() == 1 {
        if bundle.family.is_some() || !bundle.factors.is_empty() {
            return Err(Error::invalid("single-length bundle carries a family or factors"));
        }
        return Ok(None);
    }
    let family = bundle.family.as_ref().ok_or_else(|| Error::invalid("bundle lacks its array family"))?;
    let residues = bundle.residues.as_ref().ok_or_else(|| Error::invalid("bundle lacks residues"))?;
    if family.shape != shape {
        return Err(Error::invalid("family shape differs from lengths"));
    }
    if family.q as u64 != bundle.p || residues.q() != family.q || residues.p != bundle.p {
        return Err(Error::invalid("class count must equal p"));
    }
    let n = shape.cell_count();
    if bundle.factors.len() != n * family.q {
        return Err(Error::invalid(format!("expected {} factors", n * family.q)));
    }
    for cell in 0..n {
        for s in 1..=family.q {
            if bundle.factors.iter().filter(|f| f.cell == cell && f.class == s).count() != 1 {
                return Err(Error::invalid(format!("factor at cell {cell}, class {s} missing or repeated")));
            }
        }
    }
    Ok(Some(Parts { bundle, family, residues }))
}

fn cell_json(bundle: &WitnessBundle, cell: usize) -> Value {
    let shape = bundle.shape().expect("validated shape");
    json!(shape.coords(cell).iter().map(|c| c + 1).collect::<Vec<_>>())
}

/// Per factor: own-class minimum equals the degree and is attained at r_s;
/// every other class has minimum 0 attained at r_t.
fn check_minima(ctx: &Parts) -> Result<(CheckOutcome, Vec<Vec<ClassMin>>)> {
    let name = CHECK_NAMES[0];
    let b = ctx.bundle;
    let q = ctx.family.q;
    let mut all = Vec::new();
    let mut failure = None;
    for f in &b.factors {
        let deg = f.poly.degree().unwrap_or(0) as u64;
        let mut row = Vec::new();
        for t in 1..=q {
            let (want, cutoff) = if t == f.class { (deg, deg + 2) } else { (0, 2) };
            let m = min_valuation_on_class(b.p, &f.poly, t, ctx.residues, cutoff)?;
            let at_rep = f.poly.eval(ctx.residues.rep(t)).valuation(b.p);
            let ok = deg == f.n && m.floor() == want && at_rep == Valuation::Finite(want as i64);
            if !ok && failure.is_none() {
                failure = Some(json!({
                    "cell": cell_json(b, f.cell),
                    "class": f.class,
                    "checked_class": t,
                    "degree": deg,
                    "declared_n": f.n,
                    "expected_min": want,
                    "min": m.floor(),
                    "min_at": match &m { ClassMin::Exact { at, .. } => at.to_string(), _ => String::new() },
                    "valuation_at_rep": at_rep.to_string(),
                }));
            }
            row.push(m);
        }
        all.push(row);
    }
    Ok((failure.map_or_else(|| CheckOutcome::pass(name, None), |w| CheckOutcome::fail(name, w)), all))
}

/// Family entries agree with vp(F(r_s)) cell by cell, and class totals
/// coincide.
fn check_totals(ctx: &Parts) -> CheckOutcome {
    let name = CHECK_NAMES[1];
    let b = ctx.bundle;
    for f in &b.factors {
        let v = f.poly.eval(ctx.residues.rep(f.class)).valuation(b.p);
        let entry = ctx.family.entry(f.class, f.cell);
        if v != Valuation::Finite(entry as i64) {
            return CheckOutcome::fail(name, json!({
                "cell": cell_json(b, f.cell),
                "class": f.class,
                "family_entry": entry,
                "valuation_at_rep": v.to_string(),
            }));
        }
    }
    let totals: Vec<u64> = (1..=ctx.family.q).map(|s| ctx.family.total(s)).collect();
    if totals.iter().any(|&t| t != totals[0]) {
        return CheckOutcome::fail(name, json!({ "class_totals": totals }));
    }
    CheckOutcome::pass(name, Some(format!("every class total is {}", totals[0])))
}

fn check_small_primes(ctx: &Parts) -> CheckOutcome {
    let name = CHECK_NAMES[2];
    let b = ctx.bundle;
    for l in primes_up_to(b.sigma).into_iter().filter(|&l| l != b.p) {
        for f in &b.factors {
            let c0 = f.poly.coeff(0);
            if c0.mod_floor(&BigInt::from(l)).is_zero() {
                return CheckOutcome::fail(name, json!({
                    "prime": l,
                    "cell": cell_json(b, f.cell),
                    "class": f.class,
                }));
            }
        }
    }
    CheckOutcome::pass(name, Some(format!("primes above {} are covered by the degree bound", b.sigma)))
}

fn check_degree(ctx: &Parts) -> CheckOutcome {
    let name = CHECK_NAMES[3];
    let b = ctx.bundle;
    let total: u64 = b.factors.iter().map(|f| f.poly.degree().unwrap_or(0) as u64).sum();
    let deg_h = b.h_numerator.degree().unwrap_or(0) as u64;
    let detail = format!(
        "sigma = {} (total factor degree); the single-array total is {}",
        b.sigma,
        b.single_array_total()
    );
    if total <= b.sigma && deg_h == total {
        CheckOutcome::pass(name, Some(detail))
    } else {
        let mut c = CheckOutcome::fail(name, json!({
            "total_degree": total,
            "deg_h_numerator": deg_h,
            "sigma": b.sigma,
            "single_array_total": b.single_array_total(),
        }));
        c.detail = Some(detail);
        c
    }
}

/// Classes where vp(H_numerator(a)) < e for some a, by the direct
/// refinement on H_numerator, with the first witness.
fn direct_integrality(p: u64, h: &IntPoly, e: u64, residues: &ResidueSystem) -> Result<Vec<(usize, ClassMin)>> {
    let mut bad = Vec::new();
    for t in 1..=residues.q() {
        let m = min_valuation_on_class(p, h, t, residues, e + 1)?;
        if m.floor() < e {
            bad.push((t, m));
        }
    }
    Ok(bad)
}

/// Literal scan of H_numerator mod p^e over a in [0, p^e), class by class.
/// `None` when p^e exceeds the cap.
pub fn scan_integrality(p: u64, h: &IntPoly, e: u64, cap: u64) -> Option<Vec<(usize, u64)>> {
    let modulus = (p as u128).checked_pow(e as u32).filter(|&m| m <= cap as u128)?;
    let mb = BigInt::from(modulus);
    let coeffs: Vec<u128> = h.coeffs().iter().map(|c| c.mod_floor(&mb).to_u128().unwrap()).collect();
    let mut bad = Vec::new();
    for s in 0..p as u128 {
        let mut a = s;
        while a < modulus {
            let v = coeffs.iter().rev().fold(0u128, |acc, &c| (acc * a + c) % modulus);
            if v != 0 {
                bad.push((s as usize + 1, a as u64));
                break;
            }
            a += p as u128;
        }
    }
    Some(bad)
}

fn check_integrality(ctx: &Parts, minima: &[Vec<ClassMin>], opts: &CheckOptions) -> Result<CheckOutcome> {
    let name = CHECK_NAMES[4];
    let b = ctx.bundle;
    let q = ctx.family.q;
    // structural: per-class sums of exact factor minima, attained at r_t
    let mut structural = Vec::new();
    for t in 1..=q {
        let sum: u64 = minima.iter().map(|row| row[t - 1].floor()).sum();
        if sum < b.e {
            structural.push((t, sum));
        }
    }
    let direct = direct_integrality(b.p, &b.h_numerator, b.e, ctx.residues)?;
    let scan = scan_integrality(b.p, &b.h_numerator, b.e, opts.exhaustive_cap);

    let s_classes: Vec<usize> = structural.iter().map(|x| x.0).collect();
    let d_classes: Vec<usize> = direct.iter().map(|x| x.0).collect();
    let scan_classes: Option<Vec<usize>> = scan.as_ref().map(|v| v.iter().map(|x| x.0).collect());
    let agree = s_classes == d_classes && scan_classes.as_ref().is_none_or(|c| *c == s_classes);
    let scan_note = match &scan {
        Some(_) => format!("literal scan over {}^{} residues ran", b.p, b.e),
        None => format!("literal scan skipped: {}^{} exceeds the cap {}", b.p, b.e, opts.exhaustive_cap),
    };
    if s_classes.is_empty() && agree {
        return Ok(CheckOutcome::pass(name, Some(format!("structural and direct routes agree; {scan_note}"))));
    }
    let (class, point, valuation) = match (direct.first(), structural.first()) {
        (Some((t, ClassMin::Exact { value, at })), _) => (*t, at.clone(), *value),
        (_, Some(&(t, v))) => (t, ctx.residues.rep(t).clone(), v),
        _ => (0, BigInt::zero(), 0),
    };
    let mut c = CheckOutcome::fail(name, json!({
        "class": class,
        "a": point.to_string(),
        "valuation": valuation,
        "e": b.e,
        "structural_classes": s_classes,
        "direct_classes": d_classes,
        "scan_classes": scan_classes,
        "scan_points": scan.map(|v| v.iter().map(|x| x.1.to_string()).collect::<Vec<_>>()),
        "routes_agree": agree,
    }));
    c.detail = Some(scan_note);
    Ok(c)
}

fn check_templates(ctx: &Parts) -> Result<CheckOutcome> {
    let name = CHECK_NAMES[5];
    let b = ctx.bundle;
    for f in &b.factors {
        let template = f.poly.shift(&-ctx.residues.offset(f.class));
        if !f.poly.is_monic() || !slope_irreducible(b.p, &template)? {
            return Ok(CheckOutcome::fail(name, json!({
                "cell": cell_json(b, f.cell),
                "class": f.class,
            })));
        }
    }
    Ok(CheckOutcome::pass(name, None))
}

/// Re-derives the valuation arrays from the factors themselves and checks
/// that exactly k factorizations with the prescribed lengths exist.
fn check_lengths(ctx: &Parts, opts: &CheckOptions) -> Result<CheckOutcome> {
    let name = CHECK_NAMES[6];
    let b = ctx.bundle;
    let q = ctx.family.q;
    let shape = b.shape()?;
    let mut arrays = vec![vec![0u64; shape.cell_count()]; q];
    for f in &b.factors {
        let v = f.poly.eval(ctx.residues.rep(f.class)).valuation(b.p).finite().unwrap_or(0);
        arrays[f.class - 1][f.cell] = v.max(0) as u64;
    }
    let derived = match ArrayFamily::new(shape, arrays) {
        Ok(f) => f,
        Err(_) => return Ok(CheckOutcome::fail(name, json!({ "reason": "a factor has valuation 0 at its class representative" }))),
    };
    let certs = enumerate_family(&derived, opts.exhaustive_cap, DEFAULT_MAX_STEPS)?;
    let found = lengths_multiset(&certs);
    let product = IntPoly::product(&b.factors.iter().map(|f| f.poly.clone()).collect::<Vec<_>>());
    if found != b.lengths || product != b.h_numerator {
        return Ok(CheckOutcome::fail(name, json!({
            "expected": b.lengths,
            "found": found,
            "product_matches_h_numerator": product == b.h_numerator,
        })));
    }
    Ok(CheckOutcome::pass(name, Some(format!("{} factorizations", certs.len()))))
}

pub fn check_bundle(bundle: &WitnessBundle) -> Result<VerificationReport> {
    check_bundle_with(bundle, &CheckOptions::default())
}

pub fn check_bundle_with(bundle: &WitnessBundle, opts: &CheckOptions) -> Result<VerificationReport> {
    let Some(ctx) = well_formed(bundle)? else {
        let n = bundle.lengths[0];
        let ok = bundle.e == 0 && bundle.h_numerator == IntPoly::monomial(BigInt::one(), n);
        let note = Some("single length: H = X^n with trivial denominator".to_string());
        let checks = CHECK_NAMES
            .iter()
            .map(|&name| {
                if ok {
                    CheckOutcome::pass(name, note.clone())
                } else {
                    CheckOutcome::fail(name, json!({ "reason": "H_numerator is not X^n over denominator 1" }))
                }
            })
            .collect();
        return Ok(VerificationReport { checks });
    };
    let (minima_check, minima) = check_minima(&ctx)?;
    let checks = vec![
        minima_check,
        check_totals(&ctx),
        check_small_primes(&ctx),
        check_degree(&ctx),
        check_integrality(&ctx, &minima, opts)?,
        check_templates(&ctx)?,
        check_lengths(&ctx, opts)?,
    ];
    Ok(VerificationReport { checks })
}

fn covers_once(bundle: &WitnessBundle, cert: &FactorizationCertificate) -> bool {
    let q = bundle.q();
    let full = match bundle.shape() {
        Ok(s) if q > 1 => s.full(),
        _ => (1u64 << bundle.lengths[0]) - 1,
    };
    (0..q).all(|s| {
        let mut seen = 0u64;
        for part in &cert.parts {
            let Some(&set) = part.index_sets.get(s) else { return false };
            if seen & set != 0 {
                return false;
            }
            seen |= set;
        }
        seen == full
    })
}

fn part_items(bundle: &WitnessBundle, part: &Part, modulus: &BigInt) -> Result<Vec<Vec<BigInt>>> {
    let mut items = Vec::new();
    for (s, &set) in part.index_sets.iter().enumerate() {
        for cell in bits(set) {
            let f = bundle
                .factor(cell, s + 1)
                .ok_or_else(|| Error::invalid("part names a missing factor"))?;
            items.push(reduce(f.poly.coeffs(), modulus));
        }
    }
    Ok(items)
}

fn part_product_mod(bundle: &WitnessBundle, part: &Part, modulus: &BigInt) -> Result<Vec<BigInt>> {
    Ok(part_items(bundle, part, modulus)?
        .iter()
        .fold(vec![BigInt::one()], |acc, f| mul_mod(&acc, f, modulus)))
}

/// Exactly k certificates, lengths as prescribed, every part integer-valued,
/// and each certificate's parts multiply back to H.
pub fn certify_lengths(bundle: &WitnessBundle, certs: &[FactorizationCertificate]) -> Result<bool> {
    if certs.len() != bundle.k() || lengths_multiset(certs) != bundle.lengths {
        return Ok(false);
    }
    for cert in certs {
        if !covers_once(bundle, cert) || cert.parts.iter().map(|p| p.e).sum::<u64>() != bundle.e {
            return Ok(false);
        }
        if let Some(residues) = bundle.residues.as_ref() {
            for part in &cert.parts {
                let reduced = part_product_mod(bundle, part, &BigInt::from(bundle.p).pow(part.e as u32 + 1))?;
                if !is_integer_valued(bundle.p, &IntPoly::new(reduced), part.e, residues)? {
                    return Ok(false);
                }
            }
        }
        let numerators = cert
            .parts
            .iter()
            .map(|p| part_numerator(bundle, p))
            .collect::<Result<Vec<_>>>()?;
        if IntPoly::product(&numerators) != bundle.h_numerator {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Report entry for user-supplied certificates, checked with
/// [`certify_lengths`].
pub fn certificates_outcome(bundle: &WitnessBundle, certs: &[FactorizationCertificate]) -> Result<CheckOutcome> {
    let name = "certificates";
    Ok(if certify_lengths(bundle, certs)? {
        CheckOutcome::pass(name, Some(format!("{} certificates reconstruct H", certs.len())))
    } else {
        CheckOutcome::fail(name, json!({
            "certificates": certs.len(),
            "lengths": lengths_multiset(certs),
            "expected": bundle.lengths,
        }))
    })
}

/// G = N / p^e is integer-valued: the minimum of vp(N(a)) on every class
/// reaches e (the denominator has no other primes).
pub fn is_integer_valued(p: u64, numerator: &IntPoly, e: u64, residues: &ResidueSystem) -> Result<bool> {
    if e == 0 {
        return Ok(true);
    }
    for t in 1..=residues.q() {
        if min_valuation_on_class(p, numerator, t, residues, e)?.floor() < e {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Polynomial-level irreducibility cross-check of one part: no split of its
/// factors into two groups, and no constant, yields two integer-valued
/// non-units.
pub fn split_cross_check(bundle: &WitnessBundle, part: &Part) -> Result<bool> {
    let Some(residues) = bundle.residues.as_ref() else {
        // X is irreducible in Int(ℤ): its only divisors are units and itself
        return Ok(true);
    };
    let p = bundle.p;
    let e = part.e;
    let cutoff = e + 1;
    let modulus = BigInt::from(p).pow(cutoff as u32);
    let items = part_items(bundle, part, &modulus)?;
    if items.len() > 24 {
        return Err(Error::capacity(format!("part with {} factors is too large to split", items.len())));
    }
    let min_over_classes = |poly: &[BigInt]| -> Result<u64> {
        let f = IntPoly::new(poly.to_vec());
        let mut best = cutoff;
        for t in 1..=residues.q() {
            best = best.min(min_valuation_on_class(p, &f, t, residues, cutoff)?.floor());
        }
        Ok(best)
    };
    let product = |mask: u64| -> Vec<BigInt> {
        bits(mask).fold(vec![BigInt::one()], |acc, i| mul_mod(&acc, &items[i], &modulus))
    };
    let n = items.len();
    let full = (1u64 << n) - 1;
    // splits containing item 0 on the left
    let mut mask = 1u64;
    while mask < full {
        if mask & 1 == 1 {
            let a = min_over_classes(&product(mask))?.min(e);
            let b = min_over_classes(&product(full & !mask))?.min(e);
            if a + b >= e {
                return Ok(false);
            }
        }
        mask += 1;
    }
    // constant splits: p cannot be pulled out, nor any prime up to the degree
    let numerator = part_numerator(bundle, part)?;
    if min_over_classes(&reduce(numerator.coeffs(), &modulus))? > e {
        return Ok(false);
    }
    let deg = numerator.degree().unwrap_or(0) as u64;
    for l in primes_up_to(deg).into_iter().filter(|&l| l != p) {
        let lb = BigInt::from(l);
        let reduced = reduce(numerator.coeffs(), &lb);
        let divides_all = (0..l).all(|a| {
            let a = BigInt::from(a);
            reduced.iter().rev().fold(BigInt::zero(), |acc, c| (acc * &a + c).mod_floor(&lb)).is_zero()
        });
        if divides_all {
            return Ok(false);
        }
    }
    Ok(true)
}
