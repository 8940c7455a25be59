//! JSON artifacts. Arbitrary-size integers are written as base-10 strings;
//! shapes, cell coordinates (1-based) and class indices are plain numbers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::exactnum::ResidueSystem;
use crate::facto::{FactorizationCertificate, Part};
use crate::forge::{IrreducibleFactor, WitnessBundle};
use crate::gridcomb::{bits, ArrayFamily, CellSet, CollisionReport, GridShape};
use crate::poly::Poly;
use crate::verify::VerificationReport;
use crate::{IntPoly, RatPoly};

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn field<'a>(obj: &'a Value, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| parse_err(format!("missing field \"{key}\"")))
}

fn as_array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| parse_err(format!("{what} must be an array")))
}

fn big(v: &Value, what: &str) -> Result<BigInt> {
    match v {
        Value::String(s) => s.parse().map_err(|_| parse_err(format!("{what}: bad integer {s:?}"))),
        Value::Number(n) if n.is_i64() || n.is_u64() => Ok(n.to_string().parse().expect("integral number")),
        _ => Err(parse_err(format!("{what} must be an integer string"))),
    }
}

fn uint(v: &Value, what: &str) -> Result<u64> {
    big(v, what)?.try_into().map_err(|_| parse_err(format!("{what} out of range")))
}

fn index(v: &Value, what: &str) -> Result<usize> {
    usize::try_from(uint(v, what)?).map_err(|_| parse_err(format!("{what} out of range")))
}

pub fn int_poly_to_json(f: &IntPoly) -> Value {
    Value::Array(f.coeffs().iter().map(|c| Value::String(c.to_string())).collect())
}

pub fn int_poly_from_json(v: &Value) -> Result<IntPoly> {
    let coeffs = as_array(v, "polynomial")?
        .iter()
        .map(|c| big(c, "coefficient"))
        .collect::<Result<Vec<_>>>()?;
    Ok(Poly::new(coeffs))
}

pub fn rat_poly_to_json(f: &RatPoly) -> Value {
    Value::Array(
        f.coeffs()
            .iter()
            .map(|c| {
                if c.denom().is_one() {
                    Value::String(c.numer().to_string())
                } else {
                    Value::String(format!("{}/{}", c.numer(), c.denom()))
                }
            })
            .collect(),
    )
}

pub fn rat_poly_from_json(v: &Value) -> Result<RatPoly> {
    let coeffs = as_array(v, "polynomial")?
        .iter()
        .map(|c| {
            let s = c.as_str().ok_or_else(|| parse_err("coefficient must be a string"))?;
            let (n, d) = s.split_once('/').unwrap_or((s, "1"));
            let n: BigInt = n.parse().map_err(|_| parse_err(format!("bad rational {s:?}")))?;
            let d: BigInt = d.parse().map_err(|_| parse_err(format!("bad rational {s:?}")))?;
            if d == BigInt::from(0) {
                return Err(parse_err("zero denominator"));
            }
            Ok(BigRational::new(n, d))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Poly::new(coeffs))
}

fn cell_to_json(shape: &GridShape, cell: usize) -> Value {
    json!(shape.coords(cell).iter().map(|c| c + 1).collect::<Vec<_>>())
}

fn cell_from_json(shape: &GridShape, v: &Value) -> Result<usize> {
    let coords = as_array(v, "cell")?
        .iter()
        .map(|c| index(c, "cell coordinate"))
        .collect::<Result<Vec<_>>>()?;
    if coords.contains(&0) {
        return Err(parse_err("cell coordinates are 1-based"));
    }
    let zero_based: Vec<usize> = coords.iter().map(|c| c - 1).collect();
    shape.index(&zero_based).ok_or_else(|| parse_err(format!("cell {coords:?} outside the grid")))
}

pub fn family_to_json(f: &ArrayFamily) -> Value {
    json!({
        "shape": f.shape.dims(),
        "q": f.q,
        "arrays": f.arrays.iter()
            .map(|a| a.iter().map(|x| x.to_string()).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    })
}

pub fn family_from_json(v: &Value) -> Result<ArrayFamily> {
    let dims = as_array(field(v, "shape")?, "shape")?
        .iter()
        .map(|d| index(d, "shape entry"))
        .collect::<Result<Vec<_>>>()?;
    let shape = GridShape::new(dims)?;
    let arrays = as_array(field(v, "arrays")?, "arrays")?
        .iter()
        .map(|a| as_array(a, "array")?.iter().map(|x| uint(x, "entry")).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let family = ArrayFamily::new(shape, arrays)?;
    if let Some(q) = v.get("q") {
        if index(q, "q")? != family.q {
            return Err(parse_err("q disagrees with the number of arrays"));
        }
    }
    Ok(family)
}

/// The family plus the collision transcript produced by verify_family.
pub fn family_with_transcript(f: &ArrayFamily, report: &CollisionReport, round: u64) -> Value {
    let mut v = family_to_json(f);
    let violations: Vec<Value> = report
        .violations
        .iter()
        .map(|c| {
            json!({
                "value": c.value.to_string(),
                "achievers": c.achievers.iter()
                    .map(|per| per.iter().map(|&set| cells_json(&f.shape, set)).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
            })
        })
        .collect();
    v["transcript"] = json!({
        "round": round.to_string(),
        "passed": report.passed,
        "common_values": report.common_values.to_string(),
        "violation_count": report.violation_count.to_string(),
        "violations": violations,
    });
    v
}

fn cells_json(shape: &GridShape, set: CellSet) -> Value {
    Value::Array(bits(set).map(|c| cell_to_json(shape, c)).collect())
}

pub fn bundle_to_json(b: &WitnessBundle) -> Value {
    let shape = b.shape().ok();
    let factors: Vec<Value> = b
        .factors
        .iter()
        .map(|f| {
            json!({
                "cell": shape.as_ref().map_or(Value::Null, |s| cell_to_json(s, f.cell)),
                "class": f.class,
                "n": f.n.to_string(),
                "m": f.m.to_string(),
                "coeffs": int_poly_to_json(&f.poly),
            })
        })
        .collect();
    json!({
        "p": b.p.to_string(),
        "lengths": b.lengths,
        "seed": b.seed.to_string(),
        "sigma": b.sigma.to_string(),
        "e": b.e.to_string(),
        "residues": b.residues.as_ref().map_or(vec![], |r| r.reps.iter().map(|x| x.to_string()).collect::<Vec<_>>()),
        "family": b.family.as_ref().map_or(Value::Null, family_to_json),
        "factors": factors,
        "H_numerator": int_poly_to_json(&b.h_numerator),
    })
}

pub fn bundle_from_json(v: &Value) -> Result<WitnessBundle> {
    if !v.is_object() {
        return Err(parse_err("bundle must be a JSON object"));
    }
    let p = uint(field(v, "p")?, "p")?;
    let lengths = as_array(field(v, "lengths")?, "lengths")?
        .iter()
        .map(|x| index(x, "length"))
        .collect::<Result<Vec<_>>>()?;
    if lengths.is_empty() {
        return Err(parse_err("lengths must be nonempty"));
    }
    let sigma = uint(field(v, "sigma")?, "sigma")?;
    let reps = as_array(field(v, "residues")?, "residues")?
        .iter()
        .map(|x| big(x, "residue"))
        .collect::<Result<Vec<_>>>()?;
    let residues = (!reps.is_empty()).then_some(ResidueSystem { p, sigma, reps });
    let family = match field(v, "family")? {
        Value::Null => None,
        f => Some(family_from_json(f)?),
    };
    let mut factors = Vec::new();
    for f in as_array(field(v, "factors")?, "factors")? {
        let shape = family.as_ref().map(|fam| &fam.shape).ok_or_else(|| parse_err("factors without a family"))?;
        factors.push(IrreducibleFactor {
            cell: cell_from_json(shape, field(f, "cell")?)?,
            class: index(field(f, "class")?, "class")?,
            n: uint(field(f, "n")?, "n")?,
            m: uint(field(f, "m")?, "m")?,
            poly: int_poly_from_json(field(f, "coeffs")?)?,
        });
    }
    Ok(WitnessBundle {
        p,
        lengths,
        seed: uint(field(v, "seed")?, "seed")?,
        sigma,
        e: uint(field(v, "e")?, "e")?,
        residues,
        family,
        factors,
        h_numerator: int_poly_from_json(field(v, "H_numerator")?)?,
    })
}

/// Cells of a part, per class. A single-length bundle has no grid; its
/// parts are written as 1-based positions of the factor X.
fn part_sets_json(shape: Option<&GridShape>, part: &Part) -> Value {
    Value::Array(
        part.index_sets
            .iter()
            .map(|&set| match shape {
                Some(s) => cells_json(s, set),
                None => Value::Array(bits(set).map(|i| json!([i + 1])).collect()),
            })
            .collect(),
    )
}

pub fn certificates_to_json(bundle: &WitnessBundle, certs: &[FactorizationCertificate]) -> Value {
    let shape = if bundle.k() > 1 { bundle.shape().ok() } else { None };
    Value::Array(
        certs
            .iter()
            .map(|c| {
                json!({
                    "length": c.length(),
                    "parts": c.parts.iter().map(|p| json!({
                        "e": p.e.to_string(),
                        "index_sets": part_sets_json(shape.as_ref(), p),
                    })).collect::<Vec<_>>(),
                })
            })
            .collect(),
    )
}

pub fn certificates_from_json(bundle: &WitnessBundle, v: &Value) -> Result<Vec<FactorizationCertificate>> {
    let shape = if bundle.k() > 1 { Some(bundle.shape()?) } else { None };
    let single = *bundle.lengths.first().unwrap_or(&0);
    let mut out = Vec::new();
    for c in as_array(v, "certificates")? {
        let mut parts = Vec::new();
        for p in as_array(field(c, "parts")?, "parts")? {
            let mut index_sets = Vec::new();
            for cells in as_array(field(p, "index_sets")?, "index_sets")? {
                let mut set: CellSet = 0;
                for cell in as_array(cells, "cells")? {
                    let idx = match &shape {
                        Some(s) => cell_from_json(s, cell)?,
                        None => {
                            let pos = as_array(cell, "cell")?.first().map(|x| index(x, "position")).transpose()?;
                            match pos {
                                Some(i) if i >= 1 && i <= single => i - 1,
                                _ => return Err(parse_err("position outside 1..=n")),
                            }
                        }
                    };
                    set |= 1 << idx;
                }
                index_sets.push(set);
            }
            parts.push(Part { index_sets, e: uint(field(p, "e")?, "e")? });
        }
        let cert = FactorizationCertificate { parts };
        if let Some(len) = c.get("length") {
            if index(len, "length")? != cert.length() {
                return Err(parse_err("length disagrees with the number of parts"));
            }
        }
        out.push(cert);
    }
    Ok(out)
}

pub fn report_to_json(r: &VerificationReport) -> Value {
    let verdict = |ok: bool| if ok { "pass" } else { "fail" };
    json!({
        "verdict": verdict(r.passed()),
        "checks": r.checks.iter().map(|c| {
            let mut m = Map::new();
            m.insert("name".into(), json!(c.name));
            m.insert("verdict".into(), json!(verdict(c.passed)));
            m.insert("witness".into(), c.witness.clone().unwrap_or(Value::Null));
            if let Some(d) = &c.detail {
                m.insert("detail".into(), json!(d));
            }
            Value::Object(m)
        }).collect::<Vec<_>>(),
    })
}

pub fn parse(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| parse_err(format!("invalid JSON: {e}")))
}

pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable value");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge::{assemble, forge_witness};

    fn good_bundle() -> WitnessBundle {
        let shape = GridShape::new(vec![2, 2]).unwrap();
        let fam = ArrayFamily::new(shape, vec![vec![2, 5, 9, 14], vec![3, 4, 8, 15]]).unwrap();
        assemble(2, vec![2, 2], 3, fam, 1 << 31).unwrap()
    }

    #[test]
    fn bundle_round_trip() {
        let b = good_bundle();
        let v = bundle_to_json(&b);
        assert_eq!(v["e"], json!("30"));
        assert_eq!(v["factors"][1]["cell"], json!([1, 1]));
        assert_eq!(v["factors"][1]["class"], json!(2));
        assert_eq!(v["family"]["arrays"][0][1], json!("5"));
        let back = bundle_from_json(&parse(&render(&v)).unwrap()).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn single_length_round_trip() {
        let b = forge_witness(3, &[3], 0).unwrap();
        let v = bundle_to_json(&b);
        assert_eq!(v["family"], Value::Null);
        assert_eq!(v["H_numerator"], json!(["0", "0", "0", "1"]));
        assert_eq!(bundle_from_json(&v).unwrap(), b);
        let certs = vec![crate::facto::single_length_certificate(3)];
        let cv = certificates_to_json(&b, &certs);
        assert_eq!(certificates_from_json(&b, &cv).unwrap(), certs);
    }

    #[test]
    fn certificates_round_trip() {
        let b = good_bundle();
        let certs = crate::facto::enumerate_factorizations(&b).unwrap();
        let v = certificates_to_json(&b, &certs);
        assert_eq!(v[0]["length"], json!(2));
        assert_eq!(certificates_from_json(&b, &v).unwrap(), certs);
    }

    #[test]
    fn rational_polys() {
        let f = RatPoly::new(vec![BigRational::new(1.into(), 2.into()), BigRational::from_integer(3.into())]);
        let v = rat_poly_to_json(&f);
        assert_eq!(v, json!(["1/2", "3"]));
        assert_eq!(rat_poly_from_json(&v).unwrap(), f);
        assert!(rat_poly_from_json(&json!(["1/0"])).is_err());
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(parse("{\"p\": "), Err(Error::Parse(_))));
        assert!(bundle_from_json(&json!([])).is_err());
        let mut v = bundle_to_json(&good_bundle());
        v["factors"][0]["cell"] = json!([3, 1]);
        assert!(bundle_from_json(&v).is_err());
        v["factors"][0]["cell"] = json!([0, 1]);
        assert!(bundle_from_json(&v).is_err());
        let mut v = bundle_to_json(&good_bundle());
        v["e"] = json!("x");
        assert!(matches!(bundle_from_json(&v), Err(Error::Parse(_))));
    }
}
