//! Integer-valued polynomials over ℤ with a prescribed system of
//! factorization lengths, built from p-adic valuation data and certified
//! by exhaustive exact checks.
//!
//! The pipeline is [`forge::forge_witness`] → [`facto::enumerate_factorizations`]
//! → [`verify::check_bundle`] / [`verify::certify_lengths`].

pub mod error;
pub mod exactnum;
pub mod facto;
pub mod forge;
pub mod gridcomb;
pub mod json;
pub mod poly;
pub mod verify;

pub use error::{Error, Result};
pub use exactnum::{PValued, ResidueSystem, Scalar, Valuation};
pub use facto::{FactorizationCertificate, Part};
pub use forge::{ForgeParams, IrreducibleFactor, WitnessBundle};
pub use gridcomb::{ArrayFamily, CellSet, CollisionReport, GridShape, SearchParams};
pub use poly::{NewtonPolygon, Poly};
pub use verify::VerificationReport;

pub type Integer = num_bigint::BigInt;
pub type Rational = num_rational::BigRational;
pub type IntPoly = Poly<Integer>;
pub type RatPoly = Poly<Rational>;
