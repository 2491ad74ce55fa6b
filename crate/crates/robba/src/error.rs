//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("not a prime: {0}")]
    NotPrime(u64),
    #[error("polynomial is not Eisenstein: {0}")]
    NotEisenstein(String),
    #[error("elements belong to different fields")]
    FieldMismatch,
    #[error("division by an element indistinguishable from zero")]
    DivisionByIndistinguishableZero,
    #[error("result precision exhausted")]
    PrecisionExhausted,
    #[error("requested precision {requested} exceeds the {limit} supported for p = {p}")]
    PrecisionUnsupported { p: u64, requested: i64, limit: i64 },
    #[error("Hensel criterion fails: val f(x0) must exceed 2 val f'(x0)")]
    HenselCriterionFails,
    #[error("empty output window")]
    EmptyWindow,
    #[error("composition does not converge: constant term of the inner series is a unit")]
    NonConvergentComposition,
    #[error("Weierstrass degree undetermined on the stored window")]
    WidegUndetermined,
    #[error("all coefficients indistinguishable from zero")]
    AllCoefficientsIndistinguishable,
    #[error("series is not integral")]
    NotIntegral,
    #[error("constant term is not indistinguishable from zero")]
    ConstantTermNotZero,
    #[error("substitution has Weierstrass degree one")]
    HeightOne,
    #[error("working modulus exhausted: {0}")]
    ModulusExhausted(String),
    #[error("two-factor Hensel lift stalled: residual failed to vanish")]
    LiftStalled,
    #[error("discriminant indistinguishable from zero")]
    DiscriminantIndistinguishableFromZero,
    #[error("product did not stabilize within {0} factors")]
    NoStabilization(usize),
    #[error("s'(0) indistinguishable from zero")]
    SPrimeZeroIndistinguishable,
    #[error("Mahler tail not certified at the requested precision")]
    TailNotCertified,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
}
