//! Exact truncated arithmetic for substitution and trace operators on p-adic
//! power series rings.
//!
//! The crate works with finite-height substitutions s in X*O_K[[X]] (the
//! reduction mod pi is nonzero of order d >= 2) and implements, at
//! controllable finite precision: the operator phi: f -> f(s), the trace
//! operator psi with psi(1) = d, Gauss valuations and Newton polygons, the
//! radius map lambda*, eigenfunctions log_s, Weierstrass preparation and
//! power sums, and the cyclotomic twist/trace machinery, together with
//! verification suites for the identities these operators satisfy.
//!
//! Everything is exact modulo a power of the uniformizer: no floating point
//! appears anywhere, and a quantity that vanishes at the working modulus is
//! reported as "indistinguishable from zero", never asserted to be zero.

pub mod cyclo;
pub mod eigen;
pub mod error;
pub mod field;
pub mod hensel;
pub mod newton;
pub mod psi;
pub mod series;
pub mod subst;
pub mod suite;
pub mod textfmt;

pub use error::{Error, Result};
pub use field::{Field, FieldElement, Valuation};
pub use series::{GaussValue, HiTail, LoTail, Series};
pub use subst::FiniteHeightMap;
