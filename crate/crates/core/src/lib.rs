//! Twisted moments of long Dirichlet polynomials with Hecke coefficients.
//!
//! The left side of the moment identity is computed twice: from exact Hecke
//! eigensystems of level-1 cusp forms ([`moments::lhs_direct`]) and from the
//! Petersson trace formula, which needs no eigenforms at all
//! ([`moments::lhs_petersson`]). The right side ([`recipe`]) is assembled from
//! zeta-regularized Euler products of Sato–Tate integrals and vertical-line
//! Mellin integrals. Every finite identity the comparison rests on (Chebyshev
//! and Hecke linearization, Ramanujan-sum tables, the residue identity of the
//! one-swap term) has an exact checker.
//!
//! Numerical kernels that do not depend on arithmetic data are generic over
//! the scalar type through [`Real`]; the pipeline itself runs in `f64`.

// `!(x > 0.0)` is how inputs reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Reference values keep every digit of the high-precision computation.
#![allow(clippy::excessive_precision)]
// Index loops that follow the summation indices of the formulas.
#![allow(clippy::needless_range_loop)]

pub mod arith;
pub mod chebyshev;
pub mod error;
pub mod localfactors;
pub mod modforms;
pub mod moments;
pub mod quad;
pub mod recipe;
pub mod report;
pub mod special;

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps};

pub use error::{Error, Result};
pub use localfactors::{ShiftSet, TruncationPolicy};
pub use modforms::Eigensystem;
pub use moments::MomentReport;
pub use special::SmoothWeight;

/// Floating-point scalar accepted by the generic numerical kernels.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssignOps + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal; exact for every constant used in this crate.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type Complex<T> = num_complex::Complex<T>;
pub type Complex64 = num_complex::Complex<f64>;
pub type Complex32 = num_complex::Complex<f32>;
/// Exact rationals, used for Hecke matrices and the exact identity mode.
pub type Rational = num_rational::BigRational;
pub type BigInt = num_bigint::BigInt;
