//! Exact-arithmetic engine and numerical solver for the qq/pq-systems
//! attached to simple Lie superalgebras.
//!
//! The crate is organized around a small scalar abstraction ([`scalar::Scalar`])
//! so the same polynomial and rational-function machinery runs in two lanes:
//!
//! - an exact lane over Gaussian rationals ([`scalar::Gauss`]) used for all
//!   verification work (residuals must vanish identically, not approximately),
//! - a floating lane over [`num_complex::Complex64`] used by the multi-start
//!   Newton solver for Bethe roots.
//!
//! Modules:
//! - [`rootdata`]: Dynkin diagrams of simple Lie superalgebras, node coloring,
//!   super Cartan matrices, even Weyl reflections on twists, odd reflections
//!   on parity words.
//! - [`poly`] / [`ratfunc`]: dense univariate polynomials and irreducible
//!   fractions, Wronskians, logarithmic derivatives, squarefree radicals.
//! - [`qqsystem`]: system instances (diagram + twist + sources), residual
//!   evaluation for the qq- and pq-forms, nondegeneracy reports, and the
//!   sl(n|m) / osp(m|2n) family builders.
//! - [`bethe`]: Bethe equations generated from a system, a damped multi-start
//!   Newton solver, and the root-to-solution reconstruction.
//! - [`backlund`]: Weyl swaps, Bäcklund gauge data, odd reproduction steps,
//!   and populations.
//! - [`psdo`]: differential operators with rational coefficients, signed
//!   factor chains, and chain equality via cross-multiplication.
//! - [`operconn`]: matrix realizations of rank-1 Miura connections, gauge
//!   action, Z-twist and 2x2 block checks.
//! - [`json`]: the batch file formats shared with the command-line tool.

pub mod scalar;
pub mod poly;
pub mod ratfunc;
pub mod linalg;
pub mod rootdata;
pub mod qqsystem;
pub mod bethe;
pub mod backlund;
pub mod psdo;
pub mod operconn;
pub mod json;

pub use num_complex::Complex64;
pub use num_rational::BigRational;

pub use scalar::{Gauss, Scalar};

/// Exact rational number, the coefficient type of Cartan matrices.
pub type Rat = BigRational;

/// Polynomial over the exact Gaussian-rational scalar.
pub type GPoly = poly::Poly<Gauss>;
/// Rational function over the exact Gaussian-rational scalar.
pub type GRatFunc = ratfunc::RatFunc<Gauss>;
/// Polynomial over complex double precision, the solver lane.
pub type CPoly = poly::Poly<Complex64>;
/// Rational function over complex double precision.
pub type CRatFunc = ratfunc::RatFunc<Complex64>;

/// System instance over the exact scalar, the form every builder produces.
pub type ExactSpec = qqsystem::QqSpec<Gauss>;
/// Solution data over the exact scalar.
pub type ExactSolution = qqsystem::QqSolution<Gauss>;


