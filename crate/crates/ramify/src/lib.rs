//! Ramified power-series solutions of `u_tt - u_x u_xx = 0`.
//!
//! The solution is sought as `u = sum_k (1/k)(-p b_{k-1} + 3 b_{k-3}) z^k` where `z`
//! solves `z^3 = p z + q`. The crate provides truncated bivariate series, the algebra
//! generated by `z`, the fixed-point map producing `(p, q, b_k)`, Burgers equation
//! utilities and exact polynomial ideal checks.

pub mod burgers;
pub mod fixedpoint;
pub mod ideals;
pub mod scalar;
pub mod series;
pub mod zring;

pub use scalar::Real;
pub use series::{Segment, SeriesError, TruncatedSeries2, Var};
pub use twofloat::TwoFloat;

/// Series at the default (about 30 significant digits) working precision.
pub type Series = TruncatedSeries2<TwoFloat>;
/// Series in plain double precision.
pub type Series64 = TruncatedSeries2<f64>;


/// Element of the `z`-algebra at the default precision.
pub type ZElem = zring::ZElement<TwoFloat>;
/// Solution data at the default precision.
pub type Solution = fixedpoint::SolutionData<TwoFloat>;
