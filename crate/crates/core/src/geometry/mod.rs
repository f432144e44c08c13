//! Convex bodies described by support functions.
//!
//! Everything is computed from the support function `h` and its 1-homogeneous extension
//! `H(v) = |v| h(v/|v|)`: boundary points are `∇H(u)`, and the tangential Hessian of `H` is the
//! reverse Weingarten map `R(u)` (principal radii of curvature). Orientation is always the
//! outward normal, which makes `R` positive semi-definite.

mod body;
mod curvature;
mod direction;
mod frame;

pub use body::{BodyKind, ConvexBody, DerivativeMode, FD_HESSIAN_STEP};
pub use curvature::{CurvatureData, SINGULAR_RELATIVE_DET};
pub use direction::{equidistributed, Direction};
pub use frame::TangentFrame;

