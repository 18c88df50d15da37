//! Numerical laboratory for the anisotropic power weight
//! `w(x) = |x'|^θ1 |x|^θ2 |x_n|^θ3` on `ℝⁿ`.
//!
//! * [`weights`]: pointwise evaluation and exact region classification.
//! * [`quad`]: integration of the weight and of weighted functionals over balls,
//!   half-balls and axis-aligned cylinders.
//! * [`muckenhoupt`]: A_p quotients, doubling ratios, ball families and divergence probes.
//! * [`ineq`]: analytic test functions and the weighted Sobolev, Poincaré and
//!   isoperimetric checks.
//! * [`plap`]: P1 finite elements for the weighted p-Laplacian on the half-ball and
//!   regularity diagnostics.

pub mod error;
pub mod ineq;
pub mod muckenhoupt;
pub mod numeric;
pub mod plap;
pub mod quad;
pub mod weights;

pub use error::{Error, Result};
pub use weights::{ProbeExponents, RegionReport, WeightParams, WeightValue};

/// Version string embedded in every serialized report.
pub const VERSION: &str = concat!("anisoweight ", env!("CARGO_PKG_VERSION"));
