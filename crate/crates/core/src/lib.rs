//! Probabilistic degeneracy detection for point-to-plane registration.
//!
//! The noise on points and surface normals is propagated into the 6×6
//! Gauss-Newton Hessian of the point-to-plane problem. For every eigen
//! direction of the noisy Hessian the crate estimates the mean and variance
//! of the noise entering that direction and the probability that the true
//! information exceeds the noise by a factor `s`. Those probabilities drive a
//! degeneracy-aware ICP update that smoothly attenuates the step along
//! directions dominated by noise.
//!
//! All twists and 6-vectors are ordered `[δr; δt]` (rotation first). Lengths
//! are meters, angles radians.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! parallel drivers live in the `degen-icp` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod degeneracy;
pub mod error;
pub mod geometry;
pub mod kdtree;
pub mod linalg;
pub mod normals;
pub mod registration;
pub mod simulation;

pub use error::Error;

pub type Result<T> = core::result::Result<T, Error>;
