//! Numerical laboratory for Zorich maps.
//!
//! A Zorich map stretches a bi-Lipschitz square-to-hemisphere face map
//! exponentially in the vertical direction and extends it to all of R³ by
//! reflections. This crate builds such maps, iterates them, inverts them
//! branch by branch, computes itineraries and periodic points, and checks
//! the quantitative estimates that govern their escaping and Julia sets.
//! A tile-parallel escape-time renderer sits on top.
//!
//! Module map:
//! - [`geometry`]: points, reflection folding, face maps and their constants
//! - [`map`]: the forward map, orbits, finite-difference Jacobians, `t ↦ κe^t`
//! - [`branches`]: inverse branches, contraction estimates, pullbacks
//! - [`planar`]: the conjugate planar map on the invariant diagonal plane
//! - [`analysis`]: verifiers for determinant, volume, Lipschitz and growth bounds
//! - [`symbolic`]: beams, itineraries, escape classification, periodic points, curves
//! - [`render`]: deterministic tile-parallel slice rendering

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod branches;
mod error;
pub mod geometry;
pub mod map;
pub mod par;
pub mod planar;
pub mod quadrature;
pub mod render;
pub mod sampling;
pub mod symbolic;

pub use error::{Result, ZorichError};
pub use geometry::{FaceKind, FaceModel, MapParams, Vec2, Vec3};
