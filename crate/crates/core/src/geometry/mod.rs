//! Points, the reflection group of the square beam, and face maps.

mod estimate;
mod face;

pub use estimate::{
    estimate_bilipschitz, estimate_face_angle, estimate_min_norm, local_bilipschitz,
    BilipschitzEstimate,
};
pub use face::{
    face_pyramid_eval, face_pyramid_invert, face_sphere_eval, face_sphere_invert, ray_invert_unit,
    BlendedFace, FaceKind, FaceModel, RadialProfile,
};

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::{Result, ZorichError};

/// Default natural-log height above which `e^{x3}` is not evaluated.
pub const DEFAULT_OVERFLOW_GUARD: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x1: f64,
    pub x2: f64,
}

impl Vec2 {
    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn norm(self) -> f64 {
        (self.x1 * self.x1 + self.x2 * self.x2).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    /// Swap the coordinates (the reflection across `x1 = x2`).
    pub fn swap(self) -> Self {
        Self::new(self.x2, self.x1)
    }
}

impl Add for Vec2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x1 + o.x1, self.x2 + o.x2)
    }
}

impl Sub for Vec2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x1 - o.x1, self.x2 - o.x2)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x1 * s, self.x2 * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl Vec3 {
    pub const fn new(x1: f64, x2: f64, x3: f64) -> Self {
        Self { x1, x2, x3 }
    }

    /// Horizontal projection `p(x) = (x1, x2)`.
    pub fn p(self) -> Vec2 {
        Vec2::new(self.x1, self.x2)
    }

    /// Height `p3(x) = x3`.
    pub fn p3(self) -> f64 {
        self.x3
    }

    pub fn norm(self) -> f64 {
        (self.x1 * self.x1 + self.x2 * self.x2 + self.x3 * self.x3).sqrt()
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x1 * o.x1 + self.x2 * o.x2 + self.x3 * o.x3
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.x2 * o.x3 - self.x3 * o.x2,
            self.x3 * o.x1 - self.x1 * o.x3,
            self.x1 * o.x2 - self.x2 * o.x1,
        )
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite() && self.x3.is_finite()
    }

    /// `σ(x1, x2, x3) = (x2, x1, x3)`.
    pub fn sigma(self) -> Self {
        Self::new(self.x2, self.x1, self.x3)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x1, self.x2, self.x3]
    }
}

impl Add for Vec3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x1 + o.x1, self.x2 + o.x2, self.x3 + o.x3)
    }
}

impl Sub for Vec3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x1 - o.x1, self.x2 - o.x2, self.x3 - o.x3)
    }
}

impl Neg for Vec3 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x1, -self.x2, -self.x3)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x1 * s, self.x2 * s, self.x3 * s)
    }
}

/// One Zorich map instance: scale `lambda`, multiplier `nu`, and a face.
#[derive(Debug, Clone)]
pub struct MapParams {
    pub lambda: f64,
    pub nu: f64,
    pub face: FaceKind,
    /// Heights above this are reported as overflow instead of evaluated.
    pub overflow_guard: f64,
}

impl MapParams {
    pub fn new(lambda: f64, nu: f64, face: FaceKind) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(ZorichError::domain(format!("lambda must be > 0, got {lambda}")));
        }
        if !(nu.is_finite() && nu > 0.0) {
            return Err(ZorichError::domain(format!("nu must be > 0, got {nu}")));
        }
        Ok(Self { lambda, nu, face, overflow_guard: DEFAULT_OVERFLOW_GUARD })
    }

    pub fn sphere(lambda: f64, nu: f64) -> Result<Self> {
        Self::new(lambda, nu, FaceKind::Sphere)
    }

    pub fn pyramid(lambda: f64, nu: f64) -> Result<Self> {
        Self::new(lambda, nu, FaceKind::Pyramid)
    }

    pub fn with_guard(mut self, guard: f64) -> Self {
        self.overflow_guard = guard;
        self
    }

    /// `κ = νλ`, the multiplier of the axis dynamics.
    pub fn kappa(&self) -> f64 {
        self.nu * self.lambda
    }
}

/// Result of folding a planar point into the fundamental square `λQ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldResult {
    pub u: Vec2,
    /// Total reflection count mod 2.
    pub parity: u8,
    /// Cell `(r1, r2)`: the point lies in the square centred at `2λ(r1, r2)`.
    pub cell: (i64, i64),
}

/// Cell index of `t` for the reflection lines `t = (2k+1)λ`.
///
/// Cell `r` is `(2λr − λ, 2λr + λ]`; points on a line go to the lower cell.
pub fn fold_cell(t: f64, lambda: f64) -> i64 {
    ((t - lambda) / (2.0 * lambda)).ceil() as i64
}

/// Beyond `2⁵²` cells the reflection parity is no longer representable.
const MAX_CELLS: f64 = 4_503_599_627_370_496.0;

fn check_foldable(t: f64, lambda: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(ZorichError::domain(format!("cannot fold non-finite coordinate {t}")));
    }
    if !(lambda > 0.0) {
        return Err(ZorichError::domain(format!("lambda must be > 0, got {lambda}")));
    }
    if t.abs() / lambda > MAX_CELLS {
        return Err(ZorichError::domain(format!("coordinate {t:e} is too large to fold at lambda = {lambda}")));
    }
    Ok(())
}

/// Fold `t` into `[−λ, λ]` by reflections across `t = (2k+1)λ`.
///
/// Returns the folded value and the number of reflections used.
pub fn fold_coordinate(t: f64, lambda: f64) -> Result<(f64, u64)> {
    check_foldable(t, lambda)?;
    let r = fold_cell(t, lambda);
    Ok((fold_in_cell(t, r, lambda), r.unsigned_abs()))
}

fn fold_in_cell(t: f64, r: i64, lambda: f64) -> f64 {
    let local = t - 2.0 * lambda * r as f64;
    let folded = if r.rem_euclid(2) == 0 { local } else { -local };
    folded.clamp(-lambda, lambda)
}

/// Inverse of folding within a given cell.
pub fn unfold_coordinate(v: f64, r: i64, lambda: f64) -> f64 {
    let signed = if r.rem_euclid(2) == 0 { v } else { -v };
    2.0 * lambda * r as f64 + signed
}

pub fn fold_plane(x: Vec2, lambda: f64) -> Result<FoldResult> {
    check_foldable(x.x1, lambda)?;
    check_foldable(x.x2, lambda)?;
    let r1 = fold_cell(x.x1, lambda);
    let r2 = fold_cell(x.x2, lambda);
    Ok(FoldResult {
        u: Vec2::new(fold_in_cell(x.x1, r1, lambda), fold_in_cell(x.x2, r2, lambda)),
        parity: ((r1 + r2).rem_euclid(2)) as u8,
        cell: (r1, r2),
    })
}

/// Distance from `x` to the nearest seam: a reflection line `x_i = (2k+1)λ`
/// or a diagonal kink line `x1 ± x2 = 2λk`.
pub fn seam_distance(x: Vec2, lambda: f64) -> f64 {
    let to_reflection = |t: f64| {
        let r = fold_cell(t, lambda);
        lambda - (t - 2.0 * lambda * r as f64).abs()
    };
    let to_diagonal = |s: f64| {
        let period = 2.0 * lambda;
        (s - period * (s / period).round()).abs() / std::f64::consts::SQRT_2
    };
    to_reflection(x.x1)
        .min(to_reflection(x.x2))
        .min(to_diagonal(x.x1 - x.x2))
        .min(to_diagonal(x.x1 + x.x2))
}
