//! Face maps from the square onto a star-shaped cap over it.
//!
//! Every face here is *radial*: with `q(v) = (v1, v2, 1 − max(|v1|,|v2|))`
//! the unscaled face is `𝔥(v) = R(q̂)·q̂` for a radius profile `R` of the unit
//! direction `q̂`. The sphere has `R ≡ 1`, the pyramid has `R = |q|`. All radial
//! faces share one closed-form inverse on rays, [`ray_invert_unit`].

use std::fmt;
use std::sync::Arc;

use super::{Vec2, Vec3};
use crate::{Result, ZorichError};

const SQUARE_TOL: f64 = 1e-12;
const SURFACE_TOL: f64 = 1e-9;

/// Radius of a user-supplied star-shaped surface along a unit direction in
/// the closed upper half-space.
///
/// A valid profile is positive, continuous, equals 1 at the pole, and is
/// invariant under `(d1, d2) ↦ (d2, d1)`, `(d1, d2) ↦ (−d1, d2)`.
pub trait RadialProfile: Send + Sync + fmt::Debug {
    fn radius(&self, dir: Vec3) -> f64;
    fn name(&self) -> &str;
}

/// Convex combination of the sphere and pyramid radius profiles.
#[derive(Debug, Clone, Copy)]
pub struct BlendedFace {
    /// 0 gives the sphere, 1 the pyramid.
    pub weight: f64,
}

impl RadialProfile for BlendedFace {
    fn radius(&self, dir: Vec3) -> f64 {
        let pyramid = 1.0 / (dir.x3 + dir.x1.abs().max(dir.x2.abs()));
        (1.0 - self.weight) + self.weight * pyramid
    }

    fn name(&self) -> &str {
        "blended"
    }
}

#[derive(Debug, Clone)]
pub enum FaceKind {
    Sphere,
    Pyramid,
    Generalized(Arc<dyn RadialProfile>),
}

impl FaceKind {
    pub fn name(&self) -> &str {
        match self {
            Self::Sphere => "sphere",
            Self::Pyramid => "pyramid",
            Self::Generalized(p) => p.name(),
        }
    }

    /// Unscaled face `𝔥` on the unit square `Q = [−1,1]²`.
    pub fn eval_unit(&self, v: Vec2) -> Vec3 {
        let q = Vec3::new(v.x1, v.x2, 1.0 - v.x1.abs().max(v.x2.abs()));
        match self {
            Self::Pyramid => q,
            Self::Sphere => q * (1.0 / q.norm()),
            Self::Generalized(profile) => {
                let dir = q * (1.0 / q.norm());
                dir * profile.radius(dir)
            }
        }
    }

    /// Scaled face `h(u) = λ𝔥(u/λ)` on `λQ`.
    pub fn eval(&self, u: Vec2, lambda: f64) -> Result<Vec3> {
        check_in_square(u, lambda)?;
        Ok(match self {
            Self::Pyramid => Vec3::new(u.x1, u.x2, lambda - u.x1.abs().max(u.x2.abs())),
            _ => self.eval_unit(Vec2::new(u.x1 / lambda, u.x2 / lambda)) * lambda,
        })
    }

    /// The point `u ∈ λQ` whose face image lies on the ray through `w`.
    pub fn invert_ray(&self, w: Vec3, lambda: f64) -> Result<Vec2> {
        Ok(ray_invert_unit(w)? * lambda)
    }
}

fn check_in_square(u: Vec2, lambda: f64) -> Result<()> {
    let bound = lambda * (1.0 + SQUARE_TOL);
    if !u.is_finite() || u.x1.abs() > bound || u.x2.abs() > bound {
        return Err(ZorichError::domain(format!("point {u:?} lies outside the square of half-width {lambda}")));
    }
    Ok(())
}

/// Shared inverse of all radial faces on the unit square: the `v ∈ Q` whose
/// face image points along `w` (any positive multiple).
pub fn ray_invert_unit(w: Vec3) -> Result<Vec2> {
    if !w.is_finite() {
        return Err(ZorichError::domain(format!("non-finite ray direction {w:?}")));
    }
    let m = w.x1.abs().max(w.x2.abs());
    let denom = w.x3 + m;
    if m == 0.0 && w.x3 == 0.0 {
        return Err(ZorichError::domain("zero ray direction"));
    }
    if w.x3 < -SURFACE_TOL * w.norm() || !(denom > 0.0) {
        return Err(ZorichError::domain(format!("ray {w:?} points below the face")));
    }
    let v = Vec2::new(w.x1 / denom, w.x2 / denom);
    Ok(Vec2::new(v.x1.clamp(-1.0, 1.0), v.x2.clamp(-1.0, 1.0)))
}

pub fn face_sphere_eval(u: Vec2, lambda: f64) -> Result<Vec3> {
    FaceKind::Sphere.eval(u, lambda)
}

/// Inverse of the spherical face; `s` must lie on the upper hemisphere of
/// radius `λ`.
pub fn face_sphere_invert(s: Vec3, lambda: f64) -> Result<Vec2> {
    let r = s.norm();
    if !((r - lambda).abs() <= SURFACE_TOL * lambda) {
        return Err(ZorichError::domain(format!("|s| = {r} is not the hemisphere radius {lambda}")));
    }
    if s.x3 < -SURFACE_TOL * lambda {
        return Err(ZorichError::domain(format!("s = {s:?} lies below the equator")));
    }
    let s_hat = s * (1.0 / lambda);
    let mu = 1.0 / (s_hat.x3.max(0.0) + s_hat.x1.abs().max(s_hat.x2.abs()));
    Ok(Vec2::new(
        (lambda * mu * s_hat.x1).clamp(-lambda, lambda),
        (lambda * mu * s_hat.x2).clamp(-lambda, lambda),
    ))
}

pub fn face_pyramid_eval(u: Vec2, lambda: f64) -> Result<Vec3> {
    FaceKind::Pyramid.eval(u, lambda)
}

/// Inverse of the pyramid face along the ray through `w` (`w3 ≥ 0`, `w ≠ 0`).
pub fn face_pyramid_invert(w: Vec3, lambda: f64) -> Result<Vec2> {
    FaceKind::Pyramid.invert_ray(w, lambda)
}

/// A face together with its sampled constants.
#[derive(Debug, Clone)]
pub struct FaceModel {
    pub kind: FaceKind,
    /// Upper bi-Lipschitz constant of the unscaled face.
    pub l_hat: f64,
    /// Lower Lipschitz ratio of the unscaled face.
    pub ell_hat: f64,
    /// `min |𝔥|` over the unit square.
    pub min_norm: f64,
    /// Non-tangential angle between position vectors and the surface.
    pub theta_s: f64,
}

impl FaceModel {
    /// Estimate every constant from `n_samples` seeded samples.
    pub fn estimate(kind: FaceKind, n_samples: usize, seed: u64) -> Result<Self> {
        let bl = super::estimate_bilipschitz(&kind, n_samples, seed)?;
        let theta_s = super::estimate_face_angle(&kind, n_samples, seed)?;
        let min_norm = super::estimate_min_norm(&kind, n_samples);
        Ok(Self { kind, l_hat: bl.l_hat.max(1.0), ell_hat: bl.ell_hat.min(1.0), min_norm, theta_s })
    }

    /// A model with externally supplied constants.
    pub fn with_constants(kind: FaceKind, l_hat: f64, ell_hat: f64, min_norm: f64, theta_s: f64) -> Self {
        Self { kind, l_hat, ell_hat, min_norm, theta_s }
    }

    pub fn eval(&self, u: Vec2, lambda: f64) -> Result<Vec3> {
        self.kind.eval(u, lambda)
    }

    pub fn invert_ray(&self, w: Vec3, lambda: f64) -> Result<Vec2> {
        self.kind.invert_ray(w, lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sphere_examples() {
        assert_eq!(face_sphere_eval(Vec2::new(0.0, 0.0), 2.0).unwrap(), Vec3::new(0.0, 0.0, 2.0));
        assert_eq!(face_sphere_eval(Vec2::new(2.0, 0.0), 2.0).unwrap(), Vec3::new(2.0, 0.0, 0.0));
        let s = face_sphere_eval(Vec2::new(2.0, 2.0), 2.0).unwrap();
        assert!((s - Vec3::new(2f64.sqrt(), 2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert_eq!(face_sphere_invert(Vec3::new(0.0, 0.0, 2.0), 2.0).unwrap(), Vec2::new(0.0, 0.0));
        assert_eq!(face_sphere_invert(Vec3::new(2.0, 0.0, 0.0), 2.0).unwrap(), Vec2::new(2.0, 0.0));
        assert!(face_sphere_eval(Vec2::new(2.1, 0.0), 2.0).is_err());
        assert!(face_sphere_invert(Vec3::new(3.0, 0.0, 0.0), 2.0).is_err());
        assert!(face_sphere_invert(Vec3::new(0.0, 0.0, -2.0), 2.0).is_err());
    }

    #[test]
    fn pyramid_examples() {
        assert_eq!(face_pyramid_eval(Vec2::new(0.0, 0.0), 2.0).unwrap(), Vec3::new(0.0, 0.0, 2.0));
        assert_eq!(face_pyramid_eval(Vec2::new(2.0, 1.0), 2.0).unwrap(), Vec3::new(2.0, 1.0, 0.0));
        assert_eq!(face_pyramid_eval(Vec2::new(1.0, -1.0), 2.0).unwrap(), Vec3::new(1.0, -1.0, 1.0));
        assert_eq!(face_pyramid_invert(Vec3::new(0.0, 0.0, 1.0), 2.0).unwrap(), Vec2::new(0.0, 0.0));
        assert_eq!(face_pyramid_invert(Vec3::new(1.0, 0.0, 0.0), 2.0).unwrap(), Vec2::new(2.0, 0.0));
        assert!(face_pyramid_invert(Vec3::new(0.0, 0.0, 0.0), 2.0).is_err());
    }

    fn faces() -> Vec<FaceKind> {
        vec![FaceKind::Sphere, FaceKind::Pyramid, FaceKind::Generalized(Arc::new(BlendedFace { weight: 0.5 }))]
    }

    proptest! {
        #[test]
        fn sphere_has_radius_lambda(a in -1.0f64..=1.0, b in -1.0f64..=1.0, lambda in 0.1f64..50.0) {
            let s = face_sphere_eval(Vec2::new(a * lambda, b * lambda), lambda).unwrap();
            prop_assert!((s.norm() - lambda).abs() <= 1e-12 * lambda);
            prop_assert!(s.x3 >= 0.0);
        }

        #[test]
        fn sphere_roundtrip(a in -0.999f64..0.999, b in -0.999f64..0.999, lambda in 0.1f64..50.0) {
            let u = Vec2::new(a * lambda, b * lambda);
            let s = face_sphere_eval(u, lambda).unwrap();
            let back = face_sphere_invert(s, lambda).unwrap();
            prop_assert!((back - u).norm() < 1e-10 * lambda.max(1.0));
        }

        #[test]
        fn sphere_invert_from_hemisphere(theta in 0.0f64..std::f64::consts::FRAC_PI_2, phi in 0.0f64..std::f64::consts::TAU) {
            let s = Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()) * 3.0;
            let u = face_sphere_invert(s, 3.0).unwrap();
            prop_assert!((face_sphere_eval(u, 3.0).unwrap() - s).norm() < 1e-12 * 3.0);
        }

        #[test]
        fn pyramid_ray_inversion_is_collinear(w1 in -5.0f64..5.0, w2 in -5.0f64..5.0, w3 in 0.01f64..5.0, lambda in 0.5f64..10.0) {
            let w = Vec3::new(w1, w2, w3);
            let u = face_pyramid_invert(w, lambda).unwrap();
            let s = face_pyramid_eval(u, lambda).unwrap();
            prop_assert!(s.cross(w).norm() < 1e-10 * (1.0 + w.norm() * s.norm()));
            prop_assert!(s.dot(w) > 0.0);
        }

        #[test]
        fn faces_roundtrip_and_symmetries(a in -0.999f64..0.999, b in -0.999f64..0.999, lambda in 0.5f64..40.0) {
            for face in faces() {
                let u = Vec2::new(a * lambda, b * lambda);
                let h = face.eval(u, lambda).unwrap();
                let back = face.invert_ray(h, lambda).unwrap();
                prop_assert!((back - u).norm() < 1e-10 * lambda);
                let hs = face.eval(u.swap(), lambda).unwrap();
                prop_assert_eq!(hs, Vec3::new(h.x2, h.x1, h.x3));
                let d = face.eval(Vec2::new(u.x1, u.x1), lambda).unwrap();
                prop_assert_eq!(d.x1, d.x2);
                let ad = face.eval(Vec2::new(u.x1, -u.x1), lambda).unwrap();
                prop_assert_eq!(ad.x1, -ad.x2);
            }
        }
    }
}
