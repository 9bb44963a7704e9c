//! Level surfaces `S_n` over `B_(0,0)` and the volumes `T_n` of the slabs
//! between consecutive surfaces. Over each of the triangles `Q1, Q2, Q3`
//! tiling `B_(0,0)`, `S_n` is the preimage of one of the planes
//! `x1 + x2 = 2(n+1)λ`, `x1 − x2 = 2(n+1)λ`, `−(x1 + x2) = 2(n+1)λ`.

use serde::Serialize;

use crate::geometry::{MapParams, Vec2, Vec3};
use crate::map::zorich_eval;
use crate::quadrature::Triangle;
use crate::{Result, ZorichError};

/// Closed membership in `B_(0,0) = {|x1 + x2| ≤ 2λ, 0 ≤ x1 − x2 ≤ 2λ}`.
pub fn b00_contains(u: Vec2, lambda: f64) -> bool {
    let tol = 1e-12 * lambda;
    let (s, d) = (u.x1 + u.x2, u.x1 - u.x2);
    s.abs() <= 2.0 * lambda + tol && d >= -tol && d <= 2.0 * lambda + tol
}

/// Which side of the diagonal `x1 = x2` the column over `B_(0,0)` is mapped
/// into, found by probing `Z` at the centre of the rectangle. Returns `+1`
/// for `{x2 < x1}` and `−1` for `{x2 > x1}`.
pub fn b00_image_side(params: &MapParams) -> Result<i8> {
    let probe = Vec3::new(0.5 * params.lambda, -0.5 * params.lambda, 0.0);
    let z = zorich_eval(params, probe)?;
    Ok(if z.x2 < z.x1 { 1 } else { -1 })
}

/// The three triangles tiling `B_(0,0)`; on each, `Z` maps `S_n` into a
/// different plane at level `2(n+1)λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LevelRegion {
    /// `(0,0), (2λ,0), (λ,λ)`: combination `𝔥1 + 𝔥2`.
    Q1,
    /// `(0,0), (2λ,0), (0,−2λ)`: combination `𝔥1 − 𝔥2`.
    Q2,
    /// `(0,0), (−λ,−λ), (0,−2λ)`: combination `−(𝔥1 + 𝔥2)`.
    Q3,
}

impl LevelRegion {
    pub const ALL: [Self; 3] = [Self::Q1, Self::Q2, Self::Q3];

    pub fn triangle(self, lambda: f64) -> Triangle {
        let o = Vec2::new(0.0, 0.0);
        match self {
            Self::Q1 => Triangle(o, Vec2::new(2.0 * lambda, 0.0), Vec2::new(lambda, lambda)),
            Self::Q2 => Triangle(o, Vec2::new(2.0 * lambda, 0.0), Vec2::new(0.0, -2.0 * lambda)),
            Self::Q3 => Triangle(o, Vec2::new(-lambda, -lambda), Vec2::new(0.0, -2.0 * lambda)),
        }
    }

    /// The linear form whose level set `2(n+1)λ` is the image plane.
    pub fn combination(self, h: Vec3) -> f64 {
        match self {
            Self::Q1 => h.x1 + h.x2,
            Self::Q2 => h.x1 - h.x2,
            Self::Q3 => -(h.x1 + h.x2),
        }
    }
}

pub fn level_region(u: Vec2, lambda: f64) -> Result<LevelRegion> {
    if !b00_contains(u, lambda) {
        return Err(ZorichError::domain(format!("({}, {}) is outside B_(0,0)", u.x1, u.x2)));
    }
    if u.x2 >= 0.0 {
        Ok(LevelRegion::Q1)
    } else if u.x1 >= 0.0 {
        Ok(LevelRegion::Q2)
    } else {
        Ok(LevelRegion::Q3)
    }
}

/// Height of `S_n` over `u ∈ B_(0,0)`:
/// `x3 = ln(2(n+1)λ / (ν·c(u)))`, where `c` is the region's combination of
/// the face coordinates. Fails where `c(u) = 0` (the surface is unbounded
/// there).
pub fn level_surface_height(params: &MapParams, n: u32, u: Vec2) -> Result<f64> {
    let region = level_region(u, params.lambda)?;
    let h = params.face.eval(fold(u, params.lambda)?, params.lambda)?;
    let c = region.combination(h);
    if !(c > 0.0) {
        return Err(ZorichError::Singular(format!("level surface unbounded over ({}, {})", u.x1, u.x2)));
    }
    Ok((2.0 * (n as f64 + 1.0) * params.lambda / (params.nu * c)).ln())
}

fn fold(u: Vec2, lambda: f64) -> Result<Vec2> {
    Ok(crate::geometry::fold_plane(u, lambda)?.u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelSurfaceSample {
    pub point: Vec3,
    pub region: LevelRegion,
    /// The region's linear form evaluated at `Z(point)`; equals `2(n+1)λ`.
    pub image_level: f64,
}

/// `(u, height)` lifted to 3D and mapped forward, for forward checks.
pub fn level_surface_sample(params: &MapParams, n: u32, u: Vec2) -> Result<LevelSurfaceSample> {
    let x3 = level_surface_height(params, n, u)?;
    let region = level_region(u, params.lambda)?;
    let point = Vec3::new(u.x1, u.x2, x3);
    let z = zorich_eval(params, point)?;
    Ok(LevelSurfaceSample { point, region, image_level: region.combination(z) })
}

/// Centroids closer than this (relative to `λ`) to a point where the surfaces
/// are unbounded are dropped; the singularities are logarithmic.
const NOTCH: f64 = 1e-6;

/// `∫_{B_(0,0)} F(u) du` with `F` the height of `S_n`, computed with the
/// centroid rule on `res²` sub-triangles per region.
pub fn volume_in(params: &MapParams, n: u32, res: usize) -> f64 {
    integrate_heights(params, res, |u| level_surface_height(params, n, u).ok())
}

/// `T_n`: volume between `S_n` and `S_{n+1}`. Returns
/// `(quadrature, closed form 4λ²·ln((n+2)/(n+1)))`.
pub fn volume_tn(params: &MapParams, n: u32, res: usize) -> (f64, f64) {
    let numeric = integrate_heights(params, res, |u| {
        Some(level_surface_height(params, n + 1, u).ok()? - level_surface_height(params, n, u).ok()?)
    });
    let lambda = params.lambda;
    let exact = 4.0 * lambda * lambda * ((n as f64 + 2.0) / (n as f64 + 1.0)).ln();
    (numeric, exact)
}

fn integrate_heights(params: &MapParams, res: usize, f: impl Fn(Vec2) -> Option<f64> + Sync + Send) -> f64 {
    let lambda = params.lambda;
    let notch = NOTCH * lambda;
    LevelRegion::ALL
        .iter()
        .map(|r| {
            r.triangle(lambda).integrate(res, |u| {
                // The combinations vanish on the boundary of the region's
                // fold-cell pieces, i.e. at the origin and at corners.
                let corners = [Vec2::new(0.0, 0.0), Vec2::new(2.0 * lambda, 0.0), Vec2::new(0.0, -2.0 * lambda)];
                if corners.iter().any(|c| (u - *c).norm() < notch) {
                    return None;
                }
                f(u)
            })
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FaceKind;

    #[test]
    fn surfaces_map_onto_planes() {
        let p = MapParams::sphere(2.0, 1.0).unwrap();
        for u in [Vec2::new(1.0, 0.3), Vec2::new(0.5, -1.5), Vec2::new(-0.4, -0.9), Vec2::new(3.0, -0.5)] {
            for n in 0..4 {
                let s = level_surface_sample(&p, n, u).unwrap();
                assert!((s.image_level - 2.0 * (n as f64 + 1.0) * 2.0).abs() < 1e-9, "{u:?} n={n}");
            }
        }
        assert_eq!(b00_image_side(&p).unwrap(), 1);
        assert!(level_surface_height(&p, 0, Vec2::new(0.0, 0.0)).is_err());
        assert!(level_surface_height(&p, 0, Vec2::new(3.0, 2.0)).is_err());
    }

    #[test]
    fn height_examples() {
        let p = MapParams::sphere(2.0, 1.0).unwrap();
        assert!((level_surface_height(&p, 0, Vec2::new(2.0, 0.0)).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!(level_surface_height(&p, 0, Vec2::new(2e-5 * 0.7, 0.0)).unwrap() > 10.0);
        let (_, exact) = volume_tn(&p, 0, 16);
        assert!((exact - 11.09035).abs() < 1e-5);
        let tns: Vec<f64> = (0..=10).map(|n| volume_tn(&p, n, 16).0).collect();
        assert!(tns.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn tn_matches_closed_form() {
        for face in [FaceKind::Sphere, FaceKind::Pyramid] {
            let p = MapParams::new(1.5, 0.8, face).unwrap();
            for n in 0..3 {
                let (num, exact) = volume_tn(&p, n, 40);
                // The integrand is constant away from the notches.
                assert!((num - exact).abs() < 1e-4 * exact, "{num} {exact}");
            }
        }
    }

    #[test]
    fn in_is_additive() {
        let p = MapParams::sphere(1.0, 1.0).unwrap();
        let i0 = volume_in(&p, 0, 30);
        let i3 = volume_in(&p, 3, 30);
        let sum: f64 = (0..3).map(|n| volume_tn(&p, n, 30).0).sum();
        assert!((i0 + sum - i3).abs() < 1e-9 * i3.abs().max(1.0));
    }
}
