//! Sampled constants of a face: bi-Lipschitz ratios, minimum norm and the
//! non-tangential angle. All estimates are deterministic given a seed and
//! monotone in the sample count (sample sets are nested).

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{FaceKind, Vec2};
use crate::sampling::blocked_map;
use crate::{Result, ZorichError};

/// Structured prefix: a 9×9 grid of anchors, 8 directions each.
const ANCHOR_GRID: usize = 9;
const ANCHOR_DIRS: usize = 8;
const ANCHOR_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilipschitzEstimate {
    pub l_hat: f64,
    pub ell_hat: f64,
    /// Pair attaining `l_hat` (unit-square coordinates).
    pub upper_pair: (Vec2, Vec2),
    /// Pair attaining `ell_hat`.
    pub lower_pair: (Vec2, Vec2),
    pub pairs_used: usize,
}

fn clamp_unit(v: Vec2) -> Vec2 {
    Vec2::new(v.x1.clamp(-1.0, 1.0), v.x2.clamp(-1.0, 1.0))
}

fn uniform_square(rng: &mut ChaCha8Rng) -> Vec2 {
    Vec2::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
}

fn close_partner(rng: &mut ChaCha8Rng, u: Vec2, log_min: f64, log_max: f64) -> Vec2 {
    let delta = 10f64.powf(-rng.random_range(log_min..log_max));
    let phi = rng.random_range(0.0..2.0 * PI);
    clamp_unit(u + Vec2::new(phi.cos(), phi.sin()) * delta)
}

fn anchor_pair(i: usize) -> (Vec2, Vec2) {
    let a = i / ANCHOR_DIRS;
    let k = i % ANCHOR_DIRS;
    let step = 2.0 / (ANCHOR_GRID - 1) as f64;
    let u = Vec2::new(-1.0 + step * (a % ANCHOR_GRID) as f64, -1.0 + step * (a / ANCHOR_GRID) as f64);
    let phi = 2.0 * PI * k as f64 / ANCHOR_DIRS as f64;
    (u, clamp_unit(u + Vec2::new(phi.cos(), phi.sin()) * ANCHOR_STEP))
}

fn bilipschitz_pair(rng: &mut ChaCha8Rng, i: usize) -> (Vec2, Vec2) {
    if i < ANCHOR_GRID * ANCHOR_GRID * ANCHOR_DIRS {
        return anchor_pair(i);
    }
    let u = uniform_square(rng);
    if rng.random_range(0..4) == 0 {
        (u, uniform_square(rng))
    } else {
        (u, close_partner(rng, u, 1.0, 6.0))
    }
}

fn reduce_ratios(kind: &FaceKind, pairs: impl Iterator<Item = (Vec2, Vec2)>) -> Option<BilipschitzEstimate> {
    let mut est: Option<BilipschitzEstimate> = None;
    for (u, v) in pairs {
        let d = (u - v).norm();
        if !(d > 1e-14) {
            continue;
        }
        let ratio = (kind.eval_unit(u) - kind.eval_unit(v)).norm() / d;
        let e = est.get_or_insert(BilipschitzEstimate {
            l_hat: ratio,
            ell_hat: ratio,
            upper_pair: (u, v),
            lower_pair: (u, v),
            pairs_used: 0,
        });
        e.pairs_used += 1;
        if ratio > e.l_hat {
            e.l_hat = ratio;
            e.upper_pair = (u, v);
        }
        if ratio < e.ell_hat {
            e.ell_hat = ratio;
            e.lower_pair = (u, v);
        }
    }
    est
}

/// Max and min of `|𝔥(u) − 𝔥(v)|/|u − v|` over `n_samples` sampled pairs of
/// the unscaled face.
pub fn estimate_bilipschitz(kind: &FaceKind, n_samples: usize, seed: u64) -> Result<BilipschitzEstimate> {
    if n_samples < 2 {
        return Err(ZorichError::domain("bi-Lipschitz estimation needs at least 2 samples"));
    }
    let pairs = blocked_map(n_samples, seed, bilipschitz_pair);
    reduce_ratios(kind, pairs.into_iter()).ok_or_else(|| ZorichError::domain("all sampled pairs were degenerate"))
}

/// Bi-Lipschitz ratios restricted to close pairs inside the disk of radius
/// `radius` about `center` (unit-square coordinates).
pub fn local_bilipschitz(
    kind: &FaceKind,
    center: Vec2,
    radius: f64,
    n_samples: usize,
    seed: u64,
) -> Result<BilipschitzEstimate> {
    let pairs = blocked_map(n_samples, seed, |rng, _| {
        let r = radius * rng.random::<f64>().sqrt();
        let phi = rng.random_range(0.0..2.0 * PI);
        let u = clamp_unit(center + Vec2::new(phi.cos(), phi.sin()) * r);
        (u, close_partner(rng, u, 3.0, 7.0))
    });
    reduce_ratios(kind, pairs.into_iter()).ok_or_else(|| ZorichError::domain("all sampled pairs were degenerate"))
}

/// Minimum of `|𝔥|` over a `(4k+1)²` grid on the unit square.
pub fn estimate_min_norm(kind: &FaceKind, n_samples: usize) -> f64 {
    let side = (((n_samples as f64).sqrt() as usize).clamp(64, 2000) / 4) * 4 + 1;
    let step = 2.0 / (side - 1) as f64;
    let rows = crate::par::map_indexed(side, |a| {
        (0..side)
            .map(|b| kind.eval_unit(Vec2::new(-1.0 + step * a as f64, -1.0 + step * b as f64)).norm())
            .fold(f64::INFINITY, f64::min)
    });
    rows.into_iter().fold(f64::INFINITY, f64::min)
}

const ANGLE_GRID: usize = 17;
const ANGLE_DIRS: usize = 16;

fn angle_pair(rng: &mut ChaCha8Rng, i: usize) -> (Vec2, Vec2) {
    if i < ANGLE_GRID * ANGLE_GRID * ANGLE_DIRS {
        let a = i / ANGLE_DIRS;
        let k = i % ANGLE_DIRS;
        let step = 2.0 / (ANGLE_GRID - 1) as f64;
        let u = Vec2::new(-1.0 + step * (a % ANGLE_GRID) as f64, -1.0 + step * (a / ANGLE_GRID) as f64);
        let phi = 2.0 * PI * k as f64 / ANGLE_DIRS as f64;
        return (u, clamp_unit(u + Vec2::new(phi.cos(), phi.sin()) * 1e-5));
    }
    let u = uniform_square(rng);
    (u, close_partner(rng, u, 3.0, 6.0))
}

/// Minimum over sampled close pairs `(z, w)` on the surface of the acute
/// angle between the position vector `z` and the chord `z − w`.
pub fn estimate_face_angle(kind: &FaceKind, n_samples: usize, seed: u64) -> Result<f64> {
    if n_samples < 2 {
        return Err(ZorichError::domain("angle estimation needs at least 2 samples"));
    }
    let angles = blocked_map(n_samples, seed ^ 0x9e37_79b9_7f4a_7c15, |rng, i| {
        let (u, v) = angle_pair(rng, i);
        let z = kind.eval_unit(u);
        let chord = z - kind.eval_unit(v);
        let denom = z.norm() * chord.norm();
        if !(denom > 1e-300) || chord.norm() < 1e-15 {
            return None;
        }
        Some((z.dot(chord).abs() / denom).min(1.0).acos())
    });
    angles
        .into_iter()
        .flatten()
        .reduce(f64::min)
        .ok_or_else(|| ZorichError::domain("all sampled angle pairs were degenerate"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn pyramid_lipschitz_at_least_sqrt2() {
        let p = FaceKind::Pyramid;
        let r = (p.eval_unit(Vec2::new(0.0, 0.0)) - p.eval_unit(Vec2::new(1.0, 0.0))).norm();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
        let est = estimate_bilipschitz(&p, 20_000, 1).unwrap();
        assert!(est.l_hat >= 2f64.sqrt() - 1e-9 && est.l_hat <= 2f64.sqrt() + 1e-9);
        assert!((est.ell_hat - 1.0).abs() < 1e-6);
    }

    #[test]
    fn estimates_are_deterministic_and_monotone() {
        let a = estimate_bilipschitz(&FaceKind::Sphere, 5000, 3).unwrap();
        let b = estimate_bilipschitz(&FaceKind::Sphere, 5000, 3).unwrap();
        assert_eq!(a, b);
        let c = estimate_bilipschitz(&FaceKind::Sphere, 10_000, 3).unwrap();
        assert!(c.l_hat >= a.l_hat && c.ell_hat <= a.ell_hat);
        let t1 = estimate_face_angle(&FaceKind::Sphere, 6000, 3).unwrap();
        let t2 = estimate_face_angle(&FaceKind::Sphere, 12_000, 3).unwrap();
        assert!(t2 <= t1);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        assert!(estimate_bilipschitz(&FaceKind::Sphere, 1, 0).is_err());
        assert!(estimate_face_angle(&FaceKind::Sphere, 1, 0).is_err());
    }

    #[test]
    fn sphere_angle_is_nearly_right() {
        let t = estimate_face_angle(&FaceKind::Sphere, 20_000, 5).unwrap();
        assert!(t >= FRAC_PI_4 - 0.01);
        assert!(t <= std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn min_norms() {
        assert!((estimate_min_norm(&FaceKind::Sphere, 10_000) - 1.0).abs() < 1e-12);
        assert!((estimate_min_norm(&FaceKind::Pyramid, 10_000) - 0.5f64.sqrt()).abs() < 1e-12);
    }
}
