//! Growth estimates: ascent near the axis, Lipschitz bounds for iterates, and
//! the inequality that selects the depth `N` of the key construction.

use rand::Rng;
use serde::Serialize;

use crate::geometry::{FaceModel, MapParams, Vec2, Vec3};
use crate::map::{zorich_eval, ExpFamily};
use crate::sampling::blocked_map;
use crate::{Result, ZorichError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ascent {
    pub epsilon: f64,
    /// Radius of the disk about the axis on which `𝔥3 > λ − ε`.
    pub delta: f64,
    /// `1 + ln(ν(λ − ε))`: every point of the cylinder over the disk rises by
    /// more than this in one step.
    pub c: f64,
}

fn min_height_on_disk(params: &MapParams, r: f64) -> f64 {
    let mut min = f64::INFINITY;
    for k in 1..=8 {
        let rho = r * k as f64 / 8.0;
        for a in 0..720 {
            let t = a as f64 * std::f64::consts::TAU / 720.0;
            if let Ok(h) = params.face.eval(Vec2::new(rho * t.cos(), rho * t.sin()), params.lambda) {
                min = min.min(h.x3);
            }
        }
    }
    min
}

/// Largest (bisected) `δ ≤ λ` with `𝔥3 > λ − ε` on the disk of radius `δ`,
/// and the ascent constant `c`. Requires `ν(λ − ε) > 1/e` so that `c > 0`.
pub fn ascent_constant(params: &MapParams, epsilon: f64) -> Result<Ascent> {
    let lambda = params.lambda;
    if !(epsilon > 0.0 && epsilon < lambda) {
        return Err(ZorichError::domain(format!("epsilon must lie in (0, λ), got {epsilon}")));
    }
    let k = params.nu * (lambda - epsilon);
    if k <= (-1.0f64).exp() {
        return Err(ZorichError::Regime(format!("ν(λ − ε) = {k} does not exceed 1/e")));
    }
    let ok = |r: f64| min_height_on_disk(params, r) > lambda - epsilon;
    let delta = if ok(lambda) {
        lambda
    } else {
        let (mut lo, mut hi) = (0.0, lambda);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    Ok(Ascent { epsilon, delta, c: 1.0 + k.ln() })
}

/// Samples points of the cylinder over the disk with `x3 ∈ [−5, 5]` and
/// counts those with `Z(x)_3 ≤ x3 + c`. Returns `(checked, failures)`.
pub fn ascent_check(params: &MapParams, ascent: &Ascent, n: usize, seed: u64) -> (usize, usize) {
    let failures = blocked_map(n, seed, |rng, _| {
        let rho = ascent.delta * rng.random::<f64>().sqrt();
        let t = rng.random_range(0.0..std::f64::consts::TAU);
        let x = Vec3::new(rho * t.cos(), rho * t.sin(), rng.random_range(-5.0..5.0));
        match zorich_eval(params, x) {
            Ok(z) => z.x3 <= x.x3 + ascent.c,
            Err(_) => true,
        }
    });
    (n, failures.into_iter().filter(|&f| f).count())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub r: f64,
    /// Requested iterate.
    pub n_requested: usize,
    /// Iterate actually checked (smaller when `Eⁿ(r)` overflows).
    pub n_used: usize,
    pub truncated: bool,
    pub pairs: usize,
    /// Largest `|Zⁿa − Zⁿb| / (Bₙ|a − b|)`; at most 1 when the bound holds.
    pub worst_ratio: f64,
    pub worst_pair: Option<(Vec3, Vec3)>,
    pub ok: bool,
}

/// Checks `|Zⁿa − Zⁿb| ≤ (max(L,λ)/λ)ⁿ ∏_{k=1}^n E^k(r) · |a − b|` for sampled
/// pairs in the ball `B(0, r)`, with `E(t) = νλe^t`. The bound is formed in
/// log space; `n` is reduced to the largest value with finite `Eⁿ(r)`.
pub fn verify_lipschitz_iterates(
    params: &MapParams,
    model: &FaceModel,
    r: f64,
    n: usize,
    pairs: usize,
    seed: u64,
) -> Result<LipschitzReport> {
    let family = ExpFamily::new(params.kappa())?;
    let mut log_bound = 0.0;
    let mut t = r;
    let mut n_used = 0;
    let step_factor = (model.l_hat.max(params.lambda) / params.lambda).ln();
    for _ in 0..n {
        if t > params.overflow_guard {
            break;
        }
        t = family.apply(t);
        log_bound += step_factor + t.ln();
        n_used += 1;
    }
    let ratios = blocked_map(pairs, seed, |rng, i| {
        let a = ball_point(rng, r);
        let b = if i % 4 == 0 {
            ball_point(rng, r)
        } else {
            let delta = r * 10f64.powf(-rng.random_range(0.0..6.0));
            let dir = unit(rng);
            let b = a + dir * delta;
            if b.norm() < r {
                b
            } else {
                a - dir * delta
            }
        };
        if !(b.norm() < r) || a == b {
            return None;
        }
        let (mut za, mut zb) = (a, b);
        for _ in 0..n_used {
            za = zorich_eval(params, za).ok()?;
            zb = zorich_eval(params, zb).ok()?;
        }
        let log_ratio = (za - zb).norm().ln() - (a - b).norm().ln() - log_bound;
        Some((log_ratio.exp(), a, b))
    });
    let mut report = LipschitzReport {
        r,
        n_requested: n,
        n_used,
        truncated: n_used < n,
        pairs: 0,
        worst_ratio: 0.0,
        worst_pair: None,
        ok: true,
    };
    for (ratio, a, b) in ratios.into_iter().flatten() {
        report.pairs += 1;
        if ratio > report.worst_ratio {
            report.worst_ratio = ratio;
            report.worst_pair = Some((a, b));
        }
    }
    report.ok = report.worst_ratio <= 1.0 + 1e-3;
    Ok(report)
}

fn unit(rng: &mut impl Rng) -> Vec3 {
    let a: f64 = rng.random_range(-1.0..1.0);
    let b = rng.random_range(0.0..std::f64::consts::TAU);
    let s = (1.0 - a * a).sqrt();
    Vec3::new(s * b.cos(), s * b.sin(), a)
}

fn ball_point(rng: &mut impl Rng, r: f64) -> Vec3 {
    unit(rng) * (r * rng.random::<f64>().cbrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KeyInequality {
    /// Smallest `N` with the inequality satisfied at `c = E^N(0) − λ`.
    pub n: usize,
    pub c: f64,
    pub log_lhs: f64,
    /// `ln λ`.
    pub log_rhs: f64,
    /// The inequality also held for the next five depths.
    pub persists: bool,
}

/// Log of `(c+λ)^{ln(c+λ)+1}·e^{c+λ}·ν²λ²·e^{−νλe^c/2}`; `−∞` once the
/// exponential damping overflows.
pub fn key_inequality_log_lhs(params: &MapParams, c: f64) -> f64 {
    let kappa = params.kappa();
    let damping = ((kappa / 2.0).ln() + c).exp();
    if !c.is_finite() || !damping.is_finite() {
        return f64::NEG_INFINITY;
    }
    let t = c + params.lambda;
    let lt = t.ln();
    (lt + 1.0) * lt + t + 2.0 * kappa.ln() - damping
}

/// The same quantity evaluated directly (overflows for moderate `c`).
pub fn key_inequality_naive(params: &MapParams, c: f64) -> f64 {
    let kappa = params.kappa();
    let t = c + params.lambda;
    t.powf(t.ln() + 1.0) * t.exp() * kappa * kappa * (-kappa * c.exp() / 2.0).exp()
}

/// Smallest depth `N` for which the key inequality `lhs ≤ λ` holds at
/// `c = E^N(0) − λ`. Requires `νλ > 1/e`, so that `E^N(0) → ∞`.
pub fn key_inequality_n(params: &MapParams) -> Result<KeyInequality> {
    let kappa = params.kappa();
    if kappa <= (-1.0f64).exp() {
        return Err(ZorichError::Regime(format!("νλ = {kappa} does not exceed 1/e; E^N(0) stays bounded")));
    }
    let family = ExpFamily::new(kappa)?;
    let next = |t: f64| if t > params.overflow_guard { f64::INFINITY } else { family.apply(t) };
    let log_rhs = params.lambda.ln();
    let mut t = 0.0;
    for n in 1..=1_000_000usize {
        t = next(t);
        let c = t - params.lambda;
        let log_lhs = key_inequality_log_lhs(params, c);
        if log_lhs <= log_rhs {
            let mut s = t;
            let persists = (0..5).all(|_| {
                s = next(s);
                key_inequality_log_lhs(params, s - params.lambda) <= log_rhs
            });
            return Ok(KeyInequality { n, c, log_lhs, log_rhs, persists });
        }
    }
    Err(ZorichError::NoConvergence { rounds: 1_000_000, last_step: t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FaceKind;

    #[test]
    fn ascent_on_axis() {
        let p = MapParams::sphere(2.0, 1.0).unwrap();
        let a = ascent_constant(&p, 0.1).unwrap();
        assert!((a.c - (1.0 + 1.9f64.ln())).abs() < 1e-15);
        assert!(a.delta > 0.0 && a.delta < 2.0);
        assert_eq!(ascent_check(&p, &a, 2000, 3).1, 0);
        let low = MapParams::sphere(2.0, 0.1).unwrap();
        assert!(matches!(ascent_constant(&low, 0.1), Err(ZorichError::Regime(_))));
    }

    #[test]
    fn ascent_constant_limit() {
        let p = MapParams::sphere(std::f64::consts::E, 1.0).unwrap();
        let a = ascent_constant(&p, 1e-9).unwrap();
        assert!((a.c - 2.0).abs() < 1e-8);
        let boundary = MapParams::sphere(1.0, (-1.0f64).exp()).unwrap();
        assert!(ascent_constant(&boundary, 0.01).is_err());
    }

    #[test]
    fn key_inequality_log_matches_naive() {
        let p = MapParams::sphere(8.0, 1.0).unwrap();
        for c in [-1.0, 0.0, 1.0, 2.0, 3.0] {
            let naive = key_inequality_naive(&p, c);
            assert!((key_inequality_log_lhs(&p, c) - naive.ln()).abs() < 1e-10);
        }
        let k = key_inequality_n(&p).unwrap();
        assert!(k.persists && k.log_lhs <= k.log_rhs);
        assert!(k.c > 0.0);
        let below = MapParams::sphere(1.0, (-1.0f64).exp()).unwrap();
        assert!(matches!(key_inequality_n(&below), Err(ZorichError::Regime(_))));
    }

    #[test]
    fn lipschitz_small_ball() {
        let p = MapParams::sphere(2.0, 0.3).unwrap();
        let m = FaceModel::with_constants(FaceKind::Sphere, 2.0, 0.38, 1.0, 1.5);
        let r = verify_lipschitz_iterates(&p, &m, 1.0, 3, 2000, 5).unwrap();
        assert_eq!(r.n_used, 3);
        assert!(r.ok, "{r:?}");
    }
}
