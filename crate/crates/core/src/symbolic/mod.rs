//! Symbolic dynamics: beam partitions, itineraries, escape classification,
//! periodic points from inverse-branch contraction, and the curves `γ_k`.
//!
//! Three partitions of the plane appear, each used where it belongs:
//! - coarse beams (squares `|x1 + x2| ≤ 2λ, |x1 − x2| ≤ 2λ` translated by
//!   `4λ` steps in `x1 ± x2`, half-open), indexing itineraries;
//! - diamond beams [`BeamIndex`] (half the size), indexing inverse branches
//!   and periodic words;
//! - rectangles `B_(i,j)`, used by the level surfaces and by [`lambda_z_approx`].

mod grid;

pub use grid::{
    escaping_grid_components, lambda_z_approx, write_grid_tensor, write_points_csv, write_polylines_csv, ComponentReport,
    GridBox, LambdaGrid,
};

use serde::{Deserialize, Serialize};

use crate::branches::{branch_inverse, pullback_orbit, BeamIndex};
use crate::geometry::{MapParams, Vec3};
use crate::map::zorich_eval;
use crate::{Result, ZorichError};

/// Index of the coarse beam containing `p(x)`. Every point gets exactly one
/// index: the square `T_(0,0)` owns `x1 + x2 ∈ (−2λ, 2λ]` and
/// `x1 − x2 ∈ [−2λ, 2λ)`.
pub fn beam_index(x: Vec3, lambda: f64) -> (i64, i64) {
    let (s, d) = (x.x1 + x.x2, x.x1 - x.x2);
    let w = 4.0 * lambda;
    (((s - 2.0 * lambda) / w).ceil() as i64, ((d + 2.0 * lambda) / w).floor() as i64)
}

/// Membership in the coarse beam `(i, j)` by its defining inequalities.
pub fn coarse_beam_contains(index: (i64, i64), x: Vec3, lambda: f64) -> bool {
    let w = 4.0 * lambda;
    let s = x.x1 + x.x2 - w * index.0 as f64;
    let d = x.x1 - x.x2 - w * index.1 as f64;
    s > -2.0 * lambda && s <= 2.0 * lambda && d >= -2.0 * lambda && d < 2.0 * lambda
}

/// Index of the rectangle `B_(i,j) = B_(0,0) + i(2λ,2λ) + j(λ,−λ)` with
/// `B_(0,0) = {|x1 + x2| ≤ 2λ, 0 ≤ x1 − x2 ≤ 2λ}` (half-open for indexing).
pub fn rect_beam_index(x: Vec3, lambda: f64) -> (i64, i64) {
    let (s, d) = (x.x1 + x.x2, x.x1 - x.x2);
    (((s + 2.0 * lambda) / (4.0 * lambda)).floor() as i64, (d / (2.0 * lambda)).floor() as i64)
}

/// Closed membership in `B̄_(0,0)`.
pub fn in_closed_b00(x: Vec3, lambda: f64) -> bool {
    crate::analysis::b00_contains(x.p(), lambda)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Itinerary {
    /// `symbols[k − 1]` is the coarse beam of `Zᵏ(x)`.
    pub symbols: Vec<(i64, i64)>,
    pub horizon: usize,
    /// The orbit overflowed before the horizon.
    pub truncated: bool,
}

/// Coarse itinerary `s_1, …, s_horizon` with `Zᵏ(x) ∈ T_{s_k}`.
pub fn itinerary(params: &MapParams, x: Vec3, horizon: usize) -> Itinerary {
    let mut symbols = Vec::with_capacity(horizon);
    let mut cur = x;
    let mut truncated = false;
    for _ in 0..horizon {
        match zorich_eval(params, cur) {
            Ok(next) => {
                symbols.push(beam_index(next, params.lambda));
                cur = next;
            }
            Err(_) => {
                truncated = true;
                break;
            }
        }
    }
    Itinerary { symbols, horizon, truncated }
}

/// Diamond beams of `x, Z(x), …, Z^{n−1}(x)`; `None` if the orbit overflows.
pub fn fine_itinerary(params: &MapParams, x: Vec3, n: usize) -> Option<Vec<BeamIndex>> {
    let mut out = Vec::with_capacity(n);
    let mut cur = x;
    for k in 0..n {
        out.push(BeamIndex::containing(cur.p(), params.lambda));
        if k + 1 < n {
            cur = zorich_eval(params, cur).ok()?;
        }
    }
    Some(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Escaping,
    Bounded,
    Undecided,
}

impl Verdict {
    pub fn code(self) -> u8 {
        match self {
            Self::Undecided => 0,
            Self::Escaping => 1,
            Self::Bounded => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub horizon: usize,
    pub escape_radius: f64,
    /// Radius of the box the orbit must end in to count as bounded; `None`
    /// means `10·max(λ, νλ)`.
    pub bounded_radius: Option<f64>,
}

impl ClassifyOptions {
    pub fn new(horizon: usize, escape_radius: f64) -> Self {
        Self { horizon, escape_radius, bounded_radius: None }
    }

    fn box_radius(&self, params: &MapParams) -> f64 {
        self.bounded_radius.unwrap_or_else(|| 10.0 * params.lambda.max(params.kappa()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub horizon: usize,
    pub escape_radius: f64,
    /// First step whose point exceeded the escape radius (or overflowed).
    pub first_escape: Option<usize>,
    /// Last recorded height; `+∞` after an overflow.
    pub final_height: f64,
    /// Final height for escaping orbits, final `|x|` otherwise.
    pub witness: f64,
}

/// Finite-horizon escape classification.
///
/// Escaping: some iterate exceeds the escape radius (or overflows) and the
/// last three recorded heights, including the starting height, increase
/// strictly. Bounded: the full horizon is reached, no iterate exceeds the
/// radius and the final point lies in the bounded box. Otherwise undecided.
/// A height below `−guard` underflows `e^{x3}` to zero, so the orbit
/// continues from the origin.
pub fn classify_point(params: &MapParams, x: Vec3, opts: &ClassifyOptions) -> Classification {
    let mut heights = Vec::with_capacity(opts.horizon + 1);
    heights.push(x.x3);
    let mut cur = x;
    let mut first_escape = None;
    let mut completed = true;
    for step in 1..=opts.horizon {
        if cur.x3 < -params.overflow_guard {
            cur = Vec3::new(0.0, 0.0, 0.0);
            heights.push(f64::NEG_INFINITY);
            continue;
        }
        match zorich_eval(params, cur) {
            Ok(next) => {
                cur = next;
                heights.push(next.x3);
                if first_escape.is_none() && next.norm() > opts.escape_radius {
                    first_escape = Some(step);
                }
            }
            Err(ZorichError::Overflow { .. }) => {
                heights.push(f64::INFINITY);
                first_escape.get_or_insert(step);
                completed = false;
                break;
            }
            Err(_) => {
                completed = false;
                break;
            }
        }
    }
    let tail = &heights[heights.len().saturating_sub(3)..];
    let rising = tail.windows(2).all(|w| w[1] > w[0]);
    let final_height = *heights.last().expect("starting height recorded");
    let (verdict, witness) = if first_escape.is_some() && rising {
        (Verdict::Escaping, final_height)
    } else if first_escape.is_none() && completed && cur.norm() <= opts.box_radius(params) {
        (Verdict::Bounded, cur.norm())
    } else {
        (Verdict::Undecided, cur.norm())
    };
    Classification { verdict, horizon: opts.horizon, escape_radius: opts.escape_radius, first_escape, final_height, witness }
}

/// Whether the periodic word is admissible: each beam's image sector is the
/// sector containing the next beam (cyclically). Returns the failing step.
pub fn check_word(word: &[BeamIndex]) -> Result<()> {
    if word.is_empty() {
        return Err(ZorichError::Inadmissible { step: 0, reason: "empty word".into() });
    }
    let n = word.len();
    for k in 0..n {
        let (cur, next) = (word[k], word[(k + 1) % n]);
        if cur.image_sector() != next.position_sector() {
            return Err(ZorichError::Inadmissible {
                step: k,
                reason: format!(
                    "beam {cur} maps onto {:?} but beam {next} lies in {:?}",
                    cur.image_sector(),
                    next.position_sector()
                ),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicPoint {
    pub x: Vec3,
    /// `|Z^N(x) − x|`.
    pub residual: f64,
    pub rounds: usize,
    /// Size of the last Picard step.
    pub last_step: f64,
}

/// Fixed point of `Λ_{w_0} ∘ ⋯ ∘ Λ_{w_{N−1}}` by Picard iteration from a
/// high axis point (the axis lies in every closed sector). Stops once a step
/// is shorter than `tol`.
pub fn periodic_point(params: &MapParams, word: &[BeamIndex], tol: f64, max_rounds: usize) -> Result<PeriodicPoint> {
    check_word(word)?;
    let mut y = Vec3::new(0.0, 0.0, 10.0 * params.kappa().max(1.0));
    let mut last_step = f64::INFINITY;
    for round in 1..=max_rounds {
        let next = pullback_orbit(params, word, y)?[0];
        last_step = (next - y).norm();
        y = next;
        if last_step < tol {
            let mut z = y;
            for _ in 0..word.len() {
                z = zorich_eval(params, z)?;
            }
            return Ok(PeriodicPoint { x: y, residual: (z - y).norm(), rounds: round, last_step });
        }
    }
    Err(ZorichError::NoConvergence { rounds: max_rounds, last_step })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaCurves {
    /// `curves[k]` samples `γ_k`; `γ_0` is the negative vertical axis.
    pub curves: Vec<Vec<Vec3>>,
    /// Samples lost at each level because a branch was undefined there.
    pub dropped: Vec<usize>,
}

/// `γ_0 = {(0,0,t): t < 0}` sampled at `t = −e^s`, `s` uniform in
/// `[s_min, s_max]`, and `γ_k = Λ_{T_(0,0)}(γ_{k−1})`.
pub fn gamma_k_curves(params: &MapParams, k_max: usize, n_points: usize, s_range: (f64, f64)) -> Result<GammaCurves> {
    if k_max < 1 || n_points < 2 {
        return Err(ZorichError::domain("need k_max >= 1 and n_points >= 2"));
    }
    let (s0, s1) = s_range;
    let base: Vec<Vec3> = (0..n_points)
        .map(|i| Vec3::new(0.0, 0.0, -(s0 + (s1 - s0) * i as f64 / (n_points - 1) as f64).exp()))
        .collect();
    let mut curves = vec![base];
    let mut dropped = vec![0];
    for k in 1..=k_max {
        let prev = &curves[k - 1];
        let next: Vec<Vec3> = prev.iter().filter_map(|&y| branch_inverse(params, BeamIndex::T0, y).ok()).collect();
        dropped.push(prev.len() - next.len());
        curves.push(next);
    }
    Ok(GammaCurves { curves, dropped })
}

/// Unit-free distance of `Zᵏ(x)` from the negative vertical axis:
/// `|p(Zᵏx)| / max(1, |Zᵏx|)`, or `None` if the orbit leaves the lower
/// half-space or overflows.
pub fn negative_axis_defect(params: &MapParams, x: Vec3, k: usize) -> Option<f64> {
    let mut z = x;
    for _ in 0..k {
        z = zorich_eval(params, z).ok()?;
    }
    (z.x3 < 0.0).then(|| z.p().norm() / z.norm().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec2;
    use proptest::prelude::*;

    fn sphere(lambda: f64, nu: f64) -> MapParams {
        MapParams::sphere(lambda, nu).unwrap()
    }

    #[test]
    fn beam_examples() {
        let l = 2.0;
        assert_eq!(beam_index(Vec3::new(0.0, 0.0, 5.0), l), (0, 0));
        assert_eq!(beam_index(Vec3::new(-l, l, 0.0), l), (0, 0));
        assert_eq!(beam_index(Vec3::new(l, l, 0.0), l), (0, 0));
        assert_eq!(beam_index(Vec3::new(-l, -l, 0.0), l), (-1, 0));
        let x = Vec3::new(0.3, -0.7, 1.0);
        let (i, j) = beam_index(x, l);
        assert_eq!(beam_index(x + Vec3::new(2.0 * l, 2.0 * l, 0.0), l), (i + 1, j));
        assert_eq!(rect_beam_index(Vec3::new(0.5, -0.5, 0.0), l), (0, 0));
        assert!(in_closed_b00(Vec3::new(2.0, -2.0, 3.0), l));
    }

    #[test]
    fn itinerary_examples() {
        let p = sphere(2.0, 0.3);
        let it = itinerary(&p, Vec3::new(0.0, 0.0, 1.0), 12);
        assert!(it.symbols.iter().all(|&s| s == (0, 0)));
        let it = itinerary(&p, Vec3::new(0.0, 0.0, 20.0), 5);
        assert_eq!((it.symbols.len(), it.truncated), (1, true));
    }

    #[test]
    fn classify_examples() {
        let opts = ClassifyOptions::new(64, 1e10);
        let p = sphere(2.0, 1.0);
        assert_eq!(classify_point(&p, Vec3::new(0.0, 0.0, 1.0), &opts).verdict, Verdict::Escaping);
        assert_eq!(classify_point(&p, Vec3::new(0.0, 0.0, -100.0), &opts).verdict, Verdict::Escaping);
        let parabolic = sphere(1.0, (-1.0f64).exp());
        let c = classify_point(&parabolic, Vec3::new(0.0, 0.0, 1.0), &opts);
        assert_eq!(c.verdict, Verdict::Bounded);
        assert!((c.witness - 1.0).abs() < 1e-12);
        // Below 1/e the axis is attracted to a fixed point.
        let low = sphere(1.0, 0.2);
        assert_eq!(classify_point(&low, Vec3::new(0.0, 0.0, -100.0), &opts).verdict, Verdict::Bounded);
    }

    #[test]
    fn parabolic_fixed_point() {
        let p = sphere(1.0, (-1.0f64).exp());
        let fp = periodic_point(&p, &[BeamIndex::T0], 1e-11, 1_000_000).unwrap();
        assert!(fp.residual < 1e-10);
        assert!((fp.x - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-4);
    }

    #[test]
    fn words() {
        assert!(check_word(&[BeamIndex::T0]).is_ok());
        assert!(check_word(&[BeamIndex::T0, BeamIndex::T1]).is_err());
        let err = check_word(&[BeamIndex::T1, BeamIndex::T2]).unwrap_err();
        assert!(matches!(err, ZorichError::Inadmissible { step: 0, .. }));
    }

    #[test]
    fn gamma_one_is_vertical_line() {
        let p = sphere(2.0, 1.0);
        let g = gamma_k_curves(&p, 3, 50, (-3.0, 3.0)).unwrap();
        for x in &g.curves[1] {
            assert!((x.p() - Vec2::new(4.0, 0.0)).norm() < 1e-9);
        }
        for k in 1..=3 {
            for &x in &g.curves[k] {
                assert!(negative_axis_defect(&p, x, k).unwrap() < 1e-7);
            }
        }
    }

    proptest! {
        #[test]
        fn coarse_tiling(x1 in -50.0f64..50.0, x2 in -50.0f64..50.0) {
            let l = 1.7;
            let x = Vec3::new(x1, x2, 0.0);
            let (i, j) = beam_index(x, l);
            let mut owners = 0;
            for di in -1..=1 {
                for dj in -1..=1 {
                    owners += usize::from(coarse_beam_contains((i + di, j + dj), x, l));
                }
            }
            prop_assert_eq!(owners, 1);
            prop_assert!(coarse_beam_contains((i, j), x, l));
        }
    }
}
