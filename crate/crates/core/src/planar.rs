//! The planar map `g` conjugate to the Zorich map on the invariant plane
//! `x1 = x2`, via `φ(x1, x1, x3) = (x3 + i√2·x1)/λ`.
//!
//! With `t = y/√2`, `g(x + iy) = νe^{λx}(𝔥3(t,t) + i√2·𝔥1(t,t))` for
//! `y ∈ [−√2, √2]`, extended by `g(z) = g(z̄ + 2√2i)` on the neighbouring
//! strip and `4√2`-periodically in `y`. The plane `x1 = −x2` is handled by
//! the reflection `(x1, x2) ↦ (x1, −x2)`.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::geometry::{MapParams, Vec2, Vec3};
use crate::quadrature::graded_gauss;
use crate::{par, Result, ZorichError};

/// Strip height `2√2`: the lines `Im z ∈ 2√2·Z` are the preimages of the
/// real axis.
pub const STRIP: f64 = 2.0 * SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

/// `φ` on the plane `x1 = x2`.
pub fn phi(params: &MapParams, x: Vec3) -> Result<PlanarPoint> {
    if (x.x1 - x.x2).abs() > 1e-9 * x.norm().max(1.0) {
        return Err(ZorichError::domain(format!("{x:?} is not on the plane x1 = x2")));
    }
    Ok(PlanarPoint::new(x.x3 / params.lambda, SQRT_2 * x.x1 / params.lambda))
}

pub fn phi_inverse(params: &MapParams, z: PlanarPoint) -> Vec3 {
    let s = params.lambda * z.y / SQRT_2;
    Vec3::new(s, s, params.lambda * z.x)
}

/// `φ ∘ σ′` for points on the plane `x1 = −x2`, with `σ′(x1,x2,x3) = (x1,−x2,x3)`.
pub fn phi_anti(params: &MapParams, x: Vec3) -> Result<PlanarPoint> {
    phi(params, Vec3::new(x.x1, -x.x2, x.x3))
}

/// Reduce `y` to `[−√2, √2]`; the flag is set on the reflected strips.
pub fn reduce_strip(y: f64) -> (f64, bool) {
    let period = 2.0 * STRIP;
    let r = y - period * ((y + SQRT_2) / period).floor();
    if r > SQRT_2 {
        (STRIP - r, true)
    } else {
        (r, false)
    }
}

/// `(a, b) = (𝔥3(t,t), √2·𝔥1(t,t))` for the unscaled face, `t = y/√2`.
pub fn face_diagonal(params: &MapParams, y: f64) -> (f64, f64) {
    let t = (y / SQRT_2).clamp(-1.0, 1.0);
    let h = params.face.eval_unit(Vec2::new(t, t));
    (h.x3, SQRT_2 * h.x1)
}

pub fn g_eval(params: &MapParams, z: PlanarPoint) -> Result<PlanarPoint> {
    if !(z.x.is_finite() && z.y.is_finite()) {
        return Err(ZorichError::domain(format!("non-finite planar point {z:?}")));
    }
    let height = params.lambda * z.x;
    if height > params.overflow_guard {
        return Err(ZorichError::Overflow { height });
    }
    let (y, _) = reduce_strip(z.y);
    let (a, b) = face_diagonal(params, y);
    let r = params.nu * height.exp();
    Ok(PlanarPoint::new(r * a, r * b))
}

/// The preimage of `w` with `Im ∈ [−√2, √2]` (requires `Re w ≥ 0`, `w ≠ 0`).
pub fn g_preimage_principal(params: &MapParams, w: PlanarPoint) -> Result<PlanarPoint> {
    if w.x < 0.0 || w.norm() == 0.0 {
        return Err(ZorichError::domain(format!("{w:?} is not in the image of g")));
    }
    let dir = Vec3::new(w.y / SQRT_2, w.y / SQRT_2, w.x);
    let v = params.face.invert_ray(dir, 1.0)?;
    let h = params.face.eval_unit(v);
    let x = (w.norm() / (params.nu * h.norm())).ln() / params.lambda;
    Ok(PlanarPoint::new(x, SQRT_2 * v.x1))
}

/// Index `j` of the strip `[2√2j, 2√2(j+1))` containing `y`.
pub fn strip_index(y: f64) -> i64 {
    (y / STRIP).floor() as i64
}

/// The preimages of `w` inside strip `j` (two generically, none when `w`
/// lies in the half-plane the strip does not cover).
pub fn g_preimages_in_strip(params: &MapParams, w: PlanarPoint, j: i64) -> Result<Vec<PlanarPoint>> {
    let z0 = g_preimage_principal(params, w)?;
    let lo = STRIP * j as f64;
    let period = 2.0 * STRIP;
    let place = |y: f64| y + period * ((lo - y) / period).ceil();
    Ok([place(z0.y), place(STRIP - z0.y)]
        .into_iter()
        .filter(|&y| y < lo + STRIP)
        .map(|y| PlanarPoint::new(z0.x, y))
        .collect())
}

/// Distance from `Im z` to the nearest non-smooth line `y ∈ √2·Z`.
pub fn planar_seam_distance(y: f64) -> f64 {
    (y - SQRT_2 * (y / SQRT_2).round()).abs()
}

/// `|det Dg(z)|` by central differences.
pub fn planar_det_fd(params: &MapParams, z: PlanarPoint, step: f64) -> Result<f64> {
    let dist = planar_seam_distance(z.y);
    if dist <= 2.0 * step {
        return Err(ZorichError::Seam { distance: dist, required: 2.0 * step });
    }
    let dx = g_eval(params, PlanarPoint::new(z.x + step, z.y))?.sub(g_eval(params, PlanarPoint::new(z.x - step, z.y))?);
    let dy = g_eval(params, PlanarPoint::new(z.x, z.y + step))?.sub(g_eval(params, PlanarPoint::new(z.x, z.y - step))?);
    Ok((dx.x * dy.y - dx.y * dy.x).abs() / (4.0 * step * step))
}

/// `A_m = (2√2/λ)·log((m+1)/m)`: the area between consecutive curves `γ_m`.
pub fn planar_area_am(lambda: f64, m: u32) -> Result<f64> {
    if m < 1 {
        return Err(ZorichError::domain("m must be at least 1"));
    }
    Ok(2.0 * SQRT_2 / lambda * ((m as f64 + 1.0) / m as f64).ln())
}

/// `x(y) = (1/λ)·log(2m/(ν𝔥1(y/√2, y/√2)))`, the curve `Im g = 2√2m` in the
/// strip `0 < y < 2√2`.
pub fn gamma_m_x(params: &MapParams, m: u32, y: f64) -> Result<f64> {
    let (y, _) = reduce_strip(y);
    let (_, b) = face_diagonal(params, y);
    let h1 = b / SQRT_2;
    if !(h1 > 0.0) {
        return Err(ZorichError::domain(format!("h1 = {h1} is not positive at y = {y}")));
    }
    Ok((2.0 * m as f64 / (params.nu * h1)).ln() / params.lambda)
}

/// The curve `γ_m` sampled at `n_points` log-spaced `y ∈ [1e−6, √2]` and
/// mirrored onto `[√2, 2√2 − 1e−6]`; ordered by increasing `y`.
pub fn gamma_m_curve(params: &MapParams, m: u32, n_points: usize) -> Result<Vec<PlanarPoint>> {
    if m < 1 || n_points < 2 {
        return Err(ZorichError::domain("need m >= 1 and n_points >= 2"));
    }
    let (lo, hi) = (1e-6f64.ln(), SQRT_2.ln());
    let ys: Vec<f64> = (0..n_points).map(|k| (lo + (hi - lo) * k as f64 / (n_points - 1) as f64).exp()).collect();
    let mut pts = Vec::with_capacity(2 * n_points - 1);
    for &y in &ys {
        pts.push(PlanarPoint::new(gamma_m_x(params, m, y)?, y));
    }
    for &y in ys.iter().rev().skip(1) {
        let mirrored = STRIP - y;
        pts.push(PlanarPoint::new(gamma_m_x(params, m, mirrored)?, mirrored));
    }
    Ok(pts)
}

fn orient(a: PlanarPoint, b: PlanarPoint, c: PlanarPoint) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_cross(a: PlanarPoint, b: PlanarPoint, c: PlanarPoint, d: PlanarPoint) -> bool {
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Whether two non-adjacent segments of the polyline properly cross.
pub fn polyline_self_intersects(pts: &[PlanarPoint]) -> bool {
    let n = pts.len();
    (0..n.saturating_sub(1)).any(|i| {
        (i + 2..n.saturating_sub(1)).any(|j| segments_cross(pts[i], pts[i + 1], pts[j], pts[j + 1]))
    })
}

pub fn polylines_intersect(a: &[PlanarPoint], b: &[PlanarPoint]) -> bool {
    a.windows(2).any(|s| b.windows(2).any(|t| segments_cross(s[0], s[1], t[0], t[1])))
}

/// Shoelace area of the region between two curves traversed in the same `y`
/// direction (the second is reversed to close the loop).
pub fn area_between(a: &[PlanarPoint], b: &[PlanarPoint]) -> f64 {
    let ring: Vec<PlanarPoint> = a.iter().copied().chain(b.iter().rev().copied()).collect();
    let n = ring.len();
    let twice: f64 = (0..n).map(|k| {
        let (p, q) = (ring[k], ring[(k + 1) % n]);
        p.x * q.y - q.x * p.y
    }).sum();
    0.5 * twice.abs()
}

/// Area of `{0 < Re z < x_1(y)}` over the strip, where `x_1` is `γ_1`,
/// integrated with graded Gauss–Legendre panels down to `cutoff` in `y`.
pub fn planar_area_a0(params: &MapParams, cutoff: f64) -> f64 {
    let f = |y: f64| gamma_m_x(params, 1, y).map(|x| x.max(0.0)).unwrap_or(0.0);
    2.0 * graded_gauss(f, cutoff, SQRT_2)
}

/// Closed form of `(2/λ)∫_0^{√2} log(4L/(νy)) dy`.
pub fn planar_area_a0_bound(params: &MapParams, l_hat: f64) -> f64 {
    2.0 / params.lambda * SQRT_2 * ((4.0 * l_hat / params.nu).ln() - SQRT_2.ln() + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn contains(&self, z: PlanarPoint) -> bool {
        z.x >= self.x0 && z.x <= self.x1 && z.y >= self.y0 && z.y <= self.y1
    }

    fn padded(&self, frac: f64) -> Self {
        let (dx, dy) = ((self.x1 - self.x0) * frac, (self.y1 - self.y0) * frac);
        Self { x0: self.x0 - dx, x1: self.x1 + dx, y0: self.y0 - dy, y1: self.y1 + dy }
    }

    fn bounding(pts: &[PlanarPoint]) -> Self {
        let mut r = Self { x0: f64::INFINITY, x1: f64::NEG_INFINITY, y0: f64::INFINITY, y1: f64::NEG_INFINITY };
        for p in pts {
            r.x0 = r.x0.min(p.x);
            r.x1 = r.x1.max(p.x);
            r.y0 = r.y0.min(p.y);
            r.y1 = r.y1.max(p.y);
        }
        r
    }

    /// Whether the rectangle meets a line `y ∈ 2√2·Z`.
    fn touches_real_preimage(&self) -> bool {
        strip_index(self.y0) != strip_index(self.y1) || self.y0 == STRIP * strip_index(self.y0) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaGrowthReport {
    /// Estimated `m(gᵏ(V))` for `k = 0, 1, …`.
    pub areas: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Step at which an iterate met a line `y ∈ 2√2·Z`.
    pub contact_step: Option<usize>,
    pub overflowed: bool,
    /// `ν²λ/(2L)`.
    pub ratio_bound: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct AreaGrowthOptions {
    /// Grid cells per axis for the area count.
    pub resolution: usize,
    /// Forward samples per axis used to locate each iterate.
    pub cloud: usize,
}

impl Default for AreaGrowthOptions {
    fn default() -> Self {
        Self { resolution: 256, cloud: 200 }
    }
}

struct Level {
    bbox: Rect,
    strip: i64,
}

fn is_member(params: &MapParams, seed: &Rect, levels: &[Level], w: PlanarPoint) -> bool {
    let Some((last, rest)) = levels.split_last() else {
        return seed.contains(w);
    };
    if !last.bbox.contains(w) {
        return false;
    }
    let Some(prev) = rest.last() else {
        return g_preimages_in_strip(params, w, strip_index(seed.y0))
            .map(|zs| zs.iter().any(|&z| seed.contains(z)))
            .unwrap_or(false);
    };
    g_preimages_in_strip(params, w, prev.strip)
        .map(|zs| zs.iter().any(|&z| is_member(params, seed, rest, z)))
        .unwrap_or(false)
}

/// Track `m(gᵏ(V))` for a seed rectangle in the right half-plane. Areas are
/// of the image sets (no multiplicity), counted on a grid over each iterate's
/// bounding box with membership decided by pulling grid points back through
/// the two preimages per strip. Stops on contact with a line `y ∈ 2√2·Z`.
pub fn area_growth_experiment(
    params: &MapParams,
    l_hat: f64,
    seed_region: Rect,
    n_steps: usize,
    opts: AreaGrowthOptions,
) -> Result<AreaGrowthReport> {
    if !(seed_region.x0 > 0.0 && seed_region.x1 > seed_region.x0 && seed_region.y1 > seed_region.y0) {
        return Err(ZorichError::domain("seed region must be a non-degenerate rectangle in Re z > 0"));
    }
    let mut report = AreaGrowthReport {
        areas: vec![seed_region.area()],
        ratios: Vec::new(),
        contact_step: None,
        overflowed: false,
        ratio_bound: params.nu * params.nu * params.lambda / (2.0 * l_hat),
    };
    if seed_region.touches_real_preimage() {
        report.contact_step = Some(0);
        return Ok(report);
    }
    let n = opts.cloud.max(2);
    let mut cloud: Vec<PlanarPoint> = (0..n * n)
        .map(|k| {
            let (a, b) = ((k % n) as f64 / (n - 1) as f64, (k / n) as f64 / (n - 1) as f64);
            PlanarPoint::new(
                seed_region.x0 + a * (seed_region.x1 - seed_region.x0),
                seed_region.y0 + b * (seed_region.y1 - seed_region.y0),
            )
        })
        .collect();
    let mut levels: Vec<Level> = Vec::new();
    for step in 1..=n_steps {
        let next: Result<Vec<PlanarPoint>> = cloud.iter().map(|&z| g_eval(params, z)).collect();
        cloud = match next {
            Ok(c) => c,
            Err(_) => {
                report.overflowed = true;
                break;
            }
        };
        let bbox = Rect::bounding(&cloud).padded(0.03);
        let tight = Rect::bounding(&cloud);
        if tight.touches_real_preimage() {
            report.contact_step = Some(step);
            break;
        }
        levels.push(Level { bbox, strip: strip_index(tight.y0) });
        let res = opts.resolution.max(8);
        let (cw, ch) = ((bbox.x1 - bbox.x0) / res as f64, (bbox.y1 - bbox.y0) / res as f64);
        let counts = par::map_indexed(res, |r| {
            (0..res)
                .filter(|&c| {
                    let w = PlanarPoint::new(bbox.x0 + (c as f64 + 0.5) * cw, bbox.y0 + (r as f64 + 0.5) * ch);
                    is_member(params, &seed_region, &levels, w)
                })
                .count()
        });
        let area = counts.into_iter().sum::<usize>() as f64 * cw * ch;
        let prev = *report.areas.last().expect("seed area present");
        report.ratios.push(area / prev);
        report.areas.push(area);
    }
    Ok(report)
}
