//! Inverse branches of the Zorich map.
//!
//! Two families of branches are provided:
//! - square branches `Λ_(r1,r2)` onto a fold cell, defined on the closed
//!   half-space whose sign matches the cell parity;
//! - diamond branches `Λ_(i,j)` onto the beams `T_(i,j)`: the diamonds of the
//!   lattice cut out by `x1 ± x2 ∈ 2λZ`, each defined on a closed sector
//!   `H̄_k` bounded by the planes `x2 = ±x1`.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{unfold_coordinate, MapParams, Vec2, Vec3};
use crate::map::zorich_eval;
use crate::sampling::blocked_map;
use crate::{Result, ZorichError};

const SECTOR_TOL: f64 = 1e-12;

/// One of the four sectors bounded by the planes `x2 = x1` and `x2 = −x1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sector {
    /// `x1 > |x2|`
    H0,
    /// `x2 > |x1|`
    H1,
    /// `−x1 > |x2|`
    H2,
    /// `−x2 > |x1|`
    H3,
}

impl Sector {
    /// Closed-sector membership with a relative tolerance.
    pub fn contains_closed(self, y: Vec2, scale: f64) -> bool {
        let tol = SECTOR_TOL * scale;
        match self {
            Self::H0 => y.x1 + tol >= y.x2.abs(),
            Self::H1 => y.x2 + tol >= y.x1.abs(),
            Self::H2 => -y.x1 + tol >= y.x2.abs(),
            Self::H3 => -y.x2 + tol >= y.x1.abs(),
        }
    }

    /// The open sector containing `y`, if any.
    pub fn of(y: Vec2) -> Option<Self> {
        if y.x1 > y.x2.abs() {
            Some(Self::H0)
        } else if y.x2 > y.x1.abs() {
            Some(Self::H1)
        } else if -y.x1 > y.x2.abs() {
            Some(Self::H2)
        } else if -y.x2 > y.x1.abs() {
            Some(Self::H3)
        } else {
            None
        }
    }

    fn describe(self) -> &'static str {
        match self {
            Self::H0 => "H0 = {x1 >= |x2|}",
            Self::H1 => "H1 = {x2 >= |x1|}",
            Self::H2 => "H2 = {-x1 >= |x2|}",
            Self::H3 => "H3 = {-x2 >= |x1|}",
        }
    }
}

/// Diamond beam `T_(i,j) = T_(0,0) + i(λ,λ,0) + j(λ,−λ,0)`, where `T_(0,0)`
/// has vertices `(0,0)`, `(λ,λ)`, `(2λ,0)`, `(λ,−λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BeamIndex {
    pub i: i64,
    pub j: i64,
}

impl fmt::Display for BeamIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

impl BeamIndex {
    pub const T0: Self = Self { i: 0, j: 0 };
    pub const T1: Self = Self { i: 0, j: -1 };
    pub const T2: Self = Self { i: -1, j: -1 };
    pub const T3: Self = Self { i: -1, j: 0 };

    pub const fn new(i: i64, j: i64) -> Self {
        Self { i, j }
    }

    /// The diamond containing `x` (half-open on its upper edges).
    pub fn containing(x: Vec2, lambda: f64) -> Self {
        let period = 2.0 * lambda;
        Self {
            i: ((x.x1 + x.x2) / period).floor() as i64,
            j: ((x.x1 - x.x2) / period).floor() as i64,
        }
    }

    pub fn center(self, lambda: f64) -> Vec2 {
        Vec2::new(lambda * (1 + self.i + self.j) as f64, lambda * (self.i - self.j) as f64)
    }

    pub fn contains_closed(self, x: Vec2, lambda: f64, tol: f64) -> bool {
        let c = self.center(lambda);
        (x.x1 - c.x1).abs() + (x.x2 - c.x2).abs() <= lambda + tol
    }

    /// The sector the beam lies in.
    pub fn position_sector(self) -> Sector {
        let c = self.center(1.0);
        Sector::of(c).expect("diamond centres never lie on a diagonal")
    }

    /// The sector the beam is mapped onto.
    pub fn image_sector(self) -> Sector {
        let s = self.i + self.j;
        if s.rem_euclid(2) == 0 {
            if (s / 2).rem_euclid(2) == 0 {
                Sector::H0
            } else {
                Sector::H2
            }
        } else {
            let k = (self.i - self.j - 1).div_euclid(2);
            if k.rem_euclid(2) == 0 {
                Sector::H1
            } else {
                Sector::H3
            }
        }
    }

    /// The two fold cells the diamond straddles.
    pub fn cells(self) -> [(i64, i64); 2] {
        let s = self.i + self.j;
        if s.rem_euclid(2) == 0 {
            let k = s.div_euclid(2);
            let r2 = (self.i - self.j).div_euclid(2);
            [(k, r2), (k + 1, r2)]
        } else {
            let r1 = (1 + s).div_euclid(2);
            let k = (self.i - self.j - 1).div_euclid(2);
            [(r1, k), (r1, k + 1)]
        }
    }
}

/// Lift a direction-determined folded point `v ∈ λQ` into cell `(r1, r2)`
/// with height chosen so that `Z` of the result is `y`.
fn lift(params: &MapParams, y: Vec3, cell: (i64, i64)) -> Result<Vec3> {
    let lambda = params.lambda;
    let v = params.face.invert_ray(Vec3::new(y.x1, y.x2, y.x3.abs()), lambda)?;
    let h = params.face.eval(v, lambda)?;
    let x3 = (y.norm() / (params.nu * h.norm())).ln();
    Ok(Vec3::new(unfold_coordinate(v.x1, cell.0, lambda), unfold_coordinate(v.x2, cell.1, lambda), x3))
}

fn check_target(y: Vec3) -> Result<()> {
    if !y.is_finite() {
        return Err(ZorichError::domain(format!("non-finite target {y:?}")));
    }
    if y.norm() == 0.0 {
        return Err(ZorichError::domain("the origin has no preimage"));
    }
    Ok(())
}

/// Inverse branch onto the diamond beam `beam`, defined on `H̄_k ∖ {0}` where
/// `H_k` is the beam's image sector. Within the diamond, the sign of `y3`
/// selects which of the two fold cells the preimage lies in.
pub fn branch_inverse(params: &MapParams, beam: BeamIndex, y: Vec3) -> Result<Vec3> {
    check_target(y)?;
    let sector = beam.image_sector();
    if !sector.contains_closed(y.p(), y.norm()) {
        return Err(ZorichError::HalfSpace { expected: sector.describe().to_string() });
    }
    let want = u8::from(y.x3 < 0.0);
    let cell = beam
        .cells()
        .into_iter()
        .find(|&(r1, r2)| (r1 + r2).rem_euclid(2) as u8 == want)
        .expect("the two cells of a diamond have opposite parity");
    lift(params, y, cell)
}

/// Inverse branch onto the fold cell `(r1, r2)`, defined on the closed
/// half-space `{±x3 ≥ 0} ∖ {0}` with sign `(−1)^(r1+r2)`.
pub fn square_branch_inverse(params: &MapParams, cell: (i64, i64), y: Vec3) -> Result<Vec3> {
    check_target(y)?;
    let even = (cell.0 + cell.1).rem_euclid(2) == 0;
    let tol = SECTOR_TOL * y.norm();
    if even && y.x3 < -tol {
        return Err(ZorichError::HalfSpace { expected: "{x3 >= 0}".into() });
    }
    if !even && y.x3 > tol {
        return Err(ZorichError::HalfSpace { expected: "{x3 <= 0}".into() });
    }
    lift(params, y, cell)
}

/// `x_N = y`, `x_k = Λ_{symbols[k]}(x_{k+1})`; returns `[x_0, …, x_N]`.
pub fn pullback_orbit(params: &MapParams, symbols: &[BeamIndex], y: Vec3) -> Result<Vec<Vec3>> {
    let n = symbols.len();
    let mut xs = vec![y; n + 1];
    for k in (0..n).rev() {
        xs[k] = branch_inverse(params, symbols[k], xs[k + 1])
            .map_err(|e| ZorichError::Inadmissible { step: k, reason: e.to_string() })?;
    }
    Ok(xs)
}

/// Template pair in the unit half-space `{y3 > 1}`; scaled by the threshold.
#[derive(Debug, Clone, Copy)]
struct TemplatePair(Vec3, Vec3);

fn template_pair(rng: &mut ChaCha8Rng, i: usize) -> TemplatePair {
    // Every fourth pair concentrates near the axis at the bottom of the
    // half-space, where the branch is least contracting.
    let (spread, depth) = if i.is_multiple_of(4) { (0.05, 0.01) } else { (2.0, 1.0) };
    let y = Vec3::new(
        rng.random_range(-spread..spread),
        rng.random_range(-spread..spread),
        1.0 + depth * -(1.0 - rng.random::<f64>()).ln(),
    );
    let delta = 10f64.powf(-rng.random_range(0.0..6.0));
    let (a, b): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(0.0..std::f64::consts::TAU));
    let r = (1.0 - a * a).sqrt();
    let mut dir = Vec3::new(r * b.cos(), r * b.sin(), a);
    if y.x3 + delta * dir.x3 <= 1.0 {
        dir.x3 = -dir.x3;
    }
    TemplatePair(y, y + dir * delta)
}

/// Sampled pairs for estimating the contraction of `Λ_(0,0)` above
/// `νλe^M`. Pairs are stored as scale-free templates in `{y3 > 1}` and
/// scaled by the threshold, so one pool serves every `M` and the estimate is
/// nonincreasing in `M`.
#[derive(Debug, Clone)]
pub struct ContractionPool {
    params: MapParams,
    pairs: Vec<TemplatePair>,
}

impl ContractionPool {
    pub fn sample(params: &MapParams, n_pairs: usize, seed: u64) -> Self {
        Self { params: params.clone(), pairs: blocked_map(n_pairs, seed, template_pair) }
    }

    pub fn threshold(&self, m: f64) -> f64 {
        self.params.kappa() * m.exp()
    }

    /// Largest sampled `|Λ(a) − Λ(b)|/|a − b|` with `a, b` above `νλe^M`.
    pub fn alpha_at(&self, m: f64) -> f64 {
        let c = self.threshold(m);
        let ratios = crate::par::map_indexed(self.pairs.len(), |k| {
            let TemplatePair(a, b) = self.pairs[k];
            let (a, b) = (a * c, b * c);
            let d = (a - b).norm();
            if !(d > 0.0) {
                return 0.0;
            }
            match (square_branch_inverse(&self.params, (0, 0), a), square_branch_inverse(&self.params, (0, 0), b)) {
                (Ok(x), Ok(y)) => (x - y).norm() / d,
                _ => 0.0,
            }
        });
        ratios.into_iter().fold(0.0, f64::max)
    }

    /// Smallest `M` on the grid `{0, step, 2·step, …}` (up to `m_max`) with
    /// `alpha_at(M) < target`.
    pub fn m0_search(&self, target: f64, step: f64, m_max: f64) -> Option<(f64, f64)> {
        let mut k = 0usize;
        loop {
            let m = step * k as f64;
            if m > m_max {
                return None;
            }
            let alpha = self.alpha_at(m);
            if alpha < target {
                return Some((m, alpha));
            }
            k += 1;
        }
    }
}

/// Sampled contraction factor of `Λ_(0,0)` on `{y3 > νλe^M}`.
pub fn estimate_contraction(params: &MapParams, m: f64, n_pairs: usize, seed: u64) -> f64 {
    ContractionPool::sample(params, n_pairs, seed).alpha_at(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallCheckReport {
    pub checked: usize,
    pub failures: usize,
    /// Largest `|Λ(y) − x| / R` seen (must stay below 1).
    pub worst_fraction: f64,
}

/// Samples triples `(x, R, y)` with `x = Λ_(0,0)(y0)`, `y0` above the
/// threshold and `y ∈ B(Z(x), R/α)` above the threshold, and checks
/// `Λ_(0,0)(y) ∈ B(x, R)`.
pub fn ball_expansion_check(params: &MapParams, m: f64, alpha: f64, n_triples: usize, seed: u64) -> BallCheckReport {
    let c = params.kappa() * m.exp();
    let fractions = blocked_map(n_triples, seed, |rng, i| {
        let TemplatePair(y0, _) = template_pair(rng, i);
        let y0 = y0 * c;
        let x = square_branch_inverse(params, (0, 0), y0).ok()?;
        let rho = c * 10f64.powf(rng.random_range(-3.0..0.3));
        let radius = rho * alpha;
        for _ in 0..64 {
            let (a, b): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(0.0..std::f64::consts::TAU));
            let r = (1.0 - a * a).sqrt();
            let y = y0 + Vec3::new(r * b.cos(), r * b.sin(), a) * (rho * rng.random::<f64>().cbrt());
            if y.x3 > c {
                let back = square_branch_inverse(params, (0, 0), y).ok()?;
                return Some((back - x).norm() / radius);
            }
        }
        None
    });
    let mut report = BallCheckReport { checked: 0, failures: 0, worst_fraction: 0.0 };
    for f in fractions.into_iter().flatten() {
        report.checked += 1;
        if f >= 1.0 {
            report.failures += 1;
        }
        report.worst_fraction = report.worst_fraction.max(f);
    }
    report
}

/// Forward-check helper: `max_k |Z(x_k) − x_{k+1}| / max(1, |x_{k+1}|)`.
pub fn pullback_defect(params: &MapParams, xs: &[Vec3]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for w in xs.windows(2) {
        let z = zorich_eval(params, w[0])?;
        worst = worst.max((z - w[1]).norm() / w[1].norm().max(1.0));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{fold_plane, FaceKind};
    use proptest::prelude::*;

    fn sphere(lambda: f64, nu: f64) -> MapParams {
        MapParams::sphere(lambda, nu).unwrap()
    }

    #[test]
    fn named_beams() {
        assert_eq!(BeamIndex::T0.image_sector(), Sector::H0);
        assert_eq!(BeamIndex::T1.image_sector(), Sector::H1);
        assert_eq!(BeamIndex::T2.image_sector(), Sector::H2);
        assert_eq!(BeamIndex::T3.image_sector(), Sector::H3);
        assert_eq!(BeamIndex::T0.position_sector(), Sector::H0);
        assert_eq!(BeamIndex::T1.position_sector(), Sector::H1);
        assert_eq!(BeamIndex::T2.position_sector(), Sector::H2);
        assert_eq!(BeamIndex::T3.position_sector(), Sector::H3);
        assert_eq!(BeamIndex::containing(Vec2::new(1.0, 0.1), 1.0), BeamIndex::T0);
        assert_eq!(BeamIndex::containing(Vec2::new(0.1, 1.0), 1.0), BeamIndex::T1);
    }

    #[test]
    fn image_sector_matches_folded_centre() {
        for i in -6..6 {
            for j in -6..6 {
                let b = BeamIndex::new(i, j);
                let lambda = 1.5;
                let c = b.center(lambda);
                // A point just inside the diamond, off its axis of symmetry.
                let probe = c + Vec2::new(0.1, 0.05);
                let x = Vec3::new(probe.x1, probe.x2, 0.0);
                let z = zorich_eval(&sphere(lambda, 1.0), x).unwrap();
                assert_eq!(Sector::of(z.p()), Some(b.image_sector()), "beam {b}");
                for (r1, r2) in b.cells() {
                    let corner = Vec2::new(2.0 * lambda * r1 as f64, 2.0 * lambda * r2 as f64);
                    assert!(b.contains_closed(corner, lambda, 1e-12));
                }
            }
        }
    }

    #[test]
    fn examples() {
        let p = sphere(2.0, 1.0);
        assert_eq!(branch_inverse(&p, BeamIndex::T0, Vec3::new(0.0, 0.0, 2.0)).unwrap(), Vec3::new(0.0, 0.0, 0.0));
        let x = branch_inverse(&p, BeamIndex::T0, Vec3::new(0.0, 0.0, -3.0)).unwrap();
        assert_eq!(x.p(), Vec2::new(4.0, 0.0));
        assert!(branch_inverse(&p, BeamIndex::T0, Vec3::new(0.0, 0.0, 0.0)).is_err());
        let err = branch_inverse(&p, BeamIndex::T0, Vec3::new(-1.0, 0.0, 1.0)).unwrap_err();
        assert!(err.to_string().contains("H0"));
        assert!(square_branch_inverse(&p, (0, 0), Vec3::new(0.0, 0.0, -1.0)).is_err());
        assert_eq!(pullback_orbit(&p, &[], Vec3::new(1.0, 2.0, 3.0)).unwrap(), vec![Vec3::new(1.0, 2.0, 3.0)]);
    }

    #[test]
    fn axis_pullback_is_logarithmic() {
        let p = sphere(2.0, 1.0);
        let xs = pullback_orbit(&p, &[BeamIndex::T0; 3], Vec3::new(0.0, 0.0, 1e6)).unwrap();
        let mut t = 1e6f64;
        for k in (0..3).rev() {
            t = (t / p.kappa()).ln();
            assert!((xs[k] - Vec3::new(0.0, 0.0, t)).norm() < 1e-12);
        }
        assert!(pullback_defect(&p, &xs).unwrap() < 1e-12);
    }

    #[test]
    fn contraction_examples() {
        let p = sphere(8.0, 1.0);
        assert!(estimate_contraction(&p, 3.0, 4000, 1) < 1.0);
        let pool = ContractionPool::sample(&p, 4000, 2);
        let a1 = pool.alpha_at(1.0);
        let a2 = pool.alpha_at(2.0);
        assert!(a2 <= a1 * (1.0 + 1e-9));
        let big = ContractionPool::sample(&p, 8000, 2);
        assert!(big.alpha_at(1.0) >= a1);
        // On the axis the branch is t ↦ log(t/νλ).
        let (t1, t2) = (1e3f64, 2e3f64);
        let x1 = square_branch_inverse(&p, (0, 0), Vec3::new(0.0, 0.0, t1)).unwrap();
        let x2 = square_branch_inverse(&p, (0, 0), Vec3::new(0.0, 0.0, t2)).unwrap();
        let ratio = (x1 - x2).norm() / (t2 - t1);
        assert!((ratio - (t2 / t1).ln() / (t2 - t1)).abs() < 1e-12);
        assert!(ratio < 1.0);
    }

    proptest! {
        #[test]
        fn diamond_roundtrip(i in -5i64..5, j in -5i64..5, a in -0.95f64..0.95, b in -0.95f64..0.95, x3 in -4.0f64..4.0) {
            for face in [FaceKind::Sphere, FaceKind::Pyramid] {
                let p = MapParams::new(2.0, 0.8, face).unwrap();
                let beam = BeamIndex::new(i, j);
                let c = beam.center(p.lambda);
                // (a, b) in rotated diamond coordinates.
                let off = Vec2::new((a + b) * 0.5, (a - b) * 0.5) * p.lambda;
                let x = Vec3::new(c.x1 + off.x1, c.x2 + off.x2, x3);
                prop_assume!(fold_plane(x.p(), p.lambda).is_ok());
                let y = zorich_eval(&p, x).unwrap();
                let back = branch_inverse(&p, beam, y).unwrap();
                prop_assert!((back - x).norm() < 1e-9 * x.norm().max(1.0));
                let fwd = zorich_eval(&p, back).unwrap();
                prop_assert!((fwd - y).norm() <= 1e-9 * y.norm());
            }
        }

        #[test]
        fn square_roundtrip(r1 in -4i64..4, r2 in -4i64..4, a in -0.99f64..0.99, b in -0.99f64..0.99, x3 in -4.0f64..4.0) {
            let p = sphere(3.0, 0.6);
            let x = Vec3::new(6.0 * r1 as f64 + 3.0 * a, 6.0 * r2 as f64 + 3.0 * b, x3);
            let y = zorich_eval(&p, x).unwrap();
            let back = square_branch_inverse(&p, (r1, r2), y).unwrap();
            prop_assert!((back - x).norm() < 1e-9 * x.norm().max(1.0));
        }
    }
}
