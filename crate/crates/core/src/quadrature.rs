//! Small quadrature rules: Gauss–Legendre panels on intervals and a
//! congruent-subdivision centroid rule on triangles.

use crate::geometry::Vec2;
use crate::par;

const GL8_NODES: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL8_WEIGHTS: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

/// 8-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre8(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
        sum += w * (f(mid - half * x) + f(mid + half * x));
    }
    sum * half
}

/// Gauss–Legendre on panels graded geometrically towards `a`:
/// `[a, a + (b−a)/2^k]`-style breakpoints halving down to `cutoff`.
pub fn graded_gauss(f: impl Fn(f64) -> f64, cutoff: f64, b: f64) -> f64 {
    let mut hi = b;
    let mut total = 0.0;
    while hi > cutoff {
        let lo = (0.5 * hi).max(cutoff);
        total += gauss_legendre8(&f, lo, hi);
        hi = lo;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle(pub Vec2, pub Vec2, pub Vec2);

impl Triangle {
    pub fn area(&self) -> f64 {
        let (a, b, c) = (self.0, self.1, self.2);
        0.5 * ((b.x1 - a.x1) * (c.x2 - a.x2) - (c.x1 - a.x1) * (b.x2 - a.x2)).abs()
    }

    /// Centroids of the `n²` congruent sub-triangles, row `i` of the
    /// barycentric grid only.
    fn row_centroids(&self, n: usize, i: usize) -> Vec<Vec2> {
        let (a, b, c) = (self.0, self.1, self.2);
        let nf = n as f64;
        let p = |i: usize, j: usize| a + (b - a) * (i as f64 / nf) + (c - a) * (j as f64 / nf);
        let centroid = |u: Vec2, v: Vec2, w: Vec2| (u + v + w) * (1.0 / 3.0);
        let mut out = Vec::with_capacity(2 * (n - i));
        for j in 0..n - i {
            out.push(centroid(p(i, j), p(i + 1, j), p(i, j + 1)));
            if i + j + 1 < n {
                out.push(centroid(p(i + 1, j), p(i + 1, j + 1), p(i, j + 1)));
            }
        }
        out
    }

    /// Centroid rule over `n²` congruent sub-triangles; exact for affine `f`.
    /// Samples for which `f` returns `None` contribute zero.
    pub fn integrate(&self, n: usize, f: impl Fn(Vec2) -> Option<f64> + Sync + Send) -> f64 {
        let cell = self.area() / (n * n) as f64;
        let rows = par::map_indexed(n, |i| {
            self.row_centroids(n, i).into_iter().filter_map(&f).sum::<f64>()
        });
        rows.into_iter().sum::<f64>() * cell
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_is_exact_for_degree_15() {
        let v = gauss_legendre8(|x| x.powi(15) + 3.0 * x.powi(4), -1.0, 2.0);
        let exact = (2f64.powi(16) - 1.0) / 16.0 + 3.0 * (32.0 + 1.0) / 5.0;
        assert!((v - exact).abs() < 1e-10);
    }

    #[test]
    fn graded_gauss_handles_log_singularity() {
        let v = graded_gauss(|y| -y.ln(), 1e-12, 1.0);
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn triangle_rule_is_exact_for_affine() {
        let t = Triangle(Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(1.0, 1.0));
        assert_eq!(t.area(), 1.0);
        let n = 7;
        let count = (0..n).map(|i| t.row_centroids(n, i).len()).sum::<usize>();
        assert_eq!(count, n * n);
        let v = t.integrate(n, |p| Some(2.0 * p.x1 + p.x2 + 1.0));
        // centroid (1, 1/3): integral = area * f(centroid).
        assert!((v - (2.0 + 1.0 / 3.0 + 1.0)).abs() < 1e-12);
    }
}
