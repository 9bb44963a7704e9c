//! The forward Zorich map, orbits, finite-difference Jacobians and the
//! one-dimensional exponential family that governs the vertical axis.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::geometry::{fold_cell, fold_plane, seam_distance, MapParams, Vec3, DEFAULT_OVERFLOW_GUARD};
use crate::{Result, ZorichError};

/// The signed face vector `(h1, h2, ±h3)` at `p(x)`, so that
/// `Z(x) = νe^{x3}·direction`. Never overflows.
pub fn zorich_direction(params: &MapParams, x: Vec3) -> Result<(Vec3, u8)> {
    if !x.is_finite() {
        return Err(ZorichError::domain(format!("non-finite point {x:?}")));
    }
    let fold = fold_plane(x.p(), params.lambda)?;
    let h = params.face.eval(fold.u, params.lambda)?;
    let h3 = if fold.parity == 0 { h.x3 } else { -h.x3 };
    Ok((Vec3::new(h.x1, h.x2, h3), fold.parity))
}

/// `Z_ν(x) = νe^{x3}·(h1, h2, (−1)^parity h3)(fold(p(x)))`.
pub fn zorich_eval(params: &MapParams, x: Vec3) -> Result<Vec3> {
    if x.x3 > params.overflow_guard {
        return Err(ZorichError::Overflow { height: x.x3 });
    }
    let (dir, _) = zorich_direction(params, x)?;
    Ok(dir * (params.nu * x.x3.exp()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    /// `|point| > escape_radius` after `step` iterations.
    Escaped { step: usize },
    /// The height of point `step − 1` tripped the overflow guard.
    Overflow { step: usize, height: f64 },
    Domain { step: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitTrace {
    pub points: Vec<Vec3>,
    pub heights: Vec<f64>,
    /// Fold parity at each point (which half-space its image lands in).
    pub parities: Vec<u8>,
    pub stop: StopReason,
}

impl OrbitTrace {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> Option<Vec3> {
        self.points.last().copied()
    }
}

/// Up to `n` iterates of `x`, stopping early on escape, overflow or a domain
/// error; never fails.
pub fn zorich_iterate(params: &MapParams, x: Vec3, n: usize, escape_radius: f64) -> OrbitTrace {
    let mut trace = OrbitTrace {
        points: Vec::with_capacity(n + 1),
        heights: Vec::with_capacity(n + 1),
        parities: Vec::with_capacity(n + 1),
        stop: StopReason::Completed,
    };
    let parity_of = |p: Vec3| fold_plane(p.p(), params.lambda).map(|f| f.parity).unwrap_or(0);
    trace.points.push(x);
    trace.heights.push(x.x3);
    trace.parities.push(parity_of(x));
    let mut cur = x;
    for step in 1..=n {
        match zorich_eval(params, cur) {
            Ok(next) => {
                trace.points.push(next);
                trace.heights.push(next.x3);
                trace.parities.push(parity_of(next));
                cur = next;
                if next.norm() > escape_radius {
                    trace.stop = StopReason::Escaped { step };
                    break;
                }
            }
            Err(ZorichError::Overflow { height }) => {
                trace.stop = StopReason::Overflow { step, height };
                break;
            }
            Err(_) => {
                trace.stop = StopReason::Domain { step };
                break;
            }
        }
    }
    trace
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiffMode {
    /// Central differences; refuses points within `2·step` of a seam.
    #[default]
    Central,
    /// Per-axis forward or backward differences chosen to stay inside the
    /// smooth piece containing `x`. First-order accurate.
    OneSided,
}

/// A 3×3 derivative matrix with determinant and operator-norm accessors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian(pub Matrix3<f64>);

impl Jacobian {
    pub fn det(&self) -> f64 {
        self.0.determinant()
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        self.0.singular_values().max()
    }

    /// Smallest singular value.
    pub fn min_singular_value(&self) -> f64 {
        self.0.singular_values().min()
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }
}

/// Default finite-difference step `1e−5·max(1, |x|)`.
pub fn default_step(x: Vec3) -> f64 {
    1e-5 * x.norm().max(1.0)
}

/// Identifies the smooth piece of `Z` containing `x`.
fn smooth_piece(x: Vec3, lambda: f64) -> [i64; 4] {
    let period = 2.0 * lambda;
    [
        fold_cell(x.x1, lambda),
        fold_cell(x.x2, lambda),
        ((x.x1 + x.x2) / period).floor() as i64,
        ((x.x1 - x.x2) / period).floor() as i64,
    ]
}

fn axis(j: usize) -> Vec3 {
    match j {
        0 => Vec3::new(1.0, 0.0, 0.0),
        1 => Vec3::new(0.0, 1.0, 0.0),
        _ => Vec3::new(0.0, 0.0, 1.0),
    }
}

pub fn jacobian_fd(params: &MapParams, x: Vec3, step: f64, mode: DiffMode) -> Result<Jacobian> {
    if !(step > 0.0) {
        return Err(ZorichError::domain(format!("step must be positive, got {step}")));
    }
    let mut m = Matrix3::zeros();
    match mode {
        DiffMode::Central => {
            let dist = seam_distance(x.p(), params.lambda);
            if dist <= 2.0 * step {
                return Err(ZorichError::Seam { distance: dist, required: 2.0 * step });
            }
            for j in 0..3 {
                let e = axis(j) * step;
                let d = (zorich_eval(params, x + e)? - zorich_eval(params, x - e)?) * (0.5 / step);
                m.set_column(j, &nalgebra::Vector3::new(d.x1, d.x2, d.x3));
            }
        }
        DiffMode::OneSided => {
            let piece = smooth_piece(x, params.lambda);
            let fx = zorich_eval(params, x)?;
            for j in 0..3 {
                let e = axis(j) * step;
                let d = if smooth_piece(x + e, params.lambda) == piece {
                    (zorich_eval(params, x + e)? - fx) * (1.0 / step)
                } else if smooth_piece(x - e, params.lambda) == piece {
                    (fx - zorich_eval(params, x - e)?) * (1.0 / step)
                } else {
                    let dist = seam_distance(x.p(), params.lambda);
                    return Err(ZorichError::Seam { distance: dist, required: step });
                };
                m.set_column(j, &nalgebra::Vector3::new(d.x1, d.x2, d.x3));
            }
        }
    }
    Ok(Jacobian(m))
}

/// `E_κ(t) = κe^t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFamily {
    pub kappa: f64,
}

impl ExpFamily {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(ZorichError::domain(format!("kappa must be > 0, got {kappa}")));
        }
        Ok(Self { kappa })
    }

    pub fn apply(&self, t: f64) -> f64 {
        self.kappa * t.exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpOrbit {
    pub values: Vec<f64>,
    /// The orbit stopped because a value exceeded the guard.
    pub overflowed: bool,
}

/// `t, E(t), …, Eⁿ(t)`, truncated when a value exceeds `guard`.
pub fn exp_iter_guarded(family: ExpFamily, t: f64, n: usize, guard: f64) -> ExpOrbit {
    let mut values = Vec::with_capacity(n + 1);
    values.push(t);
    let mut cur = t;
    for _ in 0..n {
        if cur > guard {
            return ExpOrbit { values, overflowed: true };
        }
        cur = family.apply(cur);
        values.push(cur);
    }
    ExpOrbit { values, overflowed: false }
}

pub fn exp_iter(family: ExpFamily, t: f64, n: usize) -> ExpOrbit {
    exp_iter_guarded(family, t, n, DEFAULT_OVERFLOW_GUARD)
}
