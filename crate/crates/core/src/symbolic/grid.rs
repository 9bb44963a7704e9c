//! Grid experiments (escaping-set components, finite-horizon `Λ_Z`) and
//! their CSV / raw-tensor writers.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use super::{classify_point, in_closed_b00, ClassifyOptions, Verdict};
use crate::geometry::{MapParams, Vec3};
use crate::map::zorich_eval;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl GridBox {
    /// Centre of cell `(i, j, k)` of a `res³` grid; `i` runs along `x1`.
    pub fn cell_centre(&self, res: usize, i: usize, j: usize, k: usize) -> Vec3 {
        let c = |a: usize, d: usize| self.min[d] + (a as f64 + 0.5) / res as f64 * (self.max[d] - self.min[d]);
        Vec3::new(c(i, 0), c(j, 1), c(k, 2))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentReport {
    /// Always states that the result is observational.
    pub label: String,
    pub resolution: usize,
    pub horizon: usize,
    pub escape_radius: f64,
    pub grid_box: GridBox,
    pub escaping_points: usize,
    /// Component sizes, largest first.
    pub component_sizes: Vec<usize>,
    /// Share of escaping points in the largest component (0 if none).
    pub dominant_fraction: f64,
    /// Verdict codes (see [`Verdict::code`]), `x1` fastest, then `x2`, `x3`.
    #[serde(skip)]
    pub verdicts: Vec<u8>,
}

/// Classifies the cell centres of a `res³` grid and groups escaping cells
/// into 26-connected components.
pub fn escaping_grid_components(
    params: &MapParams,
    grid_box: GridBox,
    resolution: usize,
    horizon: usize,
    escape_radius: f64,
) -> ComponentReport {
    let res = resolution.max(1);
    let opts = ClassifyOptions::new(horizon, escape_radius);
    let flat = |i: usize, j: usize, k: usize| i + res * (j + res * k);
    let verdicts: Vec<u8> = par::map_indexed(res * res, |jk| {
        let (j, k) = (jk % res, jk / res);
        (0..res)
            .map(|i| classify_point(params, grid_box.cell_centre(res, i, j, k), &opts).verdict.code())
            .collect::<Vec<u8>>()
    })
    .into_iter()
    .flatten()
    .collect();

    let escaping = Verdict::Escaping.code();
    let mut uf = UnionFind::<usize>::new(verdicts.len());
    for k in 0..res {
        for j in 0..res {
            for i in 0..res {
                if verdicts[flat(i, j, k)] != escaping {
                    continue;
                }
                // Half of the 26-neighbourhood suffices for an undirected union.
                for (di, dj, dk) in forward_neighbours() {
                    let (ni, nj, nk) = (i as i64 + di, j as i64 + dj, k as i64 + dk);
                    if [ni, nj, nk].iter().any(|&c| c < 0 || c >= res as i64) {
                        continue;
                    }
                    let n = flat(ni as usize, nj as usize, nk as usize);
                    if verdicts[n] == escaping {
                        uf.union(flat(i, j, k), n);
                    }
                }
            }
        }
    }
    let mut sizes = std::collections::HashMap::new();
    for (idx, &v) in verdicts.iter().enumerate() {
        if v == escaping {
            *sizes.entry(uf.find(idx)).or_insert(0usize) += 1;
        }
    }
    let mut component_sizes: Vec<usize> = sizes.into_values().collect();
    component_sizes.sort_unstable_by(|a, b| b.cmp(a));
    let escaping_points: usize = component_sizes.iter().sum();
    ComponentReport {
        label: "observational: finite-horizon grid connectivity neither proves nor refutes connectedness of the escaping set"
            .into(),
        resolution: res,
        horizon,
        escape_radius,
        grid_box,
        escaping_points,
        dominant_fraction: component_sizes.first().map_or(0.0, |&m| m as f64 / escaping_points as f64),
        component_sizes,
        verdicts,
    }
}

fn forward_neighbours() -> impl Iterator<Item = (i64, i64, i64)> {
    (-1..=1)
        .flat_map(|dk| (-1..=1).flat_map(move |dj| (-1..=1).map(move |di| (di, dj, dk))))
        .filter(|&(di, dj, dk)| (dk, dj, di) > (0, 0, 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    /// Samples along `x1 + x2 ∈ [−2λ, 2λ]`.
    pub n_s: usize,
    /// Samples along `x1 − x2 ∈ [0, 2λ]`.
    pub n_d: usize,
    pub x3_min: f64,
    pub x3_max: f64,
    pub n_z: usize,
}

/// Grid points over `B̄_(0,0) × [x3_min, x3_max]` whose first `horizon`
/// iterates all stay in `B̄_(0,0)`. Clouds are nested in `horizon`.
pub fn lambda_z_approx(params: &MapParams, horizon: usize, grid: &LambdaGrid) -> Vec<Vec3> {
    let lambda = params.lambda;
    let lin = |a: f64, b: f64, i: usize, n: usize| if n <= 1 { 0.5 * (a + b) } else { a + (b - a) * i as f64 / (n - 1) as f64 };
    par::map_indexed(grid.n_z, |kz| {
        let x3 = lin(grid.x3_min, grid.x3_max, kz, grid.n_z);
        let mut out = Vec::new();
        for is in 0..grid.n_s {
            let s = lin(-2.0 * lambda, 2.0 * lambda, is, grid.n_s);
            for id in 0..grid.n_d {
                let d = lin(0.0, 2.0 * lambda, id, grid.n_d);
                let x = Vec3::new(0.5 * (s + d), 0.5 * (s - d), x3);
                if stays_in_b00(params, x, horizon) {
                    out.push(x);
                }
            }
        }
        out
    })
    .into_iter()
    .flatten()
    .collect()
}

fn stays_in_b00(params: &MapParams, x: Vec3, horizon: usize) -> bool {
    let mut cur = x;
    for _ in 0..horizon {
        match zorich_eval(params, cur) {
            Ok(next) if in_closed_b00(next, params.lambda) => cur = next,
            _ => return false,
        }
    }
    true
}

/// CSV with header `x1,x2,x3`.
pub fn write_points_csv(path: &Path, points: &[Vec3]) -> io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "x1,x2,x3")?;
    for p in points {
        writeln!(w, "{},{},{}", p.x1, p.x2, p.x3)?;
    }
    w.flush()
}

/// CSV with header `x1,x2,x3,k`, one row per vertex of polyline `k`.
pub fn write_polylines_csv(path: &Path, curves: &[Vec<Vec3>]) -> io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "x1,x2,x3,k")?;
    for (k, curve) in curves.iter().enumerate() {
        for p in curve {
            writeln!(w, "{},{},{},{k}", p.x1, p.x2, p.x3)?;
        }
    }
    w.flush()
}

/// Writes `<stem>.bin` (one byte per cell, `x1` fastest) and `<stem>.json`
/// describing shape, box and encoding.
pub fn write_grid_tensor(dir: &Path, stem: &str, report: &ComponentReport) -> io::Result<()> {
    fs::write(dir.join(format!("{stem}.bin")), &report.verdicts)?;
    let res = report.resolution;
    let sidecar = serde_json::json!({
        "shape": [res, res, res],
        "order": "x1 fastest, then x2, then x3",
        "dtype": "u8",
        "encoding": {"0": "undecided", "1": "escaping", "2": "bounded"},
        "box": report.grid_box,
        "report": report,
    });
    fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&sidecar)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbour_half_has_thirteen() {
        assert_eq!(forward_neighbours().count(), 13);
    }

    #[test]
    fn empty_when_horizon_tiny() {
        let p = MapParams::sphere(2.0, 1.0).unwrap();
        let b = GridBox { min: [-1.0, -1.0, 0.0], max: [1.0, 1.0, 1.0] };
        let r = escaping_grid_components(&p, b, 8, 1, 1e300);
        assert_eq!(r.escaping_points, 0);
        assert!(r.component_sizes.is_empty());
    }

    #[test]
    fn upper_box_is_one_component() {
        let p = MapParams::sphere(2.0, 1.0).unwrap();
        let b = GridBox { min: [-0.5, -0.5, 1.0], max: [0.5, 0.5, 2.0] };
        let r = escaping_grid_components(&p, b, 8, 20, 1e10);
        assert_eq!(r.escaping_points, 512);
        assert!(r.dominant_fraction > 0.9);
    }

    #[test]
    fn lambda_z_nested() {
        let p = MapParams::sphere(2.0, 0.3).unwrap();
        let g = LambdaGrid { n_s: 21, n_d: 11, x3_min: -3.0, x3_max: 1.0, n_z: 9 };
        assert_eq!(lambda_z_approx(&p, 0, &g).len(), 21 * 11 * 9);
        let h3 = lambda_z_approx(&p, 3, &g);
        let h4 = lambda_z_approx(&p, 4, &g);
        assert!(h4.iter().all(|x| h3.contains(x)));
        for &x in &h4 {
            let mut z = x;
            for _ in 0..4 {
                z = zorich_eval(&p, z).unwrap();
                assert!(in_closed_b00(z, p.lambda));
            }
        }
    }
}
