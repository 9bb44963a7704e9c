//! Escape-time rendering of planar slices of R³.
//!
//! A slice is an affine frame `origin + u·e1 + v·e2` with a window in
//! `(u, v)`. Pixels are classified with [`classify_point`] at their centres.
//! Work is split into 64×64 tiles; each tile is computed independently and
//! copied into its own region of the raster, so the output is bit-identical
//! for any number of workers.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::{MapParams, Vec3};
use crate::symbolic::{classify_point, ClassifyOptions, Verdict};
use crate::{par, Result, ZorichError};

pub const TILE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Plane {
    /// `x1 = x2`, coordinates `((x1 + x2)/√2, x3)`.
    Diagonal,
    /// `x1 = −x2`, coordinates `((x1 − x2)/√2, x3)`.
    AntiDiagonal,
    /// `x3 = value`, coordinates `(x1, x2)`.
    X3 { value: f64 },
    /// `x2 = value`, coordinates `(x1, x3)`.
    X2 { value: f64 },
    /// `x1 = value`, coordinates `(x2, x3)`.
    X1 { value: f64 },
    Affine { origin: [f64; 3], e1: [f64; 3], e2: [f64; 3] },
}

impl Plane {
    /// `(origin, e1, e2)`, checking orthonormality of affine frames.
    pub fn frame(&self) -> Result<(Vec3, Vec3, Vec3)> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = Vec3::new(0.0, 0.0, 1.0);
        let o = Vec3::new(0.0, 0.0, 0.0);
        Ok(match *self {
            Self::Diagonal => (o, Vec3::new(h, h, 0.0), z),
            Self::AntiDiagonal => (o, Vec3::new(h, -h, 0.0), z),
            Self::X3 { value } => (Vec3::new(0.0, 0.0, value), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)),
            Self::X2 { value } => (Vec3::new(0.0, value, 0.0), Vec3::new(1.0, 0.0, 0.0), z),
            Self::X1 { value } => (Vec3::new(value, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), z),
            Self::Affine { origin, e1, e2 } => {
                let [o, a, b] = [origin, e1, e2].map(|v| Vec3::new(v[0], v[1], v[2]));
                let tol = 1e-12;
                if !o.is_finite()
                    || (a.dot(a) - 1.0).abs() > tol
                    || (b.dot(b) - 1.0).abs() > tol
                    || a.dot(b).abs() > tol
                {
                    return Err(ZorichError::Config("spanning vectors of the frame must be orthonormal".into()));
                }
                (o, a, b)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub plane: Plane,
    pub window: Window,
    pub width: usize,
    pub height: usize,
    pub horizon: usize,
    pub escape_radius: f64,
}

impl SliceSpec {
    pub fn validate(&self) -> Result<(Vec3, Vec3, Vec3)> {
        if self.width == 0 || self.height == 0 {
            return Err(ZorichError::Config("raster dimensions must be at least 1".into()));
        }
        let w = self.window;
        if !(w.u_max > w.u_min && w.v_max > w.v_min) {
            return Err(ZorichError::Config("window must have positive extent".into()));
        }
        if !(self.escape_radius > 0.0) {
            return Err(ZorichError::Config("escape radius must be positive".into()));
        }
        self.plane.frame()
    }

    /// Plane coordinates of the centre of pixel `(i, j)`; row 0 is the top
    /// (largest `v`).
    pub fn pixel_uv(&self, i: usize, j: usize) -> (f64, f64) {
        let w = self.window;
        let du = (w.u_max - w.u_min) / self.width as f64;
        let dv = (w.v_max - w.v_min) / self.height as f64;
        (w.u_min + (i as f64 + 0.5) * du, w.v_min + ((self.height - 1 - j) as f64 + 0.5) * dv)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelRecord {
    pub verdict: Verdict,
    /// First step beyond the escape radius; `u32::MAX` if none.
    pub first_escape: u32,
    pub final_height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RasterGrid {
    pub width: usize,
    pub height: usize,
    /// Row-major, row 0 at the top.
    pub pixels: Vec<PixelRecord>,
}

impl RasterGrid {
    pub fn get(&self, i: usize, j: usize) -> PixelRecord {
        self.pixels[j * self.width + i]
    }

    /// 13 bytes per pixel: verdict code, first escape (u32 LE), final height
    /// (f64 bits LE).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.pixels.len() * 13);
        for p in &self.pixels {
            out.push(p.verdict.code());
            out.extend_from_slice(&p.first_escape.to_le_bytes());
            out.extend_from_slice(&p.final_height.to_bits().to_le_bytes());
        }
        out
    }

    pub fn count(&self, verdict: Verdict) -> usize {
        self.pixels.iter().filter(|p| p.verdict == verdict).count()
    }

    /// RGB triples, row-major.
    pub fn to_rgb(&self) -> Vec<u8> {
        self.pixels.iter().flat_map(colour).collect()
    }

    /// Binary PPM (`P6`, maxval 255).
    pub fn write_ppm(&self, mut w: impl Write) -> io::Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.to_rgb())
    }

    pub fn save_ppm(&self, path: &Path) -> io::Result<()> {
        let mut f = io::BufWriter::new(std::fs::File::create(path)?);
        self.write_ppm(&mut f)?;
        f.flush()
    }

    #[cfg(feature = "png")]
    pub fn save_png(&self, path: &Path) -> io::Result<()> {
        let f = io::BufWriter::new(std::fs::File::create(path)?);
        let mut enc = png::Encoder::new(f, self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(io::Error::other)?;
        writer.write_image_data(&self.to_rgb()).map_err(io::Error::other)
    }
}

/// Escape-time palette: 16 colours cycled by first-escape step, running from
/// deep blue through cyan and yellow to red.
pub const PALETTE: [[u8; 3]; 16] = [
    [25, 7, 26],
    [9, 1, 47],
    [4, 4, 73],
    [0, 7, 100],
    [12, 44, 138],
    [24, 82, 177],
    [57, 125, 209],
    [134, 181, 229],
    [211, 236, 248],
    [241, 233, 191],
    [248, 201, 95],
    [255, 170, 0],
    [204, 128, 0],
    [153, 87, 0],
    [106, 52, 3],
    [66, 30, 15],
];

/// Undecided black, bounded white, escaping by [`PALETTE`].
pub fn colour(p: &PixelRecord) -> [u8; 3] {
    match p.verdict {
        Verdict::Undecided => [0, 0, 0],
        Verdict::Bounded => [255, 255, 255],
        Verdict::Escaping => PALETTE[(p.first_escape as usize) % PALETTE.len()],
    }
}

fn pixel(params: &MapParams, spec: &SliceSpec, frame: &(Vec3, Vec3, Vec3), opts: &ClassifyOptions, i: usize, j: usize) -> PixelRecord {
    let (u, v) = spec.pixel_uv(i, j);
    let (o, e1, e2) = *frame;
    let c = classify_point(params, o + e1 * u + e2 * v, opts);
    PixelRecord {
        verdict: c.verdict,
        first_escape: c.first_escape.map_or(u32::MAX, |s| s as u32),
        final_height: c.final_height,
    }
}

/// Render with `threads` workers (`0` means the global default pool).
pub fn render_slice(params: &MapParams, spec: &SliceSpec, threads: usize) -> Result<RasterGrid> {
    let frame = spec.validate()?;
    let opts = ClassifyOptions::new(spec.horizon, spec.escape_radius);
    let (tw, th) = (spec.width.div_ceil(TILE), spec.height.div_ceil(TILE));
    let work = || {
        par::map_indexed(tw * th, |t| {
            let (ti, tj) = (t % tw, t / tw);
            let (i0, j0) = (ti * TILE, tj * TILE);
            let (i1, j1) = ((i0 + TILE).min(spec.width), (j0 + TILE).min(spec.height));
            let mut tile = Vec::with_capacity((i1 - i0) * (j1 - j0));
            for j in j0..j1 {
                for i in i0..i1 {
                    tile.push(pixel(params, spec, &frame, &opts, i, j));
                }
            }
            tile
        })
    };
    let tiles = if threads == 0 { work() } else { par::with_threads(threads, work) };
    let blank = PixelRecord { verdict: Verdict::Undecided, first_escape: u32::MAX, final_height: 0.0 };
    let mut pixels = vec![blank; spec.width * spec.height];
    for (t, tile) in tiles.into_iter().enumerate() {
        let (ti, tj) = (t % tw, t / tw);
        let (i0, j0) = (ti * TILE, tj * TILE);
        let w = (i0 + TILE).min(spec.width) - i0;
        for (r, row) in tile.chunks(w).enumerate() {
            let start = (j0 + r) * spec.width + i0;
            pixels[start..start + w].copy_from_slice(row);
        }
    }
    Ok(RasterGrid { width: spec.width, height: spec.height, pixels })
}

/// Plain row-by-row rendering on the calling thread, with no tiling.
pub fn render_slice_sequential(params: &MapParams, spec: &SliceSpec) -> Result<RasterGrid> {
    let frame = spec.validate()?;
    let opts = ClassifyOptions::new(spec.horizon, spec.escape_radius);
    let mut pixels = Vec::with_capacity(spec.width * spec.height);
    for j in 0..spec.height {
        for i in 0..spec.width {
            pixels.push(pixel(params, spec, &frame, &opts, i, j));
        }
    }
    Ok(RasterGrid { width: spec.width, height: spec.height, pixels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(plane: Plane, w: Window, n: usize) -> SliceSpec {
        SliceSpec { plane, window: w, width: n, height: n, horizon: 40, escape_radius: 1e10 }
    }

    const SQUARE: Window = Window { u_min: -3.0, u_max: 3.0, v_min: -3.0, v_max: 3.0 };

    #[test]
    fn tiles_match_sequential() {
        let p = MapParams::sphere(2.0, 0.5).unwrap();
        let s = spec(Plane::X3 { value: -0.5 }, SQUARE, 150);
        let a = render_slice(&p, &s, 3).unwrap();
        let b = render_slice_sequential(&p, &s).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
        assert_eq!(a.to_bytes(), render_slice(&p, &s, 1).unwrap().to_bytes());
    }

    #[test]
    fn single_pixel_is_window_centre() {
        let p = MapParams::sphere(2.0, 0.5).unwrap();
        let w = Window { u_min: 0.5, u_max: 1.5, v_min: -1.0, v_max: 0.0 };
        let r = render_slice(&p, &spec(Plane::Diagonal, w, 1), 1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let c = classify_point(&p, Vec3::new(h, h, -0.5), &ClassifyOptions::new(40, 1e10));
        assert_eq!(r.get(0, 0).verdict, c.verdict);
        assert_eq!(r.get(0, 0).final_height.to_bits(), c.final_height.to_bits());
    }

    #[test]
    fn sigma_symmetry_is_exact() {
        let p = MapParams::sphere(2.0, 0.5).unwrap();
        let n = 70;
        let r = render_slice(&p, &spec(Plane::X3 { value: 0.3 }, SQUARE, n), 2).unwrap();
        for j in 0..n {
            for i in 0..n {
                // σ swaps (u, v); with row 0 at the top this is reflection in
                // the image anti-diagonal.
                let (a, b) = (r.get(i, j), r.get(n - 1 - j, n - 1 - i));
                assert_eq!((a.verdict, a.first_escape), (b.verdict, b.first_escape));
            }
        }
    }

    #[test]
    fn axis_column_escapes() {
        let p = MapParams::sphere(2.0, 0.5).unwrap();
        let w = Window { u_min: -1.0, u_max: 1.0, v_min: 0.0, v_max: 4.0 };
        let r = render_slice(&p, &spec(Plane::Diagonal, w, 33), 1).unwrap();
        for j in 0..33 {
            assert_ne!(r.get(16, j).verdict, Verdict::Bounded);
        }
    }

    #[test]
    fn bad_frame_rejected() {
        let p = MapParams::sphere(2.0, 0.5).unwrap();
        let plane = Plane::Affine { origin: [0.0; 3], e1: [1.0, 0.0, 0.0], e2: [0.5, 0.5, 0.0] };
        assert!(matches!(render_slice(&p, &spec(plane, SQUARE, 4), 1), Err(ZorichError::Config(_))));
    }

    #[test]
    fn ppm_header() {
        let p = MapParams::sphere(2.0, 0.5).unwrap();
        let r = render_slice(&p, &spec(Plane::X3 { value: 0.0 }, SQUARE, 5), 1).unwrap();
        let mut buf = Vec::new();
        r.write_ppm(&mut buf).unwrap();
        assert!(buf.starts_with(b"P6\n5 5\n255\n"));
        assert_eq!(buf.len(), 11 + 75);
    }
}
