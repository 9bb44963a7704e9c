//! `zorich-lab`: command-line front end.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 a verification
//! or computation failed.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;
use zorich_lab::analysis::{self, regime_report, run_suite, SuiteOptions};
use zorich_lab::geometry::Vec2;
use zorich_lab::map::zorich_iterate;
use zorich_lab::planar::gamma_m_curve;
use zorich_lab::render::render_slice;
use zorich_lab::symbolic::{self, fine_itinerary, gamma_k_curves, periodic_point, write_polylines_csv, Verdict};
use zorich_lab::{par, FaceModel, ZorichError};

use config::{point, Config};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Failed(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Io(_) => 1,
            Self::Failed(_) => 2,
        }
    }
}

impl From<ZorichError> for CliError {
    fn from(e: ZorichError) -> Self {
        match e {
            ZorichError::NoConvergence { .. } | ZorichError::Overflow { .. } => Self::Failed(e.to_string()),
            other => Self::Config(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "zorich-lab", version, about = "Numerical laboratory for Zorich maps")]
struct Cli {
    /// JSON configuration merged over the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for images and data files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads (overrides ZORICH_LAB_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for sampled estimates (overrides the configuration).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Escape-time render of a planar slice.
    Render,
    /// Print an orbit.
    Orbit,
    /// Print the itinerary of a point.
    Itinerary,
    /// Find the periodic point of the configured word.
    Periodic,
    /// Run the verification suite.
    Verify,
    /// Level-surface heights and slab volumes.
    Surfaces,
    /// Planar curves γ_m and spatial curves γ_k.
    Curves,
    /// Report the parameter regime.
    Regime,
}

fn threads(cli: &Cli) -> Result<usize, CliError> {
    if let Some(t) = cli.threads {
        return Ok(t);
    }
    match std::env::var("ZORICH_LAB_THREADS") {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Config(format!("ZORICH_LAB_THREADS={v:?} is not a count"))),
        Err(_) => Ok(0),
    }
}

fn print_json(value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Failed(e.to_string()))?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}")?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Failed(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

fn face_model(cfg: &Config, seed: u64) -> Result<FaceModel, CliError> {
    let params = cfg.map_params()?;
    Ok(FaceModel::estimate(params.face, cfg.face_samples.max(1), seed)?)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = Config::load(cli.config.as_deref())?;
    let params = cfg.map_params()?;
    let seed = cli.seed.unwrap_or(cfg.seed);
    let threads = threads(cli)?;
    if !matches!(cli.command, Command::Orbit | Command::Itinerary | Command::Regime) {
        std::fs::create_dir_all(&cli.out)?;
    }
    match cli.command {
        Command::Render => {
            let spec = cfg.slice_spec();
            let raster = render_slice(&params, &spec, threads)?;
            raster.save_ppm(&cli.out.join("slice.ppm"))?;
            #[cfg(feature = "png")]
            raster.save_png(&cli.out.join("slice.png"))?;
            std::fs::write(cli.out.join("slice.raster"), raster.to_bytes())?;
            print_json(&json!({
                "width": raster.width,
                "height": raster.height,
                "escaping": raster.count(Verdict::Escaping),
                "bounded": raster.count(Verdict::Bounded),
                "undecided": raster.count(Verdict::Undecided),
                "image": cli.out.join("slice.ppm"),
            }))
        }
        Command::Orbit => {
            let trace = zorich_iterate(&params, point(cfg.orbit.point), cfg.orbit.steps, cfg.escape_radius);
            print_json(&trace)
        }
        Command::Itinerary => {
            let x = point(cfg.itinerary.point);
            let it = symbolic::itinerary(&params, x, cfg.horizon);
            print_json(&it)
        }
        Command::Periodic => {
            let word = cfg.word();
            let pp = periodic_point(&params, &word, cfg.periodic.tol, cfg.periodic.max_rounds)?;
            let fine = fine_itinerary(&params, pp.x, 3 * word.len());
            print_json(&json!({ "word": cfg.periodic.word, "point": pp, "itinerary": fine }))
        }
        Command::Verify => {
            let model = face_model(&cfg, seed)?;
            let opts = SuiteOptions { samples: cfg.verify.samples, quad_resolution: cfg.verify.quad_resolution, seed };
            let records = if threads > 0 { par::with_threads(threads, || run_suite(&params, &model, opts)) } else { run_suite(&params, &model, opts) };
            let all_ok = records.iter().all(|r| r.ok);
            let report = json!({ "all_ok": all_ok, "records": records });
            write_json(&cli.out.join("verify.json"), &report)?;
            print_json(&report)?;
            if all_ok {
                Ok(())
            } else {
                let failed: Vec<&str> = records.iter().filter(|r| !r.ok).map(|r| r.check.as_str()).collect();
                Err(CliError::Failed(format!("verification failed: {}", failed.join(", "))))
            }
        }
        Command::Surfaces => surfaces(&cfg, &params, &cli.out),
        Command::Curves => curves(&cfg, &params, &cli.out),
        Command::Regime => {
            let model = face_model(&cfg, seed)?;
            print_json(&regime_report(&params, &model))
        }
    }
}

fn surfaces(cfg: &Config, params: &zorich_lab::MapParams, out: &Path) -> Result<(), CliError> {
    let s = &cfg.surfaces;
    if s.quad_resolution < 16 {
        return Err(CliError::Config("surfaces.quad_resolution must be at least 16".into()));
    }
    let lambda = params.lambda;
    let g = s.grid.max(2);
    let mut rows = vec!["x1,x2,x3,n".to_string()];
    for n in 0..=s.n_max {
        for a in 0..g {
            for b in 0..g {
                // Grid over B_(0,0) in (x1 + x2, x1 − x2) coordinates.
                let sum = -2.0 * lambda + 4.0 * lambda * (a as f64 + 0.5) / g as f64;
                let diff = 2.0 * lambda * (b as f64 + 0.5) / g as f64;
                let u = Vec2::new(0.5 * (sum + diff), 0.5 * (sum - diff));
                if let Ok(h) = analysis::level_surface_height(params, n, u) {
                    rows.push(format!("{},{},{h},{n}", u.x1, u.x2));
                }
            }
        }
    }
    std::fs::write(out.join("surfaces.csv"), rows.join("\n") + "\n")?;
    let table: Vec<_> = (0..=s.n_max)
        .map(|n| {
            let (numeric, formula) = analysis::volume_tn(params, n, s.quad_resolution);
            json!({ "n": n, "numeric": numeric, "formula": formula, "relative_error": ((numeric - formula) / formula).abs() })
        })
        .collect();
    print_json(&json!({ "image_side": analysis::b00_image_side(params)?, "tn": table, "heights": out.join("surfaces.csv") }))
}

fn curves(cfg: &Config, params: &zorich_lab::MapParams, out: &Path) -> Result<(), CliError> {
    let c = &cfg.curves;
    let mut rows = vec!["x,y,m".to_string()];
    for m in 1..=c.m_max {
        for z in gamma_m_curve(params, m, c.n_points)? {
            rows.push(format!("{},{},{m}", z.x, z.y));
        }
    }
    std::fs::write(out.join("gamma_m.csv"), rows.join("\n") + "\n")?;
    let g = gamma_k_curves(params, c.k_max, c.n_points, (c.s_min, c.s_max))?;
    write_polylines_csv(&out.join("gamma_k.csv"), &g.curves)?;
    let lengths: Vec<usize> = g.curves.iter().map(Vec::len).collect();
    print_json(&json!({
        "gamma_m": out.join("gamma_m.csv"),
        "gamma_k": out.join("gamma_k.csv"),
        "gamma_k_vertices": lengths,
        "gamma_k_dropped": g.dropped,
    }))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("zorich-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
