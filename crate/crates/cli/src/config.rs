//! Run configuration: a single JSON document. The built-in defaults live in
//! `default_config.json`; a user file is merged over them key by key.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;
use serde_json::Value;
use zorich_lab::branches::BeamIndex;
use zorich_lab::geometry::BlendedFace;
use zorich_lab::render::{Plane, SliceSpec, Window};
use zorich_lab::{FaceKind, MapParams, Vec3};

use crate::CliError;

const DEFAULTS: &str = include_str!("../default_config.json");

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub params: ParamsConfig,
    pub face_samples: usize,
    pub seed: u64,
    pub horizon: usize,
    pub escape_radius: f64,
    pub render: RenderConfig,
    pub orbit: OrbitConfig,
    pub itinerary: ItineraryConfig,
    pub periodic: PeriodicConfig,
    pub verify: VerifyConfig,
    pub surfaces: SurfacesConfig,
    pub curves: CurvesConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub lambda: f64,
    pub nu: f64,
    pub face: String,
    pub blend_weight: f64,
    pub overflow_guard: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderConfig {
    pub plane: Plane,
    pub window: Window,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitConfig {
    pub point: [f64; 3],
    pub steps: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItineraryConfig {
    pub point: [f64; 3],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicConfig {
    pub word: Vec<[i64; 2]>,
    pub tol: f64,
    pub max_rounds: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub samples: usize,
    pub quad_resolution: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfacesConfig {
    pub n_max: u32,
    pub grid: usize,
    pub quad_resolution: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvesConfig {
    pub m_max: u32,
    pub k_max: usize,
    pub n_points: usize,
    pub s_min: f64,
    pub s_max: f64,
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    // Planes are tagged unions: replace them wholesale.
                    Some(slot) if k != "plane" => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut value: Value = serde_json::from_str(DEFAULTS).expect("built-in defaults are valid JSON");
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let user: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{} is not valid JSON: {e}", path.display())))?;
            if !user.is_object() {
                return Err(CliError::Config("the configuration must be a JSON object".into()));
            }
            merge(&mut value, user);
        }
        serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn map_params(&self) -> Result<MapParams, CliError> {
        let p = &self.params;
        let face = match p.face.as_str() {
            "sphere" => FaceKind::Sphere,
            "pyramid" => FaceKind::Pyramid,
            "blended" => {
                if !(0.0..=1.0).contains(&p.blend_weight) {
                    return Err(CliError::Config("blend_weight must lie in [0, 1]".into()));
                }
                FaceKind::Generalized(Arc::new(BlendedFace { weight: p.blend_weight }))
            }
            other => return Err(CliError::Config(format!("unknown face {other:?} (sphere, pyramid, blended)"))),
        };
        if p.overflow_guard.is_nan() || p.overflow_guard <= 0.0 {
            return Err(CliError::Config("overflow_guard must be positive".into()));
        }
        Ok(MapParams::new(p.lambda, p.nu, face).map_err(|e| CliError::Config(e.to_string()))?.with_guard(p.overflow_guard))
    }

    pub fn slice_spec(&self) -> SliceSpec {
        SliceSpec {
            plane: self.render.plane,
            window: self.render.window,
            width: self.render.width,
            height: self.render.height,
            horizon: self.horizon,
            escape_radius: self.escape_radius,
        }
    }

    pub fn word(&self) -> Vec<BeamIndex> {
        self.periodic.word.iter().map(|&[i, j]| BeamIndex::new(i, j)).collect()
    }
}

pub fn point(p: [f64; 3]) -> Vec3 {
    Vec3::new(p[0], p[1], p[2])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse() {
        let c = Config::load(None).unwrap();
        assert_eq!(c.horizon, 64);
        assert_eq!(c.escape_radius, 1e10);
        assert_eq!(c.params.overflow_guard, 700.0);
        assert!(c.map_params().is_ok());
    }

    #[test]
    fn merge_is_deep() {
        let mut base = serde_json::json!({"a": {"b": 1, "c": 2}, "plane": {"kind": "x3", "value": 1}});
        merge(&mut base, serde_json::json!({"a": {"c": 5}, "plane": {"kind": "diagonal"}}));
        assert_eq!(base, serde_json::json!({"a": {"b": 1, "c": 5}, "plane": {"kind": "diagonal"}}));
    }
}
