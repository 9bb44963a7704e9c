//! Numerical verification of the quantitative estimates behind the
//! dynamics: regime thresholds, determinant bounds, level-surface volumes,
//! ascent, Lipschitz growth of iterates and the key inequality.
//!
//! Every verifier returns its two sides and a verdict; [`CheckRecord`] is the
//! common JSON shape.

mod det;
mod growth;
mod suite;
mod surfaces;

pub use det::{
    det_sweep, diagnose_iterated_violation, planar_det_sweep, single_step_bound, verify_iterated_det,
    verify_single_step_det, DetDiagnosis, DetSweep, IteratedDet, PlanarDetSweep, SweepRegion,
};
pub use growth::{
    ascent_check, ascent_constant, key_inequality_log_lhs, key_inequality_n, key_inequality_naive,
    verify_lipschitz_iterates, Ascent, KeyInequality, LipschitzReport,
};
pub use suite::{run_suite, SuiteOptions};
pub use surfaces::{
    b00_contains, b00_image_side, level_region, level_surface_height, level_surface_sample, volume_in,
    volume_tn, LevelRegion, LevelSurfaceSample,
};

use serde::Serialize;

use crate::geometry::{FaceModel, MapParams};

/// One verification outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check: String,
    pub params: serde_json::Value,
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
    pub worst_point: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    pub fn new(check: &str, params: serde_json::Value, lhs: f64, rhs: f64, ok: bool) -> Self {
        Self { check: check.to_string(), params, lhs, rhs, ok, worst_point: None, note: None }
    }

    pub fn with_point(mut self, p: Option<Vec<f64>>) -> Self {
        self.worst_point = p;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeVerdicts {
    /// `λ > L⁵`
    pub lambda_above_l5: bool,
    /// `ν > √(2L/λ)`
    pub nu_above_threshold: bool,
    /// `νλ > 1/e`: the vertical axis escapes.
    pub kappa_above_inv_e: bool,
    /// `λ > C_hgen`
    pub lambda_above_c_hgen: bool,
    /// `ν²λ > 2L`: planar areas grow.
    pub planar_area_growth: bool,
    /// Both hypotheses of the main theorem.
    pub theorem_regime: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub face: String,
    pub l_hat: f64,
    pub ell_hat: f64,
    pub theta_hat: f64,
    pub min_norm: f64,
    pub lambda: f64,
    pub nu: f64,
    pub l_hat_pow5: f64,
    pub nu_threshold: f64,
    pub kappa: f64,
    pub inv_e: f64,
    /// `max{L⁵, 2L}/(min|𝔥|·sin θ)`.
    pub c_hgen: f64,
    pub verdicts: RegimeVerdicts,
}

impl RegimeReport {
    pub fn recompute_verdicts(&self) -> RegimeVerdicts {
        let lambda_above_l5 = self.lambda > self.l_hat_pow5;
        let nu_above_threshold = self.nu > self.nu_threshold;
        RegimeVerdicts {
            lambda_above_l5,
            nu_above_threshold,
            kappa_above_inv_e: self.kappa > self.inv_e,
            lambda_above_c_hgen: self.lambda > self.c_hgen,
            planar_area_growth: self.nu * self.nu * self.lambda > 2.0 * self.l_hat,
            theorem_regime: lambda_above_l5 && nu_above_threshold,
        }
    }
}

pub fn regime_report(params: &MapParams, model: &FaceModel) -> RegimeReport {
    let l = model.l_hat;
    let mut report = RegimeReport {
        face: params.face.name().to_string(),
        l_hat: l,
        ell_hat: model.ell_hat,
        theta_hat: model.theta_s,
        min_norm: model.min_norm,
        lambda: params.lambda,
        nu: params.nu,
        l_hat_pow5: l.powi(5),
        nu_threshold: (2.0 * l / params.lambda).sqrt(),
        kappa: params.kappa(),
        inv_e: (-1.0f64).exp(),
        c_hgen: l.powi(5).max(2.0 * l) / (model.min_norm * model.theta_s.sin()),
        verdicts: RegimeVerdicts {
            lambda_above_l5: false,
            nu_above_threshold: false,
            kappa_above_inv_e: false,
            lambda_above_c_hgen: false,
            planar_area_growth: false,
            theorem_regime: false,
        },
    };
    report.verdicts = report.recompute_verdicts();
    report
}

/// Parameters of a run as a JSON object (for [`CheckRecord::params`]).
pub fn params_json(params: &MapParams, model: &FaceModel) -> serde_json::Value {
    serde_json::json!({
        "lambda": params.lambda,
        "nu": params.nu,
        "face": params.face.name(),
        "l_hat": model.l_hat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FaceKind;

    fn model(kind: FaceKind, l: f64) -> FaceModel {
        FaceModel::with_constants(kind, l, 0.38, 1.0, 1.5)
    }

    #[test]
    fn regime_thresholds() {
        let l: f64 = 2.0;
        let lambda = l.powi(5) + 1.0;
        let nu = (2.0 * l / lambda).sqrt() + 0.1;
        let p = MapParams::sphere(lambda, nu).unwrap();
        let r = regime_report(&p, &model(FaceKind::Sphere, l));
        assert!(r.verdicts.theorem_regime && r.verdicts.kappa_above_inv_e);
        assert_eq!(r.verdicts, r.recompute_verdicts());

        let p = MapParams::sphere(2.0, (-1.0f64).exp() / 2.0).unwrap();
        let r = regime_report(&p, &model(FaceKind::Sphere, l));
        assert!(!r.verdicts.kappa_above_inv_e || r.kappa > r.inv_e);
        assert!(!r.verdicts.lambda_above_l5);
    }

    #[test]
    fn pyramid_c_hgen() {
        let m = FaceModel::with_constants(FaceKind::Pyramid, 2f64.sqrt(), 1.0, 0.5f64.sqrt(), std::f64::consts::FRAC_PI_6);
        let r = regime_report(&MapParams::pyramid(20.0, 1.0).unwrap(), &m);
        assert!((r.c_hgen - 16.0).abs() < 1e-9);
        assert!(r.verdicts.lambda_above_c_hgen);
    }
}
