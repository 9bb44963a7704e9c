//! The full verification suite, as a list of [`CheckRecord`]s.

use serde_json::json;

use super::*;
use crate::branches::{ball_expansion_check, ContractionPool};
use crate::geometry::{FaceKind, MapParams, Vec3};
use crate::planar::{area_between, gamma_m_curve, planar_area_a0, planar_area_a0_bound, planar_area_am};

#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    /// Base sample count for the Monte-Carlo checks.
    pub samples: usize,
    /// Per-region resolution of the level-surface quadrature.
    pub quad_resolution: usize,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { samples: 2000, quad_resolution: 64, seed: 0 }
    }
}

fn v3(x: Vec3) -> Vec<f64> {
    x.to_array().to_vec()
}

/// Run every verifier at `params`. Checks whose hypotheses fail (e.g.
/// `νλ ≤ 1/e` for the ascent) are reported with `ok = false` and a note.
pub fn run_suite(params: &MapParams, model: &FaceModel, opts: SuiteOptions) -> Vec<CheckRecord> {
    let pj = params_json(params, model);
    let mut out = Vec::new();
    let n = opts.samples.max(16);
    let seed = opts.seed;

    let regime = regime_report(params, model);
    out.push(
        CheckRecord::new("regime", pj.clone(), params.lambda, regime.l_hat_pow5, regime.verdicts.theorem_regime)
            .with_note(format!(
                "nu = {} vs threshold {}; kappa = {} vs 1/e",
                params.nu, regime.nu_threshold, regime.kappa
            )),
    );

    let sweep = det_sweep(params, model, n / 10, 3, SweepRegion::default(), seed);
    out.push(
        CheckRecord::new(
            "single_step_det",
            pj.clone(),
            sweep.worst_single_ratio,
            1.0,
            sweep.checked > 0 && sweep.single_violations == 0,
        )
        .with_point(sweep.worst_single_point.map(v3))
        .with_note(format!("min det/bound over {} points", sweep.checked)),
    );
    let iter_bad: usize = sweep.iterated_violations.iter().sum();
    out.push(
        CheckRecord::new("iterated_det", pj.clone(), sweep.worst_iterated_margin, 0.0, sweep.checked > 0 && iter_bad == 0)
            .with_point(sweep.worst_iterated_point.map(v3))
            .with_note(format!("min log(lhs/rhs) for n = 1..=3; diagnoses: {:?}", sweep.diagnoses)),
    );

    if matches!(params.face, FaceKind::Sphere) {
        let planar = planar_det_sweep(params, model, n, seed ^ 0x51);
        out.push(
            CheckRecord::new("planar_det", pj.clone(), planar.worst_ratio, 1.0, planar.checked > 0 && planar.violations == 0)
                .with_point(planar.worst_point.map(|z| vec![z.x, z.y])),
        );
        let mut worst = 0.0f64;
        for m in 1..=3 {
            let exact = planar_area_am(params.lambda, m).unwrap_or(f64::NAN);
            let quad = match (gamma_m_curve(params, m, 4000), gamma_m_curve(params, m + 1, 4000)) {
                (Ok(a), Ok(b)) => area_between(&a, &b),
                _ => f64::NAN,
            };
            worst = worst.max(((quad - exact) / exact).abs());
        }
        out.push(CheckRecord::new("planar_area_am", pj.clone(), worst, 0.01, worst <= 0.01).with_note("max relative error, m = 1..=3"));
        let a0 = planar_area_a0(params, 1e-12);
        let bound = planar_area_a0_bound(params, model.l_hat);
        out.push(CheckRecord::new("planar_area_a0", pj.clone(), a0, bound, a0.is_finite() && a0 <= bound));
    }

    let mut worst_tn = 0.0f64;
    let mut decreasing = true;
    let mut prev = f64::INFINITY;
    for k in 0..4 {
        let (num, exact) = volume_tn(params, k, opts.quad_resolution);
        worst_tn = worst_tn.max(((num - exact) / exact).abs());
        decreasing &= num < prev;
        prev = num;
    }
    out.push(
        CheckRecord::new("volume_tn", pj.clone(), worst_tn, 1e-6, worst_tn <= 1e-6 && decreasing)
            .with_note("max relative error, n = 0..=3; T_n decreasing"),
    );

    let pool = ContractionPool::sample(params, n, seed ^ 0xC0);
    match pool.m0_search(0.95, 0.5, 50.0) {
        Some((m0, alpha)) => {
            out.push(CheckRecord::new("contraction", pj.clone(), alpha, 0.95, true).with_note(format!("M0 = {m0}")));
            let ball = ball_expansion_check(params, m0, alpha, n, seed ^ 0xBA);
            out.push(
                CheckRecord::new("ball_inclusion", pj.clone(), ball.worst_fraction, 1.0, ball.checked > 0 && ball.failures == 0)
                    .with_note(format!("{} triples", ball.checked)),
            );
        }
        None => out.push(CheckRecord::new("contraction", pj.clone(), pool.alpha_at(50.0), 0.95, false).with_note("no M0 <= 50")),
    }

    match verify_lipschitz_iterates(params, model, 0.5, 3, n, seed ^ 0x11) {
        Ok(r) => out.push(
            CheckRecord::new("lipschitz_iterates", pj.clone(), r.worst_ratio, 1.0 + 1e-3, r.ok)
                .with_point(r.worst_pair.map(|(a, b)| [a.to_array(), b.to_array()].concat()))
                .with_note(format!("n = {} of {}", r.n_used, r.n_requested)),
        ),
        Err(e) => out.push(CheckRecord::new("lipschitz_iterates", pj.clone(), f64::NAN, 1.0, false).with_note(e.to_string())),
    }

    match key_inequality_n(params) {
        Ok(k) => out.push(
            CheckRecord::new("key_inequality", pj.clone(), k.log_lhs, k.log_rhs, k.persists)
                .with_note(format!("N = {}, c = {}", k.n, k.c)),
        ),
        Err(e) => out.push(CheckRecord::new("key_inequality", pj.clone(), f64::NAN, params.lambda.ln(), false).with_note(e.to_string())),
    }

    let epsilon = 0.05 * params.lambda;
    match ascent_constant(params, epsilon) {
        Ok(a) => {
            let (checked, failures) = ascent_check(params, &a, n, seed ^ 0xA5);
            out.push(
                CheckRecord::new("ascent", json!({"params": pj, "epsilon": epsilon, "delta": a.delta}), failures as f64, 0.0, failures == 0)
                    .with_note(format!("c = {}, {checked} points", a.c)),
            );
        }
        Err(e) => out.push(CheckRecord::new("ascent", pj, f64::NAN, 0.0, false).with_note(e.to_string())),
    }
    out
}
