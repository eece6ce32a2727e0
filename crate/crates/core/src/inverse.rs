//! Inverse scattering: from a left reflection coefficient to the parameters
//! and potential that produce it.

use crate::completion::{parameters_from_reflection, ParameterSet};
use crate::dirac::{left_reflection, PotentialEvaluator};
use crate::error::{Error, Result};
use crate::matnum::{schur, CMatrix, C64};
use crate::realization::{
    contractive_on_real_line, default_contractivity_grid, probe_grid, similarity_between, uniform_grid,
    Realization, RANK_TOL,
};
use crate::riccati::RiccatiSolution;

/// Potential comparisons skip points this close to a singularity.
pub const SINGULARITY_GUARD: f64 = 1e-2;

#[derive(Debug, Clone)]
pub struct InverseResult {
    pub params: ParameterSet,
    pub riccati: RiccatiSolution,
    pub evaluator: PotentialEvaluator,
    /// Max gap between the input `R` and the recomputed `R_L` on the probe grid.
    pub reflection_residual: f64,
}

/// Max of `‖F(λ) − G(λ)‖_F` over a real probe grid avoiding both pole sets.
pub fn max_gap_on_probe_grid(f: &Realization, g: &Realization) -> Result<f64> {
    let mut poles = f.poles()?;
    poles.extend(g.poles()?);
    let a_norm = f.a.norm_fro().max(g.a.norm_fro()).max(1.0);
    let mut gap = 0.0f64;
    for x in probe_grid(&poles, a_norm) {
        let l = C64::new(x, 0.0);
        gap = gap.max(f.evaluate(l)?.dist(&g.evaluate(l)?));
    }
    Ok(gap)
}

/// Recovers the parameter set and potential from a strictly proper
/// reflection coefficient that is contractive on the real line.
pub fn invert_from_reflection(r: &Realization, tol: f64) -> Result<InverseResult> {
    if r.d.max_abs() > 1e-12 {
        return Err(Error::InvalidInput("reflection coefficient must vanish at infinity (D = 0)".into()));
    }
    let r = r.minimal_reduce(RANK_TOL);
    if !contractive_on_real_line(&r, &default_contractivity_grid(), 1e-9) {
        return Err(Error::NotContractive("sampled norm exceeds 1 or a pole lies on the real line".into()));
    }
    let completion = parameters_from_reflection(&r, tol)?;
    let recomputed = left_reflection(&completion.params)?;
    let reflection_residual = max_gap_on_probe_grid(&r, &recomputed)?;
    Ok(InverseResult {
        evaluator: PotentialEvaluator::new(completion.params.clone()),
        params: completion.params,
        riccati: completion.riccati,
        reflection_residual,
    })
}

/// Outcome of [`roundtrip_check`]. Residuals are relative, `‖x̃ − x‖/(1 + ‖x̃‖)`.
#[derive(Debug, Clone)]
pub struct RoundtripReport {
    /// Similarity taking the original parameters to the recovered ones.
    pub s: Option<CMatrix>,
    pub s0_residual: f64,
    pub lambda0_residual: f64,
    pub alpha_residual: f64,
    pub v_residual: f64,
    pub reflection_residual: f64,
    /// Points of `[0, x_max]` where the potential is singular.
    pub singularities: Vec<f64>,
    pub v_points_compared: usize,
    pub tol: f64,
    /// Set when the inversion itself failed.
    pub error: Option<String>,
}

impl RoundtripReport {
    pub fn passes(&self) -> bool {
        self.error.is_none()
            && self.s.is_some()
            && self.s0_residual <= self.tol
            && self.lambda0_residual <= self.tol
            && self.alpha_residual <= self.tol
            && self.v_residual <= self.tol
    }

    fn failed(tol: f64, msg: String) -> Self {
        Self {
            s: None,
            s0_residual: f64::INFINITY,
            lambda0_residual: f64::INFINITY,
            alpha_residual: f64::INFINITY,
            v_residual: f64::INFINITY,
            reflection_residual: f64::INFINITY,
            singularities: vec![],
            v_points_compared: 0,
            tol,
            error: Some(msg),
        }
    }
}

fn rel(a: &CMatrix, b: &CMatrix) -> f64 {
    a.dist(b) / (1.0 + a.norm_fro())
}

/// Computes `R_L` from `p`, rewrites its realization in the Schur basis of
/// `θ`, inverts it, and checks that the recovered parameters are similar to
/// `p` and produce the same potential on `[0, x_max]` (sampled at
/// `x_points`).
pub fn roundtrip_check(p: &ParameterSet, tol: f64, x_max: f64, x_points: usize) -> RoundtripReport {
    match roundtrip_inner(p, tol, x_max, x_points) {
        Ok(rep) => rep,
        Err(e) => RoundtripReport::failed(tol, e.to_string()),
    }
}

fn roundtrip_inner(p: &ParameterSet, tol: f64, x_max: f64, x_points: usize) -> Result<RoundtripReport> {
    let r_l = left_reflection(p)?;
    let basis = schur(&r_l.a)?.q.adjoint();
    let input = r_l.transform(&basis)?;
    let inv = match invert_from_reflection(&input, crate::riccati::RESIDUAL_TOL) {
        Ok(inv) => inv,
        Err(e) => return Ok(RoundtripReport::failed(tol, e.to_string())),
    };
    let q = &inv.params;
    let r_tilde = left_reflection(q)?;

    let mut rep = RoundtripReport::failed(tol, String::new());
    rep.error = None;
    rep.reflection_residual = inv.reflection_residual;

    let Some(s) = similarity_between(&r_l, &r_tilde, 1e-8) else {
        rep.error = Some("no similarity between the original and recovered realizations".into());
        return Ok(rep);
    };
    let sinv = crate::matnum::inverse(&s)?;
    rep.s0_residual = rel(&q.s0, &(&(&s * &p.s0) * &s.adjoint()));
    rep.lambda0_residual = rel(&q.lambda0(), &(&s * &p.lambda0()));
    rep.alpha_residual = rel(&q.alpha, &(&(&s * &p.alpha) * &sinv));
    rep.s = Some(s);

    let pe = PotentialEvaluator::new(p.clone());
    rep.singularities = pe.singularities(x_max)?;
    let mut worst = 0.0f64;
    let mut compared = 0;
    for x in uniform_grid(x_points, 0.0, x_max) {
        if rep.singularities.iter().any(|&y| (x - y).abs() < SINGULARITY_GUARD) {
            continue;
        }
        let (Ok(v), Ok(vt)) = (pe.potential_v(x), inv.evaluator.potential_v(x)) else {
            continue;
        };
        worst = worst.max(v.dist(&vt) / (1.0 + v.norm_fro()));
        compared += 1;
    }
    rep.v_residual = worst;
    rep.v_points_compared = compared;
    Ok(rep)
}
