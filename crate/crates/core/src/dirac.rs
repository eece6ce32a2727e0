//! Direct scattering for the Dirac-type system with pseudo-exponential
//! potential `v(x) = −2iγ₁*e^{ixα*}S(x)⁻¹e^{ixα}γ`.
//!
//! Evaluation works with the congruent matrix
//! `R(x) = e^{−ixα}·S(x)·e^{ixα*}`, which stays bounded when `S(x)` grows
//! exponentially and tends to `κ_R⁻¹`. With `Λ̂(x) = [e^{−2ixα}γ₁, γ]`,
//!
//! - `v(x) = −2iγ₁*e^{2ixα*}R(x)⁻¹γ`,
//! - `w_α(x, λ) = I + i·j·Λ̂*R⁻¹(λ − α)⁻¹Λ̂`,
//! - `αR − Rα* = iΛ̂jΛ̂*`.

use crate::completion::{JSignature, ParameterSet};
use crate::error::{Error, Result};
use crate::matnum::{
    exp_integral, hermitian_eigenvalues, inverse, mat_exp, solve_linear, solve_sylvester, CMatrix, LinalgError, C64,
    I,
};
use crate::realization::{Realization, RANK_TOL};
use crate::riccati::spectral_band;

/// Default cap on the conditioning of `R(x)` before a point is reported
/// singular. Conditioning is measured against the summands of `R(x)`, so that
/// cancellation is detected even when `R(x)` is a scalar.
pub const SINGULARITY_THRESHOLD: f64 = 1e12;
/// Step of the inertia scan used to bracket singular points.
pub const SCAN_STEP: f64 = 1e-2;
/// Width to which singular points are bisected.
pub const BISECT_TOL: f64 = 1e-8;
/// Tolerance on successive differences of the numerical `κ_R` limit.
pub const KAPPA_LIMIT_TOL: f64 = 1e-5;

/// `Λ(x) = [e^{−ixα}γ₁, e^{ixα}γ]`.
pub fn lambda_profile(p: &ParameterSet, x: f64) -> CMatrix {
    let e = mat_exp(&p.alpha.scale(C64::new(0.0, -x)));
    let f = mat_exp(&p.alpha.scale(C64::new(0.0, x)));
    CMatrix::hstack(&[&(&e * &p.gamma1), &(&f * &p.gamma)])
}

/// `S(x) = S₀ + ∫₀ˣ Λ(t)Λ(t)* dt`.
pub fn accumulate_s(p: &ParameterSet, x: f64) -> CMatrix {
    let ma = p.alpha.scale(-I);
    let pa = p.alpha.scale(I);
    let g1 = exp_integral(&ma, &(&p.gamma1 * &p.gamma1.adjoint()), &ma.adjoint(), x);
    let g2 = exp_integral(&pa, &(&p.gamma * &p.gamma.adjoint()), &pa.adjoint(), x);
    (&(&p.s0 + &g1) + &g2).hermitian_part()
}

/// `Q(x) = e^{ixα}S(x)e^{−ixα*}`, nondecreasing in the Loewner order.
pub fn monotone_q(p: &ParameterSet, x: f64) -> CMatrix {
    let f = mat_exp(&p.alpha.scale(C64::new(0.0, x)));
    (&(&f * &accumulate_s(p, x)) * &f.adjoint()).hermitian_part()
}

/// Gauge quantities at one point.
#[derive(Debug, Clone)]
pub struct GaugeState {
    pub x: f64,
    /// `R(x) = e^{−ixα}S(x)e^{ixα*}`.
    pub r: CMatrix,
    /// `Λ̂(x) = [e^{−2ixα}γ₁, γ]`.
    pub lambda_hat: CMatrix,
    /// `e^{−ixα}`.
    pub e: CMatrix,
    /// `‖e^{−ixα}(S₀ + G₁)e^{ixα*}‖_F + ‖H₂‖_F`, the size of the summands of `R`.
    pub scale: f64,
}

#[derive(Debug, Clone)]
pub struct PotentialEvaluator {
    pub params: ParameterSet,
    pub singularity_threshold: f64,
    sig: JSignature,
    /// `−iα` and its adjoint, reused by every integral.
    ma: CMatrix,
    ma_adj: CMatrix,
    g1g1: CMatrix,
    gg: CMatrix,
}

impl PotentialEvaluator {
    pub fn new(params: ParameterSet) -> Self {
        let ma = params.alpha.scale(-I);
        let ma_adj = ma.adjoint();
        let g1g1 = &params.gamma1 * &params.gamma1.adjoint();
        let gg = &params.gamma * &params.gamma.adjoint();
        Self {
            sig: params.signature(),
            params,
            singularity_threshold: SINGULARITY_THRESHOLD,
            ma,
            ma_adj,
            g1g1,
            gg,
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.singularity_threshold = threshold;
        self
    }

    pub fn signature(&self) -> JSignature {
        self.sig
    }

    pub fn gauge(&self, x: f64) -> GaugeState {
        let p = &self.params;
        let e = mat_exp(&self.ma.scale_re(x));
        // ∫₀ˣ e^{−i(x+t)α}γ₁γ₁*e^{i(x+t)α*} dt and ∫₀ˣ e^{−isα}γγ*e^{isα*} ds
        let g1 = exp_integral(&self.ma, &self.g1g1, &self.ma_adj, x);
        let h2 = exp_integral(&self.ma, &self.gg, &self.ma_adj, x);
        let head = &(&e * &(&p.s0 + &g1)) * &e.adjoint();
        let scale = head.norm_fro() + h2.norm_fro();
        let r = &head + &h2;
        let e2 = &e * &e;
        let lambda_hat = CMatrix::hstack(&[&(&e2 * &p.gamma1), &p.gamma]);
        GaugeState {
            x,
            r: r.hermitian_part(),
            lambda_hat,
            e,
            scale,
        }
    }

    /// `‖αR − Rα* − iΛ̂jΛ̂*‖_F` and the scale it should be compared against.
    pub fn identity_residual(&self, x: f64) -> (f64, f64) {
        let g = self.gauge(x);
        let a = &self.params.alpha;
        let lhs = &(a * &g.r) - &(&g.r * &a.adjoint());
        let rhs = (&(&g.lambda_hat * &self.sig.matrix()) * &g.lambda_hat.adjoint()).scale(I);
        let scale = 2.0 * a.norm_fro() * g.r.norm_fro() + g.lambda_hat.norm_fro().powi(2);
        (lhs.dist(&rhs), scale)
    }

    /// `scale(R)·‖R⁻¹‖`, infinite when `R` is exactly singular.
    pub fn conditioning(&self, g: &GaugeState) -> f64 {
        let sv = crate::matnum::singular_values(&g.r);
        match sv.last() {
            Some(&smin) if smin > 0.0 => g.scale.max(sv[0]) / smin,
            Some(_) => f64::INFINITY,
            None => 1.0,
        }
    }

    /// Solves `R(x)·Y = rhs`, reporting a singular point when `R(x)` is too
    /// ill-conditioned.
    fn solve_r(&self, g: &GaugeState, rhs: &CMatrix) -> Result<CMatrix> {
        let cond = self.conditioning(g);
        if cond > self.singularity_threshold {
            return Err(Error::SingularAt { x: g.x, cond });
        }
        match solve_linear(&g.r, rhs) {
            Ok((y, _)) => Ok(y),
            Err(LinalgError::Singular { .. }) => Err(Error::SingularAt {
                x: g.x,
                cond: f64::INFINITY,
            }),
            Err(e) => Err(e.into()),
        }
    }

    /// `v(x)`, or [`Error::SingularAt`] where `S(x)` is numerically singular.
    pub fn potential_v(&self, x: f64) -> Result<CMatrix> {
        let p = &self.params;
        if p.dim() == 0 {
            return Ok(CMatrix::zeros(p.m1(), p.m2()));
        }
        let g = self.gauge(x);
        let y = self.solve_r(&g, &p.gamma)?;
        // −2i·(e^{−2ixα}γ₁)*·R⁻¹γ
        let top = g.lambda_hat.columns(0, p.m1());
        Ok((&top.adjoint() * &y).scale(C64::new(0.0, -2.0)))
    }

    /// `V(x) = [[0, v], [v*, 0]]`.
    pub fn potential_matrix(&self, x: f64) -> Result<CMatrix> {
        let v = self.potential_v(x)?;
        let (m1, m2) = (self.sig.m1, self.sig.m2);
        Ok(CMatrix::block2(
            &CMatrix::zeros(m1, m1),
            &v,
            &v.adjoint(),
            &CMatrix::zeros(m2, m2),
        ))
    }

    /// `w_α(x, λ) = I + i·j·Λ(x)*S(x)⁻¹(λ − α)⁻¹Λ(x)`.
    pub fn fundamental_w(&self, x: f64, lambda: C64) -> Result<CMatrix> {
        let p = &self.params;
        let m = self.sig.size();
        if p.dim() == 0 {
            return Ok(CMatrix::identity(m));
        }
        let g = self.gauge(x);
        let (z, cond) = solve_linear(&(-&p.alpha).shift(-lambda), &g.lambda_hat).map_err(|e| match e {
            LinalgError::Singular { .. } => Error::PoleProximity {
                lambda,
                cond: f64::INFINITY,
            },
            other => other.into(),
        })?;
        if cond > crate::realization::POLE_COND_LIMIT {
            return Err(Error::PoleProximity { lambda, cond });
        }
        let y = self.solve_r(&g, &z)?;
        let core = (&(&self.sig.matrix() * &g.lambda_hat.adjoint()) * &y).scale(I);
        Ok(&CMatrix::identity(m) + &core)
    }

    /// `e^{ixλj}`.
    pub fn free_exponential(&self, x: f64, lambda: C64) -> CMatrix {
        let up = (I * x * lambda).exp();
        let down = (-I * x * lambda).exp();
        let mut d = vec![up; self.sig.m1];
        d.extend(std::iter::repeat_n(down, self.sig.m2));
        CMatrix::diag(&d)
    }

    /// `u(x, λ) = w_α(x, λ)·e^{ixλj}`, a solution of the Dirac system.
    pub fn fundamental_u(&self, x: f64, lambda: C64) -> Result<CMatrix> {
        Ok(&self.fundamental_w(x, lambda)? * &self.free_exponential(x, lambda))
    }

    /// Number of negative eigenvalues of `R(x)`, which changes exactly where
    /// `S(x)` passes through a singular matrix.
    pub fn negative_inertia(&self, x: f64) -> Result<usize> {
        let g = self.gauge(x);
        let ev = hermitian_eigenvalues(&g.r)?;
        let scale = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(ev.iter().filter(|&&v| v < -1e-14 * scale).count())
    }

    /// Points in `[0, x_max]` where the inertia of `S(x)` changes, located by
    /// a scan with step [`SCAN_STEP`] and bisection to [`BISECT_TOL`].
    pub fn singularities(&self, x_max: f64) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        if self.params.dim() == 0 || x_max <= 0.0 {
            return Ok(out);
        }
        let steps = (x_max / SCAN_STEP).ceil() as usize;
        let mut x_prev = 0.0;
        let mut k_prev = self.negative_inertia(0.0)?;
        for i in 1..=steps {
            let x = (i as f64 * SCAN_STEP).min(x_max);
            let k = self.negative_inertia(x)?;
            if k != k_prev {
                let (mut lo, mut hi) = (x_prev, x);
                while hi - lo > BISECT_TOL {
                    let mid = 0.5 * (lo + hi);
                    if self.negative_inertia(mid)? == k_prev {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                out.push(0.5 * (lo + hi));
            }
            x_prev = x;
            k_prev = k;
        }
        Ok(out)
    }

    /// `(Y, Z)`: `Y = u·[I; 0]`, `Z = u·[Ξ₁; Ξ₂]` with
    /// `Ξ₁ = −iγ₁*(λ − α*)⁻¹S₀⁻¹γ`, `Ξ₂ = I + iγ*(λ − α*)⁻¹S₀⁻¹γ`.
    pub fn special_solutions_yz(&self, x: f64, lambda: C64) -> Result<(CMatrix, CMatrix)> {
        let p = &self.params;
        let (m1, m2) = (self.sig.m1, self.sig.m2);
        let u = self.fundamental_u(x, lambda)?;
        let y = u.columns(0, m1);
        let (xi1, xi2) = if p.dim() == 0 {
            (CMatrix::zeros(m1, m2), CMatrix::identity(m2))
        } else {
            let t = &p.s0_inv()? * &p.gamma;
            let (h, cond) = solve_linear(&(-&p.alpha.adjoint()).shift(-lambda), &t)?;
            if cond > crate::realization::POLE_COND_LIMIT {
                return Err(Error::PoleProximity { lambda, cond });
            }
            (
                (&p.gamma1.adjoint() * &h).scale(-I),
                &CMatrix::identity(m2) + &(&p.gamma.adjoint() * &h).scale(I),
            )
        };
        let z = &u * &CMatrix::vstack(&[&xi1, &xi2]);
        Ok((y, z))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KappaMode {
    /// `σ(α)` strictly in the lower half-plane: `κ = Q⁻¹`, `αQ − Qα* = −iγγ*`.
    ClosedForm,
    /// `σ(α)` real: `κ = 0`.
    ZeroRealSpectrum,
    /// Mixed spectrum: `R(x)⁻¹` sampled at large `x`.
    NumericalLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KappaR {
    pub value: CMatrix,
    pub mode: KappaMode,
    /// `‖R(40)⁻¹ − R(20)⁻¹‖_F` for the numerical limit, zero otherwise.
    pub convergence_diagnostic: f64,
}

impl KappaR {
    /// `‖κα − α*κ + iκγγ*κ‖_F`.
    pub fn residual(&self, p: &ParameterSet) -> f64 {
        let k = &self.value;
        let a = &p.alpha;
        let quad = &(&(k * &p.gamma) * &p.gamma.adjoint()) * k;
        (&(&(k * a) - &(&a.adjoint() * k)) + &quad.scale(I)).norm_fro()
    }
}

/// `κ_R = lim_{x→∞} R(x)⁻¹`, dispatched on the spectrum of `α`.
pub fn kappa_r(p: &ParameterSet) -> Result<KappaR> {
    let n = p.dim();
    if n == 0 {
        return Ok(KappaR {
            value: CMatrix::zeros(0, 0),
            mode: KappaMode::ClosedForm,
            convergence_diagnostic: 0.0,
        });
    }
    let band = spectral_band(&p.alpha);
    let ev = crate::matnum::eigenvalues(&p.alpha)?;
    if ev.iter().all(|z| z.im < -band) {
        let q = solve_sylvester(&p.alpha, &p.alpha.adjoint(), &(&p.gamma * &p.gamma.adjoint()).scale(-I))?;
        return Ok(KappaR {
            value: inverse(&q.hermitian_part())?.hermitian_part(),
            mode: KappaMode::ClosedForm,
            convergence_diagnostic: 0.0,
        });
    }
    if ev.iter().all(|z| z.im.abs() <= band) {
        return Ok(KappaR {
            value: CMatrix::zeros(n, n),
            mode: KappaMode::ZeroRealSpectrum,
            convergence_diagnostic: 0.0,
        });
    }
    let pe = PotentialEvaluator::new(p.clone());
    let samples: Vec<CMatrix> = [10.0, 20.0, 40.0]
        .iter()
        .map(|&x| Ok(inverse(&pe.gauge(x).r)?.hermitian_part()))
        .collect::<Result<_>>()?;
    let d1 = samples[1].dist(&samples[0]);
    let d2 = samples[2].dist(&samples[1]);
    let scale = 1.0 + samples[2].norm_fro();
    if d1.max(d2) > KAPPA_LIMIT_TOL * scale {
        return Err(Error::LimitNotConverged { difference: d2 });
    }
    Ok(KappaR {
        value: samples[2].clone(),
        mode: KappaMode::NumericalLimit,
        convergence_diagnostic: d2,
    })
}

/// `χ(λ) = I − iγ*κ(λ − α)⁻¹γ`, minimally reduced (so `χ = I` has no
/// states when `κ = 0`).
pub fn chi(p: &ParameterSet, kappa: &KappaR) -> Result<Realization> {
    Ok(Realization::new(
        CMatrix::identity(p.m2()),
        (&p.gamma.adjoint() * &kappa.value).scale(-I),
        p.alpha.clone(),
        p.gamma.clone(),
    )?
    .minimal_reduce(RANK_TOL))
}

/// `χ(λ)⁻¹ = I + iγ*(λ − α*)⁻¹κγ`.
pub fn chi_inverse(p: &ParameterSet, kappa: &KappaR) -> Result<Realization> {
    Ok(Realization::new(
        CMatrix::identity(p.m2()),
        p.gamma.adjoint().scale(I),
        p.alpha.adjoint(),
        &kappa.value * &p.gamma,
    )?
    .minimal_reduce(RANK_TOL))
}

#[derive(Debug, Clone)]
pub struct ScatteringCoefficients {
    pub t_l: Realization,
    pub r_l: Realization,
    pub t_r: Realization,
    pub r_r: Realization,
    pub kappa: KappaR,
    pub chi: Realization,
    pub chi_inv: Realization,
}

impl ScatteringCoefficients {
    /// `𝒮(λ) = [[T_L, R_R], [R_L, T_R]]`.
    pub fn scattering_matrix(&self, lambda: C64) -> Result<CMatrix> {
        Ok(CMatrix::block2(
            &self.t_l.evaluate(lambda)?,
            &self.r_r.evaluate(lambda)?,
            &self.r_l.evaluate(lambda)?,
            &self.t_r.evaluate(lambda)?,
        ))
    }
}

/// `R_L(λ) = −iγ*S₀⁻¹(λ − θ)⁻¹γ₁`; needs no `κ_R`.
pub fn left_reflection(p: &ParameterSet) -> Result<Realization> {
    let c2 = (&p.gamma.adjoint() * &p.s0_inv()?).scale(-I);
    Realization::new(CMatrix::zeros(p.m2(), p.m1()), c2, p.theta()?, p.gamma1.clone())
}

/// Transmission and reflection coefficients with
/// `θ = α − iγ₁γ₁*S₀⁻¹`:
///
/// - `T_L = I − iγ₁*S₀⁻¹(λ − θ)⁻¹γ₁`
/// - `R_L = −iγ*S₀⁻¹(λ − θ)⁻¹γ₁`
/// - `T_R = I − iγ*S₀⁻¹(λ − θ)⁻¹(I − S₀κ)γ`
/// - `R_R = −iγ₁*S₀⁻¹(λ − θ)⁻¹(I − S₀κ)γ − iγ₁*(λ − α*)⁻¹κγ`
pub fn scattering_coefficients(p: &ParameterSet) -> Result<ScatteringCoefficients> {
    let kappa = kappa_r(p)?;
    let (m1, m2) = (p.m1(), p.m2());
    let n = p.dim();
    let s0i = p.s0_inv()?;
    let theta = p.theta()?;
    let c1 = (&p.gamma1.adjoint() * &s0i).scale(-I);
    let c2 = (&p.gamma.adjoint() * &s0i).scale(-I);
    let bt = &(&CMatrix::identity(n) - &(&p.s0 * &kappa.value)) * &p.gamma;
    let kg = &kappa.value * &p.gamma;

    let t_l = Realization::new(CMatrix::identity(m1), c1.clone(), theta.clone(), p.gamma1.clone())?;
    let r_l = left_reflection(p)?;
    let t_r = Realization::new(CMatrix::identity(m2), c2, theta.clone(), bt.clone())?;
    let r_r = Realization::new(
        CMatrix::zeros(m1, m2),
        CMatrix::hstack(&[&c1, &p.gamma1.adjoint().scale(-I)]),
        CMatrix::block_diag(&theta, &p.alpha.adjoint()),
        CMatrix::vstack(&[&bt, &kg]),
    )?
    .minimal_reduce(RANK_TOL);
    Ok(ScatteringCoefficients {
        t_l,
        r_l,
        t_r,
        r_r,
        chi: chi(p, &kappa)?,
        chi_inv: chi_inverse(p, &kappa)?,
        kappa,
    })
}
