//! Recovery of the j-elementary `W` from a reflection coefficient `R`, and the
//! minimal unitary completion of `R`.

use crate::error::{Error, Result};
use crate::matnum::{inverse, singular_values, CMatrix, C64, I};
use crate::realization::{is_controllable, Realization, RANK_TOL};
use crate::riccati::{self, spectral_band, RiccatiProblem, RiccatiSolution, EPS_RANK};

/// `j = diag(I_{m1}, −I_{m2})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JSignature {
    pub m1: usize,
    pub m2: usize,
}

impl JSignature {
    pub fn new(m1: usize, m2: usize) -> Self {
        Self { m1, m2 }
    }

    pub fn size(&self) -> usize {
        self.m1 + self.m2
    }

    pub fn matrix(&self) -> CMatrix {
        let mut d = vec![C64::new(1.0, 0.0); self.m1];
        d.extend(std::iter::repeat_n(C64::new(-1.0, 0.0), self.m2));
        CMatrix::diag(&d)
    }
}

/// Admissible data `(α, S₀, γ₁, γ)`.
#[derive(Debug, Clone)]
pub struct ParameterSet {
    pub alpha: CMatrix,
    pub s0: CMatrix,
    pub gamma1: CMatrix,
    pub gamma: CMatrix,
    /// Known inverse of `S₀`, with the `S₀` it belongs to.
    known_inverse: Option<(CMatrix, CMatrix)>,
}

impl PartialEq for ParameterSet {
    fn eq(&self, other: &Self) -> bool {
        self.alpha == other.alpha && self.s0 == other.s0 && self.gamma1 == other.gamma1 && self.gamma == other.gamma
    }
}

impl ParameterSet {
    /// Validates dimensions and admissibility.
    pub fn new(alpha: CMatrix, s0: CMatrix, gamma1: CMatrix, gamma: CMatrix) -> Result<Self> {
        let p = Self::new_unchecked(alpha, s0, gamma1, gamma)?;
        p.check_admissible()?;
        Ok(p)
    }

    /// Validates dimensions only.
    pub fn new_unchecked(alpha: CMatrix, s0: CMatrix, gamma1: CMatrix, gamma: CMatrix) -> Result<Self> {
        let n = alpha.rows();
        if !alpha.is_square() || s0.shape() != (n, n) || gamma1.rows() != n || gamma.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "parameters alpha{:?} S0{:?} gamma1{:?} gamma{:?}",
                alpha.shape(),
                s0.shape(),
                gamma1.shape(),
                gamma.shape()
            )));
        }
        Ok(Self {
            alpha,
            s0,
            gamma1,
            gamma,
            known_inverse: None,
        })
    }

    /// Supplies `S₀⁻¹` computed upstream (e.g. the Riccati solution `X`),
    /// which can be more accurate than inverting an ill-conditioned `S₀`.
    /// Ignored once `s0` is modified.
    pub fn with_s0_inverse(mut self, s0_inv: CMatrix) -> Result<Self> {
        if s0_inv.shape() != self.s0.shape() {
            return Err(Error::DimensionMismatch(format!("S0 inverse {:?}", s0_inv.shape())));
        }
        self.known_inverse = Some((self.s0.clone(), s0_inv));
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.alpha.rows()
    }

    pub fn m1(&self) -> usize {
        self.gamma1.cols()
    }

    pub fn m2(&self) -> usize {
        self.gamma.cols()
    }

    pub fn signature(&self) -> JSignature {
        JSignature::new(self.m1(), self.m2())
    }

    /// `Λ₀ = [γ₁, γ]`.
    pub fn lambda0(&self) -> CMatrix {
        CMatrix::hstack(&[&self.gamma1, &self.gamma])
    }

    pub fn s0_inv(&self) -> Result<CMatrix> {
        match &self.known_inverse {
            Some((s0, inv)) if *s0 == self.s0 => Ok(inv.clone()),
            _ => Ok(inverse(&self.s0)?),
        }
    }

    /// `θ = α − iγ₁γ₁*S₀⁻¹`.
    pub fn theta(&self) -> Result<CMatrix> {
        let g = &(&self.gamma1 * &self.gamma1.adjoint()) * &self.s0_inv()?;
        Ok(&self.alpha - &g.scale(I))
    }

    /// `‖αS₀ − S₀α* − i(γ₁γ₁* − γγ*)‖_F`.
    pub fn identity_residual(&self) -> f64 {
        let lhs = &(&self.alpha * &self.s0) - &(&self.s0 * &self.alpha.adjoint());
        let rhs = (&(&self.gamma1 * &self.gamma1.adjoint()) - &(&self.gamma * &self.gamma.adjoint())).scale(I);
        lhs.dist(&rhs)
    }

    pub fn identity_scale(&self) -> f64 {
        let g1 = self.gamma1.norm_fro();
        let g = self.gamma.norm_fro();
        2.0 * self.alpha.norm_fro() * self.s0.norm_fro() + g1 * g1 + g * g
    }

    pub fn check_admissible(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 {
            return Ok(());
        }
        let fail = |m: String| Err(Error::NotAdmissible(m));
        if !(self.alpha.is_finite() && self.s0.is_finite() && self.gamma1.is_finite() && self.gamma.is_finite()) {
            return fail("non-finite entries".into());
        }
        let herm = self.s0.dist(&self.s0.adjoint());
        if herm > 1e-10 * self.s0.norm_fro() {
            return fail(format!("S0 is not Hermitian (defect {herm:.3e})"));
        }
        let sv = singular_values(&self.s0);
        if sv[n - 1] <= EPS_RANK * sv[0] {
            return fail("S0 is singular".into());
        }
        let res = self.identity_residual();
        if res > 1e-9 * self.identity_scale() {
            return fail(format!("identity residual {res:.3e}"));
        }
        let margin = crate::matnum::eigenvalues(&self.alpha)?
            .iter()
            .fold(f64::NEG_INFINITY, |m, z| m.max(z.im));
        if margin > spectral_band(&self.alpha) {
            return fail(format!("alpha has an eigenvalue with Im = {margin:.3e} > 0"));
        }
        if !is_controllable(&self.alpha, &self.gamma1, RANK_TOL) {
            return fail("(alpha, gamma1) is not full range".into());
        }
        if !is_controllable(&self.alpha, &self.gamma, RANK_TOL) {
            return fail("(alpha, gamma) is not full range".into());
        }
        Ok(())
    }
}

/// Above this `cond(X)` the Riccati equation is re-solved in the basis where
/// `X = diag(±1)`: the backward error of the first solve, carried into
/// `S₀ = X⁻¹`, grows like `cond(X)·ε`.
pub const NORMALIZE_COND: f64 = 1e3;

/// Parameters together with the Riccati solution they came from.
#[derive(Debug, Clone)]
pub struct Completion {
    pub params: ParameterSet,
    /// Solution for `(TAT⁻¹, TB, CT⁻¹)`.
    pub riccati: RiccatiSolution,
    /// State basis `T` of `params` relative to the input realization; the
    /// identity unless `cond(X)` exceeded [`NORMALIZE_COND`].
    pub basis: CMatrix,
}

/// `α = A + iBB*X`, `S₀ = X⁻¹`, `γ₁ = B`, `γ = −iS₀C*` from a minimal,
/// strictly proper `R = C(λ − A)⁻¹B`, with `(A, B, C)` taken in the state
/// basis reported as [`Completion::basis`].
pub fn parameters_from_reflection(r: &Realization, tol: f64) -> Result<Completion> {
    if r.d.max_abs() > 1e-12 {
        return Err(Error::InvalidInput("reflection coefficient must vanish at infinity (D = 0)".into()));
    }
    if !r.is_minimal(RANK_TOL) {
        return Err(Error::NotAdmissible("realization of R is not minimal".into()));
    }
    let n = r.state_dim();
    let mut prob = RiccatiProblem::new(r.a.clone(), r.b.clone(), r.c.clone())?;
    let mut sol = riccati::solve(&prob, tol)?;
    let mut basis = CMatrix::identity(n);
    let sv = singular_values(&sol.x);
    if n > 1 && sv[0] > NORMALIZE_COND * sv[n - 1] {
        let f = crate::matnum::schur(&sol.x.hermitian_part())?;
        let root = |e: f64| CMatrix::diag(&(0..n).map(|k| C64::new(f.t[(k, k)].re.abs().powf(e), 0.0)).collect::<Vec<_>>());
        let t = &root(0.5) * &f.q.adjoint();
        let t_inv = &f.q * &root(-0.5);
        prob = RiccatiProblem::new(&(&t * &r.a) * &t_inv, &t * &r.b, &r.c * &t_inv)?;
        sol = riccati::solve(&prob, tol)?;
        basis = t;
    }
    // S0 = X⁻¹ and γ = −iX⁻¹C* through the eigendecomposition X = QDQ*
    let f = crate::matnum::schur(&sol.x.hermitian_part())?;
    let d_inv = CMatrix::diag(&(0..n).map(|k| C64::new(1.0 / f.t[(k, k)].re, 0.0)).collect::<Vec<_>>());
    let s0 = (&(&f.q * &d_inv) * &f.q.adjoint()).hermitian_part();
    let gamma = (&f.q * &(&d_inv * &(&f.q.adjoint() * &prob.c.adjoint()))).scale(-I);
    let params = ParameterSet::new_unchecked(sol.alpha.clone(), s0, prob.b.clone(), gamma)?.with_s0_inverse(sol.x.clone())?;
    params.check_admissible()?;
    Ok(Completion { params, riccati: sol, basis })
}

/// `W(λ) = I + i·j·Λ₀*S₀⁻¹(λ − α)⁻¹Λ₀`.
pub fn build_w(p: &ParameterSet) -> Result<Realization> {
    let sig = p.signature();
    let l0 = p.lambda0();
    let c = (&(&sig.matrix() * &l0.adjoint()) * &p.s0_inv()?).scale(I);
    Realization::new(CMatrix::identity(sig.size()), c, p.alpha.clone(), l0)
}

/// `W₂₁W₁₁⁻¹` realized as `(0, C₂, A − B₁C₁, B₁)` for a monic `W`.
pub fn extract_r_from_w(w: &Realization, sig: JSignature) -> Result<Realization> {
    if w.input_dim() != sig.size() || w.output_dim() != sig.size() {
        return Err(Error::DimensionMismatch(format!(
            "W is {:?}, signature needs {}",
            w.d.shape(),
            sig.size()
        )));
    }
    let deviation = w.d.dist(&CMatrix::identity(sig.size()));
    if deviation > 1e-12 {
        return Err(Error::NotMonic { deviation });
    }
    let c1 = w.c.top_rows(sig.m1);
    let c2 = w.c.bottom_rows(sig.m1);
    let b1 = w.b.columns(0, sig.m1);
    let a = &w.a - &(&b1 * &c1);
    Realization::new(CMatrix::zeros(sig.m2, sig.m1), c2, a, b1)
}

/// `𝐒(λ) = I − iΛ₀*S₀⁻¹(λ − θ)⁻¹Λ₀`, unitary on the real line with lower-left
/// block `R`.
pub fn unitary_completion(p: &ParameterSet) -> Result<Realization> {
    let m = p.m1() + p.m2();
    let l0 = p.lambda0();
    let c = (&l0.adjoint() * &p.s0_inv()?).scale(-I);
    Realization::new(CMatrix::identity(m), c, p.theta()?, l0)
}

/// `W(λ)*·j·W(λ) − j`.
pub fn j_form(w_value: &CMatrix, sig: JSignature) -> CMatrix {
    let j = sig.matrix();
    &(&(&w_value.adjoint() * &j) * w_value) - &j
}

#[derive(Debug, Clone, PartialEq)]
pub struct JUnitarityReport {
    /// `max ‖W*jW − j‖_F` over the grid.
    pub max_residual: f64,
    /// `max ‖W₁₁*W₁₁ − W₂₁*W₂₁ − I‖_F` over the grid.
    pub max_block_residual: f64,
    pub tol: f64,
}

impl JUnitarityReport {
    pub fn passes(&self) -> bool {
        self.max_residual <= self.tol && self.max_block_residual <= self.tol
    }
}

/// Samples j-unitarity of `W` on a real grid. Points where `W` cannot be
/// evaluated count as infinite residual.
pub fn check_j_unitarity(w: &Realization, sig: JSignature, grid: &[f64], tol: f64) -> JUnitarityReport {
    let mut max_residual = 0.0f64;
    let mut max_block_residual = 0.0f64;
    for &x in grid {
        match w.evaluate(C64::new(x, 0.0)) {
            Ok(v) => {
                max_residual = max_residual.max(j_form(&v, sig).norm_fro());
                let w11 = v.block(0, sig.m1, 0, sig.m1);
                let w21 = v.block(sig.m1, sig.size(), 0, sig.m1);
                let blk = &(&w11.adjoint() * &w11) - &(&w21.adjoint() * &w21);
                max_block_residual = max_block_residual.max(blk.dist(&CMatrix::identity(sig.m1)));
            }
            Err(_) => {
                max_residual = f64::INFINITY;
                max_block_residual = f64::INFINITY;
            }
        }
    }
    JUnitarityReport {
        max_residual,
        max_block_residual,
        tol,
    }
}
