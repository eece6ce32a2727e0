//! Direct numerical integration of `du/dx = i(λj + jV(x))u`, used as an
//! oracle for the closed-form solutions.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::completion::JSignature;
use crate::dirac::PotentialEvaluator;
use crate::error::{Error, Result};
use crate::matnum::{hermitian_eigenvalues, inverse, CMatrix, C64, I};
use crate::riccati::spectral_band;

pub const MIN_STEPS: usize = 16;
pub const MAX_STEPS: usize = 1 << 20;

/// A potential `x ↦ v(x)` (an `m1×m2` block).
pub trait Potential {
    fn signature(&self) -> JSignature;
    fn v(&self, x: f64) -> Result<CMatrix>;

    /// Points of `[lo, hi]` where `v` is singular.
    fn singular_points(&self, _lo: f64, _hi: f64) -> Result<Vec<f64>> {
        Ok(Vec::new())
    }
}

/// Memoizes `v(x)` by the bit pattern of `x`. Step refinement in
/// [`integrate_dirac`] revisits the same points exactly, so the cache makes
/// each halving cost only the new points.
pub struct MemoPotential<'a> {
    inner: &'a PotentialEvaluator,
    cache: RefCell<HashMap<u64, Result<CMatrix>>>,
}

impl<'a> MemoPotential<'a> {
    pub fn new(inner: &'a PotentialEvaluator) -> Self {
        Self {
            inner,
            cache: RefCell::new(HashMap::new()),
        }
    }
}

impl Potential for MemoPotential<'_> {
    fn signature(&self) -> JSignature {
        self.inner.signature()
    }

    fn v(&self, x: f64) -> Result<CMatrix> {
        if let Some(hit) = self.cache.borrow().get(&x.to_bits()) {
            return hit.clone();
        }
        let val = self.inner.potential_v(x);
        self.cache.borrow_mut().insert(x.to_bits(), val.clone());
        val
    }

    fn singular_points(&self, lo: f64, hi: f64) -> Result<Vec<f64>> {
        self.inner.singular_points(lo, hi)
    }
}

impl Potential for PotentialEvaluator {
    fn signature(&self) -> JSignature {
        PotentialEvaluator::signature(self)
    }

    fn v(&self, x: f64) -> Result<CMatrix> {
        self.potential_v(x)
    }

    /// Empty without a scan when `S₀ > 0`, since then `S(x) ≥ S₀` never
    /// degenerates.
    fn singular_points(&self, lo: f64, hi: f64) -> Result<Vec<f64>> {
        if self.params.dim() == 0 || hermitian_eigenvalues(&self.params.s0)?.iter().all(|&v| v > 0.0) {
            return Ok(Vec::new());
        }
        Ok(self.singularities(hi)?.into_iter().filter(|&x| x >= lo).collect())
    }
}

/// Free system `v ≡ 0`.
pub struct ZeroPotential(pub JSignature);

impl Potential for ZeroPotential {
    fn signature(&self) -> JSignature {
        self.0
    }

    fn v(&self, _x: f64) -> Result<CMatrix> {
        Ok(CMatrix::zeros(self.0.m1, self.0.m2))
    }
}

#[derive(Debug, Clone)]
pub struct IntegrationResult {
    /// Propagator `Φ` with `u(x1) = Φ·u(x0)`.
    pub transfer: CMatrix,
    pub step_count: usize,
    pub richardson_error: f64,
}

/// `i·j·(λI + V(x))`.
fn generator<P: Potential + ?Sized>(pot: &P, x: f64, lambda: C64) -> Result<CMatrix> {
    let sig = pot.signature();
    let v = pot.v(x)?;
    let (m1, m2) = (sig.m1, sig.m2);
    let mut g = CMatrix::block2(&CMatrix::zeros(m1, m1), &v, &v.adjoint(), &CMatrix::zeros(m2, m2));
    for k in 0..sig.size() {
        g[(k, k)] += lambda;
    }
    for r in m1..sig.size() {
        for c in 0..sig.size() {
            g[(r, c)] = -g[(r, c)];
        }
    }
    Ok(g.scale(I))
}

fn rk4<P: Potential + ?Sized>(pot: &P, lambda: C64, x0: f64, x1: f64, n: usize) -> Result<CMatrix> {
    let m = pot.signature().size();
    let h = (x1 - x0) / n as f64;
    let at = |k: usize| x0 + (x1 - x0) * (k as f64 / (2 * n) as f64);
    let mut phi = CMatrix::identity(m);
    let mut g_left = generator(pot, at(0), lambda)?;
    for step in 0..n {
        let g_mid = generator(pot, at(2 * step + 1), lambda)?;
        let g_right = generator(pot, at(2 * step + 2), lambda)?;
        let k1 = &g_left * &phi;
        let k2 = &g_mid * &(&phi + &k1.scale_re(0.5 * h));
        let k3 = &g_mid * &(&phi + &k2.scale_re(0.5 * h));
        let k4 = &g_right * &(&phi + &k3.scale_re(h));
        let incr = &(&(&k1 + &k2.scale_re(2.0)) + &k3.scale_re(2.0)) + &k4;
        phi = &phi + &incr.scale_re(h / 6.0);
        g_left = g_right;
    }
    Ok(phi)
}

/// Fourth-order Runge–Kutta with uniform steps, doubled until the
/// Richardson estimate `‖Φ_{2N} − Φ_N‖/15` relative to `max(1, ‖Φ‖)` is
/// below `tol`. An interval containing a singular point of the potential
/// gives [`Error::SingularAt`].
pub fn integrate_dirac<P: Potential + ?Sized>(
    pot: &P,
    lambda: C64,
    x0: f64,
    x1: f64,
    tol: f64,
) -> Result<IntegrationResult> {
    let m = pot.signature().size();
    if x0 == x1 {
        return Ok(IntegrationResult {
            transfer: CMatrix::identity(m),
            step_count: 0,
            richardson_error: 0.0,
        });
    }
    if let Some(&x) = pot.singular_points(x0.min(x1), x0.max(x1))?.first() {
        return Err(Error::SingularAt { x, cond: f64::INFINITY });
    }
    let mut n = MIN_STEPS;
    let mut coarse = rk4(pot, lambda, x0, x1, n)?;
    loop {
        let fine = rk4(pot, lambda, x0, x1, 2 * n)?;
        let err = fine.dist(&coarse) / 15.0 / fine.norm_fro().max(1.0);
        if err < tol {
            return Ok(IntegrationResult {
                transfer: fine,
                step_count: 2 * n,
                richardson_error: err,
            });
        }
        n *= 2;
        if 2 * n > MAX_STEPS {
            return Err(Error::NoConvergence {
                steps: n,
                estimate: err,
            });
        }
        coarse = fine;
    }
}

/// `‖(u(x+h) − u(x−h))/2h − i(λj + jV(x))u(x)‖ / ‖u(x)‖` for the closed-form
/// fundamental solution.
pub fn derivative_check(pe: &PotentialEvaluator, x: f64, lambda: C64, h: f64) -> Result<f64> {
    let u = pe.fundamental_u(x, lambda)?;
    let up = pe.fundamental_u(x + h, lambda)?;
    let um = pe.fundamental_u(x - h, lambda)?;
    let fd = (&up - &um).scale_re(0.5 / h);
    let rhs = &generator(pe, x, lambda)? * &u;
    Ok(fd.dist(&rhs) / u.norm_fro())
}

/// `Y₂(0, λ)·Y₁(0, λ)⁻¹` for the solution with `Y(x_far) = e^{ix_far·λ}[I; 0]`,
/// integrated back to `x = 0`.
///
/// Refuses potentials whose `α` has spectrum on the real line: such
/// potentials decay only like `1/x`, and truncating the asymptotic condition
/// at a finite `x_far` has no controlled error.
pub fn numeric_reflection(pe: &PotentialEvaluator, lambda: f64, x_far: f64, tol: f64) -> Result<CMatrix> {
    let p = &pe.params;
    let sig = pe.signature();
    if p.dim() > 0 {
        let band = spectral_band(&p.alpha);
        let ev = crate::matnum::eigenvalues(&p.alpha)?;
        if ev.iter().any(|z| z.im >= -band) {
            return Err(Error::NotSummable);
        }
    }
    let l = C64::new(lambda, 0.0);
    let memo = MemoPotential::new(pe);
    let phi = integrate_dirac(&memo, l, x_far, 0.0, tol)?.transfer;
    let mut start = CMatrix::zeros(sig.size(), sig.m1);
    let phase = (I * x_far * lambda).exp();
    for k in 0..sig.m1 {
        start[(k, k)] = phase;
    }
    let y = &phi * &start;
    let y1 = y.top_rows(sig.m1);
    let y2 = y.bottom_rows(sig.m1);
    Ok(&y2 * &inverse(&y1)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::completion::ParameterSet;
    use crate::matnum::{ONE, ZERO};

    fn s(z: C64) -> CMatrix {
        CMatrix::scalar(z)
    }

    fn worked() -> PotentialEvaluator {
        PotentialEvaluator::new(
            ParameterSet::new(s(-I * 2.0), s(ONE), s(ONE), s(C64::new(5f64.sqrt(), 0.0))).unwrap(),
        )
    }

    fn positon() -> PotentialEvaluator {
        PotentialEvaluator::new(ParameterSet::new(s(ZERO), s(ONE), s(ONE), s(-I)).unwrap())
    }

    #[test]
    fn free_system_is_exact_exponential() {
        let sig = JSignature::new(1, 2);
        let l = C64::new(1.3, 0.0);
        let res = integrate_dirac(&ZeroPotential(sig), l, 0.5, 2.0, 1e-10).unwrap();
        let x = 1.5;
        let expect = CMatrix::diag(&[(I * x * l).exp(), (-I * x * l).exp(), (-I * x * l).exp()]);
        assert!(res.transfer.dist(&expect) < 1e-9);
    }

    fn closed_form_propagator(pe: &PotentialEvaluator, l: C64, x0: f64, x1: f64) -> CMatrix {
        let u0 = pe.fundamental_u(x0, l).unwrap();
        let u1 = pe.fundamental_u(x1, l).unwrap();
        &u1 * &inverse(&u0).unwrap()
    }

    #[test]
    fn positon_propagator_matches_closed_form() {
        let pe = positon();
        let res = integrate_dirac(&pe, ONE, 0.0, 2.0, 1e-9).unwrap();
        assert!(res.transfer.dist(&closed_form_propagator(&pe, ONE, 0.0, 2.0)) < 1e-6);
    }

    #[test]
    fn worked_propagator_matches_closed_form() {
        let pe = worked();
        let l = C64::new(0.5, 0.0);
        let res = integrate_dirac(&pe, l, 0.0, 3.0, 1e-9).unwrap();
        assert!(res.transfer.dist(&closed_form_propagator(&pe, l, 0.0, 3.0)) < 1e-6);
    }

    #[test]
    fn derivative_residuals() {
        // γ1 → 0 with γ² = γ1² + 2 keeps the identity for α = −i, S0 = 1
        let g1 = 1e-6f64;
        let g = (g1 * g1 + 2.0).sqrt();
        let free = PotentialEvaluator::new(
            ParameterSet::new(s(-I), s(ONE), s(C64::new(g1, 0.0)), s(C64::new(g, 0.0))).unwrap(),
        );
        assert!(derivative_check(&free, 0.5, ONE, 1e-4).unwrap() <= 1e-7);

        let pe = positon();
        let r1 = derivative_check(&pe, 1.0, ONE, 1e-4).unwrap();
        assert!(r1 <= 1e-6, "{r1}");
        let a = derivative_check(&pe, 1.0, ONE, 1e-3).unwrap();
        let b = derivative_check(&pe, 1.0, ONE, 5e-4).unwrap();
        assert!((a / b - 4.0).abs() < 0.2, "ratio {}", a / b);
    }

    #[test]
    fn numeric_reflection_worked_set() {
        let pe = worked();
        let r5 = 5f64.sqrt();
        let r0 = numeric_reflection(&pe, 0.0, 30.0, 1e-8).unwrap()[(0, 0)];
        assert!((r0 - C64::new(-r5 / 3.0, 0.0)).norm() < 1e-4);
        let l = C64::new(2.0, 0.0);
        let r2 = numeric_reflection(&pe, 2.0, 30.0, 1e-8).unwrap()[(0, 0)];
        assert!((r2 - (-I * r5) / (l + I * 3.0)).norm() < 1e-4);
    }

    #[test]
    fn numeric_reflection_free_system() {
        let empty = ParameterSet::new(
            CMatrix::zeros(0, 0),
            CMatrix::zeros(0, 0),
            CMatrix::zeros(0, 1),
            CMatrix::zeros(0, 1),
        )
        .unwrap();
        let r = numeric_reflection(&PotentialEvaluator::new(empty), 1.0, 30.0, 1e-8).unwrap();
        assert!(r.max_abs() < 1e-12);
    }

    #[test]
    fn numeric_reflection_refuses_slow_decay() {
        assert!(matches!(numeric_reflection(&positon(), 0.0, 30.0, 1e-8), Err(Error::NotSummable)));
    }
}
