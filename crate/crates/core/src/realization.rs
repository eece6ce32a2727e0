//! State-space realizations `F(λ) = D + C(λI − A)⁻¹B` of proper rational
//! matrix functions.

use crate::error::{Error, Result};
use crate::matnum::{eigenvalues, orth, singular_values, solve_linear, svd, CMatrix, LinalgError, C64, ONE, ZERO};

/// Condition number of `λI − A` beyond which evaluation is refused.
pub const POLE_COND_LIMIT: f64 = 1e12;

/// Default relative rank tolerance for controllability/observability decisions.
pub const RANK_TOL: f64 = 1e-9;

/// `F(λ) = D + C(λIₙ − A)⁻¹B` with `D: m2×m1`, `C: m2×n`, `A: n×n`, `B: n×m1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub d: CMatrix,
    pub c: CMatrix,
    pub a: CMatrix,
    pub b: CMatrix,
}

/// One entry `num(λ)/den(λ)` with coefficients in ascending powers of λ.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalEntry {
    pub num: Vec<C64>,
    pub den: Vec<C64>,
}

impl RationalEntry {
    pub fn new(num: Vec<C64>, den: Vec<C64>) -> Self {
        Self { num, den }
    }

    pub fn zero() -> Self {
        Self {
            num: vec![],
            den: vec![ONE],
        }
    }

    /// Direct Horner evaluation.
    pub fn evaluate(&self, l: C64) -> C64 {
        poly_eval(&self.num, l) / poly_eval(&self.den, l)
    }
}

fn poly_eval(p: &[C64], l: C64) -> C64 {
    p.iter().rev().fold(ZERO, |acc, &c| acc * l + c)
}

fn poly_mul(p: &[C64], q: &[C64]) -> Vec<C64> {
    if p.is_empty() || q.is_empty() {
        return vec![];
    }
    let mut out = vec![ZERO; p.len() + q.len() - 1];
    for (i, &a) in p.iter().enumerate() {
        for (j, &b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

fn trim(mut p: Vec<C64>) -> Vec<C64> {
    while p.last().is_some_and(|z| *z == ZERO) {
        p.pop();
    }
    p
}

impl Realization {
    pub fn new(d: CMatrix, c: CMatrix, a: CMatrix, b: CMatrix) -> Result<Self> {
        let n = a.rows();
        let ok = a.is_square()
            && b.rows() == n
            && c.cols() == n
            && d.rows() == c.rows()
            && d.cols() == b.cols();
        if !ok {
            return Err(Error::DimensionMismatch(format!(
                "realization D{:?} C{:?} A{:?} B{:?}",
                d.shape(),
                c.shape(),
                a.shape(),
                b.shape()
            )));
        }
        if !(d.is_finite() && c.is_finite() && a.is_finite() && b.is_finite()) {
            return Err(LinalgError::NonFinite.into());
        }
        Ok(Self { d, c, a, b })
    }

    /// Constant function with an empty state space.
    pub fn constant(d: CMatrix) -> Self {
        let (m2, m1) = d.shape();
        Self {
            d,
            c: CMatrix::zeros(m2, 0),
            a: CMatrix::zeros(0, 0),
            b: CMatrix::zeros(0, m1),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    /// Number of input columns (m1).
    pub fn input_dim(&self) -> usize {
        self.d.cols()
    }

    /// Number of output rows (m2).
    pub fn output_dim(&self) -> usize {
        self.d.rows()
    }

    pub fn poles(&self) -> Result<Vec<C64>> {
        Ok(eigenvalues(&self.a)?)
    }

    /// `D + C(λI − A)⁻¹B`.
    pub fn evaluate(&self, lambda: C64) -> Result<CMatrix> {
        if self.state_dim() == 0 {
            return Ok(self.d.clone());
        }
        let m = (-&self.a).shift(-lambda);
        let (z, cond) = solve_linear(&m, &self.b).map_err(|e| match e {
            LinalgError::Singular { .. } => Error::PoleProximity {
                lambda,
                cond: f64::INFINITY,
            },
            other => other.into(),
        })?;
        if cond > POLE_COND_LIMIT {
            return Err(Error::PoleProximity { lambda, cond });
        }
        Ok(&self.d + &(&self.c * &z))
    }

    /// Realization of `F⁻¹` for monic `F` (D = I): `(I, −C, A − BC, B)`.
    pub fn invert(&self) -> Result<Self> {
        let (m2, m1) = self.d.shape();
        if m1 != m2 {
            return Err(Error::NotMonic {
                deviation: f64::INFINITY,
            });
        }
        let deviation = self.d.dist(&CMatrix::identity(m1));
        if deviation > 1e-12 {
            return Err(Error::NotMonic { deviation });
        }
        Ok(Self {
            d: CMatrix::identity(m1),
            c: -&self.c,
            a: &self.a - &(&self.b * &self.c),
            b: self.b.clone(),
        })
    }

    /// Change of state basis `(D, C s⁻¹, s A s⁻¹, s B)`.
    pub fn transform(&self, s: &CMatrix) -> Result<Self> {
        let sinv = crate::matnum::inverse(s)?;
        Ok(Self {
            d: self.d.clone(),
            c: &self.c * &sinv,
            a: &(s * &self.a) * &sinv,
            b: s * &self.b,
        })
    }

    /// Removes uncontrollable then unobservable state directions.
    ///
    /// Bases are orthonormal, so the projection is a unitary change of
    /// coordinates restricted to the retained subspace. A realization that is
    /// already controllable (resp. observable) is left in its own basis.
    pub fn minimal_reduce(&self, tol: f64) -> Self {
        let n = self.state_dim();
        let v = controllable_basis(&self.a, &self.b, tol);
        let mut out = if v.cols() < n {
            project(self, &v)
        } else {
            self.clone()
        };
        let n2 = out.state_dim();
        let w = controllable_basis(&out.a.adjoint(), &out.c.adjoint(), tol);
        if w.cols() < n2 {
            out = project(&out, &w);
        }
        out
    }

    pub fn mcmillan_degree(&self, tol: f64) -> usize {
        self.minimal_reduce(tol).state_dim()
    }

    pub fn is_minimal(&self, tol: f64) -> bool {
        is_controllable(&self.a, &self.b, tol) && is_observable(&self.c, &self.a, tol)
    }

    /// Builds a realization from an entrywise table of proper rational
    /// functions (rows = outputs, columns = inputs), one companion block per
    /// column over the product of that column's denominators, then reduces it.
    pub fn from_rational_entries(table: &[Vec<RationalEntry>]) -> Result<Self> {
        let m2 = table.len();
        let m1 = table.first().map_or(0, Vec::len);
        if table.iter().any(|row| row.len() != m1) {
            return Err(Error::InvalidInput("ragged rational table".into()));
        }
        let mut d = CMatrix::zeros(m2, m1);
        let mut blocks: Vec<(CMatrix, CMatrix, CMatrix)> = Vec::new(); // (C_j, A_j, B_j)
        for j in 0..m1 {
            let mut dens: Vec<Vec<C64>> = Vec::with_capacity(m2);
            let mut rems: Vec<Vec<C64>> = Vec::with_capacity(m2);
            for (i, row) in table.iter().enumerate() {
                let e = &row[j];
                let den = trim(e.den.clone());
                let Some(&lead) = den.last() else {
                    return Err(Error::InvalidInput(format!("zero denominator at ({i}, {j})")));
                };
                if e.num.iter().chain(&den).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(LinalgError::NonFinite.into());
                }
                let den: Vec<C64> = den.iter().map(|&z| z / lead).collect();
                let mut num: Vec<C64> = trim(e.num.iter().map(|&z| z / lead).collect());
                if num.len() > den.len() {
                    return Err(Error::ImproperEntry { row: i, col: j });
                }
                if num.len() == den.len() {
                    let q = *num.last().unwrap();
                    d[(i, j)] = q;
                    for (k, c) in den.iter().enumerate() {
                        num[k] -= q * c;
                    }
                    num.pop();
                }
                let num = trim(num);
                if num.is_empty() || den.len() == 1 {
                    dens.push(vec![ONE]);
                    rems.push(vec![]);
                } else {
                    dens.push(den);
                    rems.push(num);
                }
            }
            let common = dens.iter().fold(vec![ONE], |acc, p| poly_mul(&acc, p));
            let k = common.len() - 1;
            if k == 0 {
                continue;
            }
            let mut a = CMatrix::zeros(k, k);
            for r in 0..k - 1 {
                a[(r, r + 1)] = ONE;
            }
            for c in 0..k {
                a[(k - 1, c)] = -common[c];
            }
            let mut b = CMatrix::zeros(k, m1);
            b[(k - 1, j)] = ONE;
            let mut cm = CMatrix::zeros(m2, k);
            for i in 0..m2 {
                let others = dens
                    .iter()
                    .enumerate()
                    .filter(|&(l, _)| l != i)
                    .fold(vec![ONE], |acc, (_, p)| poly_mul(&acc, p));
                let numer = poly_mul(&rems[i], &others);
                for (c, &v) in numer.iter().enumerate().take(k) {
                    cm[(i, c)] = v;
                }
            }
            blocks.push((cm, a, b));
        }
        let n: usize = blocks.iter().map(|b| b.1.rows()).sum();
        let mut a = CMatrix::zeros(n, n);
        let mut b = CMatrix::zeros(n, m1);
        let mut c = CMatrix::zeros(m2, n);
        let mut off = 0;
        for (cj, aj, bj) in &blocks {
            a.set_block(off, off, aj);
            b.set_block(off, 0, bj);
            c.set_block(0, off, cj);
            off += aj.rows();
        }
        Ok(Self::new(d, c, a, b)?.minimal_reduce(RANK_TOL))
    }
}

fn project(f: &Realization, v: &CMatrix) -> Realization {
    let vh = v.adjoint();
    Realization {
        d: f.d.clone(),
        c: &f.c * v,
        a: &(&vh * &f.a) * v,
        b: &vh * &f.b,
    }
}

/// Orthonormal basis of the reachable subspace `span{B, AB, A²B, …}`,
/// grown block by block (staircase form).
pub fn controllable_basis(a: &CMatrix, b: &CMatrix, tol: f64) -> CMatrix {
    let n = a.rows();
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let smax_b = singular_values(b).first().copied().unwrap_or(0.0);
    let mut basis = orth(b, tol * smax_b);
    let mut frontier = basis.clone();
    let thr_a = tol * a.norm_fro();
    while basis.cols() < n && frontier.cols() > 0 {
        let mut w = a * &frontier;
        for _ in 0..2 {
            let proj = &basis * &(&basis.adjoint() * &w);
            w = &w - &proj;
        }
        let new = orth(&w, thr_a);
        let new = if new.cols() + basis.cols() > n {
            new.columns(0, n - basis.cols())
        } else {
            new
        };
        basis = CMatrix::hstack(&[&basis, &new]);
        frontier = new;
    }
    basis
}

pub fn is_controllable(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    controllable_basis(a, b, tol).cols() == a.rows()
}

pub fn is_observable(c: &CMatrix, a: &CMatrix, tol: f64) -> bool {
    controllable_basis(&a.adjoint(), &c.adjoint(), tol).cols() == a.rows()
}

/// Controllability matrix `[B, AB, …, A^{n−1}B]`.
pub fn controllability_matrix(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = a.rows();
    let mut blocks = Vec::with_capacity(n);
    let mut cur = b.clone();
    for _ in 0..n {
        blocks.push(cur.clone());
        cur = a * &cur;
    }
    let refs: Vec<&CMatrix> = blocks.iter().collect();
    if refs.is_empty() {
        return CMatrix::zeros(0, 0);
    }
    CMatrix::hstack(&refs)
}

/// Finds `s` with `A₂ = s·A₁·s⁻¹`, `B₂ = s·B₁`, `C₂ = C₁·s⁻¹` between two
/// minimal realizations, by least squares on the controllability matrices.
/// Returns `None` when no such `s` verifies to `tol`.
pub fn similarity_between(f1: &Realization, f2: &Realization, tol: f64) -> Option<CMatrix> {
    let n = f1.state_dim();
    if f2.state_dim() != n
        || f1.b.shape() != f2.b.shape()
        || f1.c.shape() != f2.c.shape()
        || f1.d.dist(&f2.d) > tol * (1.0 + f1.d.norm_fro())
    {
        return None;
    }
    if n == 0 {
        return Some(CMatrix::zeros(0, 0));
    }
    // scale A so that Krylov powers stay O(1)
    let c = f1.a.norm_fro().max(1.0);
    let k1 = controllability_matrix(&f1.a.scale_re(1.0 / c), &f1.b);
    let k2 = controllability_matrix(&f2.a.scale_re(1.0 / c), &f2.b);
    let dec = svd(&k1);
    let smax = dec.s[0];
    if smax == 0.0 || dec.s[n - 1] <= 1e-13 * smax {
        return None;
    }
    // K1⁺ = V Σ⁻¹ U*
    let sinv: Vec<C64> = dec.s.iter().map(|&x| C64::new(1.0 / x, 0.0)).collect();
    let pinv = &(&dec.v * &CMatrix::diag(&sinv)) * &dec.u.adjoint();
    let s = &k2 * &pinv;
    let sinv_m = crate::matnum::inverse(&s).ok()?;
    let ok_a = (&(&s * &f1.a) * &sinv_m).dist(&f2.a) <= tol * (1.0 + f2.a.norm_fro());
    let ok_b = (&s * &f1.b).dist(&f2.b) <= tol * (1.0 + f2.b.norm_fro());
    let ok_c = (&f1.c * &sinv_m).dist(&f2.c) <= tol * (1.0 + f2.c.norm_fro());
    (ok_a && ok_b && ok_c).then_some(s)
}

/// `n` Chebyshev–Lobatto points on `[lo, hi]`.
pub fn chebyshev_grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|k| {
            let t = (std::f64::consts::PI * k as f64 / (n - 1) as f64).cos();
            0.5 * (lo + hi) - 0.5 * (hi - lo) * t
        })
        .collect()
}

pub fn uniform_grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Real probe grid: 33 Chebyshev points on [−50, 50] with points closer than
/// `1e-3·‖A‖` to a pole dropped.
pub fn probe_grid(poles: &[C64], a_norm: f64) -> Vec<f64> {
    let guard = 1e-3 * a_norm;
    chebyshev_grid(33, -50.0, 50.0)
        .into_iter()
        .filter(|&x| poles.iter().all(|p| (C64::new(x, 0.0) - p).norm() > guard))
        .collect()
}

/// Grid used by [`contractive_on_real_line`] when the caller has no
/// preference: 2001 uniform points on [−100, 100].
pub fn default_contractivity_grid() -> Vec<f64> {
    uniform_grid(2001, -100.0, 100.0)
}

/// Sampled certificate that a strictly proper `F` is contractive on ℝ:
/// `σ_max(F(λ)) ≤ 1 + tol` on `grid` (plus the real parts of the poles), and
/// no pole of a minimal realization lies on the real line.
///
/// This is a numerical sufficient test, not a proof.
pub fn contractive_on_real_line(f: &Realization, grid: &[f64], tol: f64) -> bool {
    if f.d.max_abs() > 1e-12 {
        return false;
    }
    let g = f.minimal_reduce(RANK_TOL);
    let Ok(poles) = g.poles() else {
        return false;
    };
    let a_norm = g.a.norm_fro().max(1.0);
    if poles.iter().any(|p| p.im.abs() <= 1e-9 * a_norm) {
        return false;
    }
    grid.iter()
        .copied()
        .chain(poles.iter().map(|p| p.re))
        .all(|x| match g.evaluate(C64::new(x, 0.0)) {
            Ok(v) => singular_values(&v).first().copied().unwrap_or(0.0) <= 1.0 + tol,
            Err(_) => false,
        })
}
