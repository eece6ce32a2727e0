//! Complex Schur decomposition `M = Q·T·Q*` by Householder reduction to
//! Hessenberg form followed by single-shift QR with Wilkinson shifts, plus
//! eigenvalue reordering by adjacent unitary swaps.

use super::matrix::{CMatrix, C64, ONE, ZERO};
use super::LinalgError;

#[derive(Debug, Clone)]
pub struct SchurForm {
    /// Unitary Schur vectors.
    pub q: CMatrix,
    /// Upper triangular factor; its strictly lower part is exactly zero.
    pub t: CMatrix,
}

impl SchurForm {
    pub fn eigenvalues(&self) -> Vec<C64> {
        self.t.diagonal()
    }

    pub fn dim(&self) -> usize {
        self.t.rows()
    }

    /// `Q·T·Q*`.
    pub fn reconstruct(&self) -> CMatrix {
        &(&self.q * &self.t) * &self.q.adjoint()
    }
}

/// Plane rotation `G = [[c, -conj(s)], [s, conj(c)]]` with `G*·[x; y] = [r; 0]`.
#[derive(Debug, Clone, Copy)]
struct Givens {
    c: C64,
    s: C64,
}

impl Givens {
    fn zeroing(x: C64, y: C64) -> Self {
        let r = x.norm().hypot(y.norm());
        if r == 0.0 {
            Self { c: ONE, s: ZERO }
        } else {
            Self { c: x / r, s: y / r }
        }
    }

    /// `M ← G*·M` on rows `k, k+1`, columns `c0..c1`.
    fn apply_left(&self, m: &mut CMatrix, k: usize, c0: usize, c1: usize) {
        for j in c0..c1 {
            let a = m[(k, j)];
            let b = m[(k + 1, j)];
            m[(k, j)] = self.c.conj() * a + self.s.conj() * b;
            m[(k + 1, j)] = -self.s * a + self.c * b;
        }
    }

    /// `M ← M·G` on columns `k, k+1`, rows `r0..r1`.
    fn apply_right(&self, m: &mut CMatrix, k: usize, r0: usize, r1: usize) {
        for i in r0..r1 {
            let a = m[(i, k)];
            let b = m[(i, k + 1)];
            m[(i, k)] = self.c * a + self.s * b;
            m[(i, k + 1)] = -self.s.conj() * a + self.c.conj() * b;
        }
    }
}

fn hessenberg(h: &mut CMatrix, q: &mut CMatrix) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
        let mut v = x.clone();
        v[0] += phase * xnorm;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // P = I - 2 v v* / (v* v) acting on rows/cols k+1..n
        for j in 0..n {
            let dot: C64 = (0..v.len()).map(|i| v[i].conj() * h[(k + 1 + i, j)]).sum();
            let f = dot * (2.0 / vnorm2);
            for i in 0..v.len() {
                h[(k + 1 + i, j)] -= v[i] * f;
            }
        }
        for mat in [&mut *h, &mut *q] {
            for i in 0..n {
                let dot: C64 = (0..v.len()).map(|l| mat[(i, k + 1 + l)] * v[l]).sum();
                let f = dot * (2.0 / vnorm2);
                for l in 0..v.len() {
                    mat[(i, k + 1 + l)] -= f * v[l].conj();
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
}

/// Eigenvalues of `[[a, b], [c, d]]`; the first one is computed without
/// cancellation and is the one used for direct 2×2 triangularization.
fn eig2(a: C64, b: C64, c: C64, d: C64) -> (C64, C64, C64) {
    let mu = (a - d) * 0.5;
    let disc = (mu * mu + b * c).sqrt();
    let (p, m) = (mu + disc, mu - disc);
    let lead = if p.norm() >= m.norm() { p } else { m };
    let l1 = d + lead;
    let l2 = a + d - l1;
    (l1, l2, lead)
}

/// Complex Schur decomposition.
pub fn schur(m: &CMatrix) -> Result<SchurForm, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::DimensionMismatch(format!(
            "schur of {:?}",
            m.shape()
        )));
    }
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = m.rows();
    let mut h = m.clone();
    let mut q = CMatrix::identity(n);
    hessenberg(&mut h, &mut q);

    let norm = m.norm_fro();
    let floor = 1e-14 * norm;
    let cap = 100 * n.max(1);
    let mut total = 0usize;
    let mut its = 0usize;
    let mut hi = n.saturating_sub(1);

    while hi > 0 {
        // locate the active unreduced window [lo, hi]
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let local = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if sub <= f64::EPSILON * local || sub <= floor {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            its = 0;
            continue;
        }
        if hi - lo == 1 {
            let k = lo;
            let (a, b, c, d) = (h[(k, k)], h[(k, k + 1)], h[(k + 1, k)], h[(k + 1, k + 1)]);
            let (l1, _, lead) = eig2(a, b, c, d);
            // eigenvector for l1: [l1 - d, c] or [b, l1 - a]
            let v1 = (lead, c);
            let v2 = (b, l1 - a);
            let (x, y) = if v1.0.norm().hypot(v1.1.norm()) >= v2.0.norm().hypot(v2.1.norm()) {
                v1
            } else {
                v2
            };
            let g = Givens::zeroing(x, y);
            g.apply_left(&mut h, k, k, n);
            g.apply_right(&mut h, k, 0, k + 2);
            g.apply_right(&mut q, k, 0, n);
            h[(k + 1, k)] = ZERO;
            continue;
        }

        total += 1;
        its += 1;
        if total > cap {
            return Err(LinalgError::NonConvergence { iterations: total });
        }
        let shift = if its.is_multiple_of(10) {
            // exceptional shift
            h[(hi, hi)] + h[(hi, hi - 1)].norm() * 0.75
        } else {
            let (a, b, c, d) = (
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            );
            let (l1, l2, _) = eig2(a, b, c, d);
            if (l1 - d).norm() <= (l2 - d).norm() {
                l1
            } else {
                l2
            }
        };

        let mut x = h[(lo, lo)] - shift;
        let mut y = h[(lo + 1, lo)];
        for k in lo..hi {
            let g = Givens::zeroing(x, y);
            let c0 = if k > lo { k - 1 } else { lo };
            g.apply_left(&mut h, k, c0, n);
            g.apply_right(&mut h, k, 0, (k + 3).min(hi + 1));
            g.apply_right(&mut q, k, 0, n);
            if k > lo {
                h[(k + 1, k - 1)] = ZERO;
            }
            if k + 1 < hi {
                x = h[(k + 1, k)];
                y = h[(k + 2, k)];
            }
        }
    }

    for i in 0..n {
        for j in 0..i {
            h[(i, j)] = ZERO;
        }
    }
    Ok(SchurForm { q, t: h })
}

/// Eigenvalues in Schur diagonal order.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>, LinalgError> {
    Ok(schur(m)?.eigenvalues())
}

/// Real eigenvalues of the Hermitian part of `h`, ascending.
pub fn hermitian_eigenvalues(h: &CMatrix) -> Result<Vec<f64>, LinalgError> {
    let herm = h.hermitian_part();
    let mut ev: Vec<f64> = schur(&herm)?.eigenvalues().iter().map(|z| z.re).collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Swaps the diagonal entries at `k` and `k+1`.
fn swap_adjacent(s: &mut SchurForm, k: usize, scale: f64) -> Result<(), LinalgError> {
    let n = s.t.rows();
    let a = s.t[(k, k)];
    let b = s.t[(k + 1, k + 1)];
    let c = s.t[(k, k + 1)];
    // eigenvector of [[a, c], [0, b]] for eigenvalue b
    let (x, y) = (c, b - a);
    if x.norm() == 0.0 && y.norm() == 0.0 {
        return Ok(());
    }
    let g = Givens::zeroing(x, y);
    g.apply_left(&mut s.t, k, k, n);
    g.apply_right(&mut s.t, k, 0, k + 2);
    g.apply_right(&mut s.q, k, 0, n);
    let residual = s.t[(k + 1, k)].norm();
    if residual > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(LinalgError::SwapFailure { position: k, residual });
    }
    s.t[(k + 1, k)] = ZERO;
    s.t[(k, k)] = b;
    s.t[(k + 1, k + 1)] = a;
    Ok(())
}

/// Moves the diagonal positions flagged in `mask` to the leading block,
/// preserving the relative order inside both the selected and the
/// unselected groups.
pub fn reorder_schur_mask(s: &SchurForm, mask: &[bool]) -> Result<SchurForm, LinalgError> {
    let n = s.dim();
    assert_eq!(mask.len(), n, "mask length");
    let mut out = s.clone();
    let scale = s.t.norm_fro();
    let mut next = 0;
    for i in 0..n {
        if !mask[i] {
            continue;
        }
        let mut pos = i;
        while pos > next {
            swap_adjacent(&mut out, pos - 1, scale)?;
            pos -= 1;
        }
        next += 1;
    }
    Ok(out)
}

/// Moves eigenvalues satisfying `select` to the leading block.
pub fn reorder_schur(s: &SchurForm, select: impl Fn(C64) -> bool) -> Result<SchurForm, LinalgError> {
    let mask: Vec<bool> = s.eigenvalues().into_iter().map(select).collect();
    reorder_schur_mask(s, &mask)
}
