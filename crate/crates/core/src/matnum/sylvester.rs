use super::matrix::{CMatrix, ZERO};
use super::schur::schur;
use super::LinalgError;

/// Solves `A·X − X·B = C` by Bartels–Stewart on the complex Schur forms of
/// `A` and `B`.
///
/// Fails with [`LinalgError::SpectraOverlap`] when some pair of eigenvalues is
/// closer than `1e-10·(‖A‖ + ‖B‖)`.
pub fn solve_sylvester(a: &CMatrix, b: &CMatrix, c: &CMatrix) -> Result<CMatrix, LinalgError> {
    let (p, q) = (a.rows(), b.rows());
    if !a.is_square() || !b.is_square() || c.shape() != (p, q) {
        return Err(LinalgError::DimensionMismatch(format!(
            "sylvester A{:?} B{:?} C{:?}",
            a.shape(),
            b.shape(),
            c.shape()
        )));
    }
    if p == 0 || q == 0 {
        return Ok(CMatrix::zeros(p, q));
    }
    let sa = schur(a)?;
    let sb = schur(b)?;
    let threshold = 1e-10 * (a.norm_fro() + b.norm_fro());
    let mut separation = f64::INFINITY;
    for x in sa.eigenvalues() {
        for y in sb.eigenvalues() {
            separation = separation.min((x - y).norm());
        }
    }
    if separation < threshold || separation == 0.0 {
        return Err(LinalgError::SpectraOverlap {
            separation,
            threshold,
        });
    }

    let ta = &sa.t;
    let tb = &sb.t;
    let ct = &(&sa.q.adjoint() * c) * &sb.q;
    let mut y = CMatrix::zeros(p, q);
    for j in 0..q {
        // (T_A − tb_jj)·y_j = c_j + Σ_{k<j} y_k·tb_kj
        let mut rhs: Vec<_> = (0..p).map(|i| ct[(i, j)]).collect();
        for k in 0..j {
            let t = tb[(k, j)];
            if t == ZERO {
                continue;
            }
            for (i, r) in rhs.iter_mut().enumerate() {
                *r += y[(i, k)] * t;
            }
        }
        let shift = tb[(j, j)];
        for i in (0..p).rev() {
            let mut s = rhs[i];
            for l in i + 1..p {
                s -= ta[(i, l)] * y[(l, j)];
            }
            y[(i, j)] = s / (ta[(i, i)] - shift);
        }
    }
    Ok(&(&sa.q * &y) * &sb.q.adjoint())
}
