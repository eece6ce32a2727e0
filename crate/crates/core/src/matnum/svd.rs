use super::matrix::{CMatrix, C64, ZERO};

/// Thin singular value decomposition `M = U·diag(s)·V*`, singular values in
/// descending order. `U` is `rows × k`, `V` is `cols × k` with `k = min(rows, cols)`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

const MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd(m: &CMatrix) -> Svd {
    if m.rows() < m.cols() {
        let t = svd_tall(&m.adjoint());
        return Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        };
    }
    svd_tall(m)
}

fn svd_tall(m: &CMatrix) -> Svd {
    let (rows, n) = m.shape();
    // column-major working copies
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| (0..rows).map(|i| m[(i, j)]).collect()).collect();
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { C64::new(1.0, 0.0) } else { ZERO }).collect())
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let a: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let b: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let c: C64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x.conj() * y).sum();
                let cabs = c.norm();
                if cabs == 0.0 || cabs <= f64::EPSILON * (a * b).sqrt() {
                    continue;
                }
                rotated = true;
                // rotate the phase out of q so that <p, q> is real and positive
                let phase = c / cabs;
                let zeta = (b - a) / (2.0 * cabs);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                let pc = phase.conj();
                for k in 0..rows {
                    let xp = cols[p][k];
                    let xq = cols[q][k] * pc;
                    cols[p][k] = xp * cs - xq * sn;
                    cols[q][k] = xp * sn + xq * cs;
                }
                for k in 0..n {
                    let xp = v[p][k];
                    let xq = v[q][k] * pc;
                    v[p][k] = xp * cs - xq * sn;
                    v[q][k] = xp * sn + xq * cs;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(usize, f64)> = cols
        .iter()
        .enumerate()
        .map(|(j, c)| (j, c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()))
        .collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1));

    let mut u = CMatrix::zeros(rows, n);
    let mut vm = CMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (k, &(j, sigma)) in order.iter().enumerate() {
        s.push(sigma);
        if sigma > 0.0 {
            for i in 0..rows {
                u[(i, k)] = cols[j][i] / sigma;
            }
        }
        for i in 0..n {
            vm[(i, k)] = v[j][i];
        }
    }
    Svd { u, s, v: vm }
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    svd(m).s
}

/// Number of singular values above `tol · σ_max`.
pub fn numeric_rank(m: &CMatrix, tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&smax) if smax > 0.0 => s.iter().filter(|&&x| x > tol * smax).count(),
        _ => 0,
    }
}

/// Orthonormal basis of the range of `m`, keeping directions whose singular
/// value exceeds the absolute `threshold`.
pub fn orth(m: &CMatrix, threshold: f64) -> CMatrix {
    let d = svd(m);
    let r = d.s.iter().filter(|&&x| x > threshold).count();
    d.u.columns(0, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_of_simple_matrices() {
        assert_eq!(numeric_rank(&CMatrix::identity(3), 1e-12), 3);
        assert_eq!(numeric_rank(&CMatrix::zeros(3, 3), 1e-12), 0);
        assert_eq!(numeric_rank(&CMatrix::from_real(2, 2, &[1.0, 1.0, 1.0, 1.0]), 1e-12), 1);
    }

    #[test]
    fn reconstructs_wide_and_tall() {
        let m = CMatrix::from_fn(3, 5, |i, j| C64::new((i * 5 + j) as f64 * 0.3 - 1.0, (i as f64 - j as f64) * 0.7));
        for a in [m.clone(), m.adjoint()] {
            let d = svd(&a);
            let k = d.s.len();
            let sig = CMatrix::diag(&d.s.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>());
            let rec = &(&d.u * &sig) * &d.v.adjoint();
            assert!(rec.dist(&a) < 1e-12 * a.norm_fro(), "reconstruction");
            assert_eq!(k, 3);
            assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
