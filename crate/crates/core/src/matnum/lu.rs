use super::matrix::{CMatrix, C64, ZERO};
use super::svd::singular_values;
use super::{LinalgError, SINGULAR_RCOND};

/// LU factorization with partial pivoting, `P·M = L·U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
    pivot_min: f64,
}

impl Lu {
    pub fn new(m: &CMatrix) -> Self {
        assert!(m.is_square(), "LU requires a square matrix");
        let n = m.rows();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut pivot_min = f64::INFINITY;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            pivot_min = pivot_min.min(pmax);
            if p != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
                perm.swap(k, p);
            }
            let piv = lu[(k, k)];
            if piv == ZERO {
                continue;
            }
            for i in k + 1..n {
                let f = lu[(i, k)] / piv;
                lu[(i, k)] = f;
                if f == ZERO {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        if n == 0 {
            pivot_min = 0.0;
        }
        Self { lu, perm, pivot_min }
    }

    pub fn has_zero_pivot(&self) -> bool {
        self.lu.rows() > 0 && self.pivot_min == 0.0
    }

    pub fn solve(&self, rhs: &CMatrix) -> CMatrix {
        let n = self.lu.rows();
        assert_eq!(rhs.rows(), n, "rhs row mismatch");
        let mut x = CMatrix::from_fn(n, rhs.cols(), |i, j| rhs[(self.perm[i], j)]);
        for c in 0..rhs.cols() {
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in i + 1..n {
                    s -= self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / self.lu[(i, i)];
            }
        }
        x
    }

    pub fn determinant(&self) -> C64 {
        let n = self.lu.rows();
        let mut d = C64::new(1.0, 0.0);
        for i in 0..n {
            d *= self.lu[(i, i)];
        }
        // parity of the permutation
        let mut seen = vec![false; n];
        let mut sign = 1.0;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            let mut len = 0;
            let mut j = s;
            while !seen[j] {
                seen[j] = true;
                j = self.perm[j];
                len += 1;
            }
            if len % 2 == 0 {
                sign = -sign;
            }
        }
        d * sign
    }
}

/// Solves `M·X = RHS` and returns `X` together with the 2-norm condition
/// number of `M` (from its singular values).
pub fn solve_linear(m: &CMatrix, rhs: &CMatrix) -> Result<(CMatrix, f64), LinalgError> {
    if !m.is_square() || rhs.rows() != m.rows() {
        return Err(LinalgError::DimensionMismatch(format!(
            "solve {:?} \\ {:?}",
            m.shape(),
            rhs.shape()
        )));
    }
    if m.rows() == 0 {
        return Ok((CMatrix::zeros(0, rhs.cols()), 1.0));
    }
    let sv = singular_values(m);
    let smax = sv[0];
    let smin = *sv.last().unwrap();
    if smax == 0.0 || smin <= SINGULAR_RCOND * smax {
        return Err(LinalgError::Singular {
            rcond: if smax == 0.0 { 0.0 } else { smin / smax },
        });
    }
    let lu = Lu::new(m);
    Ok((lu.solve(rhs), smax / smin))
}

/// Matrix inverse through [`solve_linear`].
pub fn inverse(m: &CMatrix) -> Result<CMatrix, LinalgError> {
    solve_linear(m, &CMatrix::identity(m.rows())).map(|(x, _)| x)
}
