use super::lu::Lu;
use super::matrix::CMatrix;

// [13/13] Padé coefficients
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn axpy_sum(terms: &[(f64, &CMatrix)], n: usize) -> CMatrix {
    let mut out = CMatrix::zeros(n, n);
    for &(c, m) in terms {
        for (o, v) in out.data_mut().iter_mut().zip(m.as_slice()) {
            *o += v * c;
        }
    }
    out
}

/// Matrix exponential by scaling and squaring with the diagonal [13/13]
/// Padé approximant.
pub fn mat_exp(m: &CMatrix) -> CMatrix {
    assert!(m.is_square(), "mat_exp requires a square matrix");
    let n = m.rows();
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let norm = m.norm_1();
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = m.scale_re(0.5f64.powi(s));
    let id = CMatrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;

    let inner_u = axpy_sum(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)], n);
    let u_poly = &(&a6 * &inner_u)
        + &axpy_sum(&[(b[7], &a6), (b[5], &a4), (b[3], &a2), (b[1], &id)], n);
    let u = &a * &u_poly;
    let inner_v = axpy_sum(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)], n);
    let v = &(&a6 * &inner_v)
        + &axpy_sum(&[(b[6], &a6), (b[4], &a4), (b[2], &a2), (b[0], &id)], n);

    let mut r = Lu::new(&(&v - &u)).solve(&(&v + &u));
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// `∫₀ˣ e^{s·A1} · B1 · e^{s·A2} ds`.
///
/// On a short base interval `h = x / 2^p` the integral is read off the
/// top-right block of `exp(h·[[A1, B1], [0, −A2]])`, which equals
/// `F(h)·e^{−h·A2}`. The full interval is then reached by doubling,
/// `F(2y) = F(y) + e^{y·A1}·F(y)·e^{y·A2}`, so no step ever exponentiates a
/// block with widely separated growth rates.
pub fn exp_integral(a1: &CMatrix, b1: &CMatrix, a2: &CMatrix, x: f64) -> CMatrix {
    let (p, q) = (a1.rows(), a2.rows());
    assert!(a1.is_square() && a2.is_square(), "exp_integral needs square A1, A2");
    assert_eq!(b1.shape(), (p, q), "exp_integral: B1 must be {p}x{q}");
    if x == 0.0 || p == 0 || q == 0 {
        return CMatrix::zeros(p, q);
    }
    let rate = a1.norm_1() + a2.norm_1() + b1.norm_1();
    let mut doublings = 0;
    let mut h = x;
    while h.abs() * rate > 0.5 && doublings < 60 {
        h *= 0.5;
        doublings += 1;
    }

    let big = CMatrix::block2(a1, b1, &CMatrix::zeros(q, p), &(-a2)).scale_re(h);
    let e = mat_exp(&big);
    let mut e1 = e.block(0, p, 0, p);
    let mut e2 = mat_exp(&a2.scale_re(h));
    let mut f = &e.block(0, p, p, p + q) * &e2;
    for _ in 0..doublings {
        f = &f + &(&(&e1 * &f) * &e2);
        e1 = &e1 * &e1;
        e2 = &e2 * &e2;
    }
    f
}
