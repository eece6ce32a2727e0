#![allow(dead_code)]

use jcomplete::matnum::{eigenvalues, CMatrix, C64, I};
use jcomplete::realization::Realization;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss<R: Rng>(r: &mut R) -> f64 {
    // Box–Muller
    let u1: f64 = r.gen_range(1e-12..1.0);
    let u2: f64 = r.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn random_matrix<R: Rng>(r: &mut R, rows: usize, cols: usize, scale: f64) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| C64::new(gauss(r), gauss(r)) * scale)
}

/// Random matrix whose spectrum lies in `Im λ ≤ -margin`.
pub fn random_stable<R: Rng>(r: &mut R, n: usize, margin: f64) -> CMatrix {
    let m = random_matrix(r, n, n, 1.0 / (n as f64).sqrt());
    let top = eigenvalues(&m).unwrap().iter().map(|z| z.im).fold(f64::MIN, f64::max);
    let extra: f64 = r.gen_range(0.0..1.0);
    m.shift(I * (top + margin + extra))
}

fn norm_at(rr: &Realization, l: f64) -> f64 {
    let v = rr.evaluate(C64::new(l, 0.0)).unwrap();
    jcomplete::matnum::singular_values(&v)[0]
}

/// Largest singular value of `R(λ)` on the real line: a coarse scan of
/// [-60, 60] followed by local refinement around the best samples.
pub fn sup_on_grid(rr: &Realization) -> f64 {
    let n = 2401;
    let h = 120.0 / (n - 1) as f64;
    let mut samples: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let l = -60.0 + h * k as f64;
            (norm_at(rr, l), l)
        })
        .collect();
    samples.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = samples[0].0;
    for &(_, centre) in samples.iter().take(4) {
        for k in 0..=200 {
            let l = centre - h + 2.0 * h * k as f64 / 200.0;
            best = best.max(norm_at(rr, l));
        }
    }
    best
}

/// Random strictly proper `R = C(λ−A)⁻¹B` with stable `A`, scaled so that
/// its sup norm on the real line is `target` (< 1).
pub fn random_contractive<R: Rng>(r: &mut R, n: usize, m1: usize, m2: usize, target: f64) -> Realization {
    let a = random_stable(r, n, 0.3);
    let b = random_matrix(r, n, m1, 1.0);
    let c = random_matrix(r, m2, n, 1.0);
    let raw = Realization::new(CMatrix::zeros(m2, m1), c.clone(), a.clone(), b.clone()).unwrap();
    let sup = sup_on_grid(&raw);
    Realization::new(CMatrix::zeros(m2, m1), c.scale_re(target / sup), a, b).unwrap()
}

/// Well-conditioned random invertible matrix.
pub fn random_invertible<R: Rng>(r: &mut R, n: usize) -> CMatrix {
    &CMatrix::identity(n) + &random_matrix(r, n, n, 0.3 / (n as f64).sqrt())
}

pub fn rel_close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    a.dist(b) <= tol * (1.0 + b.norm_fro())
}
