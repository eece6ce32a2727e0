mod common;

use common::*;
use jcomplete::completion::ParameterSet;
use jcomplete::matnum::{eigenvalues, inverse, solve_sylvester, CMatrix, C64, I, ONE, ZERO};
use jcomplete::realization::{Realization, RANK_TOL};
use jcomplete::riccati::*;
use rand::Rng;

fn s(z: C64) -> CMatrix {
    CMatrix::scalar(z)
}

fn re(v: f64) -> C64 {
    C64::new(v, 0.0)
}

/// Contractive `R` whose poles are split: `n_up` of them in the upper
/// half-plane, the rest in the lower one.
fn mixed_contractive<R: Rng>(r: &mut R, n_low: usize, n_up: usize, m1: usize, m2: usize) -> Realization {
    let low = random_stable(r, n_low, 0.3);
    let up = random_stable(r, n_up, 0.3).scale(re(-1.0));
    let a = CMatrix::block_diag(&low, &up);
    let n = n_low + n_up;
    let raw = Realization::new(CMatrix::zeros(m2, m1), random_matrix(r, m2, n, 1.0), a, random_matrix(r, n, m1, 1.0)).unwrap();
    let sup = sup_on_grid(&raw);
    let target = r.gen_range(0.3..0.9);
    Realization::new(raw.d.clone(), raw.c.scale_re(target / sup), raw.a, raw.b).unwrap().minimal_reduce(RANK_TOL)
}

fn problem(r: &Realization) -> RiccatiProblem {
    RiccatiProblem::new(r.a.clone(), r.b.clone(), r.c.clone()).unwrap()
}

#[test]
fn hamiltonian_examples() {
    let k = hamiltonian(&RiccatiProblem::new(s(-I), s(ONE), s(ONE)).unwrap());
    assert_eq!(k, CMatrix::from_rows(&[vec![-I, ONE], vec![ONE, I]]));

    let a = CMatrix::from_rows(&[vec![ONE, I], vec![ZERO, re(2.0)]]);
    let k = hamiltonian(&RiccatiProblem::new(a.clone(), CMatrix::zeros(2, 1), CMatrix::zeros(1, 2)).unwrap());
    assert_eq!(k, CMatrix::block_diag(&a, &a.adjoint()));

    let k = hamiltonian(&RiccatiProblem::new(s(-I * 3.0), s(ONE), s(-I * 5f64.sqrt())).unwrap());
    assert!(k.dist(&CMatrix::from_rows(&[vec![-I * 3.0, ONE], vec![re(5.0), I * 3.0]])) < 1e-14);
}

#[test]
fn solve_examples() {
    let sol = solve(&RiccatiProblem::new(s(-I), s(ONE), s(ONE)).unwrap(), RESIDUAL_TOL).unwrap();
    assert!((sol.x[(0, 0)] - 1.0).norm() < 1e-7);
    assert!(sol.alpha[(0, 0)].norm() < 1e-7);

    let p = RiccatiProblem::new(s(-I * 3.0), s(ONE), s(-I * 5f64.sqrt())).unwrap();
    let sol = solve(&p, RESIDUAL_TOL).unwrap();
    assert!((sol.x[(0, 0)] - 1.0).norm() < 1e-12);
    assert!((sol.alpha[(0, 0)] + I * 2.0).norm() < 1e-12);
    assert_eq!(sol.definiteness, Definiteness::PositiveDefinite);

    let h = re(0.5f64.sqrt());
    let sol = solve(&RiccatiProblem::new(s(I), s(h), s(h)).unwrap(), RESIDUAL_TOL).unwrap();
    let r3 = 3f64.sqrt();
    assert!((sol.x[(0, 0)] - (-2.0 - r3)).norm() < 1e-12);
    assert!((sol.alpha[(0, 0)] + I * (r3 / 2.0)).norm() < 1e-12);
    assert_eq!(sol.definiteness, Definiteness::NegativeDefinite);
}

#[test]
fn verify_examples() {
    let h = re(0.5f64.sqrt());
    let r3 = 3f64.sqrt();
    let p5 = RiccatiProblem::new(s(-I * 3.0), s(ONE), s(-I * 5f64.sqrt())).unwrap();
    for (p, x) in [
        (RiccatiProblem::new(s(-I), s(ONE), s(ONE)).unwrap(), 1.0),
        (p5.clone(), 1.0),
        (RiccatiProblem::new(s(I), s(h), s(h)).unwrap(), -2.0 - r3),
    ] {
        let d = verify(&p, &s(re(x)), RESIDUAL_TOL);
        assert!(d.residual <= 1e-12, "residual {}", d.residual);
        assert!(d.passes());
    }

    let d = verify(&p5, &s(ZERO), RESIDUAL_TOL);
    assert!((d.residual - 5.0).abs() < 1e-12);
    assert!(!d.residual_ok());

    let d = verify(&p5, &s(re(5.0)), RESIDUAL_TOL);
    assert!(d.residual < 1e-12);
    assert!((d.spectral_margin - 2.0).abs() < 1e-12);
    assert!(!d.spectrum_ok() && !d.passes());
}

#[test]
fn definiteness_examples() {
    assert_eq!(classify_definiteness(&s(ONE)), Definiteness::PositiveDefinite);
    assert_eq!(classify_definiteness(&s(re(-2.0 - 3f64.sqrt()))), Definiteness::NegativeDefinite);
    assert_eq!(classify_definiteness(&CMatrix::diag(&[ONE, re(-1.0)])), Definiteness::Indefinite);
}

fn check_solution(p: &RiccatiProblem, sol: &RiccatiSolution) {
    let n = p.dim();
    let x = &sol.x;
    assert!(x.dist(&x.adjoint()) <= 1e-12 * x.norm_fro());
    let bound = 1e-9 * (x.norm_fro().powi(2) * p.b.norm_fro().powi(2) + p.c.norm_fro().powi(2) + x.norm_fro() * p.a.norm_fro());
    assert!(sol.residual <= bound);
    let d = verify(p, x, RESIDUAL_TOL);
    assert!(d.passes(), "{d:?}");

    // T⁻¹KT with T = [[I, 0], [iX, I]] is block upper triangular
    let k = hamiltonian(p);
    let ix = x.scale(I);
    let t = CMatrix::block2(&CMatrix::identity(n), &CMatrix::zeros(n, n), &ix, &CMatrix::identity(n));
    let t_inv = CMatrix::block2(&CMatrix::identity(n), &CMatrix::zeros(n, n), &ix.scale(re(-1.0)), &CMatrix::identity(n));
    let tri = &(&t_inv * &k) * &t;
    assert!(tri.block(n, 2 * n, 0, n).norm_fro() <= 1e-9 * k.norm_fro());
    assert!(tri.block(0, n, 0, n).dist(&sol.alpha) <= 1e-10 * (1.0 + sol.alpha.norm_fro()));

    // σ(K) = σ(α) ∪ σ(α*)
    let mut split = eigenvalues(&sol.alpha).unwrap();
    split.extend(split.clone().iter().map(|z| z.conj()));
    let mut rest = eigenvalues(&k).unwrap();
    for z in split {
        let (idx, d) = rest
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (z - w).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!(d <= 1e-7 * (1.0 + k.norm_fro()), "unmatched eigenvalue {z} ({d:.2e})");
        rest.swap_remove(idx);
    }
}

#[test]
fn random_problems_satisfy_invariants() {
    let mut r = rng(301);
    for _ in 0..60 {
        let n_low = r.gen_range(0..=3);
        let n_up = r.gen_range(0..=3).max(usize::from(n_low == 0));
        let (m1, m2) = (r.gen_range(1..=3), r.gen_range(1..=3));
        let rr = mixed_contractive(&mut r, n_low, n_up, m1, m2);
        let p = problem(&rr);
        let sol = solve(&p, RESIDUAL_TOL).unwrap();
        check_solution(&p, &sol);

        // positivity exactly when every pole lies in the open lower half-plane
        let stable = rr.poles().unwrap().iter().all(|z| z.im < 0.0);
        assert_eq!(sol.definiteness == Definiteness::PositiveDefinite, stable);
    }
}

#[test]
fn solution_is_unique_up_to_basis() {
    let mut r = rng(302);
    for _ in 0..30 {
        let n = r.gen_range(1..=4);
        let n_up = r.gen_range(0..=1);
        let rr = mixed_contractive(&mut r, n, n_up, 2, 1);
        let p = problem(&rr);
        let x = solve(&p, RESIDUAL_TOL).unwrap().x;
        // an orthonormal change of state basis moves X by congruence
        let q = jcomplete::matnum::schur(&random_matrix(&mut r, p.dim(), p.dim(), 1.0)).unwrap().q;
        let pq = RiccatiProblem::new(&(&q * &p.a) * &q.adjoint(), &q * &p.b, &p.c * &q.adjoint()).unwrap();
        let xq = solve(&pq, RESIDUAL_TOL).unwrap().x;
        let back = &(&q.adjoint() * &xq) * &q;
        assert!(back.dist(&x) <= 1e-8 * (1.0 + x.norm_fro()));
    }
}

#[test]
fn admissible_sets_give_riccati_solutions() {
    let mut r = rng(303);
    let mut checked = 0;
    while checked < 40 {
        let n = r.gen_range(1..=4);
        let (m1, m2) = (r.gen_range(1..=2), r.gen_range(1..=2));
        let alpha = random_stable(&mut r, n, 0.2);
        let g1 = random_matrix(&mut r, n, m1, 1.0);
        let g = random_matrix(&mut r, n, m2, 1.0);
        let rhs = (&(&g1 * &g1.adjoint()) - &(&g * &g.adjoint())).scale(I);
        let s0 = solve_sylvester(&alpha, &alpha.adjoint(), &rhs).unwrap().hermitian_part();
        let Ok(p) = ParameterSet::new(alpha, s0, g1, g) else {
            continue;
        };
        let s0_inv = inverse(&p.s0).unwrap();
        let prob = RiccatiProblem::new(p.theta().unwrap(), p.gamma1.clone(), (&p.gamma.adjoint() * &s0_inv).scale(-I)).unwrap();
        let d = verify(&prob, &s0_inv, RESIDUAL_TOL);
        assert!(d.residual_ok() && d.spectrum_ok(), "{d:?}");
        checked += 1;
    }
}

#[test]
fn odd_real_cluster_is_not_contractive() {
    // R = 2/(λ + i) is not contractive: K has a simple pair of real eigenvalues
    let p = RiccatiProblem::new(s(-I), s(ONE), s(re(2.0))).unwrap();
    assert!(solve(&p, RESIDUAL_TOL).is_err());
}

#[test]
fn empty_problem_verifies() {
    let p = RiccatiProblem::new(CMatrix::zeros(0, 0), CMatrix::zeros(0, 2), CMatrix::zeros(1, 0)).unwrap();
    let d = verify(&p, &CMatrix::zeros(0, 0), RESIDUAL_TOL);
    assert!(d.passes(), "{d:?}");
}
