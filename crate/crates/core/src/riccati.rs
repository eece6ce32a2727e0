//! Hermitian solutions of `i(XA − A*X) = C*C + XBB*X` with
//! `σ(A + iBB*X)` in the closed lower half-plane.

use crate::error::{Error, Result};
use crate::matnum::{
    hermitian_eigenvalues, inverse, reorder_schur_mask, schur, singular_values, CMatrix, SchurForm, C64, I,
};

/// Relative band separating real from non-real eigenvalues of the Hamiltonian.
pub const EPS_SPEC: f64 = 1e-9;
/// Relative rank threshold for invertibility and definiteness decisions.
pub const EPS_RANK: f64 = 1e-10;
/// Default relative residual tolerance.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Largest acceptable condition number of the `U1` block of a graph subspace.
pub const MAX_COND_U1: f64 = 1e10;
/// Upper bound on the number of candidate invariant subspaces tried.
pub const MAX_CANDIDATES: usize = 64;

const CLUSTER_RADII: [f64; 4] = [1e-6, 1e-5, 1e-4, 1e-7];

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiProblem {
    pub a: CMatrix,
    pub b: CMatrix,
    pub c: CMatrix,
}

impl RiccatiProblem {
    pub fn new(a: CMatrix, b: CMatrix, c: CMatrix) -> Result<Self> {
        let n = a.rows();
        if !a.is_square() || b.rows() != n || c.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "riccati A{:?} B{:?} C{:?}",
                a.shape(),
                b.shape(),
                c.shape()
            )));
        }
        Ok(Self { a, b, c })
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    fn bb(&self) -> CMatrix {
        &self.b * &self.b.adjoint()
    }

    fn cc(&self) -> CMatrix {
        &self.c.adjoint() * &self.c
    }

    /// `i(XA − A*X) − C*C − XBB*X`.
    pub fn residual_matrix(&self, x: &CMatrix) -> CMatrix {
        let lhs = (&(x * &self.a) - &(&self.a.adjoint() * x)).scale(I);
        &(&lhs - &self.cc()) - &(&(x * &self.bb()) * x)
    }

    /// `A + iBB*X`.
    pub fn closed_loop(&self, x: &CMatrix) -> CMatrix {
        &self.a + &(&self.bb() * x).scale(I)
    }

    /// Scale entering the relative residual bound:
    /// `‖X‖²‖B‖² + ‖C‖² + ‖X‖‖A‖`.
    pub fn residual_scale(&self, x: &CMatrix) -> f64 {
        let (nx, nb) = (x.norm_fro(), self.b.norm_fro());
        let nc = self.c.norm_fro();
        nx * nx * nb * nb + nc * nc + nx * self.a.norm_fro()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Definiteness {
    PositiveDefinite,
    NegativeDefinite,
    Indefinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    pub x: CMatrix,
    pub alpha: CMatrix,
    pub residual: f64,
    /// Hamiltonian eigenvalues spanning the chosen invariant subspace.
    pub selected_spectrum: Vec<C64>,
    pub definiteness: Definiteness,
    /// `‖X − X*‖_F` before Hermitization.
    pub hermitian_defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub dim: usize,
    pub residual: f64,
    pub residual_bound: f64,
    /// `max Im σ(A + iBB*X)`.
    pub spectral_margin: f64,
    pub spectral_band: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub hermitian_defect: f64,
    pub definiteness: Definiteness,
}

impl Diagnostics {
    pub fn residual_ok(&self) -> bool {
        self.residual <= self.residual_bound
    }

    pub fn spectrum_ok(&self) -> bool {
        self.spectral_margin <= self.spectral_band
    }

    pub fn invertible(&self) -> bool {
        self.dim == 0 || self.sigma_max > 0.0 && self.sigma_min > EPS_RANK * self.sigma_max
    }

    pub fn passes(&self) -> bool {
        self.residual_ok() && self.spectrum_ok() && self.invertible()
    }
}

/// `K = [[A, BB*], [C*C, A*]]`.
pub fn hamiltonian(p: &RiccatiProblem) -> CMatrix {
    CMatrix::block2(&p.a, &p.bb(), &p.cc(), &p.a.adjoint())
}

/// Tolerance band for `max Im σ(α)`: eigenvalues of `α` that belong on the
/// real line are only determined to about the square root of machine
/// precision when they are defective.
pub fn spectral_band(alpha: &CMatrix) -> f64 {
    1e-6 * alpha.norm_fro().max(1.0)
}

pub fn classify_definiteness(x: &CMatrix) -> Definiteness {
    let Ok(ev) = hermitian_eigenvalues(x) else {
        return Definiteness::Indefinite;
    };
    let scale = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let thr = EPS_RANK * scale;
    if scale > 0.0 && ev.iter().all(|&v| v > thr) {
        Definiteness::PositiveDefinite
    } else if scale > 0.0 && ev.iter().all(|&v| v < -thr) {
        Definiteness::NegativeDefinite
    } else {
        Definiteness::Indefinite
    }
}

/// Residual, spectral and invertibility diagnostics for a candidate `X`;
/// `tol` is the relative residual tolerance.
pub fn verify(p: &RiccatiProblem, x: &CMatrix, tol: f64) -> Diagnostics {
    let alpha = p.closed_loop(x);
    let spectral_margin = crate::matnum::eigenvalues(&alpha)
        .map(|ev| ev.iter().fold(f64::NEG_INFINITY, |m, z| m.max(z.im)))
        .unwrap_or(f64::INFINITY);
    let sv = singular_values(x);
    Diagnostics {
        dim: x.rows(),
        residual: p.residual_matrix(x).norm_fro(),
        residual_bound: tol * p.residual_scale(x),
        spectral_margin,
        spectral_band: spectral_band(&alpha),
        sigma_min: sv.last().copied().unwrap_or(0.0),
        sigma_max: sv.first().copied().unwrap_or(0.0),
        hermitian_defect: x.dist(&x.adjoint()),
        definiteness: classify_definiteness(x),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Stable,
    Unstable,
    Real,
}

#[derive(Debug, Clone)]
struct Cluster {
    side: Side,
    /// Schur positions, ordered by increasing imaginary part.
    members: Vec<usize>,
}

/// Single-linkage clusters of the Schur diagonal, classified by centroid.
fn clusters(ev: &[C64], radius: f64, eps_spec: f64) -> Vec<Cluster> {
    let m = ev.len();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..m {
        for j in i + 1..m {
            if (ev[i] - ev[j]).norm() <= radius {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of: Vec<Option<usize>> = vec![None; m];
    for i in 0..m {
        let r = find(&mut parent, i);
        match root_of[r] {
            Some(g) => groups[g].push(i),
            None => {
                root_of[r] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    groups
        .into_iter()
        .map(|mut members| {
            members.sort_by(|&a, &b| ev[a].im.total_cmp(&ev[b].im));
            let centroid = members.iter().map(|&k| ev[k].im).sum::<f64>() / members.len() as f64;
            let side = if centroid < -eps_spec {
                Side::Stable
            } else if centroid > eps_spec {
                Side::Unstable
            } else {
                Side::Real
            };
            Cluster { side, members }
        })
        .collect()
}

/// Distributions `k_c ∈ [0, size_c]` with `Σ k_c = total`, nearest to the
/// even split first.
fn distributions(sizes: &[usize], total: usize, cap: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut cur = vec![0; sizes.len()];
    fn rec(i: usize, left: usize, sizes: &[usize], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if out.len() >= 10_000 {
            return;
        }
        if i == sizes.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let rest: usize = sizes[i + 1..].iter().sum();
        for k in 0..=sizes[i].min(left) {
            if left - k > rest {
                continue;
            }
            cur[i] = k;
            rec(i + 1, left - k, sizes, cur, out);
        }
    }
    rec(0, total, sizes, &mut cur, &mut out);
    let dev = |d: &Vec<usize>| -> usize {
        d.iter()
            .zip(sizes)
            .map(|(&k, &s)| (2 * k).abs_diff(s))
            .sum()
    };
    out.sort_by_key(dev);
    out.truncate(cap);
    out
}

/// Builds `X` from the leading `n` Schur vectors; `None` if the graph
/// representation is too ill-conditioned.
fn graph_solution(sf: &SchurForm, n: usize) -> Option<(CMatrix, f64)> {
    let u = sf.q.columns(0, n);
    let u1 = u.top_rows(n);
    let u2 = u.bottom_rows(n);
    let sv = singular_values(&u1);
    let (smax, smin) = (sv[0], sv[n - 1]);
    if smin == 0.0 || smax / smin > MAX_COND_U1 {
        return None;
    }
    let x = (&u2 * &inverse(&u1).ok()?).scale(-I);
    let defect = x.dist(&x.adjoint());
    Some((x.hermitian_part(), defect))
}

/// Solves the Riccati problem by selecting an `n`-dimensional invariant
/// subspace of the Hamiltonian in ordered Schur form.
///
/// Non-real eigenvalues in the lower half-plane are always selected. Real
/// eigenvalue clusters are split between the two halves, trying the even
/// split first and then other distributions, up to [`MAX_CANDIDATES`]
/// subspaces. `tol` is the relative residual tolerance.
pub fn solve(p: &RiccatiProblem, tol: f64) -> Result<RiccatiSolution> {
    let n = p.dim();
    if n == 0 {
        return Ok(RiccatiSolution {
            x: CMatrix::zeros(0, 0),
            alpha: CMatrix::zeros(0, 0),
            residual: 0.0,
            selected_spectrum: vec![],
            definiteness: Definiteness::PositiveDefinite,
            hermitian_defect: 0.0,
        });
    }
    let k = hamiltonian(p);
    let k_norm = k.norm_fro();
    let sf = schur(&k)?;
    let ev = sf.eigenvalues();
    let eps_spec = EPS_SPEC * k_norm;

    let mut tried = 0usize;
    let mut seen_masks: Vec<Vec<bool>> = Vec::new();
    let mut saw_real = false;
    let mut saw_odd = false;
    for radius in CLUSTER_RADII {
        let cl = clusters(&ev, radius * k_norm, eps_spec);
        let n_stable: usize = cl.iter().filter(|c| c.side == Side::Stable).map(|c| c.members.len()).sum();
        let real: Vec<&Cluster> = cl.iter().filter(|c| c.side == Side::Real).collect();
        if n_stable > n {
            continue;
        }
        if !real.is_empty() {
            saw_real = true;
        }
        if real.iter().any(|c| c.members.len() % 2 == 1) {
            saw_odd = true;
            continue;
        }
        let sizes: Vec<usize> = real.iter().map(|c| c.members.len()).collect();
        for dist in distributions(&sizes, n - n_stable, MAX_CANDIDATES) {
            if tried >= MAX_CANDIDATES {
                break;
            }
            let mut mask = vec![false; 2 * n];
            for c in cl.iter().filter(|c| c.side == Side::Stable) {
                for &i in &c.members {
                    mask[i] = true;
                }
            }
            for (c, &take) in real.iter().zip(&dist) {
                for &i in &c.members[..take] {
                    mask[i] = true;
                }
            }
            if seen_masks.contains(&mask) {
                continue;
            }
            seen_masks.push(mask.clone());
            tried += 1;
            let Ok(ordered) = reorder_schur_mask(&sf, &mask) else {
                continue;
            };
            let Some((x, defect)) = graph_solution(&ordered, n) else {
                continue;
            };
            let diag = verify(p, &x, tol);
            if diag.passes() {
                return Ok(RiccatiSolution {
                    alpha: p.closed_loop(&x),
                    residual: diag.residual,
                    selected_spectrum: ordered.eigenvalues()[..n].to_vec(),
                    definiteness: diag.definiteness,
                    hermitian_defect: defect,
                    x,
                });
            }
        }
    }
    if saw_odd && tried == 0 {
        return Err(Error::NotContractive(
            "Hamiltonian has a real eigenvalue cluster of odd size".into(),
        ));
    }
    if saw_real {
        return Err(Error::RealSpectrumUnresolved { candidates: tried });
    }
    Err(Error::NotContractive(
        "no invariant subspace yields a verifiable Hermitian solution".into(),
    ))
}
