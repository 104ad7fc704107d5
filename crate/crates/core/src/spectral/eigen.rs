//! Lowest eigenpair of the assembled operator.
//!
//! Locally optimal block preconditioned conjugate gradient with block size
//! one. The preconditioner is the exact inverse of the shifted Dirichlet
//! Laplacian `-Δ_h - σ`, computed with fast sine transforms, so the iteration
//! count is essentially independent of the grid.

use serde::{Deserialize, Serialize};

use super::assemble::GridSpec;
use super::csr::{axpy, combine2, dot, norm, scale, CsrMatrix};
use super::dst::ShiftedLaplacianSolver;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Converged once `||Av - λv|| <= tol |λ|` with `||v|| = 1`.
    pub tol: f64,
    pub max_iterations: usize,
    /// Preconditioner shift; must lie below the spectrum.
    pub shift: f64,
    /// Each failed shift is doubled away from zero up to this many times.
    pub max_shift_retries: u32,
    /// Products `Ax`, `Ap` are recomputed from scratch at this period.
    pub refresh_every: usize,
}

impl EigenOptions {
    /// Defaults with the shift `-2 α²`.
    pub fn for_alpha(alpha: f64) -> Self {
        Self {
            tol: 1e-8,
            max_iterations: 5000,
            shift: -2.0 * alpha * alpha,
            max_shift_retries: 4,
            refresh_every: 16,
        }
    }
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self::for_alpha(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// Unit Euclidean norm, positive sum.
    pub vector: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    /// Shift actually used by the preconditioner.
    pub shift: f64,
}

enum Outcome {
    Converged(EigenPair),
    ShiftTooHigh { ritz: f64 },
}

/// Lowest eigenpair starting from `start`, which must have a nonzero
/// component along the ground state.
pub fn lowest_eigenpair(a: &CsrMatrix, grid: &GridSpec, start: &[f64], opts: &EigenOptions) -> Result<EigenPair> {
    if a.dim() != grid.unknowns() || start.len() != a.dim() {
        return Err(Error::domain(
            "operator",
            format!(
                "dimension {} does not match grid {} or start {}",
                a.dim(),
                grid.unknowns(),
                start.len()
            ),
        ));
    }
    if !(opts.tol > 0.0 && opts.shift < 0.0) {
        return Err(Error::domain("eigen options", "need tol > 0 and a negative shift"));
    }
    let mut shift = opts.shift;
    for _ in 0..=opts.max_shift_retries {
        match lobpcg(a, grid, start, shift, opts)? {
            Outcome::Converged(pair) => return Ok(pair),
            Outcome::ShiftTooHigh { ritz } => shift = (2.0 * shift).min(ritz - shift.abs()),
        }
    }
    Err(Error::Eigen(format!(
        "shifted matrix stayed indefinite after {} shift decreases (last shift {shift})",
        opts.max_shift_retries
    )))
}

/// Lowest eigenpair from a smooth positive start vector.
pub fn lowest_eigenvalue(a: &CsrMatrix, grid: &GridSpec, opts: &EigenOptions) -> Result<EigenPair> {
    let m = grid.nodes_per_axis();
    let w = std::f64::consts::PI / (m + 1) as f64;
    let start: Vec<f64> = (0..m * m)
        .map(|r| ((r % m + 1) as f64 * w).sin() * ((r / m + 1) as f64 * w).sin())
        .collect();
    lowest_eigenpair(a, grid, &start, opts)
}

fn lobpcg(a: &CsrMatrix, grid: &GridSpec, start: &[f64], shift: f64, opts: &EigenOptions) -> Result<Outcome> {
    let n = a.dim();
    let precond = ShiftedLaplacianSolver::new(grid.nodes_per_axis(), grid.spacing(), shift);
    let mut work = Vec::new();

    let mut x = start.to_vec();
    let nx = norm(&x);
    if !(nx > 0.0 && nx.is_finite()) {
        return Err(Error::domain("start", "start vector must be finite and nonzero"));
    }
    scale(1.0 / nx, &mut x);
    let mut ax = a.matvec(&x);
    let mut w = vec![0.0; n];
    let mut aw = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut have_p = false;
    let mut tmp = vec![0.0; n];
    let mut tmp_a = vec![0.0; n];

    for it in 1..=opts.max_iterations {
        if it % opts.refresh_every == 0 {
            a.matvec_into(&x, &mut ax);
            if have_p {
                a.matvec_into(&p, &mut ap);
            }
        }
        let mut lambda = dot(&x, &ax);
        combine2(&mut w, 1.0, &ax, -lambda, &x);
        let mut rn = norm(&w);
        if rn <= opts.tol * lambda.abs() {
            a.matvec_into(&x, &mut ax);
            lambda = dot(&x, &ax);
            combine2(&mut w, 1.0, &ax, -lambda, &x);
            rn = norm(&w);
            if rn <= opts.tol * lambda.abs() {
                let sign = if x.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
                scale(sign, &mut x);
                return Ok(Outcome::Converged(EigenPair {
                    value: lambda,
                    vector: x,
                    residual_norm: rn,
                    iterations: it,
                    shift,
                }));
            }
        }
        if !lambda.is_finite() {
            return Err(Error::Eigen(format!("non-finite Rayleigh quotient at iteration {it}")));
        }
        if lambda <= shift {
            return Ok(Outcome::ShiftTooHigh { ritz: lambda });
        }

        precond.apply(&mut w, &mut work);

        // Orthonormal basis [x, p, w], tracking A-images without extra products for p.
        if have_p {
            for _ in 0..2 {
                let c = dot(&x, &p);
                axpy(-c, &x, &mut p);
                axpy(-c, &ax, &mut ap);
            }
            let np = norm(&p);
            if np > 1e-14 {
                scale(1.0 / np, &mut p);
                scale(1.0 / np, &mut ap);
            } else {
                have_p = false;
            }
        }
        for _ in 0..2 {
            let c = dot(&x, &w);
            axpy(-c, &x, &mut w);
            if have_p {
                let c = dot(&p, &w);
                axpy(-c, &p, &mut w);
            }
        }
        let nw = norm(&w);
        if !(nw > 1e-300) {
            return Err(Error::Eigen(format!(
                "preconditioned residual vanished at iteration {it}"
            )));
        }
        scale(1.0 / nw, &mut w);
        a.matvec_into(&w, &mut aw);

        let dim = if have_p { 3 } else { 2 };
        let basis: [&[f64]; 3] = [&x, &w, &p];
        let images: [&[f64]; 3] = [&ax, &aw, &ap];
        let mut g = [[0.0; 3]; 3];
        for i in 0..dim {
            for j in i..dim {
                let v = 0.5 * (dot(basis[i], images[j]) + dot(basis[j], images[i]));
                g[i][j] = v;
                g[j][i] = v;
            }
        }
        let y = lowest_ritz_vector(&g, dim);

        // p <- y1 w + y2 p, x <- y0 x + p
        let y2 = if have_p { y[2] } else { 0.0 };
        combine2(&mut tmp, y[1], &w, y2, &p);
        combine2(&mut tmp_a, y[1], &aw, y2, &ap);
        std::mem::swap(&mut p, &mut tmp);
        std::mem::swap(&mut ap, &mut tmp_a);
        scale(y[0], &mut x);
        axpy(1.0, &p, &mut x);
        scale(y[0], &mut ax);
        axpy(1.0, &ap, &mut ax);
        let nx = norm(&x);
        scale(1.0 / nx, &mut x);
        scale(1.0 / nx, &mut ax);
        let np = norm(&p);
        if np > 0.0 {
            scale(1.0 / np, &mut p);
            scale(1.0 / np, &mut ap);
            have_p = true;
        }
    }
    Err(Error::Eigen(format!(
        "no convergence within {} iterations (tol {:e})",
        opts.max_iterations, opts.tol
    )))
}

/// Unit eigenvector of the smallest eigenvalue of the leading `dim × dim`
/// block, by cyclic Jacobi rotations.
fn lowest_ritz_vector(g: &[[f64; 3]; 3], dim: usize) -> [f64; 3] {
    let (vals, vecs) = jacobi_eigen(g, dim);
    let k = (0..dim).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap_or(0);
    let mut y = [0.0; 3];
    for i in 0..dim {
        y[i] = vecs[i][k];
    }
    y
}

#[allow(clippy::needless_range_loop)]
fn jacobi_eigen(g: &[[f64; 3]; 3], dim: usize) -> ([f64; 3], [[f64; 3]; 3]) {
    let mut a = *g;
    let mut v = [[0.0; 3]; 3];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _ in 0..64 {
        let off: f64 = (0..dim)
            .flat_map(|i| (0..dim).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let diag: f64 = (0..dim).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-32 * diag || off == 0.0 {
            break;
        }
        for p in 0..dim {
            for q in p + 1..dim {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                for k in 0..dim {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut().take(dim) {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    ([a[0][0], a[1][1], a[2][2]], v)
}

/// Lowest eigenvalue of the 1D δ-well `-u'' - α δ(x) u` discretized on
/// `[-L, L]` with `2·cells - 1` interior nodes; the point interaction sits
/// on the centre node with weight `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaWell1d {
    pub alpha: f64,
    pub half_width: f64,
    pub cells: usize,
    pub spacing: f64,
    pub eigenvalue: f64,
}

pub fn delta_well_1d(alpha: f64, half_width: f64, cells: usize) -> Result<DeltaWell1d> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::domain(
            "alpha",
            format!("must be positive and finite, got {alpha}"),
        ));
    }
    if !(half_width.is_finite() && half_width > 0.0) || cells < 2 {
        return Err(Error::domain(
            "half_width",
            "need a positive half-width and at least 2 cells",
        ));
    }
    let h = half_width / cells as f64;
    let n = 2 * cells - 1;
    let centre = cells - 1;
    let inv_h2 = 1.0 / (h * h);
    let diag = |i: usize| 2.0 * inv_h2 - if i == centre { alpha / h } else { 0.0 };
    let off2 = inv_h2 * inv_h2;
    // number of eigenvalues below x, by the LDLᵀ inertia recurrence
    let count_below = |x: f64| -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..n {
            q = diag(i) - x - if i == 0 { 0.0 } else { off2 / q };
            if q == 0.0 {
                q = -f64::EPSILON * inv_h2;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    let mut lo = -alpha / h - 1.0;
    let mut hi = 4.0 * inv_h2;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(DeltaWell1d {
        alpha,
        half_width,
        cells,
        spacing: h,
        eigenvalue: 0.5 * (lo + hi),
    })
}

/// Lowest eigenvalue of the same stencil on the infinite lattice:
/// `ψ_j = e^{-κ h |j|}` with `2 sinh(κh) = αh`.
pub fn delta_well_1d_exact(alpha: f64, spacing: f64) -> f64 {
    let kh = (0.5 * alpha * spacing).asinh();
    let s = (0.5 * kh).sinh();
    -4.0 * s * s / (spacing * spacing)
}
