use serde::{Deserialize, Serialize};

use super::csr::CsrMatrix;
use crate::error::{Error, Result};
use crate::trial::WedgeConfig;

/// Minimum number of cells across the half-width.
pub const MIN_CELLS: usize = 64;
/// Minimum number of line-quadrature samples on each ray.
pub const MIN_RAY_SAMPLES: usize = 8;
/// Minimum box half-width in units of the decay length `1/α`.
pub const MIN_BOX_DECAY_LENGTHS: f64 = 8.0;

/// Uniform grid on `[-L, L]²` with spacing `L / cells` and Dirichlet walls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    half_width: f64,
    cells: usize,
    spacing: f64,
}

impl GridSpec {
    pub fn new(half_width: f64, cells: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::domain(
                "half_width",
                format!("must be positive and finite, got {half_width}"),
            ));
        }
        if cells < MIN_CELLS {
            return Err(Error::domain(
                "cells",
                format!("need at least {MIN_CELLS} cells per half-width, got {cells}"),
            ));
        }
        Ok(Self {
            half_width,
            cells,
            spacing: half_width / cells as f64,
        })
    }

    /// Grid from a half-width and a target spacing; `L/h` must be an integer.
    pub fn from_spacing(half_width: f64, spacing: f64) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::domain(
                "spacing",
                format!("must be positive and finite, got {spacing}"),
            ));
        }
        let ratio = half_width / spacing;
        let cells = ratio.round();
        if (ratio - cells).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::domain(
                "spacing",
                format!("half-width / spacing = {ratio} is not an integer"),
            ));
        }
        Self::new(half_width, cells as usize)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Interior nodes per axis.
    pub fn nodes_per_axis(&self) -> usize {
        2 * self.cells - 1
    }

    pub fn unknowns(&self) -> usize {
        self.nodes_per_axis().pow(2)
    }

    /// Coordinate of interior node `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 1.0) * self.spacing
    }

    /// Same box, spacing halved.
    pub fn refined(&self) -> Self {
        Self {
            half_width: self.half_width,
            cells: 2 * self.cells,
            spacing: self.half_width / (2 * self.cells) as f64,
        }
    }

    pub(crate) fn check_box(&self, alpha: f64) -> Result<()> {
        if alpha > 0.0 && self.half_width * alpha < MIN_BOX_DECAY_LENGTHS * (1.0 - 1e-12) {
            return Err(Error::domain(
                "half_width",
                format!(
                    "box half-width {} is below {MIN_BOX_DECAY_LENGTHS}/alpha = {}",
                    self.half_width,
                    MIN_BOX_DECAY_LENGTHS / alpha
                ),
            ));
        }
        Ok(())
    }
}

/// Index permutation of the reflection `x₂ → -x₂`.
pub fn reflection_permutation(grid: &GridSpec) -> Vec<usize> {
    let m = grid.nodes_per_axis();
    (0..m * m)
        .map(|r| {
            let (i, j) = (r % m, r / m);
            (m - 1 - j) * m + i
        })
        .collect()
}

/// Discretized form for the configured wedge. The straight line is the
/// vertical axis.
pub fn assemble(cfg: &WedgeConfig, grid: &GridSpec) -> Result<CsrMatrix> {
    grid.check_box(cfg.alpha())?;
    let dir = if cfg.is_straight_line() {
        (0.0, 1.0)
    } else {
        (cfg.theta().cos(), cfg.theta().sin())
    };
    assemble_rays(dir, cfg.alpha(), grid)
}

/// Same as [`assemble`] with an arbitrary coupling `alpha ≥ 0` and no box
/// check, so that `alpha = 0` yields the bare Dirichlet Laplacian.
pub fn assemble_coupling(theta: f64, alpha: f64, grid: &GridSpec) -> Result<CsrMatrix> {
    if !(theta > 0.0 && theta <= std::f64::consts::FRAC_PI_2) {
        return Err(Error::domain("theta", format!("must lie in (0, pi/2], got {theta}")));
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::domain(
            "alpha",
            format!("must be finite and non-negative, got {alpha}"),
        ));
    }
    let dir = if theta == std::f64::consts::FRAC_PI_2 {
        (0.0, 1.0)
    } else {
        (theta.cos(), theta.sin())
    };
    assemble_rays(dir, alpha, grid)
}

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < 1e-12 {
        r
    } else {
        x
    }
}

/// Line-term entries `(row, col, w·s_r·s_c)` of the upper ray, merged and
/// sorted by `(row, col)`.
fn upper_ray_entries(dir: (f64, f64), grid: &GridSpec) -> Result<Vec<(usize, usize, f64)>> {
    let (c, s) = dir;
    let l = grid.half_width();
    let h = grid.spacing();
    let m = grid.nodes_per_axis() as isize;
    let t_max = l / c.abs().max(s);
    let k_max = (t_max / h + 1e-9).floor() as usize;
    if k_max + 1 < MIN_RAY_SAMPLES {
        return Err(Error::domain(
            "spacing",
            format!("grid too coarse: {} samples per ray, need {MIN_RAY_SAMPLES}", k_max + 1),
        ));
    }
    let mut raw = Vec::with_capacity(16 * (k_max + 1));
    for k in 0..=k_max {
        let t = k as f64 * h;
        let w = if k == 0 || k == k_max { 0.5 * h } else { h };
        // fractional node coordinates, node i sits at -L + (i+1) h
        let fx = snap((t * c + l) / h - 1.0);
        let fy = snap((t * s + l) / h - 1.0);
        let (ix, iy) = (fx.floor(), fy.floor());
        let (tx, ty) = (fx - ix, fy - iy);
        let (ix, iy) = (ix as isize, iy as isize);
        let mut stencil = [(0usize, 0.0f64); 4];
        let mut len = 0;
        for (dx, wx) in [(0, 1.0 - tx), (1, tx)] {
            for (dy, wy) in [(0, 1.0 - ty), (1, ty)] {
                let (i, j) = (ix + dx, iy + dy);
                let weight = wx * wy;
                if weight == 0.0 || i < 0 || j < 0 || i >= m || j >= m {
                    continue;
                }
                stencil[len] = ((j * m + i) as usize, weight);
                len += 1;
            }
        }
        for &(r, sr) in &stencil[..len] {
            for &(q, sq) in &stencil[..len] {
                raw.push((r, q, w * (sr * sq)));
            }
        }
    }
    raw.sort_by_key(|&(r, q, _)| (r, q));
    Ok(merge_sorted(raw))
}

fn merge_sorted(v: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(v.len());
    for (r, q, x) in v {
        match out.last_mut() {
            Some(last) if last.0 == r && last.1 == q => last.2 += x,
            _ => out.push((r, q, x)),
        }
    }
    out
}

fn assemble_rays(dir: (f64, f64), alpha: f64, grid: &GridSpec) -> Result<CsrMatrix> {
    let m = grid.nodes_per_axis();
    let n = m * m;
    let h = grid.spacing();
    let inv_h2 = 1.0 / (h * h);

    let coupling = if alpha > 0.0 {
        let upper = upper_ray_entries(dir, grid)?;
        let perm = reflection_permutation(grid);
        // Each key gets at most one upper and one mirrored term, so the
        // two-term sums are exactly invariant under the reflection.
        let mut all = Vec::with_capacity(2 * upper.len());
        all.extend(upper.iter().copied());
        all.extend(upper.iter().map(|&(r, q, x)| (perm[r], perm[q], x)));
        all.sort_by_key(|&(r, q, _)| (r, q));
        merge_sorted(all)
    } else {
        Vec::new()
    };

    let mut indptr = Vec::with_capacity(n + 1);
    let mut indices: Vec<u32> = Vec::with_capacity(5 * n + coupling.len());
    let mut values = Vec::with_capacity(5 * n + coupling.len());
    indptr.push(0);
    let scale = alpha * inv_h2;
    let mut cp = 0;
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(16);
    for r in 0..n {
        let (i, j) = (r % m, r / m);
        row.clear();
        if j > 0 {
            row.push((r - m, -inv_h2));
        }
        if i > 0 {
            row.push((r - 1, -inv_h2));
        }
        row.push((r, 4.0 * inv_h2));
        if i + 1 < m {
            row.push((r + 1, -inv_h2));
        }
        if j + 1 < m {
            row.push((r + m, -inv_h2));
        }
        let start = cp;
        while cp < coupling.len() && coupling[cp].0 == r {
            cp += 1;
        }
        if cp > start {
            for &(_, q, x) in &coupling[start..cp] {
                match row.iter_mut().find(|e| e.0 == q) {
                    Some(e) => e.1 -= scale * x,
                    None => row.push((q, -scale * x)),
                }
            }
            row.sort_by_key(|e| e.0);
        }
        for &(q, x) in &row {
            indices.push(q as u32);
            values.push(x);
        }
        indptr.push(indices.len());
    }
    Ok(CsrMatrix::from_sorted_rows(n, indptr, indices, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(12.0, 63).is_err());
        assert!(GridSpec::new(-1.0, 64).is_err());
        assert!(GridSpec::from_spacing(12.0, 0.11).is_err());
        let g = GridSpec::from_spacing(12.0, 0.125).unwrap();
        assert_eq!(g.cells(), 96);
        assert_eq!(g.nodes_per_axis(), 191);
        assert_eq!(g.coord(95), 0.0);
        assert!((g.coord(0) + 12.0 - 0.125).abs() < 1e-15);
    }

    #[test]
    fn box_must_cover_decay_lengths() {
        let g = GridSpec::new(7.9, 64).unwrap();
        assert!(assemble(&WedgeConfig::new(FRAC_PI_4, 1.0).unwrap(), &g).is_err());
        assert!(assemble(&WedgeConfig::new(FRAC_PI_4, 2.0).unwrap(), &g).is_ok());
    }

    #[test]
    fn exact_transpose_symmetry() {
        let g = GridSpec::new(8.0, 64).unwrap();
        for theta in [0.3, FRAC_PI_4, 1.0, 1.3, FRAC_PI_2] {
            let a = assemble_coupling(theta, 1.0, &g).unwrap();
            assert!(a.is_symmetric(), "theta={theta}");
        }
    }

    #[test]
    fn commutes_with_reflection() {
        let g = GridSpec::new(8.0, 32 * 2).unwrap();
        let perm = reflection_permutation(&g);
        for theta in [0.37, FRAC_PI_4, 1.2] {
            let a = assemble_coupling(theta, 1.0, &g).unwrap();
            for r in 0..a.dim() {
                for (c, v) in a.row(r) {
                    assert_eq!(a.get(perm[r], perm[c]), v, "theta={theta} r={r} c={c}");
                }
            }
            assert_eq!(a.nnz(), (0..a.dim()).map(|r| a.row(perm[r]).count()).sum::<usize>());
        }
    }

    #[test]
    fn zero_coupling_is_bare_laplacian() {
        let g = GridSpec::new(4.0, 64).unwrap();
        let a = assemble_coupling(FRAC_PI_4, 0.0, &g).unwrap();
        let m = g.nodes_per_axis();
        assert_eq!(a.nnz(), 5 * m * m - 4 * m);
        let h2 = g.spacing().powi(2);
        assert_eq!(a.get(0, 0), 4.0 / h2);
        assert_eq!(a.get(0, 1), -1.0 / h2);
    }

    #[test]
    fn aligned_line_is_diagonal_shift() {
        // Samples of the vertical line sit on nodes, so the line term only
        // touches the diagonal, with weight h per node.
        let g = GridSpec::new(8.0, 64).unwrap();
        let a = assemble_coupling(FRAC_PI_2, 1.0, &g).unwrap();
        let b = assemble_coupling(FRAC_PI_2, 0.0, &g).unwrap();
        let m = g.nodes_per_axis();
        let h = g.spacing();
        let centre = g.cells() - 1;
        for j in 0..m {
            let r = j * m + centre;
            assert!((b.get(r, r) - a.get(r, r) - 1.0 / h).abs() < 1e-9);
        }
        assert_eq!(a.nnz(), b.nnz());
    }

    #[test]
    fn line_term_integrates_length() {
        // Applying the line term to the all-ones vector and summing gives
        // the total quadrature weight, which is the ray length up to the
        // trapezoid tail and the dropped wall samples.
        let g = GridSpec::new(8.0, 64).unwrap();
        for theta in [0.4, FRAC_PI_4, 1.1] {
            let a = assemble_coupling(theta, 1.0, &g).unwrap();
            let b = assemble_coupling(theta, 0.0, &g).unwrap();
            let ones = vec![1.0; a.dim()];
            let diff: f64 = a.matvec(&ones).iter().zip(b.matvec(&ones)).map(|(x, y)| y - x).sum();
            let length = diff * g.spacing().powi(2);
            let expected = 2.0 * 8.0 / theta.cos().max(theta.sin());
            assert!(
                (length - expected).abs() < 4.0 * g.spacing(),
                "theta={theta} {length} {expected}"
            );
        }
    }

    #[test]
    fn too_coarse_for_rays() {
        // Force a ray with few samples via a tiny box relative to spacing is
        // impossible under MIN_CELLS, so the guard only fires through the
        // internal helper.
        let g = GridSpec::new(1.0, 64).unwrap();
        assert!(upper_ray_entries((0.0, 1.0), &g).is_ok());
    }
}
