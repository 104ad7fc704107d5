//! Rayleigh quotients of the cut-off trial family.
//!
//! For `u = exp(-alpha|x1|/2) h(x2)` on the rotated half-plane the form splits as
//! `Q(u) = -alpha^2/4 ||u||^2 + R(h)` with
//!
//! ```text
//! ||u||^2 = int h^2 F(x2 tan theta) dx2
//! R(h)    = int h' (h' F(x2 tan theta) - h F'(x2 tan theta) cot theta) dx2
//! ```
//!
//! so everything reduces to one-dimensional integrals over the support
//! `[-2n, 2n]` of `h_n = g_rho chi(./n)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breakpoints, Tolerance};
use crate::trial::{bound_constants, check_rho_range, f_prime, ln_f, Cutoff, TrialParams, WedgeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighReport {
    pub theta: f64,
    pub alpha: f64,
    /// `R(h_n)`.
    pub r_value: f64,
    /// `||u||^2` over the half-plane domain.
    pub norm_sq: f64,
    /// `Q(u) / ||u||^2 = -alpha^2/4 + r_value / norm_sq`.
    pub quotient: f64,
    /// `-alpha^2/4 - quotient`; positive exactly when `r_value < 0`.
    pub margin: f64,
    pub params: TrialParams,
}

/// Pointwise values of `h_n`, `h_n'` and the profile factors at `x2`.
struct Sample {
    h: f64,
    dh: f64,
    f: f64,
    df: f64,
}

fn sample(x2: f64, cfg: &WedgeConfig, p: &TrialParams) -> Sample {
    let alpha = cfg.alpha();
    let tan = cfg.tan_theta();
    let t = x2 * tan;
    let lnf = ln_f(t, alpha);
    let s = x2 / p.n;
    let chi = p.cutoff.value(s);
    let dchi = p.cutoff.derivative(s) / p.n;
    let g = (p.rho * lnf).exp();
    let dg = p.rho * tan * ((p.rho - 1.0) * lnf - alpha * t.abs()).exp();
    Sample {
        h: g * chi,
        dh: dg * chi + g * dchi,
        f: lnf.exp(),
        df: f_prime(t, alpha),
    }
}

/// Cutoff kinks plus a geometric ladder of decay lengths, so the adaptive
/// rule cannot step over the peak near the origin on long supports.
fn support_breaks(cfg: &WedgeConfig, n: f64) -> Vec<f64> {
    let [a, b, c, d] = Cutoff::BREAKPOINTS;
    let mut v = vec![a * n, b * n, 0.0, c * n, d * n];
    let mut t = 1.0 / (cfg.alpha() * cfg.tan_theta());
    while t < n {
        v.push(t);
        v.push(-t);
        t *= 4.0;
    }
    v.sort_by(|x, y| x.total_cmp(y));
    v
}

/// `||u||^2 = int_{-2n}^{2n} h_n^2 F(x2 tan theta) dx2`.
pub fn norm_sq(cfg: &WedgeConfig, params: &TrialParams) -> Result<f64> {
    norm_sq_with(cfg, params, Tolerance::default())
}

pub fn norm_sq_with(cfg: &WedgeConfig, params: &TrialParams, tol: Tolerance) -> Result<f64> {
    params.check(cfg)?;
    let n = params.n;
    let q = integrate_with_breakpoints(
        |x| {
            let s = sample(x, cfg, params);
            s.h * s.h * s.f
        },
        -2.0 * n,
        2.0 * n,
        &support_breaks(cfg, n),
        tol,
    )?;
    Ok(q.value)
}

/// `R(h_n)` with the analytic piecewise derivative of `h_n`.
pub fn r_functional(cfg: &WedgeConfig, params: &TrialParams) -> Result<f64> {
    r_functional_with(cfg, params, Tolerance::default())
}

pub fn r_functional_with(cfg: &WedgeConfig, params: &TrialParams, tol: Tolerance) -> Result<f64> {
    params.check(cfg)?;
    let n = params.n;
    let cot = 1.0 / cfg.tan_theta();
    let q = integrate_with_breakpoints(
        |x| {
            let s = sample(x, cfg, params);
            s.dh * (s.dh * s.f - s.h * s.df * cot)
        },
        -2.0 * n,
        2.0 * n,
        &support_breaks(cfg, n),
        tol,
    )?;
    Ok(q.value)
}

pub fn rayleigh(cfg: &WedgeConfig, params: &TrialParams) -> Result<RayleighReport> {
    let r_value = r_functional(cfg, params)?;
    let norm_sq = norm_sq(cfg, params)?;
    Ok(assemble_report(cfg, params, r_value, norm_sq))
}

fn assemble_report(cfg: &WedgeConfig, params: &TrialParams, r_value: f64, norm_sq: f64) -> RayleighReport {
    let alpha = cfg.alpha();
    let ratio = r_value / norm_sq;
    RayleighReport {
        theta: cfg.theta(),
        alpha,
        r_value,
        norm_sq,
        quotient: -0.25 * alpha * alpha + ratio,
        margin: -ratio,
        params: *params,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExistenceWitness {
    pub n_found: f64,
    pub attempts: u32,
    pub report: RayleighReport,
}

/// Doubles `n` from `1/(alpha tan theta)` until `R(h_n) < 0`.
pub fn verify_thm1(cfg: &WedgeConfig, rho: f64) -> Result<ExistenceWitness> {
    check_rho_range(cfg, rho)?;
    let n0 = 1.0 / (cfg.alpha() * cfg.tan_theta());
    for k in 0..=60 {
        let n = n0 * 2f64.powi(k);
        let params = TrialParams::new(cfg, rho, n)?;
        let report = rayleigh(cfg, &params)?;
        if report.r_value < 0.0 {
            return Ok(ExistenceWitness {
                n_found: n,
                attempts: k as u32 + 1,
                report,
            });
        }
    }
    Err(Error::SearchExhausted(format!(
        "no n <= 2^60 / (alpha tan theta) gave R(h_n) < 0 at theta = {}, alpha = {}, rho = {rho}",
        cfg.theta(),
        cfg.alpha()
    )))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    pub max_sweeps: usize,
    /// Golden-section stops once the bracket is below this fraction of the current coordinate.
    pub rel_step: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 30,
            rel_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizedBound {
    pub start: RayleighReport,
    pub best: RayleighReport,
    pub sweeps: usize,
    pub evaluations: usize,
}

impl OptimizedBound {
    pub fn best_params(&self) -> TrialParams {
        self.best.params
    }
}

/// Largest exponent admitted by the search; keeps `F^(2 rho + 1)` far from overflow.
const RHO_CAP: f64 = 40.0;

/// Coordinate descent over `(rho, ln n)` from the explicit-bound parameters.
pub fn optimize_bound(cfg: &WedgeConfig) -> Result<OptimizedBound> {
    optimize_bound_with(cfg, OptimizeOptions::default())
}

pub fn optimize_bound_with(cfg: &WedgeConfig, opts: OptimizeOptions) -> Result<OptimizedBound> {
    let constants = bound_constants(cfg)?;
    let scale = 1.0 / (cfg.alpha() * cfg.tan_theta());
    let rho_hi = cfg.cot_sq().min(RHO_CAP) * (1.0 - 1e-9);
    let rho_lo = rho_hi * 1e-6;
    let ln_n_lo = (1e-2 * scale).ln();
    let ln_n_hi = (1e4 * scale).max(4.0 * constants.n_opt).ln();

    let mut evaluations = 0usize;
    let mut eval = |rho: f64, ln_n: f64| -> Result<RayleighReport> {
        evaluations += 1;
        let params = TrialParams::new(cfg, rho, ln_n.exp())?;
        rayleigh(cfg, &params)
    };

    let start = eval(constants.rho, constants.n_opt.ln())?;
    let mut best = start;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let before = best;
        let ln_n = best.params.n.ln();

        let rho_cand = golden_min(rho_lo, rho_hi, opts.rel_step * best.params.rho, |rho| {
            eval(rho, ln_n).map(|r| r.quotient)
        })?;
        let cand = eval(rho_cand, ln_n)?;
        if cand.quotient < best.quotient {
            best = cand;
        }

        let rho = best.params.rho;
        let ln_cand = golden_min(ln_n_lo, ln_n_hi, opts.rel_step, |ln_n| {
            eval(rho, ln_n).map(|r| r.quotient)
        })?;
        let cand = eval(rho, ln_cand)?;
        if cand.quotient < best.quotient {
            best = cand;
        }

        let d_rho = (best.params.rho - before.params.rho).abs() / before.params.rho;
        let d_n = (best.params.n - before.params.n).abs() / before.params.n;
        if d_rho < opts.rel_step && d_n < opts.rel_step {
            break;
        }
    }

    Ok(OptimizedBound {
        start,
        best,
        sweeps,
        evaluations,
    })
}

/// Golden-section search for a minimiser of `f` on `[lo, hi]`.
fn golden_min<F>(mut lo: f64, mut hi: f64, width_tol: f64, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let width_tol = width_tol.max(4.0 * f64::EPSILON * hi.abs().max(lo.abs()));
    while hi - lo > width_tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { x1 } else { x2 })
}
