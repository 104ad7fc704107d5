//! Closed-form pieces of the trial-function construction.
//!
//! The problem lives in the rotated half-plane picture: the interaction sits on
//! the positive `x2` semi-axis and the domain is `{x1 < x2 tan(theta)}`. Every
//! non-trivial factor of the trial family is a power of the one-sided profile
//! `F(t) = int_{-inf}^t exp(-alpha |s|) ds`, so most helpers here work with
//! `ln F` to stay finite deep in the exponential tails.

use std::f64::consts::{FRAC_PI_2, LN_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-angle `theta` of the broken line and coupling `alpha`.
///
/// The two rays leave the origin at angles `+theta` and `-theta` from the
/// bisector. `theta = pi/2` is the straight line and can only be built through
/// [`WedgeConfig::straight_line`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WedgeConfig {
    theta: f64,
    alpha: f64,
}

impl WedgeConfig {
    pub fn new(theta: f64, alpha: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0 && theta < FRAC_PI_2) {
            return Err(Error::domain("theta", format!("{theta} is not in (0, pi/2)")));
        }
        check_alpha(alpha)?;
        Ok(Self { theta, alpha })
    }

    /// The degenerate configuration `theta = pi/2`, where the two rays form a line.
    pub fn straight_line(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            theta: FRAC_PI_2,
            alpha,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_straight_line(&self) -> bool {
        self.theta == FRAC_PI_2
    }

    pub fn tan_theta(&self) -> f64 {
        self.theta.tan()
    }

    /// Upper end of the admissible exponent range.
    pub fn cot_sq(&self) -> f64 {
        if self.is_straight_line() {
            return 0.0;
        }
        let t = self.theta.tan();
        1.0 / (t * t)
    }

    /// Same angle, coupling multiplied by `s`.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            theta: self.theta,
            alpha,
        })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::domain("alpha", format!("{alpha} is not positive")))
    }
}

/// Shape of the cutoff `chi`: equal to 1 on `[-1, 1]`, 0 outside `(-2, 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cutoff {
    /// `2 - |t|` on the transition, Lipschitz constant 1.
    #[default]
    Linear,
    /// `1 - 3s^2 + 2s^3` with `s = |t| - 1`; continuously differentiable, Lipschitz constant 3/2.
    Smoothstep,
}

impl Cutoff {
    pub fn value(self, t: f64) -> f64 {
        let a = t.abs();
        if a <= 1.0 {
            1.0
        } else if a >= 2.0 {
            0.0
        } else {
            let s = a - 1.0;
            match self {
                Cutoff::Linear => 1.0 - s,
                Cutoff::Smoothstep => 1.0 - s * s * (3.0 - 2.0 * s),
            }
        }
    }

    /// Derivative away from the breakpoints `{-2, -1, 1, 2}`.
    pub fn derivative(self, t: f64) -> f64 {
        let a = t.abs();
        if a <= 1.0 || a >= 2.0 {
            return 0.0;
        }
        let s = a - 1.0;
        let d = match self {
            Cutoff::Linear => -1.0,
            Cutoff::Smoothstep => -6.0 * s * (1.0 - s),
        };
        d * t.signum()
    }

    pub fn lipschitz(self) -> f64 {
        match self {
            Cutoff::Linear => 1.0,
            Cutoff::Smoothstep => 1.5,
        }
    }

    /// Abscissae (in units of the cutoff scale) where the profile is not smooth.
    pub const BREAKPOINTS: [f64; 4] = [-2.0, -1.0, 1.0, 2.0];
}

/// The piecewise-linear plateau used in the explicit bound.
pub fn cutoff_chi(t: f64) -> f64 {
    Cutoff::Linear.value(t)
}

/// Parameters of the trial family `exp(-alpha|x1|/2) F(x2 tan theta)^rho chi(x2/n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialParams {
    pub rho: f64,
    pub n: f64,
    #[serde(default)]
    pub cutoff: Cutoff,
}

impl TrialParams {
    pub fn new(cfg: &WedgeConfig, rho: f64, n: f64) -> Result<Self> {
        let p = Self {
            rho,
            n,
            cutoff: Cutoff::Linear,
        };
        p.check(cfg)?;
        Ok(p)
    }

    pub fn with_cutoff(mut self, cutoff: Cutoff) -> Self {
        self.cutoff = cutoff;
        self
    }

    /// Parameters used for the explicit bound: `rho = cos^2 theta`, `n = 2b/a`.
    pub fn theorem_default(cfg: &WedgeConfig) -> Result<Self> {
        let report = bound_constants(cfg)?;
        Self::new(cfg, report.rho, report.n_opt)
    }

    pub fn check(&self, cfg: &WedgeConfig) -> Result<()> {
        check_rho_range(cfg, self.rho)?;
        if !(self.n.is_finite() && self.n > 0.0) {
            return Err(Error::domain("n", format!("{} is not positive", self.n)));
        }
        Ok(())
    }
}

pub(crate) fn check_rho_range(cfg: &WedgeConfig, rho: f64) -> Result<()> {
    let hi = cfg.cot_sq();
    if rho.is_finite() && rho > 0.0 && rho < hi {
        Ok(())
    } else {
        Err(Error::domain(
            "rho",
            format!("{rho} is not in (0, cot^2 theta) = (0, {hi})"),
        ))
    }
}

/// `F(t)` without input checks.
pub(crate) fn f_value(t: f64, alpha: f64) -> f64 {
    if t > 0.0 {
        (2.0 - (-alpha * t).exp()) / alpha
    } else if t < 0.0 {
        (alpha * t).exp() / alpha
    } else {
        1.0 / alpha
    }
}

/// `ln F(t)`, finite for every finite `t`.
pub(crate) fn ln_f(t: f64, alpha: f64) -> f64 {
    if t > 0.0 {
        (2.0 - (-alpha * t).exp()).ln() - alpha.ln()
    } else {
        alpha * t - alpha.ln()
    }
}

/// `F'(t) = exp(-alpha |t|)`.
pub(crate) fn f_prime(t: f64, alpha: f64) -> f64 {
    (-alpha * t.abs()).exp()
}

/// `2^x - 1`, accurate for small `x`.
pub(crate) fn pow2_m1(x: f64) -> f64 {
    (x * LN_2).exp_m1()
}

/// `F(t) = int_{-inf}^t exp(-alpha |s|) ds = (2/alpha) 1(t) - (1/alpha) exp(-alpha|t|) sgn(t)`.
///
/// Uses `sgn(0) = 0` and `1(0) = 1/2`, so `F(0) = 1/alpha` exactly.
pub fn profile_f(t: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if t.is_nan() {
        return Err(Error::domain("t", "NaN"));
    }
    Ok(f_value(t, alpha))
}

/// `g_rho(x2) = F(x2 tan theta)^rho`.
pub fn g_rho(x2: f64, cfg: &WedgeConfig, rho: f64) -> Result<f64> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::domain("rho", format!("{rho} is not positive")));
    }
    if x2.is_nan() {
        return Err(Error::domain("x2", "NaN"));
    }
    Ok(g_unchecked(x2, cfg, rho))
}

pub(crate) fn g_unchecked(x2: f64, cfg: &WedgeConfig, rho: f64) -> f64 {
    let t = x2 * cfg.tan_theta();
    (rho * ln_f(t, cfg.alpha)).exp()
}

#[cfg(test)]
/// `d/dx2 g_rho = rho tan(theta) F^(rho-1) F'`, evaluated in log form.
pub(crate) fn g_prime_unchecked(x2: f64, cfg: &WedgeConfig, rho: f64) -> f64 {
    let tan = cfg.tan_theta();
    let t = x2 * tan;
    rho * tan * ((rho - 1.0) * ln_f(t, cfg.alpha) - cfg.alpha * t.abs()).exp()
}

/// The trial function `u(x1, x2) = exp(-alpha|x1|/2) g_rho(x2) chi(x2/n)`.
///
/// Points outside the domain are evaluated with the same formula.
pub fn trial_u(x1: f64, x2: f64, cfg: &WedgeConfig, params: &TrialParams) -> Result<f64> {
    params.check(cfg)?;
    let chi = params.cutoff.value(x2 / params.n);
    if chi == 0.0 {
        return Ok(0.0);
    }
    Ok((-0.5 * cfg.alpha * x1.abs()).exp() * g_unchecked(x2, cfg, params.rho) * chi)
}

/// `R(g_rho) = alpha^(-2 rho) tan(theta) (rho - cot^2 theta) (2^(2 rho) - 1) / (2 rho + 1)`.
///
/// Defined for `0 < rho <= cot^2 theta`; vanishes at the right end.
pub fn closed_r(cfg: &WedgeConfig, rho: f64) -> Result<f64> {
    let hi = cfg.cot_sq();
    if !(rho.is_finite() && rho > 0.0 && rho <= hi) {
        return Err(Error::domain(
            "rho",
            format!("{rho} is not in (0, cot^2 theta] = (0, {hi}]"),
        ));
    }
    let alpha = cfg.alpha;
    Ok(alpha.powf(-2.0 * rho) * cfg.tan_theta() * (rho - hi) * pow2_m1(2.0 * rho) / (2.0 * rho + 1.0))
}

/// Closed form of `J = int_R exp(-2 alpha |x| tan theta) F(x tan theta)^(2 rho - 1) dx`.
pub fn closed_j(cfg: &WedgeConfig, rho: f64) -> Result<f64> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::domain("rho", format!("{rho} is not positive")));
    }
    Ok(pow2_m1(2.0 * rho) / (rho * (2.0 * rho + 1.0) * cfg.tan_theta() * cfg.alpha.powf(2.0 * rho)))
}

/// Quartic `B = 108 + 180 c - 132 c^2 + 45 c^3 - 5 c^4` in `c = cos^2 theta`.
fn quartic_b(c: f64) -> f64 {
    108.0 + c * (180.0 + c * (-132.0 + c * (45.0 - 5.0 * c)))
}

/// The dimensionless gain `Lambda(theta)` in `lambda <= -alpha^2 (1/4 + Lambda)`.
///
/// Accepts the straight line `theta = pi/2`, where it is zero.
pub fn lambda_upper(theta: f64) -> Result<f64> {
    if !(theta.is_finite() && theta > 0.0 && theta <= FRAC_PI_2) {
        return Err(Error::domain("theta", format!("{theta} is not in (0, pi/2]")));
    }
    if theta == FRAC_PI_2 {
        return Ok(0.0);
    }
    let cos = theta.cos();
    let c = cos * cos;
    let gain = pow2_m1(2.0 * c);
    let one_2c = 1.0 + 2.0 * c;
    Ok(3.0 * c * c * c * gain * gain / (2.0 * one_2c * one_2c * one_2c * quartic_b(c)))
}

/// Every intermediate of the explicit bound at `rho = cos^2 theta` with the linear cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theta: f64,
    pub alpha: f64,
    pub rho: f64,
    /// `-R(g_rho)`.
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[serde(rename = "B")]
    pub big_b: f64,
    /// `2b/a`.
    pub n_opt: f64,
    /// `a^2 / (4 b c alpha^2)`.
    pub capital_lambda: f64,
    /// `-alpha^2 (1/4 + Lambda)`.
    pub lambda_upper_bound: f64,
}

pub fn bound_constants(cfg: &WedgeConfig) -> Result<BoundReport> {
    if cfg.is_straight_line() {
        return Err(Error::Degenerate(
            "theta = pi/2: a vanishes and the optimal cutoff scale 2b/a is undefined".into(),
        ));
    }
    let (sin, cos) = cfg.theta.sin_cos();
    let alpha = cfg.alpha;
    let rho = cos * cos;
    let one_2c = 1.0 + 2.0 * rho;
    let scale = alpha.powf(-(2.0 * rho + 1.0));
    // Same value as -closed_r(cfg, cos^2), written without the cancellation in rho - cot^2.
    let a = alpha.powf(-2.0 * rho) * cos * cos * cos * pow2_m1(2.0 * rho) / (sin * one_2c);
    let big_b = quartic_b(rho);
    let b = scale * big_b / (36.0 * sin * sin);
    let c = 6.0 * one_2c * scale;
    let capital_lambda = a * a / (4.0 * b * c * alpha * alpha);
    Ok(BoundReport {
        theta: cfg.theta,
        alpha,
        rho,
        a,
        b,
        c,
        big_b,
        n_opt: 2.0 * b / a,
        capital_lambda,
        lambda_upper_bound: -alpha * alpha * (0.25 + capital_lambda),
    })
}
