//! End-to-end acceptance checks. Runs every criterion, prints one
//! `criterion N: PASS|FAIL|INCONCLUSIVE (...)` line each in order and exits
//! nonzero if any blocking criterion fails. Criterion 10 is diagnostic only.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::panic;
use std::process::ExitCode;
use std::sync::{Mutex, OnceLock};
use std::thread;
use std::time::Instant;

use brokenline::quadrature::{quad_j, Tolerance};
use brokenline::report::{cmd_fit_asymptotics, cmd_sweep, RowStatus, Side, SweepOptions};
use brokenline::spectral::{self, SolveOptions, SpectralResult};
use brokenline::trial::{bound_constants, closed_j, closed_r, lambda_upper};
use brokenline::variational::{optimize_bound, r_functional, rayleigh, verify_thm1};
use brokenline::{TrialParams, WedgeConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Status {
    Pass,
    Fail,
    Inconclusive,
}

type Outcome = (Status, String);

fn tag(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

fn verdict(pass: bool, detail: String) -> Outcome {
    (if pass { Status::Pass } else { Status::Fail }, detail)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

type SolveCache = Mutex<HashMap<(u64, u64), &'static SpectralResult>>;

/// Default-grid solves shared by criteria 8 and 9.
fn solved(theta: f64, alpha: f64) -> &'static SpectralResult {
    static CACHE: OnceLock<SolveCache> = OnceLock::new();
    let key = (theta.to_bits(), alpha.to_bits());
    if let Some(hit) = CACHE.get_or_init(Default::default).lock().unwrap().get(&key) {
        return hit;
    }
    let cfg = WedgeConfig::new(theta, alpha).unwrap();
    let res: &'static SpectralResult = Box::leak(Box::new(spectral::solve(&cfg, &SolveOptions::default()).unwrap()));
    CACHE.get().unwrap().lock().unwrap().insert(key, res);
    res
}

fn criterion_01_closed_form_consistency() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let theta = rng.gen_range(0.01..FRAC_PI_2 - 0.01);
        let direct = lambda_upper(theta).unwrap();
        for alpha in [0.5, 1.0, 2.0] {
            let b = bound_constants(&WedgeConfig::new(theta, alpha).unwrap()).unwrap();
            worst = worst.max(rel(b.capital_lambda, direct));
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = worst <= 1e-12 && secs < 1.0;
    verdict(pass, format!("max rel diff {worst:.2e}, {secs:.3} s"))
}

fn criterion_02_small_angle_limit() -> Outcome {
    let v = lambda_upper(1e-6).unwrap();
    let err = rel(v, 1.0 / 392.0);
    let pass = err <= 1e-4;
    verdict(pass, format!("Lambda(1e-6) = {v:.9e}, rel err {err:.2e} vs 1/392"))
}

fn criterion_03_quadrature_oracle() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_j, mut worst_r) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let theta = rng.gen_range(0.1..1.5);
        let alpha = rng.gen_range(0.25..4.0);
        let cfg = WedgeConfig::new(theta, alpha).unwrap();
        let rho = rng.gen_range(0.02..0.98) * cfg.cot_sq().min(20.0);
        let q = quad_j(&cfg, rho, Tolerance::default()).unwrap().value;
        let t = theta.tan();
        let exact = ((2.0f64).powf(2.0 * rho) - 1.0) / (rho * (2.0 * rho + 1.0) * t * alpha.powf(2.0 * rho));
        worst_j = worst_j.max(rel(q, exact)).max(rel(closed_j(&cfg, rho).unwrap(), exact));
        let via_r = rho * t * t * (rho - cfg.cot_sq()) * q;
        worst_r = worst_r.max(rel(via_r, closed_r(&cfg, rho).unwrap()));
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = worst_j <= 1e-10 && worst_r <= 1e-10 && secs < 10.0;
    verdict(
        pass,
        format!("max rel err J {worst_j:.2e}, R {worst_r:.2e}, {secs:.2} s"),
    )
}

fn criterion_04_theorem1_grid() -> Outcome {
    let t0 = Instant::now();
    let thetas: Vec<f64> = (0..10).map(|k| 0.1 + 1.35 * k as f64 / 9.0).collect();
    let mut failures = Vec::new();
    let mut max_attempts = 0;
    for &theta in &thetas {
        for alpha in [0.5, 1.0, 2.0] {
            let cfg = WedgeConfig::new(theta, alpha).unwrap();
            for frac in [0.1, 0.5, 0.9] {
                let rho = frac * cfg.cot_sq();
                match verify_thm1(&cfg, rho) {
                    Ok(w) if w.report.margin > 0.0 && w.report.r_value < 0.0 => {
                        max_attempts = max_attempts.max(w.attempts)
                    }
                    other => failures.push(format!("theta={theta:.3} alpha={alpha} rho={rho:.3}: {other:?}")),
                }
            }
        }
    }
    // Pointwise inequality chain at the explicit-bound parameters.
    let mut worst_gap = f64::INFINITY;
    for &theta in &thetas {
        for alpha in [0.5, 1.0, 2.0] {
            let cfg = WedgeConfig::new(theta, alpha).unwrap();
            let b = bound_constants(&cfg).unwrap();
            let r = r_functional(&cfg, &TrialParams::theorem_default(&cfg).unwrap()).unwrap();
            let gap = -0.5 * b.a - r;
            worst_gap = worst_gap.min(gap / b.a);
            if gap < 0.0 {
                failures.push(format!(
                    "chain: theta={theta:.3} alpha={alpha}: R = {r:e} > -a/2 = {:e}",
                    -0.5 * b.a
                ));
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = failures.is_empty() && secs < 30.0;
    verdict(pass, format!(
            "90 searches, max {max_attempts} doublings; min (-a/2 - R)/a = {worst_gap:.3e}; {secs:.2} s; failures {failures:?}"
        ),
    )
}

fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let k = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn criterion_05_convergence_rate() -> Outcome {
    let t0 = Instant::now();
    let ns = [25.0, 50.0, 100.0, 200.0, 400.0];
    let mut slopes = Vec::new();
    for (theta, alpha) in [(FRAC_PI_4, 1.0), (0.5, 2.0)] {
        let cfg = WedgeConfig::new(theta, alpha).unwrap();
        let rho = cfg.theta().cos().powi(2);
        let exact = closed_r(&cfg, rho).unwrap();
        let errs: Vec<f64> = ns
            .iter()
            .map(|&n| (r_functional(&cfg, &TrialParams::new(&cfg, rho, n).unwrap()).unwrap() - exact).abs())
            .collect();
        slopes.push(loglog_slope(&ns, &errs));
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = slopes.iter().all(|s| (-1.3..=-0.7).contains(s)) && secs < 10.0;
    verdict(pass, format!("slopes {slopes:.3?}, {secs:.2} s"))
}

fn criterion_06_theorem2_exact_quotient() -> Outcome {
    let t0 = Instant::now();
    let mut rows = Vec::new();
    let mut pass = true;
    for theta in [0.3, 0.6, FRAC_PI_4, 1.0, 1.3] {
        let cfg = WedgeConfig::new(theta, 1.0).unwrap();
        let q = rayleigh(&cfg, &TrialParams::theorem_default(&cfg).unwrap())
            .unwrap()
            .quotient;
        let bound = -(0.25 + lambda_upper(theta).unwrap());
        pass &= q <= bound;
        rows.push(format!("{theta:.4}: {q:.7} <= {bound:.7}"));
    }
    let secs = t0.elapsed().as_secs_f64();
    pass &= secs < 10.0;
    verdict(pass, format!("{}; {secs:.2} s", rows.join(", ")))
}

fn criterion_07_solver_calibration() -> Outcome {
    let t0 = Instant::now();
    let alpha = 1.0;
    let study = spectral::solve_delta_well_1d(alpha, 40.0 / alpha, 512).unwrap();
    let err_a = rel(study.extrapolated.value, -0.25 * alpha * alpha);
    let pass_a = err_a <= 2e-3;

    let half_width = 16.0 / alpha;
    let cfg = WedgeConfig::straight_line(alpha).unwrap();
    let opts = SolveOptions {
        enlarge_box: false,
        estimate_box_error: false,
        ..SolveOptions::default().with_box(half_width, 512)
    };
    let res = spectral::solve(&cfg, &opts).unwrap();
    let value = res.best_estimate();
    let err_b = rel(value, -0.25 * alpha * alpha);
    let pass_b = err_b <= 1e-2;
    // Companion: the Dirichlet box lifts the line state by the lowest
    // longitudinal mode, so the box-exact target is shifted by pi^2/(4L^2).
    let box_target = -0.25 * alpha * alpha + (FRAC_PI_2 / half_width).powi(2);
    let err_box = rel(value, box_target);
    let secs = t0.elapsed().as_secs_f64();
    // A miss here would point at the solver rather than at the box.
    let box_ok = err_box <= 1e-3;
    verdict(pass_a && pass_b && box_ok, format!(
            "(a) 1D rel err {err_a:.2e} [{}]; (b) line at L={half_width}: {value:.7}, rel err {err_b:.3e} vs 1e-2 [{}]; \
             box-shifted target {box_target:.7}, rel err {err_box:.2e} vs 1e-3 [{}]; {secs:.1} s",
            tag(pass_a),
            tag(pass_b),
            tag(box_ok),
        ),
    )
}

fn criterion_08_end_to_end_ordering() -> Outcome {
    let t0 = Instant::now();
    let mut pass = true;
    let mut rows = Vec::new();
    for theta in [0.6, FRAC_PI_4, 1.0] {
        let cfg = WedgeConfig::new(theta, 1.0).unwrap();
        let res = solved(theta, 1.0);
        let (fd, budget) = (res.best_estimate(), res.error_budget());
        let thm2 = -(0.25 + lambda_upper(theta).unwrap());
        let opt = optimize_bound(&cfg).unwrap().best;
        let ordered = fd <= opt.quotient && opt.quotient <= thm2 && fd + budget < thm2;
        // Min-max: no trial quotient may undercut the solver beyond its budget.
        let minmax = opt.quotient >= fd - budget;
        pass &= ordered && minmax;
        rows.push(format!(
            "{theta:.4}: fd {fd:.6} +- {budget:.1e} <= opt {:.6} <= thm2 {thm2:.6}",
            opt.quotient
        ));
    }
    let secs = t0.elapsed().as_secs_f64();
    verdict(pass, format!("{}; {secs:.1} s", rows.join("; ")))
}

fn criterion_09_scaling_law() -> Outcome {
    let t0 = Instant::now();
    let one = solved(FRAC_PI_4, 1.0);
    let two = solved(FRAC_PI_4, 2.0);
    let diff = (two.best_estimate() - 4.0 * one.best_estimate()).abs();
    let allowed = 4.0 * one.error_budget() + two.error_budget();
    let pass_fd = diff <= allowed;

    let cfg1 = WedgeConfig::new(FRAC_PI_4, 1.0).unwrap();
    let mut worst = 0.0f64;
    for (rho, n) in [(0.5, 75.0), (0.3, 20.0), (0.9, 300.0)] {
        let q1 = rayleigh(&cfg1, &TrialParams::new(&cfg1, rho, n).unwrap())
            .unwrap()
            .quotient;
        for s in [2.0, 0.5, 3.0] {
            let cs = cfg1.with_alpha(s).unwrap();
            let qs = rayleigh(&cs, &TrialParams::new(&cs, rho, n / s).unwrap())
                .unwrap()
                .quotient;
            worst = worst.max(rel(qs, s * s * q1));
        }
    }
    let pass_q = worst <= 1e-9;
    let secs = t0.elapsed().as_secs_f64();
    let pass = pass_fd && pass_q;
    verdict(pass, format!(
            "fd: |{:.6} - 4*{:.6}| = {diff:.2e} <= {allowed:.2e}; quotient covariance max rel err {worst:.1e}; {secs:.1} s",
            two.best_estimate(),
            one.best_estimate()
        ),
    )
}

fn criterion_10_asymptotic_exponent() -> Outcome {
    let t0 = Instant::now();
    let opts = SweepOptions {
        with_solver: true,
        ..SweepOptions::default()
    };
    let rows = cmd_sweep(&[1.1, 1.2, 1.3], 1.0, &opts).unwrap();
    // Budgets permit a fit only when each binding energy clears its error by a wide margin.
    let resolved = rows.iter().all(|r| {
        r.status == RowStatus::Ok
            && matches!((r.lambda_fd, r.fd_error_budget), (Some(l), Some(b)) if -0.25 - l > 3.0 * b)
    });
    let summary: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{:.1}: {:?} {:?} +- {:?}",
                r.theta, r.status, r.lambda_fd, r.fd_error_budget
            )
        })
        .collect();
    let secs = t0.elapsed().as_secs_f64();
    if !resolved {
        return (
            Status::Inconclusive,
            format!(
                "binding energies not resolved by the error budgets: {}; {secs:.1} s",
                summary.join("; ")
            ),
        );
    }
    match cmd_fit_asymptotics(Side::PiHalf, &rows) {
        Ok(fit) => {
            let pass = (3.0..=5.0).contains(&fit.slope);
            verdict(
                pass,
                format!("slope {:.3} +- {:.3}; {secs:.1} s", fit.slope, fit.slope_std_error),
            )
        }
        Err(e) => (Status::Inconclusive, format!("fit failed: {e}; {secs:.1} s")),
    }
}

type Criterion = (&'static str, fn() -> Outcome, bool);

const CRITERIA: [Criterion; 10] = [
    ("1", criterion_01_closed_form_consistency, true),
    ("2", criterion_02_small_angle_limit, true),
    ("3", criterion_03_quadrature_oracle, true),
    ("4", criterion_04_theorem1_grid, true),
    ("5", criterion_05_convergence_rate, true),
    ("6", criterion_06_theorem2_exact_quotient, true),
    ("7", criterion_07_solver_calibration, true),
    ("8", criterion_08_end_to_end_ordering, true),
    ("9", criterion_09_scaling_law, true),
    ("10", criterion_10_asymptotic_exponent, false),
];

fn main() -> ExitCode {
    // Timed criteria run alone first so the runtime limits are not skewed by the solver runs.
    let (quick, slow) = CRITERIA.split_at(6);
    let mut outcomes: Vec<Outcome> = quick.iter().map(|c| guarded(c.1)).collect();
    outcomes.extend(thread::scope(|s| {
        let handles: Vec<_> = slow.iter().map(|c| s.spawn(move || guarded(c.1))).collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect::<Vec<_>>()
    }));
    let mut failed = false;
    for ((id, _, blocking), (status, detail)) in CRITERIA.iter().zip(outcomes) {
        let label = match status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        };
        let note = if *blocking || status == Status::Pass {
            ""
        } else {
            " [non-blocking]"
        };
        println!("criterion {id}: {label}{note} ({detail})");
        failed |= *blocking && status != Status::Pass;
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

/// A panic inside a criterion (an unexpected library error) counts as a failure.
fn guarded(f: fn() -> Outcome) -> Outcome {
    panic::catch_unwind(f).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|m| m.to_string()))
            .unwrap_or_default();
        (Status::Fail, format!("panicked: {msg}"))
    })
}
