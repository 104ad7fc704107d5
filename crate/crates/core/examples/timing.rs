use brokenline::spectral::{solve, SolveOptions};
use brokenline::WedgeConfig;
use std::time::Instant;

fn main() {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().unwrap()).collect();
    let (theta, alpha) = (args[0], args[1]);
    let cfg = if theta >= std::f64::consts::FRAC_PI_2 {
        WedgeConfig::straight_line(alpha).unwrap()
    } else {
        WedgeConfig::new(theta, alpha).unwrap()
    };
    let mut opts = SolveOptions::default();
    if args.len() >= 4 {
        opts = opts.with_box(args[2], args[3] as usize);
    }
    if args.len() >= 5 {
        opts.enlarge_box = args[4] != 0.0;
    }
    let t = Instant::now();
    let r = solve(&cfg, &opts).unwrap();
    for lv in &r.levels {
        println!(
            "L={} h={} lam={:.9} it={}",
            lv.grid.half_width(),
            lv.grid.spacing(),
            lv.eigenvalue,
            lv.iterations
        );
    }
    println!(
        "{:?} box_err={:e} budget={:e} mass={:e} t={:?}",
        r.extrapolated,
        r.box_error_estimate,
        r.error_budget(),
        r.boundary_mass,
        t.elapsed()
    );
}
