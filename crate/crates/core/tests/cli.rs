use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brokenline"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn bound_json_envelope() {
    let out = run(&["bound", "--theta", "0.7853981633974483"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "bound");
    let bound = v["result"]["lambda_upper_bound"].as_f64().unwrap();
    assert!((bound + 0.250_137_614_678_899).abs() < 1e-12);
}

#[test]
fn sweep_csv_is_stable() {
    let args = [
        "sweep",
        "--theta-min",
        "0.3",
        "--theta-max",
        "1.3",
        "--theta-steps",
        "5",
        "--format",
        "csv",
    ];
    let first = run(&args);
    assert_eq!(first.status.code(), Some(0));
    let text = String::from_utf8(first.stdout.clone()).unwrap();
    assert!(
        text.starts_with("theta,alpha,capital_lambda,bound_thm2,bound_optimized,lambda_fd,fd_error_budget,status\n")
    );
    assert_eq!(text.lines().count(), 6);
    assert!(!text.contains('\r'));
    assert_eq!(first.stdout, run(&args).stdout);
}

#[test]
fn invalid_input_exits_one_and_names_the_flag() {
    for (args, flag) in [
        (&["bound", "--theta", "2"][..], "--theta"),
        (&["rayleigh", "--theta", "0.785", "--rho", "5"][..], "--rho"),
        (&["bound", "--theta", "0.785", "--alpha", "-1"][..], "--alpha"),
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.contains(flag), "{args:?}: {err}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(run(&["bound", "--theta"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
