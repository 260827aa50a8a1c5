use std::process::{Command, Output};

fn halfline(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_halfline"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn body(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect()
}

fn footer_value(text: &str, key: &str) -> f64 {
    text.lines()
        .filter_map(|l| l.strip_prefix("# "))
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(" = ")))
        .unwrap_or_else(|| panic!("no {key} in output"))
        .parse()
        .unwrap()
}

#[test]
fn help_and_version_succeed() {
    for flag in ["--help", "--version"] {
        let o = halfline(&[flag]);
        assert!(o.status.success());
        assert!(!o.stdout.is_empty());
    }
    assert!(halfline(&["kernel", "--help"]).status.success());
}

#[test]
fn density_at_a_point() {
    let o = halfline(&[
        "kernel", "--alpha", "0", "--lambda", "1", "--x", "1", "--y", "2", "--what", "density",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("\nx,y,value\n"));
    let rows = body(&text);
    assert_eq!(rows.len(), 1);
    let want = 1f64.sin() * 2f64.sin() / std::f64::consts::PI;
    assert!((rows[0][2] - want).abs() < 1e-12);
}

#[test]
fn kernel_grid_has_every_pair() {
    let o = halfline(&[
        "kernel",
        "--alpha",
        "1",
        "--what",
        "propagator",
        "--t",
        "-2",
        "--x-max",
        "3",
        "--grid-n",
        "4",
    ]);
    assert!(o.status.success());
    let rows = body(&stdout(&o));
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r.len() == 4));
}

#[test]
fn invalid_configurations_exit_with_one() {
    let cases: [&[&str]; 5] = [
        &["dispersive-scan", "--alpha", "1", "--s", "3"],
        &["threshold-scan", "--alpha", "0", "--s", "1.2"],
        &[
            "kernel", "--alpha", "-0.3", "--what", "e0", "--x", "1", "--y", "1",
        ],
        &[
            "kernel", "--alpha", "0", "--what", "density", "--x", "1", "--y", "1",
        ],
        &[
            "dispersive-scan",
            "--alpha",
            "0",
            "--s",
            "0.5",
            "--beta",
            "0.9",
        ],
    ];
    for args in cases {
        let o = halfline(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(o.stdout.is_empty());
    }
    let o = halfline(cases[0]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("s must lie in [0, ν + 1/2]"));
}

#[test]
fn max_weight_is_resolved_and_output_is_deterministic() {
    let dir = std::env::temp_dir().join(format!("halfline-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("scan.csv");
    let args = |p: &str| {
        vec![
            "dispersive-scan".to_string(),
            "--alpha".into(),
            "0".into(),
            "--s".into(),
            "max".into(),
            "--t-min".into(),
            "10".into(),
            "--t-max".into(),
            "100".into(),
            "--t-points".into(),
            "6".into(),
            "--grid-n".into(),
            "200".into(),
            "--out".into(),
            p.into(),
        ]
    };
    let p = path.to_str().unwrap();
    let run = || {
        let a = args(p);
        let o = halfline(&a.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(o.status.success());
        assert!(o.stdout.is_empty());
        std::fs::read_to_string(&path).unwrap()
    };
    let first = run();
    let second = run();
    assert_eq!(first, second);
    assert!(first.contains("# s = 1.00000000000000e0"));
    assert!(first.contains("\nt,sup_value\n"));
    assert_eq!(body(&first).len(), 6);
    let exponent = footer_value(&first, "exponent");
    assert!(exponent < -1.0 && exponent > -1.6, "{exponent}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn threshold_scan_reports_positive_rate() {
    let o = halfline(&[
        "threshold-scan",
        "--alpha",
        "0",
        "--eps",
        "0.5",
        "--lambda-min",
        "1e-6",
        "--lambda-max",
        "1e-2",
        "--lambda-points",
        "5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("# s = 2.00000000000000e0"));
    assert!(text.contains("# fit scaled_e1_norm\n# exponent = "));
    let rows = body(&text);
    assert_eq!(rows.len(), 5);
    assert!(rows.windows(2).all(|w| w[0][0] < w[1][0]));
    assert!(footer_value(&text, "exponent") > 0.2);
}

#[test]
fn evolution_routes_agree() {
    let o = halfline(&[
        "oracle-compare",
        "--alpha",
        "0",
        "--t",
        "0.5",
        "--grid-n",
        "2000",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    for pair in ["kernel-hankel", "kernel-reference", "hankel-reference"] {
        assert!(footer_value(&text, &format!("distance {pair}")) < 1e-3);
    }
}

#[test]
fn evolve_conserves_the_norm() {
    let o = halfline(&["evolve", "--alpha", "2", "--t", "0.5", "--route", "hankel"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let before = footer_value(&text, "norm_initial");
    let after = footer_value(&text, "norm_final");
    assert!((before - after).abs() < 1e-6 * before);
    assert!(body(&text).iter().all(|r| r.len() == 3));
}

#[test]
fn stone_comparison_table() {
    let o = halfline(&["oracle-compare", "--alpha", "0", "--what", "density"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(body(&text).len(), 25);
    assert!(footer_value(&text, "max_relative_error") < 0.1);
}
