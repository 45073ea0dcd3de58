use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bagged-ci"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn curve_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = run(&[
            "curve",
            "--quantity",
            "cp_delta",
            "--rho",
            "0.7",
            "--gamma-max",
            "4",
            "--out",
            path_str(out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(o.stdout.is_empty());
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "gamma,value,quantity,rho,alpha,pretest_size");
    assert_eq!(lines.len(), 82);
    assert_eq!(lines[1], "0,0.962350643291,cp_delta,0.7,0.05,0.1");
}

#[test]
fn sel_delta_curve_runs_on_stdout() {
    let o = run(&[
        "curve",
        "--quantity",
        "sel_delta",
        "--rho",
        "0.7",
        "--gamma-max",
        "1",
        "--step",
        "0.5",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("0,0.979661931292,sel_delta,"));
}

#[test]
fn cmin_reports_each_rule() {
    let o = run(&["cmin", "--rho", "0"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 3);
    for line in text.lines() {
        assert!(line.contains("c_min=0.95 "), "{line}");
        assert!(line.contains("argmin_gamma=0 "), "{line}");
    }
    let again = run(&["cmin", "--rho", "0"]);
    assert_eq!(o.stdout, again.stdout);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmin.csv");
    let o = run(&[
        "cmin",
        "--rho",
        "0.7",
        "--rule",
        "sd_delta,pms",
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success());
    let csv = fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<&str>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 2);
    let delta: f64 = rows[0][1].parse().unwrap();
    let pms: f64 = rows[1][1].parse().unwrap();
    assert!(pms < delta && delta < 0.95);
}

#[test]
fn figure1_writes_both_panels() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["figure1", "--out", path_str(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let top = fs::read_to_string(dir.path().join("figure1_top.csv")).unwrap();
    let bottom = fs::read_to_string(dir.path().join("figure1_bottom.csv")).unwrap();
    assert!(top.starts_with("gamma,cp_delta,cp_pms\n"));
    assert!(bottom.starts_with("gamma,sel_delta\n"));
    assert_eq!(top.lines().count(), 202);
    let last: Vec<f64> = top
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|f| f.parse().unwrap())
        .collect();
    assert_eq!(last[0], 10.0);
    assert!((last[1] - 0.95).abs() < 1e-3);
    assert!(stdout(&o).contains("min cp_pms="));
}

fn fit_args<'a>(design: &'a str, response: &'a str, theta: &'a str, tau: &'a str) -> Vec<&'a str> {
    vec![
        "fit",
        "--design",
        design,
        "--response",
        response,
        "--theta-vec",
        theta,
        "--tau-vec",
        tau,
        "--sigma",
        "0.8",
    ]
}

#[test]
fn fit_with_inline_and_file_vectors_agree() {
    let design = fixture("design.csv");
    let response = fixture("response.csv");
    let inline = run(&fit_args(&design, &response, "0,1,0", "0,0,1"));
    assert!(inline.status.success(), "{}", stderr(&inline));
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    fs::write(&a, "0\n1\n0\n").unwrap();
    fs::write(&b, "0,0,1\n").unwrap();
    let files = run(&fit_args(&design, &response, path_str(&a), path_str(&b)));
    assert_eq!(inline.stdout, files.stdout);
    let text = stdout(&inline);
    assert!(text.contains("rule,lower,upper,center,half_width,nominal_coverage"));
    for rule in ["sd,", "sd_delta,", "pms,", "full_model,"] {
        assert!(text.lines().any(|l| l.starts_with(rule)), "{rule}");
    }
}

#[test]
fn orthogonal_design_gives_identical_smoothed_and_full_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let design = dir.path().join("x.csv");
    let response = dir.path().join("y.csv");
    fs::write(&design, "1,1\n1,-1\n-1,1\n-1,-1\n").unwrap();
    fs::write(&response, "0.5\n-0.2\n1.1\n0.3\n").unwrap();
    let o = run(&fit_args(
        path_str(&design),
        path_str(&response),
        "1,0",
        "0,1",
    ));
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let row = |rule: &str| -> String {
        text.lines()
            .find(|l| l.starts_with(&format!("{rule},")))
            .unwrap()
            .split_once(',')
            .unwrap()
            .1
            .to_string()
    };
    assert!(text.contains("\nrho,0\n"));
    assert_eq!(row("sd"), row("full_model"));
    assert_eq!(row("sd_delta"), row("full_model"));
}

#[test]
fn fit_parse_errors_name_file_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let design = dir.path().join("x.csv");
    fs::write(&design, "1,2\n3,oops\n5,6\n7,8\n").unwrap();
    let response = fixture("response.csv");
    let o = run(&fit_args(path_str(&design), &response, "1,0", "0,1"));
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(
        err.contains("x.csv") && err.contains("line 2") && err.contains("column 2"),
        "{err}"
    );
}

#[test]
fn singular_design_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let design = dir.path().join("x.csv");
    let response = dir.path().join("y.csv");
    fs::write(&design, "1,2\n2,4\n3,6\n4,8\n").unwrap();
    fs::write(&response, "1\n2\n3\n4\n").unwrap();
    let o = run(&fit_args(
        path_str(&design),
        path_str(&response),
        "1,0",
        "0,1",
    ));
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).to_lowercase().contains("singular"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn validation_errors_exit_with_one_and_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never.csv");
    let cases: Vec<Vec<&str>> = vec![
        vec![
            "curve",
            "--quantity",
            "cp",
            "--rho",
            "2",
            "--out",
            path_str(&out),
        ],
        vec![
            "curve",
            "--quantity",
            "cp",
            "--rho",
            "0.5",
            "--alpha",
            "0",
            "--out",
            path_str(&out),
        ],
        vec![
            "curve",
            "--quantity",
            "cp",
            "--rho",
            "0.5",
            "--gamma-max",
            "-1",
            "--out",
            path_str(&out),
        ],
        vec![
            "curve",
            "--quantity",
            "cp",
            "--rho",
            "0.5",
            "--pretest-size",
            "0.1",
            "--cutoff-d",
            "1.5",
        ],
        vec!["curve", "--quantity", "width", "--rho", "0.5"],
        vec!["curve", "--rho", "0.5"],
        vec!["verify", "--tolerance", "0", "--out", path_str(&out)],
        vec!["verify", "--reps", "0"],
        vec!["cmin", "--rho", "0.5", "--rule", "sd,bogus"],
        vec![
            "fit",
            "--design",
            "/no/such.csv",
            "--response",
            "/no/such.csv",
            "--theta-vec",
            "1",
            "--tau-vec",
            "1",
            "--sigma",
            "1",
        ],
        vec!["figure1", "--out", "/no/such/dir"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
        assert!(o.stdout.is_empty(), "{args:?}");
        assert!(!stderr(&o).is_empty());
    }
    assert!(!out.exists());
    let err = stderr(&run(&["verify", "--tolerance", "0"]));
    assert!(err.contains("--tolerance"), "{err}");
}

#[test]
fn help_and_version_succeed() {
    assert!(run(&["--help"]).status.success());
    assert!(run(&["--version"]).status.success());
    assert!(stdout(&run(&["curve", "--help"])).contains("--quantity"));
}

#[test]
fn verify_small_sample_flags_wide_errors_and_is_deterministic() {
    let args = [
        "verify", "--reps", "100", "--gammas", "0,1", "--rhos", "0.4", "--seed", "9",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("# note:"), "{text}");
    assert!(text.contains("quantity,gamma,rho,analytic,empirical,std_error,z,status"));
    assert_eq!(
        text.lines()
            .filter(|l| l.starts_with("coverage_sd,"))
            .count(),
        2
    );
    let code = a.status.code().unwrap();
    let overall = text.lines().last().unwrap();
    assert_eq!(code == 0, overall.starts_with("overall,pass"));
    assert!(code == 0 || code == 3);
}

#[test]
fn verify_fails_with_exit_three_under_a_tiny_tolerance() {
    let o = run(&[
        "verify",
        "--reps",
        "2000",
        "--gammas",
        "1",
        "--rhos",
        "0.7",
        "--tolerance",
        "1e-6",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o)
        .lines()
        .last()
        .unwrap()
        .starts_with("overall,fail"));
}
