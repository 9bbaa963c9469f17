use std::process::{Command, Output};

const EX71_DELTA: &str =
    "13763868443250238929521503984833381597731412559044/46065097831342932365531985486767649347321318605709";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asymbound"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json_lines(o: &Output) -> Vec<serde_json::Value> {
    stdout(o)
        .lines()
        .map(|l| serde_json::from_str(l).expect("one JSON object per line"))
        .collect()
}

fn csv_rows(o: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    let text = stdout(o);
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn gv_outside_domain_exits_2() {
    let o = run(&["bound", "gv", "--q", "2", "--delta", "0.5"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("delta"));
}

#[test]
fn tvz_at_zero_distance() {
    let o = run(&[
        "bound", "tvz", "--q", "49", "--delta", "0", "--format", "json",
    ]);
    assert_eq!(code(&o), 0);
    let v = &json_lines(&o)[0];
    assert_eq!(v["value"], "0.833333333333333333333333333333");
    assert_eq!(v["gamma"], "6.000000000000000000000000000000");
}

#[test]
fn bound_new_reports_the_published_gain() {
    let o = run(&[
        "bound",
        "new",
        "--q",
        "64",
        "--delta",
        EX71_DELTA,
        "--x",
        "3.41e-16,1.0634e-23,1.93e-31",
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = &json_lines(&o)[0];
    let gain: f64 = v["gain"].as_str().unwrap().parse().unwrap();
    assert!(gain >= 2.711029e-17);
    assert!(v["r_lin"]
        .as_str()
        .unwrap()
        .starts_with("0.55835395724081743804"));
    assert_eq!(v["zero_branch"], "false");
}

#[test]
fn bound_lin_prints_diagnostics_and_honours_gamma_l() {
    let base = run(&[
        "bound", "lin", "--q", "64", "--delta", EX71_DELTA, "--format", "json",
    ]);
    let more = run(&[
        "bound",
        "lin",
        "--q",
        "64",
        "--delta",
        EX71_DELTA,
        "--gamma-l",
        "2=0.1",
        "--format",
        "json",
    ]);
    assert_eq!(code(&base), 0);
    assert_eq!(code(&more), 0);
    let (a, b) = (&json_lines(&base)[0], &json_lines(&more)[0]);
    for key in [
        "psi",
        "theta",
        "target",
        "limit_proxy",
        "method",
        "bracket_width",
    ] {
        assert!(a.get(key).is_some(), "{key}");
    }
    let f = |v: &serde_json::Value, k: &str| v[k].as_str().unwrap().parse::<f64>().unwrap();
    assert!(f(b, "target") > f(a, "target"));
    assert!(f(b, "value") > f(a, "value"));
}

#[test]
fn json_keys_are_snake_case_and_values_strings() {
    let o = run(&[
        "bound", "lin", "--q", "49", "--delta", "1/2", "--format", "json",
    ]);
    for (k, v) in json_lines(&o)[0].as_object().unwrap() {
        assert!(
            k.chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_'),
            "{k}"
        );
        assert!(v.is_string(), "{k}");
    }
}

#[test]
fn reproduce_examples_pass() {
    for ex in ["7.1", "7.2", "7.3"] {
        let o = run(&["reproduce", ex, "--format", "json"]);
        assert_eq!(code(&o), 0, "{ex}: {}", stdout(&o));
        let rows = json_lines(&o);
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r["status"] == "PASS"));
    }
}

#[test]
fn reproduce_at_low_precision_fails_on_the_smallest_gain() {
    let o = run(&[
        "reproduce",
        "7.3",
        "--precision-bits",
        "256",
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 3);
    let rows = json_lines(&o);
    assert_eq!(rows[0]["status"], "PASS");
    assert_eq!(rows[1]["case"], "7.3b");
    assert_eq!(rows[1]["status"], "FAIL");
    assert!(rows[1]["reason"].as_str().unwrap().contains("resolution"));
}

#[test]
fn reproduce_table_ends_with_verdict() {
    let o = run(&["reproduce", "7.1"]);
    assert!(stdout(&o).trim_end().ends_with("7.1: PASS"));
}

#[test]
fn scan_single_step() {
    let o = run(&[
        "scan",
        "--q",
        "64",
        "--delta-from",
        "1/3",
        "--delta-to",
        "1/2",
        "--steps",
        "1",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&o), 0);
    let (header, rows) = csv_rows(&o);
    assert_eq!(header.join(","), "delta,gv,tvz,no1,r_lin,r_general,best");
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "1/3");
}

#[test]
fn scan_flags_out_of_domain_rows() {
    let o = run(&[
        "scan",
        "--q",
        "2",
        "--gamma",
        "1/2",
        "--delta-from",
        "0.3",
        "--delta-to",
        "0.9",
        "--steps",
        "3",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&o), 0);
    let (_, rows) = csv_rows(&o);
    assert_ne!(rows[0][1], "out_of_domain");
    assert_eq!(rows[1][1], "out_of_domain");
    assert_eq!(rows[2][1], "out_of_domain");
    let j = run(&[
        "scan",
        "--q",
        "2",
        "--gamma",
        "1/2",
        "--delta-from",
        "0.3",
        "--delta-to",
        "0.9",
        "--steps",
        "3",
        "--format",
        "json",
    ]);
    let rows = json_lines(&j);
    assert!(rows[2]["out_of_domain"]
        .as_str()
        .unwrap()
        .starts_with("gv:"));
}

#[test]
fn scan_r_lin_column_decreases() {
    let o = run(&[
        "scan",
        "--q",
        "64",
        "--delta-from",
        "0.1",
        "--delta-to",
        "0.8",
        "--steps",
        "71",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&o), 0);
    let (_, rows) = csv_rows(&o);
    assert_eq!(rows.len(), 71);
    let col: Vec<f64> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
    assert!(col.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn scan_rows_round_trip() {
    let args = |from: &str, to: &str, steps: &str| {
        run(&[
            "scan",
            "--q",
            "49",
            "--delta-from",
            from,
            "--delta-to",
            to,
            "--steps",
            steps,
            "--m",
            "3",
            "--x",
            "1.93e-13,1.53e-19,7.08e-26",
            "--format",
            "csv",
            "--digits",
            "40",
        ])
    };
    let (_, rows) = csv_rows(&args("1/7", "5/7", "5"));
    assert_eq!(rows.len(), 5);
    for row in rows {
        let again = args(&row[0], &row[0], "1");
        let (_, back) = csv_rows(&again);
        assert_eq!(back, vec![row]);
    }
}

#[test]
fn scan_rejects_bad_interval() {
    let o = run(&[
        "scan",
        "--q",
        "64",
        "--delta-from",
        "0.5",
        "--delta-to",
        "0.4",
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("delta_from"));
}

#[test]
fn verify_suites_pass() {
    let o = run(&["verify", "all", "--format", "csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = csv_rows(&o);
    assert_eq!(header, ["suite", "check", "cases", "passed", "status"]);
    let suites: std::collections::BTreeSet<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(suites.len(), 3);
    for r in &rows {
        assert_eq!(r[2], r[3], "{}", r[1]);
        assert_eq!(r[4], "PASS");
    }
}

#[test]
fn verify_is_deterministic_per_seed() {
    let a = run(&["verify", "vectors", "--seed", "5"]);
    let b = run(&["verify", "vectors", "--seed", "5"]);
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn usage_errors_exit_1() {
    let cases: &[&[&str]] = &[
        &[
            "bound",
            "gv",
            "--q",
            "2",
            "--delta",
            "0.1",
            "--precision-bits",
            "64",
        ],
        &["bound", "gv", "--q", "2", "--delta", "0.1", "--digits", "0"],
        &["bound", "gv", "--q", "2", "--delta", "abc"],
        &["bound", "gv", "--q", "1/2", "--delta", "0.1"],
        &["bound", "tvz", "--q", "6", "--delta", "0.1", "--gamma", "1"],
        &["bound", "tvz", "--q", "2", "--delta", "0.1"],
        &["bound", "new", "--q", "64", "--delta", "0.1"],
        &[
            "bound",
            "lin",
            "--q",
            "64",
            "--delta",
            "0.1",
            "--gamma-l",
            "2:0.1",
        ],
        &["reproduce", "7.4"],
        &["frobnicate"],
    ];
    for args in cases {
        assert_eq!(code(&run(args)), 1, "{args:?}");
    }
}

#[test]
fn help_exits_0() {
    assert_eq!(code(&run(&["--help"])), 0);
}
