use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weierlift")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn data_lines(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn eval_grid_has_one_row_per_point() {
    let o = run(&["eval", "--b", "2", "--a", "18/25", "--b", "3", "--a", "3/5", "--N", "8"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let lines = data_lines(&out);
    assert_eq!(lines[0], "t,W1,W2");
    assert_eq!(lines.len(), 1 + 1025);
    assert!(out.lines().last().unwrap().starts_with("# weierlift"));
    assert!(out.contains("components=[b=2 a=18/25"));
}

#[test]
fn single_point_grid() {
    let o = run(&["eval", "--b", "3", "--a", "3/5", "--from", "1/3", "--to", "1/3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(data_lines(&stdout(&o)).len(), 2);
}

#[test]
fn repeat_runs_are_byte_identical() {
    let args = ["lift", "--figure1", "--tol", "1e-5", "--eps-prime", "0.01", "--s", "1/7", "--t", "5/9"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let json = run(&["lift", "--figure1", "--N", "6", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["second"].as_array().unwrap().len(), 2);
}

#[test]
fn validation_errors_exit_one() {
    let o = run(&["eval", "--b", "2", "--a", "0.3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("invalid --a"), "{}", stderr(&o));

    let o = run(&["eval", "--b", "2.5", "--a", "0.7"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--b"));

    let o = run(&["norms", "--figure1", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("invalid --alpha"));

    let o = run(&["converge", "--figure1", "--N", "4"]);
    assert_eq!(o.status.code(), Some(1));

    let o = run(&["eval", "--figure1", "--from", "1/2", "--to", "1/4"]);
    assert_eq!(o.status.code(), Some(1));

    let o = run(&["lift", "--figure1", "--s", "3/2"]);
    assert_eq!(o.status.code(), Some(1));

    let o = run(&["rde", "--figure1", "--N", "4", "--step", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("does not resolve"));
}

#[test]
fn usage_errors_exit_one_help_exits_zero() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["eval", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn unreachable_tolerance_exits_two() {
    let o = run(&["lift", "--figure1", "--tol", "1e-8", "--eps-prime", "0.01", "--max-n", "64"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("tolerance unreachable"));
}

#[test]
fn figure_presets_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["eval", "--figure1", "--N", "6", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for name in ["figure1_components.csv", "figure1_curve.csv"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert_eq!(data_lines(&text).len(), 1026);
    }

    let o = run(&["rde", "--figure3", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for n in [4, 8, 12] {
        let text = std::fs::read_to_string(dir.path().join(format!("figure3_N{n}.csv"))).unwrap();
        let lines = data_lines(&text);
        assert_eq!(lines[0], "t,Y1,Y2");
        assert!(lines.last().unwrap().starts_with("1,"));
        assert!(text.contains(&format!("rk4 N={n}")));
    }
}

#[test]
fn config_files() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    std::fs::write(
        &good,
        "[[components]]\nb = 2\na = \"18/25\"\n\n[[components]]\nb = 3\na = \"3/5\"\n",
    )
    .unwrap();
    let a = run(&["lift", "--config", good.to_str().unwrap(), "--N", "7"]);
    let b = run(&["lift", "--figure1", "--N", "7"]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(data_lines(&stdout(&a)), data_lines(&stdout(&b)));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"components": [{"b": 2, "a": "18/25", "colour": 1}]}"#).unwrap();
    let o = run(&["eval", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("invalid --config"), "{}", stderr(&o));
}

#[test]
fn demo_and_holder_tables() {
    let o = run(&["demo", "--N", "4,5,6,7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(data_lines(&out).len(), 5);
    assert!(out.contains("sumObeysBound=true"));

    let o = run(&["holder", "--figure1", "--witness", "--N", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(data_lines(&stdout(&o)).len(), 11);
}
