use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tsmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsmc")).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn synth(dir: &Path, extra: &[&str]) {
    let mut args = vec!["synth", "--out", p(dir)];
    args.extend_from_slice(extra);
    let out = tsmc(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(tsmc(&[]).status.code(), Some(1));
    assert_eq!(tsmc(&["fit", "--bogus"]).status.code(), Some(1));
    assert_eq!(tsmc(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        tsmc(&["synth", "--out", p(dir.path()), "--rank", "40"]).status.code(),
        Some(1)
    );
    assert_eq!(
        tsmc(&["synth", "--out", p(dir.path()), "--layout", "diagonal"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn missing_or_malformed_data_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = tsmc(&[
        "fit",
        "--data",
        p(&d.join("nope.csv")),
        "--meta",
        p(&d.join("nope.csv")),
        "--model",
        p(&d.join("m.json")),
        "--out",
        p(&d.join("f.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));

    fs::write(d.join("e.csv"), "project_id,month_index,expense\nA,0,12\n").unwrap();
    fs::write(d.join("p.csv"), "project_id,budget,ted,status\nA,10,0,completed\n").unwrap();
    let out = tsmc(&[
        "fit",
        "--data",
        p(&d.join("e.csv")),
        "--meta",
        p(&d.join("p.csv")),
        "--model",
        p(&d.join("m.json")),
        "--out",
        p(&d.join("f.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("A"));
}

#[test]
fn synth_writes_tail_missing_ledgers() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), &["--projects", "12"]);
    let expenses = fs::read_to_string(dir.path().join("expenses.csv")).unwrap();
    let truth = fs::read_to_string(dir.path().join("truth.csv")).unwrap();
    assert_eq!(truth.lines().count() - 1, 36 * 12);
    assert_eq!(expenses.lines().count() - 1, 21 * 12);
    let latest = expenses
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<usize>().unwrap())
        .max()
        .unwrap();
    assert_eq!(latest, 20);
}

#[test]
fn noiseless_fit_reaches_tiny_objective() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, &["--missing-rate", "0", "--projects", "60"]);
    let out = tsmc(&[
        "fit",
        "--data",
        p(&d.join("expenses.csv")),
        "--meta",
        p(&d.join("projects.csv")),
        "--model",
        p(&d.join("model.json")),
        "--out",
        p(&d.join("forecasts.csv")),
        "--tol",
        "0",
        "--max-iters",
        "1000",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let objective: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("final objective: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(objective <= 1e-6, "{text}");
    assert!(text.contains("iterations: 1000"));
    for name in ["forecasts.patterns.csv", "forecasts.clusters.csv", "model.json"] {
        assert!(d.join(name).exists(), "{name}");
    }
}

#[test]
fn fully_observed_projects_forecast_their_own_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut expenses = String::from("project_id,date,expense\n");
    let rows = [
        ("A", [50.0, 30.0, 20.0, 0.0]),
        ("B", [10.0, 40.0, 30.0, 20.0]),
        ("C", [25.0, 25.0, 25.0, 25.0]),
    ];
    for (id, spend) in rows {
        for (m, v) in spend.iter().enumerate() {
            expenses.push_str(&format!("{id},2020-0{},{v}\n", m + 1));
        }
    }
    fs::write(d.join("e.csv"), expenses).unwrap();
    fs::write(
        d.join("p.csv"),
        "project_id,budget,ted,status\nA,100,2020-03,completed\nB,100,2020-04,completed\nC,100,,completed\n",
    )
    .unwrap();
    let out = tsmc(&[
        "fit",
        "--data",
        p(&d.join("e.csv")),
        "--meta",
        p(&d.join("p.csv")),
        "--model",
        p(&d.join("m.json")),
        "--out",
        p(&d.join("f.csv")),
        "--rank",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let forecasts = fs::read_to_string(d.join("f.csv")).unwrap();
    let mut lines = forecasts.lines().skip(1);
    for (id, spend) in rows {
        for (m, v) in spend.iter().enumerate() {
            let line = lines.next().unwrap();
            let f: Vec<&str> = line.split(',').collect();
            assert_eq!((f[0], f[1], f[3]), (id, m.to_string().as_str(), "true"));
            assert!((f[2].parse::<f64>().unwrap() - v).abs() <= 1e-9, "{line}");
        }
    }
}

#[test]
fn forecast_reuses_a_fitted_model() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, &["--projects", "30", "--horizon", "24"]);
    let (data, meta) = (d.join("expenses.csv"), d.join("projects.csv"));
    let fit = tsmc(&[
        "fit",
        "--data",
        p(&data),
        "--meta",
        p(&meta),
        "--model",
        p(&d.join("model.json")),
        "--out",
        p(&d.join("fit.csv")),
    ]);
    assert!(fit.status.success());
    let forecast = tsmc(&[
        "forecast",
        "--data",
        p(&data),
        "--meta",
        p(&meta),
        "--model",
        p(&d.join("model.json")),
        "--out",
        p(&d.join("again.csv")),
    ]);
    assert!(forecast.status.success());
    assert!(stdout(&forecast).contains("30 projects over 24 months"));
    // The fit's Z is exactly the Z update of its final factors.
    assert_eq!(
        fs::read(d.join("fit.csv")).unwrap(),
        fs::read(d.join("again.csv")).unwrap()
    );

    fs::write(d.join("garbage.json"), "{\"m\": 1}").unwrap();
    let bad = tsmc(&[
        "forecast",
        "--data",
        p(&data),
        "--meta",
        p(&meta),
        "--model",
        p(&d.join("garbage.json")),
        "--out",
        p(&d.join("x.csv")),
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn evaluate_scores_every_withheld_cell() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, &["--projects", "40", "--horizon", "20"]);
    let report = d.join("report.json");
    let args = |cutoff: &'static str| {
        vec![
            "evaluate".to_string(),
            "--data".into(),
            p(&d.join("truth.csv")).into(),
            "--meta".into(),
            p(&d.join("projects.csv")).into(),
            "--out".into(),
            p(&report).into(),
            "--cutoff".into(),
            cutoff.into(),
        ]
    };
    let run = |a: Vec<String>| Command::new(env!("CARGO_BIN_EXE_tsmc")).args(a).output().unwrap();

    let out = run(args("12"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let parsed: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let methods: Vec<&str> = parsed
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["method"].as_str().unwrap())
        .collect();
    assert_eq!(methods, ["tsmc", "median", "knn"]);
    for r in parsed.as_array().unwrap() {
        assert_eq!(r["n_test"].as_u64(), Some(40 * 8));
        assert!(r["relative_rmse"].as_f64().unwrap() >= 0.0);
    }

    assert_eq!(run(args("0")).status.code(), Some(2));
    assert_eq!(run(args("99")).status.code(), Some(2));
    assert_eq!(run(args("2020-xx")).status.code(), Some(1));
}
