use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_medbounds"))
}

fn asset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../assets")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert!(o.status.success(), "{args:?} failed: {}", stderr(&o));
    stdout(&o)
}

fn json(args: &[&str]) -> Vec<Value> {
    let mut a = args.to_vec();
    a.extend(["--format", "json"]);
    match serde_json::from_str(&ok(&a)).unwrap() {
        Value::Array(rows) => rows,
        other => panic!("expected an array, got {other}"),
    }
}

fn num(row: &Value, key: &str) -> f64 {
    row[key]
        .as_f64()
        .unwrap_or_else(|| panic!("{key} missing in {row}"))
}

#[test]
fn fit_reports_estimate_se_and_p_value_columns() {
    let config = asset("analysis.toml");
    let out = ok(&["fit", "--config", config.to_str().unwrap()]);
    assert!(out.contains("Outcome model (n = 3270"));
    assert!(out.contains("Mediator model (n = 3270"));
    let header = out.lines().nth(1).unwrap();
    assert_eq!(
        header.split_whitespace().collect::<Vec<_>>(),
        ["term", "est.", "s.e.", "p-value"]
    );
    for term in ["Intercept", "x", "m", "BMI", "Gender"] {
        assert!(
            out.lines().any(|l| l.starts_with(term)),
            "no row for {term}"
        );
    }

    let csv = ok(&[
        "fit",
        "--config",
        config.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert!(csv.starts_with("table,term,est.,s.e.,p-value\n"));
    assert_eq!(csv.lines().count(), 1 + 5 + 4);
}

#[test]
fn empty_data_is_a_user_error() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let o = run(&["fit", "--data", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!stderr(&o).is_empty());

    std::fs::write(&empty, "Y,M,X\n").unwrap();
    let o = run(&["fit", "--data", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no rows"), "{}", stderr(&o));
}

#[test]
fn unparseable_row_reports_its_number() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    std::fs::write(&data, "Y,M,X\n0,1,3\n1,0,2\n1,maybe,4\n").unwrap();
    let o = run(&["fit", "--data", data.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("row 3"), "{}", stderr(&o));
}

#[test]
fn separation_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("sep.csv");
    let mut text = String::from("Y,M,X\n");
    for i in 0..40 {
        let x = i as f64 / 4.0;
        text.push_str(
            &format!("{},{},{x}\n", i % 3 == 0, u8::from(x > 5.0))
                .replace("true", "1")
                .replace("false", "0"),
        );
    }
    std::fs::write(&data, text).unwrap();
    let o = run(&["fit", "--data", data.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(
        run(&["curve", "--x", "50", "--alpha", "1.5"]).status.code(),
        Some(1)
    );
    assert_eq!(run(&["curve", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(run(&["effects", "--x", "50"]).status.code(), Some(1));
    let models = asset("published_models.json");
    let o = run(&["curve", "--models", models.to_str().unwrap(), "--x", "50"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("profiles must be given"));
    assert!(run(&["--help"]).status.success());
}

#[test]
fn saved_models_refit_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let config = asset("analysis.toml");
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for path in [&a, &b] {
        ok(&[
            "fit",
            "--config",
            config.to_str().unwrap(),
            "--save-models",
            path.to_str().unwrap(),
        ]);
    }
    let (ja, jb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ja, jb);

    let fitted = ok(&[
        "bounds",
        "--config",
        config.to_str().unwrap(),
        "--x",
        "40,80",
        "--format",
        "csv",
    ]);
    let reused = ok(&[
        "bounds",
        "--config",
        config.to_str().unwrap(),
        "--models",
        a.to_str().unwrap(),
        "--x",
        "40,80",
        "--format",
        "csv",
    ]);
    assert_eq!(fitted, reused);
}

#[test]
fn published_models_reproduce_male_bounds_at_fifty() {
    let models = asset("published_models.json");
    let rows = json(&[
        "curve",
        "--models",
        models.to_str().unwrap(),
        "--profile",
        "Gender=1",
        "--profile",
        "BMI=28.5",
        "--x",
        "50",
    ]);
    assert_eq!(rows.len(), 1);
    let r = &rows[0];
    assert_eq!(num(r, "x_star"), 10.0);
    assert!((num(r, "nde_lower") - 0.5796).abs() < 5e-4);
    assert!((num(r, "nde_upper") - 1.0206).abs() < 5e-4);
    assert!((num(r, "nie_lower") + 0.1216).abs() < 5e-4);
    assert!((num(r, "nie_upper") - 0.4068).abs() < 5e-4);
}

#[test]
fn curve_rows_follow_input_order_with_null_row_at_reference() {
    let models = asset("published_models.json");
    let rows = json(&[
        "curve",
        "--models",
        models.to_str().unwrap(),
        "--profile",
        "Gender=0",
        "--profile",
        "BMI=25.05",
        "--x",
        "90,10,30,160",
    ]);
    let xs: Vec<f64> = rows.iter().map(|r| num(r, "x")).collect();
    assert_eq!(xs, [90.0, 10.0, 30.0, 160.0]);
    let reference = &rows[1];
    for e in ["nde", "nie", "te"] {
        assert_eq!(num(reference, e), 0.0);
        assert!(num(reference, &format!("{e}_lower")) < 0.0);
        assert!(num(reference, &format!("{e}_upper")) > 0.0);
    }
}

#[test]
fn curve_rows_satisfy_bound_invariants() {
    let config = asset("analysis.toml");
    let rows = json(&["curve", "--config", config.to_str().unwrap()]);
    assert_eq!(rows.len(), 2 * 17);
    assert_eq!(rows[0]["profile"], "female");
    assert_eq!(rows[17]["profile"], "male");
    for r in &rows {
        for e in ["nde", "nie", "te"] {
            let get = |s: &str| num(r, &format!("{e}{s}"));
            assert!(
                get("_lower") <= get("") + 1e-12 && get("") <= get("_upper") + 1e-12,
                "{r}"
            );
            assert!(
                get("_ui_lower") <= get("_lower") && get("_upper") <= get("_ui_upper"),
                "{r}"
            );
        }
        let te_sum = num(r, "nde") + num(r, "nie");
        assert!((num(r, "te") - te_sum).abs() < 1e-12);
    }
}

#[test]
fn default_profiles_group_by_binary_covariate() {
    let data = asset("cun_like.csv");
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(
        &config,
        format!(
            "data = {:?}\n[columns]\noutcome = \"Y\"\nmediator = \"M\"\nexposure = \"X\"\ncovariates = [\"Gender\", \"BMI\"]\n",
            data.to_str().unwrap()
        ),
    )
    .unwrap();
    let rows = json(&["effects", "--config", config.to_str().unwrap(), "--x", "50"]);
    let labels: Vec<&str> = rows
        .iter()
        .map(|r| r["profile"].as_str().unwrap())
        .collect();
    assert_eq!(labels, ["Gender=0", "Gender=1"]);
    for r in &rows {
        assert!((20.0..35.0).contains(&num(r, "BMI")));
    }
}

#[test]
fn reference_outside_support_warns_but_succeeds() {
    let config = asset("analysis.toml");
    let o = run(&[
        "effects",
        "--config",
        config.to_str().unwrap(),
        "--x",
        "50",
        "--x-star",
        "400",
    ]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("outside the observed exposure range"));
}

#[test]
fn identical_inputs_give_identical_bytes() {
    let config = asset("analysis.toml");
    let args = [
        "bounds",
        "--config",
        config.to_str().unwrap(),
        "--format",
        "json",
    ];
    assert_eq!(ok(&args), ok(&args));
}

#[test]
fn simulate_is_seeded() {
    let a = ok(&["simulate", "--n", "200", "--seed", "5"]);
    assert_eq!(a, ok(&["simulate", "--n", "200", "--seed", "5"]));
    assert_ne!(a, ok(&["simulate", "--n", "200", "--seed", "6"]));
    assert!(a.starts_with("Y,M,X,Gender,BMI\n"));
    assert_eq!(a.lines().count(), 201);
    assert_eq!(run(&["simulate", "--n", "0"]).status.code(), Some(1));
}

#[test]
fn bundled_dataset_matches_its_generator() {
    let regenerated = ok(&["simulate", "--n", "3270", "--seed", "2024"]);
    assert_eq!(
        regenerated,
        std::fs::read_to_string(asset("cun_like.csv")).unwrap()
    );
}

#[test]
fn simulate_from_scm_file() {
    let scm = asset("scm_example.toml");
    let out = ok(&["simulate", "--scm", scm.to_str().unwrap(), "--n", "50"]);
    assert!(out.starts_with("Y,M,X,Gender\n"));
}

#[test]
fn quick_validation_passes_and_is_reproducible() {
    let a = ok(&["validate", "--quick", "--seed", "11", "--format", "csv"]);
    assert!(a.lines().skip(1).all(|l| l.starts_with("PASS,")), "{a}");
    assert_eq!(
        a,
        ok(&["validate", "--quick", "--seed", "11", "--format", "csv"])
    );
}
