use serde_json::Value;
use std::process::{Command, Output};

fn tamlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tamlab")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = tamlab(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn csv_rows(args: &[&str]) -> Vec<csv::StringRecord> {
    let mut full = vec!["--format", "csv"];
    full.extend_from_slice(args);
    let out = tamlab(&full);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    csv::Reader::from_reader(out.stdout.as_slice()).records().map(Result::unwrap).collect()
}

#[test]
fn local_data_in_both_formats() {
    let doc = json(&["local", "--a4", "-3", "--a6", "-4"]);
    assert_eq!(doc["tamagawa"], 1);
    assert_eq!(doc["discriminant"], "-5184");
    let local = doc["local"].as_array().unwrap();
    let rows = csv_rows(&["local", "--a4", "-3", "--a6", "-4"]);
    assert_eq!(rows.len(), local.len());
    for (row, entry) in rows.iter().zip(local) {
        assert_eq!(row[0], entry["p"].to_string());
        assert_eq!(&row[1], entry["kodaira"].as_str().unwrap());
        assert_eq!(row[2], entry["cp"].to_string());
        assert_eq!(&row[1], "II");
    }

    let good = json(&["local", "--a4", "0", "--a6", "1", "--p", "5"]);
    assert_eq!(good["local"][0]["kodaira"], "I0");
    assert_eq!(good["local"][0]["cp"], 1);
}

#[test]
fn exact_density() {
    let doc = json(&["density", "--p", "2", "--c", "1"]);
    assert_eq!(doc["value"], "241/396");
}

#[test]
fn series_values_carry_error_bounds() {
    let rows = csv_rows(&["density", "--series", "--s", "-1"]);
    let v: f64 = rows[0][1].parse().unwrap();
    let err: f64 = rows[0][2].parse().unwrap();
    assert!((v - 1.8186).abs() < 1e-3 && err > 0.0 && err < 1e-4);

    let rows = csv_rows(&["density", "--m", "1"]);
    let v: f64 = rows[0][1].parse().unwrap();
    assert!((v - 0.5053).abs() < 1e-3);
}

#[test]
fn census_csv_projects_the_histogram() {
    let doc = json(&["census", "--x", "10000"]);
    assert_eq!(doc["n_total"], 1048);
    let rows = csv_rows(&["census", "--x", "10000", "--shards", "3"]);
    let hist = doc["tam_histogram"].as_object().unwrap();
    assert_eq!(rows.len(), hist.len());
    let mut total = 0u64;
    for row in &rows {
        assert_eq!(&row[0], "10000");
        assert_eq!(row[2], hist[&row[1]].to_string());
        assert_eq!(&row[3], "1048");
        total += row[2].parse::<u64>().unwrap();
    }
    assert_eq!(total, 1048);
}

#[test]
fn heights_falls_back_to_the_oracle() {
    let rows = csv_rows(&["heights", "--a4", "0", "--a6", "1", "--bound", "10"]);
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| &r[9] == "doubling-oracle"));
    // every rational point on y² = x³ + 1 is torsion
    assert!(rows.iter().all(|r| r[5].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn convenient_positivity() {
    let doc = json(&["convenient", "--a4", "-7", "--a6", "1", "--positivity"]);
    assert_eq!(doc["component_count"], 2);
    assert_eq!(doc["positivity"]["status"], "positive");
}

#[test]
fn verify_exact_suite_succeeds() {
    let doc = json(&["verify", "--suite", "exact"]);
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["criteria"].as_array().unwrap().len(), 5);
}

#[test]
fn output_file() {
    let dir = std::env::temp_dir().join(format!("tamlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("local.csv");
    let out = tamlab(&["--format", "csv", "--out", path.to_str().unwrap(), "local", "--a4", "-3", "--a6", "-4"]);
    assert!(out.status.success());
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("p,kodaira,cp"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn input_errors_exit_with_two() {
    for args in [
        &["local", "--a4", "0", "--a6", "0"][..],
        &["density", "--series", "--s", "-2"],
        &["census", "--x", "200000000"],
        &["local", "--a4", "x", "--a6", "1"],
    ] {
        assert_eq!(tamlab(args).status.code(), Some(2), "{args:?}");
    }
    let out = Command::new(env!("CARGO_BIN_EXE_tamlab"))
        .env("TAMLAB_THREADS", "0")
        .args(["census", "--x", "100"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
