use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use plrank::dynamic_model::{simulate_dynamic_dataset, SimulationConfig};
use plrank::io::{read_chains, EpochKey, RankingData};
use plrank::static_model::predictive_new_item_prob;
use plrank::PosteriorChain;

fn plrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plrank"))
        .args(args)
        .env_remove("PLRANK_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn path(dir: &Path, p: &str) -> String {
    dir.join(p).to_string_lossy().into_owned()
}

#[test]
fn missing_data_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = plrank(&["fit", "--data", &path(dir.path(), "nope.csv"), "--out", &path(dir.path(), "o")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn malformed_rows_report_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = path(dir.path(), "d.csv");
    fs::write(&data, "epoch,rank,item\n1,1,a\n1,1,b\n").unwrap();
    let out = plrank(&["fit", "--data", &data, "--out", &path(dir.path(), "o")]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("d.csv:3:"), "{err}");
}

#[test]
fn unknown_config_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = path(dir.path(), "d.csv");
    let cfg = path(dir.path(), "c.json");
    fs::write(&data, "epoch,rank,item\n1,1,a\n1,2,b\n").unwrap();
    fs::write(&cfg, r#"{"iterations": 10, "burnin": 5}"#).unwrap();
    let out = plrank(&["fit", "--data", &data, "--config", &cfg, "--out", &path(dir.path(), "o")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn burn_in_must_leave_draws() {
    let dir = tempfile::tempdir().unwrap();
    let data = path(dir.path(), "d.csv");
    fs::write(&data, "epoch,rank,item\n1,1,a\n1,2,b\n").unwrap();
    let out = plrank(&[
        "fit", "--data", &data, "--iterations", "10", "--burn-in", "10", "--out", &path(dir.path(), "o"),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_plrank"))
        .args(["simulate", "--model", "static", "--alpha", "3", "--epochs", "4", "--list-len", "3"])
        .env("PLRANK_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let data = RankingData::read_csv(&dir.path().join("data.csv")).unwrap();
    assert_eq!(data.lists.len(), 4);
    assert!(data.lists.iter().all(|l| l.len() == 3));
}

#[test]
fn diagnose_reports_json() {
    let out = plrank(&["diagnose", "--suite", "psi-kappa"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["suite"], "psi-kappa");
    assert_eq!(v["passed"], true);
    assert!(!v["checks"].as_array().unwrap().is_empty());
    assert_eq!(plrank(&["diagnose", "--suite", "bogus"]).status.code(), Some(2));
}

#[test]
fn static_fit_reports_new_item_probability() {
    let dir = tempfile::tempdir().unwrap();
    let data = path(dir.path(), "d.csv");
    fs::write(&data, "epoch,rank,item\n1,1,x\n1,2,y\n1,3,z\n").unwrap();
    let out = plrank(&[
        "fit", "--model", "static", "--data", &data, "--iterations", "400", "--burn-in", "100", "--chains", "2",
        "--seed", "3", "--out", &path(dir.path(), "o"),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, chains) = read_chains(&dir.path().join("o/chain.jsonl")).unwrap();
    assert_eq!(header.items, ["x", "y", "z"]);
    let pooled = PosteriorChain::pooled(&chains).unwrap();
    let expect = pooled
        .draws
        .iter()
        .map(|d| predictive_new_item_prob(&d.epochs[0].weights, d.epochs[0].unseen))
        .sum::<f64>()
        / pooled.len() as f64;
    let post: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("o/posterior.json")).unwrap()).unwrap();
    let got = post["epochs"][0]["new_item_probability"].as_f64().unwrap();
    assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
    assert_eq!(post["draws"], 600);
    let summary = fs::read_to_string(dir.path().join("o/summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().collect();
    assert_eq!(rows[0], "epoch,item,mean,q025,q975");
    assert_eq!(rows.len(), 5);
    assert!(rows[4].starts_with("all,__unseen__,"));
    let means: f64 = rows[1..].iter().map(|r| r.split(',').nth(2).unwrap().parse::<f64>().unwrap()).sum();
    assert!((means - 1.0).abs() < 1e-9);
}

#[test]
fn long_synthetic_series_round_trips() {
    let sim = SimulationConfig {
        epochs: 200,
        lists_per_epoch: 1,
        list_len: 6,
        tau: 1.0,
    };
    let mut rng = plrank::rng_stream(7, 0);
    let ds = simulate_dynamic_dataset(&sim, 3.0, &[5.0; 199], &mut rng).unwrap();
    let epochs = (0..200).map(|i| EpochKey::Index(1000 + 7 * i)).collect();
    let lists = ds.rankings.into_iter().map(|mut l| l.remove(0)).collect();
    let data = RankingData::from_lists(epochs, lists).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("series.csv");
    data.write_csv(&file).unwrap();
    let back = RankingData::read_csv(&file).unwrap();
    assert_eq!(back, data);
    assert_eq!(back.gaps(plrank::io::TimeUnit::Days), vec![7.0; 199]);

    let out = plrank(&[
        "fit", "--model", "dynamic", "--data", &file.to_string_lossy(), "--iterations", "30", "--burn-in", "10",
        "--out", &path(dir.path(), "o"),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, chains) = read_chains(&dir.path().join("o/chain.jsonl")).unwrap();
    assert_eq!(header.epochs.len(), 200);
    assert_eq!(header.items, back.labels);
    assert_eq!(chains[0].len(), 20);
}
