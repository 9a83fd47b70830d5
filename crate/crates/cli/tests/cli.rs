use std::path::Path;
use std::process::{Command, Output};

fn auxsic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_auxsic"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fig4_writes_csv_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let o = auxsic(&["fig4", "--trials", "4", "--sweep=-25", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("fig4.csv")).unwrap();
    assert!(csv.starts_with("nlos_power_dbm,model,residual_dbm,median_residual_dbm,upper_bound_dbm\n"));
    assert_eq!(csv.lines().count(), 4);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fig4.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 1);
    assert_eq!(meta["trials"], 4);
    assert_eq!(meta["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn output_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, workers) in [(&a, "1"), (&b, "3")] {
        let o = auxsic(&[
            "fig7a",
            "--trials",
            "6",
            "--sweep",
            "10",
            "--seed",
            "9",
            "--workers",
            workers,
            "--out",
            path(out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read(&a, "fig7a.csv"), read(&b, "fig7a.csv"));
    assert_eq!(read(&a, "fig7a.meta.json"), read(&b, "fig7a.meta.json"));
}

#[test]
fn empty_sweep_is_a_config_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "schema_version = 1\nexperiment = \"fig4\"\n[sweep]\nvalues = []\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = auxsic(&["fig4", "--config", path(&cfg), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sweep.values"));
    assert!(!out.exists());
}

#[test]
fn invalid_values_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "schema_version = 1\nexperiment = \"custom\"\n[sweep]\nparameter = \"doppler_hz\"\nvalues = [1.0]\n\
         [scenario]\npassive_suppression_db = -3.0\n",
    )
    .unwrap();
    let o = auxsic(&["run", "--config", path(&cfg), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("scenario.passive_suppression_db"));
}

#[test]
fn custom_sweep_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "schema_version = 1\nexperiment = \"custom\"\ntrials = 3\n[sweep]\nparameter = \"tx_power_dbm\"\n\
         values = [0.0, 10.0]\n[scenario]\nbase = \"scenario3\"\n[scenario.impairments]\nlna_distortion_dbc = -inf\n",
    )
    .unwrap();
    let o = auxsic(&["run", "--config", path(&cfg), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("custom.csv")).unwrap();
    assert!(csv.starts_with("tx_power_dbm,si_input_dbm,"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn mismatched_subcommand_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "schema_version = 1\nexperiment = \"fig3\"\n").unwrap();
    let o = auxsic(&["fig4", "--config", path(&cfg), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(auxsic(&["fig9"]).status.code(), Some(1));
    assert_eq!(auxsic(&["fig4", "--trials", "many"]).status.code(), Some(1));
    assert_eq!(auxsic(&["fig7a", "--scenario", "scenario9"]).status.code(), Some(1));
    assert_eq!(auxsic(&["--help"]).status.code(), Some(0));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let o = auxsic(&[
        "fig4",
        "--trials",
        "2",
        "--sweep=-25",
        "--out",
        path(&blocker.join("sub")),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
