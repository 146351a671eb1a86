use std::process::Command;

use swipt_relay::cli::{read_rows, ResultRow};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_swipt-relay"))
}

#[test]
fn sweep_writes_csv_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let st = bin()
        .args(["sweep", "--rho-db", "10:20:5", "--mode", "inst,stat", "--method", "exact", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(st.status.success());
    let rows: Vec<ResultRow> = read_rows(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 6);
    // grid-outer, mode-inner
    assert_eq!(rows[0].rho_db, 10.0);
    assert_eq!(rows[1].rho_db, 10.0);
    assert!(rows.iter().all(|r| r.value > 0.0 && r.value < 1.0));
}

#[test]
fn mc_sweep_is_seed_deterministic() {
    let run = |workers: &str| {
        let o = bin()
            .args(["sweep", "--rho-db", "15", "--samples", "20000", "--seed", "9", "--workers", workers])
            .output()
            .unwrap();
        assert!(o.status.success());
        o.stdout
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn bad_input_exits_2_and_creates_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    for args in [
        vec!["sweep", "--rho-db", "10:5:1"],
        vec!["sweep", "--mode", "nocsi", "--method", "exact"],
        vec!["sweep", "--samples", "0"],
        vec!["optimize-theta", "--mode", "nocsi"],
    ] {
        let o = bin().args(&args).arg("--out").arg(&out).output().unwrap();
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "), "{args:?}");
        assert!(!out.exists(), "{args:?}");
    }
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "modes = [\"instantaneous\"]\nmetric = \"capacity\"\nmethod = \"upper-bound\"\n\n[rho_db]\nstart = 0\nstop = 30\nstep = 10\n\n[params]\nn = 2\n",
    )
    .unwrap();
    let o = bin().args(["sweep", "--rho-db", "20", "--config"]).arg(&cfg).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_rows(o.stdout.as_slice()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].n_antennas, 2);
    assert_eq!(rows[0].rho_db, 20.0);

    std::fs::write(&cfg, "bogus = 1\n").unwrap();
    let o = bin().args(["sweep", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_fast_reports_each_check() {
    let o = bin().args(["verify", "--level", "fast"]).output().unwrap();
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().count(), 12, "{text}");
    let failed = text.lines().any(|l| l.contains("\tFAIL\t"));
    assert_eq!(o.status.code(), Some(if failed { 1 } else { 0 }));
}
