use std::fs;
use std::process::{Command, Output};

const HEADER: &str =
    "scheme,M,K,snr_db,trials,nmse_mean,nmse_median,leakage_mean,aligned_rank,analytic_nmse,dof_slope";

fn aircomp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aircomp"))
        .args(args)
        .env_remove("CI")
        .env_remove("AIRCOMP_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn body(text: &str) -> Vec<String> {
    text.lines().filter(|l| !l.starts_with('#')).map(String::from).collect()
}

const RUN: &[&str] = &[
    "run", "--antennas", "4", "--devices", "10", "--snr-db", "0,10,20,30,40", "--trials", "200",
    "--seed", "7", "--scheme", "sia",
];

#[test]
fn run_writes_one_row_per_snr_point() {
    let o = aircomp(RUN);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("# tool: sia-aircomp"));
    assert!(text.contains("# config: seed = 7"));
    let rows = body(&text);
    assert_eq!(rows[0], HEADER);
    assert_eq!(rows.len(), 6);
    for row in &rows[1..] {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f.len(), 11);
        assert_eq!(&f[..3], &["sia", "4", "10"]);
        assert_eq!(f[4], "200");
        assert_eq!(f[8], "2");
        // 12 significant digits in scientific notation.
        assert_eq!(f[5].split('e').next().unwrap().trim_start_matches('-').len(), 13);
    }
    // Re-running gives the same body.
    assert_eq!(body(&stdout(&aircomp(RUN))), rows);
}

#[test]
fn single_antenna_is_rejected() {
    let o = aircomp(&["run", "--antennas", "1", "--devices", "3", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("M=1 yields zero AirComp DoF"));
}

#[test]
fn invalid_flags_exit_2() {
    assert_eq!(aircomp(&["run", "--scheme", "ia"]).status.code(), Some(2));
    assert_eq!(aircomp(&["run", "--snr-db", ""]).status.code(), Some(2));
    assert_eq!(aircomp(&["run", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(aircomp(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn ci_mode_requires_seed() {
    let o = Command::new(env!("CARGO_BIN_EXE_aircomp"))
        .args(["run", "--trials", "2", "--snr-db", "0,10"])
        .env("CI", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_aircomp"))
        .args(["run", "--trials", "2", "--snr-db", "0,10", "--seed", "4"])
        .env("CI", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# scenario\nantennas = 5\ndevices = 3\nsnr_db_grid = 0, 20\ntrials = 20\nseed = 9\nscheme = no_ia\n",
    )
    .unwrap();
    let out = dir.path().join("out.csv");
    let o = aircomp(&[
        "run", "--config", cfg.to_str().unwrap(), "--devices", "4", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains(&format!("# outputs: {}", out.display())));
    let rows = body(&text);
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("no_ia,5,4,"));

    fs::write(&cfg, "antennas: 5\n").unwrap();
    assert_eq!(aircomp(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn json_output() {
    let o = aircomp(&[
        "run", "--antennas", "4", "--devices", "2", "--snr-db", "0,10", "--trials", "10", "--seed", "3",
        "--format", "json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["manifest"]["config"]["antennas"], 4);
    assert_eq!(v["points"].as_array().unwrap().len(), 2);
    assert_eq!(v["points"][0]["scheme"], "sia");
    assert!(v["dof_slope"].as_f64().is_some());
}

#[test]
fn compare_table() {
    let o = aircomp(&["compare", "--antennas-list", "4,5", "--devices-list", "3"]);
    assert!(o.status.success());
    let rows = body(&stdout(&o));
    assert_eq!(rows[0], "scheme,M,K,streams,efficiency_num,efficiency_den");
    assert!(rows.contains(&"sia,4,3,2,1,2".to_string()));
    assert!(rows.contains(&"conventional_ia,4,3,1,1,4".to_string()));
    assert!(rows.contains(&"sia,5,3,2,2,5".to_string()));
    assert_eq!(rows.len(), 5);

    assert_eq!(aircomp(&["compare", "--antennas-list", "4", "--devices-list", ""]).status.code(), Some(2));
    assert_eq!(aircomp(&["compare", "--antennas-list", "x", "--devices-list", "1"]).status.code(), Some(2));
}

#[test]
fn plot_from_run_output() {
    let dir = tempfile::tempdir().unwrap();
    let sia = dir.path().join("sia.csv");
    let no_ia = dir.path().join("no_ia.csv");
    for (path, scheme) in [(&sia, "sia"), (&no_ia, "no_ia")] {
        let o = aircomp(&[
            "run", "--antennas", "4", "--devices", "2", "--snr-db", "0,10,20,30,40", "--trials", "20",
            "--seed", "5", "--scheme", scheme, "--out", path.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    let svg = dir.path().join("one.svg");
    let o = aircomp(&["plot", "--in", sia.to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert!(o.status.success());
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));
    assert_eq!(text.matches("<polyline").count(), 1);
    let pts = text.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
    assert_eq!(pts.split_whitespace().count(), 5);

    let merged = dir.path().join("merged.csv");
    let joined = fs::read_to_string(&sia).unwrap() + &fs::read_to_string(&no_ia).unwrap();
    fs::write(&merged, joined).unwrap();
    let o = aircomp(&["plot", "--in", merged.to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(&svg).unwrap().matches("<polyline").count(), 2);

    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let o = aircomp(&["plot", "--in", empty.to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn workers_env_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_aircomp"))
        .args(["run", "--trials", "2", "--snr-db", "0,10", "--seed", "1"])
        .env("AIRCOMP_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
