use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn asid() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_asid"));
    cmd.env_remove("ASID_LOG");
    cmd
}

fn run(args: &[&str]) -> Output {
    asid().args(args).output().expect("spawn asid")
}

fn golden() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn help_everywhere() {
    for args in [
        vec!["--help"],
        vec!["simulate", "--help"],
        vec!["serve", "--help"],
        vec!["sync", "--help"],
        vec!["report", "--help"],
        vec!["sizing", "--help"],
        vec!["mission", "--help"],
        vec!["mission", "gen", "--help"],
        vec!["mission", "validate", "--help"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"));
    }
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(&["fly"]).status.code(), Some(1));
    assert_eq!(run(&["simulate"]).status.code(), Some(1));
    assert_eq!(
        run(&["sync", "--host", "x", "--port", "notaport", "--out", "o"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn bad_config_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"enviroment": {}}"#).unwrap();
    let out = run(&[
        "simulate",
        "--config",
        p(&cfg),
        "--out",
        p(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("enviroment"));
    let missing = run(&["simulate", "--config", "/nonexistent.json", "--out", "o"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn ceiling_violation_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"mission": {"target_alt": 8000}}"#).unwrap();
    let out = run(&[
        "simulate",
        "--config",
        p(&cfg),
        "--out",
        p(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!dir.path().join("o").join("air.csv").exists());
}

#[test]
fn sync_without_server_exit_4() {
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "sync",
        "--host",
        "127.0.0.1",
        "--port",
        &port.to_string(),
        "--out",
        p(dir.path()),
        "--timeout",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(!dir.path().join("air.csv").exists());
}

#[test]
fn malformed_logs_exit_5() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(golden().join("ground.csv"), dir.path().join("ground.csv")).unwrap();
    fs::write(
        dir.path().join("air.csv"),
        "01.06.2021,10:00:29,x,1,1,1,1,\r\n",
    )
    .unwrap();
    let out = run(&[
        "report",
        "--in",
        p(dir.path()),
        "--out",
        p(&dir.path().join("r")),
    ]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 1"));
}

#[test]
fn sizing_reference_example() {
    let out = run(&["sizing", "--json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let req = v["required_static_thrust"].as_f64().unwrap();
    assert!((req / 5586.0 - 1.0).abs() < 0.015, "{req}");
    assert_eq!(v["drift"].as_array().unwrap().len(), 4);

    let text = run(&["sizing"]);
    let s = String::from_utf8(text.stdout).unwrap();
    for key in [
        "thrust/weight",
        "service ceiling",
        "required static thrust",
        "max progressive speed",
        "endurance",
        "expected flights",
        "Bft 12",
    ] {
        assert!(s.contains(key), "{key} missing from\n{s}");
    }
}

#[test]
fn mission_gen_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("m.csv");
    assert!(
        run(&["mission", "gen", "--target", "35", "--out", p(&file)])
            .status
            .success()
    );
    let ok = run(&["mission", "validate", p(&file)]);
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("16 photos"));

    let text = fs::read_to_string(&file).unwrap();
    let last_land = text.rfind("LAND").unwrap();
    fs::write(&file, &text[..last_land]).unwrap();
    let bad = run(&["mission", "validate", p(&file)]);
    assert_eq!(bad.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("expected LAND"));
}

#[test]
fn seed_override_changes_values_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, run(&["config"]).stdout).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    assert!(run(&["simulate", "--config", p(&cfg), "--out", p(&a)])
        .status
        .success());
    assert!(run(&["simulate", "--config", p(&cfg), "--out", p(&b)])
        .status
        .success());
    assert!(run(&[
        "simulate",
        "--config",
        p(&cfg),
        "--out",
        p(&c),
        "--seed",
        "9"
    ])
    .status
    .success());
    let read = |d: &Path, f: &str| fs::read_to_string(d.join(f)).unwrap();
    assert_eq!(read(&a, "air.csv"), read(&b, "air.csv"));
    assert_eq!(read(&a, "trajectory.csv"), read(&b, "trajectory.csv"));
    assert_ne!(read(&a, "ground.csv"), read(&c, "ground.csv"));
    assert_eq!(
        read(&a, "air.csv").lines().count(),
        read(&c, "air.csv").lines().count()
    );
    assert_eq!(read(&a, "ground.csv").lines().count(), 6);
    assert_eq!(read(&a, "air.csv").lines().count(), 7);
    assert!(a.join("photos.json").exists());
}

#[test]
fn loopback_pipeline_reproduces_golden_report() {
    let dir = tempfile::tempdir().unwrap();
    let card = dir.path().join("card");
    let synced = dir.path().join("synced");
    let out = dir.path().join("report");
    let sim = run(&[
        "simulate",
        "--config",
        p(&golden().join("config.json")),
        "--out",
        p(&card),
    ]);
    assert!(
        sim.status.success(),
        "{}",
        String::from_utf8_lossy(&sim.stderr)
    );

    let mut server = asid()
        .args([
            "serve",
            "--sdcard",
            p(&card),
            "--port",
            "0",
            "--max-connections",
            "2",
        ])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(server.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let port = line.trim().rsplit(':').next().unwrap().to_string();

    let sync = run(&[
        "sync",
        "--host",
        "127.0.0.1",
        "--port",
        &port,
        "--out",
        p(&synced),
    ]);
    assert!(
        sync.status.success(),
        "{}",
        String::from_utf8_lossy(&sync.stderr)
    );
    assert!(server.wait().unwrap().success());
    // serving ground.csv clears both logs from the card
    assert!(!card.join("air.csv").exists() && !card.join("ground.csv").exists());
    assert_eq!(
        fs::read(synced.join("air.csv")).unwrap(),
        fs::read(golden().join("air.csv")).unwrap()
    );

    let rep = run(&[
        "report",
        "--in",
        p(&synced),
        "--out",
        p(&out),
        "--generated-at",
        "2021-06-01T12:00:00",
    ]);
    assert!(rep.status.success());
    assert_eq!(
        fs::read_to_string(out.join("report.txt")).unwrap(),
        fs::read_to_string(golden().join("report.txt")).unwrap()
    );
    assert_eq!(
        fs::read_to_string(out.join("report.json")).unwrap(),
        fs::read_to_string(golden().join("report.json")).unwrap()
    );
    for svg in [
        "height_temperature.svg",
        "height_humidity.svg",
        "height_pressure.svg",
    ] {
        assert!(out.join("plots").join(svg).exists());
    }
}
