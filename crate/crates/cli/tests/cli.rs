use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn stgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stgen")).args(args).output().unwrap()
}

fn fx(rel: &str) -> String {
    fixtures().join(rel).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn check_clean_fixture_prints_nothing() {
    let o = stgen(&["check", &fx("cascade_tc1_fc5.st")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
}

#[test]
fn check_reports_lints_without_failing_and_errors_with_failing() {
    let o = stgen(&["check", &fx("lint/vendor_style.st")]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("lint[L001]"));
    assert!(text.contains("lint[L003]"));

    let o = stgen(&["check", "--format", "json", &fx("lint/type_error.st")]);
    assert_eq!(o.status.code(), Some(1));
    let line: serde_json::Value = serde_json::from_str(stdout(&o).lines().next().unwrap()).unwrap();
    assert_eq!(line["code"], "E002");
    assert_eq!(line["line"], 5);
}

#[test]
fn every_subcommand_has_help() {
    for sub in ["preprocess", "generate", "check", "simulate", "export"] {
        let o = stgen(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{sub}");
        assert!(stdout(&o).contains("Usage: stgen"), "{sub}");
    }
}

#[test]
fn bad_flags_exit_two_and_missing_files_exit_one() {
    assert_eq!(stgen(&["simulate", "--scans", "x", "a.st"]).status.code(), Some(2));
    assert_eq!(stgen(&["check", "/nonexistent/a.st"]).status.code(), Some(1));
    let o = stgen(&["generate", "--plan", &fx("plans/eastman.plan")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--mock"));
}

#[test]
fn live_mode_without_key_is_refused() {
    let out = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_stgen"))
        .args(["generate", "--plan", &fx("plans/eastman.plan"), "--live", "--endpoint", "http://127.0.0.1:9"])
        .args(["--model", "m", "--out"])
        .arg(out.path())
        .env_remove("STGEN_API_KEY")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("STGEN_API_KEY"));
}

#[test]
fn simulate_startup_writes_trace() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().to_string_lossy().into_owned();
    let o = stgen(&[
        "simulate",
        &fx("startup.st"),
        "--entry",
        "Startup",
        "--scans",
        "6000",
        "--scenario",
        &fx("scenarios/startup.toml"),
        "--out",
        &dir,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.path().join("trace.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("scan,time_ms,Phase1,Phase2,Phase3,Step"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6000);
    assert_eq!(rows[1199], "1199,119900,1,0,0,1");
    assert_eq!(rows[1200], "1200,120000,0,1,0,2");
    assert_eq!(rows[3000], "3000,300000,0,0,1,3");
    let run: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(run["status"], "ok");
}

#[test]
fn simulate_rejects_unknown_entry_and_bad_scenario() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().to_string_lossy().into_owned();
    let o = stgen(&["simulate", &fx("startup.st"), "--entry", "Nope", "--scans", "1", "--out", &dir]);
    assert_eq!(o.status.code(), Some(1));
    let o = stgen(&[
        "simulate",
        &fx("startup.st"),
        "--entry",
        "Startup",
        "--scans",
        "1",
        "--scenario",
        &fx("scenarios/interlock_ramp.toml"),
        "--out",
        &dir,
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown variable"));
}

#[test]
fn preprocess_writes_tiles_and_index() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().to_string_lossy().into_owned();
    let o = stgen(&["preprocess", &fx("images/eastman.png"), "--tile", "128", "--overlap", "32", "--out", &dir]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let index: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("tiles/eastman.tiles.json")).unwrap()).unwrap();
    // 320 x 200 with stride 96: columns at 0, 96, 192; rows at 0, 72
    assert_eq!(index["cols"], 3);
    assert_eq!(index["rows"], 2);
    assert!(out.path().join("tiles/eastman_r1_c2.png").is_file());
    assert_eq!(stgen(&["preprocess", &fx("plans/eastman.plan"), "--out", &dir]).status.code(), Some(1));
}

#[test]
fn export_directory_and_refuse_broken_code() {
    let src = tempfile::tempdir().unwrap();
    for f in ["cascade_tc1_fc5.st", "interlock_t4750.st", "startup.st"] {
        fs::copy(fixtures().join(f), src.path().join(f)).unwrap();
    }
    let dir = src.path().to_string_lossy().into_owned();
    let o = stgen(&["export", &dir, "--name", "demo"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let xml = fs::read_to_string(src.path().join("project.xml")).unwrap();
    assert!(xml.contains(r#"<pou name="Startup" pouType="program">"#));

    fs::copy(fixtures().join("lint/type_error.st"), src.path().join("type_error.st")).unwrap();
    let o = stgen(&["export", &dir, "--name", "demo"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("refusing to export"));
}

#[test]
fn config_file_supplies_mock_and_output() {
    let work = tempfile::tempdir().unwrap();
    let cfg = work.path().join("stgen.toml");
    fs::write(
        &cfg,
        format!(
            "mock_script = {:?}\noutput_dir = \"run\"\nworkers = 1\n",
            fx("transcripts/dexpi.mock")
        ),
    )
    .unwrap();
    let o = stgen(&["--config", &cfg.to_string_lossy(), "generate", "--plan", &fx("plans/dexpi.plan")]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(work.path().join("run/st/PIC_4712_02.st").is_file());
    assert!(work.path().join("run/project/project.xml").is_file());
}
