use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn pnclab() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pnclab"));
    cmd.env_remove("PNCLAB_SEED");
    cmd
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is utf-8")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited with a code")
}

/// Writes the reference two-node line schedule used by several tests.
fn gen_line(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("line.json");
    let out = pnclab()
        .args(["gen", "line", "--nodes", "2", "--messages", "2"])
        .args(["--repetitions", "3", "--payload-len", "2"])
        .arg("--out")
        .arg(&path)
        .output()
        .expect("spawn pnclab");
    assert_eq!(code(&out), 0, "gen line failed: {}", stderr(&out));
    path
}

#[test]
fn gen_line_emits_a_valid_schedule() {
    let out = pnclab()
        .args(["gen", "line", "--nodes", "3", "--messages", "2"])
        .output()
        .expect("spawn pnclab");
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("stdout is JSON");
    assert_eq!(doc["n"], 3);
    assert_eq!(doc["k"], 2);
    let events = doc["events"].as_array().expect("events array");
    let generates = events.iter().filter(|e| e["type"] == "generate").count();
    let transmits = events.iter().filter(|e| e["type"] == "transmit").count();
    assert_eq!(generates, 2);
    assert_eq!(transmits, 4, "two hops, two repetitions each");
}

#[test]
fn gen_random_roundtrips_through_mincut() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("random.json");
    let out = pnclab()
        .args(["gen", "random", "--nodes", "4", "--messages", "2"])
        .args(["--events", "12", "--seed", "7"])
        .arg("--out")
        .arg(&path)
        .output()
        .expect("spawn pnclab");
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(path.is_file());

    let out = pnclab()
        .arg("mincut")
        .arg("--schedule")
        .arg(&path)
        .args(["--graph", "gmu", "--mu", "2"])
        .output()
        .expect("spawn pnclab");
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("# {"), "missing config comment: {text}");
    assert!(text.contains("node,tick,value"));
}

#[test]
fn mincut_profile_of_the_line_is_stable() {
    let dir = TempDir::new().unwrap();
    let path = gen_line(dir.path());

    let out = pnclab()
        .arg("mincut")
        .arg("--schedule")
        .arg(&path)
        .args(["--graph", "ginf"])
        .output()
        .expect("spawn pnclab");
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("\n1,2,1\n"), "first receiver copy should see one unit: {text}");
    assert!(text.contains("\n1,4,2\n"), "final receiver copy should see both messages: {text}");
}

#[test]
fn capped_mincut_respects_the_register_budget() {
    let dir = TempDir::new().unwrap();
    let path = gen_line(dir.path());

    let out = pnclab()
        .arg("mincut")
        .arg("--schedule")
        .arg(&path)
        .args(["--graph", "gacc", "--mu", "1"])
        .output()
        .expect("spawn pnclab");
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    for line in stdout(&out).lines().skip(2) {
        let value = line.split(',').nth(2).expect("value column");
        assert_eq!(value, "1", "every copy is throttled to one register: {line}");
    }
}

#[test]
fn run_trace_has_all_sections_and_decodes() {
    let dir = TempDir::new().unwrap();
    let path = gen_line(dir.path());

    let out = pnclab()
        .arg("run")
        .arg("--schedule")
        .arg(&path)
        .args(["--protocol", "pnc", "--field", "16", "--seed", "1"])
        .output()
        .expect("spawn pnclab");
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);

    assert!(text.contains("section,ranks"));
    assert!(text.contains("section,emissions"));
    assert!(text.contains("section,finals"));
    let emissions = text
        .lines()
        .skip_while(|l| *l != "section,emissions")
        .skip(2)
        .take_while(|l| !l.starts_with("section,"))
        .count();
    assert_eq!(emissions, 3, "one emission per transmission: {text}");
    assert!(text.contains("\n1,4,2,true\n"), "receiver should decode: {text}");
}

#[test]
fn seed_env_fallback_matches_the_flag() {
    let dir = TempDir::new().unwrap();
    let path = gen_line(dir.path());

    let flagged = pnclab()
        .arg("run")
        .arg("--schedule")
        .arg(&path)
        .args(["--protocol", "recomb", "--mu", "1", "--seed", "5"])
        .output()
        .expect("spawn pnclab");
    let env = pnclab()
        .arg("run")
        .arg("--schedule")
        .arg(&path)
        .args(["--protocol", "recomb", "--mu", "1"])
        .env("PNCLAB_SEED", "5")
        .output()
        .expect("spawn pnclab");
    assert_eq!(code(&flagged), 0, "stderr: {}", stderr(&flagged));
    assert_eq!(code(&env), 0, "stderr: {}", stderr(&env));
    assert_eq!(stdout(&flagged), stdout(&env));

    let bad = pnclab()
        .arg("run")
        .arg("--schedule")
        .arg(&path)
        .args(["--protocol", "recomb", "--mu", "1"])
        .env("PNCLAB_SEED", "not-a-number")
        .output()
        .expect("spawn pnclab");
    assert_eq!(code(&bad), 2, "unparseable env seed is a usage error");
}

#[test]
fn verify_simulate_reports_a_match() {
    let dir = TempDir::new().unwrap();
    let path = gen_line(dir.path());

    let out = pnclab()
        .args(["verify", "simulate"])
        .arg("--schedule")
        .arg(&path)
        .args(["--runs", "3"])
        .output()
        .expect("spawn pnclab");
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.matches("MATCH").count(), 3, "{text}");
}

#[test]
fn verify_cuts_and_all_pass_on_the_line() {
    let dir = TempDir::new().unwrap();
    let path = gen_line(dir.path());

    let out = pnclab()
        .args(["verify", "cuts"])
        .arg("--schedule")
        .arg(&path)
        .args(["--mu-list", "1,2,unbounded"])
        .output()
        .expect("spawn pnclab");
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("all layouts agree"));

    let out = pnclab()
        .args(["verify", "all"])
        .arg("--schedule")
        .arg(&path)
        .output()
        .expect("spawn pnclab");
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
}

#[test]
fn optimality_writes_report_and_trace() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("report.json");
    let trace = dir.path().join("trials.csv");

    let out = pnclab()
        .args(["verify", "optimality", "--protocol", "acc"])
        .args(["--trials", "20", "--workers", "2", "--seed", "9"])
        .args(["--n-max", "5", "--events-min", "5", "--events-max", "15"])
        .arg("--out")
        .arg(&report)
        .arg("--trace-csv")
        .arg(&trace)
        .output()
        .expect("spawn pnclab");
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("20/20 trials"), "{}", stdout(&out));

    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).expect("report JSON");
    assert_eq!(doc["trials"], 20);
    assert!(doc["success_rate"].as_f64().is_some());
    assert_eq!(doc["records"].as_array().map(Vec::len), Some(20));

    let csv = std::fs::read_to_string(&trace).unwrap();
    assert!(csv.contains("trial,seed"), "{csv}");
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 21);
}

#[test]
fn narrow_field_optimality_fails_the_threshold() {
    let out = pnclab()
        .args(["verify", "optimality", "--protocol", "pnc", "--field", "4"])
        .args(["--trials", "50", "--seed", "3", "--workers", "2"])
        .args(["--min-rate", "0.999"])
        .output()
        .expect("spawn pnclab");
    assert_eq!(code(&out), 1, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("below required"), "{}", stderr(&out));
}

#[test]
fn corrupt_schedule_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{ not json").unwrap();

    let out = pnclab()
        .arg("mincut")
        .arg("--schedule")
        .arg(&path)
        .args(["--graph", "ginf"])
        .output()
        .expect("spawn pnclab");
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
}

#[test]
fn invalid_schedule_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("zero-delay.json");
    std::fs::write(
        &path,
        r#"{"n":2,"k":1,"l":1,"events":[
            {"type":"generate","message":0,"origins":[{"node":0,"time":0}]},
            {"type":"transmit","sender":0,"time":1,"heads":[{"to":1,"delay":0}]}
        ]}"#,
    )
    .unwrap();

    let out = pnclab()
        .arg("mincut")
        .arg("--schedule")
        .arg(&path)
        .args(["--graph", "ginf"])
        .output()
        .expect("spawn pnclab");
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("delay"), "{}", stderr(&out));
}

#[test]
fn missing_schedule_file_is_an_io_error() {
    let out = pnclab()
        .arg("run")
        .args(["--schedule", "/nonexistent/path.json", "--protocol", "pnc"])
        .output()
        .expect("spawn pnclab");
    assert_eq!(code(&out), 3, "stderr: {}", stderr(&out));
}

#[test]
fn gen_rejects_impossible_parameters() {
    let out = pnclab()
        .args(["gen", "gossip", "--nodes", "3", "--messages", "2"])
        .args(["--rounds", "4", "--fanout", "5"])
        .output()
        .expect("spawn pnclab");
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
}
