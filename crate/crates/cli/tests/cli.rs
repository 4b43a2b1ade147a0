use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use m2ar_cli::script_for;
use m2ar_core::arwfml::names;
use m2ar_core::bundle_io::serialize_bundle;
use m2ar_core::engine::Scenario;
use m2ar_core::fixture::{color_brick_mutants, color_brick_scenario};
use m2ar_core::meta2::Bundle;

fn m2ar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_m2ar")).args(args).output().unwrap()
}

fn with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_m2ar"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let o = m2ar(&["fixture", "color-brick", "--out", s(dir.path())]);
        assert_eq!(o.status.code(), Some(0));
        Self { dir }
    }

    fn bundle(&self) -> PathBuf {
        self.dir.path().join("color-brick.m2ar.json")
    }

    fn scenario(&self) -> PathBuf {
        self.dir.path().join("color-brick.scenario.json")
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn run(&self, scenario: &Path, extra: &[&str]) -> (Output, String) {
        let (bundle, trace, snap) = (self.bundle(), self.path("trace.jsonl"), self.path("snapshot.json"));
        let _ = std::fs::remove_file(&trace);
        let mut args = vec![
            "run",
            s(&bundle),
            "--scenario",
            s(scenario),
            "--trace",
            s(&trace),
            "--snapshot",
            s(&snap),
        ];
        args.extend_from_slice(extra);
        let o = m2ar(&args);
        let text = std::fs::read_to_string(&trace).unwrap_or_default();
        (o, text)
    }
}

#[test]
fn validate_exit_codes() {
    let f = Fixture::new();
    let o = m2ar(&["validate", s(&f.bundle())]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "");

    let v003 = color_brick_mutants().into_iter().find(|m| m.code == "V003").unwrap();
    let p = f.write("v003.m2ar.json", &serialize_bundle(&v003.bundle));
    let o = m2ar(&["validate", s(&p)]);
    assert_eq!(o.status.code(), Some(1));
    let lines: Vec<String> = stdout(&o).lines().map(str::to_owned).collect();
    assert_eq!(lines.len(), 1);
    assert!(lines[0].starts_with("error V003 "), "{lines:?}");

    let p = f.write("junk.json", "not json at all");
    assert_eq!(m2ar(&["validate", s(&p)]).status.code(), Some(2));
    assert_eq!(m2ar(&["validate", s(&f.path("missing.json"))]).status.code(), Some(2));
}

#[test]
fn warnings_alone_do_not_fail_validation() {
    let f = Fixture::new();
    let v011 = color_brick_mutants().into_iter().find(|m| m.code == "V011").unwrap();
    let p = f.write("v011.m2ar.json", &serialize_bundle(&v011.bundle));
    let o = m2ar(&["validate", s(&p)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("warning V011 "));
}

#[test]
fn run_exit_codes_follow_the_final_phase() {
    let f = Fixture::new();
    let (o, trace) = f.run(&f.scenario(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let last = trace.lines().last().unwrap();
    assert!(
        last.contains("\"kind\":\"workflow_completed\"") && last.contains("\"t\":9.0"),
        "{last}"
    );

    let empty = f.write("empty.json", r#"{"stop_t": 10.0, "events": []}"#);
    let (o, trace) = f.run(&empty, &[]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("awaiting origin"));
    assert_eq!(trace, "");

    let (o, trace) = f.run(&f.scenario(), &["--stop-t", "4"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(trace.matches("statechange_applied").count(), 1);

    let early = f.write(
        "early.json",
        r#"{"stop_t": 4.0, "events": [{"kind": "detect", "t": 1.0, "detectable": "det-origin-marker"}]}"#,
    );
    let (o, trace) = f.run(&early, &[]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(trace.matches("statechange_applied").count(), 1);
}

#[test]
fn run_rejects_bad_inputs() {
    let f = Fixture::new();
    let unsorted = f.write(
        "unsorted.json",
        r#"{"stop_t": 4.0, "events": [{"kind": "advance", "t": 2.0}, {"kind": "advance", "t": 1.0}]}"#,
    );
    assert_eq!(f.run(&unsorted, &[]).0.status.code(), Some(2));
    assert_eq!(f.run(&f.scenario(), &["--flowscene", "nope"]).0.status.code(), Some(2));
    assert_eq!(f.run(&f.scenario(), &["--stop-t", "-1"]).0.status.code(), Some(2));
    assert_eq!(m2ar(&["run", s(&f.bundle())]).status.code(), Some(2));

    let v007 = color_brick_mutants().into_iter().find(|m| m.code == "V007").unwrap();
    std::fs::write(f.bundle(), serialize_bundle(&v007.bundle)).unwrap();
    let (o, _) = f.run(&f.scenario(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("V007"));
}

#[test]
fn unwritable_outputs_are_runtime_errors() {
    let f = Fixture::new();
    let o = m2ar(&[
        "run",
        s(&f.bundle()),
        "--scenario",
        s(&f.scenario()),
        "--trace",
        s(&f.path("no-such-dir/trace.jsonl")),
        "--snapshot",
        s(&f.path("snap.json")),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn fixture_output_is_reproducible() {
    let a = Fixture::new();
    let b = Fixture::new();
    for name in ["color-brick.m2ar.json", "color-brick.scenario.json"] {
        assert_eq!(
            std::fs::read(a.path(name)).unwrap(),
            std::fs::read(b.path(name)).unwrap()
        );
    }
    let scenario = Scenario::parse(&std::fs::read(a.scenario()).unwrap()).unwrap();
    assert_eq!(scenario, color_brick_scenario());
    assert_eq!(
        m2ar(&["fixture", "lego", "--out", s(a.dir.path())]).status.code(),
        Some(2)
    );
}

#[test]
fn inspect_lists_models() {
    let f = Fixture::new();
    let o = m2ar(&["inspect", s(&f.bundle())]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("5 models"));
    assert_eq!(text.matches(" Statechange ").count(), 3);
    assert!(text.lines().all(|l| l == "5 models" || l.ends_with(", 0 unresolved")));

    let o = m2ar(&["inspect", s(&f.bundle()), "--model", "flowscene"]);
    assert!(stdout(&o).contains("  Condition: 4\n"));
    assert!(stdout(&o).contains("  StatechangeRef: 3\n"));
    assert_eq!(
        m2ar(&["inspect", s(&f.bundle()), "--model", "nope"]).status.code(),
        Some(2)
    );

    let empty = f.write("empty.m2ar.json", &serialize_bundle(&Bundle::new(names::METAMODEL)));
    assert_eq!(stdout(&m2ar(&["inspect", s(&empty)])), "0 models\n");
    assert_eq!(m2ar(&["inspect", s(&f.path("absent"))]).status.code(), Some(2));
}

#[test]
fn step_reports_phases() {
    let f = Fixture::new();
    let o = with_stdin(
        &["step", s(&f.bundle())],
        "advance 5\ndetect det-origin-marker\nwave\nquit\nadvance 9\n",
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines
        .iter()
        .any(|l| l.starts_with("phase: AwaitOrigin (awaiting origin det-origin-marker) at t=5")));
    assert!(lines.iter().any(|l| l.starts_with("phase: Running")));
    assert!(lines.iter().any(|l| l.starts_with("unknown command `wave`")));
    // Nothing after quit is read.
    assert!(!text.contains("t=9"));
}

#[test]
fn scripted_step_session_reproduces_run() {
    let f = Fixture::new();
    let (_, run_trace) = f.run(&f.scenario(), &[]);
    let run_snapshot = std::fs::read(f.path("snapshot.json")).unwrap();
    let trace = f.path("step-trace.jsonl");
    let snapshot = f.path("step-snapshot.json");
    let script = format!(
        "{}trace {}\nsnapshot {}\n",
        script_for(&color_brick_scenario()),
        s(&trace),
        s(&snapshot)
    );
    let o = with_stdin(&["step", s(&f.bundle())], &script);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(trace).unwrap(), run_trace);
    assert_eq!(std::fs::read(snapshot).unwrap(), run_snapshot);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(m2ar(&[]).status.code(), Some(2));
    assert_eq!(m2ar(&["frobnicate"]).status.code(), Some(2));
}
