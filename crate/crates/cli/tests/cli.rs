//! Behavior tests for the `satsched` binary: exit codes, output files,
//! manifests, and config overrides.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn exe() -> &'static str {
    env!("CARGO_BIN_EXE_satsched")
}

fn bundled_instance() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../instances/bundled50.txt")
}

fn run(args: &[&str]) -> Output {
    Command::new(exe()).args(args).output().unwrap()
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = vec!["--out-dir", dir.to_str().unwrap()];
    all.extend_from_slice(args);
    run(&all)
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process was signaled")
}

#[test]
fn help_and_version_exit_zero() {
    let help = run(&["--help"]);
    assert_eq!(code(&help), 0);
    let text = stdout(&help);
    for cmd in ["gen-windows", "train", "validate", "baseline", "compare"] {
        assert!(text.contains(cmd), "help lacks {cmd}:\n{text}");
    }
    assert_eq!(code(&run(&["--version"])), 0);
}

#[test]
fn bad_arguments_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let inst = bundled_instance();
    let inst = inst.to_str().unwrap();

    // Unknown flag and unknown subcommand, straight from the parser.
    assert_eq!(code(&run(&["--frobnicate"])), 64);
    assert_eq!(code(&run(&["defragment"])), 64);

    // Missing --instance where one is required.
    let out = run_in(dir.path(), &["baseline", "--method", "fcfs"]);
    assert_eq!(code(&out), 64);
    assert!(stderr(&out).contains("usage error"), "{}", stderr(&out));

    // Unknown baseline method.
    let out = run_in(
        dir.path(),
        &[
            "--instance",
            inst,
            "baseline",
            "--method",
            "simulated-annealing",
        ],
    );
    assert_eq!(code(&out), 64);
    assert!(
        stderr(&out).contains("simulated-annealing"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn missing_files_are_runtime_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "--instance",
            "/no/such/instance.txt",
            "baseline",
            "--method",
            "fcfs",
        ],
    );
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("error"), "{}", stderr(&out));

    let out = run_in(
        dir.path(),
        &["gen-windows", "--targets", "/no/such/targets.txt"],
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn validate_exit_code_follows_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let inst = bundled_instance();
    let inst = inst.to_str().unwrap();

    // Rejecting everything is a valid (empty) schedule.
    let empty = dir.path().join("empty.sched");
    fs::write(&empty, format!("{}\n", "0".repeat(55))).unwrap();
    let out = run_in(
        dir.path(),
        &["--instance", inst, "validate", empty.to_str().unwrap()],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(
        stdout(&out).contains("valid=true reward=0"),
        "{}",
        stdout(&out)
    );

    // Accepting everything violates overlap, maneuver, and storage limits.
    let all = dir.path().join("all.sched");
    fs::write(&all, format!("{}\n", "1".repeat(55))).unwrap();
    let out = run_in(
        dir.path(),
        &["--instance", inst, "validate", all.to_str().unwrap()],
    );
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.contains("valid=false"), "{text}");
    assert!(text.contains("violation"), "{text}");

    // A malformed decision file is a runtime error, not a verdict.
    let short = dir.path().join("short.sched");
    fs::write(&short, "010\n").unwrap();
    let out = run_in(
        dir.path(),
        &["--instance", inst, "validate", short.to_str().unwrap()],
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn gen_windows_reruns_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let targets = dir.path().join("targets.txt");
    fs::write(&targets, "1 4 10.0 35.0\n2 7 -12.5 48.0\n3 2 25.0 61.5\n").unwrap();

    let gen = |out_file: &Path, sub: &Path| {
        let out = run_in(
            sub,
            &[
                "gen-windows",
                "--targets",
                targets.to_str().unwrap(),
                "--out",
                out_file.to_str().unwrap(),
            ],
        );
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        fs::read(out_file).unwrap()
    };
    let sub_a = dir.path().join("a");
    let sub_b = dir.path().join("b");
    fs::create_dir_all(&sub_a).unwrap();
    fs::create_dir_all(&sub_b).unwrap();
    let first = gen(&dir.path().join("inst_a.txt"), &sub_a);
    let second = gen(&dir.path().join("inst_b.txt"), &sub_b);
    assert_eq!(first, second);

    let manifest = fs::read_to_string(sub_a.join("gen-windows.manifest.json")).unwrap();
    assert!(
        manifest.contains("\"command\": \"gen-windows\""),
        "{manifest}"
    );
}

#[test]
fn baseline_writes_a_schedule_the_validator_accepts() {
    let dir = tempfile::tempdir().unwrap();
    let inst = bundled_instance();
    let inst = inst.to_str().unwrap();

    let out = run_in(
        dir.path(),
        &["--instance", inst, "baseline", "--method", "fcfs"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(
        stdout(&out).contains("method=fcfs reward=39"),
        "{}",
        stdout(&out)
    );

    let sched = dir.path().join("fcfs.sched");
    assert!(sched.exists());
    let out = run_in(
        dir.path(),
        &["--instance", inst, "validate", sched.to_str().unwrap()],
    );
    assert_eq!(code(&out), 0);
    assert!(
        stdout(&out).contains("valid=true reward=39"),
        "{}",
        stdout(&out)
    );
    assert!(dir.path().join("baseline.manifest.json").exists());
}

#[test]
fn config_file_overrides_reach_training() {
    let dir = tempfile::tempdir().unwrap();
    let inst = bundled_instance();
    let inst = inst.to_str().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "episodes = 3   # keep the run short\nhidden = 8\n").unwrap();

    let out = run_in(
        dir.path(),
        &[
            "--instance",
            inst,
            "--config",
            cfg.to_str().unwrap(),
            "train",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let curve = fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert_eq!(
        curve.lines().count(),
        4,
        "header plus three episodes:\n{curve}"
    );

    let manifest = fs::read_to_string(dir.path().join("train.manifest.json")).unwrap();
    assert!(manifest.contains("\"episodes\": \"3\""), "{manifest}");
    assert!(manifest.contains("\"hidden\": \"8\""), "{manifest}");

    // A typo in the config file fails loudly instead of training anyway.
    fs::write(&cfg, "episode = 3\n").unwrap();
    let out = run_in(
        dir.path(),
        &[
            "--instance",
            inst,
            "--config",
            cfg.to_str().unwrap(),
            "train",
        ],
    );
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("episode"), "{}", stderr(&out));
}

#[test]
fn compare_writes_one_csv_row_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let inst = bundled_instance();
    let inst = inst.to_str().unwrap();

    let out = run_in(
        dir.path(),
        &[
            "--instance",
            inst,
            "compare",
            "--methods",
            "fcfs,greedy,random",
            "--seeds",
            "3",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = stdout(&out);
    for method in ["fcfs", "greedy", "random"] {
        assert!(table.contains(method), "{table}");
    }

    // fcfs and greedy are seed-independent: one row each, then three random rows.
    let csv = fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6, "{csv}");
    assert!(csv.starts_with("method,seed,reward,steps\n"), "{csv}");
    assert!(csv.contains("fcfs,,39,"), "{csv}");

    let out = run_in(
        dir.path(),
        &[
            "--instance",
            inst,
            "compare",
            "--methods",
            "bogo",
            "--seeds",
            "1",
        ],
    );
    assert_eq!(code(&out), 64);
}
