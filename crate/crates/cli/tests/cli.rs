use std::fs;
use std::path::Path;
use std::process::Command;

use guidedplan_cli::{load_config, run, ConfigError, Mode, RunConfig, RunOptions, METRICS_HEADER};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_guidedplan"))
}

const TINY_TIGER: &[&str] = &[
    "domain=tiger",
    "search.scenarios=10",
    "search.depth=3",
    "search.max_horizon=8",
    "search.trials=10",
    "actor.particles=100",
    "actor.max_steps=10",
    "net.trunk=16",
    "net.head_hidden=8",
    "net.value_scale=100",
    "learner.batch_size=16",
    "budget=120",
    "eval.interval=60",
    "eval.episodes=3",
    "episodes=4",
    "epochs=2",
];

fn tiny(mode: Mode, out: &Path, extra: &[&str]) -> RunOptions {
    let sets: Vec<String> = TINY_TIGER.iter().chain(extra).map(|s| s.to_string()).collect();
    RunOptions {
        mode,
        config: load_config(None, &sets, Some(5)).unwrap(),
        out: out.to_path_buf(),
        single_thread: true,
    }
}

#[test]
fn config_errors_name_their_line() {
    let mut c = RunConfig::default();
    let text = "# comment\nseed = 4\nsearch.depht = 3\n";
    assert_eq!(
        c.apply_text(text, "run.cfg").unwrap_err(),
        ConfigError::Line {
            source_name: "run.cfg".into(),
            line: 3,
            message: "unknown key `search.depht`".into()
        }
    );
    assert_eq!(c.seed, 4);
    let err = c.apply_text("budget = lots", "x").unwrap_err().to_string();
    assert_eq!(err, "x line 1: expected a number, got `lots`");
    assert!(c.apply_text("just words", "x").unwrap_err().to_string().contains("line 1"));
    let err = c
        .apply_overrides(&["seed=1".into(), "actor.modes=exploit,wander".into()])
        .unwrap_err();
    assert_eq!(err.to_string(), "--set 2: unknown actor mode `wander`");
    assert!(RunConfig::default().validate().is_ok());
}

#[test]
fn manifest_echo_parses_back() {
    let mut c = RunConfig::default();
    c.apply_overrides(&["net.trunk=32,16".into(), "actor.modes=explore,on_policy".into(), "search.trials=0".into()])
        .unwrap();
    let mut again = RunConfig::default();
    for (k, v) in c.entries() {
        if v != "none" && v != "default" {
            again.set(k, &v).unwrap();
        }
    }
    assert_eq!(again, c);
}

#[test]
fn eval_without_checkpoint_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eval");
    let status = bin()
        .args(["eval", "--set", "domain=tiger", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(!status.success());
    assert!(!out.exists());
    let status = bin()
        .args(["eval", "--set", "checkpoint=/nonexistent/step-1.ckpt", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(!status.success());
    assert!(!out.exists());
}

#[test]
fn bad_config_file_exits_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "seed = 1\n\nsearch.trials = -4\n").unwrap();
    let out = bin().arg("plan").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("line 3"), "{stderr}");
}

#[test]
fn oracle_check_command_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["oracle-check", "--set", "oracle.seeds=3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 3 * 4 * 2);
    assert!(metrics.lines().skip(1).all(|l| l.ends_with(",1")));
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("mode = oracle-check") && manifest.ends_with("status = complete\n"));
}

#[test]
fn plan_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run(&tiny(Mode::Plan, &a, &[])).unwrap();
    run(&tiny(Mode::Plan, &b, &[])).unwrap();
    let ma = fs::read(a.join("metrics.csv")).unwrap();
    assert_eq!(ma, fs::read(b.join("metrics.csv")).unwrap());
    let text = String::from_utf8(ma).unwrap();
    assert!(text.starts_with(METRICS_HEADER));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn closed_loop_training_writes_artifacts_and_checkpoints_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ssl");
    let report = run(&tiny(Mode::TrainSsl, &out, &[])).unwrap();
    assert_eq!(report.tuples, 120);
    let curves = fs::read_to_string(out.join("curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + 2 * 2);
    for step in [60, 120] {
        assert!(out.join(format!("checkpoints/step-{step}.ckpt")).is_file());
    }
    let ck = out.join("checkpoints/step-120.ckpt");
    let ck_set = format!("checkpoint={}", ck.display());
    let e1 = run(&tiny(Mode::Eval, &dir.path().join("e1"), &[&ck_set])).unwrap();
    let e2 = run(&tiny(Mode::Eval, &dir.path().join("e2"), &[&ck_set])).unwrap();
    assert_eq!(e1.summaries, e2.summaries);
    assert!(e1.summary("guided").is_some() && e1.summary("policy").is_some());
    let guided = run(&tiny(Mode::Plan, &dir.path().join("p"), &[&ck_set])).unwrap();
    assert!(guided.summary("guided").is_some());
}

#[test]
fn reinforcement_and_open_loop_modes_run() {
    let dir = tempfile::tempdir().unwrap();
    let rl = dir.path().join("rl");
    let r = run(&tiny(Mode::TrainRl, &rl, &[])).unwrap();
    assert_eq!(r.tuples, 120);
    let text = fs::read_to_string(rl.join("checkpoints/step-120.ckpt")).unwrap();
    assert!(text.contains("network q0_target"));

    let open = dir.path().join("open");
    let r = run(&tiny(Mode::TrainOpenSsl, &open, &[])).unwrap();
    assert_eq!(r.tuples, 120);
    let dataset = open.join("dataset.txt");
    assert!(dataset.is_file());
    let again = dir.path().join("open2");
    let set = format!("dataset={}", dataset.display());
    let r2 = run(&tiny(Mode::TrainOpenSsl, &again, &[&set])).unwrap();
    assert_eq!(r.summaries, r2.summaries);
    assert!(!again.join("dataset.txt").exists());
}

#[test]
fn concurrent_training_spends_the_budget() {
    let dir = tempfile::tempdir().unwrap();
    let mut opts = tiny(Mode::TrainSsl, dir.path(), &["actors=2", "eval.interval=0"]);
    opts.single_thread = false;
    let r = run(&opts).unwrap();
    assert_eq!(r.tuples, 120);
}
