use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use qpathnet::meter::{reading_distribution, GridOptions};
use qpathnet::paths::{amplitude_distribution, DEFAULT_MERGE_TOL};
use qpathnet::scenarios::preset;

fn qpathnet(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qpathnet"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = qpathnet(args, &[]);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn three_box_weak_marginals() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["run", "preset:three-box", s(dir.path())]);
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary["weak_marginals"], serde_json::json!([1.0, 1.0]));
    for k in 0..2 {
        let mean = summary["meters"][k]["mean_reading"].as_f64().unwrap();
        assert!((mean - 1.0).abs() < 1e-3, "{mean}");
    }
    assert!(dir.path().join("distribution_2.csv").exists());
}

#[test]
fn minus_hundred_sweep_ends_near_limit() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["run", "preset:minus-hundred", "--mode", "sweep", "--out", s(dir.path())]);
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("width,mean,abs_error"));
    let last: Vec<f64> = lines.last().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(last[0], 10000.0);
    assert!(((last[1] + 100.0) / 100.0).abs() <= 0.05);
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary["monotone"], true);
    assert!((summary["limit"].as_f64().unwrap() + 100.0).abs() < 1e-9);
}

#[test]
fn non_hermitian_observable_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(
        &cfg,
        r#"{"system": {"dim": 2}, "pre_state": [1, 0], "post_state": [1, 0], "final_time": 2,
            "steps": [{"time": 1, "observable": {"matrix": [[1, [0, 1]], [0, 1]]}}],
            "run": {"mode": "exact"}}"#,
    )
    .unwrap();
    let out = qpathnet(&["run", s(&cfg), s(&dir.path().join("o"))], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("observable not Hermitian at steps[0]"));

    let out = qpathnet(&["run", "preset:no-such-thing"], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn forbidden_transition_exits_3_with_remedy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("forbidden.json");
    let h = std::f64::consts::FRAC_1_SQRT_2;
    fs::write(
        &cfg,
        format!(
            r#"{{"system": {{"dim": 2}}, "pre_state": [{h}, {h}], "post_state": [{h}, -{h}], "final_time": 2,
                "steps": [{{"time": 1, "observable": {{"matrix": [[1, 0], [0, 0]]}}}}],
                "functionals": {{"A": {{"eigenvalue_at_step": 0}}}},
                "meters": [{{"functional": "A", "profile": {{"shape": "gaussian", "width": 1}}}}],
                "run": {{"mode": "exact"}}}}"#
        ),
    )
    .unwrap();
    let out = qpathnet(&["run", s(&cfg), s(&dir.path().join("o"))], &[]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("forbidden transition") && err.contains("choose pre/post-selected states"), "{err}");
}

#[test]
fn export_parse_run_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["difference", "three-box", "projector-strong"] {
        let cfg = dir.path().join(format!("{name}.json"));
        ok(&["export", &format!("preset:{name}"), "--out", s(&cfg)]);
        let (a, b) = (dir.path().join(format!("{name}-a")), dir.path().join(format!("{name}-b")));
        ok(&["run", &format!("preset:{name}"), "--mode", "exact", s(&a)]);
        ok(&["run", s(&cfg), "--mode", "exact", s(&b)]);
        let mut files: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
        files.sort();
        assert!(!files.is_empty());
        for f in files {
            assert_eq!(fs::read(a.join(&f)).unwrap(), fs::read(b.join(&f)).unwrap(), "{name}: {f:?}");
        }
    }
}

#[test]
fn cli_matches_in_process_engine() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["run", "preset:projector", "--mode", "exact", s(dir.path())]);
    let summary = json(&dir.path().join("summary.json"));
    let p = preset("projector").unwrap();
    let m = &p.meters[0];
    let dist = amplitude_distribution(&p.chain, &m.functional, DEFAULT_MERGE_TOL).unwrap();
    let grid = m.default_grid(&p.chain, &GridOptions::default()).unwrap();
    let reading = reading_distribution(&p.chain, m, &grid).unwrap();
    let meter = &summary["meters"][0];
    assert_eq!(meter["weak_value"][0].as_f64().unwrap(), dist.weak_value().unwrap().re);
    assert_eq!(meter["strong_mean"].as_f64().unwrap(), dist.strong_mean().unwrap());
    assert_eq!(meter["mean_reading"].as_f64().unwrap(), reading.mean().unwrap());
    assert_eq!(meter["norm"].as_f64().unwrap(), reading.norm);
}

#[test]
fn sampling_is_thread_count_independent() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, sub: &str| {
        let out = dir.path().join(sub);
        let o = qpathnet(
            &["run", "preset:projector-strong", "--mode", "sample", "--trials", "3000", "--seed", "42", s(&out)],
            &[("QPATHNET_THREADS", threads)],
        );
        assert!(o.status.success());
        fs::read(out.join("trials.csv")).unwrap()
    };
    let one = run("1", "t1");
    assert_eq!(one, run("4", "t4"));
    let text = String::from_utf8(one).unwrap();
    assert_eq!(text.lines().next(), Some("trial_id,xi_1,branch"));
    assert_eq!(text.lines().count(), 3001);

    let bad = qpathnet(&["presets"], &[("QPATHNET_THREADS", "zero")]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn classical_mode_writes_path_table() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["run", "preset:difference-contrast", "--mode", "classical", s(dir.path())]);
    let text = fs::read_to_string(dir.path().join("paths.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("path,route,receptacle,probability,F1"));
    assert_eq!(text.lines().count(), 9);
    let means = json(&dir.path().join("means.json"));
    let total: f64 = means["receptacle_probabilities"]
        .as_object()
        .unwrap()
        .values()
        .map(|v| v.as_f64().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn report_tables_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let (exact, sample, sweep, three) = (
        dir.path().join("exact"),
        dir.path().join("sample"),
        dir.path().join("sweep"),
        dir.path().join("three"),
    );
    ok(&["run", "preset:projector-strong", s(&exact)]);
    ok(&["run", "preset:projector-strong", "--mode", "sample", "--trials", "20000", "--seed", "3", s(&sample)]);
    ok(&["run", "preset:projector", "--mode", "sweep", s(&sweep)]);
    ok(&["run", "preset:three-box", s(&three)]);

    let plots = dir.path().join("plots");
    let out = ok(&[
        "report",
        s(&exact.join("summary.json")),
        s(&sample.join("summary.json")),
        s(&sweep.join("summary.json")),
        "--out",
        s(&plots),
    ]);
    let table = String::from_utf8(out.stdout).unwrap();
    for row in ["strong_mean", "weak_value_re", "weak_value_im", "norm", "z"] {
        assert!(table.contains(row), "{row} missing:\n{table}");
    }
    assert!(table.contains("0.666666666667"));

    let sweep_csv = fs::read_to_string(plots.join("projector_sweep.csv")).unwrap();
    assert_eq!(sweep_csv.lines().next(), Some("width,mean"));
    assert_eq!(sweep_csv.lines().count(), 5);
    assert!(plots.join("projector-strong_distribution.csv").exists());

    // z recomputed from the written numbers
    let cmp = fs::read_to_string(plots.join("projector-strong_comparison.csv")).unwrap();
    let row: Vec<f64> = cmp.lines().nth(1).unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    let z = (row[1] - row[2]) / row[3];
    assert!((z - row[4]).abs() < 1e-9 * z.abs().max(1.0));
    assert!(row[4].abs() < 3.0);

    let mixed = qpathnet(&["report", s(&exact.join("summary.json")), s(&three.join("summary.json"))], &[]);
    assert_eq!(mixed.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&mixed.stderr).contains("dimension"));
}

#[test]
fn verify_presets_pass() {
    for name in ["projector", "minus-hundred", "three-box"] {
        ok(&["verify", &format!("preset:{name}")]);
    }
}
