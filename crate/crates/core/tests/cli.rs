use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use probmotion::data::load_motion_file;
use probmotion::model::Checkpoint;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_probmotion")).args(args).current_dir(dir).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = run(dir, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn fails_with(dir: &Path, args: &[&str], needle: &str) {
    let o = run(dir, args);
    assert!(!o.status.success(), "{args:?} should fail");
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.trim_end().lines().count(), 1, "diagnostic must be one line: {err}");
    assert!(err.contains(needle), "`{err}` lacks `{needle}`");
}

/// Small trained model plus calibration under `dir`.
fn trained(dir: &Path) {
    fs::write(dir.join("train.cfg"), "t_p=10\nt_f=5\nstride=10\nhidden_size=8\nepochs=1\n").unwrap();
    ok(dir, &["gen-data", "A", "1", "2", "60", "--out", "data"]);
    ok(dir, &["train", "--data", "data", "--config", "train.cfg", "--out", "run"]);
    ok(dir, &["calibrate", "--checkpoint", "run/model.ckpt", "--data", "data", "--n-samples", "4", "--out", "cal"]);
}

#[test]
fn gen_data_round_trip_and_determinism() {
    let t = tempfile::tempdir().unwrap();
    ok(t.path(), &["gen-data", "A", "1", "10", "200", "--out", "a"]);
    ok(t.path(), &["gen-data", "A", "1", "10", "200", "--out", "b"]);
    let mut names: Vec<_> = fs::read_dir(t.path().join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    let motions: Vec<_> = names.iter().filter(|n| n.to_string_lossy().ends_with(".motion")).collect();
    assert_eq!(motions.len(), 10);
    for n in motions {
        let seq = load_motion_file::<f64>(t.path().join("a").join(n)).unwrap();
        assert_eq!(seq.len(), 200);
        assert_eq!(fs::read(t.path().join("a").join(n)).unwrap(), fs::read(t.path().join("b").join(n)).unwrap());
    }
    assert!(t.path().join("a/manifest.txt").exists());
}

#[test]
fn unknown_family_fails_without_output() {
    let t = tempfile::tempdir().unwrap();
    fails_with(t.path(), &["gen-data", "Z", "1", "1", "10", "--out", "x"], "unknown synthetic family");
    assert!(!t.path().join("x").exists());
}

#[test]
fn rejected_window_reports_status() {
    let t = tempfile::tempdir().unwrap();
    trained(t.path());
    let ck = Checkpoint::<f64>::load(t.path().join("run/model.ckpt")).unwrap();
    fs::write(t.path().join("strict.txt"), format!("threshold=0 quantile=0.95 M=2 model_hash={}\n", ck.model_hash())).unwrap();
    let out = ok(
        t.path(),
        &["predict", "--checkpoint", "run/model.ckpt", "--calibration", "strict.txt", "--input", "data/synthA_s1_0000.motion", "--n-samples", "4", "--out", "p"],
    );
    assert!(out.contains("status=rejected"));
    assert!(!t.path().join("p/selection.csv").exists());
    assert!(t.path().join("p/samples.csv").exists());
    let summary = fs::read_to_string(t.path().join("p/summary.txt")).unwrap();
    assert!(summary.contains("selected_sample=-"));
}

#[test]
fn accepted_window_emits_selection() {
    let t = tempfile::tempdir().unwrap();
    trained(t.path());
    let ck = Checkpoint::<f64>::load(t.path().join("run/model.ckpt")).unwrap();
    fs::write(t.path().join("loose.txt"), format!("threshold=1e300 quantile=0.95 M=2 model_hash={}\n", ck.model_hash())).unwrap();
    let out = ok(
        t.path(),
        &["predict", "--checkpoint", "run/model.ckpt", "--calibration", "loose.txt", "--input", "data/synthA_s1_0000.motion", "--n-samples", "4", "--e-max", "100", "--out", "p"],
    );
    assert!(out.contains("status=accepted"));
    assert!(out.contains("trustworthy_length=5"));
    let sel = fs::read_to_string(t.path().join("p/selection.csv")).unwrap();
    assert_eq!(sel.lines().count(), 6);
    let samples = fs::read_to_string(t.path().join("p/samples.csv")).unwrap();
    assert_eq!(samples.lines().count(), 1 + 4 * 5 * 17);
}

#[test]
fn evaluate_rows_follow_method_order() {
    let t = tempfile::tempdir().unwrap();
    trained(t.path());
    ok(
        t.path(),
        &["evaluate", "--checkpoint", "run/model.ckpt", "--calibration", "cal/calibration.txt", "--data", "data", "--n-samples", "4", "--milestones", "200", "--methods", "zerovel+fmp+fmp_umd+fmp_umd_oms", "--out", "e"],
    );
    let csv = fs::read_to_string(t.path().join("e/report.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "method,train_set,test_set,det_pct,mpjpe_200,accepted,rejected");
    let methods: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(methods, ["zerovel", "fmp", "fmp_umd", "fmp_umd_oms"]);
    for l in &lines[1..] {
        let f: Vec<&str> = l.split(',').collect();
        let (acc, rej): (usize, usize) = (f[5].parse().unwrap(), f[6].parse().unwrap());
        assert_eq!(acc + rej, 10);
    }
}

#[test]
fn gated_evaluation_needs_matching_calibration() {
    let t = tempfile::tempdir().unwrap();
    trained(t.path());
    fs::write(t.path().join("other.txt"), "threshold=1 quantile=0.95 M=2 model_hash=00ff\n").unwrap();
    fails_with(
        t.path(),
        &["evaluate", "--checkpoint", "run/model.ckpt", "--calibration", "other.txt", "--data", "data", "--out", "e"],
        "does not match",
    );
    fails_with(t.path(), &["evaluate", "--checkpoint", "run/model.ckpt", "--data", "data", "--methods", "fmp_umd", "--out", "e"], "calibration");
    assert!(!t.path().join("e").exists());
    fails_with(t.path(), &["predict", "--checkpoint", "missing.ckpt", "--input", "data/synthA_s1_0000.motion", "--out", "p"], "missing.ckpt");
    fs::write(t.path().join("bad.ckpt"), "PMCKPT v0\n").unwrap();
    fails_with(t.path(), &["predict", "--checkpoint", "bad.ckpt", "--input", "data/synthA_s1_0000.motion", "--out", "p"], "incompatible checkpoint");
}

fn max_field(csv: &str) -> f64 {
    csv.lines().skip(1).map(|l| l.split(',').nth(4).unwrap().parse::<f64>().unwrap()).fold(0.0, f64::max)
}

#[test]
fn plan_beats_zero_iterations() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("scene.txt"), "start=0 0 0\ngoal=2 0 0\nT_r=30\ngaussian=1 0.05 0 0.15\nsafety_radius=0.15\n").unwrap();
    fs::write(t.path().join("zero.cfg"), "max_iters=0\n").unwrap();
    ok(t.path(), &["plan", "--scene", "scene.txt", "--out", "opt"]);
    ok(t.path(), &["plan", "--scene", "scene.txt", "--config", "zero.cfg", "--out", "zero"]);
    let opt = fs::read_to_string(t.path().join("opt/plan.csv")).unwrap();
    let zero = fs::read_to_string(t.path().join("zero/plan.csv")).unwrap();
    assert_eq!(opt.lines().next().unwrap(), "step,x,y,z,field_value,cost_running");
    assert_eq!(opt.lines().count(), 31);
    assert!(max_field(&opt) < max_field(&zero));
    let log = fs::read_to_string(t.path().join("opt/plan_log.csv")).unwrap();
    let costs: Vec<f64> = log.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(costs.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn malformed_scene_is_one_line_error() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("scene.txt"), "start=0 0 0\ngoal=2 0\nT_r=30\n").unwrap();
    fails_with(t.path(), &["plan", "--scene", "scene.txt", "--out", "o"], "malformed scene");
    assert!(!t.path().join("o").exists());
}

#[test]
fn plan_from_prediction_and_export() {
    let t = tempfile::tempdir().unwrap();
    trained(t.path());
    fs::write(t.path().join("scene.txt"), "start=0.4 -1 1\ngoal=0.4 1 1\nT_r=12\nmax_iters=20\n").unwrap();
    ok(
        t.path(),
        &["plan", "--scene", "scene.txt", "--checkpoint", "run/model.ckpt", "--input", "data/synthA_s1_0001.motion", "--n-samples", "4", "--e-max", "100", "--out", "hp"],
    );
    ok(t.path(), &["export-plot", "--input", "hp/plan.csv", "--out", "plot"]);
    let long = fs::read_to_string(t.path().join("plot/plan_long.csv")).unwrap();
    assert!(long.starts_with("series,t_ms,value\n"));
    assert_eq!(long.lines().count(), 1 + 12 * 5);
    ok(t.path(), &["export-plot", "--input", "run/loss_curve.csv", "--out", "plot"]);
}

#[test]
fn convert_csv_to_motion() {
    let t = tempfile::tempdir().unwrap();
    let mut csv = String::from("a,b,c,d,e,f\n");
    for k in 0..10 {
        csv.push_str(&format!("{k}000,0,0,1000,2000,{k}\n"));
    }
    fs::write(t.path().join("clip.csv"), csv).unwrap();
    ok(t.path(), &["convert", "--input", "clip.csv", "--scale", "0.001", "--joints", "1", "--label", "walking", "--out", "m"]);
    let seq = load_motion_file::<f64>(t.path().join("m/walking.motion")).unwrap();
    assert_eq!(seq.len(), 5);
    assert_eq!(seq.frame_rate_hz, 25.0);
    assert_eq!(seq.frames[1].coords(), &[1.0, 2.0, 0.002]);
}
