use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use crate::cli::output::{Manifest, OutputDir};
use crate::cli::{CalibrateArgs, ConvertArgs, EvaluateArgs, GenDataArgs, PlanArgs, PredictArgs, TrainArgs};
use crate::data::{
    fit_normalization, format_motion, parse_motion, synth_generate, window_dataset, MotionSequence, Pose, SynthFamily,
    WindowPair,
};
use crate::eval::{evaluate as run_evaluation, render_csv, render_table, EnsembleErrorMode, EvalSettings, Method};
use crate::model::Checkpoint;
use crate::train::{train as run_training, TrainConfig};
use crate::trajectory::{
    collision_probability_profile, format_plan_csv, optimize, parse_scene, plan_cost, step_costs, UncertaintyField,
};
use crate::uncertainty::{
    calibration_scores, detect_unseen, epistemic_variance, select_and_truncate, threshold_from_scores, trustworthy_length,
    DetectorCalibration, Verdict,
};

const DEFAULT_STRIDE: usize = 10;

fn read(path: &Path, manifest: &mut Manifest) -> Result<Vec<u8>> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    manifest.input(path, &bytes);
    Ok(bytes)
}

fn read_text(path: &Path, manifest: &mut Manifest) -> Result<String> {
    String::from_utf8(read(path, manifest)?).map_err(|_| anyhow!("{} is not UTF-8 text", path.display()))
}

fn load_motion(path: &Path, manifest: &mut Manifest) -> Result<MotionSequence> {
    let text = read_text(path, manifest)?;
    parse_motion(&text).with_context(|| format!("in {}", path.display()))
}

/// Every `*.motion` file in `dir`, sorted by file name.
fn load_motion_dir(dir: &Path, manifest: &mut Manifest) -> Result<Vec<MotionSequence>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot list {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "motion"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .motion files in {}", dir.display());
    }
    paths.iter().map(|p| load_motion(p, manifest)).collect()
}

fn load_checkpoint(path: &Path, manifest: &mut Manifest) -> Result<(Checkpoint, String)> {
    let text = read_text(path, manifest)?;
    let ckpt = Checkpoint::from_text(&text).with_context(|| format!("incompatible checkpoint {}", path.display()))?;
    let hash = ckpt.model_hash();
    manifest.checkpoint_hash(&hash);
    Ok((ckpt, hash))
}

fn load_calibration(path: &Path, model_hash: &str, manifest: &mut Manifest) -> Result<DetectorCalibration> {
    let text = read_text(path, manifest)?;
    DetectorCalibration::from_record_checked(&text, model_hash).with_context(|| format!("calibration {}", path.display()))
}

fn kv_lines(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            l.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| anyhow!("config line {}: expected key=value", i + 1))
        })
        .collect()
}

fn windows(seqs: &[MotionSequence], t_p: usize, t_f: usize, stride: usize) -> Result<Vec<WindowPair>> {
    let mut out = Vec::new();
    for s in seqs {
        out.extend(window_dataset(s, t_p, t_f, stride)?);
    }
    Ok(out)
}

fn observed_window(seq: &MotionSequence, start: usize, t_p: usize) -> Result<MotionSequence> {
    if start + t_p > seq.len() {
        bail!("input has {} frames; the observed window needs frames {start}..{}", seq.len(), start + t_p);
    }
    Ok(seq.slice(start, start + t_p))
}

fn t_ms(frame: usize, rate: f64) -> f64 {
    frame as f64 * 1000.0 / rate
}

/// Seed of sequence `i` within a generated batch.
fn sequence_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(i as u64)
}

pub fn gen_data(a: GenDataArgs, argv: &[String]) -> Result<()> {
    let family: SynthFamily = a.family.parse()?;
    if a.n_sequences == 0 || a.n_frames == 0 {
        bail!("n_sequences and n_frames must be at least 1");
    }
    let mut m = Manifest::new("gen-data", argv);
    m.seed(a.seed);
    m.config([format!("family={}", family.label()), format!("n_sequences={}", a.n_sequences), format!("n_frames={}", a.n_frames)]);
    let mut out = OutputDir::create(&a.out)?;
    for i in 0..a.n_sequences {
        let seq: MotionSequence = synth_generate(family, sequence_seed(a.seed, i), a.n_frames)?;
        out.write(&format!("{}_s{}_{i:04}.motion", family.label(), a.seed), format_motion(&seq).as_bytes())?;
    }
    println!("wrote {} sequences of {} frames to {}", a.n_sequences, a.n_frames, a.out.display());
    m.finish(out)
}

pub fn convert(a: ConvertArgs, argv: &[String]) -> Result<()> {
    if !(a.rate > 0.0) || a.downsample == 0 || !(a.scale > 0.0) {
        bail!("rate and scale must be positive and downsample at least 1");
    }
    let mut m = Manifest::new("convert", argv);
    m.config([format!("rate={}", a.rate), format!("downsample={}", a.downsample), format!("scale={}", a.scale)]);
    let text = read_text(&a.input, &mut m)?;
    let subset: Option<Vec<usize>> = a
        .joints
        .as_deref()
        .map(|s| s.split(',').map(|t| t.trim().parse::<usize>().map_err(|_| anyhow!("bad joint index `{t}`"))).collect())
        .transpose()?;
    let mut frames = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let vals: std::result::Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse::<f64>()).collect();
        let vals = match vals {
            Ok(v) => v,
            Err(_) if frames.is_empty() && i == 0 => continue,
            Err(_) => bail!("row {}: non-numeric value", i + 1),
        };
        if vals.len() % 3 != 0 {
            bail!("row {}: {} values is not a multiple of 3", i + 1, vals.len());
        }
        let coords: Vec<f64> = match &subset {
            Some(js) => js
                .iter()
                .map(|&j| vals.get(3 * j..3 * j + 3).ok_or_else(|| anyhow!("row {}: joint {j} out of range", i + 1)))
                .collect::<Result<Vec<_>>>()?
                .concat(),
            None => vals,
        };
        frames.push(Pose::from_coords(coords.iter().map(|v| v * a.scale).collect())?);
    }
    let frames: Vec<Pose> = frames.into_iter().step_by(a.downsample).collect();
    let label = a.label.clone().unwrap_or_else(|| {
        a.input.file_stem().map(|s| s.to_string_lossy().replace(char::is_whitespace, "_")).unwrap_or_default()
    });
    let seq = MotionSequence::new(frames, a.rate / a.downsample as f64, label.clone())?;
    let mut out = OutputDir::create(&a.out)?;
    out.write(&format!("{label}.motion"), format_motion(&seq).as_bytes())?;
    println!("converted {} frames at {} Hz", seq.len(), seq.frame_rate_hz);
    m.finish(out)
}

pub fn train(a: TrainArgs, argv: &[String]) -> Result<()> {
    let mut m = Manifest::new("train", argv);
    let mut cfg = TrainConfig::default();
    if let Some(p) = &a.config {
        for (k, v) in kv_lines(&read_text(p, &mut m)?)? {
            cfg.set(&k, &v)?;
        }
    }
    for o in &a.overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| anyhow!("--set expects key=value, got `{o}`"))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = a.seed {
        cfg.rng_seed = s;
    }
    cfg.validate()?;
    m.seed(cfg.rng_seed);
    m.config(cfg.to_kv_lines());
    let train_seqs = load_motion_dir(&a.data, &mut m)?;
    let val_seqs = match &a.val {
        Some(d) => load_motion_dir(d, &mut m)?,
        None => Vec::new(),
    };
    let stats = fit_normalization(&train_seqs)?;
    let tr = windows(&train_seqs, cfg.t_p, cfg.t_f, cfg.stride)?;
    if tr.is_empty() {
        bail!("no training windows: every sequence is shorter than t_p + t_f = {}", cfg.t_p + cfg.t_f);
    }
    let va = windows(&val_seqs, cfg.t_p, cfg.t_f, cfg.stride)?;
    let mut out = OutputDir::create(&a.out)?;
    let outcome = run_training(&cfg, &stats, &tr, &va)?;
    let ckpt_text = outcome.checkpoint.to_text();
    out.write("model.ckpt", ckpt_text.as_bytes())?;
    out.write("loss_curve.csv", outcome.curve_csv().as_bytes())?;
    let hash = outcome.checkpoint.model_hash();
    m.checkpoint_hash(&hash);
    println!(
        "trained on {} windows ({} validation); best epoch {} of {}; model {hash}",
        tr.len(),
        va.len(),
        outcome.best_epoch,
        cfg.epochs
    );
    m.finish(out)
}

pub fn calibrate(a: CalibrateArgs, argv: &[String]) -> Result<()> {
    let mut m = Manifest::new("calibrate", argv);
    m.seed(a.seed);
    let (ckpt, hash) = load_checkpoint(&a.checkpoint, &mut m)?;
    let stride = a.stride.unwrap_or(DEFAULT_STRIDE);
    m.config([format!("n_samples={}", a.n_samples), format!("quantile={}", a.quantile), format!("stride={stride}")]);
    let seqs = load_motion_dir(&a.data, &mut m)?;
    let obs: Vec<MotionSequence> =
        windows(&seqs, ckpt.t_p, ckpt.t_f, stride)?.into_iter().map(|w| w.observed).collect();
    if obs.is_empty() {
        bail!("calibration set is empty: sequences are shorter than {} frames", ckpt.t_p + ckpt.t_f);
    }
    let scores = calibration_scores(&ckpt, &obs, a.n_samples, ckpt.t_f, a.seed)?;
    let calib = threshold_from_scores(&scores, a.quantile)?;
    let mut out = OutputDir::create(&a.out)?;
    out.write("calibration.txt", calib.to_record(&hash).as_bytes())?;
    let mut csv = String::from("window,scalar_eu\n");
    for (i, s) in scores.iter().enumerate() {
        writeln!(csv, "{i},{s}")?;
    }
    out.write("scores.csv", csv.as_bytes())?;
    println!("threshold {} at q={} over M={} windows", calib.threshold, a.quantile, calib.calibration_size);
    m.finish(out)
}

pub fn predict(a: PredictArgs, argv: &[String]) -> Result<()> {
    let mut m = Manifest::new("predict", argv);
    m.seed(a.seed);
    m.config([format!("n_samples={}", a.n_samples), format!("lambda={}", a.lambda), format!("e_max={}", a.e_max), format!("start={}", a.start)]);
    let (ckpt, hash) = load_checkpoint(&a.checkpoint, &mut m)?;
    let calib = a.calibration.as_deref().map(|p| load_calibration(p, &hash, &mut m)).transpose()?;
    let seq = load_motion(&a.input, &mut m)?;
    let obs = observed_window(&seq, a.start, ckpt.t_p)?;
    let rate = obs.frame_rate_hz;
    let ens = ckpt.mc_sample(&obs, a.n_samples, ckpt.t_f, a.seed)?;
    let eu = epistemic_variance(&ens)?;
    let verdict = calib.as_ref().map(|c| detect_unseen(&eu, c));

    let mut out = OutputDir::create(&a.out)?;
    let mut samples = String::from("sample,frame,t_ms,joint,x,y,z,sigma\n");
    for (i, mem) in ens.members.iter().enumerate() {
        for (t, (pose, sig)) in mem.mean_frames.iter().zip(&mem.sigma).enumerate() {
            for j in 0..pose.n_joints() {
                let p = pose.joint(j);
                writeln!(samples, "{i},{},{},{j},{},{},{},{}", t + 1, t_ms(t + 1, rate), p[0], p[1], p[2], sig[j])?;
            }
        }
    }
    out.write("samples.csv", samples.as_bytes())?;
    let mut eu_csv = String::from("frame,t_ms,eu\n");
    for (t, row) in eu.elementwise_variance.iter().enumerate() {
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        writeln!(eu_csv, "{},{},{mean}", t + 1, t_ms(t + 1, rate))?;
    }
    out.write("eu.csv", eu_csv.as_bytes())?;

    let status = match verdict {
        Some(Verdict::Reject) => "rejected",
        Some(Verdict::Accept) => "accepted",
        None => "ungated",
    };
    let mut summary = format!("status={status}\nscalar_eu={}\n", eu.scalar_eu);
    writeln!(summary, "threshold={}", calib.as_ref().map_or("-".to_string(), |c| c.threshold.to_string()))?;
    writeln!(summary, "n_samples={}", a.n_samples)?;
    if verdict != Some(Verdict::Reject) {
        let sel = select_and_truncate(&ens, a.lambda, a.e_max)?;
        let best = &ens.members[sel.optimal_index];
        let mut csv = String::from("frame,t_ms,sigma_max,sigma_mean,trustworthy\n");
        for (t, row) in best.sigma.iter().enumerate() {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mean = row.iter().sum::<f64>() / row.len() as f64;
            let ok = u8::from(t < sel.trustworthy_length);
            writeln!(csv, "{},{},{max},{mean},{ok}", t + 1, t_ms(t + 1, rate))?;
        }
        out.write("selection.csv", csv.as_bytes())?;
        writeln!(summary, "selected_sample={}", sel.optimal_index)?;
        writeln!(summary, "trustworthy_length={}", sel.trustworthy_length)?;
        writeln!(summary, "trustworthy_ms={}", t_ms(sel.trustworthy_length, rate))?;
    } else {
        summary.push_str("selected_sample=-\ntrustworthy_length=-\ntrustworthy_ms=-\n");
    }
    out.write("summary.txt", summary.as_bytes())?;
    print!("{summary}");
    m.finish(out)
}

fn parse_milestones(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| anyhow!("bad milestone `{t}`")))
        .collect()
}

pub fn evaluate(a: EvaluateArgs, argv: &[String]) -> Result<()> {
    let mut m = Manifest::new("evaluate", argv);
    m.seed(a.seed);
    let methods = Method::parse_list(&a.methods)?;
    let ckpt = a.checkpoint.as_deref().map(|p| load_checkpoint(p, &mut m)).transpose()?;
    let calib = match (&a.calibration, &ckpt) {
        (Some(p), Some((_, hash))) => Some(load_calibration(p, hash, &mut m)?),
        (Some(_), None) => bail!("--calibration needs --checkpoint"),
        _ => None,
    };
    let t_p = a.t_p.or(ckpt.as_ref().map(|c| c.0.t_p)).unwrap_or(50);
    let t_f = a.horizon.or(ckpt.as_ref().map(|c| c.0.t_f)).unwrap_or(50);
    let stride = a.stride.unwrap_or(DEFAULT_STRIDE);
    let settings = EvalSettings {
        milestones_ms: parse_milestones(&a.milestones)?,
        n_samples: a.n_samples,
        base_seed: a.seed,
        lambda: a.lambda,
        e_max: a.e_max,
        truncate: a.truncate,
        error_mode: if a.mean_of_errors { EnsembleErrorMode::MeanOfErrors } else { EnsembleErrorMode::MeanPrediction },
        train_set: a.train_set.clone(),
        test_set: a.test_set.clone(),
    };
    m.config([
        format!("methods={}", methods.iter().map(|x| x.name()).collect::<Vec<_>>().join("+")),
        format!("n_samples={}", a.n_samples),
        format!("lambda={}", a.lambda),
        format!("e_max={}", a.e_max),
        format!("t_p={t_p}"),
        format!("t_f={t_f}"),
        format!("stride={stride}"),
        format!("milestones={}", a.milestones),
        format!("truncate={}", a.truncate),
        format!("mean_of_errors={}", a.mean_of_errors),
    ]);
    let seqs = load_motion_dir(&a.data, &mut m)?;
    let test = windows(&seqs, t_p, t_f, stride)?;
    let report = run_evaluation(&methods, ckpt.as_ref().map(|c| &c.0), calib.as_ref(), &test, &settings)?;
    let mut out = OutputDir::create(&a.out)?;
    out.write("report.csv", render_csv(&report).as_bytes())?;
    let table = render_table(&report);
    out.write("report.txt", table.as_bytes())?;
    print!("{table}");
    m.finish(out)
}

pub fn plan(a: PlanArgs, argv: &[String]) -> Result<()> {
    let mut m = Manifest::new("plan", argv);
    m.seed(a.seed);
    let scene_text = read_text(&a.scene, &mut m)?;
    let mut scene = parse_scene::<f64>(&scene_text).with_context(|| format!("malformed scene {}", a.scene.display()))?;
    if let Some(p) = &a.config {
        for (k, v) in kv_lines(&read_text(p, &mut m)?)? {
            scene.config.set(&k, &v)?;
        }
        scene.config.validate()?;
    }
    let cfg = scene.config.clone();
    m.config(cfg.to_kv_lines().lines().map(str::to_string));
    let field = match (&a.checkpoint, &a.input) {
        (Some(cp), Some(inp)) => {
            let (ckpt, _) = load_checkpoint(cp, &mut m)?;
            let seq = load_motion(inp, &mut m)?;
            let obs = observed_window(&seq, a.start, ckpt.t_p)?;
            let ens = ckpt.mc_sample(&obs, a.n_samples, ckpt.t_f, a.seed)?;
            let sel = select_and_truncate(&ens, a.lambda, a.e_max)?;
            if sel.trustworthy_length == 0 {
                let len = trustworthy_length(&ens.members[sel.optimal_index].sigma, a.lambda, a.e_max)?;
                bail!("selected prediction has {len} trustworthy frames; raise --e-max or lower --lambda");
            }
            UncertaintyField::from_selection(&sel, ckpt.t_f, cfg.growth_factor, cfg.safety_radius)?
        }
        _ if scene.gaussians.is_empty() => UncertaintyField::empty(cfg.safety_radius),
        _ => UncertaintyField::from_static(&scene.gaussians, cfg.safety_radius)?,
    };
    let initial = scene.initial_trajectory()?;
    let before = collision_probability_profile(&initial, &field);
    let (traj, log) = optimize(&initial, &field, &cfg);
    let profile = collision_probability_profile(&traj, &field);
    let costs = step_costs(&traj, &field, &cfg);
    let breakdown = plan_cost(&traj, &field, &cfg);

    let mut out = OutputDir::create(&a.out)?;
    out.write("plan.csv", format_plan_csv(&traj, &profile.values, &costs).as_bytes())?;
    let mut log_csv = format!("iteration,cost,step\n0,{},-\n", log.initial_cost);
    for r in &log.iterations {
        writeln!(log_csv, "{},{},{}", r.iteration, r.cost, r.step)?;
    }
    out.write("plan_log.csv", log_csv.as_bytes())?;
    let unsafe_steps = profile.values.iter().filter(|v| **v >= cfg.collision_threshold).count();
    let summary = format!(
        "iterations={}\ninitial_cost={}\nfinal_cost={}\nobstacle={}\nsmoothness={}\ngoal={}\ninitial_max_probability={}\nmax_probability={}\nunsafe_steps={}\n",
        log.iterations.len(),
        log.initial_cost,
        breakdown.total,
        breakdown.obstacle,
        breakdown.smoothness,
        breakdown.goal,
        before.max,
        profile.max,
        unsafe_steps
    );
    out.write("summary.txt", summary.as_bytes())?;
    print!("{summary}");
    m.finish(out)
}
