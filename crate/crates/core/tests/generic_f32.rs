//! The numeric core instantiated at `f32`.

use probmotion::data::{fit_normalization, synth_generate, window_dataset, SynthFamily};
use probmotion::train::{train, TrainConfig};
use probmotion::trajectory::{field_value, optimize, PlanConfig};
use probmotion::uncertainty::{epistemic_variance, select_and_truncate};
use probmotion::{Field32, Motion32, Trajectory32};

#[test]
fn pipeline_runs_in_single_precision() {
    let seqs: Vec<Motion32> = (0..2).map(|s| synth_generate(SynthFamily::A, s, 60).unwrap()).collect();
    let windows: Vec<_> = seqs.iter().flat_map(|s| window_dataset(s, 10, 5, 10).unwrap()).collect();
    let stats = fit_normalization(&seqs).unwrap();
    let cfg = TrainConfig { t_p: 10, t_f: 5, hidden_size: 8, epochs: 2, learning_rate: 0.005, ..TrainConfig::default() };
    let out = train(&cfg, &stats, &windows, &[]).unwrap();
    let ens = out.checkpoint.mc_sample(&windows[0].observed, 4, 5, 0).unwrap();
    let eu = epistemic_variance(&ens).unwrap();
    assert!(eu.scalar_eu >= 0.0 && eu.scalar_eu.is_finite());
    let sel = select_and_truncate(&ens, 1.28f32, 100.0).unwrap();
    assert_eq!(sel.trustworthy_length, 5);
    let text = out.checkpoint.to_text();
    assert_eq!(probmotion::Checkpoint32::from_text(&text).unwrap(), out.checkpoint);
}

#[test]
fn planning_in_single_precision() {
    let field = Field32::from_static(&[([1.0, 0.05, 0.0], 0.15)], 0.15).unwrap();
    let start = Trajectory32::straight_line([0.0; 3], [2.0, 0.0, 0.0], 20).unwrap();
    let (out, log) = optimize(&start, &field, &PlanConfig { max_iters: 30, ..PlanConfig::default() });
    assert!(log.final_cost() < log.initial_cost);
    let v = field_value(&field, &out.waypoints[10], 0);
    assert!((0.0..=1.0).contains(&v));
}
