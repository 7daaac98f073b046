//! Train a small bilinear RFF Koopman surrogate of the Duffing oscillator and
//! predict under a time-varying control. The full-scale pipeline is
//! `kedmd duffing-train`, `duffing-validate`, `duffing-longhorizon`.

use kedmd::dynamics::{duffing_flow, DuffingParams};
use kedmd::experiments::{run_duffing_longhorizon, run_duffing_train, ExperimentConfig};
use kedmd::surrogate::predict_trajectory;

fn main() -> kedmd::Result<()> {
    let mut cfg = ExperimentConfig::default();
    // Desk-scale model: fewer samples and features than the full run.
    cfg.duffing.m = 2_000;
    cfg.duffing.chosen_p = 200;
    cfg.duffing.sigmas = vec![1.0];
    cfg.duffing.feature_counts = vec![200];
    cfg.duffing.longhorizon_trajectories = 10;
    cfg.duffing.longhorizon_steps = 200;

    let (tables, model) = run_duffing_train(&cfg)?;
    println!("training diagnostics:");
    for row in 0..tables[0].rows.len() {
        println!(
            "  u = {}: lifted residual {:.3e}, readout rel MSE {:.3e}",
            tables[0].float(row, "u_bar"),
            tables[0].float(row, "lifted_residual"),
            tables[0].float(row, "readout_rel_mse"),
        );
    }

    // One trajectory under u(t) = cos(t), against the ground truth.
    let params = DuffingParams { alpha: cfg.duffing.alpha, beta: cfg.duffing.beta };
    let z0 = [1.0, 0.0];
    let steps = 120;
    let controls: Vec<f64> = (0..steps).map(|k| (k as f64 * cfg.duffing.lag).cos()).collect();
    let pred = predict_trajectory(&model, &z0, &controls, steps)?;
    let mut truth = vec![z0];
    for &u in &controls {
        let last = *truth.last().unwrap();
        truth.push(duffing_flow(&params, last, u, cfg.duffing.lag, cfg.duffing.dt)?);
    }
    println!("\nrollout under u(t) = cos(t) from z0 = {z0:?}:");
    println!("{:>8} {:>22} {:>22}", "time", "true (z1, z2)", "predicted (z1, z2)");
    for k in (0..=steps).step_by(20) {
        println!(
            "{:>8.3} {:>10.4} {:>10.4} {:>11.4} {:>10.4}",
            k as f64 * cfg.duffing.lag,
            truth[k][0],
            truth[k][1],
            pred.states[k][0],
            pred.states[k][1]
        );
    }

    // Aggregate long-horizon error over an ensemble.
    let out = run_duffing_longhorizon(&cfg, &model)?;
    let errors = &out[0];
    println!("\nmean relative error at the final step:");
    for r in 0..errors.rows.len() {
        if errors.float(r, "step") as usize == cfg.duffing.longhorizon_steps {
            if let kedmd::experiments::Cell::Text(s) = &errors.rows[r][0] {
                println!("  scenario {s}: {:.4}", errors.float(r, "mean_rel_error"));
            }
        }
    }
    Ok(())
}
