//! Duffing oscillator experiments: hyperparameter validation sweep for the
//! RFF Koopman models, training of the chosen bilinear surrogate, and
//! long-horizon prediction under constant and time-varying controls.

use ndarray::Array2;
use rayon::prelude::*;

use crate::dynamics::{duffing_flow, sample_initials, DuffingParams, InitialLaw};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::surrogate::{
    draw_rff, fit_readout, fit_rff_koopman_tagged, predict_ensemble, BilinearModel, RffBasis,
};

use super::config::ExperimentConfig;
use super::table::{Cell, Provenance, ResultTable};

const STREAM_TRAIN: u64 = 100;
const STREAM_BASIS: u64 = 200;
const STREAM_VALIDATE: u64 = 300;
const STREAM_LONG: u64 = 400;

pub struct DuffingData {
    pub params: DuffingParams,
    pub x: Array2<f64>,
    pub y0: Array2<f64>,
    pub y1: Array2<f64>,
}

fn box_law(halfwidth: f64) -> InitialLaw {
    InitialLaw::UniformBox {
        lo: vec![-halfwidth, -halfwidth],
        hi: vec![halfwidth, halfwidth],
    }
}

/// Training inputs and their successors under the two constant controls.
pub fn duffing_training_data(cfg: &ExperimentConfig) -> Result<DuffingData> {
    let params = DuffingParams {
        alpha: cfg.duffing.alpha,
        beta: cfg.duffing.beta,
    };
    let x = sample_initials(
        &box_law(cfg.duffing.domain_halfwidth),
        cfg.duffing.m,
        RngStream::new(cfg.run.seed, STREAM_TRAIN),
    )?;
    let flow_all = |u: f64| -> Result<Array2<f64>> {
        let rows: Vec<[f64; 2]> = (0..x.nrows())
            .into_par_iter()
            .map(|i| {
                duffing_flow(
                    &params,
                    [x[(i, 0)], x[(i, 1)]],
                    u,
                    cfg.duffing.lag,
                    cfg.duffing.dt,
                )
            })
            .collect::<Result<_>>()?;
        Ok(Array2::from_shape_fn((x.nrows(), 2), |(i, j)| rows[i][j]))
    };
    Ok(DuffingData {
        params,
        y0: flow_all(0.0)?,
        y1: flow_all(1.0)?,
        x,
    })
}

fn pairs_for(data: &DuffingData, cfg: &ExperimentConfig, u: f64) -> crate::dynamics::DataPairs {
    crate::dynamics::DataPairs {
        x: data.x.clone(),
        y: if u == 0.0 { data.y0.clone() } else { data.y1.clone() },
        lag: cfg.duffing.lag,
        seed: cfg.run.seed,
        stream: STREAM_TRAIN,
    }
}

fn fit_model(
    cfg: &ExperimentConfig,
    data: &DuffingData,
    basis: RffBasis,
    gamma: f64,
) -> Result<BilinearModel> {
    let k0 = fit_rff_koopman_tagged(&basis, &pairs_for(data, cfg, 0.0), gamma, 0.0)?;
    let k1 = fit_rff_koopman_tagged(&basis, &pairs_for(data, cfg, 1.0), gamma, 1.0)?;
    let readout = fit_readout(&basis, data.x.view(), data.x.view(), gamma)?;
    Ok(BilinearModel {
        basis,
        k0,
        k1,
        readout,
        lag: cfg.duffing.lag,
        project_and_lift_every: cfg.duffing.project_and_lift_every,
    })
}

fn basis_stream(si: usize, pi: usize) -> u64 {
    STREAM_BASIS + (si as u64) * 16 + pi as u64
}

/// Ground-truth trajectories under per-step zero-order-hold controls.
fn truth_rollout(
    params: &DuffingParams,
    z0s: &[Vec<f64>],
    controls: &[f64],
    steps: usize,
    lag: f64,
    dt: f64,
) -> Result<Vec<Vec<[f64; 2]>>> {
    z0s.par_iter()
        .map(|z0| {
            let mut z = [z0[0], z0[1]];
            let mut traj = vec![z];
            for &u in controls.iter().take(steps) {
                z = duffing_flow(params, z, u, lag, dt)?;
                traj.push(z);
            }
            Ok(traj)
        })
        .collect()
}

/// Hyperparameter sweep: relative mean-squared prediction error over short
/// test trajectories for each (bandwidth, feature count, regularization,
/// control) cell. Divergence is recorded per cell, never fatal.
pub fn run_duffing_validation(cfg: &ExperimentConfig) -> Result<Vec<ResultTable>> {
    let data = duffing_training_data(cfg)?;
    let steps = cfg.duffing.validation_steps;
    let z0s_arr = sample_initials(
        &box_law(cfg.duffing.domain_halfwidth),
        cfg.duffing.validation_trajectories,
        RngStream::new(cfg.run.seed, STREAM_VALIDATE),
    )?;
    let z0s: Vec<Vec<f64>> = z0s_arr.rows().into_iter().map(|r| r.to_vec()).collect();

    let truth0 = truth_rollout(
        &data.params,
        &z0s,
        &vec![0.0; steps],
        steps,
        cfg.duffing.lag,
        cfg.duffing.dt,
    )?;
    let truth1 = truth_rollout(
        &data.params,
        &z0s,
        &vec![1.0; steps],
        steps,
        cfg.duffing.lag,
        cfg.duffing.dt,
    )?;

    let mut table = ResultTable::new(
        "duffing_validation",
        &["sigma", "p", "gamma", "u_bar", "rel_mse", "diverged"],
        Provenance::new(cfg),
    );

    for (si, &sigma) in cfg.duffing.sigmas.iter().enumerate() {
        for (pi, &p) in cfg.duffing.feature_counts.iter().enumerate() {
            let basis = draw_rff(sigma, p, 2, RngStream::new(cfg.run.seed, basis_stream(si, pi)))?;
            for &gamma in &cfg.duffing.gammas {
                let model = fit_model(cfg, &data, basis.clone(), gamma)?;
                for (u_bar, truth) in [(0.0, &truth0), (1.0, &truth1)] {
                    let controls = vec![u_bar; steps];
                    // No re-lifting during short validation rollouts.
                    let mut m = model.clone();
                    m.project_and_lift_every = usize::MAX;
                    let rollout = predict_ensemble(&m, &z0s, &controls, steps);
                    match rollout {
                        Ok(trajs) => {
                            let (mut num, mut den) = (0.0, 0.0);
                            for (i, traj) in trajs.iter().enumerate() {
                                for k in 1..=steps {
                                    let t = truth[i][k];
                                    let s = &traj.states[k];
                                    num += (s[0] - t[0]).powi(2) + (s[1] - t[1]).powi(2);
                                    den += t[0] * t[0] + t[1] * t[1];
                                }
                            }
                            table.push(vec![
                                Cell::Float(sigma),
                                Cell::Int(p as i64),
                                Cell::Float(gamma),
                                Cell::Float(u_bar),
                                Cell::Float(num / den),
                                Cell::Int(0),
                            ]);
                        }
                        Err(Error::Divergence { .. }) => {
                            table.push(vec![
                                Cell::Float(sigma),
                                Cell::Int(p as i64),
                                Cell::Float(gamma),
                                Cell::Float(u_bar),
                                Cell::Float(f64::NAN),
                                Cell::Int(1),
                            ]);
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }
    Ok(vec![table])
}

/// Train the chosen-cell bilinear model and report training diagnostics.
/// Saves the model next to the tables when an output directory is supplied.
pub fn run_duffing_train(cfg: &ExperimentConfig) -> Result<(Vec<ResultTable>, BilinearModel)> {
    let data = duffing_training_data(cfg)?;
    let si = cfg
        .duffing
        .sigmas
        .iter()
        .position(|&s| s == cfg.duffing.chosen_sigma)
        .unwrap_or(0);
    let pi = cfg
        .duffing
        .feature_counts
        .iter()
        .position(|&p| p == cfg.duffing.chosen_p)
        .unwrap_or(0);
    let basis = draw_rff(
        cfg.duffing.chosen_sigma,
        cfg.duffing.chosen_p,
        2,
        RngStream::new(cfg.run.seed, basis_stream(si, pi)),
    )?;
    let model = fit_model(cfg, &data, basis, cfg.duffing.chosen_gamma)?;

    // One-step lifted residuals per control and the readout reconstruction
    // error on the training inputs.
    let mut table = ResultTable::new(
        "duffing_train",
        &["u_bar", "lifted_residual", "readout_rel_mse"],
        Provenance::new(cfg),
    );
    let m_lift = model.basis.lift_matrix(data.x.view())?;
    let readout_rel_mse = {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..data.x.nrows() {
            let w = m_lift.column(i).to_owned();
            let est = model.read_out(&w);
            num += (est[0] - data.x[(i, 0)]).powi(2) + (est[1] - data.x[(i, 1)]).powi(2);
            den += data.x[(i, 0)].powi(2) + data.x[(i, 1)].powi(2);
        }
        num / den
    };
    for (u_bar, k, y) in [(0.0, &model.k0, &data.y0), (1.0, &model.k1, &data.y1)] {
        let target = model.basis.lift_matrix(y.view())?;
        let mut resid = 0.0;
        for i in 0..data.x.nrows() {
            let w = m_lift.column(i).to_owned();
            let pred = k.propagate(&w);
            let diff: f64 = pred
                .iter()
                .zip(target.column(i).iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum();
            resid += diff;
        }
        let p = model.basis.feature_count() as f64;
        let resid = (resid / (data.x.nrows() as f64 * p)).sqrt();
        table.push(vec![
            Cell::Float(u_bar),
            Cell::Float(resid),
            Cell::Float(readout_rel_mse),
        ]);
    }
    Ok((vec![table], model))
}

fn scenario_controls(name: &str, steps: usize, lag: f64) -> Vec<f64> {
    match name {
        "u0" => vec![0.0; steps],
        "u1" => vec![1.0; steps],
        // cos(t) sampled at the start of each zero-order-hold period.
        "cos" => (0..steps).map(|k| (k as f64 * lag).cos()).collect(),
        other => panic!("unknown scenario {other}"),
    }
}

/// Long-horizon rollout of the bilinear surrogate with project-and-lift,
/// against ground-truth trajectories, for the three control scenarios.
pub fn run_duffing_longhorizon(
    cfg: &ExperimentConfig,
    model: &BilinearModel,
) -> Result<Vec<ResultTable>> {
    let params = DuffingParams {
        alpha: cfg.duffing.alpha,
        beta: cfg.duffing.beta,
    };
    let steps = cfg.duffing.longhorizon_steps;
    let z0s_arr = sample_initials(
        &box_law(cfg.duffing.domain_halfwidth),
        cfg.duffing.longhorizon_trajectories,
        RngStream::new(cfg.run.seed, STREAM_LONG),
    )?;
    let z0s: Vec<Vec<f64>> = z0s_arr.rows().into_iter().map(|r| r.to_vec()).collect();

    let mut errors = ResultTable::new(
        "duffing_longhorizon",
        &["scenario", "step", "time", "mean_rel_error", "rms_rel_error"],
        Provenance::new(cfg),
    );
    let mut samples = ResultTable::new(
        "duffing_longhorizon_samples",
        &[
            "scenario", "trajectory", "step", "time", "true_z1", "true_z2", "pred_z1", "pred_z2",
        ],
        Provenance::new(cfg),
    );

    for scenario in ["u0", "u1", "cos"] {
        let controls = scenario_controls(scenario, steps, cfg.duffing.lag);
        let truth = truth_rollout(&params, &z0s, &controls, steps, cfg.duffing.lag, cfg.duffing.dt)?;
        let predicted = predict_ensemble(model, &z0s, &controls, steps)?;

        for k in 0..=steps {
            let (mut mean_rel, mut num, mut den) = (0.0, 0.0, 0.0);
            for (i, traj) in predicted.iter().enumerate() {
                let t = truth[i][k];
                let s = &traj.states[k];
                let diff = ((s[0] - t[0]).powi(2) + (s[1] - t[1]).powi(2)).sqrt();
                let norm = (t[0] * t[0] + t[1] * t[1]).sqrt();
                mean_rel += diff / norm;
                num += diff * diff;
                den += norm * norm;
            }
            mean_rel /= predicted.len() as f64;
            errors.push(vec![
                Cell::Text(scenario.into()),
                Cell::Int(k as i64),
                Cell::Float(k as f64 * cfg.duffing.lag),
                Cell::Float(mean_rel),
                Cell::Float((num / den).sqrt()),
            ]);
        }

        for i in 0..z0s.len().min(3) {
            for k in 0..=steps {
                samples.push(vec![
                    Cell::Text(scenario.into()),
                    Cell::Int(i as i64),
                    Cell::Int(k as i64),
                    Cell::Float(k as f64 * cfg.duffing.lag),
                    Cell::Float(truth[i][k][0]),
                    Cell::Float(truth[i][k][1]),
                    Cell::Float(predicted[i].states[k][0]),
                    Cell::Float(predicted[i].states[k][1]),
                ]);
            }
        }
    }
    Ok(vec![errors, samples])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.duffing.m = 400;
        cfg.duffing.sigmas = vec![1.0];
        cfg.duffing.feature_counts = vec![40];
        cfg.duffing.gammas = vec![1e-2, 1e-4];
        cfg.duffing.validation_trajectories = 10;
        cfg.duffing.validation_steps = 5;
        cfg.duffing.longhorizon_trajectories = 4;
        cfg.duffing.longhorizon_steps = 30;
        cfg.duffing.chosen_sigma = 1.0;
        cfg.duffing.chosen_p = 40;
        cfg.duffing.chosen_gamma = 1e-4;
        cfg
    }

    #[test]
    fn validation_table_shape_and_determinism() {
        let cfg = tiny_cfg();
        let t = &run_duffing_validation(&cfg).unwrap()[0];
        assert_eq!(t.rows.len(), 1 * 1 * 2 * 2);
        for r in 0..t.rows.len() {
            assert!(t.float(r, "rel_mse") >= 0.0);
        }
        let again = &run_duffing_validation(&cfg).unwrap()[0];
        assert_eq!(t.to_csv_string(), again.to_csv_string());
    }

    #[test]
    fn train_then_longhorizon_runs() {
        let cfg = tiny_cfg();
        let (tables, model) = run_duffing_train(&cfg).unwrap();
        assert_eq!(tables[0].rows.len(), 2);
        let out = run_duffing_longhorizon(&cfg, &model).unwrap();
        let errors = &out[0];
        assert_eq!(errors.rows.len(), 3 * (cfg.duffing.longhorizon_steps + 1));
        // Step-0 errors vanish: the rollout starts from the true state.
        for r in 0..errors.rows.len() {
            if errors.float(r, "step") == 0.0 {
                assert_eq!(errors.float(r, "mean_rel_error"), 0.0);
            }
        }
        let samples = &out[1];
        assert_eq!(
            samples.rows.len(),
            3 * 3 * (cfg.duffing.longhorizon_steps + 1)
        );
    }
}
