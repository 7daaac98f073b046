//! Configuration-driven experiment runners and their result tables.

pub mod config;
mod counterexample;
mod duffing;
mod ou;
mod table;

pub use config::{ExperimentConfig, OutputFormat};
pub use counterexample::{run_semigroup_counterexample, semigroup_norm_squared};
pub use duffing::{
    duffing_training_data, run_duffing_longhorizon, run_duffing_train, run_duffing_validation,
};
pub use ou::{ou_reference_elements, run_ou_analytic, run_ou_bound};
pub use table::{Cell, Provenance, ResultTable};

use crate::error::Result;
use crate::surrogate::BilinearModel;

/// Experiment identifiers exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentId {
    OuBound,
    OuAnalytic,
    DuffingTrain,
    DuffingValidate,
    DuffingLonghorizon,
    SemigroupCounterexample,
}

impl ExperimentId {
    pub fn all() -> [ExperimentId; 6] {
        [
            ExperimentId::OuBound,
            ExperimentId::OuAnalytic,
            ExperimentId::DuffingTrain,
            ExperimentId::DuffingValidate,
            ExperimentId::DuffingLonghorizon,
            ExperimentId::SemigroupCounterexample,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentId::OuBound => "ou-bound",
            ExperimentId::OuAnalytic => "ou-analytic",
            ExperimentId::DuffingTrain => "duffing-train",
            ExperimentId::DuffingValidate => "duffing-validate",
            ExperimentId::DuffingLonghorizon => "duffing-longhorizon",
            ExperimentId::SemigroupCounterexample => "semigroup-counterexample",
        }
    }
}

/// Run one experiment end to end, writing every produced table (and, for the
/// training experiment, the model file) into the configured output
/// directory. Returns the written tables.
pub fn run_experiment(id: ExperimentId, cfg: &ExperimentConfig) -> Result<Vec<ResultTable>> {
    let tables = match id {
        ExperimentId::OuBound => run_ou_bound(cfg)?,
        ExperimentId::OuAnalytic => run_ou_analytic(cfg)?,
        ExperimentId::DuffingTrain => {
            let (tables, model) = run_duffing_train(cfg)?;
            let dir = std::path::Path::new(&cfg.run.out);
            std::fs::create_dir_all(dir).map_err(|e| crate::error::Error::io(dir, e))?;
            model.save(dir.join("duffing_model.json"))?;
            tables
        }
        ExperimentId::DuffingValidate => run_duffing_validation(cfg)?,
        ExperimentId::DuffingLonghorizon => {
            let model = load_or_train_model(cfg)?;
            run_duffing_longhorizon(cfg, &model)?
        }
        ExperimentId::SemigroupCounterexample => run_semigroup_counterexample(cfg)?,
    };
    for t in &tables {
        t.write(&cfg.run.out, cfg.run.format)?;
    }
    Ok(tables)
}

/// The long-horizon experiment reuses a trained model when one is configured
/// or present in the output directory, and retrains the chosen cell
/// otherwise.
pub fn load_or_train_model(cfg: &ExperimentConfig) -> Result<BilinearModel> {
    if let Some(path) = &cfg.duffing.model_path {
        return BilinearModel::load(path);
    }
    let default_path = std::path::Path::new(&cfg.run.out).join("duffing_model.json");
    if default_path.is_file() {
        return BilinearModel::load(default_path);
    }
    Ok(run_duffing_train(cfg)?.1)
}
