//! Growth diagnostic for the Koopman semigroup of the logistic flow on
//! [1, 2]: the L^2 norm of the propagated observable `(2 - x)^{-1/4}` grows
//! without bound, so no uniform operator bound exists.

use crate::error::Result;
use crate::kernel::quadrature::adaptive_simpson;

use super::config::ExperimentConfig;
use super::table::{Cell, Provenance, ResultTable};

/// `n(t)^2 = int_1^2 psi(x(t; x0))^2 dx0` with `psi(x) = (2 - x)^{-1/4}`.
///
/// The substitution `x0 = 2 - s^4` removes the integrable singularity at the
/// upper endpoint in closed form: with the logistic flow,
/// `2 - x(t; 2 - s^4) = 2 s^4 / (s^4 + e^{2t} (2 - s^4))`, giving the smooth
/// integrand `2 sqrt(2) s sqrt(s^4 + e^{2t}(2 - s^4))` on [0, 1].
pub fn semigroup_norm_squared(t: f64, tolerance: f64) -> Result<f64> {
    let growth = (2.0 * t).exp();
    let integrand =
        move |s: f64| 2.0 * std::f64::consts::SQRT_2 * s * (s.powi(4) + growth * (2.0 - s.powi(4))).sqrt();
    adaptive_simpson(integrand, 0.0, 1.0, tolerance)
}

pub fn run_semigroup_counterexample(cfg: &ExperimentConfig) -> Result<Vec<ResultTable>> {
    if !(cfg.counterexample.t_step > 0.0) || cfg.counterexample.t_max < 0.0 {
        return Err(crate::error::Error::InvalidInput(format!(
            "need positive t_step and nonnegative t_max, got {} and {}",
            cfg.counterexample.t_step, cfg.counterexample.t_max
        )));
    }
    let mut table = ResultTable::new(
        "semigroup_counterexample",
        &["t", "norm", "growth_vs_t0"],
        Provenance::new(cfg),
    );
    let mut t = 0.0;
    let mut n0 = None;
    while t <= cfg.counterexample.t_max + 1e-12 {
        let n = semigroup_norm_squared(t, cfg.counterexample.tolerance)?.sqrt();
        let base = *n0.get_or_insert(n);
        table.push(vec![
            Cell::Float(t),
            Cell::Float(n),
            Cell::Float(n / base),
        ]);
        t += cfg.counterexample.t_step;
    }
    Ok(vec![table])
}
