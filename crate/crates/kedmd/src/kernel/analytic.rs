//! Closed-form image of an RBF feature under the Ornstein-Uhlenbeck Koopman
//! operator: a scaled, widened, recentered RBF feature. Serves as the analytic
//! oracle for kernel EDMD predictions on the OU process.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `K^t k_z^sigma = amplitude * k^width_center`, together with the operator
/// norm bound `e^{alpha t / 2}` of the OU Koopman operator on the RBF space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticKoopmanImage {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    pub norm_bound: f64,
}

impl AnalyticKoopmanImage {
    pub fn eval(&self, x: f64) -> f64 {
        let d = x - self.center;
        self.amplitude * (-d * d / (self.width * self.width)).exp()
    }
}

/// Propagate the feature `k_z^sigma` by the OU transition over time `t`.
///
/// The OU process is `dX = -alpha X dt + sqrt(2/beta) dW`, whose transition
/// from `x` is Gaussian with mean `e^{-alpha t} x` and variance
/// `(1 - e^{-2 alpha t}) / (alpha beta)`. Writing the transition density as
/// `sqrt(c_t/pi) exp(-c_t (y - e^{-alpha t} x)^2)` with
/// `c_t = alpha beta / (2 (1 - e^{-2 alpha t}))`, the image is again an RBF
/// feature with
/// `amplitude = sqrt(c_t sigma^2 / (1 + c_t sigma^2))`,
/// `width = e^{alpha t} sigma / amplitude`, `center = e^{alpha t} z`.
///
/// `t = 0` returns the identity limit (amplitude 1, width sigma, center z).
pub fn ou_koopman_rbf(alpha: f64, beta: f64, t: f64, z: f64, sigma: f64) -> Result<AnalyticKoopmanImage> {
    if !(alpha > 0.0) || !(beta > 0.0) {
        return Err(Error::InvalidInput(format!(
            "OU parameters must be positive, got alpha = {alpha}, beta = {beta}"
        )));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidInput(format!(
            "bandwidth must be positive, got {sigma}"
        )));
    }
    if t < 0.0 {
        return Err(Error::InvalidInput(format!("time must be nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(AnalyticKoopmanImage {
            amplitude: 1.0,
            center: z,
            width: sigma,
            norm_bound: 1.0,
        });
    }
    let c_t = alpha * beta / (2.0 * (1.0 - (-2.0 * alpha * t).exp()));
    let cs2 = c_t * sigma * sigma;
    let amplitude = (cs2 / (1.0 + cs2)).sqrt();
    let growth = (alpha * t).exp();
    Ok(AnalyticKoopmanImage {
        amplitude,
        center: growth * z,
        width: growth * sigma / amplitude,
        norm_bound: (alpha * t / 2.0).exp(),
    })
}
