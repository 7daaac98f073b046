//! Empirical measurement of how far the flow of a control-affine system is
//! from being affine in the control: the L^2 defect of the affine
//! recombination of constant-control Koopman actions on a test observable.

use crate::error::{Error, Result};
use crate::kernel::quadrature::gauss_legendre;

/// `x' = f(x) + sum_i u_i g_i(x)` with smooth fields.
pub struct ControlAffineSystem {
    pub drift: Box<dyn Fn(&[f64]) -> Vec<f64> + Sync>,
    pub inputs: Vec<Box<dyn Fn(&[f64]) -> Vec<f64> + Sync>>,
}

impl ControlAffineSystem {
    pub fn n_controls(&self) -> usize {
        self.inputs.len()
    }

    pub fn vector_field(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut v = (self.drift)(x);
        for (ui, g) in u.iter().zip(&self.inputs) {
            for (slot, gi) in v.iter_mut().zip(g(x)) {
                *slot += ui * gi;
            }
        }
        v
    }

    /// Fixed-step RK4 flow under a constant control vector.
    pub fn flow(&self, x0: &[f64], u: &[f64], t: f64, steps: usize) -> Vec<f64> {
        let h = t / steps as f64;
        let mut x = x0.to_vec();
        let axpy = |x: &[f64], s: f64, d: &[f64]| -> Vec<f64> {
            x.iter().zip(d).map(|(a, b)| a + s * b).collect()
        };
        for _ in 0..steps {
            let k1 = self.vector_field(&x, u);
            let k2 = self.vector_field(&axpy(&x, 0.5 * h, &k1), u);
            let k3 = self.vector_field(&axpy(&x, 0.5 * h, &k2), u);
            let k4 = self.vector_field(&axpy(&x, h, &k3), u);
            for i in 0..x.len() {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        x
    }

    /// The Duffing oscillator as a single-input control-affine system:
    /// `f(z) = (z2, -2 beta z1^3)`, `g(z) = (0, -alpha z1)`.
    pub fn duffing(params: crate::dynamics::DuffingParams) -> Self {
        let beta = params.beta;
        let alpha = params.alpha;
        ControlAffineSystem {
            drift: Box::new(move |z: &[f64]| vec![z[1], -2.0 * beta * z[0].powi(3)]),
            inputs: vec![Box::new(move |z: &[f64]| vec![0.0, -alpha * z[0]])],
        }
    }

    /// Scalar linear system `x' = a x + u c`; its flow is affine in the
    /// control, so nonlinearity enters a defect only through the observable.
    pub fn linear_scalar(a: f64, c: f64) -> Self {
        ControlAffineSystem {
            drift: Box::new(move |x: &[f64]| vec![a * x[0]]),
            inputs: vec![Box::new(move |_: &[f64]| vec![c])],
        }
    }
}

/// Tensor Gauss-Legendre quadrature for the uniform probability measure on an
/// axis-aligned box; weights sum to one.
pub fn uniform_box_quadrature(
    lo: &[f64],
    hi: &[f64],
    nodes_per_dim: usize,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (u, w) = gauss_legendre(nodes_per_dim);
    let d = lo.len();
    let mut points = vec![Vec::new()];
    let mut weights = vec![1.0];
    for j in 0..d {
        let mut next_p = Vec::with_capacity(points.len() * nodes_per_dim);
        let mut next_w = Vec::with_capacity(points.len() * nodes_per_dim);
        for (pt, wt) in points.iter().zip(&weights) {
            for (ui, wi) in u.iter().zip(&w) {
                let mut p = pt.clone();
                p.push(0.5 * (lo[j] + hi[j]) + 0.5 * (hi[j] - lo[j]) * ui);
                next_p.push(p);
                // Normalized to the probability measure: each dimension
                // contributes w_i / 2.
                next_w.push(wt * wi / 2.0);
            }
        }
        points = next_p;
        weights = next_w;
    }
    (points, weights)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefectPoint {
    pub t: f64,
    pub defect: f64,
}

/// For each horizon in `t_grid`, the `L^2` norm (under the quadrature rule)
/// of the gap between the true constant-`u` Koopman action on `psi` and its
/// affine recombination from the boundary controls `gamma_i e_i` and zero:
/// `psi(F_u^t x) - [psi(F_0^t x) + sum_i (u_i/gamma_i)(psi(F_{gamma_i e_i}^t
/// x) - psi(F_0^t x))]`.
pub fn affinity_defect(
    system: &ControlAffineSystem,
    psi: &(dyn Fn(&[f64]) -> f64 + Sync),
    u: &[f64],
    gammas: &[f64],
    t_grid: &[f64],
    quad_points: &[Vec<f64>],
    quad_weights: &[f64],
) -> Result<Vec<DefectPoint>> {
    let nu = system.n_controls();
    if u.len() != nu || gammas.len() != nu {
        return Err(Error::DimensionMismatch {
            expected: nu,
            got: u.len().min(gammas.len()),
        });
    }
    if gammas.iter().any(|&g| !(g > 0.0)) {
        return Err(Error::InvalidInput("gammas must be positive".into()));
    }
    if quad_points.len() != quad_weights.len() || quad_points.is_empty() {
        return Err(Error::InvalidInput("empty or mismatched quadrature".into()));
    }
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if !(t > 0.0) {
            return Err(Error::InvalidInput(format!(
                "defect horizons must be positive, got {t}"
            )));
        }
        let steps = ((t / 0.000625).ceil() as usize).max(32);
        let mut acc = 0.0;
        for (x, &w) in quad_points.iter().zip(quad_weights) {
            let true_val = psi(&system.flow(x, u, t, steps));
            let base = psi(&system.flow(x, &vec![0.0; nu], t, steps));
            let mut combo = base;
            for i in 0..nu {
                let mut boundary = vec![0.0; nu];
                boundary[i] = gammas[i];
                let edge = psi(&system.flow(x, &boundary, t, steps));
                combo += u[i] / gammas[i] * (edge - base);
            }
            let gap = true_val - combo;
            acc += w * gap * gap;
        }
        out.push(DefectPoint {
            t,
            defect: acc.sqrt(),
        });
    }
    Ok(out)
}

/// Least-squares slope of `ln(defect)` against `ln(t)`.
pub fn log_log_slope(points: &[DefectPoint]) -> Result<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.defect > 0.0)
        .map(|p| (p.t.ln(), p.defect.ln()))
        .collect();
    if usable.len() < 2 {
        return Err(Error::InvalidInput(
            "need at least two positive defects for a slope".into(),
        ));
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}
