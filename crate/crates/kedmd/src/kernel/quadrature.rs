//! Golub-Welsch quadrature rules and a plain adaptive Simpson integrator.

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};

use crate::error::{Error, Result};

fn golub_welsch(offdiag: &[f64], moment0: f64) -> (Vec<f64>, Vec<f64>) {
    let n = offdiag.len() + 1;
    let mut jacobi = Array2::<f64>::zeros((n, n));
    for (k, &b) in offdiag.iter().enumerate() {
        jacobi[(k, k + 1)] = b;
        jacobi[(k + 1, k)] = b;
    }
    let (nodes, vecs) = jacobi.eigh(UPLO::Lower).expect("tridiagonal eigensolve");
    let weights: Vec<f64> = (0..n).map(|j| moment0 * vecs[(0, j)] * vecs[(0, j)]).collect();
    (nodes.to_vec(), weights)
}

/// Gauss-Hermite rule for the weight `exp(-x^2)` on the real line.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let offdiag: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    golub_welsch(&offdiag, std::f64::consts::PI.sqrt())
}

/// Gauss-Legendre rule for the weight 1 on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let offdiag: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    golub_welsch(&offdiag, 2.0)
}

/// Nodes and weights integrating against a Gaussian probability measure
/// `N(mean, var)`.
pub fn gauss_hermite_for_measure(n: usize, mean: f64, var: f64) -> (Vec<f64>, Vec<f64>) {
    let (u, w) = gauss_hermite(n);
    let scale = (2.0 * var).sqrt();
    let norm = std::f64::consts::PI.sqrt();
    let nodes = u.iter().map(|&ui| mean + scale * ui).collect();
    let weights = w.iter().map(|&wi| wi / norm).collect();
    (nodes, weights)
}

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let err = left + right - whole;
    // Accept at the requested tolerance, or once the correction reaches
    // roundoff scale and further halving of the budget cannot be met.
    if err.abs() <= 15.0 * tol || err.abs() <= 1e-15 * (left.abs() + right.abs()) {
        return Ok(left + right + err / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureNonConvergence {
            achieved: err.abs() / 15.0,
            requested: tol,
        });
    }
    let l = adaptive_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?;
    let r = adaptive_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?;
    Ok(l + r)
}

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance
/// `tol`. Errors out with the achieved tolerance when subdivision bottoms out.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(fa, fm, fb, b - a);
    adaptive_step(&f, a, b, fa, fm, fb, whole, tol, 48)
}
