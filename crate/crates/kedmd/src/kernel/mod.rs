//! Gaussian RBF kernel evaluation, Gram matrices, Mercer expansions under a
//! Gaussian weight measure, and the closed-form Koopman image of an RBF
//! feature under the Ornstein-Uhlenbeck transition.

mod analytic;
mod mercer;
pub mod quadrature;

pub use analytic::{ou_koopman_rbf, AnalyticKoopmanImage};
pub use mercer::{mercer_gaussian, nystrom_mercer, MercerExpansion, NystromScheme};

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian RBF kernel `k(x, y) = exp(-||x - y||^2 / sigma^2)`.
///
/// The kernel diagonal is identically one, so the sup norm is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub bandwidth: f64,
}

impl KernelSpec {
    pub fn new(bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) {
            return Err(Error::InvalidInput(format!(
                "kernel bandwidth must be positive, got {bandwidth}"
            )));
        }
        Ok(Self { bandwidth })
    }

    /// `sup_x k(x, x)`; equals 1 for the RBF kernel.
    pub fn sup_norm(&self) -> f64 {
        1.0
    }

    /// Kernel value from a squared Euclidean distance.
    #[inline]
    pub fn eval_sq_dist(&self, sq_dist: f64) -> f64 {
        (-sq_dist / (self.bandwidth * self.bandwidth)).exp()
    }

    #[inline]
    pub fn eval_1d(&self, x: f64, y: f64) -> f64 {
        let d = x - y;
        self.eval_sq_dist(d * d)
    }
}

/// Evaluate the kernel on two points of equal dimension.
pub fn eval_kernel(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::InvalidInput("points must be non-empty".into()));
    }
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(spec.eval_sq_dist(sq))
}

/// Pairwise kernel evaluations between two point sets.
///
/// Rows index the first set, columns the second, so `gram(spec, x, x)` is the
/// symmetric matrix of kernel evaluations among the samples and
/// `gram(spec, x, y)` holds `k(x_i, y_j)`.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub entries: Array2<f64>,
    pub rows: Array2<f64>,
    pub cols: Array2<f64>,
}

pub fn gram(spec: &KernelSpec, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<GramMatrix> {
    if x.nrows() == 0 || y.nrows() == 0 {
        return Err(Error::InvalidInput("point sets must be non-empty".into()));
    }
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            got: y.ncols(),
        });
    }
    let mut entries = Array2::zeros((x.nrows(), y.nrows()));
    for (i, xi) in x.rows().into_iter().enumerate() {
        for (j, yj) in y.rows().into_iter().enumerate() {
            let sq: f64 = xi
                .iter()
                .zip(yj.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            entries[(i, j)] = spec.eval_sq_dist(sq);
        }
    }
    Ok(GramMatrix {
        entries,
        rows: x.to_owned(),
        cols: y.to_owned(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use ndarray_linalg::Eigh;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn diagonal_is_one() {
        let spec = KernelSpec::new(1.0).unwrap();
        assert_eq!(eval_kernel(&spec, &[0.0], &[0.0]).unwrap(), 1.0);
        assert_eq!(eval_kernel(&spec, &[0.3, -0.7], &[0.3, -0.7]).unwrap(), 1.0);
    }

    #[test]
    fn unit_distance_value() {
        let spec = KernelSpec::new(1.0).unwrap();
        let v = eval_kernel(&spec, &[0.0], &[1.0]).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn half_bandwidth_value() {
        // exp(-0.04 / 0.25) = exp(-0.16); reference value recomputed at high
        // precision independently of the kernel code path.
        let spec = KernelSpec::new(0.5).unwrap();
        let v = eval_kernel(&spec, &[0.3], &[0.1]).unwrap();
        assert!((v - 0.852143788966211338).abs() < 1e-15);
        assert!((v - (-0.16f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let spec = KernelSpec::new(1.0).unwrap();
        assert!(matches!(
            eval_kernel(&spec, &[0.0, 1.0], &[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn nonpositive_bandwidth_rejected() {
        assert!(KernelSpec::new(0.0).is_err());
        assert!(KernelSpec::new(-1.0).is_err());
        assert!(KernelSpec::new(f64::NAN).is_err());
    }

    #[test]
    fn gram_single_point() {
        let spec = KernelSpec::new(1.0).unwrap();
        let x = array![[0.0]];
        let g = gram(&spec, x.view(), x.view()).unwrap();
        assert_eq!(g.entries, array![[1.0]]);
    }

    #[test]
    fn gram_duplicate_points_rank_one() {
        let spec = KernelSpec::new(1.0).unwrap();
        let x = array![[0.4], [0.4]];
        let g = gram(&spec, x.view(), x.view()).unwrap();
        let (vals, _) = g.entries.eigh(ndarray_linalg::UPLO::Lower).unwrap();
        assert!((vals[0]).abs() < 1e-14);
        assert!((vals[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gram_empty_rejected() {
        let spec = KernelSpec::new(1.0).unwrap();
        let x = Array2::<f64>::zeros((0, 1));
        let y = array![[0.0]];
        assert!(gram(&spec, x.view(), y.view()).is_err());
    }

    #[test]
    fn gram_random_set_is_psd() {
        let spec = KernelSpec::new(0.7).unwrap();
        let mut rng = crate::rng::RngStream::new(5, 0).rng();
        let x = Array2::from_shape_fn((5, 2), |_| rng.gen_range(-1.0..1.0));
        let g = gram(&spec, x.view(), x.view()).unwrap();
        let (vals, _) = g.entries.eigh(ndarray_linalg::UPLO::Lower).unwrap();
        assert!(vals.iter().all(|&v| v >= -1e-12));
    }

    #[test]
    fn gram_large_set_is_psd_and_symmetric() {
        let spec = KernelSpec::new(0.5).unwrap();
        let mut rng = crate::rng::RngStream::new(9, 0).rng();
        let m = 2000;
        let x = Array2::from_shape_fn((m, 1), |_| rng.gen_range(-1.5..1.5));
        let g = gram(&spec, x.view(), x.view()).unwrap();
        for i in 0..m {
            for j in (i + 1)..m {
                assert_eq!(g.entries[(i, j)], g.entries[(j, i)]);
            }
        }
        let (vals, _) = g.entries.eigh(ndarray_linalg::UPLO::Lower).unwrap();
        let floor = -1e-10 * m as f64;
        assert!(vals.iter().all(|&v| v >= floor), "min eig {}", vals[0]);
    }

    proptest! {
        #[test]
        fn kernel_symmetric_and_bounded(
            x in prop::collection::vec(-5.0..5.0f64, 1..4),
            shift in prop::collection::vec(-5.0..5.0f64, 1..4),
            bw in 0.05..3.0f64,
        ) {
            prop_assume!(x.len() == shift.len());
            let spec = KernelSpec::new(bw).unwrap();
            let y: Vec<f64> = x.iter().zip(&shift).map(|(a, s)| a + s).collect();
            let kxy = eval_kernel(&spec, &x, &y).unwrap();
            let kyx = eval_kernel(&spec, &y, &x).unwrap();
            prop_assert_eq!(kxy, kyx);
            // Mathematically in (0, 1]; the lower end underflows to +0.0 for
            // tiny bandwidths at large distance.
            prop_assert!((0.0..=1.0).contains(&kxy));
        }
    }
}
