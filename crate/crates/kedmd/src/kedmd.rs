//! Empirical covariance and cross-covariance operators in Gram
//! representation, the rank-truncated kernel EDMD estimator, observable
//! prediction, and Hilbert-Schmidt norms along two independent routes
//! (Gram-exact and Mercer-truncated).

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use serde::{Deserialize, Serialize};

use crate::dynamics::DataPairs;
use crate::error::{Error, Result};
use crate::kernel::{gram, GramMatrix, KernelSpec, MercerExpansion};

/// Gram representations of the empirical covariance operator `(1/m) Psi(X)`
/// and cross-covariance operator `(1/m) Psi(Y)^T`.
#[derive(Debug, Clone)]
pub struct EmpiricalOperators {
    /// `Psi(X)`, entries `k(x_i, x_j)`; symmetric positive semi-definite.
    pub gram_xx: GramMatrix,
    /// Entries `k(x_i, y_j)`.
    pub gram_xy: GramMatrix,
    pub kernel: KernelSpec,
    pub lag: f64,
}

impl EmpiricalOperators {
    pub fn sample_count(&self) -> usize {
        self.gram_xx.entries.nrows()
    }
}

pub fn build_operators(pairs: &DataPairs, kernel: &KernelSpec) -> Result<EmpiricalOperators> {
    let gram_xx = gram(kernel, pairs.x.view(), pairs.x.view())?;
    let gram_xy = gram(kernel, pairs.x.view(), pairs.y.view())?;
    Ok(EmpiricalOperators {
        gram_xx,
        gram_xy,
        kernel: *kernel,
        lag: pairs.lag,
    })
}

/// Rank-`r` truncated kernel EDMD estimator.
///
/// The symmetric eigendecomposition `Psi(X) v_j = s_j v_j` (eigenvalues
/// descending) yields the estimator matrix
/// `M = V_r diag(1/s_j) V_r^T Psi(Y)^T`, representing the compression of the
/// Koopman operator onto the span of the kernel features at the samples. The
/// eigenvalues of the empirical covariance operator are `s_j / m`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncatedEstimator {
    pub kernel: KernelSpec,
    pub lag: f64,
    pub rank: usize,
    /// Top-r eigenvalues `s_j` of `Psi(X)`, descending.
    pub gram_eigenvalues: Vec<f64>,
    /// `s_j / m`: eigenvalues of the empirical covariance operator.
    pub cov_eigenvalues: Vec<f64>,
    /// Unit eigenvectors of `Psi(X)` as columns, m x r.
    pub eigenvectors: Array2<f64>,
    /// Training points; `x` spans the feature dictionary.
    pub points_x: Array2<f64>,
    pub points_y: Array2<f64>,
}

/// Largest rank whose Gram eigenvalue stays above `1e-10 * s_1`.
pub fn default_rank(ops: &EmpiricalOperators) -> Result<usize> {
    let m = ops.sample_count();
    let (vals, _) = ops.gram_xx.entries.eigh(UPLO::Lower)?;
    let s1 = vals[m - 1];
    let r = vals.iter().rev().take_while(|&&s| s >= 1e-10 * s1).count();
    Ok(r.max(1))
}

pub fn fit_truncated(ops: &EmpiricalOperators, rank: usize) -> Result<TruncatedEstimator> {
    let m = ops.sample_count();
    if rank == 0 || rank > m {
        return Err(Error::InvalidInput(format!(
            "rank must lie in 1..={m}, got {rank}"
        )));
    }
    let (vals, vecs) = ops.gram_xx.entries.eigh(UPLO::Lower)?;
    // LAPACK returns ascending order.
    let s1 = vals[m - 1];
    let tolerance = 1e-12 * s1;
    let mut gram_eigenvalues = Vec::with_capacity(rank);
    let mut eigenvectors = Array2::zeros((m, rank));
    for j in 0..rank {
        let idx = m - 1 - j;
        let s = vals[idx];
        if s < tolerance {
            return Err(Error::TruncationRank {
                rank: j + 1,
                eigenvalue: s,
                tolerance,
            });
        }
        gram_eigenvalues.push(s);
        eigenvectors.column_mut(j).assign(&vecs.column(idx));
    }
    let cov_eigenvalues = gram_eigenvalues.iter().map(|s| s / m as f64).collect();
    Ok(TruncatedEstimator {
        kernel: ops.kernel,
        lag: ops.lag,
        rank,
        gram_eigenvalues,
        cov_eigenvalues,
        eigenvectors,
        points_x: ops.gram_xy.rows.clone(),
        points_y: ops.gram_xy.cols.clone(),
    })
}

/// A function in the span of the kernel features at the training points:
/// `x -> sum_j coeffs[j] k(x_j, x)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DictionaryFunction {
    pub kernel: KernelSpec,
    pub centers: Array2<f64>,
    pub coeffs: Array1<f64>,
}

impl DictionaryFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.centers
            .rows()
            .into_iter()
            .zip(self.coeffs.iter())
            .map(|(c, &w)| {
                let sq: f64 = c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                w * self.kernel.eval_sq_dist(sq)
            })
            .sum()
    }
}

impl TruncatedEstimator {
    /// Apply the truncated pseudo-inverse Gram algebra to a vector of
    /// observable values at the successor samples:
    /// `c = V_r diag(1/s_j) V_r^T psi_at_y`.
    fn coefficients_from_values(&self, psi_at_y: &[f64]) -> Result<Array1<f64>> {
        let m = self.points_x.nrows();
        if psi_at_y.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: psi_at_y.len(),
            });
        }
        let v = Array1::from(psi_at_y.to_vec());
        let mut proj = self.eigenvectors.t().dot(&v);
        for (j, p) in proj.iter_mut().enumerate() {
            *p /= self.gram_eigenvalues[j];
        }
        Ok(self.eigenvectors.dot(&proj))
    }

    /// Predict the observable given its values at the successor samples.
    /// The result is the predicted `K^t psi` expressed in the feature
    /// dictionary at the initial samples.
    pub fn predict_observable_values(&self, psi_at_y: &[f64]) -> Result<DictionaryFunction> {
        Ok(DictionaryFunction {
            kernel: self.kernel,
            centers: self.points_x.clone(),
            coeffs: self.coefficients_from_values(psi_at_y)?,
        })
    }

    /// Predict the observable `psi = sum_i weights[i] k(x_i, .)` given by its
    /// coefficients in the feature dictionary.
    pub fn predict_observable_weights(&self, weights: &[f64]) -> Result<DictionaryFunction> {
        let m = self.points_x.nrows();
        if weights.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: weights.len(),
            });
        }
        // psi(y_k) = sum_i weights[i] k(x_i, y_k)
        let mut psi_at_y = vec![0.0; m];
        for (k, yk) in self.points_y.rows().into_iter().enumerate() {
            let mut acc = 0.0;
            for (i, xi) in self.points_x.rows().into_iter().enumerate() {
                let sq: f64 = xi
                    .iter()
                    .zip(yk.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                acc += weights[i] * self.kernel.eval_sq_dist(sq);
            }
            psi_at_y[k] = acc;
        }
        self.predict_observable_values(&psi_at_y)
    }

    /// The kEDMD matrix `M = [Psi(X)]_r^+ Psi(Y)^T`, materialized on demand.
    pub fn kedmd_matrix(&self) -> Result<Array2<f64>> {
        let gram_xy = gram(&self.kernel, self.points_x.view(), self.points_y.view())?;
        let psi_y_t = gram_xy.entries.t().to_owned();
        let mut vt_psi = self.eigenvectors.t().dot(&psi_y_t);
        for (j, mut row) in vt_psi.rows_mut().into_iter().enumerate() {
            row.mapv_inplace(|v| v / self.gram_eigenvalues[j]);
        }
        Ok(self.eigenvectors.dot(&vt_psi))
    }

    /// The truncated pseudo-inverse applied to `Psi(X)` itself; acts as the
    /// identity on the top-r eigenspace.
    pub fn projector(&self) -> Array2<f64> {
        self.eigenvectors.dot(&self.eigenvectors.t())
    }
}

/// Hilbert-Schmidt norm record with its computation route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsMetrics {
    pub hs_norm_sq: f64,
    pub method: HsMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HsMethod {
    GramExact,
    MercerTruncated { terms: usize },
}

/// Gram-exact squared HS norm of the empirical cross-covariance operator:
/// `(1/m^2) sum_{k,l} k(x_k, x_l) k(y_k, y_l)`.
pub fn hs_norm_gram(pairs: &DataPairs, kernel: &KernelSpec) -> Result<HsMetrics> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("pairs must be non-empty".into()));
    }
    Ok(HsMetrics {
        hs_norm_sq: hs_cross_gram(pairs, pairs, kernel)?,
        method: HsMethod::GramExact,
    })
}

/// Gram-exact HS inner product between two empirical cross-covariance
/// operators: `(1/(m1 m2)) sum_{k,l} k(x_k, x'_l) k(y_k, y'_l)`.
pub fn hs_cross_gram(a: &DataPairs, b: &DataPairs, kernel: &KernelSpec) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("pairs must be non-empty".into()));
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let mut acc = 0.0;
    for k in 0..a.len() {
        let xk = a.x.row(k);
        let yk = a.y.row(k);
        for l in 0..b.len() {
            let sqx: f64 = xk
                .iter()
                .zip(b.x.row(l).iter())
                .map(|(p, q)| (p - q) * (p - q))
                .sum();
            let sqy: f64 = yk
                .iter()
                .zip(b.y.row(l).iter())
                .map(|(p, q)| (p - q) * (p - q))
                .sum();
            acc += kernel.eval_sq_dist(sqx) * kernel.eval_sq_dist(sqy);
        }
    }
    Ok(acc / (a.len() as f64 * b.len() as f64))
}

/// Mercer matrix elements `M_ij = (1/m) sum_l e_i(x_l) e_j(y_l)` for the
/// leading eigenfunctions; the finite-sample representation of the empirical
/// cross-covariance operator in the Mercer basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MercerMatrixElements {
    pub elements: Array2<f64>,
    pub sample_count: usize,
}

impl MercerMatrixElements {
    pub fn terms(&self) -> usize {
        self.elements.nrows()
    }

    /// Average matrix elements over several collections, as done for large
    /// reference samples.
    pub fn average(collections: &[MercerMatrixElements]) -> Result<MercerMatrixElements> {
        if collections.is_empty() {
            return Err(Error::InvalidInput("no collections to average".into()));
        }
        let n = collections[0].terms();
        let mut elements = Array2::zeros((n, n));
        let mut samples = 0usize;
        for c in collections {
            if c.terms() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: c.terms(),
                });
            }
            elements += &c.elements;
            samples += c.sample_count;
        }
        elements /= collections.len() as f64;
        Ok(MercerMatrixElements {
            elements,
            sample_count: samples,
        })
    }
}

/// Streaming accumulator for Mercer matrix elements; memory stays flat in the
/// sample count.
pub struct MercerAccumulator<'a> {
    expansion: &'a MercerExpansion,
    terms: usize,
    sums: Array2<f64>,
    count: usize,
    buf_x: Vec<f64>,
    buf_y: Vec<f64>,
}

impl<'a> MercerAccumulator<'a> {
    pub fn new(expansion: &'a MercerExpansion, terms: usize) -> Result<Self> {
        if terms == 0 || terms > expansion.order() {
            return Err(Error::InvalidInput(format!(
                "terms must lie in 1..={}, got {terms}",
                expansion.order()
            )));
        }
        Ok(Self {
            expansion,
            terms,
            sums: Array2::zeros((terms, terms)),
            count: 0,
            buf_x: vec![0.0; terms],
            buf_y: vec![0.0; terms],
        })
    }

    pub fn add(&mut self, x: f64, y: f64) {
        self.expansion.eval_batch(x, &mut self.buf_x);
        self.expansion.eval_batch(y, &mut self.buf_y);
        let n = self.terms;
        let sums = self.sums.as_slice_mut().expect("row-major");
        for i in 0..n {
            let ei = self.buf_x[i];
            let row = &mut sums[i * n..(i + 1) * n];
            for (slot, &ej) in row.iter_mut().zip(self.buf_y.iter()) {
                *slot += ei * ej;
            }
        }
        self.count += 1;
    }

    pub fn finish(self) -> Result<MercerMatrixElements> {
        if self.count == 0 {
            return Err(Error::InvalidInput("no samples accumulated".into()));
        }
        Ok(MercerMatrixElements {
            elements: self.sums / self.count as f64,
            sample_count: self.count,
        })
    }
}

/// Matrix elements of one-dimensional data pairs in the Mercer basis.
pub fn mercer_matrix_elements(
    pairs: &DataPairs,
    expansion: &MercerExpansion,
    terms: usize,
) -> Result<MercerMatrixElements> {
    if pairs.dim() != 1 {
        return Err(Error::InvalidInput(
            "Mercer matrix elements require one-dimensional samples".into(),
        ));
    }
    if pairs.is_empty() {
        return Err(Error::InvalidInput("pairs must be non-empty".into()));
    }
    let mut acc = MercerAccumulator::new(expansion, terms)?;
    for k in 0..pairs.len() {
        acc.add(pairs.x[(k, 0)], pairs.y[(k, 0)]);
    }
    acc.finish()
}

fn weighted_frobenius(
    a: &MercerMatrixElements,
    b: &MercerMatrixElements,
    eigenvalues: &[f64],
) -> Result<f64> {
    let n = a.terms();
    if b.terms() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.terms(),
        });
    }
    if eigenvalues.len() < n {
        return Err(Error::InvalidInput(format!(
            "need at least {n} eigenvalues, got {}",
            eigenvalues.len()
        )));
    }
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += eigenvalues[i] * eigenvalues[j] * a.elements[(i, j)] * b.elements[(i, j)];
        }
    }
    Ok(acc)
}

/// Mercer-truncated squared HS norm `sum_{i,j <= N} lambda_i lambda_j M_ij^2`.
pub fn hs_norm_mercer(
    pairs: &DataPairs,
    expansion: &MercerExpansion,
    terms: usize,
) -> Result<HsMetrics> {
    let me = mercer_matrix_elements(pairs, expansion, terms)?;
    Ok(HsMetrics {
        hs_norm_sq: weighted_frobenius(&me, &me, expansion.eigenvalues())?,
        method: HsMethod::MercerTruncated { terms },
    })
}

/// HS inner product between two operators given by their Mercer matrix
/// elements.
pub fn hs_cross_mercer(
    a: &MercerMatrixElements,
    b: &MercerMatrixElements,
    expansion: &MercerExpansion,
) -> Result<f64> {
    weighted_frobenius(a, b, expansion.eigenvalues())
}

/// Squared-then-rooted HS distance between two empirical operators in the
/// truncated Mercer representation. Roundoff can push the squared distance
/// slightly negative; it is clamped at zero and flagged when it falls below
/// -1e-10.
pub fn estimation_error_elements(
    a: &MercerMatrixElements,
    b: &MercerMatrixElements,
    expansion: &MercerExpansion,
) -> Result<(f64, bool)> {
    let naa = weighted_frobenius(a, a, expansion.eigenvalues())?;
    let nbb = weighted_frobenius(b, b, expansion.eigenvalues())?;
    let nab = weighted_frobenius(a, b, expansion.eigenvalues())?;
    let sq = naa - 2.0 * nab + nbb;
    let suspicious = sq < -1e-10;
    Ok((sq.max(0.0).sqrt(), suspicious))
}

/// HS estimation error of `pairs` against a reference operator built from a
/// much larger sample (or averaged reference matrix elements).
pub fn estimation_error(
    pairs: &DataPairs,
    reference: &MercerMatrixElements,
    expansion: &MercerExpansion,
    terms: usize,
) -> Result<f64> {
    let me = mercer_matrix_elements(pairs, expansion, terms)?;
    let (err, _) = estimation_error_elements(&me, reference, expansion)?;
    Ok(err)
}

/// Nearest-rank empirical quantile at the given level in (0, 1).
pub fn error_percentile(trials: &[f64], level: f64) -> Result<f64> {
    if trials.is_empty() {
        return Err(Error::InvalidInput("no trials".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidInput(format!(
            "level must lie in (0, 1), got {level}"
        )));
    }
    let mut sorted = trials.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let rank = (level * sorted.len() as f64).ceil() as usize;
    Ok(sorted[rank.max(1) - 1])
}
