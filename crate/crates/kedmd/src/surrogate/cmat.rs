//! Complex matrix products via four real GEMMs, keeping the heavy lifting on
//! the optimized f64 kernel.

use ndarray::Array2;
use num_complex::Complex64;

fn split(a: &Array2<Complex64>) -> (Array2<f64>, Array2<f64>) {
    (a.mapv(|v| v.re), a.mapv(|v| v.im))
}

/// `A * B` for complex matrices.
pub fn cmatmul(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let re = ar.dot(&br) - ai.dot(&bi);
    let im = ar.dot(&bi) + ai.dot(&br);
    let mut out = Array2::zeros((a.nrows(), b.ncols()));
    for ((o, r), i) in out.iter_mut().zip(re.iter()).zip(im.iter()) {
        *o = Complex64::new(*r, *i);
    }
    out
}

/// Conjugate transpose.
pub fn hermitian(a: &Array2<Complex64>) -> Array2<Complex64> {
    a.t().mapv(|v| v.conj())
}
