//! Quantitative error certificates: the Hoeffding Hilbert-Schmidt bound, the
//! spectral-gap constants amplifying operator error into prediction error,
//! the sample-size rule, and the control-affine certificate factor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inverted Hoeffding concentration bound for the HS estimation error:
/// with `m` samples, `||C - C_hat||_HS <= epsilon` holds with probability at
/// least `1 - delta` for `epsilon = sup_norm * sqrt(8 ln(2/delta) / m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingBound {
    pub m: usize,
    pub delta: f64,
    pub sup_norm: f64,
    pub epsilon: f64,
}

pub fn hoeffding_epsilon(m: usize, delta: f64, sup_norm: f64) -> Result<HoeffdingBound> {
    if m == 0 {
        return Err(Error::InvalidInput("sample count must be >= 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if !(sup_norm > 0.0) {
        return Err(Error::InvalidInput(format!(
            "kernel sup norm must be positive, got {sup_norm}"
        )));
    }
    let epsilon = sup_norm * (8.0 * (2.0 / delta).ln() / m as f64).sqrt();
    Ok(HoeffdingBound {
        m,
        delta,
        sup_norm,
        epsilon,
    })
}

impl HoeffdingBound {
    /// Failure probability reproduced from the bound value; equals `delta` by
    /// construction.
    pub fn roundtrip_delta(&self) -> f64 {
        let e = self.epsilon / self.sup_norm;
        2.0 * (-(self.m as f64) * e * e / 8.0).exp()
    }
}

/// Smallest `m` with `m >= max(r, 8 sup_norm^2 ln(4 (n_controls + 1) / delta)
/// / epsilon^2)`; the autonomous rule is the case `n_controls = 0`.
pub fn required_samples(
    epsilon: f64,
    delta: f64,
    r: usize,
    sup_norm: f64,
    n_controls: usize,
) -> Result<usize> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if r == 0 {
        return Err(Error::InvalidInput("rank must be >= 1".into()));
    }
    let arg = 4.0 * (n_controls as f64 + 1.0) / delta;
    let needed = 8.0 * sup_norm * sup_norm * arg.ln() / (epsilon * epsilon);
    Ok((needed.ceil() as usize).max(r))
}

/// Spectral-gap constants of the leading Mercer eigenvalues:
/// `delta_r = min_j (lambda_j - lambda_{j+1}) / 2` over `j = 1..r` and
/// `c_r = 1/sqrt(lambda_r) + (r+1)/(delta_r lambda_r) (1 + trace_y)
/// sqrt(trace_x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralGapConstants {
    pub rank: usize,
    pub delta_r: f64,
    pub c_r: f64,
    pub lambda_r: f64,
    pub lambda_r_next: f64,
    pub trace_y: f64,
    pub trace_x: f64,
}

pub fn gap_constants(
    eigenvalues: &[f64],
    r: usize,
    trace_y: f64,
    trace_x: f64,
) -> Result<SpectralGapConstants> {
    if r == 0 {
        return Err(Error::InvalidInput("rank must be >= 1".into()));
    }
    if eigenvalues.len() < r + 1 {
        return Err(Error::InvalidInput(format!(
            "need at least {} eigenvalues for rank {r}, got {}",
            r + 1,
            eigenvalues.len()
        )));
    }
    if !(trace_x > 0.0) || !(trace_y > 0.0) {
        return Err(Error::InvalidInput("trace terms must be positive".into()));
    }
    let mut delta_r = f64::INFINITY;
    for j in 0..r {
        let (a, b) = (eigenvalues[j], eigenvalues[j + 1]);
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidInput(format!(
                "eigenvalues must be positive, got {a} and {b} at index {}",
                j + 1
            )));
        }
        if b >= a {
            return Err(Error::SpectralGap {
                index: j + 1,
                lambda: a,
                next: b,
            });
        }
        delta_r = delta_r.min((a - b) / 2.0);
    }
    let lambda_r = eigenvalues[r - 1];
    let c_r = 1.0 / lambda_r.sqrt()
        + (r as f64 + 1.0) / (delta_r * lambda_r) * (1.0 + trace_y) * trace_x.sqrt();
    Ok(SpectralGapConstants {
        rank: r,
        delta_r,
        c_r,
        lambda_r,
        lambda_r_next: eigenvalues[r],
        trace_y,
        trace_x,
    })
}

/// Admissible control sets supported by the certificate: axis-aligned boxes
/// containing 0 in the interior, or centered Euclidean balls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ControlSet {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { dim: usize, radius: f64 },
}

/// Control certificate factor `1 + 2 sum_i |u_i| / gamma_i`, where `gamma_i`
/// is the largest scaling that keeps `gamma e_i` inside the control set.
///
/// The quadratic-in-time remainder of the control-affine approximation has no
/// computable coefficient from the data; it is reported symbolically unless a
/// fitted value is attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlCertificate {
    pub u: Vec<f64>,
    pub gammas: Vec<f64>,
    pub factor: f64,
    /// `None` means "empirical": the coefficient must be fitted (e.g. from an
    /// affinity-defect regression) or supplied by the caller.
    pub quadratic_coefficient: Option<f64>,
}

pub fn control_factor(u: &[f64], set: &ControlSet) -> Result<ControlCertificate> {
    if u.is_empty() {
        return Err(Error::InvalidInput("control vector must be non-empty".into()));
    }
    let gammas: Vec<f64> = match set {
        ControlSet::Box { lo, hi } => {
            if lo.len() != u.len() || hi.len() != u.len() {
                return Err(Error::DimensionMismatch {
                    expected: u.len(),
                    got: lo.len().min(hi.len()),
                });
            }
            if lo.iter().any(|&a| !(a < 0.0)) || hi.iter().any(|&b| !(b > 0.0)) {
                return Err(Error::InvalidInput(
                    "0 must lie in the interior of the control box".into(),
                ));
            }
            if u.iter().zip(lo.iter().zip(hi)).any(|(&ui, (&a, &b))| ui < a || ui > b) {
                return Err(Error::InvalidInput("control u must lie in the set".into()));
            }
            // gamma_i = sup { g > 0 : g e_i in U } = hi_i for a box.
            hi.clone()
        }
        ControlSet::Ball { dim, radius } => {
            if *dim != u.len() {
                return Err(Error::DimensionMismatch {
                    expected: u.len(),
                    got: *dim,
                });
            }
            if !(*radius > 0.0) {
                return Err(Error::InvalidInput("ball radius must be positive".into()));
            }
            let norm: f64 = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > *radius + 1e-12 {
                return Err(Error::InvalidInput("control u must lie in the set".into()));
            }
            vec![*radius; u.len()]
        }
    };
    let weighted_l1: f64 = u.iter().zip(&gammas).map(|(ui, g)| ui.abs() / g).sum();
    Ok(ControlCertificate {
        u: u.to_vec(),
        gammas,
        factor: 1.0 + 2.0 * weighted_l1,
        quadratic_coefficient: None,
    })
}

/// Optional RKHS-invariance tail term `sqrt(lambda_{r+1}) * op_norm`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailTerm {
    pub lambda_next: f64,
    pub op_norm: f64,
}

/// Assembled certificate value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedBound {
    pub epsilon_term: f64,
    pub tail_term: Option<f64>,
    pub control_factor: Option<f64>,
    /// `factor * (c_r eps [+ tail])`; the quadratic-in-time remainder is NOT
    /// included and is reported through the control certificate.
    pub total: f64,
}

/// Combine the pieces into the certified prediction-error bound
/// `c_r * epsilon`, optionally adding the invariance tail
/// `sqrt(lambda_{r+1}) * M` and scaling by the control factor. Requires
/// `epsilon < delta_r`, otherwise the certificate is invalid.
pub fn certify_bound(
    hoeffding: &HoeffdingBound,
    gaps: &SpectralGapConstants,
    ctrl: Option<&ControlCertificate>,
    tail: Option<TailTerm>,
) -> Result<CertifiedBound> {
    if hoeffding.epsilon >= gaps.delta_r {
        return Err(Error::CertificateInvalid {
            epsilon: hoeffding.epsilon,
            delta_r: gaps.delta_r,
        });
    }
    let epsilon_term = gaps.c_r * hoeffding.epsilon;
    let tail_term = tail.map(|t| t.lambda_next.sqrt() * t.op_norm);
    let factor = ctrl.map(|c| c.factor);
    let total = factor.unwrap_or(1.0) * (epsilon_term + tail_term.unwrap_or(0.0));
    Ok(CertifiedBound {
        epsilon_term,
        tail_term,
        control_factor: factor,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hoeffding_reference_value() {
        // sqrt(8 ln 20 / 800) recomputed at high precision; the round trip
        // reproduces delta exactly.
        let b = hoeffding_epsilon(800, 0.1, 1.0).unwrap();
        assert!((b.epsilon - 0.17308183826022853).abs() < 1e-15);
        assert!((b.roundtrip_delta() - 0.1).abs() < 1e-13);
    }

    #[test]
    fn hoeffding_quadrupling_halves() {
        let b1 = hoeffding_epsilon(500, 0.05, 1.0).unwrap();
        let b4 = hoeffding_epsilon(2000, 0.05, 1.0).unwrap();
        assert!((b1.epsilon / b4.epsilon - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hoeffding_rejects_bad_delta() {
        assert!(hoeffding_epsilon(100, 0.0, 1.0).is_err());
        assert!(hoeffding_epsilon(100, 1.0, 1.0).is_err());
        assert!(hoeffding_epsilon(100, 2.0, 1.0).is_err());
        assert!(hoeffding_epsilon(0, 0.1, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn hoeffding_roundtrip_property(m in 1usize..1_000_000, delta in 1e-6..0.999_999f64) {
            let b = hoeffding_epsilon(m, delta, 1.0).unwrap();
            let rel = (b.roundtrip_delta() - delta).abs() / delta;
            prop_assert!(rel < 1e-12);
        }

        #[test]
        fn required_samples_inverts_epsilon(m in 2usize..100_000, delta in 0.01..0.9f64) {
            // Feeding the sample-size rule the epsilon it would certify at m
            // must give back m up to the ceiling at the float boundary.
            let sup = 1.0;
            let eps = sup * (8.0 * (4.0f64 / delta).ln() / m as f64).sqrt();
            let back = required_samples(eps, delta, 1, sup, 0).unwrap();
            prop_assert!((back as i64 - m as i64).abs() <= 1, "m = {m}, back = {back}");
        }
    }

    #[test]
    fn required_samples_reference() {
        // ceil(8 ln 40 / 0.0025) = 11805, recomputed in exact arithmetic.
        assert_eq!(required_samples(0.05, 0.1, 10, 1.0, 0).unwrap(), 11805);
    }

    #[test]
    fn required_samples_max_clause() {
        assert_eq!(required_samples(1e6, 0.1, 17, 1.0, 0).unwrap(), 17);
    }

    #[test]
    fn required_samples_monotone_in_controls() {
        let base = required_samples(0.05, 0.1, 1, 1.0, 0).unwrap();
        let one = required_samples(0.05, 0.1, 1, 1.0, 1).unwrap();
        assert!(one > base);
    }

    #[test]
    fn gap_constants_reference_rank_two() {
        let g = gap_constants(&[1.0, 0.5, 0.25], 2, 1.0, 1.0).unwrap();
        assert_eq!(g.delta_r, 0.125);
        // 1/sqrt(0.5) + 3/(0.125*0.5) * 2 * 1 = sqrt(2) + 96
        assert!((g.c_r - 97.41421356237309).abs() < 1e-10);
        assert_eq!(g.lambda_r, 0.5);
        assert_eq!(g.lambda_r_next, 0.25);
    }

    #[test]
    fn gap_constants_reference_rank_one() {
        let g = gap_constants(&[1.0, 0.5], 1, 1.0, 1.0).unwrap();
        assert_eq!(g.delta_r, 0.25);
        assert!((g.c_r - 17.0).abs() < 1e-12);
    }

    #[test]
    fn gap_constants_reject_ties() {
        assert!(matches!(
            gap_constants(&[1.0, 1.0, 0.5], 2, 1.0, 1.0),
            Err(Error::SpectralGap { .. })
        ));
    }

    #[test]
    fn gap_constants_need_enough_eigenvalues() {
        assert!(gap_constants(&[1.0, 0.5], 2, 1.0, 1.0).is_err());
    }

    #[test]
    fn control_factor_zero_control() {
        let c = control_factor(&[0.0], &ControlSet::Box { lo: vec![-1.0], hi: vec![1.0] }).unwrap();
        assert_eq!(c.factor, 1.0);
        assert!(c.quadratic_coefficient.is_none());
    }

    #[test]
    fn control_factor_unit_box() {
        let c = control_factor(&[1.0], &ControlSet::Box { lo: vec![-1.0], hi: vec![1.0] }).unwrap();
        assert_eq!(c.gammas, vec![1.0]);
        assert_eq!(c.factor, 3.0);
    }

    #[test]
    fn control_factor_ball() {
        let c = control_factor(&[1.0, 1.0], &ControlSet::Ball { dim: 2, radius: 2.0 }).unwrap();
        assert_eq!(c.gammas, vec![2.0, 2.0]);
        assert!((c.factor - 3.0).abs() < 1e-15);
    }

    #[test]
    fn control_factor_sign_invariant_for_symmetric_box() {
        let set = ControlSet::Box { lo: vec![-2.0, -2.0], hi: vec![2.0, 2.0] };
        let a = control_factor(&[0.7, -1.1], &set).unwrap();
        let b = control_factor(&[-0.7, 1.1], &set).unwrap();
        assert_eq!(a.factor, b.factor);
    }

    #[test]
    fn control_factor_requires_interior_zero() {
        let set = ControlSet::Box { lo: vec![0.0], hi: vec![1.0] };
        assert!(control_factor(&[0.5], &set).is_err());
    }

    #[test]
    fn certify_reference_chain() {
        let gaps = gap_constants(&[1.0, 0.5, 0.25], 2, 1.0, 1.0).unwrap();
        let hb = HoeffdingBound { m: 1, delta: 0.1, sup_norm: 1.0, epsilon: 0.1 };
        let plain = certify_bound(&hb, &gaps, None, None).unwrap();
        assert!((plain.total - 9.741421356237309).abs() < 1e-10);

        // Invariance tail sqrt(0.25) * e^{0.025} adds about 0.5127.
        let tail = TailTerm { lambda_next: 0.25, op_norm: (0.025f64).exp() };
        let with_tail = certify_bound(&hb, &gaps, None, Some(tail)).unwrap();
        let tail_val = with_tail.tail_term.unwrap();
        assert!((tail_val - 0.5126575602622144).abs() < 1e-12);
        assert!((with_tail.total - (plain.total + tail_val)).abs() < 1e-12);

        // A control factor of 3 scales the assembled bound.
        let ctrl = control_factor(&[1.0], &ControlSet::Box { lo: vec![-1.0], hi: vec![1.0] }).unwrap();
        let with_ctrl = certify_bound(&hb, &gaps, Some(&ctrl), None).unwrap();
        assert!((with_ctrl.total - 3.0 * plain.total).abs() < 1e-10);
    }

    #[test]
    fn certify_rejects_large_epsilon() {
        let gaps = gap_constants(&[1.0, 0.5, 0.25], 2, 1.0, 1.0).unwrap();
        let hb = HoeffdingBound { m: 1, delta: 0.1, sup_norm: 1.0, epsilon: 0.125 };
        assert!(matches!(
            certify_bound(&hb, &gaps, None, None),
            Err(Error::CertificateInvalid { .. })
        ));
        let hb_ok = HoeffdingBound { m: 1, delta: 0.1, sup_norm: 1.0, epsilon: 0.1249 };
        assert!(certify_bound(&hb_ok, &gaps, None, None).is_ok());
    }

    #[test]
    fn certify_monotone_in_samples() {
        let gaps = gap_constants(&[1.0, 0.5, 0.25], 2, 1.0, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for m in [100_000, 400_000, 1_600_000] {
            let hb = hoeffding_epsilon(m, 0.1, 1.0).unwrap();
            let b = certify_bound(&hb, &gaps, None, None).unwrap();
            assert!(b.total < prev);
            prev = b.total;
        }
    }

    #[test]
    fn certificate_serializes() {
        let gaps = gap_constants(&[1.0, 0.5, 0.25], 2, 1.0, 1.0).unwrap();
        let hb = hoeffding_epsilon(1_000_000, 0.1, 1.0).unwrap();
        let ctrl = control_factor(&[0.5], &ControlSet::Box { lo: vec![-1.0], hi: vec![1.0] }).unwrap();
        let bound = certify_bound(&hb, &gaps, Some(&ctrl), None).unwrap();
        let json = serde_json::to_string(&(&hb, &gaps, &ctrl, &bound)).unwrap();
        let (hb2, gaps2, ctrl2, bound2): (
            HoeffdingBound,
            SpectralGapConstants,
            ControlCertificate,
            CertifiedBound,
        ) = serde_json::from_str(&json).unwrap();
        assert_eq!(hb, hb2);
        assert_eq!(gaps, gaps2);
        assert_eq!(ctrl, ctrl2);
        assert_eq!(bound, bound2);
    }
}
