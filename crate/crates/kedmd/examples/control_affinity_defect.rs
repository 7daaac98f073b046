//! Measure how far the Koopman action of a control-affine flow is from being
//! affine in the control, as a function of the sampling period.

use kedmd::dynamics::DuffingParams;
use kedmd::surrogate::{affinity_defect, log_log_slope, uniform_box_quadrature, ControlAffineSystem};

fn main() -> kedmd::Result<()> {
    let t_grid = [0.0125, 0.025, 0.05, 0.1];

    // Scalar linear system with constant input field and a quadratic
    // observable: the defect is |u^2 - u| ((e^{at} - 1)/a)^2 in closed form.
    let linear = ControlAffineSystem::linear_scalar(-0.2, 1.0);
    let (pts, w) = uniform_box_quadrature(&[-1.0], &[1.0], 8);
    let psi_sq = |x: &[f64]| x[0] * x[0];
    let d = affinity_defect(&linear, &psi_sq, &[0.5], &[1.0], &t_grid, &pts, &w)?;
    println!("linear system, psi = x^2:");
    for p in &d {
        println!("  t = {:>6}: defect = {:.6e}", p.t, p.defect);
    }
    println!("  slope = {:.3} (quadratic in the period)", log_log_slope(&d)?);

    // Duffing oscillator with the position observable: the leading quadratic
    // term is affine in u and cancels, leaving a quartic defect.
    let duffing = ControlAffineSystem::duffing(DuffingParams { alpha: -1.0, beta: 1.0 });
    let (pts2, w2) = uniform_box_quadrature(&[-1.5, -1.5], &[1.5, 1.5], 8);
    let psi_pos = |z: &[f64]| z[0];
    let d2 = affinity_defect(&duffing, &psi_pos, &[0.5], &[1.0], &t_grid, &pts2, &w2)?;
    println!("\nduffing, psi = z1:");
    for p in &d2 {
        println!("  t = {:>6}: defect = {:.6e}", p.t, p.defect);
    }
    println!("  slope = {:.3}", log_log_slope(&d2)?);

    // An observable with curvature in z2 recovers the generic quadratic rate.
    let psi_vel = |z: &[f64]| z[1] * z[1];
    let d3 = affinity_defect(&duffing, &psi_vel, &[0.5], &[1.0], &t_grid, &pts2, &w2)?;
    println!("\nduffing, psi = z2^2:");
    for p in &d3 {
        println!("  t = {:>6}: defect = {:.6e}", p.t, p.defect);
    }
    println!("  slope = {:.3}", log_log_slope(&d3)?);
    Ok(())
}
