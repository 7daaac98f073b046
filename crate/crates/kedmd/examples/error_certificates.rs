//! Assemble a full prediction-error certificate: invert the concentration
//! bound, derive the spectral-gap constants from the Mercer spectrum, attach
//! the invariance tail and a control factor, and print the sample-size rule.

use kedmd::certificates::{
    certify_bound, control_factor, gap_constants, hoeffding_epsilon, required_samples, ControlSet,
    TailTerm,
};
use kedmd::kernel::{mercer_gaussian, ou_koopman_rbf, KernelSpec};

fn main() -> kedmd::Result<()> {
    // Mercer spectrum of the RBF kernel under the OU invariant measure.
    let kernel = KernelSpec::new(0.5)?;
    let expansion = mercer_gaussian(&kernel, 0.0, 0.5, 12)?;
    let eigs = expansion.eigenvalues();
    println!("leading Mercer eigenvalues:");
    for (i, l) in eigs.iter().take(6).enumerate() {
        println!("  lambda_{} = {l:.6}", i + 1);
    }

    let r = 4;
    let gaps = gap_constants(eigs, r, 1.0, 1.0)?;
    println!("\nrank {r}: delta_r = {:.6}, c_r = {:.3}", gaps.delta_r, gaps.c_r);

    // How many samples guarantee epsilon at 90% confidence?
    let delta = 0.1;
    let epsilon = 0.5 * gaps.delta_r;
    let m = required_samples(epsilon, delta, r, kernel.sup_norm(), 0)?;
    println!("samples for epsilon = {epsilon:.4} at confidence {:.0}%: m = {m}", 100.0 * (1.0 - delta));

    let bound = hoeffding_epsilon(m, delta, kernel.sup_norm())?;
    println!("inverted bound at that m: epsilon = {:.6}", bound.epsilon);

    // Operator-norm bound for the OU Koopman operator on the RBF space.
    let image = ou_koopman_rbf(1.0, 2.0, 0.05, 0.0, 0.5)?;
    let tail = TailTerm {
        lambda_next: gaps.lambda_r_next,
        op_norm: image.norm_bound,
    };

    let plain = certify_bound(&bound, &gaps, None, Some(tail))?;
    println!("\nautonomous certificate:");
    println!("  c_r * eps   = {:.6}", plain.epsilon_term);
    println!("  tail term   = {:.6}", plain.tail_term.unwrap());
    println!("  total       = {:.6}", plain.total);

    // Single input constrained to [-1, 1], driven at u = 0.5.
    let ctrl = control_factor(&[0.5], &ControlSet::Box { lo: vec![-1.0], hi: vec![1.0] })?;
    let m_ctrl = required_samples(epsilon, delta, r, kernel.sup_norm(), 1)?;
    let bound_ctrl = hoeffding_epsilon(m_ctrl, delta, kernel.sup_norm())?;
    let controlled = certify_bound(&bound_ctrl, &gaps, Some(&ctrl), Some(tail))?;
    println!("\ncontrolled certificate (u = 0.5 in [-1, 1], m = {m_ctrl}):");
    println!("  control factor = {:.3}", controlled.control_factor.unwrap());
    println!("  total          = {:.6}", controlled.total);
    println!(
        "  quadratic term: {}",
        match ctrl.quadratic_coefficient {
            Some(c) => format!("{c:.3} t^2 (fitted)"),
            None => "O(t^2), coefficient empirical".into(),
        }
    );
    Ok(())
}
