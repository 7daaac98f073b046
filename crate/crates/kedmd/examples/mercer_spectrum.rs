//! Compare the closed-form Hermite eigen-expansion of the Gaussian kernel
//! against two independent Nystrom discretizations of the integral operator.

use kedmd::kernel::{mercer_gaussian, nystrom_mercer, KernelSpec, NystromScheme};
use kedmd::rng::RngStream;

fn main() -> kedmd::Result<()> {
    let kernel = KernelSpec::new(0.5)?;
    let (mean, var) = (0.0, 0.5);
    let n = 10;

    let closed = mercer_gaussian(&kernel, mean, var, n)?;
    let gh = nystrom_mercer(&kernel, mean, var, NystromScheme::GaussHermite { nodes: 160 }, n)?;
    let mc = nystrom_mercer(
        &kernel,
        mean,
        var,
        NystromScheme::MonteCarlo {
            m_quad: 5000,
            stream: RngStream::new(7, 0),
        },
        n,
    )?;

    println!("{:>3} {:>14} {:>14} {:>14}", "n", "closed form", "gauss-hermite", "monte-carlo");
    for i in 0..n {
        println!(
            "{:>3} {:>14.8} {:>14.8} {:>14.8}",
            i + 1,
            closed.eigenvalues()[i],
            gh.eigenvalues()[i],
            mc.eigenvalues()[i]
        );
    }

    println!("\npartial trace (closed, {n} terms): {:.8}", closed.partial_trace());
    println!("geometric tail beyond that:      {:.2e}", closed.tail_bound().unwrap());

    println!("\neigenfunction values at x = 0.4:");
    for k in [1, 2, 3] {
        println!(
            "  e_{k}: closed {:+.6}  gauss-hermite {:+.6}",
            closed.eigenfunction(k, 0.4),
            gh.eigenfunction(k, 0.4)
        );
    }
    Ok(())
}
