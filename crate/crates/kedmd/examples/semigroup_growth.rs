//! The Koopman semigroup of the logistic flow on [1, 2] admits no uniform
//! operator bound: the norm of one propagated observable grows without limit.

use kedmd::experiments::{run_semigroup_counterexample, ExperimentConfig};

fn main() -> kedmd::Result<()> {
    let cfg = ExperimentConfig::default();
    let table = run_semigroup_counterexample(&cfg)?.remove(0);
    println!("{:>6} {:>12} {:>12}", "t", "||K^t psi||", "growth");
    for row in 0..table.rows.len() {
        println!(
            "{:>6.2} {:>12.5} {:>12.3}",
            table.float(row, "t"),
            table.float(row, "norm"),
            table.float(row, "growth_vs_t0")
        );
    }
    println!("\nany candidate uniform bound is eventually exceeded");
    Ok(())
}
