//! Homotopy Acc-MD on an ill-conditioned max-margin problem (`μ = 0`).
//! Prints the stage table and the log-log slope of the objective gap
//! against the cumulative iteration count.

use accmd::certify::power_law_slope;
use accmd::objective::max_margin_spread_instance;
use accmd::solver::{run, Algorithm, SolverConfig};

fn main() -> accmd::Result<()> {
    let problem = max_margin_spread_instance(32, 2, 2f64.powi(30))?;
    let fstar = problem.total_value(problem.known_minimizer.as_ref().expect("known"))?;
    let eps0 = problem.gcs.value;
    let config = SolverConfig::new(Algorithm::HomotopyAccMd)
        .with_epsilon_min(eps0 / 2f64.powi(16))
        .with_tol(0.0)
        .with_max_iters(1_000_000);
    let trace = run(&problem, &config, None)?;

    println!(
        "{:>5} {:>12} {:>8} {:>10} {:>12}",
        "stage", "epsilon", "inner", "total", "gap"
    );
    let mut pts = Vec::new();
    for s in &trace.stages {
        let gap = s.obj - fstar;
        println!(
            "{:>5} {:>12.4e} {:>8} {:>10} {:>12.4e}",
            s.stage, s.epsilon, s.inner_iters, s.cumulative_iters, gap
        );
        pts.push((s.cumulative_iters as f64, gap));
    }
    let tail = &pts[pts.len().saturating_sub(4)..];
    println!(
        "slope over last {} stages: {:.3}",
        tail.len(),
        power_law_slope(tail).unwrap_or(f64::NAN)
    );
    Ok(())
}
