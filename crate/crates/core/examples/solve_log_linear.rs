//! Forward and backward Acc-MD on the log-linear dual model.
//!
//! cargo run --example solve_log_linear -- [dim] [seed]

use accmd::certify::reference_minimizer;
use accmd::objective::log_linear_instance;
use accmd::solver::{run, Algorithm, SolverConfig};

fn main() -> accmd::Result<()> {
    let mut args = std::env::args().skip(1);
    let dim = args.next().map_or(Ok(16), |s| s.parse()).expect("dim");
    let seed = args.next().map_or(Ok(1), |s| s.parse()).expect("seed");

    let problem = log_linear_instance(dim, seed)?;
    let meta = problem.metadata();
    println!(
        "{}: mu = {}, L = {:.3}, C = {:.3}",
        meta.name, meta.mu, meta.l, meta.gcs.value
    );

    let xstar = reference_minimizer(&problem, 100_000)?;
    for alg in [Algorithm::AccMdForward, Algorithm::AccMdBackward] {
        let trace = run(&problem, &SolverConfig::new(alg), Some(&xstar.x))?;
        let s = trace.summary();
        println!(
            "{alg:>16}: {:?} in {} iterations, f = {:.12}, alpha = {:.4}",
            s.termination, s.iterations, s.final_obj, s.alpha
        );
        let e = trace.records.iter().filter_map(|r| r.lyap_ealpha).collect::<Vec<_>>();
        println!("{:>16}  E^alpha: {:.3e} -> {:.3e}", "", e[0], e[e.len() - 1]);
    }
    Ok(())
}
