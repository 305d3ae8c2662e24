//! Iterations to reach a relative objective error of 1e-8 on a log-linear
//! model with a large `‖g‖`: plain mirror descent against Acc-MD.

use accmd::certify::reference_minimizer;
use accmd::linalg::Vector;
use accmd::objective::make_log_linear;
use accmd::solver::{run, Algorithm, SolverConfig};

fn main() -> accmd::Result<()> {
    let mut g = vec![0.0; 10];
    g[0] = 20.0;
    let problem = make_log_linear(&Vector::from(g))?;
    let fstar = reference_minimizer(&problem, 100_000)?.value;
    println!("L = {}, C = {}, f* = {fstar:.15}", problem.l, problem.gcs.value);

    for alg in [Algorithm::Md, Algorithm::AccMdForward, Algorithm::AccMdBackward] {
        let config = SolverConfig::new(alg)
            .with_tol(0.0)
            .with_max_iters(5000)
            .with_timing(false);
        let trace = run(&problem, &config, None)?;
        let hit = trace
            .records
            .iter()
            .find(|r| (r.obj - fstar) / fstar.abs().max(1.0) <= 1e-8)
            .map(|r| r.k);
        println!("{:>16}: {:?}", alg.name(), hit);
    }
    Ok(())
}
