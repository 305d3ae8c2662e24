//! The quartic objective with the mirror `φ(x) = ¼‖x‖⁴ + ½‖x‖²`, whose
//! inverse map needs one scalar cubic solve.

use accmd::linalg::Vector;
use accmd::mirror::{cubic_root, Mirror, QuarticMirror};
use accmd::objective::make_quartic;
use accmd::solver::{run, Algorithm, CEstimator, SolverConfig};

fn main() -> accmd::Result<()> {
    let phi = QuarticMirror::new(3);
    let x = Vector::from(vec![0.5, -1.0, 2.0]);
    let chi = phi.grad(&x)?;
    println!(
        "x = {:?}\n∇φ*(∇φ(x)) = {:?}",
        x.as_slice(),
        phi.grad_conjugate(&chi)?.as_slice()
    );
    println!("r³ + r = 10 at r = {}", cubic_root(10.0));

    let problem = make_quartic(64, 11)?;
    println!("{}: mu = {:.6}, L = {:.2}", problem.name, problem.mu, problem.l);
    let config = SolverConfig::new(Algorithm::AccMdForward).with_c_estimator(CEstimator::GlobalL);
    let trace = run(&problem, &config, None)?;
    println!(
        "{:?} after {} iterations, f = {:.10}, {:.1} ms",
        trace.status,
        trace.iterations(),
        trace.last().obj,
        trace.last().time_ms.unwrap_or(0.0)
    );
    Ok(())
}
