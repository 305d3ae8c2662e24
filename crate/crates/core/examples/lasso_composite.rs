//! LASSO with the diagonal metric `D = diag(AᵀA)`: composite Acc-MD when the
//! design has full column rank, homotopy otherwise.
//!
//! cargo run --example lasso_composite -- [data.csv] [lambda]

use std::path::Path;

use accmd::objective::{lasso_instance, load_dataset, make_lasso, DataFormat};
use accmd::solver::{run, Algorithm, SolverConfig};

fn main() -> accmd::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next();
    let lambda: f64 = args.next().map_or(0.05, |s| s.parse().expect("lambda"));
    let problem = match path {
        Some(p) => {
            let ds = load_dataset(Path::new(&p), DataFormat::Csv, None)?;
            make_lasso(&ds.a, &ds.b, lambda)?
        }
        None => lasso_instance(20, 50, 4, lambda)?,
    };
    let alg = if problem.mu > 0.0 {
        Algorithm::CompositeAccMdBackward
    } else {
        Algorithm::HomotopyAccMd
    };
    let trace = run(&problem, &SolverConfig::new(alg).with_max_iters(50_000), None)?;
    let x = &trace.final_state.x;
    let support = x.iter().filter(|v| v.abs() > 1e-6).count();
    println!("{} with {}: {:?}", problem.name, alg.name(), trace.status);
    println!("objective {:.12}, support {support}/{}", trace.last().obj, x.len());
    Ok(())
}
