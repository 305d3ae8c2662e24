//! Plugging a user objective into the solvers: a weighted sum of squares on
//! the positive orthant with the entropy mirror.

use std::sync::Arc;

use accmd::linalg::Vector;
use accmd::mirror::EntropyMirror;
use accmd::objective::{NonsmoothTerm, Objective, ProblemInstance};
use accmd::solver::{run, Algorithm, SolverConfig};

/// `f(x) = Σ (xᵢ log xᵢ − xᵢ) + ½ Σ wᵢ (xᵢ − 2)²`.
#[derive(Debug)]
struct Tilted {
    w: Vector,
}

impl Objective for Tilted {
    fn dim(&self) -> usize {
        self.w.len()
    }

    fn value(&self, x: &Vector) -> accmd::Result<f64> {
        Ok(x.iter()
            .zip(self.w.iter())
            .map(|(&v, &w)| v * v.ln() - v + 0.5 * w * (v - 2.0).powi(2))
            .sum())
    }

    fn grad(&self, x: &Vector) -> accmd::Result<Vector> {
        Ok(x.zip_map(&self.w, |v, w| v.ln() + w * (v - 2.0)))
    }
}

fn main() -> accmd::Result<()> {
    let w = Vector::from(vec![0.5, 1.0, 2.0]);
    // relative to x log x: μ = 1, and L = 1 + max wᵢ·xᵢ = 5 on the region x ≤ 2
    let problem = ProblemInstance::new(
        "tilted",
        Arc::new(Tilted { w }),
        EntropyMirror::positive_orthant(3).into(),
        NonsmoothTerm::Zero,
        1.0,
        5.0,
    )?;
    let trace = run(&problem, &SolverConfig::new(Algorithm::AccMdForward), None)?;
    println!("{:?} after {} iterations", trace.status, trace.iterations());
    println!("x = {:?}", trace.final_state.x.as_slice());
    Ok(())
}
