//! The GCS constant from each estimator, next to the largest ratio seen by
//! sampling the inequality.

use accmd::certify::{check_gcs, GcsSampling};
use accmd::objective::{estimate_gcs, log_linear_instance, max_margin_instance, GcsRequest, PracticalParams};

fn main() -> accmd::Result<()> {
    for problem in [log_linear_instance(16, 2)?, max_margin_instance(16, 2)?] {
        println!("{} (L = {:.4}, mu = {:.4})", problem.name, problem.l, problem.mu);
        // the entropy Hessian has no global Lipschitz constant, so pass one
        let practical = PracticalParams {
            hessian_lipschitz: Some(2.0),
            theta: Some(1.0),
            radius: None,
            gap: Some(0.1),
        };
        for req in [
            GcsRequest::ExactFormula,
            GcsRequest::PowerMethod,
            GcsRequest::PracticalAdaptive(practical),
            GcsRequest::GlobalL,
        ] {
            match estimate_gcs(&problem, req) {
                Ok(c) => println!("  {:?}: {:.6}", c.method, c.value),
                Err(e) => println!("  unavailable: {e}"),
            }
        }
        let r = check_gcs(&problem, 5000, 0, &GcsSampling::Global)?;
        println!(
            "  sampled sup ratio {:.6}, violations {}",
            r.extra["sup_ratio"], r.extra["violations"]
        );
    }
    Ok(())
}
