//! Run the identity checks of the certification layer on a problem and
//! print one line per check.

use accmd::certify::{
    check_gcs, check_step_identity, check_strong_lyapunov, check_three_point_objective, reference_minimizer,
    GcsSampling, LyapunovSuite, StepKind,
};
use accmd::objective::log_linear_instance;
use accmd::solver::{trajectory, Algorithm, Solver, SolverConfig};

fn main() -> accmd::Result<()> {
    let problem = log_linear_instance(16, 1)?;
    let xstar = reference_minimizer(&problem, 100_000)?.x;
    let suite = LyapunovSuite::new(&problem, xstar.clone())?;

    let fwd = SolverConfig::new(Algorithm::AccMdForward);
    let alpha = Solver::new(&problem, &fwd)?.alpha();
    let eps = 0.5;
    let pert = SolverConfig::new(Algorithm::PerturbedAccMd).with_epsilon(eps);
    let alpha_eps = Solver::new(&problem, &pert)?.alpha();

    let reports = [
        check_three_point_objective(&problem, 500, 1)?,
        check_strong_lyapunov(&problem, Some(&xstar), 500, 2)?,
        check_step_identity(&suite, &trajectory(&problem, &fwd, 500)?, StepKind::Forward { alpha })?,
        check_step_identity(
            &suite,
            &trajectory(&problem, &pert, 500)?,
            StepKind::Perturbed {
                alpha: alpha_eps,
                epsilon: eps,
            },
        )?,
        check_gcs(&problem, 10_000, 3, &GcsSampling::Global)?,
    ];
    for r in &reports {
        let verdict = if r.passed { "pass" } else { "FAIL" };
        println!(
            "{:<32} {verdict}  max rel {:.2e}  ({} samples)",
            r.name, r.max_rel_residual, r.samples
        );
    }
    Ok(())
}
