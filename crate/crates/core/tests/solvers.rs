//! End-to-end solver behavior on the built-in families.

use accmd::certify::{fit_rate, reference_minimizer};
use accmd::linalg::{DenseMatrix, Vector};
use accmd::objective::{log_linear_instance, make_lasso, make_quartic, max_margin_instance};
use accmd::solver::{run, Algorithm, SolverConfig, Termination};

fn quiet(alg: Algorithm) -> SolverConfig {
    SolverConfig::new(alg).with_timing(false)
}

#[test]
fn backward_and_forward_take_comparable_iterations() {
    let p = log_linear_instance(16, 1).unwrap();
    let f = run(&p, &quiet(Algorithm::AccMdForward).with_tol(1e-20), None).unwrap();
    let b = run(&p, &quiet(Algorithm::AccMdBackward).with_tol(1e-20), None).unwrap();
    assert!(f.converged() && b.converged());
    let (kf, kb) = (f.iterations() as f64, b.iterations() as f64);
    assert!(kf / kb <= 3.0 && kb / kf <= 3.0, "forward {kf}, backward {kb}");
}

#[test]
fn perturbed_energy_stays_under_its_floor() {
    let p = max_margin_instance(16, 5).unwrap();
    let xs = reference_minimizer(&p, 200_000).unwrap().x;
    let eps = 1e-3;
    let config = quiet(Algorithm::PerturbedAccMd)
        .with_epsilon(eps)
        .with_tol(0.0)
        .with_max_iters(5000);
    let trace = run(&p, &config, Some(&xs)).unwrap();
    assert_eq!(trace.status, Termination::MaxIters);
    let r = trace.radius.unwrap();
    let q = 1.0 / (1.0 + (eps / trace.gcs).sqrt());
    let e0 = trace.records[0].lyap_e.unwrap();
    for rec in &trace.records {
        let bound = q.powi(rec.k as i32) * e0 + eps * r;
        let e = rec.lyap_e.unwrap();
        assert!(e <= 10.0 * bound, "k = {}: E = {e:e}, bound {bound:e}", rec.k);
    }
}

#[test]
fn mirror_descent_objective_contracts_at_condition_rate() {
    let p = log_linear_instance(16, 1).unwrap();
    let fstar = reference_minimizer(&p, 100_000).unwrap().value;
    let trace = run(&p, &quiet(Algorithm::Md).with_tol(1e-20).with_max_iters(20_000), None).unwrap();
    let fit = fit_rate(&trace, fstar, 1..);
    let rho = fit.contraction.expect("conclusive fit");
    assert!(
        rho <= 1.0 - p.mu / p.l + 0.02,
        "rho {rho}, 1 - mu/L = {}",
        1.0 - p.mu / p.l
    );
}

#[test]
fn quartic_energy_is_monotone() {
    let p = make_quartic(64, 0).unwrap();
    let xs = reference_minimizer(&p, 100_000).unwrap().x;
    let trace = run(&p, &quiet(Algorithm::AccMdForward).with_tol(1e-16), Some(&xs)).unwrap();
    assert!(trace.converged(), "{:?}", trace.status);
    let e: Vec<f64> = trace.records.iter().map(|r| r.lyap_ealpha.unwrap()).collect();
    for (k, w) in e.windows(2).enumerate() {
        assert!(w[1] <= w[0] * (1.0 + 1e-10) + 1e-14, "k = {k}: {} -> {}", w[0], w[1]);
    }
}

#[test]
fn lasso_identity_design_is_soft_thresholding() {
    let mut b = vec![0.0; 8];
    b[0] = 1.0;
    let p = make_lasso(&DenseMatrix::identity(8), &Vector::from(b), 0.05).unwrap();
    for alg in [Algorithm::CompositeAccMdBackward, Algorithm::HomotopyAccMd] {
        let trace = run(&p, &quiet(alg).with_tol(1e-24).with_max_iters(100_000), None).unwrap();
        let x = &trace.final_state.x;
        assert!((x[0] - 0.95).abs() <= 1e-8, "{alg}: {}", x[0]);
        assert!(x.iter().skip(1).all(|v| v.abs() <= 1e-8), "{alg}: {x:?}");
    }
}

#[test]
fn trace_csv_and_summary_agree() {
    let p = log_linear_instance(8, 2).unwrap();
    let trace = run(
        &p,
        &quiet(Algorithm::AccMdForward).with_tol(0.0).with_max_iters(40),
        None,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (csv_path, json_path) = (dir.path().join("t.csv"), dir.path().join("t.json"));
    trace.save_csv(&csv_path).unwrap();
    trace.save_summary(&json_path).unwrap();

    let mut rd = csv::Reader::from_path(&csv_path).unwrap();
    assert_eq!(
        rd.headers().unwrap().iter().collect::<Vec<_>>(),
        ["k", "obj", "grad_norm_sq", "lyap_E", "lyap_Ealpha", "time_ms"]
    );
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), trace.records.len());
    for (row, rec) in rows.iter().zip(&trace.records) {
        assert_eq!(row[0].parse::<usize>().unwrap(), rec.k);
        assert_eq!(row[1].parse::<f64>().unwrap(), rec.obj);
        assert!(row[5].is_empty());
    }

    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(s["iterations"], trace.iterations());
    assert_eq!(s["final_obj"].as_f64().unwrap(), trace.last().obj);
    assert_eq!(s["termination"]["status"], "max-iters");
}

#[test]
fn zero_budget_records_only_the_start() {
    let p = log_linear_instance(8, 2).unwrap();
    let trace = run(&p, &quiet(Algorithm::AccMdBackward).with_max_iters(0), None).unwrap();
    assert_eq!(trace.records.len(), 1);
    assert_eq!(trace.records[0].k, 0);
}
