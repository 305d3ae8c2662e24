//! Library results against independent oracles: dense eigensolvers,
//! direct divergence formulas and iterative inner solvers.

use accmd::linalg::{power_method, DenseMatrix, DiagonalMatrix, LinearMap, Vector};
use accmd::mirror::{composite_prox, EntropyMirror, Mirror, MirrorFunction, QuadraticMirror, QuarticMirror};
use accmd::objective::{
    log_linear_instance, make_lasso, make_max_margin, max_margin_instance, NonsmoothTerm, ObjectiveData,
};
use accmd::rng::SeededRng;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

fn from_na(m: &DMatrix<f64>) -> DenseMatrix {
    let (r, c) = (m.nrows(), m.ncols());
    DenseMatrix::from_row_major(r, c, (0..r * c).map(|k| m[(k / c, k % c)]).collect()).unwrap()
}

fn lambda_max(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.max()
}

/// `D^{-1/2} AᵀA D^{-1/2}` with `D = diag(AᵀA)`.
fn normalized_gram(a: &DMatrix<f64>) -> DMatrix<f64> {
    let g = a.transpose() * a;
    let d = DVector::from_iterator(g.nrows(), (0..g.nrows()).map(|i| 1.0 / g[(i, i)].sqrt()));
    DMatrix::from_diagonal(&d) * g * DMatrix::from_diagonal(&d)
}

#[test]
fn power_method_on_normalized_gram_matches_eigensolver() {
    let mut rng = SeededRng::new(10);
    let a = rng.normal_matrix(10, 20);
    let oracle = lambda_max(&normalized_gram(&to_na(&a)));

    let m = from_na(&normalized_gram(&to_na(&a)));
    let est = power_method(|v| m.matvec(v).unwrap(), 20, 1e-14, 100_000, 0);
    assert!((est.value - oracle).abs() <= 1e-6, "{} vs {oracle}", est.value);

    let p = make_lasso(&a, &rng.normal_vector(10), 0.05).unwrap();
    assert!((p.gcs.value - oracle).abs() <= 1e-6, "{} vs {oracle}", p.gcs.value);
    assert_eq!(p.mu, 0.0);
}

#[test]
fn max_margin_constant_matches_eigensolver() {
    for seed in [0, 1, 2] {
        let p = max_margin_instance(16, seed).unwrap();
        let a = match p.objective.data()[0].1 {
            ObjectiveData::Matrix(a) => a.clone(),
            _ => panic!("max-margin data starts with A"),
        };
        let oracle = lambda_max(&to_na(&a));
        assert!(
            (p.gcs.value - oracle).abs() <= 1e-6,
            "seed {seed}: {} vs {oracle}",
            p.gcs.value
        );
        assert_eq!(p.l, p.gcs.value);
    }
    let p = make_max_margin(&DenseMatrix::from_diagonal(&[1.0, 2.0, 3.0]), &Vector::zeros(3)).unwrap();
    assert!((p.gcs.value - 3.0).abs() <= 1e-8);
}

#[test]
fn lasso_scaled_orthonormal_rows_have_unit_constant() {
    let mut rng = SeededRng::new(3);
    let n = 12;
    let q = to_na(&rng.normal_matrix(n, n)).qr().q();
    let a = q * 2.0;
    let oracle = lambda_max(&normalized_gram(&a));
    assert!((oracle - 1.0).abs() < 1e-12);
    let p = make_lasso(&from_na(&a), &rng.normal_vector(n), 0.1).unwrap();
    assert!((p.gcs.value - 1.0).abs() <= 1e-6, "{}", p.gcs.value);
    assert!((p.mu - 1.0).abs() <= 1e-6, "{}", p.mu);
}

#[test]
fn log_linear_relative_smoothness_sandwich() {
    let p = log_linear_instance(64, 7).unwrap();
    let g = match p.objective.data()[0].1 {
        ObjectiveData::Vector(g) => g.clone(),
        _ => panic!("log-linear data is g"),
    };
    let kl = |x: &Vector, y: &Vector| -> f64 { x.iter().zip(y.iter()).map(|(a, b)| a * (a / b).ln()).sum() };
    let mut rng = SeededRng::new(77);
    let mut worst_lo = f64::INFINITY;
    let mut worst_hi = 0f64;
    for _ in 0..1000 {
        let x = rng.simplex_point(64);
        let y = rng.simplex_point(64);
        let dphi = kl(&x, &y);
        // D_f = KL + ½(gᵀ(x − y))² for f = Σ x log x + ½(gᵀx)²
        let df = dphi + 0.5 * g.dot(&(&x - &y)).powi(2);
        assert!((p.shifted_bregman(&x, &y, 0.0).unwrap() - df).abs() <= 1e-12 * df.max(1.0));
        assert!(p.mu * dphi <= df * (1.0 + 1e-12), "lower bound");
        assert!(df <= p.l * dphi * (1.0 + 1e-12), "upper bound: {df} > {} · {dphi}", p.l);
        worst_lo = worst_lo.min(df / dphi);
        worst_hi = worst_hi.max(df / dphi);
    }
    assert!(worst_lo >= p.mu && worst_hi <= p.l, "{worst_lo} {worst_hi}");
}

/// Minimizer of a strictly convex scalar function given its derivative, by
/// bisection on `[lo, hi]`.
fn bisect(dfun: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dfun(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn soft_threshold_prox_matches_subgradient_bisection() {
    let mut rng = SeededRng::new(21);
    for _ in 0..50 {
        let n = 6;
        let d = Vector::from_fn(n, |_| rng.uniform_range(0.2, 5.0));
        let h = rng.normal_vector(n).scaled(3.0);
        let alpha = rng.uniform_range(0.0, 2.0);
        let beta = rng.uniform_range(0.1, 2.0);
        let lambda = rng.uniform_range(0.01, 1.0);
        let phi: MirrorFunction = QuadraticMirror::diagonal(DiagonalMatrix::new(d.clone()))
            .unwrap()
            .into();
        let got = composite_prox(&phi, alpha, beta, &h, &NonsmoothTerm::l1(lambda).unwrap()).unwrap();
        for i in 0..n {
            let t = beta * lambda;
            // right derivative of (1+α)dᵢy²/2 + t|y| − hᵢy
            let deriv = |y: f64| (1.0 + alpha) * d[i] * y + t * if y >= 0.0 { 1.0 } else { -1.0 } - h[i];
            let oracle = if (h[i]).abs() <= t {
                0.0
            } else {
                bisect(deriv, -100.0, 100.0)
            };
            assert!((got.primal[i] - oracle).abs() <= 1e-8, "{} vs {oracle}", got.primal[i]);
        }
    }
}

/// Simplex entropy prox by Newton's method on the multiplier of `Σy = 1`.
fn simplex_prox_newton(h: &Vector, alpha: f64) -> Vector {
    let w = 1.0 + alpha;
    let y_of = |nu: f64| h.map(|hi| ((hi - nu) / w - 1.0).exp());
    let mut nu = h.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - w;
    for _ in 0..100 {
        let y = y_of(nu);
        let s = y.sum();
        let ds = -s / w;
        let step = (s - 1.0) / ds;
        nu -= step;
        if step.abs() < 1e-16 * nu.abs().max(1.0) {
            break;
        }
    }
    y_of(nu)
}

#[test]
fn simplex_prox_matches_multiplier_newton() {
    let mut rng = SeededRng::new(22);
    let phi: MirrorFunction = EntropyMirror::simplex(9).into();
    for _ in 0..100 {
        let h = rng.normal_vector(9).scaled(rng.uniform_range(0.1, 20.0));
        let alpha = rng.uniform_range(0.0, 3.0);
        let got = composite_prox(&phi, alpha, 1.0, &h, &NonsmoothTerm::SimplexIndicator).unwrap();
        let oracle = simplex_prox_newton(&h, alpha);
        assert!(got.primal.dist_l2(&oracle) <= 1e-8, "{:?} vs {:?}", got.primal, oracle);
    }
}

/// Projected Newton for `min (1+α)φ(y) − ⟨h, y⟩` with a dense Hessian.
fn projected_newton(
    grad: impl Fn(&DVector<f64>) -> DVector<f64>,
    hess: impl Fn(&DVector<f64>) -> DMatrix<f64>,
    y0: DVector<f64>,
    positive: bool,
) -> DVector<f64> {
    let mut y = y0;
    for _ in 0..200 {
        let g = grad(&y);
        if g.norm() < 1e-15 {
            break;
        }
        let step = hess(&y).cholesky().expect("SPD Hessian").solve(&g);
        let mut t = 1.0;
        // backtrack to stay in the open orthant
        while positive && (0..y.len()).any(|i| y[i] - t * step[i] <= 0.0) {
            t *= 0.5;
        }
        y -= step * t;
    }
    y
}

#[test]
fn orthant_entropy_and_quartic_prox_match_newton() {
    let mut rng = SeededRng::new(23);
    for _ in 0..50 {
        let n = 5;
        let h = rng.normal_vector(n).scaled(2.0);
        let alpha = rng.uniform_range(0.0, 2.0);
        let w = 1.0 + alpha;
        let hn = DVector::from_column_slice(h.as_slice());

        let ent: MirrorFunction = EntropyMirror::positive_orthant(n).into();
        let got = composite_prox(&ent, alpha, 0.0, &h, &NonsmoothTerm::Zero).unwrap();
        let oracle = projected_newton(
            |y| y.map(|v| w * (v.ln() + 1.0)) - &hn,
            |y| DMatrix::from_diagonal(&y.map(|v| w / v)),
            DVector::from_element(n, 1.0),
            true,
        );
        for i in 0..n {
            assert!((got.primal[i] - oracle[i]).abs() <= 1e-8 * oracle[i].max(1.0));
        }

        let quart: MirrorFunction = QuarticMirror::new(n).into();
        let got = composite_prox(&quart, alpha, 0.0, &h, &NonsmoothTerm::Zero).unwrap();
        let oracle = projected_newton(
            |y| y * (w * (y.norm_squared() + 1.0)) - &hn,
            |y| (DMatrix::identity(n, n) * (y.norm_squared() + 1.0) + y * y.transpose() * 2.0) * w,
            DVector::zeros(n),
            false,
        );
        for i in 0..n {
            assert!(
                (got.primal[i] - oracle[i]).abs() <= 1e-8,
                "{} vs {}",
                got.primal[i],
                oracle[i]
            );
        }
    }
}

#[test]
fn dense_quadratic_prox_matches_linear_solve() {
    let mut rng = SeededRng::new(24);
    let m = rng.normal_matrix(6, 6).gram().add_identity(0.5);
    let phi: MirrorFunction = QuadraticMirror::dense(m.clone()).unwrap().into();
    let h = rng.normal_vector(6);
    let got = composite_prox(&phi, 0.7, 0.0, &h, &NonsmoothTerm::Zero).unwrap();
    let oracle = to_na(&m)
        .lu()
        .solve(&(DVector::from_column_slice(h.as_slice()) / 1.7))
        .unwrap();
    for i in 0..6 {
        assert!((got.primal[i] - oracle[i]).abs() <= 1e-10);
    }
    // the dual output is ∇φ at the primal output
    assert!(got.dual.dist_l2(&phi.grad(&got.primal).unwrap()) <= 1e-10);
}
