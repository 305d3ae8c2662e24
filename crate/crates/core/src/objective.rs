//! Objectives, nonsmooth terms and problem generators.
//!
//! A [`ProblemInstance`] bundles a smooth objective `f`, the mirror function
//! it is measured against, its relative constants `μ ≤ L`, an estimate of
//! the generalized Cauchy–Schwarz (GCS) constant `C_{f,φ}`, and an optional
//! nonsmooth term `g`. The `make_*` functions build the problem families used
//! throughout the crate; the `*_instance` helpers draw their data from a seed.

use std::fmt::Debug;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{power_method, smallest_eigenvalue, spectral_norm, DenseMatrix, DiagonalMatrix, LinearMap, Vector};
use crate::mirror::{Domain, EntropyMirror, Mirror, MirrorFunction, QuadraticMirror, QuarticMirror, SIMPLEX_TOL};
use crate::rng::SeededRng;

const POWER_TOL: f64 = 1e-13;
const POWER_MAX_ITER: usize = 100_000;

/// The nonsmooth part `g` of a composite objective.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NonsmoothTerm {
    Zero,
    L1 { lambda: f64 },
    SimplexIndicator,
}

impl NonsmoothTerm {
    pub fn l1(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::config(format!("ℓ1 weight must be positive, got {lambda}")));
        }
        Ok(NonsmoothTerm::L1 { lambda })
    }

    pub fn name(&self) -> &'static str {
        match self {
            NonsmoothTerm::Zero => "zero",
            NonsmoothTerm::L1 { .. } => "l1",
            NonsmoothTerm::SimplexIndicator => "simplex-indicator",
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, NonsmoothTerm::Zero)
    }

    pub fn value(&self, x: &Vector) -> f64 {
        match self {
            NonsmoothTerm::Zero => 0.0,
            NonsmoothTerm::L1 { lambda } => lambda * x.norm_l1(),
            NonsmoothTerm::SimplexIndicator => {
                if x.iter().all(|&v| v >= 0.0) && (x.sum() - 1.0).abs() <= SIMPLEX_TOL {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

/// Borrowed problem data, for writing instances to disk.
#[derive(Clone, Copy, Debug)]
pub enum ObjectiveData<'a> {
    Matrix(&'a DenseMatrix),
    Vector(&'a Vector),
}

/// A differentiable objective `f`.
pub trait Objective: Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> Result<f64>;
    fn grad(&self, x: &Vector) -> Result<Vector>;

    /// Named data arrays defining the objective.
    fn data(&self) -> Vec<(&'static str, ObjectiveData<'_>)> {
        Vec::new()
    }
}

/// `f(x) = Σ xᵢ log xᵢ + ½ (gᵀx)²`.
#[derive(Clone, Debug)]
pub struct LogLinear {
    pub g: Vector,
}

fn require_nonnegative(x: &Vector, what: &'static str, strict: bool) -> Result<()> {
    if let Some(i) = x.iter().position(|&v| !(v > 0.0 || (!strict && v == 0.0))) {
        return Err(Error::domain(what, format!("entry {i} = {:e}", x[i])));
    }
    Ok(())
}

impl Objective for LogLinear {
    fn dim(&self) -> usize {
        self.g.len()
    }

    fn value(&self, x: &Vector) -> Result<f64> {
        x.check_len("LogLinear::value", self.dim())?;
        require_nonnegative(x, "log-linear objective", false)?;
        let ent: f64 = x.iter().map(|&v| if v == 0.0 { 0.0 } else { v * v.ln() }).sum();
        let gx = self.g.dot(x);
        Ok(ent + 0.5 * gx * gx)
    }

    fn grad(&self, x: &Vector) -> Result<Vector> {
        x.check_len("LogLinear::grad", self.dim())?;
        require_nonnegative(x, "log-linear objective", true)?;
        let gx = self.g.dot(x);
        Ok(x.zip_map(&self.g, |v, gi| v.ln() + 1.0 + gx * gi))
    }

    fn data(&self) -> Vec<(&'static str, ObjectiveData<'_>)> {
        vec![("g", ObjectiveData::Vector(&self.g))]
    }
}

/// `f(x) = cᵀx + ½ xᵀQx`.
#[derive(Clone, Debug)]
pub struct Quadratic {
    pub q: DenseMatrix,
    pub c: Vector,
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn value(&self, x: &Vector) -> Result<f64> {
        Ok(self.c.dot(x) + 0.5 * x.dot(&self.q.matvec(x)?))
    }

    fn grad(&self, x: &Vector) -> Result<Vector> {
        Ok(&self.q.matvec(x)? + &self.c)
    }

    fn data(&self) -> Vec<(&'static str, ObjectiveData<'_>)> {
        vec![
            ("A", ObjectiveData::Matrix(&self.q)),
            ("b", ObjectiveData::Vector(&self.c)),
        ]
    }
}

/// `f(x) = ¼‖Ex‖₂⁴ + ¼‖Ax − b‖₄⁴ + ½‖Cx − d‖₂²`.
#[derive(Clone, Debug)]
pub struct QuarticObjective {
    pub a: DenseMatrix,
    pub b: Vector,
    pub c: DenseMatrix,
    pub d: Vector,
    pub e: DenseMatrix,
}

impl Objective for QuarticObjective {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn value(&self, x: &Vector) -> Result<f64> {
        let ex = self.e.matvec(x)?.norm_sq();
        let r = &self.a.matvec(x)? - &self.b;
        let quart: f64 = r.iter().map(|v| v.powi(4)).sum();
        let s = &self.c.matvec(x)? - &self.d;
        Ok(0.25 * ex * ex + 0.25 * quart + 0.5 * s.norm_sq())
    }

    fn grad(&self, x: &Vector) -> Result<Vector> {
        let ex = self.e.matvec(x)?;
        let mut g = self.e.matvec_transpose(&ex)?.scaled(ex.norm_sq());
        let r = (&self.a.matvec(x)? - &self.b).map(|v| v * v * v);
        g.axpy(1.0, &self.a.matvec_transpose(&r)?);
        let s = &self.c.matvec(x)? - &self.d;
        g.axpy(1.0, &self.c.matvec_transpose(&s)?);
        Ok(g)
    }

    fn data(&self) -> Vec<(&'static str, ObjectiveData<'_>)> {
        vec![
            ("A", ObjectiveData::Matrix(&self.a)),
            ("b", ObjectiveData::Vector(&self.b)),
            ("C", ObjectiveData::Matrix(&self.c)),
            ("d", ObjectiveData::Vector(&self.d)),
            ("E", ObjectiveData::Matrix(&self.e)),
        ]
    }
}

/// `f(x) = ½‖Ax − b‖₂²`.
#[derive(Clone, Debug)]
pub struct LeastSquares {
    pub a: DenseMatrix,
    pub b: Vector,
}

impl Objective for LeastSquares {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn value(&self, x: &Vector) -> Result<f64> {
        Ok(0.5 * (&self.a.matvec(x)? - &self.b).norm_sq())
    }

    fn grad(&self, x: &Vector) -> Result<Vector> {
        let r = &self.a.matvec(x)? - &self.b;
        self.a.matvec_transpose(&r)
    }

    fn data(&self) -> Vec<(&'static str, ObjectiveData<'_>)> {
        vec![
            ("A", ObjectiveData::Matrix(&self.a)),
            ("b", ObjectiveData::Vector(&self.b)),
        ]
    }
}

/// One-dimensional objective that is relatively smooth and strongly convex
/// with respect to `x log x` but violates the GCS condition globally:
/// `2x log x` for `x ≤ 1` and `x log x + 2x − log x − 2` for `x > 1`.
#[derive(Clone, Copy, Debug)]
pub struct Counterexample1d;

impl Objective for Counterexample1d {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &Vector) -> Result<f64> {
        x.check_len("Counterexample1d::value", 1)?;
        let t = x[0];
        if !(t > 0.0) {
            return Err(Error::domain("1-D counterexample", format!("x = {t:e} must be > 0")));
        }
        Ok(if t <= 1.0 {
            2.0 * t * t.ln()
        } else {
            t * t.ln() + 2.0 * t - t.ln() - 2.0
        })
    }

    fn grad(&self, x: &Vector) -> Result<Vector> {
        x.check_len("Counterexample1d::grad", 1)?;
        let t = x[0];
        if !(t > 0.0) {
            return Err(Error::domain("1-D counterexample", format!("x = {t:e} must be > 0")));
        }
        let d = if t <= 1.0 {
            2.0 * (t.ln() + 1.0)
        } else {
            t.ln() + 3.0 - 1.0 / t
        };
        Ok(Vector::from(vec![d]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GcsMethod {
    ExactFormula,
    PowerMethod,
    PracticalAdaptive,
    GlobalL,
}

/// An estimate of the GCS constant `C_{f,φ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcsEstimate {
    pub value: f64,
    pub method: GcsMethod,
}

impl GcsEstimate {
    pub fn new(value: f64, method: GcsMethod) -> Result<Self> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::config(format!("GCS constant must be positive, got {value}")));
        }
        Ok(Self { value, method })
    }
}

/// Parameters of the adaptive estimate `(L − μ)(1 + L_H ‖x_k − y_k‖^θ)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PracticalParams {
    /// Hölder constant `L_H` of `∇²φ`; derived from the mirror and `radius`
    /// when absent.
    pub hessian_lipschitz: Option<f64>,
    pub theta: Option<f64>,
    pub radius: Option<f64>,
    /// Current gap `‖x_k − y_k‖`.
    pub gap: Option<f64>,
}

/// Requested estimator for [`estimate_gcs`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GcsRequest {
    ExactFormula,
    PowerMethod,
    PracticalAdaptive(PracticalParams),
    GlobalL,
}

/// A fully specified optimization problem.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub name: String,
    pub family: String,
    pub seed: Option<u64>,
    pub objective: Arc<dyn Objective>,
    pub mirror: MirrorFunction,
    pub nonsmooth: NonsmoothTerm,
    pub mu: f64,
    pub l: f64,
    pub gcs: GcsEstimate,
    pub known_minimizer: Option<Vector>,
    exact_gcs: Option<f64>,
    curvature: Option<Arc<DenseMatrix>>,
}

/// Serializable summary of a problem.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ProblemMetadata {
    pub name: String,
    pub family: String,
    pub dim: usize,
    pub seed: Option<u64>,
    pub mirror: String,
    pub nonsmooth: NonsmoothTerm,
    pub mu: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub gcs: GcsEstimate,
}

impl ProblemInstance {
    /// A problem built from a user objective. The GCS estimate defaults to
    /// `L`; replace it with [`with_gcs`](Self::with_gcs) when a sharper
    /// constant is known.
    pub fn new(
        name: impl Into<String>,
        objective: Arc<dyn Objective>,
        mirror: MirrorFunction,
        nonsmooth: NonsmoothTerm,
        mu: f64,
        l: f64,
    ) -> Result<Self> {
        if objective.dim() != mirror.dim() {
            return Err(Error::Dimension {
                op: "ProblemInstance::new",
                expected: objective.dim(),
                got: mirror.dim(),
            });
        }
        if !(mu >= 0.0 && mu <= l && l.is_finite()) {
            return Err(Error::config(format!("need 0 ≤ μ ≤ L < ∞, got μ = {mu}, L = {l}")));
        }
        let name = name.into();
        Ok(Self {
            family: name.clone(),
            name,
            seed: None,
            objective,
            mirror,
            nonsmooth,
            mu,
            l,
            gcs: GcsEstimate::new(l, GcsMethod::GlobalL)?,
            known_minimizer: None,
            exact_gcs: None,
            curvature: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn metadata(&self) -> ProblemMetadata {
        ProblemMetadata {
            name: self.name.clone(),
            family: self.family.clone(),
            dim: self.dim(),
            seed: self.seed,
            mirror: self.mirror.name().to_string(),
            nonsmooth: self.nonsmooth,
            mu: self.mu,
            l: self.l,
            gcs: self.gcs,
        }
    }

    pub fn with_gcs(mut self, gcs: GcsEstimate) -> Self {
        self.gcs = gcs;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_known_minimizer(mut self, x: Vector) -> Self {
        self.known_minimizer = Some(x);
        self
    }

    pub fn is_composite(&self) -> bool {
        !self.nonsmooth.is_zero()
    }

    /// Composite objective value `f(x) + g(x)`.
    pub fn total_value(&self, x: &Vector) -> Result<f64> {
        Ok(self.objective.value(x)? + self.nonsmooth.value(x))
    }

    pub fn f(&self, x: &Vector) -> Result<f64> {
        self.objective.value(x)
    }

    pub fn grad_f(&self, x: &Vector) -> Result<Vector> {
        self.objective.grad(x)
    }

    /// `f_{−s} = f − s φ` for a shift `s` (`μ` or a perturbation `ε`).
    pub fn shifted_value(&self, x: &Vector, shift: f64) -> Result<f64> {
        if shift == 0.0 {
            return self.f(x);
        }
        Ok(self.f(x)? - shift * self.mirror.value(x)?)
    }

    pub fn shifted_grad(&self, x: &Vector, shift: f64) -> Result<Vector> {
        let mut g = self.grad_f(x)?;
        if shift != 0.0 {
            g.axpy(-shift, &self.mirror.grad(x)?);
        }
        Ok(g)
    }

    /// `D_{f − sφ}(x, y)`.
    pub fn shifted_bregman(&self, x: &Vector, y: &Vector, shift: f64) -> Result<f64> {
        let df = self.f(x)? - self.f(y)? - self.grad_f(y)?.dot(&(x - y));
        if shift == 0.0 {
            return Ok(df);
        }
        Ok(df - shift * self.mirror.bregman(x, y)?)
    }

    /// Default starting point: the uniform distribution on the simplex, the
    /// ones vector on the positive orthant and the origin otherwise.
    pub fn initial_point(&self) -> Vector {
        let n = self.dim();
        match self.mirror.domain() {
            Domain::Simplex => Vector::filled(n, 1.0 / n as f64),
            Domain::PositiveOrthant => Vector::filled(n, 1.0),
            Domain::FullSpace => Vector::zeros(n),
        }
    }
}

/// Relative-constant bound `L_H` for the Hessian of a mirror on a ball of the
/// given radius, where one is available.
pub fn hessian_lipschitz_bound(mirror: &MirrorFunction, radius: Option<f64>) -> Option<f64> {
    match mirror {
        MirrorFunction::Quadratic(_) => Some(0.0),
        // ∇²φ(x) = (‖x‖² + 1) I + 2 x xᵀ has derivative norm at most 6‖x‖.
        MirrorFunction::Quartic(_) => radius.map(|r| 6.0 * r),
        MirrorFunction::Entropy(_) => None,
    }
}

/// Estimate `C_{f,φ}` with the requested method.
pub fn estimate_gcs(problem: &ProblemInstance, request: GcsRequest) -> Result<GcsEstimate> {
    match request {
        GcsRequest::GlobalL => GcsEstimate::new(problem.l, GcsMethod::GlobalL),
        GcsRequest::ExactFormula => match problem.exact_gcs {
            Some(c) => GcsEstimate::new(c, GcsMethod::ExactFormula),
            None => Err(Error::config(format!(
                "no closed-form GCS constant for problem family '{}'",
                problem.family
            ))),
        },
        GcsRequest::PowerMethod => match &problem.curvature {
            Some(m) => {
                let est = power_method(|v| m.matvec(v).expect("square"), m.rows(), POWER_TOL, POWER_MAX_ITER, 0);
                GcsEstimate::new(est.value, GcsMethod::PowerMethod)
            }
            None => Err(Error::config(format!(
                "no curvature operator for power-method GCS estimate on '{}'",
                problem.family
            ))),
        },
        GcsRequest::PracticalAdaptive(p) => {
            let gap = p
                .gap
                .ok_or_else(|| Error::config("practical-adaptive GCS estimate needs the current gap ‖x − y‖"))?;
            let theta = p
                .theta
                .ok_or_else(|| Error::config("practical-adaptive GCS estimate needs the Hölder exponent θ"))?;
            let lh = practical_hessian_lipschitz(&problem.mirror, &p)?;
            let value = practical_gcs_value(problem.l, problem.mu, lh, gap, theta);
            GcsEstimate::new(value, GcsMethod::PracticalAdaptive)
        }
    }
}

pub(crate) fn practical_hessian_lipschitz(mirror: &MirrorFunction, p: &PracticalParams) -> Result<f64> {
    match mirror {
        // exact: a quadratic mirror has a constant Hessian
        MirrorFunction::Quadratic(_) => Ok(0.0),
        _ => p
            .hessian_lipschitz
            .or_else(|| hessian_lipschitz_bound(mirror, p.radius))
            .ok_or_else(|| {
                Error::config("practical-adaptive GCS estimate needs a Hessian Lipschitz constant or a radius")
            }),
    }
}

pub(crate) fn practical_gcs_value(l: f64, mu: f64, hessian_lipschitz: f64, gap: f64, theta: f64) -> f64 {
    (l - mu) * (1.0 + hessian_lipschitz * gap.powf(theta))
}

fn top_eigenvalue(m: &DenseMatrix) -> f64 {
    power_method(|v| m.matvec(v).expect("square"), m.rows(), POWER_TOL, POWER_MAX_ITER, 0).value
}

/// Log-linear dual model on the simplex with the entropy mirror:
/// `μ = 1`, `L = 1 + max|gᵢgⱼ|`, `C_{f,φ} = ‖g‖₂²`.
pub fn make_log_linear(g: &Vector) -> Result<ProblemInstance> {
    if g.is_empty() || g.norm_linf() == 0.0 {
        return Err(Error::config("log-linear model needs a nonzero g"));
    }
    let n = g.len();
    let max_outer = g.norm_linf().powi(2);
    let mut ggt = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            ggt[(i, j)] = g[i] * g[j];
        }
    }
    let c = g.norm_sq();
    Ok(ProblemInstance {
        name: format!("loglinear-d{n}"),
        family: "loglinear".into(),
        seed: None,
        objective: Arc::new(LogLinear { g: g.clone() }),
        mirror: EntropyMirror::simplex(n).into(),
        nonsmooth: NonsmoothTerm::SimplexIndicator,
        mu: 1.0,
        l: 1.0 + max_outer,
        gcs: GcsEstimate::new(c, GcsMethod::ExactFormula)?,
        known_minimizer: None,
        exact_gcs: Some(c),
        curvature: Some(Arc::new(ggt)),
    })
}

/// Log-linear model with `g ~ N(0, I)`.
pub fn log_linear_instance(dim: usize, seed: u64) -> Result<ProblemInstance> {
    let g = SeededRng::new(seed).normal_vector(dim);
    let mut p = make_log_linear(&g)?;
    p.seed = Some(seed);
    Ok(p)
}

/// Log-linear model with a random direction `g` rescaled to `‖g‖₂ = norm`.
pub fn log_linear_with_norm(dim: usize, seed: u64, norm: f64) -> Result<ProblemInstance> {
    let g = SeededRng::new(seed).normal_vector(dim);
    let g = g.scaled(norm / g.norm_l2());
    let mut p = make_log_linear(&g)?;
    p.seed = Some(seed);
    Ok(p)
}

/// Max-margin dual model `bᵀx + ½xᵀAx` on the simplex with the entropy
/// mirror: `μ = 0`, `C_{f,φ} = L = λ_max(A)` by power iteration.
pub fn make_max_margin(a: &DenseMatrix, b: &Vector) -> Result<ProblemInstance> {
    if !a.is_square() || a.rows() != b.len() {
        return Err(Error::Dimension {
            op: "make_max_margin",
            expected: a.rows(),
            got: b.len(),
        });
    }
    if !a.is_symmetric(1e-12) {
        return Err(Error::config("max-margin matrix must be symmetric"));
    }
    a.cholesky()
        .map_err(|e| Error::config(format!("max-margin matrix must be positive definite: {e}")))?;
    let n = a.rows();
    let lmax = top_eigenvalue(a);
    Ok(ProblemInstance {
        name: format!("maxmargin-d{n}"),
        family: "maxmargin".into(),
        seed: None,
        objective: Arc::new(Quadratic {
            q: a.clone(),
            c: b.clone(),
        }),
        mirror: EntropyMirror::simplex(n).into(),
        nonsmooth: NonsmoothTerm::SimplexIndicator,
        mu: 0.0,
        l: lmax,
        gcs: GcsEstimate::new(lmax, GcsMethod::PowerMethod)?,
        known_minimizer: None,
        exact_gcs: None,
        curvature: Some(Arc::new(a.clone())),
    })
}

/// Seeded max-margin instance with `A = I + MMᵀ/d`, `M ~ N(0, 1)` and
/// `b ~ N(0, 1)`.
pub fn max_margin_instance(dim: usize, seed: u64) -> Result<ProblemInstance> {
    let mut rng = SeededRng::new(seed);
    let m = rng.normal_matrix(dim, dim);
    let a = m.outer_gram().scaled(1.0 / dim as f64).add_identity(1.0);
    let b = rng.normal_vector(dim);
    let mut p = make_max_margin(&a, &b)?;
    p.seed = Some(seed);
    Ok(p)
}

/// Seeded max-margin instance with a prescribed interior minimizer and a
/// wide spectrum.
///
/// `A = Q diag(λ) Qᵀ` where the first column of `Q` is `1/√d` with `λ₁ = 1`
/// and the remaining columns are a random orthonormal basis of the
/// sum-zero subspace, with eigenvalues spread geometrically from `1` down to
/// `cond⁻¹`. The minimizer `x⋆` is the uniform point moved by the same
/// amount, with random signs, along every sum-zero eigenvector, and
/// `b = −A x⋆` makes it stationary. It is recorded as the known minimizer.
pub fn max_margin_spread_instance(dim: usize, seed: u64, cond: f64) -> Result<ProblemInstance> {
    if dim < 3 || !(cond >= 1.0) {
        return Err(Error::config("spread max-margin needs dim >= 3 and cond >= 1"));
    }
    let mut rng = SeededRng::new(seed);
    let q = orthonormal_basis_with_ones(dim, &mut rng);
    let lambda = |k: usize| {
        if k == 0 {
            1.0
        } else {
            cond.powf(-((k - 1) as f64) / (dim - 2) as f64)
        }
    };
    let mut a = DenseMatrix::zeros(dim, dim);
    for k in 0..dim {
        let lam = lambda(k);
        for i in 0..dim {
            for j in 0..dim {
                a[(i, j)] += lam * q[(i, k)] * q[(j, k)];
            }
        }
    }
    // symmetrize away rounding
    let a = a.add(&a.transpose())?.scaled(0.5);
    let mut shift = Vector::zeros(dim);
    for k in 1..dim {
        let sign = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
        shift.axpy(sign, &q.column(k));
    }
    let scale = 0.5 / (dim as f64 * shift.norm_linf());
    let xstar = Vector::from_fn(dim, |i| 1.0 / dim as f64 + scale * shift[i]);
    let b = -&a.matvec(&xstar)?;
    let mut p = make_max_margin(&a, &b)?;
    p.seed = Some(seed);
    p.name = format!("maxmargin-spread-d{dim}");
    Ok(p.with_known_minimizer(xstar))
}

/// Orthonormal basis whose first vector is `1/√n`, completed by
/// Gram–Schmidt on Gaussian vectors.
fn orthonormal_basis_with_ones(n: usize, rng: &mut SeededRng) -> DenseMatrix {
    let g = rng.normal_matrix(n, n);
    let mut cols: Vec<Vector> = vec![Vector::filled(n, 1.0 / (n as f64).sqrt())];
    for j in 1..n {
        let mut v = g.column(j);
        // two passes keep the basis orthogonal to working precision
        for _ in 0..2 {
            for u in &cols {
                let p = u.dot(&v);
                v.axpy(-p, u);
            }
        }
        let nv = v.norm_l2();
        v.scale_mut(1.0 / nv);
        cols.push(v);
    }
    let mut q = DenseMatrix::zeros(n, n);
    for (j, c) in cols.iter().enumerate() {
        for i in 0..n {
            q[(i, j)] = c[i];
        }
    }
    q
}

/// The quartic test problem with the quartic mirror.
///
/// Draws, in order: `A ~ N(0, I)/√n`, `C₀`, `E₀ ~ N(0, I)`, `d ~ U(0, 1)ⁿ`;
/// sets `C = I + C₀C₀ᵀ/n`, `E = 2I + E₀E₀ᵀ/n`, `b = 0`. The relative
/// constants are `μ = min{λ_E⁴/3, λ_C²}` and `L = L_f(1)` with
/// `L_f(R) = (3‖E‖⁴ + 3‖A‖⁴)R² + 6‖A‖³‖b‖R + 3‖A‖²‖b‖² + ‖C‖²`.
pub fn make_quartic(n: usize, seed: u64) -> Result<ProblemInstance> {
    if n == 0 {
        return Err(Error::config("quartic problem needs n >= 1"));
    }
    let mut rng = SeededRng::new(seed);
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let a = rng.normal_matrix(n, n).scaled(inv_sqrt_n);
    let c0 = rng.normal_matrix(n, n);
    let e0 = rng.normal_matrix(n, n);
    let d = rng.uniform_vector(n);
    let b = Vector::zeros(n);
    let wc = c0.outer_gram().scaled(1.0 / n as f64);
    let we = e0.outer_gram().scaled(1.0 / n as f64);
    let c = wc.add_identity(1.0);
    let e = we.add_identity(2.0);

    // λ_min(sI + W) = s + λ_min(W); inverse iteration on W converges much
    // faster than on the shifted matrix.
    let lambda_c = 1.0 + smallest_psd_eigenvalue(&wc, seed)?;
    let lambda_e = 2.0 + smallest_psd_eigenvalue(&we, seed)?;
    let mu = (lambda_e.powi(4) / 3.0).min(lambda_c * lambda_c);

    let norm_a = spectral_norm(&a, POWER_TOL, POWER_MAX_ITER, seed);
    let norm_c = top_eigenvalue(&c);
    let norm_e = top_eigenvalue(&e);
    let nb = b.norm_l2();
    let l = quartic_smoothness(norm_a, nb, norm_c, norm_e, 1.0);

    Ok(ProblemInstance {
        name: format!("quartic-n{n}"),
        family: "quartic".into(),
        seed: Some(seed),
        objective: Arc::new(QuarticObjective { a, b, c, d, e }),
        mirror: QuarticMirror::new(n).into(),
        nonsmooth: NonsmoothTerm::Zero,
        mu,
        l,
        gcs: GcsEstimate::new(l, GcsMethod::GlobalL)?,
        known_minimizer: None,
        exact_gcs: None,
        curvature: None,
    })
}

/// `L_f(R)` for the quartic objective.
pub fn quartic_smoothness(norm_a: f64, norm_b: f64, norm_c: f64, norm_e: f64, r: f64) -> f64 {
    (3.0 * norm_e.powi(4) + 3.0 * norm_a.powi(4)) * r * r
        + 6.0 * norm_a.powi(3) * norm_b * r
        + 3.0 * norm_a.powi(2) * norm_b * norm_b
        + norm_c * norm_c
}

/// Smallest eigenvalue of a PSD matrix, `0` when it is numerically singular.
fn smallest_psd_eigenvalue(w: &DenseMatrix, seed: u64) -> Result<f64> {
    match smallest_eigenvalue(w, 1e-8, POWER_MAX_ITER, seed) {
        Ok(est) => Ok(est.value.max(0.0)),
        Err(Error::Config(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// LASSO `½‖Ax − b‖² + λ‖x‖₁` with the diagonal mirror
/// `φ(x) = ½ xᵀDx`, `D = diag(AᵀA)`.
///
/// `C_{f,φ} = L = ρ(D^{-1/2}AᵀAD^{-1/2})`. In the over-parameterized case
/// (`rows < cols`) `μ = 0`; otherwise `μ` is the smallest eigenvalue of the
/// normalized Gram matrix.
pub fn make_lasso(a: &DenseMatrix, b: &Vector, lambda: f64) -> Result<ProblemInstance> {
    let g = NonsmoothTerm::l1(lambda)?;
    b.check_len("make_lasso", a.rows())?;
    let diag: Vector = (0..a.cols()).map(|j| a.column(j).norm_sq()).collect();
    if let Some(j) = diag.iter().position(|&v| v == 0.0) {
        return Err(Error::config(format!("design matrix column {j} is zero")));
    }
    let scale = diag.map(|v| 1.0 / v.sqrt());
    let mut normalized = a.gram();
    let n = a.cols();
    for i in 0..n {
        for j in 0..n {
            normalized[(i, j)] *= scale[i] * scale[j];
        }
    }
    let l = top_eigenvalue(&normalized);
    let mu = if a.rows() < a.cols() {
        0.0
    } else {
        smallest_psd_eigenvalue(&normalized, 0)?
    };
    Ok(ProblemInstance {
        name: format!("lasso-{}x{}", a.rows(), a.cols()),
        family: "lasso".into(),
        seed: None,
        objective: Arc::new(LeastSquares {
            a: a.clone(),
            b: b.clone(),
        }),
        mirror: QuadraticMirror::diagonal(DiagonalMatrix::new(diag))?.into(),
        nonsmooth: g,
        mu,
        l,
        gcs: GcsEstimate::new(l, GcsMethod::PowerMethod)?,
        known_minimizer: None,
        exact_gcs: None,
        curvature: Some(Arc::new(normalized)),
    })
}

/// Synthetic LASSO instance: `A ~ N(0, 1)`, a sparse ground truth with
/// `max(1, cols/10)` nonzeros and `b = A x_true + 0.01 N(0, 1)`.
pub fn lasso_instance(rows: usize, cols: usize, seed: u64, lambda: f64) -> Result<ProblemInstance> {
    let mut rng = SeededRng::new(seed);
    let a = rng.normal_matrix(rows, cols);
    let mut x_true = Vector::zeros(cols);
    for _ in 0..(cols / 10).max(1) {
        let j = rng.index(cols);
        x_true[j] = rng.normal();
    }
    let noise = rng.normal_vector(rows);
    let mut b = a.matvec(&x_true)?;
    b.axpy(0.01, &noise);
    let mut p = make_lasso(&a, &b, lambda)?;
    p.seed = Some(seed);
    Ok(p)
}

/// The one-dimensional counterexample with `φ(x) = x log x`, `μ = 1`,
/// `L = 2` and minimizer `1/e`.
pub fn make_counterexample_1d() -> ProblemInstance {
    ProblemInstance {
        name: "counterexample-1d".into(),
        family: "counterexample".into(),
        seed: None,
        objective: Arc::new(Counterexample1d),
        mirror: EntropyMirror::positive_orthant(1).into(),
        nonsmooth: NonsmoothTerm::Zero,
        mu: 1.0,
        l: 2.0,
        gcs: GcsEstimate::new(2.0, GcsMethod::GlobalL).expect("positive"),
        known_minimizer: Some(Vector::from(vec![(-1.0f64).exp()])),
        exact_gcs: None,
        curvature: None,
    }
}

/// `f(x) = ½‖x‖²` with `φ(x) = ½‖x‖²`: `μ = L = C = 1`, minimizer `0`.
pub fn make_isotropic_quadratic(n: usize) -> ProblemInstance {
    ProblemInstance {
        name: format!("isotropic-n{n}"),
        family: "isotropic".into(),
        seed: None,
        objective: Arc::new(Quadratic {
            q: DenseMatrix::identity(n),
            c: Vector::zeros(n),
        }),
        mirror: QuadraticMirror::identity(n).into(),
        nonsmooth: NonsmoothTerm::Zero,
        mu: 1.0,
        l: 1.0,
        gcs: GcsEstimate::new(1.0, GcsMethod::ExactFormula).expect("positive"),
        known_minimizer: Some(Vector::zeros(n)),
        exact_gcs: Some(1.0),
        curvature: None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataFormat {
    Csv,
    Svmlight,
}

/// A design matrix (samples × features) with its response vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub a: DenseMatrix,
    pub b: Vector,
}

impl Dataset {
    pub fn samples(&self) -> usize {
        self.a.rows()
    }

    pub fn features(&self) -> usize {
        self.a.cols()
    }
}

/// Load a dataset. CSV files carry the response in the first column and an
/// optional header row; svmlight-style files carry `label idx:val ...` with
/// 1-based indices and `dim` (or the largest index) features.
pub fn load_dataset(path: &Path, format: DataFormat, dim: Option<usize>) -> Result<Dataset> {
    let ds = match format {
        DataFormat::Csv => load_csv(path)?,
        DataFormat::Svmlight => load_svmlight(path, dim)?,
    };
    log::info!(
        "loaded {} samples x {} features from {}",
        ds.samples(),
        ds.features(),
        path.display()
    );
    Ok(ds)
}

fn load_csv(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(idx + 1, |p| p.line() as usize);
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let values = match parsed {
            Ok(v) => v,
            // a non-numeric first row is a header
            Err(_) if idx == 0 => continue,
            Err(e) => {
                return Err(Error::Parse {
                    line,
                    msg: e.to_string(),
                })
            }
        };
        if values.len() < 2 {
            return Err(Error::Parse {
                line,
                msg: "need a response and at least one feature".into(),
            });
        }
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {w} fields, found {}", values.len()),
                })
            }
            _ => {}
        }
        rows.push(values);
    }
    let cols = width.ok_or_else(|| Error::Parse {
        line: 0,
        msg: "no data rows".into(),
    })? - 1;
    let b: Vector = rows.iter().map(|r| r[0]).collect();
    let data: Vec<f64> = rows.iter().flat_map(|r| r[1..].iter().copied()).collect();
    Ok(Dataset {
        a: DenseMatrix::from_row_major(rows.len(), cols, data)?,
        b,
    })
}

fn load_svmlight(path: &Path, dim: Option<usize>) -> Result<Dataset> {
    let reader = BufReader::new(File::open(path)?);
    let mut labels = Vec::new();
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut parts = content.split_whitespace();
        let label = parts
            .next()
            .expect("nonempty line")
            .parse::<f64>()
            .map_err(|e| Error::Parse {
                line: line_no,
                msg: format!("bad label: {e}"),
            })?;
        let mut row = Vec::new();
        for tok in parts {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("expected idx:val, found '{tok}'"),
            })?;
            let idx: usize = idx.parse().map_err(|e| Error::Parse {
                line: line_no,
                msg: format!("bad index '{idx}': {e}"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "indices are 1-based".into(),
                });
            }
            let val: f64 = val.parse().map_err(|e| Error::Parse {
                line: line_no,
                msg: format!("bad value '{val}': {e}"),
            })?;
            if let Some(d) = dim {
                if idx > d {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("index {idx} exceeds declared dimension {d}"),
                    });
                }
            }
            max_index = max_index.max(idx);
            row.push((idx - 1, val));
        }
        labels.push(label);
        entries.push(row);
    }
    let cols = dim.unwrap_or(max_index);
    let mut a = DenseMatrix::zeros(entries.len(), cols);
    for (i, row) in entries.iter().enumerate() {
        for &(j, v) in row {
            a[(i, j)] = v;
        }
    }
    Ok(Dataset { a, b: labels.into() })
}

/// Write a dataset in the format [`load_dataset`] reads.
pub fn write_dataset(ds: &Dataset, path: &Path, format: DataFormat) -> Result<()> {
    match format {
        DataFormat::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            let mut header = vec!["b".to_string()];
            header.extend((1..=ds.features()).map(|j| format!("f{j}")));
            w.write_record(&header)?;
            for i in 0..ds.samples() {
                let mut rec = vec![ds.b[i].to_string()];
                rec.extend(ds.a.row(i).iter().map(f64::to_string));
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
        DataFormat::Svmlight => {
            let mut w = BufWriter::new(File::create(path)?);
            for i in 0..ds.samples() {
                write!(w, "{}", ds.b[i])?;
                for (j, v) in ds.a.row(i).iter().enumerate() {
                    if *v != 0.0 {
                        write!(w, " {}:{}", j + 1, v)?;
                    }
                }
                writeln!(w)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Write a matrix as headerless CSV.
pub fn write_matrix_csv(m: &DenseMatrix, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for i in 0..m.rows() {
        w.write_record(m.row(i).iter().map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}

/// Write a vector as a single-column headerless CSV.
pub fn write_vector_csv(v: &Vector, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for x in v.iter() {
        w.write_record([x.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
