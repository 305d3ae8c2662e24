//! Mirror functions and their prox steps.
//!
//! A mirror function `φ` is a Legendre-type convex function. Its gradient
//! `∇φ` (the mirror map) sends a primal point `x` to the dual point `χ`, and
//! the gradient of the conjugate `∇φ*` sends it back. Three families are
//! provided:
//!
//! * [`QuadraticMirror`] `φ(x) = ½ xᵀMx` for a diagonal or dense SPD `M`,
//! * [`EntropyMirror`] `φ(x) = Σ xᵢ log xᵢ`, on the positive orthant or
//!   restricted to the probability simplex,
//! * [`QuarticMirror`] `φ(x) = ¼‖x‖⁴ + ½‖x‖²`.
//!
//! The restricted entropy is the Legendre function `φ + ι_Δ`; its conjugate
//! is the log-sum-exp function and its inverse map is the softmax. Every
//! solver step reduces to [`mirror_prox`] or [`composite_prox`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, DenseMatrix, DiagonalMatrix, LinearMap, Vector};
use crate::objective::NonsmoothTerm;

/// Sum tolerance used when checking that a point lies on the simplex.
pub const SIMPLEX_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    FullSpace,
    PositiveOrthant,
    Simplex,
}

/// Behavior shared by all mirror functions.
pub trait Mirror {
    fn dim(&self) -> usize;

    fn domain(&self) -> Domain;

    fn value(&self, x: &Vector) -> Result<f64>;

    /// The mirror map `χ = ∇φ(x)`.
    fn grad(&self, x: &Vector) -> Result<Vector>;

    /// The inverse map `x = ∇φ*(χ)`.
    fn grad_conjugate(&self, chi: &Vector) -> Result<Vector>;

    /// `φ*(χ)`.
    fn conjugate_value(&self, chi: &Vector) -> Result<f64>;

    /// `D_φ(x, y) = φ(x) − φ(y) − ⟨∇φ(y), x − y⟩`.
    fn bregman(&self, x: &Vector, y: &Vector) -> Result<f64> {
        let gy = self.grad(y)?;
        let d = self.value(x)? - self.value(y)? - gy.dot(&(x - y));
        Ok(d)
    }

    /// `D_{φ*}(η, χ) = φ*(η) − φ*(χ) − ⟨∇φ*(χ), η − χ⟩`.
    fn bregman_conjugate(&self, eta: &Vector, chi: &Vector) -> Result<f64> {
        let gc = self.grad_conjugate(chi)?;
        Ok(self.conjugate_value(eta)? - self.conjugate_value(chi)? - gc.dot(&(eta - chi)))
    }

    /// `D_φ(x, ∇φ*(η))`, for a second argument known through its dual.
    ///
    /// The entropy mirror evaluates this in the log domain, so it stays
    /// finite when entries of `∇φ*(η)` underflow to zero.
    fn bregman_to_dual(&self, x: &Vector, eta: &Vector) -> Result<f64> {
        self.bregman(x, &self.grad_conjugate(eta)?)
    }
}

/// `φ(x) = ½ xᵀMx` with `M` symmetric positive definite.
#[derive(Clone, Debug)]
pub struct QuadraticMirror {
    metric: Metric,
}

#[derive(Clone, Debug)]
enum Metric {
    Diagonal(DiagonalMatrix),
    Dense { m: DenseMatrix, chol: Cholesky },
}

impl QuadraticMirror {
    pub fn identity(n: usize) -> Self {
        Self::diagonal(DiagonalMatrix::identity(n)).expect("identity is positive")
    }

    pub fn diagonal(d: DiagonalMatrix) -> Result<Self> {
        if !d.is_positive() {
            return Err(Error::config("quadratic mirror needs a positive diagonal metric"));
        }
        Ok(Self {
            metric: Metric::Diagonal(d),
        })
    }

    pub fn dense(m: DenseMatrix) -> Result<Self> {
        if !m.is_symmetric(1e-12) {
            return Err(Error::config("quadratic mirror needs a symmetric metric"));
        }
        let chol = m.cholesky()?;
        Ok(Self {
            metric: Metric::Dense { m, chol },
        })
    }

    /// The diagonal of the metric, when the metric is diagonal.
    pub fn diagonal_metric(&self) -> Option<&DiagonalMatrix> {
        match &self.metric {
            Metric::Diagonal(d) => Some(d),
            Metric::Dense { .. } => None,
        }
    }

    fn apply(&self, v: &Vector) -> Result<Vector> {
        match &self.metric {
            Metric::Diagonal(d) => d.matvec(v),
            Metric::Dense { m, .. } => m.matvec(v),
        }
    }

    fn solve(&self, v: &Vector) -> Result<Vector> {
        match &self.metric {
            Metric::Diagonal(d) => {
                v.check_len("QuadraticMirror::grad_conjugate", d.dim())?;
                Ok(v.zip_map(d.diagonal(), |a, b| a / b))
            }
            Metric::Dense { chol, .. } => chol.solve(v),
        }
    }
}

impl Mirror for QuadraticMirror {
    fn dim(&self) -> usize {
        match &self.metric {
            Metric::Diagonal(d) => d.dim(),
            Metric::Dense { m, .. } => m.rows(),
        }
    }

    fn domain(&self) -> Domain {
        Domain::FullSpace
    }

    fn value(&self, x: &Vector) -> Result<f64> {
        Ok(0.5 * x.dot(&self.apply(x)?))
    }

    fn grad(&self, x: &Vector) -> Result<Vector> {
        self.apply(x)
    }

    fn grad_conjugate(&self, chi: &Vector) -> Result<Vector> {
        self.solve(chi)
    }

    fn conjugate_value(&self, chi: &Vector) -> Result<f64> {
        Ok(0.5 * chi.dot(&self.solve(chi)?))
    }

    fn bregman(&self, x: &Vector, y: &Vector) -> Result<f64> {
        let d = x - y;
        Ok(0.5 * d.dot(&self.apply(&d)?))
    }

    fn bregman_conjugate(&self, eta: &Vector, chi: &Vector) -> Result<f64> {
        let d = eta - chi;
        Ok(0.5 * d.dot(&self.solve(&d)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntropyMode {
    PositiveOrthant,
    Simplex,
}

/// Shannon negative entropy `φ(x) = Σ xᵢ log xᵢ`.
///
/// `D_φ` is the (generalized) Kullback–Leibler divergence. In simplex mode
/// the inverse map is the softmax and `φ*` is log-sum-exp.
#[derive(Clone, Debug)]
pub struct EntropyMirror {
    dim: usize,
    mode: EntropyMode,
}

impl EntropyMirror {
    pub fn positive_orthant(dim: usize) -> Self {
        Self {
            dim,
            mode: EntropyMode::PositiveOrthant,
        }
    }

    pub fn simplex(dim: usize) -> Self {
        Self {
            dim,
            mode: EntropyMode::Simplex,
        }
    }

    pub fn mode(&self) -> EntropyMode {
        self.mode
    }

    fn check(&self, x: &Vector, strict: bool) -> Result<()> {
        x.check_len("EntropyMirror", self.dim)?;
        let bad = x
            .iter()
            .position(|&v| !v.is_finite() || v < 0.0 || (strict && v == 0.0));
        if let Some(i) = bad {
            return Err(Error::domain(
                "entropy mirror",
                format!("entry {i} = {:e} must be {}", x[i], if strict { "> 0" } else { ">= 0" }),
            ));
        }
        if self.mode == EntropyMode::Simplex {
            let s = x.sum();
            if (s - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::domain("entropy mirror", format!("simplex point sums to {s}")));
            }
        }
        Ok(())
    }
}

fn xlogx(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v * v.ln()
    }
}

/// `log Σ exp(vᵢ)`, stabilized by the maximum.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Normalized exponential of `v`.
pub fn softmax(v: &[f64]) -> Vector {
    log_softmax(v).map(f64::exp)
}

/// `vᵢ − log Σ exp(vⱼ)`, with the maximum subtracted first so that shifts
/// of `v` by a constant cancel exactly.
fn log_softmax(v: &[f64]) -> Vector {
    let m = v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let shifted: Vector = v.iter().map(|&x| x - m).collect();
    let log_z = shifted.iter().map(|x| x.exp()).sum::<f64>().ln();
    shifted.map(|x| x - log_z)
}

impl Mirror for EntropyMirror {
    fn dim(&self) -> usize {
        self.dim
    }

    fn domain(&self) -> Domain {
        match self.mode {
            EntropyMode::PositiveOrthant => Domain::PositiveOrthant,
            EntropyMode::Simplex => Domain::Simplex,
        }
    }

    fn value(&self, x: &Vector) -> Result<f64> {
        self.check(x, false)?;
        Ok(x.iter().map(|&v| xlogx(v)).sum())
    }

    fn grad(&self, x: &Vector) -> Result<Vector> {
        self.check(x, true)?;
        Ok(x.map(|v| v.ln() + 1.0))
    }

    fn grad_conjugate(&self, chi: &Vector) -> Result<Vector> {
        chi.check_len("EntropyMirror::grad_conjugate", self.dim)?;
        if !chi.is_finite() {
            return Err(Error::NonFinite("entropy dual point"));
        }
        Ok(match self.mode {
            EntropyMode::PositiveOrthant => chi.map(|c| (c - 1.0).exp()),
            EntropyMode::Simplex => softmax(chi),
        })
    }

    fn conjugate_value(&self, chi: &Vector) -> Result<f64> {
        chi.check_len("EntropyMirror::conjugate_value", self.dim)?;
        Ok(match self.mode {
            EntropyMode::PositiveOrthant => chi.iter().map(|c| (c - 1.0).exp()).sum(),
            EntropyMode::Simplex => log_sum_exp(chi),
        })
    }

    fn bregman(&self, x: &Vector, y: &Vector) -> Result<f64> {
        self.check(x, false)?;
        self.check(y, true)?;
        Ok(x.iter()
            .zip(y.iter())
            .map(|(&a, &b)| if a == 0.0 { b } else { a * (a / b).ln() - a + b })
            .sum())
    }

    fn bregman_to_dual(&self, x: &Vector, eta: &Vector) -> Result<f64> {
        self.check(x, false)?;
        eta.check_len("EntropyMirror::bregman_to_dual", self.dim)?;
        if !eta.is_finite() {
            return Err(Error::NonFinite("entropy dual point"));
        }
        let log_y = match self.mode {
            EntropyMode::PositiveOrthant => eta.map(|c| c - 1.0),
            EntropyMode::Simplex => log_softmax(eta),
        };
        Ok(x.iter()
            .zip(log_y.iter())
            .map(|(&a, &ly)| {
                let b = ly.exp();
                if a == 0.0 {
                    b
                } else {
                    a * (a.ln() - ly) - a + b
                }
            })
            .sum())
    }
}

/// `φ(x) = ¼‖x‖⁴ + ½‖x‖²`, so `∇φ(x) = (‖x‖² + 1) x`.
#[derive(Clone, Debug)]
pub struct QuarticMirror {
    dim: usize,
}

impl QuarticMirror {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

/// The unique real root of `r³ + r = s` for `s ≥ 0`.
///
/// Newton's method from `r₀ = min(s^{1/3}, s)`, kept inside the bracket
/// `[0, max(1, s)]` by bisection whenever a Newton step leaves it.
pub fn cubic_root(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0_f64, s.max(1.0));
    // the root lies below s, which matters when s < 1
    let mut r = s.cbrt().min(s);
    for _ in 0..200 {
        let p = r * r * r + r - s;
        if p == 0.0 {
            break;
        }
        if p > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let mut next = r - p / (3.0 * r * r + 1.0);
        if !(next >= lo && next <= hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - r).abs() <= 1e-14 * r.max(1.0);
        r = next;
        if done {
            break;
        }
    }
    r
}

impl Mirror for QuarticMirror {
    fn dim(&self) -> usize {
        self.dim
    }

    fn domain(&self) -> Domain {
        Domain::FullSpace
    }

    fn value(&self, x: &Vector) -> Result<f64> {
        x.check_len("QuarticMirror::value", self.dim)?;
        let s = x.norm_sq();
        Ok(0.25 * s * s + 0.5 * s)
    }

    fn grad(&self, x: &Vector) -> Result<Vector> {
        x.check_len("QuarticMirror::grad", self.dim)?;
        let s = x.norm_sq();
        Ok(x.scaled(s + 1.0))
    }

    fn grad_conjugate(&self, chi: &Vector) -> Result<Vector> {
        quartic_grad_conjugate(chi)
    }

    fn conjugate_value(&self, chi: &Vector) -> Result<f64> {
        let x = quartic_grad_conjugate(chi)?;
        Ok(chi.dot(&x) - self.value(&x)?)
    }
}

/// Inverse of the quartic mirror map: `x = χ / (r² + 1)` where
/// `r³ + r = ‖χ‖₂`.
pub fn quartic_grad_conjugate(chi: &Vector) -> Result<Vector> {
    if !chi.is_finite() {
        return Err(Error::NonFinite("quartic dual point"));
    }
    let r = cubic_root(chi.norm_l2());
    Ok(chi.scaled(1.0 / (r * r + 1.0)))
}

/// One of the supported mirror functions.
#[derive(Clone, Debug)]
pub enum MirrorFunction {
    Quadratic(QuadraticMirror),
    Entropy(EntropyMirror),
    Quartic(QuarticMirror),
}

impl MirrorFunction {
    pub fn name(&self) -> &'static str {
        match self {
            MirrorFunction::Quadratic(_) => "quadratic",
            MirrorFunction::Entropy(e) if e.mode == EntropyMode::Simplex => "entropy-simplex",
            MirrorFunction::Entropy(_) => "entropy",
            MirrorFunction::Quartic(_) => "quartic",
        }
    }

    fn inner(&self) -> &dyn Mirror {
        match self {
            MirrorFunction::Quadratic(m) => m,
            MirrorFunction::Entropy(m) => m,
            MirrorFunction::Quartic(m) => m,
        }
    }
}

impl From<QuadraticMirror> for MirrorFunction {
    fn from(m: QuadraticMirror) -> Self {
        MirrorFunction::Quadratic(m)
    }
}

impl From<EntropyMirror> for MirrorFunction {
    fn from(m: EntropyMirror) -> Self {
        MirrorFunction::Entropy(m)
    }
}

impl From<QuarticMirror> for MirrorFunction {
    fn from(m: QuarticMirror) -> Self {
        MirrorFunction::Quartic(m)
    }
}

impl Mirror for MirrorFunction {
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn domain(&self) -> Domain {
        self.inner().domain()
    }
    fn value(&self, x: &Vector) -> Result<f64> {
        self.inner().value(x)
    }
    fn grad(&self, x: &Vector) -> Result<Vector> {
        self.inner().grad(x)
    }
    fn grad_conjugate(&self, chi: &Vector) -> Result<Vector> {
        self.inner().grad_conjugate(chi)
    }
    fn conjugate_value(&self, chi: &Vector) -> Result<f64> {
        self.inner().conjugate_value(chi)
    }
    fn bregman(&self, x: &Vector, y: &Vector) -> Result<f64> {
        self.inner().bregman(x, y)
    }
    fn bregman_conjugate(&self, eta: &Vector, chi: &Vector) -> Result<f64> {
        self.inner().bregman_conjugate(eta, chi)
    }
    fn bregman_to_dual(&self, x: &Vector, eta: &Vector) -> Result<f64> {
        self.inner().bregman_to_dual(x, eta)
    }
}

/// Output of a prox step: the primal minimizer and its dual `∇φ(y)`.
#[derive(Clone, Debug)]
pub struct ProxPoint {
    pub primal: Vector,
    pub dual: Vector,
}

/// Minimizer of `(1+α)φ(y) − ⟨h, y⟩`, i.e. `y = ∇φ*(h / (1+α))`.
///
/// For the simplex-restricted entropy the minimum is taken over the simplex.
pub fn mirror_prox(phi: &MirrorFunction, alpha: f64, h: &Vector) -> Result<ProxPoint> {
    if !(alpha > -1.0) {
        return Err(Error::config(format!(
            "prox weight 1 + α must be positive (α = {alpha})"
        )));
    }
    h.check_len("mirror_prox", phi.dim())?;
    let scaled = h.scaled(1.0 / (1.0 + alpha));
    match phi {
        MirrorFunction::Entropy(e) if e.mode == EntropyMode::Simplex => Ok(simplex_entropy_prox(&scaled)),
        _ => {
            let primal = phi.grad_conjugate(&scaled)?;
            Ok(ProxPoint { primal, dual: scaled })
        }
    }
}

fn simplex_entropy_prox(scaled: &Vector) -> ProxPoint {
    let log_p = log_softmax(scaled);
    let primal = log_p.map(f64::exp);
    let dual = log_p.map(|c| c + 1.0);
    ProxPoint { primal, dual }
}

/// Minimizer of `(1+α)φ(y) + β g(y) − ⟨h, y⟩`.
///
/// Supported pairs: diagonal quadratic with `λ‖·‖₁` (generalized soft
/// thresholding), entropy with the simplex indicator (softmax), and any
/// mirror with `g = 0`.
pub fn composite_prox(phi: &MirrorFunction, alpha: f64, beta: f64, h: &Vector, g: &NonsmoothTerm) -> Result<ProxPoint> {
    if !(alpha > -1.0) {
        return Err(Error::config(format!(
            "prox weight 1 + α must be positive (α = {alpha})"
        )));
    }
    if !(beta >= 0.0) {
        return Err(Error::config(format!(
            "nonsmooth weight β must be nonnegative (β = {beta})"
        )));
    }
    h.check_len("composite_prox", phi.dim())?;
    match (phi, g) {
        (_, NonsmoothTerm::Zero) => mirror_prox(phi, alpha, h),
        (MirrorFunction::Quadratic(q), NonsmoothTerm::L1 { lambda }) => {
            let Some(d) = q.diagonal_metric() else {
                return Err(Error::config("ℓ1 prox requires a diagonal quadratic mirror"));
            };
            let thr = beta * lambda;
            let primal: Vector = h.zip_map(d.diagonal(), |hi, di| {
                hi.signum() * (hi.abs() - thr).max(0.0) / ((1.0 + alpha) * di)
            });
            let dual = d.matvec(&primal)?;
            Ok(ProxPoint { primal, dual })
        }
        (MirrorFunction::Entropy(_), NonsmoothTerm::SimplexIndicator) => {
            Ok(simplex_entropy_prox(&h.scaled(1.0 / (1.0 + alpha))))
        }
        (phi, g) => Err(Error::config(format!(
            "unsupported mirror/nonsmooth pair: {} with {}",
            phi.name(),
            g.name()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
    }

    fn sample(phi: &MirrorFunction, rng: &mut SeededRng) -> Vector {
        let n = phi.dim();
        match phi.domain() {
            Domain::FullSpace => rng.normal_vector(n),
            Domain::PositiveOrthant => rng.uniform_vector(n).map(|u| 0.05 + 2.0 * u),
            Domain::Simplex => rng.simplex_point(n),
        }
    }

    fn families(n: usize) -> Vec<MirrorFunction> {
        let mut rng = SeededRng::new(11);
        let d = DiagonalMatrix::new(rng.uniform_vector(n).map(|u| 0.5 + u));
        let dense = rng.normal_matrix(n, n).gram().add_identity(1.0);
        vec![
            QuadraticMirror::identity(n).into(),
            QuadraticMirror::diagonal(d).unwrap().into(),
            QuadraticMirror::dense(dense).unwrap().into(),
            EntropyMirror::positive_orthant(n).into(),
            EntropyMirror::simplex(n).into(),
            QuarticMirror::new(n).into(),
        ]
    }

    #[test]
    fn quadratic_bregman_is_half_squared_distance() {
        let phi: MirrorFunction = QuadraticMirror::identity(2).into();
        let d = phi.bregman(&vec![1.0, 0.0].into(), &vec![0.0, 0.0].into()).unwrap();
        assert_eq!(d, 0.5);
    }

    #[test]
    fn entropy_bregman_matches_kl_sum() {
        let phi: MirrorFunction = EntropyMirror::simplex(2).into();
        let x = Vector::from(vec![0.5, 0.5]);
        let y = Vector::from(vec![0.25, 0.75]);
        // oracle: Σ xᵢ log(xᵢ / yᵢ) evaluated term by term
        let oracle = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
        let expected = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((oracle - expected).abs() < 1e-15);
        assert!((phi.bregman(&x, &y).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn entropy_rejects_nonpositive_points() {
        let phi: MirrorFunction = EntropyMirror::positive_orthant(2).into();
        let err = phi.bregman(&vec![0.5, 0.5].into(), &vec![0.0, 1.0].into()).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
        assert!(phi.grad(&vec![-0.1, 1.0].into()).is_err());
        // zero is allowed in the first argument
        assert!(phi.bregman(&vec![0.0, 1.0].into(), &vec![0.5, 0.5].into()).is_ok());
    }

    #[test]
    fn bregman_vanishes_on_diagonal() {
        let mut rng = SeededRng::new(1);
        for phi in families(5) {
            for _ in 0..20 {
                let x = sample(&phi, &mut rng);
                assert!(phi.bregman(&x, &x).unwrap().abs() < 1e-12, "{}", phi.name());
            }
        }
    }

    #[test]
    fn bregman_positive_off_diagonal() {
        let mut rng = SeededRng::new(2);
        for phi in families(5) {
            for _ in 0..100 {
                let x = sample(&phi, &mut rng);
                let y = sample(&phi, &mut rng);
                assert!(phi.bregman(&x, &y).unwrap() > 0.0, "{}", phi.name());
            }
        }
    }

    #[test]
    fn roundtrip_inverse_map() {
        let mut rng = SeededRng::new(3);
        for phi in families(6) {
            for _ in 0..200 {
                let x = sample(&phi, &mut rng);
                let back = phi.grad_conjugate(&phi.grad(&x).unwrap()).unwrap();
                let err = (&back - &x).norm_linf() / x.norm_linf().max(1.0);
                assert!(err <= 1e-10, "{} roundtrip error {err:e}", phi.name());
            }
        }
    }

    #[test]
    fn three_point_identity() {
        let mut rng = SeededRng::new(4);
        for phi in families(6) {
            let mut worst = 0f64;
            for _ in 0..1000 {
                let (x, y, z) = (sample(&phi, &mut rng), sample(&phi, &mut rng), sample(&phi, &mut rng));
                let lhs = (&phi.grad(&y).unwrap() - &phi.grad(&x).unwrap()).dot(&(&y - &z));
                let rhs = phi.bregman(&y, &x).unwrap() + phi.bregman(&z, &y).unwrap() - phi.bregman(&z, &x).unwrap();
                worst = worst.max(rel(lhs, rhs));
            }
            assert!(worst <= 1e-10, "{}: {worst:e}", phi.name());
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let mut rng = SeededRng::new(5);
        for phi in families(6) {
            for _ in 0..300 {
                let x = sample(&phi, &mut rng);
                let y = sample(&phi, &mut rng);
                let primal = phi.bregman(&x, &y).unwrap();
                let dual = phi
                    .bregman_conjugate(&phi.grad(&y).unwrap(), &phi.grad(&x).unwrap())
                    .unwrap();
                assert!(rel(primal, dual) <= 1e-10, "{}: {primal} vs {dual}", phi.name());
            }
        }
    }

    #[test]
    fn pinsker_on_simplex() {
        let phi: MirrorFunction = EntropyMirror::simplex(7).into();
        let mut rng = SeededRng::new(6);
        for _ in 0..1000 {
            let y = rng.simplex_point(7);
            let yh = rng.simplex_point(7);
            let l1 = y.dist_l1(&yh);
            assert!(l1 * l1 <= 2.0 * phi.bregman(&yh, &y).unwrap() + 1e-15);
        }
    }

    #[test]
    fn quartic_inverse_map_examples() {
        let x = quartic_grad_conjugate(&vec![2.0, 0.0, 0.0].into()).unwrap();
        assert!((&x - &Vector::basis(3, 0)).norm_linf() < 1e-14);
        let x = quartic_grad_conjugate(&vec![10.0, 0.0].into()).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-14 && x[1] == 0.0);
        assert_eq!(quartic_grad_conjugate(&Vector::zeros(3)).unwrap(), Vector::zeros(3));
    }

    #[test]
    fn cubic_root_wide_range() {
        for &s in &[1e-300, 1e-12, 1e-3, 0.5, 2.0, 10.0, 1e3, 1e9, 1e15] {
            let r = cubic_root(s);
            let resid = (r * r * r + r - s).abs() / s.max(1e-300);
            assert!(resid < 1e-13, "s = {s}: r = {r}, resid {resid:e}");
        }
    }

    #[test]
    fn mirror_prox_examples() {
        let phi: MirrorFunction = QuadraticMirror::identity(2).into();
        let h = Vector::from(vec![2.0, 4.0]);
        assert_eq!(mirror_prox(&phi, 0.0, &h).unwrap().primal, h);
        assert_eq!(mirror_prox(&phi, 1.0, &h).unwrap().primal.as_slice(), &[1.0, 2.0]);

        let ent: MirrorFunction = EntropyMirror::positive_orthant(3).into();
        let z = Vector::from(vec![0.2, 1.5, 0.01]);
        let alpha = 0.7;
        let h = ent.grad(&z).unwrap().scaled(1.0 + alpha);
        let y = mirror_prox(&ent, alpha, &h).unwrap().primal;
        assert!((&y - &z).norm_linf() < 1e-14);

        assert!(matches!(mirror_prox(&phi, -1.0, &h), Err(Error::Config(_))));
    }

    #[test]
    fn prox_dual_matches_mirror_map() {
        let mut rng = SeededRng::new(7);
        for phi in families(5) {
            for _ in 0..50 {
                let h = rng.normal_vector(5).scaled(3.0);
                let p = mirror_prox(&phi, 0.3, &h).unwrap();
                let g = phi.grad(&p.primal).unwrap();
                assert!(
                    (&g - &p.dual).norm_linf() <= 1e-10 * g.norm_linf().max(1.0),
                    "{}",
                    phi.name()
                );
            }
        }
    }

    #[test]
    fn soft_threshold_examples() {
        let phi: MirrorFunction = QuadraticMirror::identity(3).into();
        let g = NonsmoothTerm::L1 { lambda: 1.0 };
        let y = composite_prox(&phi, 0.5, 2.0, &Vector::zeros(3), &g).unwrap();
        assert_eq!(y.primal, Vector::zeros(3));

        let phi: MirrorFunction = QuadraticMirror::identity(1).into();
        let y = composite_prox(&phi, 1.0, 2.0, &vec![5.0].into(), &g).unwrap();
        assert!((y.primal[0] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn bregman_to_dual_matches_and_survives_underflow() {
        for phi in [
            MirrorFunction::from(EntropyMirror::simplex(3)),
            EntropyMirror::positive_orthant(3).into(),
        ] {
            let x = Vector::from(vec![0.2, 0.0, 0.8]);
            let eta = Vector::from(vec![0.3, -1.0, 0.5]);
            let y = phi.grad_conjugate(&eta).unwrap();
            let a = phi.bregman(&x, &y).unwrap();
            let b = phi.bregman_to_dual(&x, &eta).unwrap();
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
        // y₂ = e^{-999} is zero in floating point
        let phi: MirrorFunction = EntropyMirror::simplex(2).into();
        let eta = Vector::from(vec![0.0, -999.0]);
        assert!(phi
            .bregman(&Vector::from(vec![0.5, 0.5]), &phi.grad_conjugate(&eta).unwrap())
            .is_err());
        let d = phi.bregman_to_dual(&Vector::from(vec![0.5, 0.5]), &eta).unwrap();
        assert!((d - (0.5 * 999.0 + 0.5f64.ln())).abs() < 1e-9, "{d}");
    }

    #[test]
    fn simplex_prox_of_constant_is_uniform() {
        let phi: MirrorFunction = EntropyMirror::simplex(3).into();
        for &c in &[-800.0, 0.0, 3.5, 700.0] {
            let y = composite_prox(&phi, 0.2, 1.0, &Vector::filled(3, c), &NonsmoothTerm::SimplexIndicator)
                .unwrap()
                .primal;
            for v in y.iter() {
                assert!((v - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn unsupported_pairs_are_rejected() {
        let quartic: MirrorFunction = QuarticMirror::new(2).into();
        let h = Vector::zeros(2);
        let err = composite_prox(&quartic, 0.0, 1.0, &h, &NonsmoothTerm::L1 { lambda: 1.0 }).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let quad: MirrorFunction = QuadraticMirror::identity(2).into();
        assert!(composite_prox(&quad, 0.0, 1.0, &h, &NonsmoothTerm::SimplexIndicator).is_err());
        let dense: MirrorFunction = QuadraticMirror::dense(DenseMatrix::identity(2)).unwrap().into();
        assert!(composite_prox(&dense, 0.0, 1.0, &h, &NonsmoothTerm::L1 { lambda: 1.0 }).is_err());
    }

    #[test]
    fn soft_threshold_kkt() {
        let mut rng = SeededRng::new(8);
        let n = 8;
        for _ in 0..200 {
            let d = DiagonalMatrix::new(rng.uniform_vector(n).map(|u| 0.1 + 3.0 * u));
            let phi: MirrorFunction = QuadraticMirror::diagonal(d.clone()).unwrap().into();
            let lambda = 0.05 + rng.uniform();
            let (alpha, beta) = (rng.uniform(), 0.1 + 2.0 * rng.uniform());
            let h = rng.normal_vector(n);
            let y = composite_prox(&phi, alpha, beta, &h, &NonsmoothTerm::L1 { lambda })
                .unwrap()
                .primal;
            // 0 ∈ (1+α)Dy + βλ∂|y| − h, with ∂|0| = [−1, 1]
            for i in 0..n {
                let r = (1.0 + alpha) * d.diagonal()[i] * y[i] - h[i];
                let resid = if y[i] == 0.0 {
                    (r.abs() - beta * lambda).max(0.0)
                } else {
                    (r + beta * lambda * y[i].signum()).abs()
                };
                assert!(resid <= 1e-9, "coordinate {i}: residual {resid:e}");
            }
        }
    }

    #[test]
    fn simplex_prox_kkt() {
        let mut rng = SeededRng::new(9);
        let n = 6;
        let phi: MirrorFunction = EntropyMirror::simplex(n).into();
        for _ in 0..200 {
            let alpha = rng.uniform();
            let h = rng.normal_vector(n).scaled(5.0);
            let y = composite_prox(&phi, alpha, 1.0, &h, &NonsmoothTerm::SimplexIndicator)
                .unwrap()
                .primal;
            assert!((y.sum() - 1.0).abs() <= 1e-12);
            // interior solution: (1+α)∇φ(y) − h is a multiple of the ones vector
            let r = &phi.grad(&y).unwrap().scaled(1.0 + alpha) - &h;
            let m = r.mean();
            assert!(r.iter().all(|v| (v - m).abs() <= 1e-9));
        }
    }
}
