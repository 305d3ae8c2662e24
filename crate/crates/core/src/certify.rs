//! Lyapunov energies, identity checks, GCS sampling and rate fits.
//!
//! With `f_{−μ} = f − μφ` and a minimizer `x⋆`, the energies are
//!
//! ```text
//! E(x, y)     = D_{f−μ}(x, x⋆) + μ D_φ(x⋆, y)
//! Eᵅ(x, y)    = E(x, y) + α ⟨∇f_{−μ}(x) − ∇f_{−μ}(x⋆), y − x⋆⟩
//! Bᵅ(x, x̂, ŷ, y) = D_{f−μ}(x, x̂) + μ D_φ(ŷ, y) + α ⟨∇f_{−μ}(x) − ∇f_{−μ}(x̂), y − ŷ⟩
//! ```
//!
//! and the perturbed versions `E_ε`, `Eᵅ_ε`, `Bᵅ_ε` use `f` in place of
//! `f_{−μ}` and `ε` in place of `μ`. `D_φ(x⋆, y)` equals the dual divergence
//! `D_{φ*}(∇φ(y), ∇φ(x⋆))`.
//!
//! Every identity check reports the relative residual
//! `|L − R| / max(1, |L|, |R|)`.

use std::collections::BTreeMap;
use std::ops::{Bound, RangeBounds};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::mirror::{Domain, Mirror, MirrorFunction};
use crate::objective::{NonsmoothTerm, ProblemInstance};
use crate::rng::SeededRng;
use crate::solver::{self, Algorithm, SolverConfig, SolverState};

/// Default tolerance for the exact identities.
pub const IDENTITY_TOL: f64 = 1e-8;

pub fn relative_residual(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / 1f64.max(lhs.abs()).max(rhs.abs())
}

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub samples: usize,
    pub max_abs_residual: f64,
    pub max_rel_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

impl CheckReport {
    fn finish(name: impl Into<String>, acc: Residuals, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            samples: acc.samples,
            max_abs_residual: acc.max_abs,
            max_rel_residual: acc.max_rel,
            tolerance,
            passed: acc.max_rel <= tolerance,
            extra: BTreeMap::new(),
        }
    }
}

#[derive(Default)]
struct Residuals {
    samples: usize,
    max_abs: f64,
    max_rel: f64,
}

impl Residuals {
    fn push(&mut self, lhs: f64, rhs: f64) {
        self.samples += 1;
        let abs = (lhs - rhs).abs();
        let rel = relative_residual(lhs, rhs);
        // NaN residuals must fail the check
        self.max_abs = if abs.is_nan() {
            f64::INFINITY
        } else {
            self.max_abs.max(abs)
        };
        self.max_rel = if rel.is_nan() {
            f64::INFINITY
        } else {
            self.max_rel.max(rel)
        };
    }
}

/// Evaluator for the Lyapunov energies of a problem around `x⋆`.
#[derive(Clone, Debug)]
pub struct LyapunovSuite<'a> {
    problem: &'a ProblemInstance,
    xstar: Vector,
    grad_star: Vector,
    cross_sign: f64,
}

impl<'a> LyapunovSuite<'a> {
    pub fn new(problem: &'a ProblemInstance, xstar: Vector) -> Result<Self> {
        xstar.check_len("LyapunovSuite::new", problem.dim())?;
        let grad_star = problem.grad_f(&xstar)?;
        Ok(Self {
            problem,
            xstar,
            grad_star,
            cross_sign: 1.0,
        })
    }

    /// Flip the sign of every `α`-weighted cross term. Only useful as a
    /// negative control for the identity checks.
    #[doc(hidden)]
    pub fn with_cross_sign(mut self, sign: f64) -> Self {
        self.cross_sign = sign;
        self
    }

    pub fn problem(&self) -> &ProblemInstance {
        self.problem
    }

    pub fn xstar(&self) -> &Vector {
        &self.xstar
    }

    /// `∇f − s∇φ` at `x⋆`.
    fn shifted_grad_star(&self, shift: f64) -> Result<Vector> {
        if shift == 0.0 {
            return Ok(self.grad_star.clone());
        }
        let mut g = self.grad_star.clone();
        g.axpy(-shift, &self.problem.mirror.grad(&self.xstar)?);
        Ok(g)
    }

    /// `D_φ(x⋆, y)`, through the dual of `y` when it is known.
    fn y_distance(&self, y: &Vector, eta: Option<&Vector>) -> Result<f64> {
        match eta {
            Some(eta) => self.problem.mirror.bregman_to_dual(&self.xstar, eta),
            None => self.problem.mirror.bregman(&self.xstar, y),
        }
    }

    fn energy_gen(&self, x: &Vector, y: &Vector, eta: Option<&Vector>, shift: f64, weight: f64) -> Result<f64> {
        let p = self.problem;
        Ok(p.shifted_bregman(x, &self.xstar, shift)? + weight * self.y_distance(y, eta)?)
    }

    fn energy_alpha_gen(
        &self,
        x: &Vector,
        y: &Vector,
        eta: Option<&Vector>,
        shift: f64,
        weight: f64,
        alpha: f64,
    ) -> Result<f64> {
        let g = self.problem.shifted_grad(x, shift)?;
        let gs = self.shifted_grad_star(shift)?;
        let cross = (&g - &gs).dot(&(y - &self.xstar));
        Ok(self.energy_gen(x, y, eta, shift, weight)? + self.cross_sign * alpha * cross)
    }

    #[allow(clippy::too_many_arguments)]
    fn cross_gen(
        &self,
        x: &Vector,
        xh: &Vector,
        yh: &Vector,
        y: &Vector,
        eta: Option<&Vector>,
        shift: f64,
        weight: f64,
        alpha: f64,
    ) -> Result<f64> {
        let p = self.problem;
        let g = p.shifted_grad(x, shift)?;
        let gh = p.shifted_grad(xh, shift)?;
        let cross = (&g - &gh).dot(&(y - yh));
        let dy = match eta {
            Some(eta) => p.mirror.bregman_to_dual(yh, eta)?,
            None => p.mirror.bregman(yh, y)?,
        };
        Ok(p.shifted_bregman(x, xh, shift)? + weight * dy + self.cross_sign * alpha * cross)
    }

    /// `D_φ(x⋆, x)`, the energy of mirror descent.
    pub fn primal_distance(&self, x: &Vector) -> Result<f64> {
        self.problem.mirror.bregman(&self.xstar, x)
    }

    /// `D_φ(x⋆, y)` for `y = ∇φ*(η)`, robust to underflow in `y`.
    pub fn dual_distance(&self, eta: &Vector) -> Result<f64> {
        self.problem.mirror.bregman_to_dual(&self.xstar, eta)
    }

    pub fn energy(&self, x: &Vector, y: &Vector) -> Result<f64> {
        self.energy_gen(x, y, None, self.problem.mu, self.problem.mu)
    }

    pub fn energy_alpha(&self, x: &Vector, y: &Vector, alpha: f64) -> Result<f64> {
        self.energy_alpha_gen(x, y, None, self.problem.mu, self.problem.mu, alpha)
    }

    /// `Bᵅ(x, x̂, ŷ, y)`.
    pub fn cross(&self, x: &Vector, xh: &Vector, yh: &Vector, y: &Vector, alpha: f64) -> Result<f64> {
        let mu = self.problem.mu;
        self.cross_gen(x, xh, yh, y, None, mu, mu, alpha)
    }

    pub fn energy_eps(&self, x: &Vector, y: &Vector, eps: f64) -> Result<f64> {
        self.energy_gen(x, y, None, 0.0, eps)
    }

    pub fn energy_eps_alpha(&self, x: &Vector, y: &Vector, eps: f64, alpha: f64) -> Result<f64> {
        self.energy_alpha_gen(x, y, None, 0.0, eps, alpha)
    }

    /// `Bᵅ_ε(x, x̂, ŷ, y)`.
    pub fn cross_eps(&self, x: &Vector, xh: &Vector, yh: &Vector, y: &Vector, eps: f64, alpha: f64) -> Result<f64> {
        self.cross_gen(x, xh, yh, y, None, 0.0, eps, alpha)
    }

    /// [`energy`](Self::energy) at a solver state. The `y` divergences go
    /// through `η = ∇φ(y)`, as do those of the other `*_state` methods.
    pub fn energy_state(&self, s: &SolverState) -> Result<f64> {
        self.energy_gen(&s.x, &s.y, Some(&s.eta), self.problem.mu, self.problem.mu)
    }

    pub fn energy_alpha_state(&self, s: &SolverState, alpha: f64) -> Result<f64> {
        let mu = self.problem.mu;
        self.energy_alpha_gen(&s.x, &s.y, Some(&s.eta), mu, mu, alpha)
    }

    pub fn energy_eps_state(&self, s: &SolverState, eps: f64) -> Result<f64> {
        self.energy_gen(&s.x, &s.y, Some(&s.eta), 0.0, eps)
    }

    pub fn energy_eps_alpha_state(&self, s: &SolverState, eps: f64, alpha: f64) -> Result<f64> {
        self.energy_alpha_gen(&s.x, &s.y, Some(&s.eta), 0.0, eps, alpha)
    }

    /// `Bᵅ(x, x̂, ŷ, y)` with `y` taken from `s` (`x`, `ŷ`, `x̂` as given).
    fn cross_to_state(
        &self,
        x: &Vector,
        xh: &Vector,
        yh: &Vector,
        s: &SolverState,
        eps: Option<f64>,
        alpha: f64,
    ) -> Result<f64> {
        let (shift, weight) = match eps {
            Some(e) => (0.0, e),
            None => (self.problem.mu, self.problem.mu),
        };
        self.cross_gen(x, xh, yh, &s.y, Some(&s.eta), shift, weight, alpha)
    }
}

/// Draw a point from the interior of a mirror domain.
pub fn sample_point(domain: Domain, dim: usize, rng: &mut SeededRng) -> Vector {
    match domain {
        Domain::FullSpace => rng.normal_vector(dim),
        Domain::PositiveOrthant => rng.uniform_vector(dim).map(|u| 0.05 + 2.0 * u),
        Domain::Simplex => rng.simplex_point(dim),
    }
}

fn three_point_generic(
    name: &str,
    domain: Domain,
    dim: usize,
    samples: usize,
    seed: u64,
    value: impl Fn(&Vector) -> Result<f64>,
    grad: impl Fn(&Vector) -> Result<Vector>,
) -> Result<CheckReport> {
    let breg = |a: &Vector, b: &Vector| -> Result<f64> { Ok(value(a)? - value(b)? - grad(b)?.dot(&(a - b))) };
    let mut rng = SeededRng::new(seed);
    let mut acc = Residuals::default();
    for _ in 0..samples {
        let x = sample_point(domain, dim, &mut rng);
        let y = sample_point(domain, dim, &mut rng);
        let z = sample_point(domain, dim, &mut rng);
        let lhs = (&grad(&y)? - &grad(&x)?).dot(&(&y - &z));
        let rhs = breg(&y, &x)? + breg(&z, &y)? - breg(&z, &x)?;
        acc.push(lhs, rhs);
    }
    Ok(CheckReport::finish(name, acc, IDENTITY_TOL))
}

/// Three-point identity `⟨∇φ(y) − ∇φ(x), y − z⟩ = D(y,x) + D(z,y) − D(z,x)`
/// for a mirror function on seeded in-domain triples.
pub fn check_three_point(phi: &MirrorFunction, samples: usize, seed: u64) -> Result<CheckReport> {
    three_point_generic(
        &format!("three-point[{}]", phi.name()),
        phi.domain(),
        phi.dim(),
        samples,
        seed,
        |x| phi.value(x),
        |x| phi.grad(x),
    )
}

/// The three-point identity for a problem's objective `f`.
pub fn check_three_point_objective(problem: &ProblemInstance, samples: usize, seed: u64) -> Result<CheckReport> {
    three_point_generic(
        &format!("three-point[{}]", problem.name),
        problem.mirror.domain(),
        problem.dim(),
        samples,
        seed,
        |x| problem.f(x),
        |x| problem.grad_f(x),
    )
}

fn resolve_xstar(problem: &ProblemInstance, xstar: Option<&Vector>) -> Result<Vector> {
    xstar
        .or(problem.known_minimizer.as_ref())
        .cloned()
        .ok_or_else(|| Error::config(format!("check needs a minimizer for '{}'", problem.name)))
}

/// Strong Lyapunov identity `−∇E·G = E + D_{f−μ}(x⋆, x) + μ D_φ(y, x⋆)` of
/// the Acc-MD flow `x' = y − x`, `η' = −∇f_{−μ}(x)/μ − η`, with both sides
/// evaluated independently at seeded `(x, y)`.
pub fn check_strong_lyapunov(
    problem: &ProblemInstance,
    xstar: Option<&Vector>,
    samples: usize,
    seed: u64,
) -> Result<CheckReport> {
    let mu = problem.mu;
    if !(mu > 0.0) {
        return Err(Error::config("strong Lyapunov identity requires μ > 0"));
    }
    let xstar = resolve_xstar(problem, xstar)?;
    let suite = LyapunovSuite::new(problem, xstar.clone())?;
    let gs = suite.shifted_grad_star(mu)?;
    let mut rng = SeededRng::new(seed);
    let mut acc = Residuals::default();
    for _ in 0..samples {
        let x = sample_point(problem.mirror.domain(), problem.dim(), &mut rng);
        let y = sample_point(problem.mirror.domain(), problem.dim(), &mut rng);
        let g = problem.shifted_grad(&x, mu)?;
        let eta = problem.mirror.grad(&y)?;
        // ∇E = (∇f_{−μ}(x) − ∇f_{−μ}(x⋆), μ(y − x⋆)),  G = (y − x, −∇f_{−μ}(x)/μ − η)
        let gx = (&g - &gs).dot(&(&y - &x));
        let geta: f64 = (0..x.len())
            .map(|i| mu * (y[i] - xstar[i]) * (-g[i] / mu - eta[i]))
            .sum();
        let lhs = -(gx + geta);
        let rhs = suite.energy(&x, &y)?
            + problem.shifted_bregman(&xstar, &x, mu)?
            + mu * problem.mirror.bregman(&y, &xstar)?;
        acc.push(lhs, rhs);
    }
    Ok(CheckReport::finish("strong-lyapunov", acc, IDENTITY_TOL))
}

/// Which one-step identity a trajectory is checked against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepKind {
    /// Forward Acc-MD with parameter `α`:
    /// `Eᵅ(k+1) − Eᵅ(k) = −αEᵅ(k+1) − αB^{−α}(x⋆, x_{k+1}, y_{k+1}, x⋆) − Bᵅ(x_k, x_{k+1}, y_{k+1}, y_k)`.
    Forward { alpha: f64 },
    /// Perturbed Acc-MD at level `ε`:
    /// `Eᵅ_ε(k+1) − Eᵅ_ε(k) = −αEᵅ_ε(k+1) − αε D_φ(y_{k+1}, x_{k+1}) + αε D_φ(y_{k+1}, x⋆)
    ///  + αε D_φ(x⋆, x_{k+1}) − αB^{−α}_ε(x⋆, x_{k+1}, y_{k+1}, x⋆) − Bᵅ_ε(x_k, x_{k+1}, y_{k+1}, y_k)`.
    Perturbed { alpha: f64, epsilon: f64 },
}

/// Per-step residual of the one-step energy identity along a trajectory.
pub fn check_step_identity(
    suite: &LyapunovSuite<'_>,
    trajectory: &[SolverState],
    kind: StepKind,
) -> Result<CheckReport> {
    let p = suite.problem();
    if trajectory.len() < 2 {
        return Err(Error::config("step identity needs at least two states"));
    }
    if let Some(s) = trajectory.iter().find(|s| s.x.len() != p.dim() || s.y.len() != p.dim()) {
        return Err(Error::Dimension {
            op: "check_step_identity",
            expected: p.dim(),
            got: s.x.len(),
        });
    }
    let xs = suite.xstar();
    let mut acc = Residuals::default();
    let mut min_cross = f64::INFINITY;
    for w in trajectory.windows(2) {
        let (s0, s1) = (&w[0], &w[1]);
        let (lhs, rhs, b) = match kind {
            StepKind::Forward { alpha } => {
                let e0 = suite.energy_alpha_state(s0, alpha)?;
                let e1 = suite.energy_alpha_state(s1, alpha)?;
                let b_minus = suite.cross(xs, &s1.x, &s1.y, xs, -alpha)?;
                let b_plus = suite.cross_to_state(&s0.x, &s1.x, &s1.y, s0, None, alpha)?;
                (e1 - e0, -alpha * e1 - alpha * b_minus - b_plus, b_plus)
            }
            StepKind::Perturbed { alpha, epsilon } => {
                let phi = &p.mirror;
                let e0 = suite.energy_eps_alpha_state(s0, epsilon, alpha)?;
                let e1 = suite.energy_eps_alpha_state(s1, epsilon, alpha)?;
                let b_minus = suite.cross_eps(xs, &s1.x, &s1.y, xs, epsilon, -alpha)?;
                let b_plus = suite.cross_to_state(&s0.x, &s1.x, &s1.y, s0, Some(epsilon), alpha)?;
                let ae = alpha * epsilon;
                let rhs = -alpha * e1 - ae * phi.bregman(&s1.y, &s1.x)?
                    + ae * phi.bregman(&s1.y, xs)?
                    + ae * phi.bregman(xs, &s1.x)?
                    - alpha * b_minus
                    - b_plus;
                (e1 - e0, rhs, b_plus)
            }
        };
        min_cross = min_cross.min(b);
        acc.push(lhs, rhs);
    }
    let name = match kind {
        StepKind::Forward { .. } => "step-identity",
        StepKind::Perturbed { .. } => "perturbed-step-identity",
    };
    let mut report = CheckReport::finish(name, acc, IDENTITY_TOL);
    report.extra.insert("min_cross_term".into(), min_cross);
    Ok(report)
}

/// Sampling region for [`check_gcs`].
#[derive(Clone, Debug, PartialEq)]
pub enum GcsSampling {
    /// The whole domain.
    Global,
    /// Points within `radius` (Euclidean) of `center`, staying in the domain.
    Ball { center: Vector, radius: f64 },
}

fn sample_gcs_point(problem: &ProblemInstance, sampling: &GcsSampling, rng: &mut SeededRng) -> Vector {
    let domain = problem.mirror.domain();
    let n = problem.dim();
    match sampling {
        GcsSampling::Global => sample_point(domain, n, rng),
        GcsSampling::Ball { center, radius } => loop {
            let target = sample_point(domain, n, rng);
            let dir = match domain {
                // moving toward another simplex point keeps the sum fixed
                Domain::Simplex => &target - center,
                _ => rng.normal_vector(n),
            };
            let len = dir.norm_l2();
            if len == 0.0 {
                return center.clone();
            }
            let t = radius * rng.uniform() / len;
            let t = if domain == Domain::Simplex { t.min(1.0) } else { t };
            let x = Vector::lincomb(1.0, center, t, &dir);
            if domain == Domain::FullSpace || x.iter().all(|&v| v > 0.0) {
                return x;
            }
        },
    }
}

/// Sample the generalized Cauchy–Schwarz inequality
/// `|⟨∇f_{−μ}(x) − ∇f_{−μ}(x̂), y − ŷ⟩| ≤ 2√C · D_{f−μ}(x, x̂)^{1/2} · D_φ(ŷ, y)^{1/2}`
/// with the problem's `C` on seeded quadruples.
///
/// `max_rel_residual` is the fraction of violating quadruples and the check
/// passes only with zero violations. `extra["sup_ratio"]` is the largest
/// observed `lhs² / (4 D_{f−μ} D_φ)`, a lower bound on the true constant.
pub fn check_gcs(problem: &ProblemInstance, samples: usize, seed: u64, sampling: &GcsSampling) -> Result<CheckReport> {
    let c = problem.gcs.value;
    let mu = problem.mu;
    let mut rng = SeededRng::new(seed);
    let mut violations = 0usize;
    let mut sup_ratio = 0f64;
    let mut worst_excess = 0f64;
    for _ in 0..samples {
        let x = sample_gcs_point(problem, sampling, &mut rng);
        let xh = sample_gcs_point(problem, sampling, &mut rng);
        let y = sample_gcs_point(problem, sampling, &mut rng);
        let yh = sample_gcs_point(problem, sampling, &mut rng);
        let lhs = (&problem.shifted_grad(&x, mu)? - &problem.shifted_grad(&xh, mu)?)
            .dot(&(&y - &yh))
            .abs();
        let df = problem.shifted_bregman(&x, &xh, mu)?.max(0.0);
        let dphi = problem.mirror.bregman(&yh, &y)?.max(0.0);
        let rhs = 2.0 * c.sqrt() * df.sqrt() * dphi.sqrt();
        // rounding slack on the two divergences
        if lhs > rhs * (1.0 + 1e-9) + 1e-12 {
            violations += 1;
            worst_excess = worst_excess.max(lhs - rhs);
        }
        if df > 1e-14 && dphi > 1e-14 {
            sup_ratio = sup_ratio.max(lhs * lhs / (4.0 * df * dphi));
        }
    }
    let fraction = violations as f64 / samples.max(1) as f64;
    let mut extra = BTreeMap::new();
    extra.insert("gcs_constant".into(), c);
    extra.insert("sup_ratio".into(), sup_ratio);
    extra.insert("violations".into(), violations as f64);
    Ok(CheckReport {
        name: "gcs".into(),
        samples,
        max_abs_residual: worst_excess,
        max_rel_residual: fraction,
        tolerance: 0.0,
        passed: violations == 0,
        extra,
    })
}

/// Least-squares rate fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub points: usize,
    /// Slope of `log(v_k − ref)` against `k`.
    pub slope: Option<f64>,
    /// `exp(slope)`.
    pub contraction: Option<f64>,
    /// Slope of `log(v_k − ref)` against `log k` (`k ≥ 1`).
    pub loglog_slope: Option<f64>,
    pub conclusive: bool,
}

/// Minimum number of points for a conclusive fit.
pub const MIN_FIT_POINTS: usize = 10;

/// Slope of the least-squares line through `points`.
pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Slope of `log y` against `log x`.
pub fn power_law_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.0 > 0.0 && p.1 > 0.0)
        .map(|p| (p.0.ln(), p.1.ln()))
        .collect();
    least_squares_slope(&logs)
}

fn window_bounds(len: usize, window: impl RangeBounds<usize>) -> (usize, usize) {
    let start = match window.start_bound() {
        Bound::Included(&s) => s,
        Bound::Excluded(&s) => s + 1,
        Bound::Unbounded => 0,
    };
    let end = match window.end_bound() {
        Bound::Included(&e) => e + 1,
        Bound::Excluded(&e) => e,
        Bound::Unbounded => len,
    };
    (start.min(len), end.min(len))
}

/// Fit geometric and polynomial rates to `values[k] − reference` over a
/// window of indices. Entries not above the reference are skipped; fewer
/// than [`MIN_FIT_POINTS`] usable points make the fit inconclusive.
pub fn fit_geometric(values: &[f64], reference: f64, window: impl RangeBounds<usize>) -> RateFit {
    let (start, end) = window_bounds(values.len(), window);
    let pts: Vec<(f64, f64)> = (start..end)
        .filter(|&k| values[k] - reference > 0.0 && values[k].is_finite())
        .map(|k| (k as f64, (values[k] - reference).ln()))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return RateFit {
            points: pts.len(),
            slope: None,
            contraction: None,
            loglog_slope: None,
            conclusive: false,
        };
    }
    let slope = least_squares_slope(&pts);
    let loglog: Vec<(f64, f64)> = pts.iter().filter(|p| p.0 >= 1.0).map(|p| (p.0.ln(), p.1)).collect();
    RateFit {
        points: pts.len(),
        slope,
        contraction: slope.map(f64::exp),
        loglog_slope: least_squares_slope(&loglog),
        conclusive: slope.is_some(),
    }
}

/// [`fit_geometric`] on the objective column of a trace.
pub fn fit_rate(trace: &solver::Trace, reference_value: f64, window: impl RangeBounds<usize>) -> RateFit {
    fit_geometric(&trace.objective_values(), reference_value, window)
}

/// Central-difference gradient. A domain error at `x ± h eᵢ` shrinks `h`
/// tenfold once for that coordinate before failing.
pub fn finite_diff_grad(f: impl Fn(&Vector) -> Result<f64>, x: &Vector, h: f64) -> Result<Vector> {
    if !(h > 0.0) {
        return Err(Error::config(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let mut out = Vector::zeros(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let central = |probe: &mut Vector, h: f64| -> Result<f64> {
            probe[i] = x[i] + h;
            let fp = f(probe);
            probe[i] = x[i] - h;
            let fm = f(probe);
            probe[i] = x[i];
            Ok((fp? - fm?) / (2.0 * h))
        };
        out[i] = match central(&mut probe, h) {
            Err(Error::Domain { .. }) => central(&mut probe, h / 10.0)?,
            other => other?,
        };
    }
    Ok(out)
}

/// High-accuracy reference solution.
#[derive(Clone, Debug)]
pub struct Reference {
    pub x: Vector,
    pub value: f64,
    /// Final stationarity ratio reached.
    pub stat_ratio: f64,
    pub iterations: usize,
    pub algorithm: Algorithm,
}

/// Run the most accurate applicable solver to a stationarity ratio of
/// `1e-28` (a gradient-norm ratio of `1e-14`) or `max_iters` steps, and
/// return the final iterate.
pub fn reference_minimizer(problem: &ProblemInstance, max_iters: usize) -> Result<Reference> {
    let algorithm = match (problem.mu > 0.0, &problem.nonsmooth) {
        (true, NonsmoothTerm::L1 { .. }) => Algorithm::CompositeAccMdBackward,
        (true, _) => Algorithm::AccMdForward,
        (false, _) => Algorithm::HomotopyAccMd,
    };
    let config = SolverConfig::new(algorithm)
        .with_tol(1e-28)
        .with_max_iters(max_iters)
        .with_timing(false);
    let trace = solver::run(problem, &config, None)?;
    if let solver::Termination::Aborted { reason } = &trace.status {
        return Err(Error::config(format!("reference run aborted: {reason}")));
    }
    let x = trace.final_state.x.clone();
    Ok(Reference {
        value: problem.total_value(&x)?,
        stat_ratio: trace.last().grad_norm_sq / trace.records[0].grad_norm_sq,
        iterations: trace.iterations(),
        algorithm,
        x,
    })
}
