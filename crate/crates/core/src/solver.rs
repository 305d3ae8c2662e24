//! Iteration schemes, stopping rules and traces.
//!
//! Every scheme keeps a pair `(x_k, y_k)` together with the cached dual
//! point `η_k = ∇φ(y_k)` and the previous gradient used by the
//! over-relaxation `2∇f(x_{k+1}) − ∇f(x_k)`:
//!
//! | algorithm | update |
//! |---|---|
//! | [`Algorithm::Md`] | `∇φ(x⁺) = ∇φ(x) − t∇f(x)` |
//! | [`Algorithm::AccMdForward`] | convex combination in `x`, extrapolated prox in `y` |
//! | [`Algorithm::AccMdBackward`] | prox in `y`, extrapolated `x` |
//! | [`Algorithm::PerturbedAccMd`] | forward scheme with `μ` replaced by a fixed `ε` |
//! | [`Algorithm::HomotopyAccMd`] | perturbed scheme with `ε` halved between stages |
//! | [`Algorithm::CompositeAccMdBackward`] | backward scheme with the nonsmooth term in the prox |
//!
//! Simplex-constrained problems and `ℓ1`-regularized problems route their
//! `y`-update through [`composite_prox`]; the smooth update is the special
//! case `g = 0`.
//!
//! The stopping rule compares a stationarity measure against its value at
//! the start: `‖∇f(x_k)‖² ≤ tol·‖∇f(x₀)‖²` for smooth unconstrained
//! problems, and the squared norm of the mirror gradient map
//! `(x − T(x))/t` (one mirror-descent step `T` with `t = 1/L`) otherwise.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::certify::{fit_geometric, LyapunovSuite, RateFit};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::mirror::{composite_prox, Mirror};
use crate::objective::{
    estimate_gcs, practical_gcs_value, practical_hessian_lipschitz, GcsRequest, NonsmoothTerm, PracticalParams,
    ProblemInstance, ProblemMetadata,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Md,
    AccMdForward,
    AccMdBackward,
    PerturbedAccMd,
    HomotopyAccMd,
    CompositeAccMdBackward,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Md,
        Algorithm::AccMdForward,
        Algorithm::AccMdBackward,
        Algorithm::PerturbedAccMd,
        Algorithm::HomotopyAccMd,
        Algorithm::CompositeAccMdBackward,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Md => "md",
            Algorithm::AccMdForward => "accmd-forward",
            Algorithm::AccMdBackward => "accmd-backward",
            Algorithm::PerturbedAccMd => "perturbed",
            Algorithm::HomotopyAccMd => "homotopy",
            Algorithm::CompositeAccMdBackward => "composite",
        }
    }

    /// Whether the scheme divides by `μ`.
    pub fn needs_strong_convexity(&self) -> bool {
        matches!(
            self,
            Algorithm::AccMdForward | Algorithm::AccMdBackward | Algorithm::CompositeAccMdBackward
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        Ok(match s.as_str() {
            "md" => Algorithm::Md,
            "accmd-forward" | "acc-md-forward" | "forward" | "accmd" => Algorithm::AccMdForward,
            "accmd-backward" | "acc-md-backward" | "backward" => Algorithm::AccMdBackward,
            "perturbed" | "perturbed-accmd" | "perturbed-acc-md" => Algorithm::PerturbedAccMd,
            "homotopy" | "homotopy-accmd" | "homotopy-acc-md" => Algorithm::HomotopyAccMd,
            "composite" | "composite-accmd-backward" | "composite-acc-md-backward" => Algorithm::CompositeAccMdBackward,
            other => return Err(Error::config(format!("unknown solver '{other}'"))),
        })
    }
}

/// Where the GCS constant used for `α` comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CEstimator {
    /// The estimate stored on the problem.
    #[default]
    Problem,
    Exact,
    Power,
    GlobalL,
    /// Re-estimated every iteration from the gap `‖x_k − y_k‖`.
    Practical {
        hessian_lipschitz: Option<f64>,
        theta: f64,
        radius: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub alpha: Option<f64>,
    /// Mirror-descent step size, `1/L` by default.
    pub step: Option<f64>,
    /// Fixed perturbation level of the perturbed scheme.
    pub epsilon: Option<f64>,
    pub epsilon0: Option<f64>,
    pub m0: Option<usize>,
    /// Homotopy termination level: stop once `ε_j` would drop below it.
    pub epsilon_min: Option<f64>,
    /// Relative stationarity tolerance; `0` disables the stopping rule.
    pub tol: f64,
    pub max_iters: usize,
    pub c_estimator: CEstimator,
    pub timing: bool,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            alpha: None,
            step: None,
            epsilon: None,
            epsilon0: None,
            m0: None,
            epsilon_min: None,
            tol: 1e-12,
            max_iters: 10_000,
            c_estimator: CEstimator::Problem,
            timing: true,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = Some(step);
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn with_epsilon0(mut self, epsilon0: f64) -> Self {
        self.epsilon0 = Some(epsilon0);
        self
    }

    pub fn with_m0(mut self, m0: usize) -> Self {
        self.m0 = Some(m0);
        self
    }

    pub fn with_epsilon_min(mut self, eps: f64) -> Self {
        self.epsilon_min = Some(eps);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_c_estimator(mut self, c: CEstimator) -> Self {
        self.c_estimator = c;
        self
    }

    pub fn with_timing(mut self, timing: bool) -> Self {
        self.timing = timing;
        self
    }

    /// Reject parameters the chosen algorithm does not use.
    pub fn validate(&self) -> Result<()> {
        use Algorithm::*;
        let algo = self.algorithm;
        let reject = |set: bool, what: &str| -> Result<()> {
            if set {
                Err(Error::config(format!("{what} is not a parameter of solver '{algo}'")))
            } else {
                Ok(())
            }
        };
        reject(self.step.is_some() && algo != Md, "step")?;
        reject(self.alpha.is_some() && matches!(algo, Md | HomotopyAccMd), "alpha")?;
        reject(self.epsilon.is_some() && algo != PerturbedAccMd, "epsilon")?;
        reject(
            (self.epsilon0.is_some() || self.m0.is_some() || self.epsilon_min.is_some()) && algo != HomotopyAccMd,
            "epsilon0/m0/epsilon-min",
        )?;
        if algo == PerturbedAccMd && self.epsilon.is_none() {
            return Err(Error::config("perturbed solver needs a perturbation level epsilon"));
        }
        let positive = |v: Option<f64>, what: &str| -> Result<()> {
            match v {
                Some(x) if !(x > 0.0) || !x.is_finite() => {
                    Err(Error::config(format!("{what} must be positive and finite, got {x}")))
                }
                _ => Ok(()),
            }
        };
        positive(self.alpha, "alpha")?;
        positive(self.step, "step")?;
        positive(self.epsilon, "epsilon")?;
        positive(self.epsilon0, "epsilon0")?;
        positive(self.epsilon_min, "epsilon-min")?;
        if self.m0 == Some(0) {
            return Err(Error::config("m0 must be at least 1"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::config(format!("tol must be nonnegative, got {}", self.tol)));
        }
        if let CEstimator::Practical { theta, .. } = self.c_estimator {
            if !(theta > 0.0) {
                return Err(Error::config("practical GCS estimator needs θ > 0"));
            }
        }
        Ok(())
    }
}

/// Live iterate pair of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub x: Vector,
    pub y: Vector,
    /// `∇φ(y)`.
    pub eta: Vector,
    /// `∇f_{−μ}(x_k)` for the forward scheme, `∇f(x_k)` for the others.
    pub grad_prev: Vector,
    pub k: usize,
    pub epsilon_current: Option<f64>,
}

/// `x_{k+1} = (x_k + α y_k)/(1+α)`.
fn convex_combination(x: &Vector, y: &Vector, alpha: f64) -> Vector {
    x.zip_map(y, |a, b| (a + alpha * b) / (1.0 + alpha))
}

/// `x_{k+1} = [x_k + α(2y_{k+1} − y_k)]/(1+α)`.
fn extrapolate(x: &Vector, y_new: &Vector, y_old: &Vector, alpha: f64) -> Vector {
    Vector::from_fn(x.len(), |i| {
        (x[i] + alpha * (2.0 * y_new[i] - y_old[i])) / (1.0 + alpha)
    })
}

fn finite(v: Vector, what: &'static str) -> Result<Vector> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what))
    }
}

/// One mirror-descent step `∇φ(x⁺) = ∇φ(x) − t∇f(x)`, constrained through
/// the problem's nonsmooth term.
pub fn md_step(problem: &ProblemInstance, state: &SolverState, step: f64) -> Result<SolverState> {
    if !(step > 0.0) {
        return Err(Error::config(format!(
            "mirror-descent step must be positive, got {step}"
        )));
    }
    let grad = problem.grad_f(&state.x)?;
    let mut h = problem.mirror.grad(&state.x)?;
    h.axpy(-step, &grad);
    let p = composite_prox(&problem.mirror, 0.0, step, &h, &problem.nonsmooth)?;
    let x = finite(p.primal, "mirror-descent iterate")?;
    let grad_prev = problem.grad_f(&x)?;
    Ok(SolverState {
        y: x.clone(),
        x,
        eta: p.dual,
        grad_prev,
        k: state.k + 1,
        epsilon_current: None,
    })
}

/// Forward Acc-MD step with parameter `α` and shift `μ > 0`.
pub fn accmd_forward_step(problem: &ProblemInstance, state: &SolverState, alpha: f64) -> Result<SolverState> {
    let mu = problem.mu;
    if !(mu > 0.0) {
        return Err(Error::config("forward Acc-MD requires μ > 0"));
    }
    let x = convex_combination(&state.x, &state.y, alpha);
    let g_new = problem.shifted_grad(&x, mu)?;
    let r = alpha / mu;
    let h = Vector::from_fn(x.len(), |i| state.eta[i] - r * (2.0 * g_new[i] - state.grad_prev[i]));
    let p = composite_prox(&problem.mirror, alpha, r, &h, &problem.nonsmooth)?;
    Ok(SolverState {
        x: finite(x, "forward Acc-MD x")?,
        y: finite(p.primal, "forward Acc-MD y")?,
        eta: p.dual,
        grad_prev: g_new,
        k: state.k + 1,
        epsilon_current: None,
    })
}

/// Backward step shared by the backward and composite schemes, with `weight`
/// standing in for `μ` (or for `ε` in the perturbed composite mode).
fn backward_core(
    problem: &ProblemInstance,
    state: &SolverState,
    alpha: f64,
    weight: f64,
    epsilon: Option<f64>,
) -> Result<SolverState> {
    let r = alpha / weight;
    let grad = &state.grad_prev;
    let gx = problem.mirror.grad(&state.x)?;
    let h = Vector::from_fn(gx.len(), |i| -r * grad[i] + alpha * gx[i] + state.eta[i]);
    let p = composite_prox(&problem.mirror, alpha, r, &h, &problem.nonsmooth)?;
    let x = finite(extrapolate(&state.x, &p.primal, &state.y, alpha), "backward Acc-MD x")?;
    let grad_prev = problem.grad_f(&x)?;
    Ok(SolverState {
        x,
        y: finite(p.primal, "backward Acc-MD y")?,
        eta: p.dual,
        grad_prev,
        k: state.k + 1,
        epsilon_current: epsilon,
    })
}

/// Backward Acc-MD step.
pub fn accmd_backward_step(problem: &ProblemInstance, state: &SolverState, alpha: f64) -> Result<SolverState> {
    if !(problem.mu > 0.0) {
        return Err(Error::config("backward Acc-MD requires μ > 0"));
    }
    backward_core(problem, state, alpha, problem.mu, None)
}

/// Composite backward step. With `epsilon` set, `ε` replaces `μ` in the
/// step, which is how merely convex composite problems are handled.
pub fn composite_backward_step(
    problem: &ProblemInstance,
    state: &SolverState,
    alpha: f64,
    epsilon: Option<f64>,
) -> Result<SolverState> {
    let weight = match epsilon {
        Some(e) => e,
        None if problem.mu > 0.0 => problem.mu,
        None => return Err(Error::config("composite Acc-MD requires μ > 0 or a perturbation level")),
    };
    backward_core(problem, state, alpha, weight, epsilon)
}

/// Perturbed Acc-MD step at level `ε`.
pub fn perturbed_step(problem: &ProblemInstance, state: &SolverState, epsilon: f64, alpha: f64) -> Result<SolverState> {
    if !(epsilon > 0.0) {
        return Err(Error::config(format!(
            "perturbation level must be positive, got {epsilon}"
        )));
    }
    let x = convex_combination(&state.x, &state.y, alpha);
    let g_new = problem.grad_f(&x)?;
    let gx = problem.mirror.grad(&x)?;
    let r = alpha / epsilon;
    let h = Vector::from_fn(x.len(), |i| {
        alpha * gx[i] + state.eta[i] - r * (2.0 * g_new[i] - state.grad_prev[i])
    });
    let p = composite_prox(&problem.mirror, alpha, r, &h, &problem.nonsmooth)?;
    Ok(SolverState {
        x: finite(x, "perturbed Acc-MD x")?,
        y: finite(p.primal, "perturbed Acc-MD y")?,
        eta: p.dual,
        grad_prev: g_new,
        k: state.k + 1,
        epsilon_current: Some(epsilon),
    })
}

/// Stage schedule of the homotopy scheme: stage `j ≥ 1` runs
/// `m_j = ⌈m₀·2^{j/2}⌉` perturbed steps at `ε_j = ε₀/2^j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomotopySchedule {
    pub epsilon0: f64,
    pub m0: usize,
}

impl HomotopySchedule {
    pub fn epsilon(&self, stage: u32) -> f64 {
        self.epsilon0 / 2f64.powi(stage as i32)
    }

    pub fn inner_iters(&self, stage: u32) -> usize {
        (self.m0 as f64 * 2f64.powf(stage as f64 / 2.0)).ceil() as usize
    }
}

/// Summary of one homotopy stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: u32,
    pub epsilon: f64,
    pub alpha: f64,
    pub inner_iters: usize,
    pub cumulative_iters: usize,
    pub obj: f64,
}

#[derive(Clone, Debug)]
struct StageCursor {
    schedule: HomotopySchedule,
    stage: u32,
    done: usize,
}

/// Stepping engine for one run.
#[derive(Clone, Debug)]
pub struct Solver<'a> {
    problem: &'a ProblemInstance,
    config: SolverConfig,
    state: SolverState,
    gcs: f64,
    practical_lh: Option<f64>,
    cursor: Option<StageCursor>,
    stages: Vec<StageRecord>,
}

impl<'a> Solver<'a> {
    pub fn new(problem: &'a ProblemInstance, config: &SolverConfig) -> Result<Self> {
        let x0 = problem.initial_point();
        Self::with_start(problem, config, x0)
    }

    /// Start from `x₀ = y₀ = x0`.
    pub fn with_start(problem: &'a ProblemInstance, config: &SolverConfig, x0: Vector) -> Result<Self> {
        config.validate()?;
        x0.check_len("Solver::with_start", problem.dim())?;
        let algo = config.algorithm;
        if algo.needs_strong_convexity() && !(problem.mu > 0.0) {
            return Err(Error::config(format!(
                "solver '{algo}' requires μ > 0 (problem '{}' has μ = {}); use the homotopy solver",
                problem.name, problem.mu
            )));
        }
        let gcs = match config.c_estimator {
            CEstimator::Problem => problem.gcs.value,
            CEstimator::Exact => estimate_gcs(problem, GcsRequest::ExactFormula)?.value,
            CEstimator::Power => estimate_gcs(problem, GcsRequest::PowerMethod)?.value,
            CEstimator::GlobalL => estimate_gcs(problem, GcsRequest::GlobalL)?.value,
            CEstimator::Practical { .. } => problem.gcs.value,
        };
        let practical_lh = match config.c_estimator {
            CEstimator::Practical {
                hessian_lipschitz,
                theta,
                radius,
            } => Some(practical_hessian_lipschitz(
                &problem.mirror,
                &PracticalParams {
                    hessian_lipschitz,
                    theta: Some(theta),
                    radius,
                    gap: None,
                },
            )?),
            _ => None,
        };
        let cursor = if algo == Algorithm::HomotopyAccMd {
            let epsilon0 = config.epsilon0.unwrap_or(gcs);
            let m0 = config
                .m0
                .unwrap_or_else(|| (gcs / epsilon0).sqrt().ceil().max(1.0) as usize);
            Some(StageCursor {
                schedule: HomotopySchedule { epsilon0, m0 },
                stage: 1,
                done: 0,
            })
        } else {
            None
        };
        let eta = problem.mirror.grad(&x0)?;
        let grad_prev = if algo == Algorithm::AccMdForward {
            problem.shifted_grad(&x0, problem.mu)?
        } else {
            problem.grad_f(&x0)?
        };
        let epsilon_current = match (&cursor, algo) {
            (Some(c), _) => Some(c.schedule.epsilon(1)),
            (None, Algorithm::PerturbedAccMd) => config.epsilon,
            _ => None,
        };
        Ok(Self {
            problem,
            config: config.clone(),
            state: SolverState {
                y: x0.clone(),
                x: x0,
                eta,
                grad_prev,
                k: 0,
                epsilon_current,
            },
            gcs,
            practical_lh,
            cursor,
            stages: Vec::new(),
        })
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn problem(&self) -> &ProblemInstance {
        self.problem
    }

    /// GCS constant the step parameters are derived from.
    pub fn gcs(&self) -> f64 {
        self.gcs
    }

    pub fn stages(&self) -> &[StageRecord] {
        &self.stages
    }

    pub fn schedule(&self) -> Option<HomotopySchedule> {
        self.cursor.as_ref().map(|c| c.schedule)
    }

    /// Current perturbation level, if any.
    pub fn epsilon(&self) -> Option<f64> {
        self.state.epsilon_current
    }

    fn current_gcs(&self) -> f64 {
        match (self.config.c_estimator, self.practical_lh) {
            (CEstimator::Practical { theta, .. }, Some(lh)) => {
                let gap = self.state.x.dist_l2(&self.state.y);
                let c = practical_gcs_value(self.problem.l, self.problem.mu, lh, gap, theta);
                c.max(1e-12 * self.problem.l)
            }
            _ => self.gcs,
        }
    }

    /// Step parameter `α` (or step size `t` for mirror descent) of the next step.
    pub fn alpha(&self) -> f64 {
        use Algorithm::*;
        match self.config.algorithm {
            Md => self.config.step.unwrap_or(1.0 / self.problem.l),
            AccMdForward | AccMdBackward | CompositeAccMdBackward => self
                .config
                .alpha
                .unwrap_or_else(|| (self.problem.mu / self.current_gcs()).sqrt()),
            PerturbedAccMd => self
                .config
                .alpha
                .unwrap_or_else(|| (self.config.epsilon.expect("validated") / self.current_gcs()).sqrt()),
            HomotopyAccMd => (self.state.epsilon_current.expect("homotopy level") / self.current_gcs()).sqrt(),
        }
    }

    /// Whether the homotopy schedule would go below its termination level.
    pub fn schedule_exhausted(&self) -> bool {
        match (&self.cursor, self.config.epsilon_min) {
            (Some(c), Some(min)) => c.done >= c.schedule.inner_iters(c.stage) && c.schedule.epsilon(c.stage + 1) < min,
            _ => false,
        }
    }

    /// Advance one iteration.
    pub fn step(&mut self) -> Result<&SolverState> {
        use Algorithm::*;
        let problem = self.problem;
        if let Some(c) = self.cursor.as_mut() {
            if c.done >= c.schedule.inner_iters(c.stage) {
                c.stage += 1;
                c.done = 0;
                self.state.epsilon_current = Some(c.schedule.epsilon(c.stage));
            }
        }
        let alpha = self.alpha();
        let next = match self.config.algorithm {
            Md => md_step(problem, &self.state, alpha)?,
            AccMdForward => accmd_forward_step(problem, &self.state, alpha)?,
            AccMdBackward => accmd_backward_step(problem, &self.state, alpha)?,
            CompositeAccMdBackward => composite_backward_step(problem, &self.state, alpha, None)?,
            PerturbedAccMd => perturbed_step(problem, &self.state, self.config.epsilon.expect("validated"), alpha)?,
            HomotopyAccMd => {
                let eps = self.state.epsilon_current.expect("homotopy level");
                if matches!(problem.nonsmooth, NonsmoothTerm::L1 { .. }) {
                    composite_backward_step(problem, &self.state, alpha, Some(eps))?
                } else {
                    perturbed_step(problem, &self.state, eps, alpha)?
                }
            }
        };
        self.state = next;
        if let Some(c) = self.cursor.as_mut() {
            c.done += 1;
            if c.done == c.schedule.inner_iters(c.stage) {
                let cumulative = self.stages.last().map_or(0, |s| s.cumulative_iters) + c.done;
                self.stages.push(StageRecord {
                    stage: c.stage,
                    epsilon: c.schedule.epsilon(c.stage),
                    alpha,
                    inner_iters: c.done,
                    cumulative_iters: cumulative,
                    obj: problem.total_value(&self.state.x).unwrap_or(f64::NAN),
                });
            }
        }
        Ok(&self.state)
    }
}

/// Stationarity measure used by the stopping rule.
pub fn stationarity(problem: &ProblemInstance, x: &Vector) -> Result<f64> {
    let grad = problem.grad_f(x)?;
    let smooth = problem.nonsmooth.is_zero() && problem.mirror.domain() != crate::mirror::Domain::Simplex;
    if smooth {
        return Ok(grad.norm_sq());
    }
    let t = 1.0 / problem.l;
    let mut h = problem.mirror.grad(x)?;
    h.axpy(-t, &grad);
    let p = composite_prox(&problem.mirror, 0.0, t, &h, &problem.nonsmooth)?;
    Ok((x - &p.primal).norm_sq() / (t * t))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub k: usize,
    pub obj: f64,
    pub grad_norm_sq: f64,
    #[serde(rename = "lyap_E")]
    pub lyap_e: Option<f64>,
    #[serde(rename = "lyap_Ealpha")]
    pub lyap_ealpha: Option<f64>,
    pub time_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIters,
    ScheduleExhausted,
    Aborted { reason: String },
}

/// Complete record of a run.
#[derive(Clone, Debug)]
pub struct Trace {
    pub problem: ProblemMetadata,
    pub config: SolverConfig,
    pub records: Vec<Record>,
    pub stages: Vec<StageRecord>,
    pub status: Termination,
    /// Step parameter of the last step (`t` for mirror descent).
    pub alpha: f64,
    pub gcs: f64,
    /// `2·max_k max{D_φ(x⋆, x_k), D_φ(x⋆, y_k)}` when a reference is known.
    pub radius: Option<f64>,
    pub final_state: SolverState,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TraceSummary {
    pub problem: ProblemMetadata,
    pub config: SolverConfig,
    pub termination: Termination,
    pub iterations: usize,
    pub alpha: f64,
    pub gcs: f64,
    pub initial_grad_norm_sq: f64,
    pub final_obj: f64,
    pub final_grad_norm_sq: f64,
    pub radius: Option<f64>,
    pub rate_fit: RateFit,
    pub stages: Vec<StageRecord>,
    pub total_time_ms: Option<f64>,
}

impl Trace {
    pub fn converged(&self) -> bool {
        self.status == Termination::Converged
    }

    pub fn aborted(&self) -> bool {
        matches!(self.status, Termination::Aborted { .. })
    }

    /// Number of steps taken.
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.k)
    }

    pub fn last(&self) -> &Record {
        self.records.last().expect("a trace has at least one record")
    }

    pub fn objective_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.obj).collect()
    }

    pub fn summary(&self) -> TraceSummary {
        let stat: Vec<f64> = self.records.iter().map(|r| r.grad_norm_sq).collect();
        TraceSummary {
            problem: self.problem.clone(),
            config: self.config.clone(),
            termination: self.status.clone(),
            iterations: self.iterations(),
            alpha: self.alpha,
            gcs: self.gcs,
            initial_grad_norm_sq: self.records[0].grad_norm_sq,
            final_obj: self.last().obj,
            final_grad_norm_sq: self.last().grad_norm_sq,
            radius: self.radius,
            rate_fit: fit_geometric(&stat, 0.0, ..),
            stages: self.stages.clone(),
            total_time_ms: self.last().time_ms,
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["k", "obj", "grad_norm_sq", "lyap_E", "lyap_Ealpha", "time_ms"])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            w.write_record([
                r.k.to_string(),
                r.obj.to_string(),
                r.grad_norm_sq.to_string(),
                opt(r.lyap_e),
                opt(r.lyap_ealpha),
                opt(r.time_ms),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn save_summary(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(&self.summary())?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }
}

struct Recorder<'a> {
    suite: Option<LyapunovSuite<'a>>,
    start: Instant,
    timing: bool,
    radius: Option<f64>,
}

impl Recorder<'_> {
    fn record(&mut self, solver: &Solver<'_>, stat: f64) -> Result<Record> {
        let s = solver.state();
        let problem = solver.problem();
        let obj = problem.total_value(&s.x)?;
        let (mut lyap_e, mut lyap_ealpha) = (None, None);
        if let Some(suite) = &self.suite {
            let alpha = solver.alpha();
            match (solver.config.algorithm, s.epsilon_current) {
                (Algorithm::Md, _) => lyap_e = Some(suite.primal_distance(&s.x)?),
                (_, Some(eps)) => {
                    lyap_e = Some(suite.energy_eps_state(s, eps)?);
                    lyap_ealpha = Some(suite.energy_eps_alpha_state(s, eps, alpha)?);
                }
                (_, None) => {
                    lyap_e = Some(suite.energy_state(s)?);
                    lyap_ealpha = Some(suite.energy_alpha_state(s, alpha)?);
                }
            }
            let r = 2.0 * suite.primal_distance(&s.x)?.max(suite.dual_distance(&s.eta)?);
            self.radius = Some(self.radius.map_or(r, |old: f64| old.max(r)));
        }
        let time_ms = self.timing.then(|| self.start.elapsed().as_secs_f64() * 1e3);
        if !obj.is_finite() {
            return Err(Error::NonFinite("objective value"));
        }
        Ok(Record {
            k: s.k,
            obj,
            grad_norm_sq: stat,
            lyap_e,
            lyap_ealpha,
            time_ms,
        })
    }
}

/// Run a solver until the stopping rule or the iteration budget.
///
/// Records cover `k = 0, 1, …, K` with `K < max(max_iters, 1)`. With a
/// `reference` minimizer (or a known one on the problem) the Lyapunov
/// columns are filled: `D_φ(x⋆, x_k)` for mirror descent, `E`/`Eᵅ` for the
/// Acc-MD schemes and `E_ε`/`Eᵅ_ε` for the perturbed ones.
///
/// Configuration errors are returned as `Err`; failures after the first
/// record (domain errors, non-finite values) end the run with
/// [`Termination::Aborted`] and keep the records collected so far.
pub fn run(problem: &ProblemInstance, config: &SolverConfig, reference: Option<&Vector>) -> Result<Trace> {
    let solver = Solver::new(problem, config)?;
    run_solver(solver, reference)
}

/// [`run`] from an explicit starting point.
pub fn run_from(
    problem: &ProblemInstance,
    config: &SolverConfig,
    x0: Vector,
    reference: Option<&Vector>,
) -> Result<Trace> {
    run_solver(Solver::with_start(problem, config, x0)?, reference)
}

fn run_solver(mut solver: Solver<'_>, reference: Option<&Vector>) -> Result<Trace> {
    let problem = solver.problem;
    let config = solver.config.clone();
    let xstar = reference.or(problem.known_minimizer.as_ref());
    let mut rec = Recorder {
        suite: xstar.map(|x| LyapunovSuite::new(problem, x.clone())).transpose()?,
        start: Instant::now(),
        timing: config.timing,
        radius: None,
    };
    let budget = config.max_iters.max(1);
    let stat0 = stationarity(problem, &solver.state().x)?;
    let mut records = vec![rec.record(&solver, stat0)?];
    log::debug!("{}: k = 0, stat = {stat0:e}", config.algorithm);
    let mut alpha = solver.alpha();
    let status = loop {
        let last = records.last().expect("nonempty");
        if config.tol > 0.0 && last.grad_norm_sq <= config.tol * stat0 {
            break Termination::Converged;
        }
        if last.k + 1 >= budget {
            break Termination::MaxIters;
        }
        if solver.schedule_exhausted() {
            break Termination::ScheduleExhausted;
        }
        alpha = solver.alpha();
        let stepped = solver
            .step()
            .map(|_| ())
            .and_then(|_| stationarity(problem, &solver.state().x))
            .and_then(|stat| rec.record(&solver, stat));
        match stepped {
            Ok(r) => records.push(r),
            Err(e) => {
                log::warn!("{} aborted at k = {}: {e}", config.algorithm, solver.state().k);
                break Termination::Aborted {
                    reason: format!("step {}: {e}", solver.state().k),
                };
            }
        }
    };
    log::info!(
        "{} on {}: {:?} after {} iterations",
        config.algorithm,
        problem.name,
        status,
        records.last().map_or(0, |r| r.k)
    );
    Ok(Trace {
        problem: problem.metadata(),
        config,
        records,
        stages: solver.stages.clone(),
        status,
        alpha,
        gcs: solver.gcs,
        radius: rec.radius,
        final_state: solver.state.clone(),
    })
}

/// Iterates `(x_k, y_k)` for `k = 0..=steps`, for the identity checks.
pub fn trajectory(problem: &ProblemInstance, config: &SolverConfig, steps: usize) -> Result<Vec<SolverState>> {
    let mut solver = Solver::new(problem, config)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(solver.state().clone());
    for _ in 0..steps {
        out.push(solver.step()?.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::objective::{log_linear_instance, make_counterexample_1d, make_isotropic_quadratic, make_lasso};

    #[test]
    fn serialized_names_parse_back() {
        for alg in Algorithm::ALL {
            let json = serde_json::to_value(alg).unwrap();
            assert_eq!(json.as_str().unwrap().parse::<Algorithm>().unwrap(), alg);
            assert_eq!(alg.name().parse::<Algorithm>().unwrap(), alg);
        }
    }

    #[test]
    fn md_one_step_on_isotropic_quadratic() {
        let p = make_isotropic_quadratic(3);
        let cfg = SolverConfig::new(Algorithm::Md).with_step(1.0);
        let x0: Vector = vec![1.0, -2.0, 0.5].into();
        let mut s = Solver::with_start(&p, &cfg, x0).unwrap();
        let next = s.step().unwrap();
        assert_eq!(next.x.as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn fixed_points() {
        let p = make_isotropic_quadratic(2);
        let zero = Vector::zeros(2);
        for algo in [Algorithm::Md, Algorithm::AccMdForward, Algorithm::AccMdBackward] {
            let mut s = Solver::with_start(&p, &SolverConfig::new(algo), zero.clone()).unwrap();
            let st = s.step().unwrap();
            assert_eq!(st.x, zero);
            assert_eq!(st.y, zero);
        }
        let mut s = Solver::with_start(
            &p,
            &SolverConfig::new(Algorithm::PerturbedAccMd).with_epsilon(0.3),
            zero.clone(),
        )
        .unwrap();
        assert_eq!(s.step().unwrap().y, zero);
    }

    #[test]
    fn counterexample_fixed_point() {
        let p = make_counterexample_1d();
        let xs = p.known_minimizer.clone().unwrap();
        let cfg = SolverConfig::new(Algorithm::AccMdForward);
        let mut s = Solver::with_start(&p, &cfg, xs.clone()).unwrap();
        let st = s.step().unwrap();
        assert!((st.x[0] - xs[0]).abs() < 1e-15);
        assert!((st.y[0] - xs[0]).abs() < 1e-15);
    }

    #[test]
    fn backward_small_alpha_barely_moves() {
        let p = log_linear_instance(6, 2).unwrap();
        let cfg = SolverConfig::new(Algorithm::AccMdBackward).with_alpha(1e-9);
        let mut s = Solver::new(&p, &cfg).unwrap();
        let x0 = s.state().x.clone();
        let st = s.step().unwrap();
        assert!(st.x.dist_l2(&x0) < 1e-7);
        assert!(st.y.dist_l2(&x0) < 1e-7);
    }

    #[test]
    fn homotopy_schedule() {
        let s = HomotopySchedule { epsilon0: 1.0, m0: 10 };
        assert_eq!(s.epsilon(3), 0.125);
        assert_eq!(s.inner_iters(3), 29);
        assert_eq!(s.inner_iters(1), 15);
    }

    #[test]
    fn perturbed_alpha_scales_with_sqrt_epsilon() {
        let p = log_linear_instance(4, 1).unwrap();
        let a1 = Solver::new(&p, &SolverConfig::new(Algorithm::PerturbedAccMd).with_epsilon(0.01))
            .unwrap()
            .alpha();
        let a2 = Solver::new(&p, &SolverConfig::new(Algorithm::PerturbedAccMd).with_epsilon(0.02))
            .unwrap()
            .alpha();
        assert!((a2 / a1 - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn record_counts() {
        let p = log_linear_instance(5, 0).unwrap();
        let t = run(
            &p,
            &SolverConfig::new(Algorithm::Md).with_tol(0.0).with_max_iters(5),
            None,
        )
        .unwrap();
        assert_eq!(t.records.len(), 5);
        assert_eq!(t.status, Termination::MaxIters);
        let t = run(&p, &SolverConfig::new(Algorithm::Md).with_max_iters(0), None).unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.records[0].k, 0);
    }

    #[test]
    fn optimal_start_terminates_immediately() {
        let p = make_isotropic_quadratic(4);
        let t = run(&p, &SolverConfig::new(Algorithm::AccMdForward), None).unwrap();
        assert_eq!(t.records.len(), 1);
        assert!(t.converged());
    }

    #[test]
    fn config_validation() {
        let p = crate::objective::max_margin_instance(4, 0).unwrap();
        assert!(matches!(
            Solver::new(&p, &SolverConfig::new(Algorithm::AccMdForward)),
            Err(Error::Config(_))
        ));
        assert!(SolverConfig::new(Algorithm::PerturbedAccMd).validate().is_err());
        assert!(SolverConfig::new(Algorithm::Md).with_epsilon(1.0).validate().is_err());
        assert!(SolverConfig::new(Algorithm::AccMdForward)
            .with_step(1.0)
            .validate()
            .is_err());
        assert!(SolverConfig::new(Algorithm::HomotopyAccMd)
            .with_m0(0)
            .validate()
            .is_err());
        assert!(SolverConfig::new(Algorithm::HomotopyAccMd)
            .with_m0(3)
            .validate()
            .is_ok());
        assert_eq!("accmd-forward".parse::<Algorithm>().unwrap(), Algorithm::AccMdForward);
        assert!("nag".parse::<Algorithm>().is_err());
    }

    #[test]
    fn composite_with_zero_term_matches_backward() {
        let p = crate::objective::make_quartic(6, 1).unwrap();
        let a = trajectory(&p, &SolverConfig::new(Algorithm::AccMdBackward), 30).unwrap();
        let b = trajectory(&p, &SolverConfig::new(Algorithm::CompositeAccMdBackward), 30).unwrap();
        for (sa, sb) in a.iter().zip(&b) {
            assert_eq!(sa.x, sb.x);
            assert_eq!(sa.y, sb.y);
        }
    }

    #[test]
    fn simplex_iterates_stay_feasible() {
        let p = crate::objective::max_margin_instance(8, 1).unwrap();
        let cfg = SolverConfig::new(Algorithm::PerturbedAccMd).with_epsilon(1e-2);
        for s in trajectory(&p, &cfg, 200).unwrap() {
            assert!((s.x.sum() - 1.0).abs() < 1e-12);
            assert!((s.y.sum() - 1.0).abs() < 1e-12);
            assert!(s.y.iter().all(|&v| v >= 0.0));
            let eta = p.mirror.grad(&s.y).unwrap();
            assert!(eta.dist_l2(&s.eta) <= 1e-10 * eta.norm_l2().max(1.0));
        }
    }

    #[test]
    fn lasso_orthonormal_design() {
        let n = 6;
        let p = make_lasso(&DenseMatrix::identity(n), &Vector::basis(n, 0), 0.05).unwrap();
        let cfg = SolverConfig::new(Algorithm::CompositeAccMdBackward)
            .with_tol(1e-24)
            .with_max_iters(2000);
        let t = run(&p, &cfg, None).unwrap();
        assert!(t.converged(), "{:?}", t.status);
        let x = &t.final_state.x;
        assert!((x[0] - 0.95).abs() < 1e-8);
        assert!(x.iter().skip(1).all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn csv_columns_and_empty_cells() {
        let p = log_linear_instance(3, 0).unwrap();
        let t = run(
            &p,
            &SolverConfig::new(Algorithm::Md).with_max_iters(3).with_timing(false),
            None,
        )
        .unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "k,obj,grad_norm_sq,lyap_E,lyap_Ealpha,time_ms");
        assert!(lines.next().unwrap().ends_with(",,,"));
    }
}
