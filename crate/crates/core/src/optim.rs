//! The optimizer loops: the plain Bregman subgradient step (exact dual
//! step and its preconditioned inexact variant), the single-timescale
//! momentum variants, and the proximal step for constrained composite
//! objectives.
//!
//! The exact methods realize the dual update
//!     grad phi(x_{k+1}) = grad phi(x_k) - eta_k * direction
//! through the conjugate gradient, and report the subproblem residual
//!     || direction + (grad phi(x_{k+1}) - grad phi(x_k)) / eta_k ||
//! against the per-iteration tolerance nu_k. The preconditioned variants
//! replace the conjugate-gradient solve by a single inverse-Hessian
//! application at the current point; their implicit residual is recorded
//! in the trace but not enforced (it vanishes like o(eta)).
//!
//! Momentum updates follow the single-timescale form: the x-update uses
//! the current momentum, then the momentum contracts toward the sampled
//! element through the inverse Hessian taken at the pre-update point.

use std::collections::VecDeque;
use std::time::Instant;

use crate::blocked::BlockedVector;
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::oracle::{FiniteSumObjective, Sampler, SamplerMode};
use crate::prox::{forward_backward, ConstraintSet, Regularizer};
use crate::schedule::Schedule;
use crate::trace::{TraceRecord, TraceSink};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Exact stochastic Bregman subgradient step.
    Sbg,
    /// Inverse-Hessian preconditioned (inexact) subgradient step.
    SbgPrecond,
    /// Single-timescale momentum with exact dual x-update.
    Msbg,
    /// Momentum with preconditioned x-update (no nonlinear solve).
    Imsbg,
    /// Bregman proximal subgradient for composite/constrained problems.
    Sbpg,
}

impl Method {
    pub fn uses_momentum(&self) -> bool {
        matches!(self, Method::Msbg | Method::Imsbg)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Sbg => "sbg",
            Method::SbgPrecond => "sbg_precond",
            Method::Msbg => "msbg",
            Method::Imsbg => "imsbg",
            Method::Sbpg => "sbpg",
        }
    }
}

/// Mutable optimizer state threaded through the steps.
#[derive(Clone, Debug)]
pub struct OptimizerState {
    pub x: BlockedVector,
    /// Momentum, zero-initialized.
    pub m: BlockedVector,
    /// Cached dual iterate grad phi(x), kept in sync with x.
    pub y: BlockedVector,
    pub iter: u64,
    pub epoch: u64,
    /// Target theta/eta ratio for the momentum Lyapunov function.
    pub tau: f64,
    /// Subproblem tolerance scale: nu_k = nu0 / (1 + k)^0.6.
    pub nu0: f64,
}

impl OptimizerState {
    pub fn new(kernel: &dyn Kernel, x0: BlockedVector, tau: f64, nu0: f64) -> Result<Self> {
        let y = kernel.grad(&x0)?;
        let m = BlockedVector::zeros_like(&x0);
        Ok(OptimizerState {
            x: x0,
            m,
            y,
            iter: 0,
            epoch: 0,
            tau,
            nu0,
        })
    }

    /// Tolerance for the current iteration.
    pub fn nu(&self) -> f64 {
        self.nu0 / (1.0 + self.iter as f64).powf(0.6)
    }
}

/// Per-step measurements surfaced into the trace.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    /// The sampled conservative element the step consumed.
    pub g: BlockedVector,
    /// Subproblem stationarity residual (recorded; enforced only where
    /// the scheme demands it).
    pub cert_residual: f64,
    /// || grad phi(x_{k+1}) - grad phi(x_k) || / eta_k.
    pub dual_step_norm: f64,
}

/// Draw one stochastic direction: a single component for reshuffling,
/// an averaged minibatch for iid sampling.
fn sample_direction(
    obj: &FiniteSumObjective,
    sampler: &mut Sampler,
    x: &BlockedVector,
) -> Result<(f64, BlockedVector)> {
    let batch = match sampler.mode() {
        SamplerMode::IidMinibatch { batch_size } => batch_size,
        SamplerMode::Reshuffle => 1,
    };
    let idx = sampler.next_index();
    let (mut value, mut dir) = obj.eval_component(idx, x)?;
    for _ in 1..batch {
        let idx = sampler.next_index();
        let (v, d) = obj.eval_component(idx, x)?;
        value += v;
        dir.axpy(1.0, &d);
    }
    if batch > 1 {
        let inv = 1.0 / batch as f64;
        value *= inv;
        dir.scale(inv);
    }
    Ok((value, dir))
}

fn finish_dual_step(
    state: &mut OptimizerState,
    kernel: &dyn Kernel,
    x_new: BlockedVector,
    direction: &BlockedVector,
    eta: f64,
) -> Result<(f64, f64)> {
    let y_new = kernel.grad(&x_new)?;
    let dual_diff = y_new.sub(&state.y);
    let dual_step_norm = dual_diff.norm() / eta;
    let mut residual_vec = dual_diff;
    residual_vec.scale(1.0 / eta);
    residual_vec.axpy(1.0, direction);
    let residual = residual_vec.norm();
    state.x = x_new;
    state.y = y_new;
    state.iter += 1;
    Ok((residual, dual_step_norm))
}

/// Exact SBG step: x+ = grad phi^*(grad phi(x) - eta g) with the sampled
/// element g, nu-certified.
pub fn sbg_step(
    state: &mut OptimizerState,
    kernel: &dyn Kernel,
    obj: &FiniteSumObjective,
    sampler: &mut Sampler,
    eta: f64,
    nu: f64,
) -> Result<StepOutcome> {
    let (_, g) = sample_direction(obj, sampler, &state.x)?;
    let mut target = state.y.clone();
    target.axpy(-eta, &g);
    let x_new = kernel.grad_conj(&target)?;
    let (residual, dual_step_norm) = finish_dual_step(state, kernel, x_new, &g, eta)?;
    if residual > nu {
        return Err(Error::CertificateFailed {
            residual,
            nu,
            decrease_ok: true,
        });
    }
    Ok(StepOutcome {
        g,
        cert_residual: residual,
        dual_step_norm,
    })
}

/// Preconditioned inexact step x+ = x - eta (grad^2 phi(x))^{-1} g. The
/// implicit subproblem residual is recorded, not enforced: it vanishes
/// like o(eta) as the stepsizes decay.
pub fn sbg_precond_step(
    state: &mut OptimizerState,
    kernel: &dyn Kernel,
    obj: &FiniteSumObjective,
    sampler: &mut Sampler,
    eta: f64,
) -> Result<StepOutcome> {
    let (_, g) = sample_direction(obj, sampler, &state.x)?;
    let precond = kernel.inv_hessian_apply(&state.x, &g)?;
    let mut x_new = state.x.clone();
    x_new.axpy(-eta, &precond);
    let (residual, dual_step_norm) = finish_dual_step(state, kernel, x_new, &g, eta)?;
    Ok(StepOutcome {
        g,
        cert_residual: residual,
        dual_step_norm,
    })
}

/// Momentum step: x+ from the current momentum through the exact dual
/// update, then m+ = m - theta (grad^2 phi(x))^{-1} (m - g), with the
/// inverse Hessian at the pre-update x.
pub fn msbg_step(
    state: &mut OptimizerState,
    kernel: &dyn Kernel,
    obj: &FiniteSumObjective,
    sampler: &mut Sampler,
    eta: f64,
    theta: f64,
    nu: f64,
) -> Result<StepOutcome> {
    let (_, g) = sample_direction(obj, sampler, &state.x)?;
    let m_old = state.m.clone();

    let mut target = state.y.clone();
    target.axpy(-eta, &m_old);
    let x_new = kernel.grad_conj(&target)?;

    let mdiff = m_old.sub(&g);
    let correction = kernel.inv_hessian_apply(&state.x, &mdiff)?;
    let mut m_new = m_old.clone();
    m_new.axpy(-theta, &correction);

    let (residual, dual_step_norm) = finish_dual_step(state, kernel, x_new, &m_old, eta)?;
    state.m = m_new;
    if residual > nu {
        return Err(Error::CertificateFailed {
            residual,
            nu,
            decrease_ok: true,
        });
    }
    Ok(StepOutcome {
        g,
        cert_residual: residual,
        dual_step_norm,
    })
}

/// Fully preconditioned momentum step: both updates apply the inverse
/// Hessian at the pre-update x, no nonlinear solve.
pub fn imsbg_step(
    state: &mut OptimizerState,
    kernel: &dyn Kernel,
    obj: &FiniteSumObjective,
    sampler: &mut Sampler,
    eta: f64,
    theta: f64,
) -> Result<StepOutcome> {
    let (_, g) = sample_direction(obj, sampler, &state.x)?;
    let m_old = state.m.clone();

    let precond_m = kernel.inv_hessian_apply(&state.x, &m_old)?;
    let mut x_new = state.x.clone();
    x_new.axpy(-eta, &precond_m);

    let mdiff = m_old.sub(&g);
    let correction = kernel.inv_hessian_apply(&state.x, &mdiff)?;
    let mut m_new = m_old.clone();
    m_new.axpy(-theta, &correction);

    let (residual, dual_step_norm) = finish_dual_step(state, kernel, x_new, &m_old, eta)?;
    state.m = m_new;
    Ok(StepOutcome {
        g,
        cert_residual: residual,
        dual_step_norm,
    })
}

/// Proximal step for min f + R over X: delegates the subproblem to the
/// certified forward-backward solver; certificate failures propagate.
#[allow(clippy::too_many_arguments)]
pub fn sbpg_step(
    state: &mut OptimizerState,
    kernel: &dyn Kernel,
    obj: &FiniteSumObjective,
    sampler: &mut Sampler,
    reg: &Regularizer,
    constraint: &ConstraintSet,
    eta: f64,
    nu: f64,
) -> Result<StepOutcome> {
    let (_, g) = sample_direction(obj, sampler, &state.x)?;
    let (x_new, cert) = forward_backward(kernel, reg, constraint, &state.x, &g, eta, nu)?;
    let y_new = kernel.grad(&x_new)?;
    let dual_step_norm = y_new.sub(&state.y).norm() / eta;
    state.x = x_new;
    state.y = y_new;
    state.iter += 1;
    Ok(StepOutcome {
        g,
        cert_residual: cert.stationarity_residual,
        dual_step_norm,
    })
}

/// Sliding window over sampled conservative elements; its mean norm is
/// the stationarity proxy reported in traces. The exact set distance to
/// the conservative field is not computable, so this is a surrogate.
struct ProxyWindow {
    window: VecDeque<BlockedVector>,
    sum: Option<BlockedVector>,
    cap: usize,
    pushes: usize,
}

impl ProxyWindow {
    fn new(cap: usize) -> Self {
        ProxyWindow {
            window: VecDeque::with_capacity(cap + 1),
            sum: None,
            cap: cap.max(1),
            pushes: 0,
        }
    }

    fn push(&mut self, g: &BlockedVector) {
        match &mut self.sum {
            None => self.sum = Some(g.clone()),
            Some(s) => s.axpy(1.0, g),
        }
        self.window.push_back(g.clone());
        if self.window.len() > self.cap {
            let old = self.window.pop_front().unwrap();
            self.sum.as_mut().unwrap().axpy(-1.0, &old);
        }
        self.pushes += 1;
        // Rebuild the running sum periodically so cancellation error
        // cannot accumulate over long runs.
        if self.pushes.is_multiple_of(4 * self.cap) {
            let mut fresh = BlockedVector::zeros_like(self.window.front().unwrap());
            for item in &self.window {
                fresh.axpy(1.0, item);
            }
            self.sum = Some(fresh);
        }
    }

    fn value(&self) -> f64 {
        match &self.sum {
            None => 0.0,
            Some(s) => s.norm() / self.window.len() as f64,
        }
    }
}

/// Run configuration for the library-level loop. Problem, kernel, and
/// sampler objects are passed alongside; this struct holds the knobs.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub method: Method,
    pub eta: Schedule,
    pub theta: Schedule,
    pub tau: f64,
    pub nu0: f64,
    pub budget_epochs: u64,
    /// Record every `trace_stride`-th iteration (plus the initial and
    /// final rows).
    pub trace_stride: u64,
    /// Window length of the stationarity proxy.
    pub proxy_window: usize,
    /// Stop early once the proxy drops below this value.
    pub stationarity_target: Option<f64>,
    pub regularizer: Regularizer,
    pub constraint: ConstraintSet,
}

impl RunConfig {
    pub fn new(method: Method) -> Self {
        RunConfig {
            method,
            eta: Schedule::LogDecay { initial: 0.1 },
            theta: Schedule::LogDecay { initial: 0.1 },
            tau: 1.0,
            nu0: 1e-3,
            budget_epochs: 100,
            trace_stride: 1,
            proxy_window: 50,
            stationarity_target: None,
            regularizer: Regularizer::Zero,
            constraint: ConstraintSet::WholeSpace,
        }
    }
}

/// Execute `budget_epochs * N` component draws (or stop at the
/// stationarity target), recording the trace through `sink`. A step error
/// aborts the run with the partial trace flushed. Deterministic given the
/// sampler seed: identical configurations replay identical traces modulo
/// the wall-clock column.
pub fn run(
    cfg: &RunConfig,
    kernel: &dyn Kernel,
    obj: &FiniteSumObjective,
    sampler: &mut Sampler,
    x0: BlockedVector,
    sink: &mut dyn TraceSink,
) -> Result<OptimizerState> {
    if sampler.num_components() != obj.len() {
        return Err(Error::DimensionMismatch {
            context: "sampler component count",
            left: sampler.num_components(),
            right: obj.len(),
        });
    }
    if sampler.draws() != 0 {
        return Err(Error::InvalidParameter(
            "run requires a fresh sampler".into(),
        ));
    }
    // The proximal scheme keeps iterates feasible; start inside the set.
    let x0 = if cfg.method == Method::Sbpg {
        cfg.constraint.project(&x0)
    } else {
        x0
    };
    let mut state = OptimizerState::new(kernel, x0, cfg.tau, cfg.nu0)?;
    let mut proxy = ProxyWindow::new(cfg.proxy_window);
    let stride = cfg.trace_stride.max(1);
    let start = Instant::now();
    let n = obj.len() as u64;
    let draw_budget = cfg.budget_epochs.saturating_mul(n);

    let eta0 = cfg.eta.eval(0);
    let theta0 = cfg.theta.eval(0);
    sink.record(&TraceRecord {
        iter: 0,
        epoch: 0,
        eta: eta0,
        theta: theta0,
        f_value: obj.eval_full_value(&state.x)?,
        m_norm: 0.0,
        dual_step_norm: 0.0,
        cert_residual: 0.0,
        stationarity_proxy: 0.0,
        wall_ns: start.elapsed().as_nanos(),
    })?;

    while sampler.draws() < draw_budget {
        let epoch = sampler.epoch();
        let eta = cfg.eta.eval(epoch);
        let theta = cfg.theta.eval(epoch);
        let nu = state.nu();

        let outcome = match cfg.method {
            Method::Sbg => sbg_step(&mut state, kernel, obj, sampler, eta, nu),
            Method::SbgPrecond => sbg_precond_step(&mut state, kernel, obj, sampler, eta),
            Method::Msbg => msbg_step(&mut state, kernel, obj, sampler, eta, theta, nu),
            Method::Imsbg => imsbg_step(&mut state, kernel, obj, sampler, eta, theta),
            Method::Sbpg => sbpg_step(
                &mut state,
                kernel,
                obj,
                sampler,
                &cfg.regularizer,
                &cfg.constraint,
                eta,
                nu,
            ),
        };
        let outcome = match outcome {
            Ok(o) => o,
            Err(e) => {
                sink.flush()?;
                return Err(e);
            }
        };
        state.epoch = sampler.epoch();
        proxy.push(&outcome.g);
        let proxy_val = proxy.value();

        let target_hit = cfg
            .stationarity_target
            .map(|t| proxy_val < t)
            .unwrap_or(false);
        let last = sampler.draws() >= draw_budget || target_hit;
        if state.iter % stride == 0 || last {
            sink.record(&TraceRecord {
                iter: state.iter,
                epoch,
                eta,
                theta,
                f_value: obj.eval_full_value(&state.x)?,
                m_norm: state.m.norm(),
                dual_step_norm: outcome.dual_step_norm,
                cert_residual: outcome.cert_residual,
                stationarity_proxy: proxy_val,
                wall_ns: start.elapsed().as_nanos(),
            })?;
        }
        if target_hit {
            break;
        }
    }
    sink.flush()?;
    Ok(state)
}
