//! The acceptance checks: each function verifies one contract of the
//! toolkit end to end at its stated tolerance and returns a diagnostic
//! message on failure. The `selftest` subcommand runs the fast ones; the
//! acceptance integration suite runs all of them.

use std::sync::Arc;
use std::time::Instant;

use bregopt::blocked::BlockedVector;
use bregopt::check::{
    dense_poly_inv_hessian_apply, reference_momentum_sgd, reference_prox_sgd, reference_sgd,
};
use bregopt::diagnostics::{trailing_oscillation, DualPath};
use bregopt::kernel::{
    BlockPolynomialKernel, CoordPolynomialKernel, EuclideanKernel, Kernel,
};
use bregopt::optim::{
    imsbg_step, msbg_step, run, sbg_step, sbpg_step, Method, OptimizerState,
    RunConfig,
};
use bregopt::oracle::{FiniteSumObjective, Sampler, SamplerMode};
use bregopt::problems;
use bregopt::prox::{ConstraintSet, Regularizer};
use bregopt::rng::Rng;
use bregopt::schedule::Schedule;
use bregopt::trace::VecSink;

type Check = Result<(), String>;

/// A named check, as listed for the selftest runner.
pub type NamedCheck = (&'static str, fn() -> Check);

fn fail(msg: String) -> Check {
    Err(msg)
}

fn random_blocked(rng: &mut Rng, max_norm: f64) -> BlockedVector {
    let nblocks = 1 + rng.next_below(3) as usize;
    let mut blocks = Vec::with_capacity(nblocks);
    for _ in 0..nblocks {
        let dim = 1 + rng.next_below(8) as usize;
        let mut block: Vec<f64> = (0..dim).map(|_| rng.next_gaussian()).collect();
        let norm = block.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            let target = max_norm * rng.next_f64();
            let scale = target / norm;
            block.iter_mut().for_each(|v| *v *= scale);
        }
        blocks.push(block);
    }
    BlockedVector::new(blocks)
}

/// Round trip grad_conj(grad(x)) = x over 1000 random blocked vectors for
/// every kernel family at the experimental parameter settings, within
/// 1e-9 (1 + ||x||), in under a second.
pub fn kernel_round_trip() -> Check {
    let start = Instant::now();
    let mut kernels: Vec<(String, Box<dyn Kernel>)> =
        vec![("euclidean".into(), Box::new(EuclideanKernel))];
    for &sigma in &[1e-6, 0.01] {
        for &degree in &[4u32, 6] {
            kernels.push((
                format!("block_poly(sigma={sigma}, r={degree})"),
                Box::new(BlockPolynomialKernel::new(sigma, degree).map_err(|e| e.to_string())?),
            ));
            kernels.push((
                format!("coord_poly(sigma={sigma}, r={degree})"),
                Box::new(CoordPolynomialKernel::new(sigma, degree).map_err(|e| e.to_string())?),
            ));
        }
    }
    let mut rng = Rng::new(20_240_001);
    for trial in 0..1000 {
        let x = random_blocked(&mut rng, 100.0);
        for (name, kernel) in &kernels {
            let y = kernel.grad(&x).map_err(|e| e.to_string())?;
            let back = kernel.grad_conj(&y).map_err(|e| e.to_string())?;
            let err = back.dist(&x);
            let tol = 1e-9 * (1.0 + x.norm());
            if err > tol {
                return fail(format!(
                    "round trip {name} trial {trial}: error {err:.3e} > {tol:.3e}"
                ));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 1.0 {
        return fail(format!("round-trip suite took {elapsed:.2}s (budget 1s)"));
    }
    Ok(())
}

/// inv_hessian_apply against dense LU of the assembled block Hessian on
/// 500 random blocks (dim <= 16) including the x = 0 and ||x|| = 1e3
/// extremes, to 1e-10 relative, in under a second.
pub fn inverse_hessian_dense() -> Check {
    let start = Instant::now();
    let settings = [(1e-6, 4u32), (1e-6, 6), (0.01, 4), (0.01, 6)];
    let mut rng = Rng::new(555);
    for trial in 0..500 {
        let (sigma, degree) = settings[trial % settings.len()];
        let kernel = BlockPolynomialKernel::new(sigma, degree).map_err(|e| e.to_string())?;
        let dim = 1 + rng.next_below(16) as usize;
        let mut x: Vec<f64> = (0..dim).map(|_| rng.next_gaussian()).collect();
        match trial % 10 {
            0 => x.iter_mut().for_each(|v| *v = 0.0),
            1 => {
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    let s = 1e3 / norm;
                    x.iter_mut().for_each(|v| *v *= s);
                }
            }
            _ => {}
        }
        let x = BlockedVector::dense(x);
        let v = BlockedVector::dense((0..dim).map(|_| rng.next_gaussian()).collect());
        let fast = kernel.inv_hessian_apply(&x, &v).map_err(|e| e.to_string())?;
        let dense = dense_poly_inv_hessian_apply(sigma, degree, &x, &v)
            .ok_or_else(|| "dense solve failed".to_string())?;
        let err = fast.dist(&dense);
        let tol = 1e-10 * (1.0 + dense.norm());
        if err > tol {
            return fail(format!(
                "inverse Hessian trial {trial} (sigma={sigma}, r={degree}, dim={dim}): {err:.3e} > {tol:.3e}"
            ));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 1.0 {
        return fail(format!("inverse-Hessian suite took {elapsed:.2}s (budget 1s)"));
    }
    Ok(())
}

/// With the Euclidean kernel, 100-step runs of each scheme are bitwise
/// equal to independent straight-line SGD / momentum-SGD / proximal-SGD
/// loops on the same seeds.
pub fn euclidean_reduction() -> Check {
    let kernel = EuclideanKernel;
    let eta = Schedule::LogDecay { initial: 0.05 };
    let theta = Schedule::LogDecay { initial: 0.3 };
    let steps = 100usize;
    let (obj, _) = problems::make_l1_regression(12, 3, 31, false).map_err(|e| e.to_string())?;
    let x0 = BlockedVector::dense(vec![0.7, -0.4, 1.1]);
    let n = obj.len() as u64;

    // SBG vs SGD.
    {
        let mut sampler = Sampler::new(SamplerMode::Reshuffle, 12, 5).map_err(|e| e.to_string())?;
        let mut ref_sampler = sampler.clone();
        let mut state =
            OptimizerState::new(&kernel, x0.clone(), 1.0, 1e-3).map_err(|e| e.to_string())?;
        let reference =
            reference_sgd(&obj, &mut ref_sampler, &eta, &x0, steps).map_err(|e| e.to_string())?;
        for (k, expected) in reference.iter().enumerate().skip(1) {
            let e = eta.eval(sampler.draws() / n);
            sbg_step(&mut state, &kernel, &obj, &mut sampler, e, 1.0).map_err(|e| e.to_string())?;
            if &state.x != expected {
                return fail(format!("sbg/sgd mismatch at step {k}"));
            }
        }
    }

    // MSBG and iMSBG vs momentum SGD.
    for (name, use_imsbg) in [("msbg", false), ("imsbg", true)] {
        let mut sampler = Sampler::new(SamplerMode::Reshuffle, 12, 6).map_err(|e| e.to_string())?;
        let mut ref_sampler = sampler.clone();
        let mut state =
            OptimizerState::new(&kernel, x0.clone(), 1.0, 1e-3).map_err(|e| e.to_string())?;
        let (xs, ms) = reference_momentum_sgd(&obj, &mut ref_sampler, &eta, &theta, &x0, steps)
            .map_err(|e| e.to_string())?;
        for k in 1..=steps {
            let s = sampler.draws() / n;
            let (e, t) = (eta.eval(s), theta.eval(s));
            if use_imsbg {
                imsbg_step(&mut state, &kernel, &obj, &mut sampler, e, t)
                    .map_err(|e| e.to_string())?;
            } else {
                msbg_step(&mut state, &kernel, &obj, &mut sampler, e, t, 1.0)
                    .map_err(|e| e.to_string())?;
            }
            if state.x != xs[k] || state.m != ms[k] {
                return fail(format!("{name}/momentum-sgd mismatch at step {k}"));
            }
        }
    }

    // SBPG vs proximal SGD on the composite instance.
    {
        let (obj, reg, cons, _) =
            problems::make_lasso_lad(12, 2, 0.2, 31).map_err(|e| e.to_string())?;
        let x0 = BlockedVector::dense(vec![0.9, 0.4]);
        let mut sampler = Sampler::new(SamplerMode::Reshuffle, 12, 7).map_err(|e| e.to_string())?;
        let mut ref_sampler = sampler.clone();
        let mut state =
            OptimizerState::new(&kernel, x0.clone(), 1.0, 1e-3).map_err(|e| e.to_string())?;
        let reference = reference_prox_sgd(
            &obj,
            &mut ref_sampler,
            &eta,
            &x0,
            steps,
            0.2,
            0.0,
            f64::INFINITY,
        )
        .map_err(|e| e.to_string())?;
        let n = obj.len() as u64;
        for (k, expected) in reference.iter().enumerate().skip(1) {
            let e = eta.eval(sampler.draws() / n);
            sbpg_step(&mut state, &kernel, &obj, &mut sampler, &reg, &cons, e, 1.0)
                .map_err(|e| e.to_string())?;
            if &state.x != expected {
                return fail(format!("sbpg/prox-sgd mismatch at step {k}"));
            }
        }
    }
    Ok(())
}

/// The preconditioned step is o(eta)-inexact: at 20 fixed (x, g) pairs the
/// residual ||g + (grad phi(x+) - grad phi(x)) / eta|| decreases through
/// eta in {1e-1..1e-4} and the eta = 1e-4 value is at most a tenth of the
/// eta = 1e-2 value.
pub fn precond_inexactness_o_eta() -> Check {
    let kernel = BlockPolynomialKernel::new(0.01, 4).map_err(|e| e.to_string())?;
    let mut rng = Rng::new(777);
    for pair in 0..20 {
        let x = random_blocked(&mut rng, 10.0);
        let mut g = BlockedVector::zeros_like(&x);
        for v in g.iter_mut() {
            *v = rng.next_gaussian();
        }
        let y = kernel.grad(&x).map_err(|e| e.to_string())?;
        let mut residuals = Vec::new();
        for &eta in &[1e-1, 1e-2, 1e-3, 1e-4] {
            let step = kernel.inv_hessian_apply(&x, &g).map_err(|e| e.to_string())?;
            let mut x_plus = x.clone();
            x_plus.axpy(-eta, &step);
            let y_plus = kernel.grad(&x_plus).map_err(|e| e.to_string())?;
            let mut res = y_plus.sub(&y);
            res.scale(1.0 / eta);
            res.axpy(1.0, &g);
            residuals.push(res.norm());
        }
        for w in residuals.windows(2) {
            if w[1] >= w[0] {
                return fail(format!("pair {pair}: residuals not decreasing {residuals:?}"));
            }
        }
        if residuals[3] > 0.1 * residuals[1] {
            return fail(format!(
                "pair {pair}: eta=1e-4 residual {:.3e} exceeds 0.1 x eta=1e-2 residual {:.3e}",
                residuals[3], residuals[1]
            ));
        }
    }
    Ok(())
}

/// One reshuffled run on the seeded instance; returns (gap, ||m_final||).
fn l1_reshuffle_run(method: Method, eta0: f64, theta0: f64) -> Result<(f64, f64), String> {
    let (obj, spec) = problems::make_l1_regression(50, 2, 7, false).map_err(|e| e.to_string())?;
    let fstar = spec.optimum.as_ref().unwrap().value;
    let kernel = BlockPolynomialKernel::new(0.01, 4).map_err(|e| e.to_string())?;
    let mut cfg = RunConfig::new(method);
    cfg.eta = Schedule::LogDecay { initial: eta0 };
    cfg.theta = Schedule::LogDecay { initial: theta0 };
    cfg.tau = theta0 / eta0;
    cfg.budget_epochs = 500;
    cfg.trace_stride = 500;
    let mut sampler = Sampler::new(SamplerMode::Reshuffle, 50, 2024).map_err(|e| e.to_string())?;
    let mut sink = VecSink::default();
    let state = run(
        &cfg,
        &kernel,
        &obj,
        &mut sampler,
        BlockedVector::dense(vec![2.0, 2.0]),
        &mut sink,
    )
    .map_err(|e| e.to_string())?;
    let f_final = obj.eval_full_value(&state.x).map_err(|e| e.to_string())?;
    Ok((f_final - fstar, state.m.norm()))
}

/// Deterministic full-gradient momentum run with constant single-timescale
/// stepsizes; the regime where the momentum-vanishing limit is visible at
/// desk scale (the log schedule decays theta too slowly for the sampled
/// elements, which keep unit-scale norms near the nonsmooth optimum).
fn l1_deterministic_momentum_run(method: Method) -> Result<(f64, f64), String> {
    let (obj, spec) = problems::make_l1_regression(50, 2, 7, false).map_err(|e| e.to_string())?;
    let fstar = spec.optimum.as_ref().unwrap().value;
    let full = {
        let (o, _) = problems::make_l1_regression(50, 2, 7, false).map_err(|e| e.to_string())?;
        o.into_full_batch()
    };
    let kernel = BlockPolynomialKernel::new(0.01, 4).map_err(|e| e.to_string())?;
    let mut cfg = RunConfig::new(method);
    cfg.eta = Schedule::Constant { value: 0.05 };
    cfg.theta = Schedule::Constant { value: 1e-4 };
    cfg.tau = 1e-4 / 0.05;
    cfg.budget_epochs = 200_000;
    cfg.trace_stride = 1_000_000;
    let mut sampler = Sampler::new(SamplerMode::Reshuffle, 1, 0).map_err(|e| e.to_string())?;
    let mut sink = VecSink::default();
    let state = run(
        &cfg,
        &kernel,
        &full,
        &mut sampler,
        BlockedVector::dense(vec![2.0, 2.0]),
        &mut sink,
    )
    .map_err(|e| e.to_string())?;
    let f_final = obj.eval_full_value(&state.x).map_err(|e| e.to_string())?;
    Ok((f_final - fstar, state.m.norm()))
}

/// Convergence on the seeded LAD instance (m=50, n=2, seed=7): reshuffled
/// SBG with the logarithmic decay reaches the enumerated optimum within
/// 1e-2 over 500 epochs; the momentum variants reach the same gap, and on
/// the deterministic single-timescale configuration their momentum norm
/// falls below 1e-3. Under 10 seconds.
pub fn l1_regression_convergence() -> Check {
    let start = Instant::now();
    let (gap, _) = l1_reshuffle_run(Method::Sbg, 0.1, 0.1)?;
    if !(gap.abs() <= 1e-2) {
        return fail(format!("sbg final gap {gap:.3e} exceeds 1e-2"));
    }
    for method in [Method::Msbg, Method::Imsbg] {
        let (gap, _) = l1_reshuffle_run(method, 0.1, 0.1)?;
        if !(gap.abs() <= 1e-2) {
            return fail(format!(
                "{} reshuffled final gap {gap:.3e} exceeds 1e-2",
                method.name()
            ));
        }
        let (gap, m_norm) = l1_deterministic_momentum_run(method)?;
        if !(gap.abs() <= 1e-2) {
            return fail(format!(
                "{} deterministic final gap {gap:.3e} exceeds 1e-2",
                method.name()
            ));
        }
        if !(m_norm <= 1e-3) {
            return fail(format!(
                "{} final momentum norm {m_norm:.3e} exceeds 1e-3",
                method.name()
            ));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 10.0 {
        return fail(format!("l1 convergence suite took {elapsed:.2}s (budget 10s)"));
    }
    Ok(())
}

/// SBPG on the composite instance (m=20, n=2, lambda=0.1, seed=3): every
/// accepted step carries both certificates, the final iterate stays in
/// the nonnegative orthant, and f + R lands within 1e-3 of the grid
/// oracle optimum. Under 10 seconds.
pub fn sbpg_certificates() -> Check {
    let start = Instant::now();
    let (obj, reg, cons, spec) =
        problems::make_lasso_lad(20, 2, 0.1, 3).map_err(|e| e.to_string())?;
    let hstar = spec.optimum.as_ref().unwrap().value;
    let kernel = EuclideanKernel;
    let mut cfg = RunConfig::new(Method::Sbpg);
    cfg.eta = Schedule::LogDecay { initial: 0.02 };
    cfg.budget_epochs = 2000;
    cfg.nu0 = 1e-3;
    cfg.trace_stride = 1;
    cfg.regularizer = reg;
    cfg.constraint = cons;
    let mut sampler = Sampler::new(SamplerMode::Reshuffle, 20, 99).map_err(|e| e.to_string())?;
    let mut sink = VecSink::default();
    let state = run(
        &cfg,
        &kernel,
        &obj,
        &mut sampler,
        BlockedVector::dense(vec![1.0, 1.0]),
        &mut sink,
    )
    .map_err(|e| format!("run aborted (certificate failure?): {e}"))?;

    // Any accepted step already passed both conditions inside the solver;
    // re-verify the recorded residuals against the nu schedule.
    for rec in &sink.records {
        if rec.iter == 0 {
            continue;
        }
        let nu = cfg.nu0 / (rec.iter as f64).powf(0.6);
        if rec.cert_residual > nu {
            return fail(format!(
                "iteration {}: residual {:.3e} above nu {:.3e}",
                rec.iter, rec.cert_residual, nu
            ));
        }
    }
    if !cons.contains(&state.x) {
        return fail("final iterate infeasible".into());
    }
    let h_final = obj.eval_full_value(&state.x).map_err(|e| e.to_string())?
        + cfg.regularizer.value(&state.x);
    let gap = h_final - hstar;
    if !(gap.abs() <= 1e-3) {
        return fail(format!("composite gap {gap:.3e} exceeds 1e-3"));
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 10.0 {
        return fail(format!("sbpg suite took {elapsed:.2}s (budget 10s)"));
    }
    Ok(())
}

/// At a frozen iterate the reshuffling noise sums to zero over each
/// epoch, for N in {3, 10, 100}, to 1e-12.
pub fn reshuffle_zero_sum() -> Check {
    for &n in &[3usize, 10, 100] {
        let (obj, _) =
            problems::make_l1_regression(n, 2, 1000 + n as u64, false).map_err(|e| e.to_string())?;
        let x = BlockedVector::dense(vec![0.23, -1.4]);
        let (_, full) = obj.eval_full(&x).map_err(|e| e.to_string())?;
        let mut sampler =
            Sampler::new(SamplerMode::Reshuffle, n, 4 * n as u64).map_err(|e| e.to_string())?;
        for epoch in 0..3 {
            let mut acc = BlockedVector::zeros_like(&x);
            for _ in 0..n {
                let i = sampler.next_index();
                let (_, d) = obj.eval_component(i, &x).map_err(|e| e.to_string())?;
                acc.axpy(1.0, &d.sub(&full));
            }
            if acc.norm() > 1e-12 {
                return fail(format!(
                    "N={n} epoch {epoch}: noise sum {:.3e} above 1e-12",
                    acc.norm()
                ));
            }
        }
    }
    Ok(())
}

fn deterministic_run(
    method: Method,
    obj: FiniteSumObjective,
    x0: BlockedVector,
    epochs: u64,
) -> Result<Vec<f64>, String> {
    let tau = 1.0;
    let mut cfg = RunConfig::new(method);
    cfg.eta = Schedule::LogDecay { initial: 0.1 };
    cfg.theta = Schedule::LogDecay { initial: 0.1 };
    cfg.tau = tau;
    cfg.budget_epochs = epochs;
    let kernel: Box<dyn Kernel> = if method == Method::Sbpg {
        Box::new(CoordPolynomialKernel::new(0.01, 4).map_err(|e| e.to_string())?)
    } else {
        Box::new(BlockPolynomialKernel::new(0.01, 4).map_err(|e| e.to_string())?)
    };
    let mut sampler =
        Sampler::new(SamplerMode::Reshuffle, obj.len(), 0).map_err(|e| e.to_string())?;
    let mut sink = VecSink::default();
    run(&cfg, kernel.as_ref(), &obj, &mut sampler, x0, &mut sink).map_err(|e| e.to_string())?;
    // Momentum methods are judged on the Lyapunov value h = f + ||m||^2/(2 tau).
    Ok(sink
        .records
        .iter()
        .map(|r| {
            if method.uses_momentum() {
                r.f_value + r.m_norm * r.m_norm / (2.0 * tau)
            } else {
                r.f_value
            }
        })
        .collect())
}

/// Deterministic full-gradient runs of all four schemes on the scalar
/// nonregular instance and the quadratic: the trailing-10%-window
/// oscillation of f (of h for the momentum methods) stays below 1e-3.
pub fn function_value_convergence() -> Check {
    let methods = [Method::Sbg, Method::Msbg, Method::Imsbg, Method::Sbpg];
    for method in methods {
        // Scalar nonregular instance from x0 = 2.
        let (obj, _) = problems::make_nonregular_scalar();
        let series = deterministic_run(method, obj, BlockedVector::dense(vec![2.0]), 1000)?;
        let osc = trailing_oscillation(&series, 0.1);
        if !(osc <= 1e-3) {
            return fail(format!(
                "{} on nonregular_scalar: trailing oscillation {osc:.3e} > 1e-3",
                method.name()
            ));
        }
        if method == Method::Sbg {
            let last = *series.last().unwrap();
            if !(last <= 0.7501) {
                return fail(format!("sbg on nonregular_scalar stalled at f = {last}"));
            }
        }
        // Quadratic from (1, 1).
        let (obj, _) = problems::make_quadratic(vec![2]);
        let series = deterministic_run(method, obj, BlockedVector::dense(vec![1.0, 1.0]), 1000)?;
        let osc = trailing_oscillation(&series, 0.1);
        if !(osc <= 1e-3) {
            return fail(format!(
                "{} on quadratic: trailing oscillation {osc:.3e} > 1e-3",
                method.name()
            ));
        }
    }
    Ok(())
}

/// Interpolation contract on a recorded 1000-step run: endpoint
/// exactness x(lambda(k)) = x_k to 1e-9 and boundary continuity to 1e-9.
pub fn interpolation_contract() -> Check {
    let kernel = BlockPolynomialKernel::new(0.01, 4).map_err(|e| e.to_string())?;
    let (obj, _) = problems::make_l1_regression(10, 2, 12, false).map_err(|e| e.to_string())?;
    let schedule = Schedule::LogDecay { initial: 0.05 };
    let mut sampler = Sampler::new(SamplerMode::Reshuffle, 10, 3).map_err(|e| e.to_string())?;
    let mut state = OptimizerState::new(&kernel, BlockedVector::dense(vec![1.5, -0.5]), 1.0, 1e-3)
        .map_err(|e| e.to_string())?;
    let mut xs = vec![state.x.clone()];
    let mut etas = Vec::new();
    for _ in 0..1000 {
        let eta = schedule.eval(sampler.draws() / 10);
        sbg_step(&mut state, &kernel, &obj, &mut sampler, eta, 1.0).map_err(|e| e.to_string())?;
        xs.push(state.x.clone());
        etas.push(eta);
    }
    let path = DualPath::from_iterates(&kernel, &xs, &etas).map_err(|e| e.to_string())?;
    for (k, x) in xs.iter().enumerate() {
        let t = path.axis().lambda(k);
        let got = path.interpolate(&kernel, t).map_err(|e| e.to_string())?;
        let err = got.dist(x);
        if err > 1e-9 {
            return fail(format!("endpoint {k}: |x(lambda_k) - x_k| = {err:.3e} > 1e-9"));
        }
    }
    for k in 1..xs.len() - 1 {
        let t = path.axis().lambda(k);
        let delta = 1e-12 * (1.0 + t.abs());
        let left = path.interpolate(&kernel, t - delta).map_err(|e| e.to_string())?;
        let right = path.interpolate(&kernel, t + delta).map_err(|e| e.to_string())?;
        let jump = left.dist(&right);
        if jump > 1e-9 {
            return fail(format!("boundary {k}: jump {jump:.3e} > 1e-9"));
        }
    }
    Ok(())
}

/// Two executions of the same configurations produce identical traces
/// modulo the wall-clock column.
pub fn determinism() -> Check {
    use crate::config::{ExperimentConfig, ProblemName, SamplerKind};
    use crate::runner::{run_experiment, trace_diff};

    let base = std::env::temp_dir().join(format!(
        "bregopt_determinism_{}_{}",
        std::process::id(),
        Instant::now().elapsed().as_nanos()
    ));
    let configs = vec![
        (
            "msbg_block_poly",
            ExperimentConfig {
                m: 10,
                n: 2,
                method: Method::Msbg,
                budget_epochs: 20,
                ..ExperimentConfig::default()
            },
        ),
        (
            "sbpg_coord_poly",
            ExperimentConfig {
                problem: ProblemName::LassoLad,
                m: 8,
                n: 2,
                lambda: 0.1,
                method: Method::Sbpg,
                kernel: crate::config::KernelKind::CoordPoly,
                budget_epochs: 15,
                ..ExperimentConfig::default()
            },
        ),
        (
            "imsbg_relu_full",
            ExperimentConfig {
                problem: ProblemName::ReluNet,
                method: Method::Imsbg,
                sampler: SamplerKind::Full,
                budget_epochs: 25,
                ..ExperimentConfig::default()
            },
        ),
    ];

    let result = (|| -> Check {
        for (name, cfg) in &configs {
            let dir_a = base.join(name).join("a");
            let dir_b = base.join(name).join("b");
            run_experiment(cfg, &dir_a, None).map_err(|e| format!("{name}: {e}"))?;
            run_experiment(cfg, &dir_b, None).map_err(|e| format!("{name}: {e}"))?;
            let same = trace_diff(&dir_a.join("trace.csv"), &dir_b.join("trace.csv"), true)
                .map_err(|e| format!("{name}: {e}"))?;
            if !same {
                return fail(format!("{name}: reruns differ beyond wall_ns"));
            }
            // Sanity: with wall_ns included the comparison may differ, but
            // the bytes of everything else already matched above.
        }
        Ok(())
    })();
    let _ = std::fs::remove_dir_all(&base);
    result
}

/// Fast extra properties beyond the acceptance list, exercised by the
/// selftest subcommand.
pub fn quick_properties() -> Check {
    // Frozen schedule value: 0.1 / (1 + (ln 10)^1.1).
    let s = Schedule::LogDecay { initial: 0.1 };
    if (s.eval(9) - 0.0285480678).abs() > 1e-9 {
        return fail(format!("log decay at epoch 9: {}", s.eval(9)));
    }
    // Soft thresholding through the Bregman proximal map.
    let (u, _) = bregopt::prox::bregman_prox(
        &EuclideanKernel,
        &Regularizer::l1(0.5).map_err(|e| e.to_string())?,
        &BlockedVector::dense(vec![2.0, -0.3]),
        1.0,
        1e-9,
    )
    .map_err(|e| e.to_string())?;
    if (u.block(0)[0] - 1.5).abs() > 1e-12 || u.block(0)[1] != 0.0 {
        return fail(format!("soft threshold gave {:?}", u.block(0)));
    }
    // Noise partial sums vanish without noise.
    let xis = vec![BlockedVector::dense(vec![0.0]); 8];
    let stat = bregopt::oracle::noise_partial_sum_check(&[0.1; 8], &xis, 1.0)
        .map_err(|e| e.to_string())?;
    if stat != 0.0 {
        return fail(format!("zero noise gave {stat}"));
    }
    // Projection is idempotent and the prox of nothing is the identity.
    let cons = ConstraintSet::boxed(-1.0, 1.0).map_err(|e| e.to_string())?;
    let x = BlockedVector::dense(vec![3.0, -0.2]);
    let p = cons.project(&x);
    if cons.project(&p) != p {
        return fail("projection not idempotent".into());
    }
    // Finite-sum full evaluation agrees with the sequential route bitwise.
    let (obj, _) = problems::make_l1_regression(2000, 3, 17, false).map_err(|e| e.to_string())?;
    let probe = BlockedVector::dense(vec![0.2, -0.4, 0.6]);
    let (vp, dp) = obj.eval_full(&probe).map_err(|e| e.to_string())?;
    let (vs, ds) = obj.eval_full_seq(&probe).map_err(|e| e.to_string())?;
    if vp.to_bits() != vs.to_bits() || dp != ds {
        return fail("parallel and sequential full evaluation disagree".into());
    }
    // The single-component oracle wrapper matches the full objective.
    let full = FiniteSumObjective::single(Arc::new(problems::Quadratic::new(vec![2])));
    let (v, _) = full
        .eval_component(0, &BlockedVector::dense(vec![3.0, 4.0]))
        .map_err(|e| e.to_string())?;
    if v != 12.5 {
        return fail(format!("quadratic component value {v}"));
    }
    Ok(())
}

/// The named checks the selftest subcommand runs (fast subset plus the
/// cheap acceptance checks).
pub fn selftest_checks() -> Vec<NamedCheck> {
    vec![
        ("kernel_round_trip", kernel_round_trip),
        ("inverse_hessian_dense", inverse_hessian_dense),
        ("euclidean_reduction", euclidean_reduction),
        ("precond_inexactness_o_eta", precond_inexactness_o_eta),
        ("reshuffle_zero_sum", reshuffle_zero_sum),
        ("interpolation_contract", interpolation_contract),
        ("determinism", determinism),
        ("quick_properties", quick_properties),
    ]
}
