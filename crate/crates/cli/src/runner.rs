//! Build experiments from configs, execute them with persisted traces,
//! and sweep seed/stepsize grids.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use bregopt::blocked::BlockedVector;
use bregopt::kernel::{BlockPolynomialKernel, CoordPolynomialKernel, EuclideanKernel, Kernel};
use bregopt::oracle::{FiniteSumObjective, Sampler, SamplerMode};
use bregopt::problems::{self, ProblemSpec};
use bregopt::prox::{ConstraintSet, Regularizer};
use bregopt::rng::Rng;
use bregopt::trace::{read_trace, CsvSink, TeeSink, VecSink};
use bregopt::{optim, Error, RunConfig};

use crate::config::{self, ExperimentConfig, InitKind, KernelKind, ProblemName, SamplerKind};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Everything needed to run one experiment.
pub struct BuiltExperiment {
    pub objective: FiniteSumObjective,
    pub spec: ProblemSpec,
    pub kernel: Box<dyn Kernel>,
    pub run_cfg: RunConfig,
    pub sampler: Sampler,
    pub x0: BlockedVector,
    pub warnings: Vec<String>,
}

/// Materialize problem, kernel, sampler, and run knobs from a validated
/// config. `seed_override` swaps the sampler seed (the sweep knob).
pub fn build(cfg: &ExperimentConfig, seed_override: Option<u64>) -> Result<BuiltExperiment, Error> {
    let seed = seed_override.unwrap_or(cfg.seed);

    let (objective, spec, regularizer, constraint) = match cfg.problem {
        ProblemName::L1Regression => {
            let (obj, spec) =
                problems::make_l1_regression(cfg.m, cfg.n, cfg.data_seed, cfg.consistent)?;
            (obj, spec, Regularizer::Zero, ConstraintSet::WholeSpace)
        }
        ProblemName::LassoLad => {
            let (obj, reg, cons, spec) =
                problems::make_lasso_lad(cfg.m, cfg.n, cfg.lambda, cfg.data_seed)?;
            (obj, spec, reg, cons)
        }
        ProblemName::ReluNet => {
            let (oracle, spec) =
                problems::make_relu_net(cfg.d_in, cfg.d_hidden, cfg.d_out, cfg.data_seed)?;
            (
                FiniteSumObjective::single(Arc::new(oracle)),
                spec,
                Regularizer::Zero,
                ConstraintSet::WholeSpace,
            )
        }
        ProblemName::NonregularScalar => {
            let (obj, spec) = problems::make_nonregular_scalar();
            (obj, spec, Regularizer::Zero, ConstraintSet::WholeSpace)
        }
    };

    let objective = match cfg.sampler {
        SamplerKind::Full => objective.into_full_batch(),
        _ => objective,
    };
    let sampler_mode = match cfg.sampler {
        SamplerKind::Iid => SamplerMode::IidMinibatch {
            batch_size: cfg.batch_size,
        },
        SamplerKind::Reshuffle | SamplerKind::Full => SamplerMode::Reshuffle,
    };
    let sampler = Sampler::new(sampler_mode, objective.len(), seed)?;

    let kernel: Box<dyn Kernel> = match cfg.kernel {
        KernelKind::Euclidean => Box::new(EuclideanKernel),
        KernelKind::BlockPoly => Box::new(BlockPolynomialKernel::new(cfg.sigma, cfg.degree)?),
        KernelKind::CoordPoly => Box::new(CoordPolynomialKernel::new(cfg.sigma, cfg.degree)?),
    };

    let x0 = initial_point(cfg, objective.block_dims());

    let mut run_cfg = RunConfig::new(cfg.method);
    run_cfg.eta = config::schedule_of(cfg.eta_schedule, cfg.eta0, cfg.stage1, cfg.stage2);
    run_cfg.theta = config::schedule_of(cfg.theta_schedule, cfg.theta0, cfg.stage1, cfg.stage2);
    run_cfg.tau = cfg.tau;
    run_cfg.nu0 = cfg.nu0;
    run_cfg.budget_epochs = cfg.budget_epochs;
    run_cfg.trace_stride = cfg.trace_stride;
    run_cfg.proxy_window = cfg.proxy_window;
    run_cfg.stationarity_target = cfg.stationarity_target;
    run_cfg.regularizer = regularizer;
    run_cfg.constraint = constraint;

    Ok(BuiltExperiment {
        objective,
        spec,
        kernel,
        run_cfg,
        sampler,
        x0,
        warnings: config::warnings(cfg),
    })
}

fn initial_point(cfg: &ExperimentConfig, block_dims: &[usize]) -> BlockedVector {
    match cfg.init {
        InitKind::Fill => {
            let mut x = BlockedVector::zeros(block_dims);
            for v in x.iter_mut() {
                *v = cfg.init_value;
            }
            x
        }
        InitKind::Gaussian => {
            // Init stream separated from the data stream by a fixed offset.
            let mut rng = Rng::new(cfg.data_seed ^ 0x9E37_79B9_7F4A_7C15);
            let mut x = BlockedVector::zeros(block_dims);
            for v in x.iter_mut() {
                *v = cfg.init_scale * rng.next_gaussian();
            }
            x
        }
    }
}

/// Outcome persisted into summary.txt.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub status: &'static str,
    pub final_f: f64,
    pub best_f: f64,
    pub final_composite: f64,
    pub oracle_value: Option<f64>,
    pub oracle_gap: Option<f64>,
    pub iterations: u64,
    pub epochs: u64,
    pub max_cert_residual: f64,
    pub final_m_norm: f64,
    pub final_proxy: f64,
    pub warnings: Vec<String>,
}

impl RunSummary {
    fn render(&self, cfg: &ExperimentConfig) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "status: {}", self.status);
        let _ = writeln!(s, "problem: {}", cfg.problem.as_str());
        let _ = writeln!(s, "method: {}", cfg.method.name());
        let _ = writeln!(s, "kernel: {}", cfg.kernel.as_str());
        let _ = writeln!(s, "iterations: {}", self.iterations);
        let _ = writeln!(s, "epochs: {}", self.epochs);
        let _ = writeln!(s, "final_f: {:.17e}", self.final_f);
        let _ = writeln!(s, "best_f: {:.17e}", self.best_f);
        let _ = writeln!(s, "final_f_plus_r: {:.17e}", self.final_composite);
        match (self.oracle_value, self.oracle_gap) {
            (Some(v), Some(g)) => {
                let _ = writeln!(s, "oracle_f: {v:.17e}");
                let _ = writeln!(s, "oracle_gap: {g:.17e}");
            }
            _ => {
                let _ = writeln!(s, "oracle_f: unavailable");
            }
        }
        let _ = writeln!(s, "certificate_status: {}", if self.status == "ok" { "all steps certified" } else { "failure" });
        let _ = writeln!(s, "max_cert_residual: {:.17e}", self.max_cert_residual);
        let _ = writeln!(s, "final_m_norm: {:.17e}", self.final_m_norm);
        // Proxy, not a certificate: the exact conservative-field distance
        // is not computable.
        let _ = writeln!(s, "final_stationarity_proxy: {:.17e}", self.final_proxy);
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }
}

/// Run one experiment into `out_dir`: trace.csv, summary.txt, and
/// config_echo.txt. Fails (after flushing the partial trace and writing a
/// failure summary) if any step errors.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<RunSummary, Error> {
    fs::create_dir_all(out_dir)?;
    let mut echo_cfg = cfg.clone();
    if let Some(seed) = seed_override {
        echo_cfg.seed = seed;
    }
    fs::write(out_dir.join("config_echo.txt"), config::echo(&echo_cfg))?;

    let built = build(cfg, seed_override)?;
    let BuiltExperiment {
        objective,
        spec,
        kernel,
        run_cfg,
        mut sampler,
        x0,
        warnings,
    } = built;

    let mut csv = CsvSink::create(&out_dir.join("trace.csv"))?;
    let mut mem = VecSink::default();
    let result = {
        let mut tee = TeeSink {
            first: &mut csv,
            second: &mut mem,
        };
        optim::run(&run_cfg, kernel.as_ref(), &objective, &mut sampler, x0, &mut tee)
    };

    let records = &mem.records;
    let last = records.last().copied();
    let best_f = records
        .iter()
        .map(|r| r.f_value)
        .fold(f64::INFINITY, f64::min);
    let max_cert = records
        .iter()
        .map(|r| r.cert_residual)
        .fold(0.0f64, f64::max);

    let summary = match &result {
        Ok(state) => {
            let final_f = objective.eval_full_value(&state.x)?;
            let composite = final_f + run_cfg.regularizer.value(&state.x);
            let oracle_value = spec.optimum.as_ref().map(|o| o.value);
            let oracle_gap = oracle_value.map(|v| composite - v);
            RunSummary {
                status: "ok",
                final_f,
                best_f,
                final_composite: composite,
                oracle_value,
                oracle_gap,
                iterations: state.iter,
                epochs: state.epoch,
                max_cert_residual: max_cert,
                final_m_norm: state.m.norm(),
                final_proxy: last.map(|r| r.stationarity_proxy).unwrap_or(0.0),
                warnings,
            }
        }
        Err(e) => RunSummary {
            status: "failed",
            final_f: last.map(|r| r.f_value).unwrap_or(f64::NAN),
            best_f,
            final_composite: f64::NAN,
            oracle_value: spec.optimum.as_ref().map(|o| o.value),
            oracle_gap: None,
            iterations: last.map(|r| r.iter).unwrap_or(0),
            epochs: last.map(|r| r.epoch).unwrap_or(0),
            max_cert_residual: max_cert,
            final_m_norm: f64::NAN,
            final_proxy: last.map(|r| r.stationarity_proxy).unwrap_or(0.0),
            warnings: {
                let mut w = warnings.clone();
                w.push(format!("aborted: {e}"));
                w
            },
        },
    };
    fs::write(out_dir.join("summary.txt"), summary.render(&echo_cfg))?;
    result.map(|_| summary)
}

/// One sweep cell: a (eta0, seed) pair with its output directory.
#[derive(Clone, Debug)]
pub struct SweepCell {
    pub eta0: f64,
    pub seed: u64,
    pub dir: PathBuf,
    pub final_f: f64,
    pub status: &'static str,
}

/// Cartesian sweep over seeds x eta0 grid. Cells run isolated (in
/// parallel when enabled); any cell failure is marked and the sweep
/// continues. Returns the cells plus the aggregate report text.
pub fn sweep(
    cfg: &ExperimentConfig,
    seeds: &[u64],
    eta0_grid: Option<&[f64]>,
    out_dir: &Path,
) -> Result<(Vec<SweepCell>, String), Error> {
    fs::create_dir_all(out_dir)?;
    let etas: Vec<f64> = match eta0_grid {
        Some(g) if !g.is_empty() => g.to_vec(),
        _ => vec![cfg.eta0],
    };
    let mut jobs = Vec::new();
    for &eta0 in &etas {
        for &seed in seeds {
            let mut cell_cfg = cfg.clone();
            cell_cfg.eta0 = eta0;
            let dir = out_dir.join(format!("cell_eta{eta0}_seed{seed}"));
            jobs.push((cell_cfg, eta0, seed, dir));
        }
    }

    let run_cell = |(cell_cfg, eta0, seed, dir): &(ExperimentConfig, f64, u64, PathBuf)| {
        match run_experiment(cell_cfg, dir, Some(*seed)) {
            Ok(summary) => SweepCell {
                eta0: *eta0,
                seed: *seed,
                dir: dir.clone(),
                final_f: summary.final_composite,
                status: "ok",
            },
            Err(_) => SweepCell {
                eta0: *eta0,
                seed: *seed,
                dir: dir.clone(),
                final_f: f64::NAN,
                status: "failed",
            },
        }
    };

    #[cfg(feature = "parallel")]
    let cells: Vec<SweepCell> = jobs.par_iter().map(run_cell).collect();
    #[cfg(not(feature = "parallel"))]
    let cells: Vec<SweepCell> = jobs.iter().map(run_cell).collect();

    let mut report = String::new();
    let _ = writeln!(report, "sweep cells: {}", cells.len());
    let _ = writeln!(report, "eta0,seed,status,final_f");
    for c in &cells {
        let _ = writeln!(report, "{},{},{},{:.17e}", c.eta0, c.seed, c.status, c.final_f);
    }
    let _ = writeln!(report);
    let _ = writeln!(report, "per-eta0 aggregate over seeds (final_f):");
    let _ = writeln!(report, "eta0,count,ok,mean,min,max");
    for &eta0 in &etas {
        let vals: Vec<f64> = cells
            .iter()
            .filter(|c| c.eta0 == eta0 && c.status == "ok")
            .map(|c| c.final_f)
            .collect();
        let count = cells.iter().filter(|c| c.eta0 == eta0).count();
        if vals.is_empty() {
            let _ = writeln!(report, "{eta0},{count},0,nan,nan,nan");
        } else {
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let _ = writeln!(
                report,
                "{eta0},{count},{},{mean:.17e},{min:.17e},{max:.17e}",
                vals.len()
            );
        }
    }
    fs::write(out_dir.join("sweep_report.txt"), &report)?;
    Ok((cells, report))
}

/// Compare two trace files; `ignore_wall` drops the wall_ns column from
/// the comparison (the documented determinism check).
pub fn trace_diff(a: &Path, b: &Path, ignore_wall: bool) -> Result<bool, Error> {
    let (ra, rb) = (read_trace(a)?, read_trace(b)?);
    if ra.len() != rb.len() {
        return Ok(false);
    }
    Ok(ra.iter().zip(&rb).all(|(x, y)| {
        let mut x = *x;
        let mut y = *y;
        if ignore_wall {
            x.wall_ns = 0;
            y.wall_ns = 0;
        }
        x == y
    }))
}
