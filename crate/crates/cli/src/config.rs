//! Experiment configuration: a sectioned key=value text format chosen for
//! diff-friendliness and zero-dependency parsing.
//!
//! ```text
//! # comment lines start with '#'
//! [problem]
//! name = l1_regression        # l1_regression | relu_net | nonregular_scalar | lasso_lad
//! m = 50
//! n = 2
//! lambda = 0.1                # lasso_lad regularization weight
//! consistent = false          # l1_regression: rhs consistent with a hidden solution
//! d_in = 3                    # relu_net shape
//! d_hidden = 4
//! d_out = 2
//! data_seed = 0
//! init = fill                 # fill | gaussian
//! init_value = 1.0            # fill value
//! init_scale = 1.0            # gaussian scale
//!
//! [kernel]
//! kind = block_poly           # euclidean | block_poly | coord_poly
//! sigma = 0.01
//! degree = 4
//!
//! [optimizer]
//! method = sbg                # sbg | sbg_precond | msbg | imsbg | sbpg
//! eta0 = 0.1
//! eta_schedule = log_decay    # constant | log_decay | staged_lstm
//! stage1 = 150                # staged_lstm cut points (epochs)
//! stage2 = 300
//! theta0 = 0.1
//! theta_schedule = log_decay
//! tau = 1.0                   # target theta/eta ratio
//! nu0 = 0.001
//! budget_epochs = 100
//! proxy_window = 50
//! # stationarity_target = 1e-6   (optional early stop)
//!
//! [sampler]
//! mode = reshuffle            # reshuffle | iid | full
//! batch_size = 1
//! seed = 0
//!
//! [output]
//! dir = runs/out
//! trace_stride = 1
//! ```
//!
//! Unknown sections or keys are hard errors; validation reports every
//! problem found, not just the first.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use bregopt::Method;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemName {
    L1Regression,
    ReluNet,
    NonregularScalar,
    LassoLad,
}

impl ProblemName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemName::L1Regression => "l1_regression",
            ProblemName::ReluNet => "relu_net",
            ProblemName::NonregularScalar => "nonregular_scalar",
            ProblemName::LassoLad => "lasso_lad",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    Euclidean,
    BlockPoly,
    CoordPoly,
}

impl KernelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            KernelKind::Euclidean => "euclidean",
            KernelKind::BlockPoly => "block_poly",
            KernelKind::CoordPoly => "coord_poly",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScheduleKind {
    Constant,
    LogDecay,
    StagedLstm,
}

impl ScheduleKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScheduleKind::Constant => "constant",
            ScheduleKind::LogDecay => "log_decay",
            ScheduleKind::StagedLstm => "staged_lstm",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplerKind {
    Reshuffle,
    Iid,
    Full,
}

impl SamplerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplerKind::Reshuffle => "reshuffle",
            SamplerKind::Iid => "iid",
            SamplerKind::Full => "full",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitKind {
    Fill,
    Gaussian,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    // [problem]
    pub problem: ProblemName,
    pub m: usize,
    pub n: usize,
    pub lambda: f64,
    pub consistent: bool,
    pub d_in: usize,
    pub d_hidden: usize,
    pub d_out: usize,
    pub data_seed: u64,
    pub init: InitKind,
    pub init_value: f64,
    pub init_scale: f64,
    // [kernel]
    pub kernel: KernelKind,
    pub sigma: f64,
    pub degree: u32,
    // [optimizer]
    pub method: Method,
    pub eta0: f64,
    pub eta_schedule: ScheduleKind,
    pub stage1: u64,
    pub stage2: u64,
    pub theta0: f64,
    pub theta_schedule: ScheduleKind,
    pub tau: f64,
    pub nu0: f64,
    pub budget_epochs: u64,
    pub proxy_window: usize,
    pub stationarity_target: Option<f64>,
    // [sampler]
    pub sampler: SamplerKind,
    pub batch_size: usize,
    pub seed: u64,
    // [output]
    pub out_dir: String,
    pub trace_stride: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem: ProblemName::L1Regression,
            m: 50,
            n: 2,
            lambda: 0.1,
            consistent: false,
            d_in: 3,
            d_hidden: 4,
            d_out: 2,
            data_seed: 0,
            init: InitKind::Fill,
            init_value: 1.0,
            init_scale: 1.0,
            kernel: KernelKind::BlockPoly,
            sigma: 0.01,
            degree: 4,
            method: Method::Sbg,
            eta0: 0.1,
            eta_schedule: ScheduleKind::LogDecay,
            stage1: 150,
            stage2: 300,
            theta0: 0.1,
            theta_schedule: ScheduleKind::LogDecay,
            tau: 1.0,
            nu0: 1e-3,
            budget_epochs: 100,
            proxy_window: 50,
            stationarity_target: None,
            sampler: SamplerKind::Reshuffle,
            batch_size: 1,
            seed: 0,
            out_dir: "runs/out".to_string(),
            trace_stride: 1,
        }
    }
}

/// All problems found while parsing/validating a config, reported at once.
#[derive(Debug)]
pub struct ConfigErrors(pub Vec<String>);

impl std::fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "configuration invalid ({} error(s)):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

pub fn parse_config_file(path: &Path) -> Result<ExperimentConfig, ConfigErrors> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigErrors(vec![format!("cannot read {}: {e}", path.display())]))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let mut errors = Vec::new();
    let mut entries: BTreeMap<(String, String), String> = BTreeMap::new();
    let mut section = String::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            if !matches!(
                section.as_str(),
                "problem" | "kernel" | "optimizer" | "sampler" | "output"
            ) {
                errors.push(format!("line {}: unknown section [{section}]", lineno + 1));
            }
            continue;
        }
        match line.split_once('=') {
            None => errors.push(format!("line {}: expected key = value, got {line:?}", lineno + 1)),
            Some((k, v)) => {
                if section.is_empty() {
                    errors.push(format!("line {}: key before any [section]", lineno + 1));
                    continue;
                }
                let key = k.trim().to_string();
                let val = v.trim().to_string();
                if entries
                    .insert((section.clone(), key.clone()), val)
                    .is_some()
                {
                    errors.push(format!("line {}: duplicate key {section}.{key}", lineno + 1));
                }
            }
        }
    }

    let mut cfg = ExperimentConfig::default();
    let mut take = |section: &str, key: &str| entries.remove(&(section.into(), key.into()));

    macro_rules! set {
        ($sec:literal, $key:literal, $field:expr, $parse:expr) => {
            if let Some(v) = take($sec, $key) {
                match $parse(&v) {
                    Ok(parsed) => $field = parsed,
                    Err(msg) => errors.push(format!("{}.{} = {v:?}: {msg}", $sec, $key)),
                }
            }
        };
    }

    let parse_usize = |v: &str| v.parse::<usize>().map_err(|e| e.to_string());
    let parse_u64 = |v: &str| v.parse::<u64>().map_err(|e| e.to_string());
    let parse_u32 = |v: &str| v.parse::<u32>().map_err(|e| e.to_string());
    let parse_f64 = |v: &str| v.parse::<f64>().map_err(|e| e.to_string());
    let parse_bool = |v: &str| match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err("expected true or false".to_string()),
    };

    set!("problem", "name", cfg.problem, |v: &str| -> Result<ProblemName, String> { match v {
        "l1_regression" => Ok(ProblemName::L1Regression),
        "relu_net" => Ok(ProblemName::ReluNet),
        "nonregular_scalar" => Ok(ProblemName::NonregularScalar),
        "lasso_lad" => Ok(ProblemName::LassoLad),
        _ => Err("expected one of l1_regression, relu_net, nonregular_scalar, lasso_lad".into()),
    }});
    set!("problem", "m", cfg.m, parse_usize);
    set!("problem", "n", cfg.n, parse_usize);
    set!("problem", "lambda", cfg.lambda, parse_f64);
    set!("problem", "consistent", cfg.consistent, parse_bool);
    set!("problem", "d_in", cfg.d_in, parse_usize);
    set!("problem", "d_hidden", cfg.d_hidden, parse_usize);
    set!("problem", "d_out", cfg.d_out, parse_usize);
    set!("problem", "data_seed", cfg.data_seed, parse_u64);
    set!("problem", "init", cfg.init, |v: &str| -> Result<InitKind, String> { match v {
        "fill" => Ok(InitKind::Fill),
        "gaussian" => Ok(InitKind::Gaussian),
        _ => Err("expected fill or gaussian".into()),
    }});
    set!("problem", "init_value", cfg.init_value, parse_f64);
    set!("problem", "init_scale", cfg.init_scale, parse_f64);

    set!("kernel", "kind", cfg.kernel, |v: &str| -> Result<KernelKind, String> { match v {
        "euclidean" => Ok(KernelKind::Euclidean),
        "block_poly" => Ok(KernelKind::BlockPoly),
        "coord_poly" => Ok(KernelKind::CoordPoly),
        _ => Err("expected one of euclidean, block_poly, coord_poly".into()),
    }});
    set!("kernel", "sigma", cfg.sigma, parse_f64);
    set!("kernel", "degree", cfg.degree, parse_u32);

    set!("optimizer", "method", cfg.method, |v: &str| -> Result<Method, String> { match v {
        "sbg" => Ok(Method::Sbg),
        "sbg_precond" => Ok(Method::SbgPrecond),
        "msbg" => Ok(Method::Msbg),
        "imsbg" => Ok(Method::Imsbg),
        "sbpg" => Ok(Method::Sbpg),
        _ => Err("expected one of sbg, sbg_precond, msbg, imsbg, sbpg".into()),
    }});
    set!("optimizer", "eta0", cfg.eta0, parse_f64);
    let parse_schedule = |v: &str| match v {
        "constant" => Ok(ScheduleKind::Constant),
        "log_decay" => Ok(ScheduleKind::LogDecay),
        "staged_lstm" => Ok(ScheduleKind::StagedLstm),
        _ => Err("expected one of constant, log_decay, staged_lstm".to_string()),
    };
    set!("optimizer", "eta_schedule", cfg.eta_schedule, parse_schedule);
    set!("optimizer", "stage1", cfg.stage1, parse_u64);
    set!("optimizer", "stage2", cfg.stage2, parse_u64);
    set!("optimizer", "theta0", cfg.theta0, parse_f64);
    set!("optimizer", "theta_schedule", cfg.theta_schedule, parse_schedule);
    set!("optimizer", "tau", cfg.tau, parse_f64);
    set!("optimizer", "nu0", cfg.nu0, parse_f64);
    set!("optimizer", "budget_epochs", cfg.budget_epochs, parse_u64);
    set!("optimizer", "proxy_window", cfg.proxy_window, parse_usize);
    set!(
        "optimizer",
        "stationarity_target",
        cfg.stationarity_target,
        |v: &str| v.parse::<f64>().map(Some).map_err(|e| e.to_string())
    );

    set!("sampler", "mode", cfg.sampler, |v: &str| -> Result<SamplerKind, String> { match v {
        "reshuffle" => Ok(SamplerKind::Reshuffle),
        "iid" => Ok(SamplerKind::Iid),
        "full" => Ok(SamplerKind::Full),
        _ => Err("expected one of reshuffle, iid, full".into()),
    }});
    set!("sampler", "batch_size", cfg.batch_size, parse_usize);
    set!("sampler", "seed", cfg.seed, parse_u64);

    set!("output", "dir", cfg.out_dir, |v: &str| Ok::<_, String>(v.to_string()));
    set!("output", "trace_stride", cfg.trace_stride, parse_u64);

    for (section, key) in entries.keys() {
        errors.push(format!("unknown key {section}.{key}"));
    }

    errors.extend(validate(&cfg));
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(errors))
    }
}

/// Every rule violation in the resolved configuration.
pub fn validate(cfg: &ExperimentConfig) -> Vec<String> {
    let mut errors = Vec::new();
    let momentum = cfg.method.uses_momentum();

    match cfg.problem {
        ProblemName::L1Regression => {
            if cfg.n < 1 || cfg.m < cfg.n {
                errors.push(format!(
                    "problem: l1_regression needs m >= n >= 1, got m={} n={}",
                    cfg.m, cfg.n
                ));
            }
        }
        ProblemName::LassoLad => {
            if cfg.n < 1 || cfg.m < cfg.n {
                errors.push(format!(
                    "problem: lasso_lad needs m >= n >= 1, got m={} n={}",
                    cfg.m, cfg.n
                ));
            }
            if cfg.n > 2 {
                errors.push(format!(
                    "problem: the lasso_lad grid oracle supports n <= 2, got n={}",
                    cfg.n
                ));
            }
            if !(cfg.lambda >= 0.0) {
                errors.push(format!("problem: lambda must be >= 0, got {}", cfg.lambda));
            }
            if (cfg.lambda > 0.0) && cfg.method != Method::Sbpg {
                errors.push(format!(
                    "compatibility: lasso_lad with lambda > 0 is a composite instance; it requires method = sbpg, got {}",
                    cfg.method.name()
                ));
            }
        }
        ProblemName::ReluNet => {
            if cfg.d_in == 0 || cfg.d_hidden == 0 || cfg.d_out == 0 {
                errors.push("problem: relu_net dimensions must be positive".into());
            }
        }
        ProblemName::NonregularScalar => {}
    }

    if !(cfg.sigma >= 0.0 && cfg.sigma.is_finite()) {
        errors.push(format!("kernel: sigma must be finite and >= 0, got {}", cfg.sigma));
    }
    if cfg.kernel != KernelKind::Euclidean && cfg.degree < 4 {
        errors.push(format!("kernel: degree must be an integer >= 4, got {}", cfg.degree));
    }
    if cfg.method == Method::Sbpg && cfg.kernel == KernelKind::BlockPoly {
        errors.push(
            "compatibility: sbpg requires a separable kernel (euclidean or coord_poly); \
             block_poly has no certified subproblem solver"
                .into(),
        );
    }

    if !(cfg.eta0 > 0.0) {
        errors.push(format!("optimizer: eta0 must be > 0, got {}", cfg.eta0));
    }
    if momentum && !(cfg.theta0 > 0.0) {
        errors.push(format!("optimizer: theta0 must be > 0, got {}", cfg.theta0));
    }
    if momentum && !(cfg.tau > 0.0) {
        errors.push(format!("optimizer: tau must be > 0, got {}", cfg.tau));
    }
    if !(cfg.nu0 >= 0.0) {
        errors.push(format!("optimizer: nu0 must be >= 0, got {}", cfg.nu0));
    }
    if cfg.eta_schedule == ScheduleKind::StagedLstm && cfg.stage1 >= cfg.stage2 {
        errors.push(format!(
            "optimizer: staged_lstm needs stage1 < stage2, got {} >= {}",
            cfg.stage1, cfg.stage2
        ));
    }
    if cfg.proxy_window == 0 {
        errors.push("optimizer: proxy_window must be >= 1".into());
    }

    if cfg.batch_size == 0 {
        errors.push("sampler: batch_size must be >= 1".into());
    }
    if cfg.sampler == SamplerKind::Reshuffle && cfg.batch_size > 1 {
        errors.push(format!(
            "sampler: reshuffle mode samples single components; batch_size must be 1, got {}",
            cfg.batch_size
        ));
    }
    if cfg.trace_stride == 0 {
        errors.push("output: trace_stride must be >= 1".into());
    }

    errors
}

/// Non-fatal observations, surfaced in the run summary.
pub fn warnings(cfg: &ExperimentConfig) -> Vec<String> {
    let mut out = Vec::new();
    if cfg.method.uses_momentum() {
        let eta = schedule_of(cfg.eta_schedule, cfg.eta0, cfg.stage1, cfg.stage2);
        let theta = schedule_of(cfg.theta_schedule, cfg.theta0, cfg.stage1, cfg.stage2);
        let end = cfg.budget_epochs.saturating_sub(1);
        let ratio = theta.eval(end) / eta.eval(end);
        if (ratio - cfg.tau).abs() > 0.01 * cfg.tau.abs().max(1e-300) {
            out.push(format!(
                "theta/eta ratio at the final epoch is {ratio:.6}, off the configured tau = {} by more than 1%",
                cfg.tau
            ));
        }
    }
    out
}

pub fn schedule_of(kind: ScheduleKind, initial: f64, stage1: u64, stage2: u64) -> bregopt::Schedule {
    match kind {
        ScheduleKind::Constant => bregopt::Schedule::Constant { value: initial },
        ScheduleKind::LogDecay => bregopt::Schedule::LogDecay { initial },
        ScheduleKind::StagedLstm => bregopt::Schedule::StagedLstm {
            initial,
            stage1,
            stage2,
        },
    }
}

/// Canonical text for provenance: parsing the echo reproduces an equal
/// config.
pub fn echo(cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[problem]");
    let _ = writeln!(s, "name = {}", cfg.problem.as_str());
    let _ = writeln!(s, "m = {}", cfg.m);
    let _ = writeln!(s, "n = {}", cfg.n);
    let _ = writeln!(s, "lambda = {}", fmt_f64(cfg.lambda));
    let _ = writeln!(s, "consistent = {}", cfg.consistent);
    let _ = writeln!(s, "d_in = {}", cfg.d_in);
    let _ = writeln!(s, "d_hidden = {}", cfg.d_hidden);
    let _ = writeln!(s, "d_out = {}", cfg.d_out);
    let _ = writeln!(s, "data_seed = {}", cfg.data_seed);
    let _ = writeln!(
        s,
        "init = {}",
        match cfg.init {
            InitKind::Fill => "fill",
            InitKind::Gaussian => "gaussian",
        }
    );
    let _ = writeln!(s, "init_value = {}", fmt_f64(cfg.init_value));
    let _ = writeln!(s, "init_scale = {}", fmt_f64(cfg.init_scale));
    let _ = writeln!(s);
    let _ = writeln!(s, "[kernel]");
    let _ = writeln!(s, "kind = {}", cfg.kernel.as_str());
    let _ = writeln!(s, "sigma = {}", fmt_f64(cfg.sigma));
    let _ = writeln!(s, "degree = {}", cfg.degree);
    let _ = writeln!(s);
    let _ = writeln!(s, "[optimizer]");
    let _ = writeln!(s, "method = {}", cfg.method.name());
    let _ = writeln!(s, "eta0 = {}", fmt_f64(cfg.eta0));
    let _ = writeln!(s, "eta_schedule = {}", cfg.eta_schedule.as_str());
    let _ = writeln!(s, "stage1 = {}", cfg.stage1);
    let _ = writeln!(s, "stage2 = {}", cfg.stage2);
    let _ = writeln!(s, "theta0 = {}", fmt_f64(cfg.theta0));
    let _ = writeln!(s, "theta_schedule = {}", cfg.theta_schedule.as_str());
    let _ = writeln!(s, "tau = {}", fmt_f64(cfg.tau));
    let _ = writeln!(s, "nu0 = {}", fmt_f64(cfg.nu0));
    let _ = writeln!(s, "budget_epochs = {}", cfg.budget_epochs);
    let _ = writeln!(s, "proxy_window = {}", cfg.proxy_window);
    if let Some(t) = cfg.stationarity_target {
        let _ = writeln!(s, "stationarity_target = {}", fmt_f64(t));
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "[sampler]");
    let _ = writeln!(s, "mode = {}", cfg.sampler.as_str());
    let _ = writeln!(s, "batch_size = {}", cfg.batch_size);
    let _ = writeln!(s, "seed = {}", cfg.seed);
    let _ = writeln!(s);
    let _ = writeln!(s, "[output]");
    let _ = writeln!(s, "dir = {}", cfg.out_dir);
    let _ = writeln!(s, "trace_stride = {}", cfg.trace_stride);
    s
}

fn fmt_f64(v: f64) -> String {
    // Shortest representation that round-trips.
    let s = format!("{v}");
    debug_assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
    s
}
