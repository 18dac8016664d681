use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bregopt_cli::{checks, config, diagnose, runner};

const USAGE: &str = "\
bregopt - stochastic Bregman subgradient experiment runner

USAGE:
    bregopt run <config> [--seed S] [--out DIR]
    bregopt sweep <config> --seeds a,b,c [--eta0-grid x,y,z] [--out DIR]
    bregopt diagnose <trace.csv>
    bregopt selftest

Config files are sectioned key=value text; see the repository README for
the full grammar and defaults. Exit codes: 0 success, 1 usage or
configuration error, 2 run or certificate failure.";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.first().map(String::as_str) {
        Some("run") => cmd_run(&args[1..]),
        Some("sweep") => cmd_sweep(&args[1..]),
        Some("diagnose") => cmd_diagnose(&args[1..]),
        Some("selftest") => cmd_selftest(),
        Some("--help") | Some("-h") | Some("help") => {
            println!("{USAGE}");
            ExitCode::SUCCESS
        }
        _ => {
            eprintln!("{USAGE}");
            ExitCode::from(1)
        }
    }
}

struct Flags {
    positional: Vec<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    seeds: Option<Vec<u64>>,
    eta0_grid: Option<Vec<f64>>,
}

fn parse_flags(args: &[String]) -> Result<Flags, String> {
    let mut flags = Flags {
        positional: Vec::new(),
        seed: None,
        out: None,
        seeds: None,
        eta0_grid: None,
    };
    let mut i = 0;
    while i < args.len() {
        let take_value = |i: &mut usize| -> Result<String, String> {
            *i += 1;
            args.get(*i)
                .cloned()
                .ok_or_else(|| format!("flag {} needs a value", args[*i - 1]))
        };
        match args[i].as_str() {
            "--seed" => {
                let v = take_value(&mut i)?;
                flags.seed = Some(v.parse().map_err(|e| format!("--seed {v}: {e}"))?);
            }
            "--out" => {
                flags.out = Some(PathBuf::from(take_value(&mut i)?));
            }
            "--seeds" => {
                let v = take_value(&mut i)?;
                let parsed: Result<Vec<u64>, _> =
                    v.split(',').map(|s| s.trim().parse::<u64>()).collect();
                flags.seeds = Some(parsed.map_err(|e| format!("--seeds {v}: {e}"))?);
            }
            "--eta0-grid" => {
                let v = take_value(&mut i)?;
                let parsed: Result<Vec<f64>, _> =
                    v.split(',').map(|s| s.trim().parse::<f64>()).collect();
                flags.eta0_grid = Some(parsed.map_err(|e| format!("--eta0-grid {v}: {e}"))?);
            }
            flag if flag.starts_with("--") => return Err(format!("unknown flag {flag}")),
            _ => flags.positional.push(args[i].clone()),
        }
        i += 1;
    }
    Ok(flags)
}

fn cmd_run(args: &[String]) -> ExitCode {
    let flags = match parse_flags(args) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}\n\n{USAGE}");
            return ExitCode::from(1);
        }
    };
    let Some(config_path) = flags.positional.first() else {
        eprintln!("error: run needs a config path\n\n{USAGE}");
        return ExitCode::from(1);
    };
    let cfg = match config::parse_config_file(Path::new(config_path)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    let out_dir = flags.out.unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    match runner::run_experiment(&cfg, &out_dir, flags.seed) {
        Ok(summary) => {
            println!(
                "ok: {} iterations, final_f = {:.6e}{}",
                summary.iterations,
                summary.final_f,
                summary
                    .oracle_gap
                    .map(|g| format!(", oracle gap = {g:.3e}"))
                    .unwrap_or_default()
            );
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            println!("outputs in {}", out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("run failed: {e}");
            ExitCode::from(2)
        }
    }
}

fn cmd_sweep(args: &[String]) -> ExitCode {
    let flags = match parse_flags(args) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}\n\n{USAGE}");
            return ExitCode::from(1);
        }
    };
    let Some(config_path) = flags.positional.first() else {
        eprintln!("error: sweep needs a config path\n\n{USAGE}");
        return ExitCode::from(1);
    };
    let Some(seeds) = flags.seeds else {
        eprintln!("error: sweep needs --seeds\n\n{USAGE}");
        return ExitCode::from(1);
    };
    let cfg = match config::parse_config_file(Path::new(config_path)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    let out_dir = flags
        .out
        .unwrap_or_else(|| PathBuf::from(format!("{}_sweep", cfg.out_dir)));
    match runner::sweep(&cfg, &seeds, flags.eta0_grid.as_deref(), &out_dir) {
        Ok((cells, report)) => {
            print!("{report}");
            let failed = cells.iter().filter(|c| c.status != "ok").count();
            if failed > 0 {
                eprintln!("{failed} cell(s) failed");
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("sweep failed: {e}");
            ExitCode::from(2)
        }
    }
}

fn cmd_diagnose(args: &[String]) -> ExitCode {
    let Some(path) = args.first() else {
        eprintln!("error: diagnose needs a trace path\n\n{USAGE}");
        return ExitCode::from(1);
    };
    match diagnose::diagnose_file(Path::new(path)) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("diagnose failed: {e}");
            ExitCode::from(2)
        }
    }
}

fn cmd_selftest() -> ExitCode {
    let mut failures = 0;
    for (name, check) in checks::selftest_checks() {
        match check() {
            Ok(()) => println!("PASS {name}"),
            Err(msg) => {
                failures += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    }
    if failures == 0 {
        println!("selftest: all checks passed");
        ExitCode::SUCCESS
    } else {
        println!("selftest: {failures} check(s) failed");
        ExitCode::from(2)
    }
}
