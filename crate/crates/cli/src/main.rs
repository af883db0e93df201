use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use irs_beamforming::sim::{self, Experiment, SweepConfig, KEYS};
use irs_beamforming::Error;

const SUBCOMMANDS: [(&str, Experiment, &str); 4] = [
    ("sweep-distance", Experiment::DistanceSweep, "Receive SNR versus AP-user distance"),
    ("sweep-elements", Experiment::ElementsSweep, "Receive SNR versus number of IRS elements"),
    ("convergence", Experiment::ConvergenceTrace, "Per-iteration SNR of the alternating design"),
    ("oracle-check", Experiment::OracleCheck, "Both designs against exhaustive phase search"),
];

fn cli() -> Command {
    let mut cmd = Command::new("irs-sim")
        .about("Monte Carlo simulation of IRS-assisted MISO beamforming")
        .subcommand_required(true)
        .arg(
            Arg::new("config")
                .long("config")
                .global(true)
                .value_name("FILE")
                .help("Flat `key = value` configuration file"),
        )
        .arg(
            Arg::new("threads")
                .long("threads")
                .global(true)
                .value_name("N")
                .value_parser(clap::value_parser!(usize))
                .help("Worker threads (0 = all cores); output does not depend on it"),
        );
    // one flag per configuration key; flags win over the file
    for &key in KEYS.iter().filter(|&&k| k != "experiment") {
        cmd = cmd.arg(
            Arg::new(key)
                .long(key)
                .global(true)
                .value_name("VALUE")
                .action(ArgAction::Set)
                .help(format!("Override `{key}`")),
        );
    }
    for (name, _, about) in SUBCOMMANDS {
        cmd = cmd.subcommand(Command::new(name).about(about));
    }
    cmd
}

fn build_config(experiment: Experiment, m: &ArgMatches) -> irs_beamforming::Result<SweepConfig> {
    let mut cfg = match m.get_one::<String>("config") {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config { key: "config".into(), message: format!("{path}: {e}") })?;
            let mut cfg = SweepConfig::new(experiment);
            for (k, v) in sim::parse_kv_text(&text)? {
                cfg.apply(&k, &v)?;
            }
            cfg
        }
        None => SweepConfig::new(experiment),
    };
    for &key in KEYS.iter().filter(|&&k| k != "experiment") {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.apply(key, v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn summary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or("out".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.summary.csv"))
}

fn create(path: &Path) -> irs_beamforming::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn run(experiment: Experiment, cfg: &SweepConfig) -> irs_beamforming::Result<()> {
    if experiment == Experiment::OracleCheck {
        let rows = sim::oracle_check(cfg)?;
        sim::write_oracle_csv(create(&cfg.out)?, &rows)?;
        let pass = |f: fn(&sim::OracleRow) -> f64| rows.iter().filter(|r| f(r) >= 0.98).count();
        eprintln!(
            "{} instances: centralized >= 98% of grid in {}, distributed in {}",
            rows.len(),
            pass(sim::OracleRow::centralized_ratio),
            pass(sim::OracleRow::distributed_ratio)
        );
        eprintln!("wrote {}", cfg.out.display());
        return Ok(());
    }

    let rows = match experiment {
        Experiment::DistanceSweep => sim::run_distance_sweep(cfg)?,
        Experiment::ElementsSweep => sim::run_elements_sweep(cfg)?,
        _ => sim::run_convergence_trace(cfg)?,
    };
    let summary = sim::summarize(&rows);
    sim::write_trials_csv(create(&cfg.out)?, &rows)?;
    let side = summary_path(&cfg.out);
    sim::write_summary_csv(create(&side)?, &summary)?;

    if experiment == Experiment::ConvergenceTrace {
        let finals: Vec<_> = summary.iter().map(|s| (s.d_m, s.n)).collect();
        for (d, n) in finals {
            let iters: Vec<usize> = rows
                .iter()
                .filter(|r| r.d_m == d && r.n == n)
                .fold(Vec::new(), |mut acc, r| {
                    if r.iterations == 0 {
                        acc.push(0);
                    } else if let Some(last) = acc.last_mut() {
                        *last = r.iterations;
                    }
                    acc
                });
            let within = iters.iter().filter(|&&k| k <= 3).count();
            eprintln!("d = {d} m, N = {n}: {within}/{} traces stop within 3 iterations", iters.len());
        }
    } else {
        for s in &summary {
            eprintln!(
                "{:<12} d = {:>5} m  N = {:>3}  mean SNR = {:8.3} dB (+/- {:.3})",
                s.scheme.as_str(),
                s.d_m,
                s.n,
                s.mean_snr_db,
                s.stderr_db
            );
        }
    }
    eprintln!("wrote {} and {}", cfg.out.display(), side.display());
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config { .. } => 2,
        Error::Io(_) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand_required");
    let experiment = SUBCOMMANDS
        .iter()
        .find(|(n, _, _)| *n == name)
        .map(|&(_, e, _)| e)
        .expect("registered subcommand");

    let result = build_config(experiment, sub).and_then(|cfg| {
        let threads = sub.get_one::<usize>("threads").copied().unwrap_or(0);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config { key: "threads".into(), message: e.to_string() })?;
        pool.install(|| run(experiment, &cfg))
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
