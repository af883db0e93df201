use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{Experiment, Scheme, SweepConfig};
use super::oracle::brute_force_oracle;
use crate::alternating::alternating_optimize;
use crate::baselines::{ap_irs_mrt, ap_user_mrt, no_irs};
use crate::channel::{generate_channels, iid_rayleigh_instance, RngSeed};
use crate::error::{Error, Result};
use crate::model::{received_power, to_db, ChannelSet, SystemParams};
use crate::sdr::centralized_optimize;

pub const CSV_HEADER: &str = "scheme,d_m,N,trial,snr_db,iterations,runtime_ms";
pub const SUMMARY_HEADER: &str = "scheme,d_m,N,trials,mean_snr_db,stderr_db,mean_iterations";
pub const ORACLE_HEADER: &str =
    "instance,M,N,grid_snr_db,centralized_snr_db,distributed_snr_db,centralized_ratio,distributed_ratio";

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub scheme: Scheme,
    pub d_m: f64,
    pub n: usize,
    pub trial: usize,
    /// `-inf` when the received power is zero.
    pub snr_db: f64,
    /// Alternating iterations for `distributed`, else 0. In a convergence
    /// trace, the iteration index of the recorded objective.
    pub iterations: usize,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scheme: Scheme,
    pub d_m: f64,
    pub n: usize,
    pub trials: usize,
    pub mean_snr_db: f64,
    /// Standard error of the mean; 0 for a single trial.
    pub stderr_db: f64,
    pub mean_iterations: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub instance: usize,
    pub antennas: usize,
    pub elements: usize,
    pub grid_power: f64,
    pub centralized_power: f64,
    pub distributed_power: f64,
    pub sigma2: f64,
}

impl OracleRow {
    pub fn centralized_ratio(&self) -> f64 {
        self.centralized_power / self.grid_power
    }

    pub fn distributed_ratio(&self) -> f64 {
        self.distributed_power / self.grid_power
    }
}

/// Channel realization of one trial. The stream depends on the trial index
/// only, so every `d` and `N` of a sweep reuses the same underlying draws.
pub fn trial_channels(cfg: &SweepConfig, d: f64, n: usize, trial: usize) -> Result<(ChannelSet, SystemParams)> {
    let sys = cfg.system(n)?;
    let ch = generate_channels(&cfg.geometry(d, n), &cfg.path, &sys, trial_seed(cfg, trial))?;
    Ok((ch, sys))
}

fn trial_seed(cfg: &SweepConfig, trial: usize) -> RngSeed {
    RngSeed::new(cfg.seed, trial as u64)
}

fn points(cfg: &SweepConfig) -> Vec<(f64, usize)> {
    let mut pts = Vec::new();
    for &d in &cfg.d_values {
        for n in cfg.element_counts() {
            pts.push((d, n));
        }
    }
    pts
}

fn timed<T>(record: bool, f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    let ms = if record { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    Ok((out, ms))
}

fn run_schemes(cfg: &SweepConfig, d: f64, n: usize, trial: usize) -> Result<Vec<TrialResult>> {
    let (ch, sys) = trial_channels(cfg, d, n, trial)?;
    let snr = |power: f64| to_db(power / sys.sigma2);
    let row = |scheme, snr_db, iterations, runtime_ms| TrialResult {
        scheme,
        d_m: d,
        n,
        trial,
        snr_db,
        iterations,
        runtime_ms,
    };
    let wants = |s: Scheme| cfg.schemes.contains(&s);
    let mut rows = Vec::with_capacity(cfg.schemes.len());

    if wants(Scheme::UpperBound) || wants(Scheme::Centralized) {
        let (res, ms) = timed(cfg.record_timing, || {
            centralized_optimize(&ch, &sys, &cfg.sdr, trial_seed(cfg, trial))
        })?;
        if wants(Scheme::UpperBound) {
            rows.push(row(Scheme::UpperBound, snr(res.upper_bound_power), 0, ms));
        }
        if wants(Scheme::Centralized) {
            rows.push(row(Scheme::Centralized, snr(res.achieved_power), 0, ms));
        }
    }
    if wants(Scheme::Distributed) {
        let (trace, ms) = timed(cfg.record_timing, || alternating_optimize(&ch, &sys, &cfg.alt))?;
        rows.push(row(Scheme::Distributed, snr(trace.final_power()), trace.iterations, ms));
    }
    if wants(Scheme::ApUserMrt) {
        let ((w, th), ms) = timed(cfg.record_timing, || ap_user_mrt(&ch, &sys))?;
        rows.push(row(Scheme::ApUserMrt, snr(received_power(&ch, &th, &w)?), 0, ms));
    }
    if wants(Scheme::ApIrsMrt) {
        let ((w, th), ms) = timed(cfg.record_timing, || ap_irs_mrt(&ch, &sys))?;
        rows.push(row(Scheme::ApIrsMrt, snr(received_power(&ch, &th, &w)?), 0, ms));
    }
    if wants(Scheme::NoIrs) {
        let ((_, power), ms) = timed(cfg.record_timing, || no_irs(&ch, &sys))?;
        rows.push(row(Scheme::NoIrs, snr(power), 0, ms));
    }
    Ok(rows)
}

fn run_grid(cfg: &SweepConfig, expected: Experiment) -> Result<Vec<TrialResult>> {
    check_experiment(cfg, expected)?;
    cfg.validate()?;
    let work: Vec<(f64, usize, usize)> = points(cfg)
        .into_iter()
        .flat_map(|(d, n)| (0..cfg.trials).map(move |t| (d, n, t)))
        .collect();
    let nested: Vec<Vec<TrialResult>> = work
        .par_iter()
        .map(|&(d, n, t)| run_schemes(cfg, d, n, t))
        .collect::<Result<_>>()?;
    let mut rows: Vec<TrialResult> = nested.into_iter().flatten().collect();
    sort_rows(&mut rows);
    Ok(rows)
}

fn check_experiment(cfg: &SweepConfig, expected: Experiment) -> Result<()> {
    if cfg.experiment != expected {
        return Err(Error::config(
            "experiment",
            format!("expected `{}`, got `{}`", expected.as_str(), cfg.experiment.as_str()),
        ));
    }
    Ok(())
}

/// Orders rows by `(scheme, d, N, trial, iterations)`, scheme in
/// declaration order.
pub fn sort_rows(rows: &mut [TrialResult]) {
    rows.sort_by(|a, b| {
        a.scheme
            .cmp(&b.scheme)
            .then(a.d_m.total_cmp(&b.d_m))
            .then(a.n.cmp(&b.n))
            .then(a.trial.cmp(&b.trial))
            .then(a.iterations.cmp(&b.iterations))
    });
}

pub fn run_distance_sweep(cfg: &SweepConfig) -> Result<Vec<TrialResult>> {
    run_grid(cfg, Experiment::DistanceSweep)
}

pub fn run_elements_sweep(cfg: &SweepConfig) -> Result<Vec<TrialResult>> {
    run_grid(cfg, Experiment::ElementsSweep)
}

/// One `distributed` row per recorded objective: iteration 0 is the
/// initialization, iteration `k` the power after the `k`-th full update.
pub fn run_convergence_trace(cfg: &SweepConfig) -> Result<Vec<TrialResult>> {
    check_experiment(cfg, Experiment::ConvergenceTrace)?;
    cfg.validate()?;
    let work: Vec<(f64, usize, usize)> = points(cfg)
        .into_iter()
        .flat_map(|(d, n)| (0..cfg.trials).map(move |t| (d, n, t)))
        .collect();
    let nested: Vec<Vec<TrialResult>> = work
        .par_iter()
        .map(|&(d, n, trial)| {
            let (ch, sys) = trial_channels(cfg, d, n, trial)?;
            let (trace, ms) = timed(cfg.record_timing, || alternating_optimize(&ch, &sys, &cfg.alt))?;
            Ok(trace
                .objectives
                .iter()
                .enumerate()
                .map(|(k, &p)| TrialResult {
                    scheme: Scheme::Distributed,
                    d_m: d,
                    n,
                    trial,
                    snr_db: to_db(p / sys.sigma2),
                    iterations: k,
                    runtime_ms: ms,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<TrialResult> = nested.into_iter().flatten().collect();
    sort_rows(&mut rows);
    Ok(rows)
}

/// Grid search against both optimizers on unit-variance Rayleigh instances.
/// Instance `i` uses the `(M, N)` pair `i mod (|M| |N|)`.
pub fn oracle_check(cfg: &SweepConfig) -> Result<Vec<OracleRow>> {
    check_experiment(cfg, Experiment::OracleCheck)?;
    cfg.validate()?;
    let shapes: Vec<(usize, usize)> = cfg
        .m_values
        .iter()
        .flat_map(|&m| cfg.n_values.iter().map(move |&n| (m, n)))
        .collect();
    (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let (m, n) = shapes[i % shapes.len()];
            let seed = trial_seed(cfg, i);
            let ch = iid_rayleigh_instance(m, n, seed)?;
            let sys = SystemParams::new(m, n, 1.0, 1.0)?;
            let (_, grid_power) = brute_force_oracle(&ch, &sys, cfg.grid_points)?;
            let centralized_power = centralized_optimize(&ch, &sys, &cfg.sdr, seed)?.achieved_power;
            let distributed_power = alternating_optimize(&ch, &sys, &cfg.alt)?.final_power();
            Ok(OracleRow {
                instance: i,
                antennas: m,
                elements: n,
                grid_power,
                centralized_power,
                distributed_power,
                sigma2: sys.sigma2,
            })
        })
        .collect()
}

/// Mean and standard error of `snr_db` per `(scheme, d, N)`. For a
/// convergence trace only each trial's final row counts.
pub fn summarize(rows: &[TrialResult]) -> Vec<SummaryRow> {
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);
    let mut finals: Vec<&TrialResult> = Vec::with_capacity(sorted.len());
    for r in &sorted {
        match finals.last_mut() {
            Some(last) if same_trial(last, r) => *last = r,
            _ => finals.push(r),
        }
    }

    let mut out = Vec::new();
    let mut start = 0;
    while start < finals.len() {
        let key = finals[start];
        let end = start
            + finals[start..]
                .iter()
                .take_while(|r| r.scheme == key.scheme && r.d_m == key.d_m && r.n == key.n)
                .count();
        let group = &finals[start..end];
        let snrs: Vec<f64> = group.iter().map(|r| r.snr_db).collect();
        let (mean, stderr) = mean_stderr(&snrs);
        out.push(SummaryRow {
            scheme: key.scheme,
            d_m: key.d_m,
            n: key.n,
            trials: group.len(),
            mean_snr_db: mean,
            stderr_db: stderr,
            mean_iterations: group.iter().map(|r| r.iterations as f64).sum::<f64>() / group.len() as f64,
        });
        start = end;
    }
    out
}

fn same_trial(a: &TrialResult, b: &TrialResult) -> bool {
    a.scheme == b.scheme && a.d_m == b.d_m && a.n == b.n && a.trial == b.trial
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 || !mean.is_finite() {
        return (mean, if mean.is_finite() { 0.0 } else { f64::NAN });
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Distance at which `scheme`'s mean SNR first falls below `target_db`,
/// linearly interpolated between sweep points. `None` if it never does.
pub fn crossing_distance(summary: &[SummaryRow], scheme: Scheme, n: usize, target_db: f64) -> Option<f64> {
    let mut curve: Vec<(f64, f64)> = summary
        .iter()
        .filter(|r| r.scheme == scheme && r.n == n)
        .map(|r| (r.d_m, r.mean_snr_db))
        .collect();
    curve.sort_by(|a, b| a.0.total_cmp(&b.0));
    curve.windows(2).find_map(|w| {
        let ((d0, s0), (d1, s1)) = (w[0], w[1]);
        (s0 >= target_db && s1 < target_db).then(|| d0 + (s0 - target_db) / (s0 - s1) * (d1 - d0))
    })
}

/// Farthest distance up to which `scheme`'s mean SNR stays at or above
/// `target_db`: the first downward crossing if there is one, else the
/// largest swept distance. `None` if the nearest point already misses.
pub fn coverage_distance(summary: &[SummaryRow], scheme: Scheme, n: usize, target_db: f64) -> Option<f64> {
    let mut curve: Vec<(f64, f64)> = summary
        .iter()
        .filter(|r| r.scheme == scheme && r.n == n)
        .map(|r| (r.d_m, r.mean_snr_db))
        .collect();
    curve.sort_by(|a, b| a.0.total_cmp(&b.0));
    let &(_, first) = curve.first()?;
    if first < target_db {
        return None;
    }
    crossing_distance(summary, scheme, n, target_db).or_else(|| curve.last().map(|p| p.0))
}

/// Shortest round-trip decimal; infinities as `inf`/`-inf`, NaN as `nan`.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:?}")
    }
}

pub fn write_trials_csv<W: Write>(mut out: W, rows: &[TrialResult]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.scheme,
            format_f64(r.d_m),
            r.n,
            r.trial,
            format_f64(r.snr_db),
            r.iterations,
            format_f64(r.runtime_ms)
        )?;
    }
    out.flush()
}

pub fn write_summary_csv<W: Write>(mut out: W, rows: &[SummaryRow]) -> std::io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.scheme,
            format_f64(r.d_m),
            r.n,
            r.trials,
            format_f64(r.mean_snr_db),
            format_f64(r.stderr_db),
            format_f64(r.mean_iterations)
        )?;
    }
    out.flush()
}

pub fn write_oracle_csv<W: Write>(mut out: W, rows: &[OracleRow]) -> std::io::Result<()> {
    writeln!(out, "{ORACLE_HEADER}")?;
    for r in rows {
        let db = |p: f64| format_f64(to_db(p / r.sigma2));
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.instance,
            r.antennas,
            r.elements,
            db(r.grid_power),
            db(r.centralized_power),
            db(r.distributed_power),
            format_f64(r.centralized_ratio()),
            format_f64(r.distributed_ratio())
        )?;
    }
    out.flush()
}

pub fn trials_csv_string(rows: &[TrialResult]) -> String {
    let mut buf = Vec::new();
    write_trials_csv(&mut buf, rows).expect("writing to memory");
    String::from_utf8(buf).expect("ASCII output")
}
