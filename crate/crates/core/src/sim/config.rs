//! Sweep configuration: flat `key = value` text, one key per line, `#`
//! starts a comment. Lists are comma separated. Every key can also be set
//! through [`SweepConfig::apply`], which is how command-line flags override
//! file values.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::alternating::AltOptConfig;
use crate::channel::{Geometry, PathLossParams};
use crate::error::{Error, Result};
use crate::model::{dbm_to_watts, SystemParams};
use crate::sdr::{SdpOptions, SdrOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    UpperBound,
    Centralized,
    Distributed,
    ApUserMrt,
    ApIrsMrt,
    NoIrs,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::UpperBound,
        Scheme::Centralized,
        Scheme::Distributed,
        Scheme::ApUserMrt,
        Scheme::ApIrsMrt,
        Scheme::NoIrs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::UpperBound => "upper_bound",
            Scheme::Centralized => "centralized",
            Scheme::Distributed => "distributed",
            Scheme::ApUserMrt => "ap_user_mrt",
            Scheme::ApIrsMrt => "ap_irs_mrt",
            Scheme::NoIrs => "no_irs",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown scheme `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    DistanceSweep,
    ElementsSweep,
    ConvergenceTrace,
    OracleCheck,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::DistanceSweep => "distance_sweep",
            Experiment::ElementsSweep => "elements_sweep",
            Experiment::ConvergenceTrace => "convergence_trace",
            Experiment::OracleCheck => "oracle_check",
        }
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        [
            Experiment::DistanceSweep,
            Experiment::ElementsSweep,
            Experiment::ConvergenceTrace,
            Experiment::OracleCheck,
        ]
        .into_iter()
        .find(|x| x.as_str() == s)
        .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

/// Every recognized configuration key, in documentation order.
pub const KEYS: &[&str] = &[
    "experiment",
    "antennas",
    "nx",
    "ny",
    "p_bar_dbm",
    "sigma2_dbm",
    "d0",
    "dv",
    "spacing",
    "ref_loss_db",
    "alpha_direct",
    "alpha_los",
    "penetration_db",
    "gain_ap_dbi",
    "gain_user_dbi",
    "gain_irs_element_dbi",
    "d_values",
    "n_values",
    "m_values",
    "trials",
    "schemes",
    "seed",
    "out",
    "epsilon",
    "max_iter",
    "randomizations",
    "sdp_tol",
    "sdp_obj_tol",
    "sdp_restarts",
    "sdp_max_sweeps",
    "grid_points",
    "record_timing",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub experiment: Experiment,
    /// AP antennas `M`.
    pub antennas: usize,
    pub nx: usize,
    /// Fixed vertical URA size; element counts must be multiples of it.
    pub ny: usize,
    pub p_bar_dbm: f64,
    pub sigma2_dbm: f64,
    pub d0: f64,
    pub dv: f64,
    pub spacing: f64,
    pub path: PathLossParams,
    pub d_values: Vec<f64>,
    /// IRS sizes for the elements sweep, or the small sizes of the oracle check.
    pub n_values: Vec<usize>,
    /// Antenna counts of the oracle check.
    pub m_values: Vec<usize>,
    pub trials: usize,
    pub schemes: Vec<Scheme>,
    pub seed: u64,
    pub out: PathBuf,
    pub alt: AltOptConfig,
    pub sdr: SdrOptions,
    pub grid_points: usize,
    /// Fill `runtime_ms` with wall-clock time. Off by default because
    /// timings make the CSV non-reproducible.
    pub record_timing: bool,
}

impl SweepConfig {
    pub fn new(experiment: Experiment) -> Self {
        let (d_values, n_values, trials) = match experiment {
            Experiment::DistanceSweep => (
                vec![15.0, 17.0, 20.0, 25.0, 30.0, 33.0, 35.0, 40.0, 43.0, 45.0, 47.0, 50.0],
                vec![50],
                500,
            ),
            Experiment::ElementsSweep => (
                vec![15.0, 43.0, 50.0],
                vec![10, 20, 30, 40, 50, 60],
                500,
            ),
            Experiment::ConvergenceTrace => (vec![15.0, 43.0, 50.0], vec![50], 200),
            Experiment::OracleCheck => (vec![], vec![1, 2, 3], 100),
        };
        Self {
            experiment,
            antennas: 8,
            nx: 5,
            ny: 10,
            p_bar_dbm: 5.0,
            sigma2_dbm: -80.0,
            d0: 51.0,
            dv: 2.0,
            spacing: 0.5,
            path: PathLossParams::default(),
            d_values,
            n_values,
            m_values: vec![1, 2],
            trials,
            schemes: Scheme::ALL.to_vec(),
            seed: 1,
            out: PathBuf::from(format!("{}.csv", experiment.as_str())),
            alt: AltOptConfig::default(),
            sdr: SdrOptions::default(),
            grid_points: 64,
            record_timing: false,
        }
    }

    /// Parses `key = value` lines on top of the defaults for the experiment
    /// named by the `experiment` key (or `default`).
    pub fn from_kv_text(text: &str, default: Experiment) -> Result<Self> {
        let pairs = parse_kv_text(text)?;
        let experiment = match pairs.iter().rev().find(|(k, _)| k == "experiment") {
            Some((_, v)) => v.parse().map_err(|e: String| Error::config("experiment", e))?,
            None => default,
        };
        let mut cfg = Self::new(experiment);
        for (k, v) in &pairs {
            cfg.apply(k, v)?;
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let key = canonical_key(key);
        match key {
            "experiment" => {
                let e: Experiment = value.parse().map_err(|e: String| Error::config(key, e))?;
                if e != self.experiment {
                    return Err(Error::config(
                        key,
                        format!("config is for `{}` but `{}` was requested", value, self.experiment.as_str()),
                    ));
                }
            }
            "antennas" => self.antennas = num(key, value)?,
            "nx" => self.nx = num(key, value)?,
            "ny" => self.ny = num(key, value)?,
            "p_bar_dbm" => self.p_bar_dbm = num(key, value)?,
            "sigma2_dbm" => self.sigma2_dbm = num(key, value)?,
            "d0" => self.d0 = num(key, value)?,
            "dv" => self.dv = num(key, value)?,
            "spacing" => self.spacing = num(key, value)?,
            "ref_loss_db" => self.path.ref_loss_db = num(key, value)?,
            "alpha_direct" => self.path.alpha_direct = num(key, value)?,
            "alpha_los" => self.path.alpha_los = num(key, value)?,
            "penetration_db" => self.path.penetration_db = num(key, value)?,
            "gain_ap_dbi" => self.path.gain_ap_dbi = num(key, value)?,
            "gain_user_dbi" => self.path.gain_user_dbi = num(key, value)?,
            "gain_irs_element_dbi" => self.path.gain_irs_element_dbi = num(key, value)?,
            "d_values" => self.d_values = list(key, value)?,
            "n_values" => self.n_values = list(key, value)?,
            "m_values" => self.m_values = list(key, value)?,
            "trials" => self.trials = num(key, value)?,
            "schemes" => {
                self.schemes = if value == "all" {
                    Scheme::ALL.to_vec()
                } else {
                    list(key, value)?
                };
            }
            "seed" => self.seed = num(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "epsilon" => self.alt.epsilon = num(key, value)?,
            "max_iter" => self.alt.max_iter = num(key, value)?,
            "randomizations" => self.sdr.randomizations = num(key, value)?,
            "sdp_tol" => self.sdr.sdp.tol_feas = num(key, value)?,
            "sdp_obj_tol" => self.sdr.sdp.tol_obj = num(key, value)?,
            "sdp_restarts" => self.sdr.sdp.restarts = num(key, value)?,
            "sdp_max_sweeps" => self.sdr.sdp.max_sweeps = num(key, value)?,
            "grid_points" => self.grid_points = num(key, value)?,
            "record_timing" => self.record_timing = num(key, value)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::config(key, format!("must be positive, got {x}")))
            }
        };
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.antennas == 0 {
            return Err(Error::config("antennas", "must be at least 1"));
        }
        if self.ny == 0 {
            return Err(Error::config("ny", "must be at least 1"));
        }
        positive("d0", self.d0)?;
        positive("spacing", self.spacing)?;
        if !self.dv.is_finite() {
            return Err(Error::config("dv", "must be finite"));
        }
        for (key, x) in [("p_bar_dbm", self.p_bar_dbm), ("sigma2_dbm", self.sigma2_dbm)] {
            if !x.is_finite() {
                return Err(Error::config(key, "must be finite"));
            }
        }
        self.path
            .validate()
            .map_err(|e| Error::config("path loss", e.to_string()))?;
        if self.alt.epsilon.is_nan() || self.alt.epsilon <= 0.0 {
            return Err(Error::config("epsilon", "must be positive"));
        }
        if self.alt.max_iter == 0 {
            return Err(Error::config("max_iter", "must be at least 1"));
        }
        if self.sdr.randomizations == 0 {
            return Err(Error::config("randomizations", "must be at least 1"));
        }
        if self.sdr.sdp.restarts == 0 {
            return Err(Error::config("sdp_restarts", "must be at least 1"));
        }
        positive("sdp_tol", self.sdr.sdp.tol_feas)?;
        positive("sdp_obj_tol", self.sdr.sdp.tol_obj)?;

        match self.experiment {
            Experiment::OracleCheck => {
                if self.n_values.is_empty() || self.m_values.is_empty() {
                    return Err(Error::config("n_values", "oracle check needs N and M values"));
                }
                if let Some(&n) = self.n_values.iter().find(|&&n| n == 0 || n > 3) {
                    return Err(Error::config(
                        "n_values",
                        format!(
                            "grid search costs grid_points^N evaluations; N = {n} is outside 1..=3"
                        ),
                    ));
                }
                if self.m_values.contains(&0) {
                    return Err(Error::config("m_values", "antenna counts must be at least 1"));
                }
                if self.grid_points < 16 {
                    return Err(Error::config("grid_points", "must be at least 16"));
                }
            }
            _ => {
                if self.d_values.is_empty() {
                    return Err(Error::config("d_values", "must not be empty"));
                }
                if let Some(d) = self.d_values.iter().find(|&&d| !(0.0..=self.d0).contains(&d)) {
                    return Err(Error::config(
                        "d_values",
                        format!("{d} lies outside [0, d0 = {}]", self.d0),
                    ));
                }
                if self.experiment == Experiment::ElementsSweep {
                    if self.n_values.is_empty() {
                        return Err(Error::config("n_values", "must not be empty"));
                    }
                    if let Some(n) = self.n_values.iter().find(|&&n| n == 0 || n % self.ny != 0) {
                        return Err(Error::config(
                            "n_values",
                            format!("{n} is not a positive multiple of ny = {}", self.ny),
                        ));
                    }
                } else if self.nx == 0 {
                    return Err(Error::config("nx", "must be at least 1"));
                }
                if self.schemes.is_empty() {
                    return Err(Error::config("schemes", "must not be empty"));
                }
            }
        }
        Ok(())
    }

    /// Element counts swept by this experiment.
    pub fn element_counts(&self) -> Vec<usize> {
        match self.experiment {
            Experiment::ElementsSweep | Experiment::OracleCheck => self.n_values.clone(),
            _ => vec![self.nx * self.ny],
        }
    }

    pub fn geometry(&self, d: f64, elements: usize) -> Geometry {
        Geometry {
            d0: self.d0,
            dv: self.dv,
            d,
            nx: elements / self.ny,
            ny: self.ny,
            spacing: self.spacing,
        }
    }

    pub fn system(&self, elements: usize) -> Result<SystemParams> {
        SystemParams::new(
            self.antennas,
            elements,
            dbm_to_watts(self.p_bar_dbm),
            dbm_to_watts(self.sigma2_dbm),
        )
    }

    pub fn sdp_options(&self) -> SdpOptions {
        self.sdr.sdp
    }
}

/// Maps accepted aliases (`M`, `Nx`, `Ny`, `N_values`, `M_values`,
/// `output_path`) onto their canonical key.
pub fn canonical_key(key: &str) -> &str {
    match key {
        "M" => "antennas",
        "Nx" => "nx",
        "Ny" => "ny",
        "N_values" => "n_values",
        "M_values" => "m_values",
        "output_path" => "out",
        other => other,
    }
}

/// Splits `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_kv_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::config(
                &format!("line {}", lineno + 1),
                format!("expected `key = value`, got `{line}`"),
            ));
        };
        let k = canonical_key(k.trim());
        if !KEYS.contains(&k) {
            return Err(Error::config(k, "unknown key"));
        }
        pairs.push((k.to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| Error::config(key, format!("cannot parse `{value}`: {e}")))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}
