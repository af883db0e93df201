//! Signal model of the IRS-assisted MISO link.
//!
//! The user receives `y = (h_r^H Θ G + h_d^H) w s + z`, where `h_d` is the
//! AP-user channel, `h_r` the IRS-user channel, `G` the AP-IRS channel and
//! `Θ = diag(e^{jθ_1}, …, e^{jθ_N})` the reflection matrix. Only powers are
//! evaluated here; neither the symbol `s` nor the noise `z` is sampled.
//!
//! Powers are linear watts throughout. Conversion to dB/dBm happens only at
//! the I/O boundary (see [`to_db`] and [`dbm_to_watts`]).

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Amplitude reflection coefficient of every IRS element.
pub const BETA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Number of AP antennas `M`.
    pub antennas: usize,
    /// Number of IRS reflecting elements `N`.
    pub elements: usize,
    /// Maximum AP transmit power, watts.
    pub p_bar: f64,
    /// Receiver noise power, watts.
    pub sigma2: f64,
}

impl SystemParams {
    pub fn new(antennas: usize, elements: usize, p_bar: f64, sigma2: f64) -> Result<Self> {
        if antennas == 0 {
            return Err(Error::invalid("antenna count M must be at least 1"));
        }
        if !(p_bar.is_finite() && p_bar > 0.0) {
            return Err(Error::invalid(format!("p_bar must be positive, got {p_bar}")));
        }
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::invalid(format!("sigma2 must be positive, got {sigma2}")));
        }
        Ok(Self {
            antennas,
            elements,
            p_bar,
            sigma2,
        })
    }

    /// The simulation defaults: M = 8, N = 50, p̄ = 5 dBm, σ² = −80 dBm.
    pub fn paper_defaults() -> Self {
        Self {
            antennas: 8,
            elements: 50,
            p_bar: dbm_to_watts(5.0),
            sigma2: dbm_to_watts(-80.0),
        }
    }
}

/// Channels of one fading realization.
///
/// `h_d` and `h_r` are stored as column vectors; the model uses their
/// conjugate transposes `h_d^H` (1×M) and `h_r^H` (1×N). `g` is N×M.
/// `N = 0` (empty `h_r` and `g`) is the no-IRS link.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h_d: DVector<Complex64>,
    pub h_r: DVector<Complex64>,
    pub g: DMatrix<Complex64>,
}

impl ChannelSet {
    pub fn new(
        h_d: DVector<Complex64>,
        h_r: DVector<Complex64>,
        g: DMatrix<Complex64>,
    ) -> Result<Self> {
        if h_d.is_empty() {
            return Err(Error::invalid("h_d must have at least one entry"));
        }
        if g.nrows() != h_r.len() || g.ncols() != h_d.len() {
            return Err(Error::invalid(format!(
                "G is {}x{} but h_r has {} and h_d has {} entries",
                g.nrows(),
                g.ncols(),
                h_r.len(),
                h_d.len()
            )));
        }
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        if !(h_d.iter().all(finite) && h_r.iter().all(finite) && g.iter().all(finite)) {
            return Err(Error::invalid("channel entries must be finite"));
        }
        Ok(Self { h_d, h_r, g })
    }

    pub fn antennas(&self) -> usize {
        self.h_d.len()
    }

    pub fn elements(&self) -> usize {
        self.h_r.len()
    }

    /// Same channels with the IRS removed (`N = 0`).
    pub fn without_irs(&self) -> Self {
        Self {
            h_d: self.h_d.clone(),
            h_r: DVector::zeros(0),
            g: DMatrix::zeros(0, self.antennas()),
        }
    }

    pub fn check_params(&self, sys: &SystemParams) -> Result<()> {
        if self.antennas() != sys.antennas || self.elements() != sys.elements {
            return Err(Error::invalid(format!(
                "channels are for M={}, N={} but system has M={}, N={}",
                self.antennas(),
                self.elements(),
                sys.antennas,
                sys.elements
            )));
        }
        Ok(())
    }
}

/// IRS phase shifts, each wrapped to `[0, 2π)`. The amplitude is [`BETA`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    theta: Vec<f64>,
}

impl PhaseConfig {
    pub fn new(theta: impl IntoIterator<Item = f64>) -> Self {
        Self {
            theta: theta.into_iter().map(wrap_phase).collect(),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self { theta: vec![0.0; n] }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Diagonal of Θ: `β e^{jθ_n}`.
    pub fn reflection(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.theta.iter().map(|&t| Complex64::from_polar(BETA, t))
    }
}

/// Wraps an angle to `[0, 2π)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    w: DVector<Complex64>,
}

impl Beamformer {
    /// Fails if `‖w‖² > p̄` beyond rounding.
    pub fn new(w: DVector<Complex64>, p_bar: f64) -> Result<Self> {
        let power = w.norm_squared();
        if power > p_bar * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "beamformer power {power} exceeds budget {p_bar}"
            )));
        }
        Ok(Self { w })
    }

    pub fn zeros(m: usize) -> Self {
        Self {
            w: DVector::zeros(m),
        }
    }

    pub fn w(&self) -> &DVector<Complex64> {
        &self.w
    }

    pub fn power(&self) -> f64 {
        self.w.norm_squared()
    }

    /// `w e^{jα}`; leaves every received power unchanged.
    pub fn rotated(&self, alpha: f64) -> Self {
        let r = Complex64::from_polar(1.0, alpha);
        Self {
            w: self.w.map(|x| x * r),
        }
    }
}

/// `h_r^H Θ G + h_d^H`, the effective 1×M channel seen by the AP.
pub fn composite_channel(ch: &ChannelSet, phases: &PhaseConfig) -> Result<RowDVector<Complex64>> {
    if phases.len() != ch.elements() {
        return Err(Error::invalid(format!(
            "{} phases for {} IRS elements",
            phases.len(),
            ch.elements()
        )));
    }
    let mut row = ch.h_d.adjoint();
    for (n, refl) in phases.reflection().enumerate() {
        let weight = ch.h_r[n].conj() * refl;
        for (acc, g) in row.iter_mut().zip(ch.g.row(n).iter()) {
            *acc += weight * g;
        }
    }
    Ok(row)
}

/// `|(h_r^H Θ G + h_d^H) w|²` in watts.
pub fn received_power(ch: &ChannelSet, phases: &PhaseConfig, bf: &Beamformer) -> Result<f64> {
    if bf.w.len() != ch.antennas() {
        return Err(Error::invalid(format!(
            "beamformer has {} entries for {} antennas",
            bf.w.len(),
            ch.antennas()
        )));
    }
    let row = composite_channel(ch, phases)?;
    Ok(apply_row(&row, &bf.w).norm_sqr())
}

/// Linear receive SNR, `received_power / σ²`.
pub fn receive_snr(
    ch: &ChannelSet,
    phases: &PhaseConfig,
    bf: &Beamformer,
    sys: &SystemParams,
) -> Result<f64> {
    Ok(received_power(ch, phases, bf)? / sys.sigma2)
}

/// Maximum-ratio transmission on `h_eff`: `√p̄ h_eff^H / ‖h_eff‖`.
pub fn mrt_beamformer(h_eff: &RowDVector<Complex64>, p_bar: f64) -> Result<Beamformer> {
    let norm = h_eff.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateChannel(
            "MRT requested on a zero channel".into(),
        ));
    }
    let scale = p_bar.sqrt() / norm;
    Ok(Beamformer {
        w: h_eff.adjoint().map(|x| x * scale),
    })
}

pub(crate) fn apply_row(row: &RowDVector<Complex64>, w: &DVector<Complex64>) -> Complex64 {
    row.iter().zip(w.iter()).map(|(a, b)| a * b).sum()
}

/// `10 log10(x)`; zero maps to `-inf`.
pub fn to_db(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        10.0 * x.log10()
    }
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    from_db(dbm - 30.0)
}
