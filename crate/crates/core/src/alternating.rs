//! Distributed design by alternating optimization.
//!
//! The IRS and the AP take turns. Given `w`, every element aligns its
//! cascaded path with the direct path:
//!
//! ```text
//! θ_n = φ₀ − arg(h_{r,n}^*) − arg(g_n^H w)
//! ```
//!
//! which makes `|h_r^H Θ G w + h_d^H w| = |h_r^H Θ G w| + |h_d^H w|` whenever
//! `arg(h_d^H w) = φ₀`. Given `θ`, the AP applies MRT on the composite
//! channel, rotated by a common phase so that `h_d^H w` is real and
//! non-negative. With `φ₀ = 0` fixed, neither side needs the other's state.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{
    apply_row, composite_channel, mrt_beamformer, received_power, Beamformer, ChannelSet,
    PhaseConfig, SystemParams,
};

/// Common phase the cascaded and direct paths are aligned to.
pub const PHI0: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltOptConfig {
    /// Stop once the fractional objective increase falls below this.
    pub epsilon: f64,
    pub max_iter: usize,
}

impl Default for AltOptConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            max_iter: 30,
        }
    }
}

impl AltOptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::invalid("epsilon must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PhaseUpdate {
    pub phases: PhaseConfig,
    /// Elements whose `h_{r,n}` or `g_n^H w` vanished; their phase is 0.
    pub degenerate: Vec<usize>,
}

/// Closed-form phases maximizing received power for a fixed `w`, given
/// that `arg(h_d^H w) = phi0`. Independent of the magnitudes of `h_r`.
pub fn optimal_phases_given_w(
    ch: &ChannelSet,
    w: &DVector<Complex64>,
    phi0: f64,
) -> Result<PhaseUpdate> {
    if w.len() != ch.antennas() {
        return Err(Error::invalid(format!(
            "beamformer has {} entries for {} antennas",
            w.len(),
            ch.antennas()
        )));
    }
    if w.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Err(Error::invalid("phase update needs a nonzero beamformer"));
    }
    // g_n^H w, the equivalent channel seen by element n
    let per_element = &ch.g * w;
    let mut degenerate = Vec::new();
    let theta = ch
        .h_r
        .iter()
        .zip(per_element.iter())
        .enumerate()
        .map(|(n, (h, gw))| {
            if *h == Complex64::new(0.0, 0.0) || *gw == Complex64::new(0.0, 0.0) {
                degenerate.push(n);
                0.0
            } else {
                phi0 - h.conj().arg() - gw.arg()
            }
        })
        .collect::<Vec<_>>();
    Ok(PhaseUpdate {
        phases: PhaseConfig::new(theta),
        degenerate,
    })
}

/// MRT on the composite channel times `e^{jα}`, with `α` making
/// `h_d^H w` real and non-negative. Returns `(w, α)`; `α = 0` when
/// `h_d^H w` vanishes.
pub fn rotated_mrt(ch: &ChannelSet, phases: &PhaseConfig, p_bar: f64) -> Result<(Beamformer, f64)> {
    let composite = composite_channel(ch, phases)?;
    let mrt = mrt_beamformer(&composite, p_bar)?;
    let direct = direct_term(ch, mrt.w());
    let alpha = if direct == Complex64::new(0.0, 0.0) {
        0.0
    } else {
        -direct.arg()
    };
    Ok((mrt.rotated(alpha), alpha))
}

/// `h_d^H w`.
pub fn direct_term(ch: &ChannelSet, w: &DVector<Complex64>) -> Complex64 {
    ch.h_d.dotc(w)
}

/// `h_r^H Θ G w`.
pub fn reflected_term(ch: &ChannelSet, phases: &PhaseConfig, w: &DVector<Complex64>) -> Result<Complex64> {
    let composite = composite_channel(ch, phases)?;
    Ok(apply_row(&composite, w) - direct_term(ch, w))
}

/// Relative slack of the triangle inequality
/// `|b + Σ t_n| ≤ |b| + Σ |t_n|` over the per-element reflected terms
/// `t_n = h_r,n^* e^{jθ_n} (G w)_n` and the direct term `b`. Zero iff every
/// nonzero term shares one phase.
pub fn alignment_residual(ch: &ChannelSet, phases: &PhaseConfig, w: &DVector<Complex64>) -> Result<f64> {
    if phases.len() != ch.elements() {
        return Err(Error::invalid(format!(
            "{} phases for {} elements",
            phases.len(),
            ch.elements()
        )));
    }
    let gw = &ch.g * w;
    let mut total = direct_term(ch, w);
    let mut sum = total.norm();
    for ((h, x), e) in ch.h_r.iter().zip(gw.iter()).zip(phases.reflection()) {
        let t = h.conj() * e * x;
        total += t;
        sum += t.norm();
    }
    if sum == 0.0 {
        return Ok(0.0);
    }
    Ok(((sum - total.norm()) / sum).max(0.0))
}

#[derive(Debug, Clone)]
pub struct AltOptTrace {
    /// Received power at initialization and after every full iteration.
    pub objectives: Vec<f64>,
    /// Received power right after each phase update (before the AP moves).
    pub phase_step_objectives: Vec<f64>,
    /// Worst [`alignment_residual`] seen right after a phase update.
    pub max_alignment_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_w: Beamformer,
    pub final_theta: PhaseConfig,
}

impl AltOptTrace {
    pub fn final_power(&self) -> f64 {
        *self.objectives.last().expect("trace always has the initial point")
    }
}

/// Alternates phase updates and rotated MRT, starting from MRT on `h_d`
/// with all phases zero.
pub fn alternating_optimize(ch: &ChannelSet, sys: &SystemParams, cfg: &AltOptConfig) -> Result<AltOptTrace> {
    cfg.validate()?;
    ch.check_params(sys)?;
    if ch.elements() == 0 {
        return Err(Error::invalid("alternating design needs at least one IRS element"));
    }
    let direct = ch.h_d.adjoint();
    let mut w = mrt_beamformer(&direct, sys.p_bar)
        .map_err(|_| Error::DegenerateChannel("AP-user channel h_d is zero".into()))?;
    let mut theta = PhaseConfig::zeros(ch.elements());
    let mut objectives = vec![received_power(ch, &theta, &w)?];
    let mut phase_step_objectives = Vec::new();
    let mut max_alignment_residual: f64 = 0.0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        iterations += 1;
        theta = optimal_phases_given_w(ch, w.w(), PHI0)?.phases;
        phase_step_objectives.push(received_power(ch, &theta, &w)?);
        max_alignment_residual = max_alignment_residual.max(alignment_residual(ch, &theta, w.w())?);

        w = rotated_mrt(ch, &theta, sys.p_bar)?.0;
        let power = received_power(ch, &theta, &w)?;
        let prev = *objectives.last().expect("nonempty");
        objectives.push(power);

        let increase = if prev > 0.0 {
            (power - prev) / prev
        } else if power > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if increase < cfg.epsilon {
            converged = true;
            break;
        }
    }

    Ok(AltOptTrace {
        objectives,
        phase_step_objectives,
        max_alignment_residual,
        iterations,
        converged,
        final_w: w,
        final_theta: theta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{iid_rayleigh_instance, RngSeed};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, TAU};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn instance(m: usize, n: usize, seed: u64) -> (ChannelSet, SystemParams) {
        let ch = iid_rayleigh_instance(m, n, RngSeed::new(seed, 0)).unwrap();
        let sys = SystemParams::new(m, n, 1.0, 1.0).unwrap();
        (ch, sys)
    }

    #[test]
    fn aligned_real_channels_need_no_shift() {
        let ch = ChannelSet::new(
            DVector::from_vec(vec![c(1.0, 0.0), c(2.0, 0.0)]),
            DVector::from_vec(vec![c(0.5, 0.0), c(3.0, 0.0)]),
            DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.2, 0.0), c(0.7, 0.0), c(1.0, 0.0)]),
        )
        .unwrap();
        let w = DVector::from_vec(vec![c(0.6, 0.0), c(0.8, 0.0)]);
        let up = optimal_phases_given_w(&ch, &w, 0.0).unwrap();
        assert!(up.phases.theta().iter().all(|&t| t == 0.0));
        assert!(up.degenerate.is_empty());
    }

    #[test]
    fn single_element_phase_formula() {
        // h_{r}^* has phase π/4, g^H w has phase π/3
        let ch = ChannelSet::new(
            DVector::from_element(1, c(1.0, 0.0)),
            DVector::from_element(1, Complex64::from_polar(2.0, -FRAC_PI_4)),
            DMatrix::from_element(1, 1, Complex64::from_polar(0.5, FRAC_PI_3)),
        )
        .unwrap();
        let w = DVector::from_element(1, c(1.0, 0.0));
        let up = optimal_phases_given_w(&ch, &w, 0.0).unwrap();
        assert!((up.phases.theta()[0] - 17.0 * std::f64::consts::PI / 12.0).abs() < 1e-12);
    }

    #[test]
    fn vanished_element_gets_zero_phase() {
        let (mut ch, _) = instance(2, 3, 1);
        ch.h_r[1] = c(0.0, 0.0);
        let w = DVector::from_element(2, c(0.5, 0.5));
        let up = optimal_phases_given_w(&ch, &w, 0.0).unwrap();
        assert_eq!(up.degenerate, vec![1]);
        assert_eq!(up.phases.theta()[1], 0.0);
    }

    #[test]
    fn phase_update_beats_random_phases() {
        let (ch, _) = instance(2, 2, 42);
        let w0 = ch.h_d.map(|z| z / ch.h_d.norm());
        let bf = Beamformer::new(w0.clone(), 1.0).unwrap();
        let best = received_power(&ch, &optimal_phases_given_w(&ch, &w0, 0.0).unwrap().phases, &bf).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let ph = PhaseConfig::new((0..2).map(|_| rng.random_range(0.0..TAU)));
            assert!(received_power(&ch, &ph, &bf).unwrap() <= best * (1.0 + 1e-12));
        }
    }

    #[test]
    fn alignment_residual_separates_aligned_from_random() {
        let (ch, _) = instance(3, 6, 9);
        let w = ch.h_d.map(|z| z / ch.h_d.norm());
        let aligned = optimal_phases_given_w(&ch, &w, 0.0).unwrap().phases;
        assert!(alignment_residual(&ch, &aligned, &w).unwrap() <= 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let random = PhaseConfig::new((0..6).map(|_| rng.random_range(0.0..TAU)));
        assert!(alignment_residual(&ch, &random, &w).unwrap() > 1e-3);
        assert!(alignment_residual(&ch, &PhaseConfig::zeros(5), &w).is_err());
    }

    #[test]
    fn phase_update_ignores_reflect_amplitudes() {
        let (ch, _) = instance(3, 5, 6);
        let w = DVector::from_element(3, c(0.3, -0.2));
        let a = optimal_phases_given_w(&ch, &w, 0.0).unwrap().phases;
        let mut scaled = ch.clone();
        for (n, h) in scaled.h_r.iter_mut().enumerate() {
            *h *= 0.1 + n as f64;
        }
        let b = optimal_phases_given_w(&scaled, &w, 0.0).unwrap().phases;
        for (x, y) in a.theta().iter().zip(b.theta()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_makes_direct_term_real() {
        let (ch, sys) = instance(4, 3, 42);
        let ph = PhaseConfig::new([1.0, 2.0, 3.0]);
        let (bf, _) = rotated_mrt(&ch, &ph, sys.p_bar).unwrap();
        let s = direct_term(&ch, bf.w());
        assert!(s.arg().abs() < 1e-9);
        assert!(s.re >= 0.0);
        assert!((bf.power() - sys.p_bar).abs() < 1e-12);
        let plain = mrt_beamformer(&composite_channel(&ch, &ph).unwrap(), sys.p_bar).unwrap();
        let p0 = received_power(&ch, &ph, &plain).unwrap();
        let p1 = received_power(&ch, &ph, &bf).unwrap();
        assert!((p0 - p1).abs() <= 1e-12 * p0);
    }

    #[test]
    fn rotation_without_reflect_path_is_trivial() {
        let (mut ch, sys) = instance(3, 2, 3);
        ch.h_r.fill(c(0.0, 0.0));
        let (bf, alpha) = rotated_mrt(&ch, &PhaseConfig::zeros(2), sys.p_bar).unwrap();
        assert!(alpha.abs() < 1e-12);
        let s = direct_term(&ch, bf.w());
        assert!((s - c(ch.h_d.norm(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn dead_reflect_path_converges_in_one_iteration() {
        let (mut ch, sys) = instance(3, 4, 4);
        ch.h_r.fill(c(0.0, 0.0));
        let trace = alternating_optimize(&ch, &sys, &AltOptConfig::default()).unwrap();
        assert_eq!(trace.iterations, 1);
        assert!(trace.converged);
        let want = sys.p_bar * ch.h_d.norm_squared();
        assert!((trace.final_power() - want).abs() < 1e-12 * want);
    }

    #[test]
    fn zero_direct_channel_is_degenerate() {
        let (mut ch, sys) = instance(2, 2, 4);
        ch.h_d.fill(c(0.0, 0.0));
        assert!(matches!(
            alternating_optimize(&ch, &sys, &AltOptConfig::default()),
            Err(Error::DegenerateChannel(_))
        ));
    }

    #[test]
    fn iteration_cap_leaves_unconverged_trace() {
        let (ch, sys) = instance(2, 6, 12);
        let cfg = AltOptConfig {
            epsilon: 1e-300,
            max_iter: 2,
        };
        let trace = alternating_optimize(&ch, &sys, &cfg).unwrap();
        assert_eq!(trace.iterations, 2);
        assert_eq!(trace.objectives.len(), 3);
        assert!(!trace.converged);
    }

    #[test]
    fn near_grid_optimum_for_two_elements() {
        let (ch, sys) = instance(2, 2, 42);
        let trace = alternating_optimize(&ch, &sys, &AltOptConfig::default()).unwrap();
        let k = 64;
        let mut best: f64 = 0.0;
        for a in 0..k {
            for b in 0..k {
                let ph = PhaseConfig::new([TAU * a as f64 / k as f64, TAU * b as f64 / k as f64]);
                best = best.max(sys.p_bar * composite_channel(&ch, &ph).unwrap().norm_squared());
            }
        }
        assert!(trace.final_power() >= 0.98 * best, "{} vs {best}", trace.final_power());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn trace_is_monotone_and_aligned(m in 1usize..5, n in 1usize..8, seed in any::<u64>()) {
                let (ch, sys) = instance(m, n, seed);
                let trace = alternating_optimize(&ch, &sys, &AltOptConfig::default()).unwrap();
                prop_assert_eq!(trace.objectives.len(), trace.iterations + 1);
                for (k, &p) in trace.phase_step_objectives.iter().enumerate() {
                    let before = trace.objectives[k];
                    let after = trace.objectives[k + 1];
                    prop_assert!(p >= before * (1.0 - 1e-12));
                    prop_assert!(after >= p * (1.0 - 1e-12));
                }
                prop_assert!(trace.max_alignment_residual <= 1e-9);
            }
        }
    }
}
