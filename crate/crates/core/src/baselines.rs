//! Benchmark schemes: MRT towards the user or towards the IRS (with the
//! phases then aligned in closed form), and the link without any IRS.

use crate::alternating::{optimal_phases_given_w, PHI0};
use crate::error::{Error, Result};
use crate::model::{mrt_beamformer, received_power, Beamformer, ChannelSet, PhaseConfig, SystemParams};

/// `w = √p̄ h_d / ‖h_d‖`, phases aligned to it.
pub fn ap_user_mrt(ch: &ChannelSet, sys: &SystemParams) -> Result<(Beamformer, PhaseConfig)> {
    ch.check_params(sys)?;
    let w = mrt_beamformer(&ch.h_d.adjoint(), sys.p_bar)
        .map_err(|_| Error::DegenerateChannel("AP-user channel h_d is zero".into()))?;
    let phases = aligned_phases(ch, &w)?;
    Ok((w, phases))
}

/// MRT on the first row of `G`, phases aligned to it. For a rank-one `G`
/// every row gives the same received power.
pub fn ap_irs_mrt(ch: &ChannelSet, sys: &SystemParams) -> Result<(Beamformer, PhaseConfig)> {
    ap_irs_mrt_row(ch, sys, 0)
}

pub fn ap_irs_mrt_row(ch: &ChannelSet, sys: &SystemParams, row: usize) -> Result<(Beamformer, PhaseConfig)> {
    ch.check_params(sys)?;
    if row >= ch.elements() {
        return Err(Error::invalid(format!(
            "row {row} requested from a G with {} rows",
            ch.elements()
        )));
    }
    let w = mrt_beamformer(&ch.g.row(row).clone_owned(), sys.p_bar)
        .map_err(|_| Error::DegenerateChannel("AP-IRS channel row is zero".into()))?;
    let phases = aligned_phases(ch, &w)?;
    Ok((w, phases))
}

/// MRT on `h_d` with the reflect path removed. Returns `(w, p̄‖h_d‖²)`.
pub fn no_irs(ch: &ChannelSet, sys: &SystemParams) -> Result<(Beamformer, f64)> {
    ch.check_params(sys)?;
    let w = mrt_beamformer(&ch.h_d.adjoint(), sys.p_bar)
        .map_err(|_| Error::DegenerateChannel("AP-user channel h_d is zero".into()))?;
    let power = received_power(&ch.without_irs(), &PhaseConfig::zeros(0), &w)?;
    Ok((w, power))
}

fn aligned_phases(ch: &ChannelSet, w: &Beamformer) -> Result<PhaseConfig> {
    if ch.elements() == 0 {
        return Ok(PhaseConfig::zeros(0));
    }
    // the phase update assumes arg(h_d^H w) = φ₀; rotate w's reference first
    let direct = ch.h_d.dotc(w.w());
    let alpha = if direct.norm() > 0.0 { PHI0 - direct.arg() } else { 0.0 };
    Ok(optimal_phases_given_w(ch, w.rotated(alpha).w(), PHI0)?.phases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_channels, iid_rayleigh_instance, Geometry, PathLossParams, RngSeed};
    use crate::sdr::{centralized_optimize, SdrOptions};
    use num_complex::Complex64;

    fn instance(m: usize, n: usize, seed: u64) -> (ChannelSet, SystemParams) {
        let ch = iid_rayleigh_instance(m, n, RngSeed::new(seed, 0)).unwrap();
        (ch, SystemParams::new(m, n, 0.7, 1.0).unwrap())
    }

    fn power(ch: &ChannelSet, pair: &(Beamformer, PhaseConfig)) -> f64 {
        received_power(ch, &pair.1, &pair.0).unwrap()
    }

    #[test]
    fn dead_reflect_path_gives_direct_power() {
        let (mut ch, sys) = instance(3, 4, 1);
        ch.h_r.fill(Complex64::new(0.0, 0.0));
        let want = sys.p_bar * ch.h_d.norm_squared();
        assert!((power(&ch, &ap_user_mrt(&ch, &sys).unwrap()) - want).abs() < 1e-12 * want);
    }

    #[test]
    fn no_irs_is_closed_form() {
        for s in 0..10 {
            let (ch, sys) = instance(4, 3, s);
            let (_, p) = no_irs(&ch, &sys).unwrap();
            let want = sys.p_bar * ch.h_d.norm_squared();
            assert!((p - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn zero_channels_are_degenerate() {
        let (mut ch, sys) = instance(2, 2, 3);
        ch.g.fill(Complex64::new(0.0, 0.0));
        assert!(matches!(ap_irs_mrt(&ch, &sys), Err(Error::DegenerateChannel(_))));
        ch.h_d.fill(Complex64::new(0.0, 0.0));
        assert!(matches!(ap_user_mrt(&ch, &sys), Err(Error::DegenerateChannel(_))));
        assert!(matches!(no_irs(&ch, &sys), Err(Error::DegenerateChannel(_))));
    }

    #[test]
    fn ap_irs_mrt_is_row_invariant_for_rank_one_g() {
        let sys = SystemParams::paper_defaults();
        let geo = Geometry {
            d: 40.0,
            ..Geometry::default()
        };
        let ch = generate_channels(&geo, &PathLossParams::default(), &sys, RngSeed::new(3, 3)).unwrap();
        let p0 = power(&ch, &ap_irs_mrt(&ch, &sys).unwrap());
        for row in [1, 17, 49] {
            let p = power(&ch, &ap_irs_mrt_row(&ch, &sys, row).unwrap());
            assert!((p - p0).abs() < 1e-9 * p0, "row {row}: {p} vs {p0}");
        }
    }

    #[test]
    fn joint_design_dominates_baselines() {
        for s in 0..5 {
            let (ch, sys) = instance(2, 2, 42 + s);
            let joint = centralized_optimize(&ch, &sys, &SdrOptions::default(), RngSeed::new(s, 0))
                .unwrap()
                .achieved_power;
            let user = power(&ch, &ap_user_mrt(&ch, &sys).unwrap());
            let irs = power(&ch, &ap_irs_mrt(&ch, &sys).unwrap());
            let (_, bare) = no_irs(&ch, &sys).unwrap();
            assert!(user <= joint * 1.01, "{user} > {joint}");
            assert!(irs <= joint * 1.01, "{irs} > {joint}");
            // same w as the bare link, plus an aligned reflect path
            assert!(bare <= user * (1.0 + 1e-12), "{bare} vs {user}");
            assert!(bare <= joint * (1.0 + 1e-12), "{bare} vs {joint}");
        }
    }
}
