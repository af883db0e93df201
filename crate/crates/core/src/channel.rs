//! Channel realizations for the simulation geometry.
//!
//! The AP sits at the origin and the IRS at `(d0, 0, 0)`, both at the same
//! altitude. The user moves along a line parallel to the AP-IRS line, offset
//! by `dv`. The AP-IRS link is a deterministic rank-one line-of-sight
//! channel; the AP-user and IRS-user links are i.i.d. Rayleigh.
//!
//! Both arrays have their horizontal axis along the AP-IRS line. The IRS
//! is a URA whose second axis is vertical.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{from_db, ChannelSet, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    /// AP-IRS separation, meters.
    pub d0: f64,
    /// Offset between the user line and the AP-IRS line, meters.
    pub dv: f64,
    /// Horizontal AP-user distance, meters.
    pub d: f64,
    /// IRS elements along the horizontal axis.
    pub nx: usize,
    /// IRS elements along the vertical axis.
    pub ny: usize,
    /// Element spacing of both arrays, in wavelengths.
    pub spacing: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            d0: 51.0,
            dv: 2.0,
            d: 0.0,
            nx: 5,
            ny: 10,
            spacing: 0.5,
        }
    }
}

impl Geometry {
    pub fn elements(&self) -> usize {
        self.nx * self.ny
    }

    /// `(d1, d2)`: AP-user and IRS-user link lengths.
    pub fn link_distances(&self) -> (f64, f64) {
        let d1 = (self.d * self.d + self.dv * self.dv).sqrt();
        let dx = self.d0 - self.d;
        let d2 = (dx * dx + self.dv * self.dv).sqrt();
        (d1, d2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d0.is_finite() && self.d0 > 0.0) {
            return Err(Error::invalid(format!("d0 must be positive, got {}", self.d0)));
        }
        if !(self.dv.is_finite() && self.d.is_finite()) {
            return Err(Error::invalid("geometry distances must be finite"));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::invalid("element spacing must be positive"));
        }
        Ok(())
    }

    /// Departure angle at the AP towards the IRS and arrival azimuth at the
    /// IRS from the AP, both measured from array broadside.
    pub fn ap_irs_angles(&self) -> (f64, f64) {
        let axis = [1.0, 0.0, 0.0];
        let ap = [0.0, 0.0, 0.0];
        let irs = [self.d0, 0.0, 0.0];
        (broadside_angle(ap, irs, axis), broadside_angle(irs, ap, axis))
    }
}

fn broadside_angle(from: [f64; 3], to: [f64; 3], axis: [f64; 3]) -> f64 {
    let dir: Vec<f64> = to.iter().zip(&from).map(|(a, b)| a - b).collect();
    let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    let cos_axis = dir.iter().zip(&axis).map(|(a, b)| a * b).sum::<f64>() / len;
    cos_axis.clamp(-1.0, 1.0).asin()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossParams {
    /// Attenuation at the 1 m reference distance, dB.
    pub ref_loss_db: f64,
    /// Exponent of the AP-user and IRS-user links.
    pub alpha_direct: f64,
    /// Exponent of the line-of-sight AP-IRS link.
    pub alpha_los: f64,
    /// Extra loss on the AP-user and IRS-user links, dB.
    pub penetration_db: f64,
    pub gain_ap_dbi: f64,
    pub gain_user_dbi: f64,
    /// Per-element IRS gain, applied on both hops through the IRS.
    pub gain_irs_element_dbi: f64,
}

impl Default for PathLossParams {
    fn default() -> Self {
        Self {
            ref_loss_db: 30.0,
            alpha_direct: 3.0,
            alpha_los: 2.0,
            penetration_db: 10.0,
            gain_ap_dbi: 0.0,
            gain_user_dbi: 0.0,
            gain_irs_element_dbi: 5.0,
        }
    }
}

impl PathLossParams {
    pub fn validate(&self) -> Result<()> {
        let db = [
            self.ref_loss_db,
            self.penetration_db,
            self.gain_ap_dbi,
            self.gain_user_dbi,
            self.gain_irs_element_dbi,
        ];
        if db.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("path-loss dB quantities must be finite"));
        }
        if !(self.alpha_direct >= 1.0 && self.alpha_los >= 1.0) {
            return Err(Error::invalid("path-loss exponents must be at least 1"));
        }
        Ok(())
    }
}

/// Linear power gain of a link of length `distance` under the
/// reference-distance model.
pub fn path_gain_linear(
    distance: f64,
    exponent: f64,
    params: &PathLossParams,
    include_penetration: bool,
    gains_db: f64,
) -> Result<f64> {
    if distance.is_nan() || distance < 1.0 {
        return Err(Error::OutOfModel { distance });
    }
    let penetration = if include_penetration {
        params.penetration_db
    } else {
        0.0
    };
    let db = -params.ref_loss_db - 10.0 * exponent * distance.log10() - penetration + gains_db;
    Ok(from_db(db))
}

/// ULA response, entry `m` is `e^{j 2π spacing m sin(angle)}`.
pub fn ula_steering(m: usize, angle: f64, spacing: f64) -> DVector<Complex64> {
    let step = TAU * spacing * angle.sin();
    DVector::from_fn(m, |i, _| Complex64::from_polar(1.0, step * i as f64))
}

/// URA response `ula(ny, elevation) ⊗ ula(nx, azimuth)`.
///
/// Element `(ix, iy)` lives at index `iy * nx + ix`, i.e. rows of `nx`
/// horizontal elements stacked vertically.
pub fn ura_steering(
    nx: usize,
    ny: usize,
    azimuth: f64,
    elevation: f64,
    spacing: f64,
) -> DVector<Complex64> {
    let horizontal = ula_steering(nx, azimuth, spacing);
    let vertical = ula_steering(ny, elevation, spacing);
    vertical.kronecker(&horizontal)
}

/// Identifies one independent random stream: `seed` is the experiment seed
/// and `stream_id` the work item (trial) within it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSeed {
    pub seed: u64,
    pub stream_id: u64,
}

/// Purposes that draw from separate streams of the same [`RngSeed`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum RngDomain {
    Channels = 1,
    Randomization = 2,
    SolverInit = 3,
}

impl RngSeed {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self, domain: RngDomain) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Circularly-symmetric complex Gaussian sample with variance `var`.
pub fn cscg<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    Complex64::new(s * x, s * y)
}

/// Per-link second moments and LoS gain for a geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub direct_var: f64,
    pub reflect_var: f64,
    pub los_gain: f64,
}

impl LinkBudget {
    pub fn new(geo: &Geometry, params: &PathLossParams) -> Result<Self> {
        let (d1, d2) = geo.link_distances();
        let direct_var = path_gain_linear(
            d1,
            params.alpha_direct,
            params,
            true,
            params.gain_ap_dbi + params.gain_user_dbi,
        )?;
        let reflect_var = path_gain_linear(
            d2,
            params.alpha_direct,
            params,
            true,
            params.gain_irs_element_dbi + params.gain_user_dbi,
        )?;
        let los_gain = path_gain_linear(
            geo.d0,
            params.alpha_los,
            params,
            false,
            params.gain_ap_dbi + params.gain_irs_element_dbi,
        )?;
        Ok(Self {
            direct_var,
            reflect_var,
            los_gain,
        })
    }
}

/// Draws one [`ChannelSet`]. A pure function of its arguments.
pub fn generate_channels(
    geo: &Geometry,
    params: &PathLossParams,
    sys: &SystemParams,
    seed: RngSeed,
) -> Result<ChannelSet> {
    geo.validate()?;
    params.validate()?;
    if geo.elements() != sys.elements {
        return Err(Error::invalid(format!(
            "URA is {}x{} but N = {}",
            geo.nx, geo.ny, sys.elements
        )));
    }
    let budget = LinkBudget::new(geo, params)?;

    let (departure, arrival) = geo.ap_irs_angles();
    let a = ula_steering(sys.antennas, departure, geo.spacing);
    let b = ura_steering(geo.nx, geo.ny, arrival, 0.0, geo.spacing);
    let g = (&b * a.adjoint()).map(|x| x * budget.los_gain.sqrt());

    let mut rng = seed.rng(RngDomain::Channels);
    let h_d = DVector::from_fn(sys.antennas, |_, _| cscg(&mut rng, budget.direct_var));
    let h_r = DVector::from_fn(sys.elements, |_, _| cscg(&mut rng, budget.reflect_var));
    ChannelSet::new(h_d, h_r, g)
}

/// Unit-variance i.i.d. Rayleigh channels with a generic (full-rank) `G`.
pub fn iid_rayleigh_instance(m: usize, n: usize, seed: RngSeed) -> Result<ChannelSet> {
    let mut rng = seed.rng(RngDomain::Channels);
    let h_d = DVector::from_fn(m, |_, _| cscg(&mut rng, 1.0));
    let h_r = DVector::from_fn(n, |_, _| cscg(&mut rng, 1.0));
    let g = DMatrix::from_fn(n, m, |_, _| cscg(&mut rng, 1.0));
    ChannelSet::new(h_d, h_r, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn distances_at_sweep_endpoints() {
        let mut geo = Geometry::default();
        let (d1, d2) = geo.link_distances();
        assert_eq!(d1, 2.0);
        assert!((d2 - (51.0f64 * 51.0 + 4.0).sqrt()).abs() < 1e-12);
        assert!((d2 - 51.039).abs() < 1e-3);

        geo.d = 51.0;
        let (d1, d2) = geo.link_distances();
        assert!((d1 - 51.039).abs() < 1e-3);
        assert_eq!(d2, 2.0);
    }

    #[test]
    fn distances_at_fifteen_meters() {
        let geo = Geometry {
            d: 15.0,
            ..Geometry::default()
        };
        let (d1, d2) = geo.link_distances();
        assert!((d1 - 229f64.sqrt()).abs() < 1e-12);
        assert!((d2 - 1300f64.sqrt()).abs() < 1e-12);
        assert!((d1 - 15.133).abs() < 1e-3 && (d2 - 36.056).abs() < 1e-3);
    }

    #[test]
    fn reference_distance_loss() {
        let p = PathLossParams::default();
        let g = path_gain_linear(1.0, 3.0, &p, false, 0.0).unwrap();
        assert!((g - 1e-3).abs() < 1e-18);
        let g = path_gain_linear(10.0, 3.0, &p, true, 0.0).unwrap();
        assert!((g - 1e-7).abs() < 1e-20);
        assert_eq!(
            path_gain_linear(7.0, 3.0, &p, true, 0.0).unwrap(),
            path_gain_linear(7.0, 3.0, &p, true, 0.0 + 0.0).unwrap()
        );
    }

    #[test]
    fn below_reference_distance_is_out_of_model() {
        let p = PathLossParams::default();
        assert!(matches!(
            path_gain_linear(0.5, 3.0, &p, false, 0.0),
            Err(Error::OutOfModel { .. })
        ));
    }

    #[test]
    fn broadside_steering_is_all_ones() {
        let a = ula_steering(6, 0.0, 0.5);
        assert!(a.iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
        let b = ura_steering(3, 4, 0.0, 0.0, 0.5);
        assert_eq!(b.len(), 12);
        assert!(b.iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
        assert_eq!(ula_steering(1, 1.2, 0.5)[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn ula_entries_follow_formula() {
        let a = ula_steering(4, PI / 6.0, 0.5);
        for m in 0..4 {
            let want = Complex64::from_polar(1.0, PI * 0.5 * m as f64);
            assert!((a[m] - want).norm() < 1e-14);
            assert!((a[m].norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn ura_with_single_row_is_a_ula() {
        let b = ura_steering(5, 1, 0.4, 0.9, 0.5);
        let a = ula_steering(5, 0.4, 0.5);
        assert!((b - a).norm() < 1e-15);
    }

    #[test]
    fn ura_two_by_two_expansion() {
        let (az, el, s) = (0.3, -0.7, 0.5);
        let ph = |k: f64, ang: f64| Complex64::from_polar(1.0, TAU * s * k * f64::sin(ang));
        let want = [
            ph(0.0, az) * ph(0.0, el),
            ph(1.0, az) * ph(0.0, el),
            ph(0.0, az) * ph(1.0, el),
            ph(1.0, az) * ph(1.0, el),
        ];
        let b = ura_steering(2, 2, az, el, s);
        for (got, want) in b.iter().zip(want) {
            assert!((got - want).norm() < 1e-14);
        }
    }

    #[test]
    fn ap_irs_link_is_rank_one() {
        let sys = SystemParams::paper_defaults();
        for d in [0.0, 17.0, 43.0, 51.0] {
            let geo = Geometry {
                d,
                ..Geometry::default()
            };
            let ch = generate_channels(&geo, &PathLossParams::default(), &sys, RngSeed::new(1, 0))
                .unwrap();
            let sv = ch.g.clone().singular_values();
            let mut sv: Vec<f64> = sv.iter().copied().collect();
            sv.sort_by(|a, b| b.total_cmp(a));
            assert!(sv[1] < 1e-10 * sv[0], "d={d}: {sv:?}");
        }
    }

    #[test]
    fn generation_is_deterministic_per_stream() {
        let sys = SystemParams::paper_defaults();
        let geo = Geometry {
            d: 30.0,
            ..Geometry::default()
        };
        let p = PathLossParams::default();
        let a = generate_channels(&geo, &p, &sys, RngSeed::new(9, 3)).unwrap();
        let b = generate_channels(&geo, &p, &sys, RngSeed::new(9, 3)).unwrap();
        let c = generate_channels(&geo, &p, &sys, RngSeed::new(9, 4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.h_d, c.h_d);
    }

    #[test]
    fn fading_second_moments_match_budget() {
        let sys = SystemParams::paper_defaults();
        let geo = Geometry {
            d: 25.0,
            ..Geometry::default()
        };
        let p = PathLossParams::default();
        let budget = LinkBudget::new(&geo, &p).unwrap();
        let trials = 10_000;
        let (mut sd, mut sr) = (0.0, 0.0);
        for t in 0..trials {
            let ch = generate_channels(&geo, &p, &sys, RngSeed::new(5, t)).unwrap();
            sd += ch.h_d.norm_squared() / sys.antennas as f64;
            sr += ch.h_r.norm_squared() / sys.elements as f64;
        }
        let md = sd / trials as f64;
        let mr = sr / trials as f64;
        assert!((md / budget.direct_var - 1.0).abs() < 0.03, "{md} vs {}", budget.direct_var);
        assert!((mr / budget.reflect_var - 1.0).abs() < 0.03, "{mr} vs {}", budget.reflect_var);
    }

    #[test]
    fn los_amplitude_matches_budget() {
        let sys = SystemParams::paper_defaults();
        let geo = Geometry::default();
        let p = PathLossParams::default();
        let ch = generate_channels(&geo, &p, &sys, RngSeed::new(0, 0)).unwrap();
        let budget = LinkBudget::new(&geo, &p).unwrap();
        for z in ch.g.iter() {
            assert!((z.norm_sqr() / budget.los_gain - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_ura_is_rejected() {
        let sys = SystemParams::new(4, 12, 1.0, 1.0).unwrap();
        let geo = Geometry::default();
        assert!(generate_channels(&geo, &PathLossParams::default(), &sys, RngSeed::new(0, 0)).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn distances_satisfy_pythagoras(d in 0.0..51.0f64, dv in 0.1..10.0f64) {
                let geo = Geometry { d, dv, ..Geometry::default() };
                let (d1, d2) = geo.link_distances();
                prop_assert!((d1 * d1 - d * d - dv * dv).abs() < 1e-9);
                prop_assert!((d2 * d2 - (51.0 - d).powi(2) - dv * dv).abs() < 1e-9);
            }

            #[test]
            fn steering_entries_are_unit_modulus(
                nx in 1usize..6, ny in 1usize..6, az in -3.2..3.2f64, el in -1.5..1.5f64
            ) {
                let b = ura_steering(nx, ny, az, el, 0.5);
                prop_assert_eq!(b.len(), nx * ny);
                for z in b.iter() {
                    prop_assert!((z.norm() - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
