//! Centralized design through semidefinite relaxation.
//!
//! For fixed phases MRT is optimal, so the joint problem reduces to
//! maximizing `‖v^H Φ + h_d^H‖²` over unit-modulus `v`, with
//! `Φ = diag(h_r^H) G` and `v^H = [e^{jθ_1}, …, e^{jθ_N}]`. Dropping the
//! constant `‖h_d‖²` and adjoining a unit-modulus `t` gives the homogeneous
//! form `v̄^H R v̄`, `v̄ = [v; t]`:
//!
//! ```text
//! R = [ Φ Φ^H      Φ h_d ]
//!     [ h_d^H Φ^H  0     ]
//! ```
//!
//! Its rank-relaxed SDP is solved by [`solve_diag_sdp`], rounded by
//! [`gaussian_randomization`] and mapped back to phases by
//! [`recover_phases`].

mod rounding;
mod sdp;

pub use rounding::{gaussian_randomization, project_unit_modulus, quadratic_form};
pub use sdp::{check_hermitian, solve_diag_sdp, trace_product, SdpOptions, SdpSolution};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::{RngDomain, RngSeed};
use crate::error::{Error, Result};
use crate::model::{
    composite_channel, mrt_beamformer, received_power, Beamformer, ChannelSet, PhaseConfig,
    SystemParams,
};

#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizedProblem {
    /// Hermitian `(N+1)×(N+1)` objective matrix.
    pub r: DMatrix<Complex64>,
    pub phi: DMatrix<Complex64>,
    /// `‖h_d‖²`, the constant dropped by homogenization.
    pub h_d_const: f64,
}

/// `Φ = diag(h_r^H) G`: row `n` of `G` scaled by `conj(h_r[n])`.
pub fn build_phi(h_r: &DVector<Complex64>, g: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    if g.nrows() != h_r.len() {
        return Err(Error::invalid(format!(
            "G has {} rows but h_r has {} entries",
            g.nrows(),
            h_r.len()
        )));
    }
    let mut phi = g.clone();
    for (n, h) in h_r.iter().enumerate() {
        let w = h.conj();
        for z in phi.row_mut(n).iter_mut() {
            *z *= w;
        }
    }
    Ok(phi)
}

pub fn build_homogenized(phi: &DMatrix<Complex64>, h_d: &DVector<Complex64>) -> Result<HomogenizedProblem> {
    if phi.ncols() != h_d.len() {
        return Err(Error::invalid(format!(
            "Φ has {} columns but h_d has {} entries",
            phi.ncols(),
            h_d.len()
        )));
    }
    let n = phi.nrows();
    let mut r = DMatrix::zeros(n + 1, n + 1);
    let gram = phi * phi.adjoint();
    r.view_mut((0, 0), (n, n)).copy_from(&gram);
    let cross = phi * h_d;
    r.view_mut((0, n), (n, 1)).copy_from(&cross);
    r.view_mut((n, 0), (1, n)).copy_from(&cross.adjoint());
    // exact Hermitian symmetry of the Gram block
    for i in 0..n {
        r[(i, i)].im = 0.0;
        for j in 0..i {
            r[(i, j)] = r[(j, i)].conj();
        }
    }
    Ok(HomogenizedProblem {
        r,
        phi: phi.clone(),
        h_d_const: h_d.norm_squared(),
    })
}

/// Phases encoded by a homogenized vector `v̄ = [v; t]`.
///
/// The model's `v` satisfies `v^H = [e^{jθ_n}]`, so after normalizing by `t`
/// each phase is `θ_n = arg(v̄_{N+1} / v̄_n)`. Invariant under a common
/// phase of `v̄`.
pub fn recover_phases(v_bar: &DVector<Complex64>) -> Result<PhaseConfig> {
    let Some(&t) = v_bar.as_slice().last() else {
        return Err(Error::DegenerateSolution("empty homogenized vector".into()));
    };
    if t.norm() == 0.0 {
        return Err(Error::DegenerateSolution(
            "homogenizing entry of v̄ is zero".into(),
        ));
    }
    let n = v_bar.len() - 1;
    Ok(PhaseConfig::new(
        v_bar.iter().take(n).map(|&vn| (t * vn.conj()).arg()),
    ))
}

/// The homogenized vector encoding `phases` with `t = 1`.
pub fn homogenized_vector(phases: &PhaseConfig) -> DVector<Complex64> {
    let n = phases.len();
    DVector::from_fn(n + 1, |i, _| {
        if i < n {
            Complex64::from_polar(1.0, -phases.theta()[i])
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdrOptions {
    pub sdp: SdpOptions,
    /// Gaussian randomization candidates.
    pub randomizations: usize,
}

impl Default for SdrOptions {
    fn default() -> Self {
        Self {
            sdp: SdpOptions::default(),
            randomizations: 1000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CentralizedResult {
    pub beamformer: Beamformer,
    pub phases: PhaseConfig,
    /// `p̄ (tr(R V*) + gap + ‖h_d‖²)`, watts; `gap` is the solver's
    /// duality-gap certificate.
    pub upper_bound_power: f64,
    pub achieved_power: f64,
    pub sdp: SdpSolution,
    /// Best `v̄^H R v̄` found by randomization.
    pub rounded_objective: f64,
}

/// Runs the centralized pipeline on one channel realization.
///
/// Randomness (solver starts and rounding draws) comes from `seed` only.
pub fn centralized_optimize(
    ch: &ChannelSet,
    sys: &SystemParams,
    opts: &SdrOptions,
    seed: RngSeed,
) -> Result<CentralizedResult> {
    ch.check_params(sys)?;
    if ch.elements() == 0 {
        return Err(Error::invalid(
            "centralized design needs at least one IRS element",
        ));
    }
    let phi = build_phi(&ch.h_r, &ch.g)?;
    let problem = build_homogenized(&phi, &ch.h_d)?;

    let sdp = solve_diag_sdp(&problem.r, &opts.sdp, &mut seed.rng(RngDomain::SolverInit))?;
    let (v_bar, rounded_objective) = gaussian_randomization(
        &sdp,
        &problem.r,
        opts.randomizations,
        &mut seed.rng(RngDomain::Randomization),
    )?;
    let phases = recover_phases(&v_bar)?;
    let beamformer = mrt_beamformer(&composite_channel(ch, &phases)?, sys.p_bar)?;
    let achieved_power = received_power(ch, &phases, &beamformer)?;
    // the dual certificate makes this a proven bound on the relaxation
    let upper_bound_power = sys.p_bar * (sdp.objective + sdp.gap_certificate + problem.h_d_const);

    Ok(CentralizedResult {
        beamformer,
        phases,
        upper_bound_power,
        achieved_power,
        sdp,
        rounded_objective,
    })
}
