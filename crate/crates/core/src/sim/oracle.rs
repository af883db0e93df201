use std::f64::consts::TAU;

use nalgebra::RowDVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ChannelSet, PhaseConfig, SystemParams};

pub const MAX_ORACLE_ELEMENTS: usize = 3;
pub const MIN_GRID_POINTS: usize = 16;

/// Exhaustive search over `θ_n ∈ {2πk/grid_points}` with MRT at every grid
/// point. Returns the first maximizer and its received power.
pub fn brute_force_oracle(
    ch: &ChannelSet,
    sys: &SystemParams,
    grid_points: usize,
) -> Result<(PhaseConfig, f64)> {
    ch.check_params(sys)?;
    let n = ch.elements();
    if n > MAX_ORACLE_ELEMENTS {
        return Err(Error::invalid(format!(
            "grid search needs grid_points^N = {grid_points}^{n} evaluations; \
             refusing N > {MAX_ORACLE_ELEMENTS}"
        )));
    }
    if grid_points < MIN_GRID_POINTS {
        return Err(Error::invalid(format!(
            "grid_points must be at least {MIN_GRID_POINTS}, got {grid_points}"
        )));
    }

    // row n of Φ scaled by e^{jθ} for every grid angle
    let direct = ch.h_d.adjoint();
    let steps: Vec<Complex64> = (0..grid_points)
        .map(|k| Complex64::from_polar(1.0, TAU * k as f64 / grid_points as f64))
        .collect();
    let rows: Vec<RowDVector<Complex64>> = (0..n)
        .map(|i| ch.g.row(i).map(|x| x * ch.h_r[i].conj()))
        .collect();

    let total = grid_points.pow(n as u32);
    let mut best = (vec![0usize; n], f64::NEG_INFINITY);
    let mut idx = vec![0usize; n];
    for flat in 0..total {
        let mut rem = flat;
        for slot in idx.iter_mut() {
            *slot = rem % grid_points;
            rem /= grid_points;
        }
        let mut c = direct.clone();
        for (row, &k) in rows.iter().zip(&idx) {
            for (acc, &x) in c.iter_mut().zip(row.iter()) {
                *acc += steps[k] * x;
            }
        }
        let power = sys.p_bar * c.norm_squared();
        if power > best.1 {
            best = (idx.clone(), power);
        }
    }
    let theta = best
        .0
        .iter()
        .map(|&k| TAU * k as f64 / grid_points as f64);
    Ok((PhaseConfig::new(theta), best.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{iid_rayleigh_instance, RngSeed};
    use crate::model::{composite_channel, mrt_beamformer, received_power};

    #[test]
    fn single_element_matches_closed_form_within_a_grid_step() {
        let grid = 64;
        for s in 0..20 {
            let ch = iid_rayleigh_instance(2, 1, RngSeed::new(s, 7)).unwrap();
            let sys = SystemParams::new(2, 1, 1.0, 1.0).unwrap();
            let (theta, power) = brute_force_oracle(&ch, &sys, grid).unwrap();
            // |a + e^{jθ} b|² peaks at |a| + |b| with a = h_d^H, b = Φ row
            let a = ch.h_d.adjoint();
            let b = ch.g.row(0).map(|x| x * ch.h_r[0].conj());
            let inner = b.dotc(&a);
            let closed = a.norm_squared() + b.norm_squared() + 2.0 * inner.norm();
            let step_loss = 2.0 * inner.norm() * (1.0 - (TAU / grid as f64 / 2.0).cos());
            assert!(power <= closed * (1.0 + 1e-12));
            assert!(power >= closed - step_loss - 1e-12, "{power} vs {closed}");
            let w = mrt_beamformer(&composite_channel(&ch, &theta).unwrap(), 1.0).unwrap();
            assert!((received_power(&ch, &theta, &w).unwrap() - power).abs() < 1e-12 * power);
        }
    }

    #[test]
    fn dead_reflect_path_gives_direct_power() {
        let mut ch = iid_rayleigh_instance(2, 2, RngSeed::new(1, 0)).unwrap();
        ch.h_r.fill(Complex64::new(0.0, 0.0));
        let sys = SystemParams::new(2, 2, 0.5, 1.0).unwrap();
        let (_, power) = brute_force_oracle(&ch, &sys, 16).unwrap();
        let want = 0.5 * ch.h_d.norm_squared();
        assert!((power - want).abs() < 1e-12 * want);
    }

    #[test]
    fn refuses_large_or_coarse_searches() {
        let ch = iid_rayleigh_instance(1, 4, RngSeed::new(1, 0)).unwrap();
        let sys = SystemParams::new(1, 4, 1.0, 1.0).unwrap();
        assert!(matches!(brute_force_oracle(&ch, &sys, 64), Err(Error::InvalidInput(_))));
        let ch = iid_rayleigh_instance(1, 2, RngSeed::new(1, 0)).unwrap();
        let sys = SystemParams::new(1, 2, 1.0, 1.0).unwrap();
        assert!(brute_force_oracle(&ch, &sys, 8).is_err());
    }
}
