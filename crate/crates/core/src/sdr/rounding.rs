use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

use super::sdp::SdpSolution;
use crate::channel::cscg;
use crate::error::{Error, Result};

/// Eigenvalues of `V` above this negative floor are treated as rounding
/// noise and clamped to zero.
const NEG_EIG_FLOOR: f64 = -1e-9;

/// Gaussian randomization of an SDP solution.
///
/// With `V = U Σ U^H`, each candidate is `U Σ^{1/2} r` for `r ~ CN(0, I)`,
/// projected entrywise onto the unit circle. Returns the first candidate
/// with the largest `v̄^H R v̄` together with that value.
pub fn gaussian_randomization<G: Rng + ?Sized>(
    sol: &SdpSolution,
    r: &DMatrix<Complex64>,
    count: usize,
    rng: &mut G,
) -> Result<(DVector<Complex64>, f64)> {
    if count == 0 {
        return Err(Error::invalid("randomization count must be at least 1"));
    }
    let n = sol.dim();
    if r.nrows() != n || r.ncols() != n {
        return Err(Error::invalid("R and V differ in size"));
    }
    let factor = sqrt_factor(&sol.v)?;

    let mut best: Option<(DVector<Complex64>, f64)> = None;
    let mut draw = DVector::zeros(n);
    for _ in 0..count {
        for z in draw.iter_mut() {
            *z = cscg(rng, 1.0);
        }
        let candidate = project_unit_modulus(&factor * &draw);
        let value = quadratic_form(r, &candidate);
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((candidate, value));
        }
    }
    Ok(best.expect("count >= 1"))
}

/// `U Σ^{1/2}` for Hermitian PSD `V`.
fn sqrt_factor(v: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let eig = SymmetricEigen::new(v.clone());
    let mut u = eig.eigenvectors;
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    // eigensolver noise around zero, relative to the spectrum
    let noise = 1e-12 * top.max(1.0);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < NEG_EIG_FLOOR {
            return Err(Error::invalid(format!(
                "V is not PSD (eigenvalue {lambda:e})"
            )));
        }
        let s = if lambda <= noise { 0.0 } else { lambda.sqrt() };
        u.column_mut(k).scale_mut(s);
    }
    Ok(u)
}

/// `e^{j arg(x_n)}` per entry; zero entries map to 1.
pub fn project_unit_modulus(x: DVector<Complex64>) -> DVector<Complex64> {
    x.map(|z| {
        let m = z.norm();
        if m > 0.0 {
            z / m
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

/// `Re(x^H R x)`.
pub fn quadratic_form(r: &DMatrix<Complex64>, x: &DVector<Complex64>) -> f64 {
    x.dotc(&(r * x)).re
}
