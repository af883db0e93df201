//! Solver for the unit-diagonal SDP
//!
//! ```text
//! max tr(R V)  s.t.  V_nn = 1,  V ⪰ 0
//! ```
//!
//! using a low-rank factorization `V = Y Y^H` with unit-norm rows. Each row
//! is updated in turn to the exact maximizer of the objective with the other
//! rows fixed (`y_i ← g_i / ‖g_i‖`, `g_i = Σ_{j≠i} R_ij y_j`), which is a
//! monotone block ascent on the product of spheres.
//!
//! Optimality is certified through the dual `min Σ λ_i  s.t.  Diag(λ) ⪰ R`.
//! The multipliers `λ_i = Re((R V)_ii)` sum to the primal objective, so
//! `(n · max(0, −λ_min(Diag(λ) − R)))` bounds the duality gap.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

use crate::channel::cscg;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    /// Feasibility tolerance on the unit diagonal and on PSD-ness.
    pub tol_feas: f64,
    /// Relative tolerance on the certified duality gap.
    pub tol_obj: f64,
    /// Independent random starts.
    pub restarts: usize,
    /// Row-sweep cap per start.
    pub max_sweeps: usize,
    /// Factor rank; `None` picks `⌈√(2n)⌉`.
    pub rank: Option<usize>,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            tol_feas: 1e-6,
            tol_obj: 1e-7,
            restarts: 3,
            max_sweeps: 20_000,
            rank: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub v: DMatrix<Complex64>,
    /// `tr(R V)`.
    pub objective: f64,
    /// `max |V_nn − 1|`.
    pub diag_residual: f64,
    /// `max(0, −λ_min(V))`.
    pub psd_residual: f64,
    /// Upper bound on `SDP optimum − objective`.
    pub gap_certificate: f64,
    /// Largest Riemannian gradient row norm at the returned iterate.
    pub stationarity: f64,
    /// Spread of the certified objectives across restarts.
    pub restart_spread: f64,
    pub sweeps: usize,
}

impl SdpSolution {
    pub fn dim(&self) -> usize {
        self.v.nrows()
    }
}

pub fn check_hermitian(r: &DMatrix<Complex64>) -> Result<()> {
    if !r.is_square() {
        return Err(Error::invalid(format!(
            "R must be square, got {}x{}",
            r.nrows(),
            r.ncols()
        )));
    }
    if r.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::invalid("R has non-finite entries"));
    }
    let skew = (r - r.adjoint()).norm();
    if skew > 1e-12 * (1.0 + r.norm()) {
        return Err(Error::invalid(format!(
            "R is not Hermitian (‖R − R^H‖ = {skew:e})"
        )));
    }
    Ok(())
}

/// Solves the unit-diagonal SDP for a Hermitian `R`.
pub fn solve_diag_sdp<G: Rng + ?Sized>(
    r: &DMatrix<Complex64>,
    opts: &SdpOptions,
    rng: &mut G,
) -> Result<SdpSolution> {
    check_hermitian(r)?;
    if opts.restarts == 0 {
        return Err(Error::invalid("at least one SDP start is required"));
    }
    let n = r.nrows();
    let scale = r.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if n == 0 || scale == 0.0 {
        return Ok(identity_solution(n));
    }
    // work on R / max|R_ij| so tolerances are scale-free
    let rs = r.map(|z| z / scale);
    let rank = opts
        .rank
        .unwrap_or_else(|| ((2.0 * n as f64).sqrt().ceil() as usize).max(2))
        .min(n.max(1));

    let mut runs = Vec::with_capacity(opts.restarts);
    for _ in 0..opts.restarts {
        runs.push(ascend(&rs, rank, opts, rng));
    }

    let certified: Vec<&Run> = runs.iter().filter(|run| run.certified).collect();
    let best = runs
        .iter()
        .max_by(|a, b| a.objective.total_cmp(&b.objective))
        .expect("at least one run");
    if certified.is_empty() {
        return Err(Error::ConvergenceFailure {
            iterations: best.sweeps,
            objective: best.objective * scale,
            gap: best.gap * scale,
            diag_residual: 0.0,
        });
    }
    let best = certified
        .iter()
        .max_by(|a, b| a.objective.total_cmp(&b.objective))
        .copied()
        .expect("nonempty");
    let lo = certified.iter().map(|r| r.objective).fold(f64::INFINITY, f64::min);
    let spread = (best.objective - lo) * scale;

    let v = &best.y * best.y.adjoint();
    let diag_residual = (0..n).map(|i| (v[(i, i)].re - 1.0).abs()).fold(0.0, f64::max);
    let psd_residual = (-min_eigenvalue(&v)).max(0.0);
    let objective = trace_product(r, &v);
    Ok(SdpSolution {
        v,
        objective,
        diag_residual,
        psd_residual,
        gap_certificate: best.gap * scale,
        stationarity: best.stationarity * scale,
        restart_spread: spread,
        sweeps: best.sweeps,
    })
}

fn identity_solution(n: usize) -> SdpSolution {
    SdpSolution {
        v: DMatrix::identity(n, n),
        objective: 0.0,
        diag_residual: 0.0,
        psd_residual: 0.0,
        gap_certificate: 0.0,
        stationarity: 0.0,
        restart_spread: 0.0,
        sweeps: 0,
    }
}

/// `Re tr(R V)` for Hermitian `R`, `V`.
pub fn trace_product(r: &DMatrix<Complex64>, v: &DMatrix<Complex64>) -> f64 {
    r.iter()
        .zip(v.transpose().iter())
        .map(|(a, b)| (a * b).re)
        .sum()
}

pub(crate) fn min_eigenvalue(h: &DMatrix<Complex64>) -> f64 {
    SymmetricEigen::new(h.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

struct Run {
    y: DMatrix<Complex64>,
    objective: f64,
    gap: f64,
    stationarity: f64,
    sweeps: usize,
    certified: bool,
}

/// Row-major `n×k` factor with `R Y` kept alongside.
struct Factor {
    n: usize,
    k: usize,
    y: Vec<Complex64>,
    ry: Vec<Complex64>,
}

impl Factor {
    fn row(&self, i: usize) -> &[Complex64] {
        &self.y[i * self.k..(i + 1) * self.k]
    }

    fn refresh(&mut self, r: &[Complex64]) {
        let (n, k) = (self.n, self.k);
        for a in 0..n {
            for l in 0..k {
                let mut acc = Complex64::new(0.0, 0.0);
                for b in 0..n {
                    acc += r[a * n + b] * self.y[b * k + l];
                }
                self.ry[a * k + l] = acc;
            }
        }
    }

    /// `tr(R Y Y^H) = Re Σ_i (R Y)_i · conj(y_i)`.
    fn objective(&self) -> f64 {
        self.y.iter().zip(&self.ry).map(|(a, b)| (b * a.conj()).re).sum()
    }

    fn to_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.n, self.k, &self.y)
    }
}

fn ascend<G: Rng + ?Sized>(r: &DMatrix<Complex64>, rank: usize, opts: &SdpOptions, rng: &mut G) -> Run {
    let n = r.nrows();
    let k = rank;
    // row-major copy of R
    let rm: Vec<Complex64> = (0..n * n).map(|idx| r[(idx / n, idx % n)]).collect();
    let mut f = Factor {
        n,
        k,
        y: (0..n * k).map(|_| cscg(rng, 1.0)).collect(),
        ry: vec![Complex64::new(0.0, 0.0); n * k],
    };
    for i in 0..n {
        let row = &mut f.y[i * k..(i + 1) * k];
        let norm = row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        row.iter_mut().for_each(|z| *z /= norm);
    }
    f.refresh(&rm);
    let mut objective = f.objective();
    let mut sweeps = 0;
    let mut since_check = 0;
    let mut g = vec![Complex64::new(0.0, 0.0); k];
    let mut delta = vec![Complex64::new(0.0, 0.0); k];

    loop {
        let before = objective;
        for i in 0..n {
            let rii = rm[i * n + i];
            let row = i * k..(i + 1) * k;
            for ((gl, ry), y) in g.iter_mut().zip(&f.ry[row.clone()]).zip(&f.y[row]) {
                *gl = ry - rii * y;
            }
            let norm = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            for l in 0..k {
                let new = g[l] / norm;
                delta[l] = new - f.y[i * k + l];
                f.y[i * k + l] = new;
            }
            // R Y changes by R[:, i] δ
            for a in 0..n {
                let ra = rm[a * n + i];
                if ra.re == 0.0 && ra.im == 0.0 {
                    continue;
                }
                let out = &mut f.ry[a * k..(a + 1) * k];
                for (o, d) in out.iter_mut().zip(&delta) {
                    *o += ra * d;
                }
            }
        }
        sweeps += 1;
        since_check += 1;
        if sweeps % 50 == 0 {
            // drift control for the incremental product
            f.refresh(&rm);
        }
        objective = f.objective();

        let stalled = (objective - before).abs() <= 1e-15 * (1.0 + objective.abs());
        if stalled || since_check >= 25 || sweeps >= opts.max_sweeps {
            since_check = 0;
            f.refresh(&rm);
            objective = f.objective();
            let (gap, stationarity) = certificate(r, &f);
            let certified = gap <= opts.tol_obj * (1.0 + objective.abs());
            if certified || stalled || sweeps >= opts.max_sweeps {
                return Run {
                    y: f.to_matrix(),
                    objective,
                    gap,
                    stationarity,
                    sweeps,
                    certified,
                };
            }
        }
    }
}

/// Duality-gap bound and Riemannian gradient norm at `Y`.
fn certificate(r: &DMatrix<Complex64>, f: &Factor) -> (f64, f64) {
    let (n, k) = (f.n, f.k);
    let mut slack = -r.clone();
    let mut stationarity: f64 = 0.0;
    for i in 0..n {
        let y = f.row(i);
        let ry = &f.ry[i * k..(i + 1) * k];
        let lambda: f64 = ry.iter().zip(y).map(|(a, b)| (a * b.conj()).re).sum();
        slack[(i, i)] += Complex64::new(lambda, 0.0);
        let resid = ry
            .iter()
            .zip(y)
            .map(|(a, b)| (a - b * lambda).norm_sqr())
            .sum::<f64>()
            .sqrt();
        stationarity = stationarity.max(resid);
    }
    // symmetrize away rounding so the eigensolver sees an exactly Hermitian input
    let slack = (&slack + slack.adjoint()).map(|z| z * 0.5);
    let mu = (-min_eigenvalue(&slack)).max(0.0);
    (n as f64 * mu, stationarity)
}
