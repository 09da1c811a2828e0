//! Resolvent fixed point on the negative real axis.
//!
//! For a correlation profile and `z < 0`, solves the coupled equations
//!
//! ```text
//! T(z)   = ( (1/K) sum_j R_j R_j^H / (1 + d_j(z)) - z I )^-1
//! d_j(z) = (1/K) tr( R_j R_j^H T(z) )
//! ```
//!
//! by Picard iteration. `m(z) = (1/N) tr T(z)` is the Stieltjes transform of
//! the deterministic spectral approximation, and `d_k(-1/SNR)` is the
//! asymptotic LMMSE SINR of transmitter `k`. The deltas coincide for
//! transmitters sharing a distinct factor matrix, so the solver iterates one
//! delta per distinct matrix.
//!
//! On the negative real axis the assembled matrix is Hermitian positive
//! definite, so each iteration is one Cholesky inversion. The map behaves as
//! a contraction in practice; uniqueness of the solution is a property of
//! the model, but the solver still reports non-convergence instead of
//! assuming it.

use crate::channel::CorrelationProfile;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Relative change of the deltas at which iteration stops.
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction of the previous iterate mixed into the update (0 = plain
    /// Picard). Useful only for profiles where plain iteration oscillates.
    pub damping: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-12,
            max_iter: 10_000,
            damping: 0.0,
        }
    }
}

/// Converged fixed point at one `z`.
#[derive(Clone, Debug)]
pub struct FixedPointSolution {
    z: f64,
    t: CMat,
    deltas: Vec<f64>,
    assignment: Vec<usize>,
    iterations: usize,
    residual: f64,
}

impl FixedPointSolution {
    pub fn z(&self) -> f64 {
        self.z
    }

    /// The matrix `T(z)`, Hermitian positive definite for `z < 0`.
    pub fn t_matrix(&self) -> &CMat {
        &self.t
    }

    /// One delta per distinct factor matrix.
    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    /// Delta of transmitter `k`.
    pub fn delta_for_user(&self, k: usize) -> f64 {
        self.deltas[self.assignment[k]]
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Max relative residual of the defining delta equations at the returned
    /// solution.
    pub fn residual(&self) -> f64 {
        self.residual
    }
}

fn assemble(profile: &CorrelationProfile, deltas: &[f64], z: f64) -> CMat {
    let k = profile.n_tx() as f64;
    let coeff: Vec<f64> = deltas
        .iter()
        .enumerate()
        .map(|(m, &d)| profile.count(m) as f64 / (k * (1.0 + d)))
        .collect();
    let mut a = profile.weighted_gram_sum(&coeff);
    for i in 0..a.nrows() {
        a[(i, i)] -= z;
    }
    a
}

fn invert(a: &CMat) -> Result<CMat> {
    linalg::inverse_hpd(a).ok_or_else(|| {
        Error::Numeric("resolvent assembly is numerically singular".into())
    })
}

fn traces(profile: &CorrelationProfile, t: &CMat) -> Vec<f64> {
    let k = profile.n_tx() as f64;
    (0..profile.num_distinct())
        .map(|m| profile.gram_trace_with(m, t) / k)
        .collect()
}

/// Solves the fixed point at `z < 0` with the given options.
///
/// Initialization is `d_m = (1/K) tr R_m R_m^H`; iteration stops when the
/// largest relative delta change falls below `opts.tol`.
pub fn solve_with_options(
    profile: &CorrelationProfile,
    z: f64,
    opts: &SolveOptions,
) -> Result<FixedPointSolution> {
    if !(z < 0.0) {
        return Err(Error::Domain(format!(
            "fixed point is only solved on the negative real axis, got z = {z}"
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {}", opts.tol)));
    }
    if !(0.0..1.0).contains(&opts.damping) {
        return Err(Error::Domain(format!("damping must be in [0, 1), got {}", opts.damping)));
    }

    let k = profile.n_tx() as f64;
    let mut deltas: Vec<f64> = (0..profile.num_distinct())
        .map(|m| profile.gram_trace(m) / k)
        .collect();

    let mut change = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let t = invert(&assemble(profile, &deltas, z))?;
        let next = traces(profile, &t);
        change = deltas
            .iter()
            .zip(&next)
            .map(|(&old, &new)| {
                let scale = old.abs().max(new.abs());
                if scale == 0.0 { 0.0 } else { (new - old).abs() / scale }
            })
            .fold(0.0f64, f64::max);
        for (d, &n) in deltas.iter_mut().zip(&next) {
            *d = opts.damping * *d + (1.0 - opts.damping) * n;
        }
        if change <= opts.tol {
            let t = invert(&assemble(profile, &deltas, z))?;
            let check = traces(profile, &t);
            let residual = deltas
                .iter()
                .zip(&check)
                .map(|(&d, &c)| {
                    let scale = d.abs().max(c.abs());
                    if scale == 0.0 { 0.0 } else { (d - c).abs() / scale }
                })
                .fold(0.0f64, f64::max);
            return Ok(FixedPointSolution {
                z,
                t,
                deltas,
                assignment: profile.assignment().to_vec(),
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::Convergence {
        iterations: opts.max_iter,
        residual: change,
        tol: opts.tol,
    })
}

/// [`solve_with_options`] with defaults (`tol = 1e-12`, 10^4 iterations, no
/// damping).
pub fn solve(profile: &CorrelationProfile, z: f64) -> Result<FixedPointSolution> {
    solve_with_options(profile, z, &SolveOptions::default())
}

/// Stieltjes transform `m(z) = (1/N) tr T(z)` of the solution.
pub fn stieltjes_m(sol: &FixedPointSolution) -> f64 {
    linalg::trace_re(sol.t_matrix()) / sol.t_matrix().nrows() as f64
}

/// Asymptotic LMMSE SINR of transmitter `k` at transmit SNR `1/s^2`:
/// `(1/K) tr(R_k R_k^H T(-1/SNR))`, i.e. the delta of `k`'s distinct matrix.
pub fn lmmse_asymptotic_sinr(profile: &CorrelationProfile, k: usize, snr: f64) -> Result<f64> {
    if !(snr > 0.0) {
        return Err(Error::Domain(format!("SNR must be positive, got {snr}")));
    }
    if k >= profile.n_tx() {
        return Err(Error::Domain(format!(
            "user index {k} out of range for {} transmitters",
            profile.n_tx()
        )));
    }
    let sol = solve(profile, -1.0 / snr)?;
    Ok(sol.delta_for_user(k))
}

/// Scalar Marchenko–Pastur fixed point `z c d^2 - (1 - c - z) d + ... = 0`
/// reference: returns the positive root of `z d^2 - (1 - z - c) d + c = 0`,
/// the delta of an identity profile with ratio `c = N/K` at `z < 0`.
pub fn mp_delta_reference(c: f64, z: f64) -> f64 {
    let disc = (1.0 - z - c).powi(2) - 4.0 * z * c;
    let root = ((1.0 - z - c) - disc.sqrt()) / (2.0 * z);
    debug_assert!(root > 0.0);
    root
}
