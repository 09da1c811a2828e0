//! Deterministic spectral-moment approximations and low-complexity multiuser
//! detection for correlated fading channels.
//!
//! The library models an `N x K` channel whose columns are shaped by
//! per-transmitter correlation factors, `h_j = (1/sqrt(K)) R_j w_j`, and works
//! with the Gram matrix `B = H H^H` of such channels. It provides:
//!
//! - [`channel`]: correlation-profile constructors (distributed antennas,
//!   extended Jakes spatial correlation, MIMO multiple-access groups) and
//!   seeded channel draws.
//! - [`moments`]: a recursion computing deterministic approximations of the
//!   spectral moments `(1/N) tr B^n` and of the per-user quadratic forms
//!   `[B^n]_kk`, together with empirical moment computations for validation.
//! - [`fixed_point`]: the resolvent fixed point `T(z)` on the negative real
//!   axis, its Stieltjes transform, and the asymptotic LMMSE SINR.
//! - [`detect`]: matched-filter, polynomial-expansion and LMMSE detectors,
//!   MSE-optimal expansion weights, per-user SINR (exact and asymptotic) and
//!   BPSK error rates.
//! - [`sim`]: reproducible Monte Carlo SNR sweeps, moment reports, and a
//!   self-validation harness with CSV output.
//!
//! The polynomial expansion detector approximates the LMMSE inverse
//! `(B + s^2 I)^-1` by `sum_l w_l B^l`, turning an `O(r^2)` solve into `L`
//! matched-filter/re-spread passes of cost `O(N K)` each. The weights only
//! need the moments of `B`, and those are exactly what the deterministic
//! recursion provides without ever drawing a channel.
//!
//! With the default `parallel` feature, Monte Carlo trials, quadrature and
//! large matrix products are distributed over a rayon pool; disabling the
//! feature yields a fully sequential build with identical results.

pub mod channel;
pub mod detect;
mod error;
mod exec;
pub mod fixed_point;
pub mod linalg;
pub mod moments;
pub mod quad;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use linalg::{C64, CMat, CVec};
