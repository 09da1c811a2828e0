//! Deterministic and empirical spectral moments of `B = H H^H`.
//!
//! The deterministic side evaluates, for a correlation profile, a recursion
//! whose output `mu_bar_n` approximates `(1/N) tr B^n` arbitrarily well as
//! `N, K` grow, plus per-user approximations `mu_bar^k_n` of the quadratic
//! forms `[B^n]_kk = h_k^H B^(n-1) h_k`. No channel is ever drawn.
//!
//! The recursion is run in a *scaled* form. With the raw sequences
//! `T_n, Q_n, f_{k,n}, d_{k,n}` (which carry factorial magnitudes), define
//! `X_hat_n = (-1)^n / n! * X_n`. Substituting into the raw recursion and
//! cancelling binomials leaves
//!
//! ```text
//! A_{n+1} = 1/(n+1) * sum_{i=0..n} sum_{j=0..i} (i-j+1) A_{n-i} q_{i-j+1} A_j
//! q_{n+1} = -(1/K)  * sum_k f_{k,n} R_k R_k^H
//! f_{k,n+1} = -1/(n+1) * sum_{i=0..n} sum_{j=0..i} (n-i+1) f_{k,j} f_{k,i-j} d_{k,n-i}
//! d_{k,n+1} = (1/K) tr(R_k R_k^H A_{n+1})
//! ```
//!
//! with `A_0 = I`, `f_{k,0} = -1`, `d_{k,0} = (1/K) tr R_k R_k^H`, and
//! `mu_bar_n = (1/N) tr A_n`. The scaled quantities grow only geometrically
//! for bounded spectra. The literal factorial form survives in
//! [`reference::literal_recursion_moments`] as a cross-validation oracle.
//!
//! Everything `f`/`d`-indexed depends on the transmitter only through
//! `R_k R_k^H`, so those sequences are computed once per distinct matrix and
//! weighted by column multiplicity where a per-`k` sum appears.

use crate::channel::{ChannelRealization, CorrelationProfile};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Origin of a moment table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Computed from one realized channel.
    Empirical,
    /// Deterministic approximation from the correlation profile.
    Asymptotic,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Empirical => write!(f, "empirical"),
            Provenance::Asymptotic => write!(f, "asymptotic"),
        }
    }
}

/// Scaled recursion state up to order `n_max`.
///
/// `a_hat[n]` is `N x N` Hermitian with `mu_bar_n = (1/N) tr a_hat[n]`;
/// `f_hat[m][n]` and `delta_hat[m][n]` are indexed per distinct matrix.
#[derive(Clone, Debug)]
pub struct MomentRecursionState {
    n_rx: usize,
    n_tx: usize,
    a_hat: Vec<CMat>,
    q_hat: Vec<CMat>,
    f_hat: Vec<Vec<f64>>,
    delta_hat: Vec<Vec<f64>>,
    assignment: Vec<usize>,
}

impl MomentRecursionState {
    pub fn order(&self) -> usize {
        self.a_hat.len() - 1
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    /// Scaled matrix `A_hat_n`.
    pub fn a_hat(&self, n: usize) -> &CMat {
        &self.a_hat[n]
    }

    /// Scaled matrix `q_hat_n`, `1 <= n <= order`.
    pub fn q_hat(&self, n: usize) -> &CMat {
        &self.q_hat[n - 1]
    }

    /// Scaled coefficients `delta_hat` of distinct matrix `m`.
    pub fn delta_hat(&self, m: usize) -> &[f64] {
        &self.delta_hat[m]
    }

    /// Scaled coefficients `f_hat` of distinct matrix `m`.
    pub fn f_hat(&self, m: usize) -> &[f64] {
        &self.f_hat[m]
    }
}

/// Runs the scaled recursion up to order `n_max`.
///
/// Cost is dominated by `n_max (n_max + 1)` dense `N x N` products from the
/// double convolution; with `n_max <= 16` and `N` in the hundreds this is
/// far below a single eigendecomposition.
pub fn compute_recursion(profile: &CorrelationProfile, n_max: usize) -> MomentRecursionState {
    let n_rx = profile.n_rx();
    let k = profile.n_tx() as f64;
    let m_count = profile.num_distinct();

    let mut a_hat = Vec::with_capacity(n_max + 1);
    a_hat.push(CMat::identity(n_rx, n_rx));
    let mut q_hat: Vec<CMat> = Vec::with_capacity(n_max);
    let mut f_hat: Vec<Vec<f64>> = vec![vec![-1.0]; m_count];
    let mut delta_hat: Vec<Vec<f64>> = (0..m_count)
        .map(|m| vec![profile.gram_trace(m) / k])
        .collect();

    // s[i] = sum_{l=1..i+1} l * q_hat_l * a_hat_{i+1-l}; the inner half of
    // the double convolution, reusable across all later orders.
    let mut s: Vec<CMat> = Vec::with_capacity(n_max);

    for next in 1..=n_max {
        let n = next - 1;

        // q_hat_{n+1} = -(1/K) sum over transmitters of f_hat_{k,n} R_k R_k^H,
        // collapsed onto distinct matrices with column counts.
        let coeff: Vec<f64> = (0..m_count)
            .map(|m| -(profile.count(m) as f64) * f_hat[m][n] / k)
            .collect();
        q_hat.push(profile.weighted_gram_sum(&coeff));

        // s[n]; the l = n+1 term multiplies a_hat_0 = I.
        let mut s_n = q_hat[n].map(|v| v * (next as f64));
        for l in 1..=n {
            let prod = linalg::matmul(&q_hat[l - 1], &a_hat[next - l]);
            s_n.zip_apply(&prod, |acc, v| *acc += v * (l as f64));
        }
        s.push(s_n);

        // a_hat_{n+1} = 1/(n+1) sum_{i=0..n} a_hat_{n-i} s[i]; the i = n term
        // multiplies by a_hat_0 = I.
        let mut acc = s[n].clone();
        for i in 0..n {
            let prod = linalg::matmul(&a_hat[n - i], &s[i]);
            acc.zip_apply(&prod, |a, v| *a += v);
        }
        let mut a_next = acc.map(|v| v / (next as f64));
        // Individual products are not Hermitian, only the symmetrized sum is;
        // re-symmetrize to stop floating-point drift from compounding.
        linalg::hermitize(&mut a_next);
        a_hat.push(a_next);

        for m in 0..m_count {
            let d_next = profile.gram_trace_with(m, &a_hat[next]) / k;
            delta_hat[m].push(d_next);

            let mut f_next = 0.0;
            for i in 0..=n {
                let mut conv = 0.0;
                for j in 0..=i {
                    conv += f_hat[m][j] * f_hat[m][i - j];
                }
                f_next += (n - i + 1) as f64 * conv * delta_hat[m][n - i];
            }
            f_hat[m].push(-f_next / next as f64);
        }
    }

    MomentRecursionState {
        n_rx,
        n_tx: profile.n_tx(),
        a_hat,
        q_hat,
        f_hat,
        delta_hat,
        assignment: profile.assignment().to_vec(),
    }
}

/// Global deterministic moments `mu_bar_n = (1/N) tr A_hat_n`.
pub fn global_moments(state: &MomentRecursionState) -> MomentTable {
    let n = state.n_rx as f64;
    let global: Vec<f64> = state.a_hat.iter().map(|a| linalg::trace_re(a) / n).collect();
    MomentTable {
        global,
        per_user: None,
        provenance: Provenance::Asymptotic,
        n_rx: state.n_rx,
        n_tx: state.n_tx,
    }
}

/// Weighted deterministic moments `(1/N) tr(D A_hat_n)` approximating
/// `(1/N) tr(D B^n)` for a bounded Hermitian weight `D`.
pub fn weighted_moments(state: &MomentRecursionState, d: &CMat) -> Vec<f64> {
    let n = state.n_rx as f64;
    state
        .a_hat
        .iter()
        .map(|a| linalg::trace_product_herm(d, a) / n)
        .collect()
}

/// Per-user deterministic moments `mu_bar^k_n` approximating `[B^n]_kk`, for
/// all `K` users and `n = 0..=n_max`.
///
/// The recursion is the convolution `mu_bar^k_n = sum_i mu_bar^k_{n-1-i} *
/// d_hat_{k,i}` with `mu_bar^k_0 = 1`; the coefficients are exactly the
/// stored scaled `delta_hat`. Needs `state.order() >= n_max - 1`.
pub fn per_user_moments(state: &MomentRecursionState, n_max: usize) -> Result<Vec<Vec<f64>>> {
    if n_max > 0 && state.order() < n_max - 1 {
        return Err(Error::InsufficientOrder {
            needed: n_max - 1,
            available: state.order(),
        });
    }
    let per_distinct: Vec<Vec<f64>> = state
        .delta_hat
        .iter()
        .map(|deltas| {
            let mut mu = vec![1.0f64];
            for n in 1..=n_max {
                let v = (0..n).map(|i| mu[n - 1 - i] * deltas[i]).sum();
                mu.push(v);
            }
            mu
        })
        .collect();
    Ok(state
        .assignment
        .iter()
        .map(|&m| per_distinct[m].clone())
        .collect())
}

/// Moment table with optional per-user rows.
#[derive(Clone, Debug)]
pub struct MomentTable {
    pub global: Vec<f64>,
    pub per_user: Option<Vec<Vec<f64>>>,
    pub provenance: Provenance,
    pub n_rx: usize,
    pub n_tx: usize,
}

impl MomentTable {
    /// Highest stored order.
    pub fn order(&self) -> usize {
        self.global.len() - 1
    }

    pub fn get(&self, n: usize) -> Result<f64> {
        self.global.get(n).copied().ok_or(Error::InsufficientOrder {
            needed: n,
            available: self.order(),
        })
    }

    /// Smallest eigenvalue of the Hankel matrix `[mu_{i+j}]_{i,j=1..l}`,
    /// which is PSD for any genuine moment sequence.
    pub fn hankel_min_eigenvalue(&self, l: usize) -> Result<f64> {
        if self.order() < 2 * l {
            return Err(Error::InsufficientOrder {
                needed: 2 * l,
                available: self.order(),
            });
        }
        let h = nalgebra::DMatrix::<f64>::from_fn(l, l, |i, j| self.global[i + j + 2]);
        let eig = h.symmetric_eigen();
        Ok(eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min))
    }

    /// CSV serialization: `n, mu_global[, mu_user_1..mu_user_K], provenance, N, K`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "n,mu_global")?;
        if self.per_user.is_some() {
            for k in 1..=self.n_tx {
                write!(w, ",mu_user_{k}")?;
            }
        }
        writeln!(w, ",provenance,N,K")?;
        for n in 0..=self.order() {
            write!(w, "{},{}", n, fmt_float(self.global[n]))?;
            if let Some(rows) = &self.per_user {
                for row in rows {
                    write!(w, ",{}", fmt_float(row[n]))?;
                }
            }
            writeln!(w, ",{},{},{}", self.provenance, self.n_rx, self.n_tx)?;
        }
        Ok(())
    }
}

pub(crate) fn fmt_float(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{:.1}", v)
    } else {
        format!("{v}")
    }
}

/// Empirical global moments `(1/N) tr B^n` of a Hermitian matrix by iterated
/// multiplication.
pub fn empirical_moments(b: &CMat, n_max: usize) -> MomentTable {
    let n = b.nrows();
    debug_assert!(linalg::herm_asymmetry(b) <= 1e-10);
    let mut global = vec![1.0f64];
    if n_max >= 1 {
        let mut power = b.clone();
        global.push(linalg::trace_re(&power) / n as f64);
        for _ in 2..=n_max {
            power = linalg::matmul(b, &power);
            global.push(linalg::trace_re(&power) / n as f64);
        }
    }
    MomentTable {
        global,
        per_user: None,
        provenance: Provenance::Empirical,
        n_rx: n,
        n_tx: n,
    }
}

/// Empirical global and per-user moments of one channel draw through the
/// `K x K` Gram matrix: `tr (H H^H)^n = tr (H^H H)^n` and
/// `[B^n]_kk = [(H^H H)^n]_kk`, so one power sequence yields both.
pub fn empirical_moments_channel(ch: &ChannelRealization, n_max: usize) -> MomentTable {
    let n_rx = ch.n_rx();
    let n_tx = ch.n_tx();
    let g = ch.tx_gram();

    let mut global = vec![1.0f64];
    let mut per_user: Vec<Vec<f64>> = vec![vec![1.0f64]; n_tx];
    let mut power = g.clone();
    for _ in 1..=n_max {
        global.push(linalg::trace_re(&power) / n_rx as f64);
        for k in 0..n_tx {
            per_user[k].push(power[(k, k)].re);
        }
        if global.len() <= n_max {
            power = linalg::matmul(g, &power);
        }
    }
    MomentTable {
        global,
        per_user: Some(per_user),
        provenance: Provenance::Empirical,
        n_rx,
        n_tx,
    }
}

/// Empirical per-user quadratic forms `[B^n]_kk = h_k^H B^(n-1) h_k` for one
/// user via the Krylov sequence `u_0 = h_k`, `u_l = B u_{l-1}`; entry 0 is 1
/// by the table convention.
pub fn empirical_user_moments(ch: &ChannelRealization, k: usize, n_max: usize) -> Vec<f64> {
    let h = ch.matrix();
    let hk = ch.column(k);
    let mut values = vec![1.0f64];
    if n_max == 0 {
        return values;
    }
    let mut u = hk.clone();
    values.push((hk.adjoint() * &u)[(0, 0)].re);
    for _ in 2..=n_max {
        // B u = H (H^H u) without forming B
        let tmp = h.adjoint() * &u;
        u = h * tmp;
        values.push((hk.adjoint() * &u)[(0, 0)].re);
    }
    values
}

pub mod reference {
    //! Literal factorial-form recursion, kept solely as a cross-validation
    //! oracle for the scaled implementation (small `n` only: the raw
    //! sequences grow like `n!`).

    use super::*;

    fn binomials(n_max: usize) -> Vec<Vec<f64>> {
        let mut c = vec![vec![1.0f64]];
        for n in 1..=n_max {
            let prev = &c[n - 1];
            let mut row = vec![1.0f64; n + 1];
            for k in 1..n {
                row[k] = prev[k - 1] + prev[k];
            }
            c.push(row);
        }
        c
    }

    /// Raw-form moments `mu_bar_n = ((-1)^n / n!) (1/N) tr T_n` for
    /// `n = 0..=n_max`.
    pub fn literal_recursion_moments(profile: &CorrelationProfile, n_max: usize) -> Vec<f64> {
        let n_rx = profile.n_rx();
        let k = profile.n_tx() as f64;
        let m_count = profile.num_distinct();
        let binom = binomials(n_max.max(1) + 1);

        let mut t: Vec<CMat> = vec![CMat::identity(n_rx, n_rx)];
        let mut q: Vec<CMat> = vec![CMat::zeros(n_rx, n_rx)]; // index 0 unused
        let mut f: Vec<Vec<f64>> = vec![vec![-1.0]; m_count];
        let mut delta: Vec<Vec<f64>> = (0..m_count)
            .map(|m| vec![profile.gram_trace(m) / k])
            .collect();

        for n in 0..n_max {
            // Q_{n+1} = (n+1)/K sum_k f_{k,n} R_k R_k^H
            let coeff: Vec<f64> = (0..m_count)
                .map(|m| (n as f64 + 1.0) * (profile.count(m) as f64) * f[m][n] / k)
                .collect();
            q.push(profile.weighted_gram_sum(&coeff));

            // T_{n+1} = sum_{i<=n} sum_{j<=i} C(n,i) C(i,j) T_{n-i} Q_{i-j+1} T_j
            let mut t_next = CMat::zeros(n_rx, n_rx);
            for i in 0..=n {
                for j in 0..=i {
                    let w = binom[n][i] * binom[i][j];
                    let qt = linalg::matmul(&q[i - j + 1], &t[j]);
                    let term = linalg::matmul(&t[n - i], &qt);
                    t_next.zip_apply(&term, |a, v| *a += v * w);
                }
            }
            t.push(t_next);

            for m in 0..m_count {
                delta[m].push(profile.gram_trace_with(m, &t[n + 1]) / k);
                let mut f_next = 0.0;
                for i in 0..=n {
                    for j in 0..=i {
                        f_next += binom[n][i]
                            * binom[i][j]
                            * (n - i + 1) as f64
                            * f[m][j]
                            * f[m][i - j]
                            * delta[m][n - i];
                    }
                }
                f[m].push(f_next);
            }
        }

        let mut factorial = 1.0f64;
        (0..=n_max)
            .map(|n| {
                if n > 0 {
                    factorial *= n as f64;
                }
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                sign / factorial * linalg::trace_re(&t[n]) / n_rx as f64
            })
            .collect()
    }
}

/// Marchenko–Pastur moments `sum_r c^r / (r+1) * C(n,r) * C(n-1,r)` with
/// ratio `c = N/K`; the closed-form oracle for identity profiles.
pub fn marchenko_pastur_moment(c: f64, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for r in 0..n {
        let mut b1 = 1.0f64; // C(n, r)
        let mut b2 = 1.0f64; // C(n-1, r)
        for i in 0..r {
            b1 *= (n - i) as f64 / (i + 1) as f64;
            b2 *= (n - 1 - i) as f64 / (i + 1) as f64;
        }
        sum += c.powi(r as i32) / (r + 1) as f64 * b1 * b2;
    }
    sum
}
