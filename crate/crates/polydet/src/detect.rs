//! Detectors, expansion weights, SINR and error rates.
//!
//! The polynomial expansion detector estimates `x` from `y = H x + n` as
//! `x_hat = H^H sum_{l<L} w_l B^l y`, evaluated multistage (matched filter,
//! re-spread, repeat) so `B^l` is never formed. `L = 1` is the matched
//! filter; at `L = min(N, K)` the expansion spans the full Krylov space and
//! with exact empirical moments reproduces the LMMSE detector.
//!
//! MSE-optimal weights solve `Phi w = phi` with `Phi_ij = mu_{i+j} +
//! s^2 mu_{i+j-1}` and `phi_i = mu_i` built from either empirical or
//! deterministic moments. The per-user SINR has a closed form in the
//! quadratic-form values `[B^n]_kk`, which accepts either the realized
//! values or their deterministic approximations.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::linalg::{self, C64, CMat, CVec};
use crate::moments::{MomentTable, Provenance};
use crate::rng::{SeedSpec, standard_complex};
use nalgebra::{DMatrix, DVector};

/// Condition estimate beyond which the weight solve is refused.
pub const WEIGHT_COND_LIMIT: f64 = 1e14;

/// Condition estimate beyond which callers should treat the weights as
/// degraded (the Hankel system loses digits well before it loses rank).
pub const WEIGHT_COND_WARN: f64 = 1e12;

/// Expansion weights with provenance and conditioning metadata.
#[derive(Clone, Debug)]
pub struct DetectorWeights {
    pub coefficients: Vec<f64>,
    pub noise_power: f64,
    pub provenance: Provenance,
    pub condition_estimate: f64,
}

impl DetectorWeights {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    /// Plain matched filter: `L = 1`, unit weight. The SINR of the rank-one
    /// detector is invariant to the weight scale, so the choice is free.
    pub fn matched(noise_power: f64) -> Self {
        DetectorWeights {
            coefficients: vec![1.0],
            noise_power,
            provenance: Provenance::Asymptotic,
            condition_estimate: 1.0,
        }
    }
}

/// How a SINR value was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DetectionMethod {
    Matched,
    Poly { rank: usize },
    Lmmse,
    PolyAsymptotic { rank: usize },
    LmmseAsymptotic,
}

impl DetectionMethod {
    /// Filter rank for reporting; 0 marks the full (non-expansion) solve.
    pub fn rank(&self) -> usize {
        match self {
            DetectionMethod::Matched => 1,
            DetectionMethod::Poly { rank } | DetectionMethod::PolyAsymptotic { rank } => *rank,
            DetectionMethod::Lmmse | DetectionMethod::LmmseAsymptotic => 0,
        }
    }
}

impl std::fmt::Display for DetectionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DetectionMethod::Matched => write!(f, "matched"),
            DetectionMethod::Poly { .. } => write!(f, "poly"),
            DetectionMethod::Lmmse => write!(f, "lmmse"),
            DetectionMethod::PolyAsymptotic { .. } => write!(f, "poly-asympt"),
            DetectionMethod::LmmseAsymptotic => write!(f, "lmmse-asympt"),
        }
    }
}

/// Per-user SINR report.
#[derive(Clone, Copy, Debug)]
pub struct SinrReport {
    pub user: usize,
    /// Linear SINR.
    pub gamma: f64,
    pub method: DetectionMethod,
    /// Transmit SNR `1/s^2`.
    pub snr: f64,
    /// BPSK error probability `Q(sqrt(gamma))`.
    pub ber_bpsk: f64,
}

impl SinrReport {
    pub fn new(user: usize, gamma: f64, method: DetectionMethod, sigma2: f64) -> Self {
        SinrReport {
            user,
            gamma,
            method,
            snr: 1.0 / sigma2,
            ber_bpsk: ber_bpsk(gamma),
        }
    }
}

/// Builds the weight system `Phi w = phi` at rank `l` from a moment table:
/// `Phi_ij = mu_{i+j} + s^2 mu_{i+j-1}`, `phi_i = mu_i`, `i, j = 1..=l`.
/// Needs moments up to order `2 l`.
pub fn build_weight_system(
    moments: &MomentTable,
    sigma2: f64,
    l: usize,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if l == 0 {
        return Err(Error::Domain("filter rank must be at least 1".into()));
    }
    if moments.order() < 2 * l {
        return Err(Error::InsufficientOrder {
            needed: 2 * l,
            available: moments.order(),
        });
    }
    let mu = &moments.global;
    let phi_mat = DMatrix::from_fn(l, l, |i0, j0| {
        let (i, j) = (i0 + 1, j0 + 1);
        mu[i + j] + sigma2 * mu[i + j - 1]
    });
    let phi_vec = DVector::from_fn(l, |i0, _| mu[i0 + 1]);
    Ok((phi_mat, phi_vec))
}

/// Solves the symmetric weight system, returning the coefficients and a
/// condition estimate. Refuses systems with condition beyond
/// [`WEIGHT_COND_LIMIT`].
pub fn solve_weights(phi_mat: &DMatrix<f64>, phi_vec: &DVector<f64>) -> Result<(Vec<f64>, f64)> {
    let l = phi_mat.nrows();
    assert_eq!(phi_mat.ncols(), l);
    assert_eq!(phi_vec.len(), l);

    let svd = phi_mat.clone().svd(false, false);
    let s_max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let s_min = svd.singular_values.iter().cloned().fold(f64::MAX, f64::min);
    let cond = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    if !cond.is_finite() || cond > WEIGHT_COND_LIMIT {
        return Err(Error::IllConditioned { cond });
    }

    let mut w = match phi_mat.clone().cholesky() {
        Some(ch) => ch.solve(phi_vec),
        None => phi_mat
            .clone()
            .lu()
            .solve(phi_vec)
            .ok_or(Error::IllConditioned { cond })?,
    };
    // One step of iterative refinement claws back digits lost to the Hankel
    // structure; the system is tiny so this is free.
    let residual = phi_vec - phi_mat * &w;
    if let Some(correction) = phi_mat.clone().lu().solve(&residual) {
        w += correction;
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::IllConditioned { cond });
    }
    Ok((w.iter().cloned().collect(), cond))
}

/// Convenience: builds and solves the weight system, carrying provenance and
/// the noise power into the result.
pub fn weights_from_moments(moments: &MomentTable, sigma2: f64, l: usize) -> Result<DetectorWeights> {
    let (phi_mat, phi_vec) = build_weight_system(moments, sigma2, l)?;
    let (coefficients, condition_estimate) = solve_weights(&phi_mat, &phi_vec)?;
    Ok(DetectorWeights {
        coefficients,
        noise_power: sigma2,
        provenance: moments.provenance,
        condition_estimate,
    })
}

/// Applies the polynomial expansion detector multistage:
/// `v_0 = y`, `a_l = H^H v_l`, `v_{l+1} = H a_l`, `x_hat = sum_l w_l a_l`.
/// Cost `O(L N K)`; `B^l` is never formed.
pub fn poly_detect(ch: &ChannelRealization, y: &CVec, w: &DetectorWeights) -> CVec {
    let h = ch.matrix();
    assert_eq!(y.len(), ch.n_rx(), "received vector length mismatch");
    let mut x_hat = CVec::zeros(ch.n_tx());
    let mut v = y.clone();
    for (l, &wl) in w.coefficients.iter().enumerate() {
        let a = h.adjoint() * &v;
        x_hat.zip_apply(&a, |acc, ai| *acc += ai * wl);
        if l + 1 < w.coefficients.len() {
            v = h * a;
        }
    }
    x_hat
}

/// LMMSE estimate `x_hat = H^H (B + s^2 I)^-1 y` by Hermitian solve.
pub fn lmmse_detect(ch: &ChannelRealization, y: &CVec, sigma2: f64) -> Result<CVec> {
    if !(sigma2 > 0.0) {
        return Err(Error::Domain(format!("noise power must be positive, got {sigma2}")));
    }
    let mut a = ch.gram().clone();
    for i in 0..a.nrows() {
        a[(i, i)] += C64::new(sigma2, 0.0);
    }
    let rhs = CMat::from_column_slice(y.len(), 1, y.as_slice());
    let solved = linalg::solve_hpd(&a, &rhs)
        .ok_or_else(|| Error::Numeric("LMMSE system is numerically singular".into()))?;
    Ok(ch.matrix().adjoint() * CVec::from_column_slice(solved.as_slice()))
}

/// SINR of the expansion detector from the quadratic-form sequence
/// `values[n] ~ [B^n]_kk`: `gamma = (w^T phi_k)^2 / (w^T (Phi_k - phi_k
/// phi_k^T) w)` with `Phi_k` and `phi_k` built like the weight system but
/// from per-user values. Works identically for realized values and their
/// deterministic approximations.
pub fn sinr_from_user_values(values: &[f64], w: &[f64], sigma2: f64) -> Result<f64> {
    let l = w.len();
    if values.len() < 2 * l + 1 {
        return Err(Error::InsufficientOrder {
            needed: 2 * l,
            available: values.len().saturating_sub(1),
        });
    }
    let signal_amp: f64 = (1..=l).map(|i| w[i - 1] * values[i]).sum();
    let mut total = 0.0;
    for i in 1..=l {
        for j in 1..=l {
            total += w[i - 1] * w[j - 1] * (values[i + j] + sigma2 * values[i + j - 1]);
        }
    }
    let interference = total - signal_amp * signal_amp;
    if interference <= 0.0 {
        return Err(Error::Numeric(format!(
            "interference-plus-noise power is nonpositive ({interference:.3e}); \
             the per-user moment matrix lost positive semidefiniteness"
        )));
    }
    Ok(signal_amp * signal_amp / interference)
}

/// Exact SINR of the expansion detector for transmitter `k` on one realized
/// channel, via the Krylov quadratic forms of `B`.
pub fn sinr_exact(ch: &ChannelRealization, w: &DetectorWeights, k: usize) -> Result<SinrReport> {
    let values = crate::moments::empirical_user_moments(ch, k, 2 * w.rank());
    let gamma = sinr_from_user_values(&values, &w.coefficients, w.noise_power)?;
    let method = if w.rank() == 1 {
        DetectionMethod::Matched
    } else {
        DetectionMethod::Poly { rank: w.rank() }
    };
    Ok(SinrReport::new(k, gamma, method, w.noise_power))
}

/// Deterministic SINR approximation: the same formula with `[B^n]_kk`
/// replaced by the per-user deterministic moments.
pub fn sinr_asymptotic(
    per_user_moments: &[Vec<f64>],
    w: &DetectorWeights,
    k: usize,
) -> Result<SinrReport> {
    let row = per_user_moments
        .get(k)
        .ok_or_else(|| Error::Domain(format!("user {k} out of range")))?;
    let gamma = sinr_from_user_values(row, &w.coefficients, w.noise_power)?;
    Ok(SinrReport::new(
        k,
        gamma,
        DetectionMethod::PolyAsymptotic { rank: w.rank() },
        w.noise_power,
    ))
}

/// Exact LMMSE SINR `gamma_k = h_k^H (B_-k + s^2 I)^-1 h_k` with the rank-one
/// downdate `B_-k = B - h_k h_k^H` formed explicitly.
pub fn lmmse_sinr_exact(ch: &ChannelRealization, sigma2: f64, k: usize) -> Result<SinrReport> {
    if !(sigma2 > 0.0) {
        return Err(Error::Domain(format!("noise power must be positive, got {sigma2}")));
    }
    let hk = ch.column(k);
    let n = ch.n_rx();
    let mut a = ch.gram().clone();
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] -= hk[i] * hk[j].conj();
        }
        a[(i, i)] += C64::new(sigma2, 0.0);
    }
    let rhs = CMat::from_column_slice(n, 1, hk.as_slice());
    let solved = linalg::solve_hpd(&a, &rhs)
        .ok_or_else(|| Error::Numeric("downdated LMMSE system is numerically singular".into()))?;
    let gamma: f64 = hk
        .iter()
        .zip(solved.column(0).iter())
        .map(|(h, s)| (h.conj() * s).re)
        .sum();
    Ok(SinrReport::new(k, gamma, DetectionMethod::Lmmse, sigma2))
}

/// Exact LMMSE SINR of every transmitter at once through the `K x K` Gram
/// matrix: `q_k = ([G]_kk - [G (G + s^2 I)^-1 G]_kk) / s^2` and
/// `gamma_k = q_k / (1 - q_k)`. Algebraically identical to
/// [`lmmse_sinr_exact`] but one factorization serves all users.
pub fn lmmse_sinr_all_users(ch: &ChannelRealization, sigma2: f64) -> Result<Vec<f64>> {
    if !(sigma2 > 0.0) {
        return Err(Error::Domain(format!("noise power must be positive, got {sigma2}")));
    }
    let g = ch.tx_gram();
    let k = ch.n_tx();
    let mut a = g.clone();
    for i in 0..k {
        a[(i, i)] += C64::new(sigma2, 0.0);
    }
    let x = linalg::solve_hpd(&a, g)
        .ok_or_else(|| Error::Numeric("LMMSE Gram system is numerically singular".into()))?;
    let mut gammas = Vec::with_capacity(k);
    for u in 0..k {
        let gx: C64 = (0..k).map(|j| g[(u, j)] * x[(j, u)]).sum();
        let q = (g[(u, u)].re - gx.re) / sigma2;
        gammas.push(q / (1.0 - q));
    }
    Ok(gammas)
}

/// Gaussian tail function `Q(x)`.
pub fn qfunc(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// BPSK bit error rate `Q(sqrt(gamma))` under Gaussian interference.
pub fn ber_bpsk(gamma: f64) -> f64 {
    debug_assert!(gamma >= 0.0, "SINR must be nonnegative, got {gamma}");
    qfunc(gamma.sqrt())
}

/// Monte Carlo reference estimate of the expansion detector SINR for one
/// user: simulates `samples` draws of `(x, n)`, regresses the detector
/// output on `x_k` and reports signal power over residual power. The
/// detector row is built from explicit dense powers of `B`, independent of
/// the multistage path. Chunked so the result does not depend on the worker
/// count.
pub fn monte_carlo_sinr(
    ch: &ChannelRealization,
    w: &DetectorWeights,
    k: usize,
    samples: usize,
    seed: SeedSpec,
    parallel: bool,
) -> f64 {
    let h = ch.matrix();
    let b = ch.gram();
    let n = ch.n_rx();
    let n_tx = ch.n_tx();

    // g_k^H = h_k^H sum_l w_l B^l via explicit powers.
    let hk = ch.column(k);
    let mut g = hk.map(|v| v * w.coefficients[0]);
    let mut power = hk.clone();
    for &wl in w.coefficients.iter().skip(1) {
        power = b * &power;
        g.zip_apply(&power, |acc, v| *acc += v * wl);
    }
    let row_symbols = h.adjoint() * &g; // length K: conj pairing below
    let noise_amp = w.noise_power.sqrt();

    const CHUNKS: u64 = 64;
    let per_chunk = samples.div_ceil(CHUNKS as usize);
    // Sub-streams are derived from the low bits of the caller's stream so a
    // per-trial seed spec fans out into CHUNKS disjoint sample streams.
    let base = (seed.stream & ((1 << 42) - 1)) * CHUNKS;
    let partials = crate::exec::map_indexed(parallel, CHUNKS as usize, |c| {
        let mut rng = SeedSpec::new(seed.master, crate::rng::StreamDomain::Samples, base + c as u64).rng();
        let count = per_chunk.min(samples - (c * per_chunk).min(samples));
        let mut corr = C64::new(0.0, 0.0);
        let mut out_power = 0.0f64;
        let mut sym_power = 0.0f64;
        for _ in 0..count {
            let x = CVec::from_fn(n_tx, |_, _| standard_complex(&mut rng));
            let noise = CVec::from_fn(n, |_, _| standard_complex(&mut rng) * noise_amp);
            // out = sum_j conj(row_symbols_j) x_j + g^H noise
            let mut out = C64::new(0.0, 0.0);
            for j in 0..n_tx {
                out += row_symbols[j].conj() * x[j];
            }
            for i in 0..n {
                out += g[i].conj() * noise[i];
            }
            corr += out * x[k].conj();
            out_power += out.norm_sqr();
            sym_power += x[k].norm_sqr();
        }
        (corr, out_power, sym_power, count)
    });

    let mut corr = C64::new(0.0, 0.0);
    let mut out_power = 0.0;
    let mut sym_power = 0.0;
    let mut total = 0usize;
    for (c, p, s, t) in partials {
        corr += c;
        out_power += p;
        sym_power += s;
        total += t;
    }
    // Regression residual: mean |out - s_hat x_k|^2 expanded in the three
    // accumulated sums. Subtracting the fitted signal per sample (rather
    // than subtracting mean powers) cancels the symbol-power fluctuation.
    let t = total as f64;
    let s_hat = corr / t;
    let residual = out_power / t - s_hat.norm_sqr() * (2.0 - sym_power / t);
    s_hat.norm_sqr() / residual
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelRealization, CorrelationProfile, draw_channel};
    use crate::moments;
    use crate::rng::EntryLaw;
    use approx::assert_relative_eq;

    fn mp_catalan_table() -> MomentTable {
        MomentTable {
            global: vec![1.0, 1.0, 2.0, 5.0, 14.0],
            per_user: None,
            provenance: Provenance::Asymptotic,
            n_rx: 64,
            n_tx: 64,
        }
    }

    fn random_channel(n: usize, k: usize, seed: u64) -> ChannelRealization {
        let profile = CorrelationProfile::identity(n, k).unwrap();
        draw_channel(&profile, SeedSpec::trial(seed, 0), EntryLaw::Gaussian)
    }

    #[test]
    fn weight_system_mp_example() {
        // Catalan moments, s^2 = 1, L = 2: Phi = [[3,7],[7,19]], phi = [1,2].
        let (phi_mat, phi_vec) = build_weight_system(&mp_catalan_table(), 1.0, 2).unwrap();
        assert_eq!(phi_mat, DMatrix::from_row_slice(2, 2, &[3.0, 7.0, 7.0, 19.0]));
        assert_eq!(phi_vec, DVector::from_vec(vec![1.0, 2.0]));

        let (w, cond) = solve_weights(&phi_mat, &phi_vec).unwrap();
        assert_relative_eq!(w[0], 5.0 / 8.0, max_relative = 1e-12);
        assert_relative_eq!(w[1], -1.0 / 8.0, max_relative = 1e-12);
        assert!(cond < 100.0);
        // linear-solve residual oracle
        let res = &phi_vec - &phi_mat * DVector::from_vec(w.clone());
        assert!(res.norm() <= 1e-12 * phi_vec.norm());
    }

    #[test]
    fn weight_system_edge_cases() {
        // L = 1: Phi = [mu_2 + s^2 mu_1], phi = [mu_1].
        let (phi_mat, phi_vec) = build_weight_system(&mp_catalan_table(), 0.5, 1).unwrap();
        assert_eq!(phi_mat[(0, 0)], 2.5);
        assert_eq!(phi_vec[0], 1.0);
        // s^2 = 0 leaves the pure moment Hankel block.
        let (phi_mat, _) = build_weight_system(&mp_catalan_table(), 0.0, 2).unwrap();
        assert_eq!(phi_mat, DMatrix::from_row_slice(2, 2, &[2.0, 5.0, 5.0, 14.0]));
        // order too small
        assert!(matches!(
            build_weight_system(&mp_catalan_table(), 1.0, 3),
            Err(Error::InsufficientOrder { needed: 6, .. })
        ));
    }

    #[test]
    fn solve_weights_identity_and_singular() {
        let (w, _) = solve_weights(&DMatrix::identity(3, 3), &DVector::from_vec(vec![1.0, 0.0, 0.0]))
            .unwrap();
        assert_eq!(w, vec![1.0, 0.0, 0.0]);

        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            solve_weights(&singular, &DVector::from_vec(vec![1.0, 1.0])),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn poly_detect_matches_dense_polynomial() {
        let ch = random_channel(7, 5, 11);
        let b = ch.gram();
        let w = DetectorWeights {
            coefficients: vec![0.7, -0.2, 0.05],
            noise_power: 0.5,
            provenance: Provenance::Empirical,
            condition_estimate: 1.0,
        };
        let mut rng = SeedSpec::trial(11, 9).rng();
        let y = CVec::from_fn(7, |_, _| standard_complex(&mut rng));

        // dense oracle: x_hat = H^H (w0 I + w1 B + w2 B^2) y
        let mut p = CMat::identity(7, 7).map(|v| v * w.coefficients[0]);
        let mut power = CMat::identity(7, 7);
        for &wl in w.coefficients.iter().skip(1) {
            power = linalg::matmul(b, &power);
            p.zip_apply(&power, |acc, v| *acc += v * wl);
        }
        let expected = ch.matrix().adjoint() * (&p * &y);
        let got = poly_detect(&ch, &y, &w);
        assert!((got - expected).norm() <= 1e-10);
    }

    #[test]
    fn poly_detect_special_cases() {
        // L = 1, w0 = 1: the matched filter.
        let ch = random_channel(5, 4, 13);
        let mut rng = SeedSpec::trial(13, 1).rng();
        let y = CVec::from_fn(5, |_, _| standard_complex(&mut rng));
        let got = poly_detect(&ch, &y, &DetectorWeights::matched(1.0));
        let expected = ch.matrix().adjoint() * &y;
        assert!((got - expected).norm() <= 1e-14);

        // H = I: x_hat = (w0 + w1) e_1 for y = e_1.
        let ch = ChannelRealization::from_matrix(
            CMat::identity(4, 4),
            SeedSpec::trial(0, 0),
            EntryLaw::Gaussian,
        );
        let mut e1 = CVec::zeros(4);
        e1[0] = C64::new(1.0, 0.0);
        let w = DetectorWeights {
            coefficients: vec![0.3, 0.9],
            noise_power: 1.0,
            provenance: Provenance::Empirical,
            condition_estimate: 1.0,
        };
        let got = poly_detect(&ch, &e1, &w);
        assert_relative_eq!(got[0].re, 1.2, max_relative = 1e-14);
        assert!(got.rows(1, 3).norm() <= 1e-15);
    }

    #[test]
    fn lmmse_detect_cases() {
        // H = I, s^2 = 1: x_hat = y / 2.
        let ch = ChannelRealization::from_matrix(
            CMat::identity(3, 3),
            SeedSpec::trial(0, 0),
            EntryLaw::Gaussian,
        );
        let mut rng = SeedSpec::trial(17, 0).rng();
        let y = CVec::from_fn(3, |_, _| standard_complex(&mut rng));
        let got = lmmse_detect(&ch, &y, 1.0).unwrap();
        assert!((got - y.map(|v| v * 0.5)).norm() <= 1e-13);

        // huge noise: x_hat -> H^H y / s^2
        let ch = random_channel(6, 3, 19);
        let y = CVec::from_fn(6, |_, _| standard_complex(&mut rng));
        let got = lmmse_detect(&ch, &y, 1e6).unwrap();
        let approx_out = (ch.matrix().adjoint() * &y).map(|v| v / 1e6);
        assert!((&got - &approx_out).norm() <= 1e-4 * approx_out.norm());

        assert!(lmmse_detect(&ch, &y, 0.0).is_err());
    }

    #[test]
    fn lmmse_equals_full_rank_polynomial_small() {
        // At L = min(N, K) with exact empirical moments the expansion spans
        // the LMMSE solution (Cayley–Hamilton over the K x K Gram matrix).
        for (n, k, seed) in [(5, 3, 23), (4, 4, 29), (3, 6, 31)] {
            let ch = random_channel(n, k, seed);
            let sigma2 = 0.8;
            let l = n.min(k);
            let table = moments::empirical_moments_channel(&ch, 2 * l);
            let w = weights_from_moments(&table, sigma2, l).unwrap();
            let mut rng = SeedSpec::trial(seed, 7).rng();
            let y = CVec::from_fn(n, |_, _| standard_complex(&mut rng));
            let via_poly = poly_detect(&ch, &y, &w);
            let via_lmmse = lmmse_detect(&ch, &y, sigma2).unwrap();
            assert!(
                (&via_poly - &via_lmmse).norm() <= 1e-6 * via_lmmse.norm(),
                "n={n} k={k}: {}",
                (&via_poly - &via_lmmse).norm() / via_lmmse.norm()
            );
        }
    }

    #[test]
    fn sinr_scale_invariance() {
        let ch = random_channel(8, 4, 37);
        let base = DetectorWeights {
            coefficients: vec![0.4, -0.1, 0.02],
            noise_power: 0.5,
            provenance: Provenance::Empirical,
            condition_estimate: 1.0,
        };
        let scaled = DetectorWeights {
            coefficients: base.coefficients.iter().map(|v| v * -3.7).collect(),
            ..base.clone()
        };
        let g1 = sinr_exact(&ch, &base, 2).unwrap().gamma;
        let g2 = sinr_exact(&ch, &scaled, 2).unwrap().gamma;
        assert_relative_eq!(g1, g2, max_relative = 1e-12);
    }

    #[test]
    fn sinr_orthogonal_columns_matched() {
        // Orthogonal equal-norm columns, L = 1: no interference, so
        // gamma = |h_k|^2 / s^2.
        let mut h = CMat::zeros(4, 2);
        h[(0, 0)] = C64::new(1.3, 0.0);
        h[(2, 1)] = C64::new(0.0, 1.3);
        let ch = ChannelRealization::from_matrix(h, SeedSpec::trial(0, 0), EntryLaw::Gaussian);
        let sigma2 = 0.7;
        let report = sinr_exact(&ch, &DetectorWeights::matched(sigma2), 0).unwrap();
        assert_relative_eq!(report.gamma, 1.3 * 1.3 / sigma2, max_relative = 1e-12);
        assert_eq!(report.method, DetectionMethod::Matched);
    }

    #[test]
    fn sinr_monte_carlo_agreement() {
        let ch = random_channel(8, 4, 41);
        let sigma2 = 0.4;
        for l in [1usize, 2, 3] {
            let table = moments::empirical_moments_channel(&ch, 2 * l);
            let w = weights_from_moments(&table, sigma2, l).unwrap();
            let k = 1;
            let exact = sinr_exact(&ch, &w, k).unwrap().gamma;
            let mc = monte_carlo_sinr(&ch, &w, k, 400_000, SeedSpec::samples(41, 0), false);
            assert!(
                ((mc - exact) / exact).abs() <= 0.02,
                "L={l}: mc {mc} vs exact {exact}"
            );
        }
    }

    #[test]
    fn sinr_ordering_in_rank_and_lmmse_cap() {
        // With per-realization empirical weights the Krylov spaces are
        // nested, so gamma is nondecreasing in L and capped by LMMSE.
        for seed in [43u64, 47, 53] {
            let ch = random_channel(12, 6, seed);
            let sigma2 = 0.6;
            let table = moments::empirical_moments_channel(&ch, 8);
            let lmmse = lmmse_sinr_all_users(&ch, sigma2).unwrap();
            for k in 0..6 {
                let mut last = 0.0;
                for l in 1..=4 {
                    let w = weights_from_moments(&table, sigma2, l).unwrap();
                    let gamma = sinr_exact(&ch, &w, k).unwrap().gamma;
                    assert!(
                        gamma >= last * (1.0 - 1e-9),
                        "seed {seed} user {k} L {l}: {gamma} < {last}"
                    );
                    assert!(gamma <= lmmse[k] * (1.0 + 1e-9));
                    last = gamma;
                }
            }
        }
    }

    #[test]
    fn mse_is_minimized_at_solved_weights() {
        // Expand E|x - H^H sum u_l B^l y|^2 = K - 2 N u' phi + N u' Phi u
        // with empirical moments; the solved weights must be a local (here
        // global) minimizer.
        let ch = random_channel(6, 5, 59);
        let sigma2 = 0.9;
        let l = 3;
        let table = moments::empirical_moments_channel(&ch, 2 * l);
        let (phi_mat, phi_vec) = build_weight_system(&table, sigma2, l).unwrap();
        let (w, _) = solve_weights(&phi_mat, &phi_vec).unwrap();
        let mse = |u: &DVector<f64>| -> f64 {
            let n = 6.0;
            5.0 - 2.0 * n * u.dot(&phi_vec) + n * (u.transpose() * &phi_mat * u)[(0, 0)]
        };
        let w_vec = DVector::from_vec(w);
        let at_w = mse(&w_vec);
        for i in 0..l {
            for delta in [-0.01, 0.01] {
                let mut u = w_vec.clone();
                u[i] += delta;
                assert!(mse(&u) >= at_w - 1e-12, "direction {i} delta {delta}");
            }
        }
    }

    #[test]
    fn lmmse_sinr_exact_cases() {
        // K = 1: gamma = |h|^2 / s^2.
        let mut rng = SeedSpec::trial(61, 0).rng();
        let h = CMat::from_fn(5, 1, |_, _| standard_complex(&mut rng));
        let norm2 = h.column(0).norm_squared();
        let ch = ChannelRealization::from_matrix(h, SeedSpec::trial(61, 0), EntryLaw::Gaussian);
        let report = lmmse_sinr_exact(&ch, 0.3, 0).unwrap();
        assert_relative_eq!(report.gamma, norm2 / 0.3, max_relative = 1e-10);
    }

    #[test]
    fn lmmse_batch_matches_downdate_route() {
        let ch = random_channel(9, 5, 67);
        let sigma2 = 0.45;
        let batch = lmmse_sinr_all_users(&ch, sigma2).unwrap();
        for k in 0..5 {
            let single = lmmse_sinr_exact(&ch, sigma2, k).unwrap().gamma;
            assert_relative_eq!(batch[k], single, max_relative = 1e-9);
        }
    }

    #[test]
    fn lmmse_sinr_monte_carlo_agreement() {
        // The LMMSE detector output SINR measured by simulation matches the
        // closed form; reuse the full-rank polynomial equivalence.
        let ch = random_channel(6, 4, 71);
        let sigma2 = 0.5;
        let l = 4;
        let table = moments::empirical_moments_channel(&ch, 2 * l);
        let w = weights_from_moments(&table, sigma2, l).unwrap();
        let k = 2;
        let mc = monte_carlo_sinr(&ch, &w, k, 400_000, SeedSpec::samples(71, 1), false);
        let closed = lmmse_sinr_exact(&ch, sigma2, k).unwrap().gamma;
        assert!(((mc - closed) / closed).abs() <= 0.02, "mc {mc} vs closed {closed}");
    }

    #[test]
    fn asymptotic_sinr_mp_symmetry() {
        // Exchangeable users get identical deterministic SINR.
        let profile = CorrelationProfile::identity(32, 32).unwrap();
        let state = moments::compute_recursion(&profile, 6);
        let per_user = moments::per_user_moments(&state, 6).unwrap();
        let table = moments::global_moments(&state);
        let w = weights_from_moments(&table, 0.5, 3).unwrap();
        let g0 = sinr_asymptotic(&per_user, &w, 0).unwrap().gamma;
        for k in 1..32 {
            let gk = sinr_asymptotic(&per_user, &w, k).unwrap().gamma;
            assert_relative_eq!(g0, gk, max_relative = 1e-12);
        }
    }

    #[test]
    fn ber_values() {
        assert_eq!(ber_bpsk(0.0), 0.5);
        assert_relative_eq!(ber_bpsk(1.0), 0.15865525393145707, max_relative = 1e-12);
        let mut last = 0.6;
        for g in [0.0, 0.5, 1.0, 2.0, 4.0, 16.0] {
            let b = ber_bpsk(g);
            assert!(b < last && b > 0.0 && b <= 0.5);
            last = b;
        }
    }

    #[test]
    fn qfunc_matches_series_and_continued_fraction() {
        // Independent oracle: erf power series for small x, Lentz continued
        // fraction for the tail.
        fn erf_series(x: f64) -> f64 {
            let mut term = x;
            let mut sum = x;
            for n in 1..200 {
                term *= -x * x / n as f64;
                sum += term / (2 * n + 1) as f64;
                if term.abs() < 1e-18 {
                    break;
                }
            }
            sum * 2.0 / std::f64::consts::PI.sqrt()
        }
        fn erfc_cf(x: f64) -> f64 {
            // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + 1/2/(x + 2/2/(x + ...)))
            let mut f = x;
            for n in (1..60).rev() {
                f = x + (n as f64 / 2.0) / f;
            }
            (-x * x).exp() / std::f64::consts::PI.sqrt() / f
        }
        for x in [0.1, 0.5, 1.0, 1.5] {
            let expected = 0.5 * (1.0 - erf_series(x / std::f64::consts::SQRT_2));
            assert_relative_eq!(qfunc(x), expected, max_relative = 1e-12, epsilon = 1e-16);
        }
        for x in [2.0, 3.0, 5.0] {
            let expected = 0.5 * erfc_cf(x / std::f64::consts::SQRT_2);
            assert_relative_eq!(qfunc(x), expected, max_relative = 1e-10);
        }
    }

    #[test]
    fn interference_failure_is_reported() {
        // Force a nonpositive denominator with inconsistent fake values.
        let values = vec![1.0, 1.0, 1.0, 1.0, 1.0];
        let err = sinr_from_user_values(&values, &[1.0, -1.0], 0.0).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
    }
}
