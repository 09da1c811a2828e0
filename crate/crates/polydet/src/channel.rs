//! Correlation profiles and seeded channel draws.
//!
//! A channel column is `h_j = (1/sqrt(K)) R_j w_j` with a deterministic
//! shaping factor `R_j` and i.i.d. zero-mean unit-variance entries `w_j`.
//! A [`CorrelationProfile`] stores the factors of all `K` transmitters as a
//! set of `M <= K` distinct matrices plus an assignment map; distinct
//! matrices that only differ by a real scale share one base matrix, so a
//! MIMO-MAC group with per-antenna powers costs a single `N x N` base.
//!
//! Three scenario constructors are provided: per-antenna path loss
//! ([`make_distributed_antenna_profile`]), an extended Jakes model of spatial
//! correlation at the receive array ([`make_jakes_profile`]), and grouped
//! MIMO multiple-access links ([`make_mimo_mac_profile`]).

use crate::error::{Error, Result};
use crate::exec;
use crate::linalg::{self, C64, CMat, CVec};
use crate::quad::integrate_oscillatory;
use crate::rng::{EntryLaw, SeedSpec};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::OnceLock;

/// Relative eigenvalue clip used by [`psd_sqrt`]: anything in
/// `[-PSD_CLIP_REL * |theta|, 0)` is treated as quadrature noise and clipped
/// to zero, more negative values are rejected.
pub const PSD_CLIP_REL: f64 = 1e-10;

/// Default absolute tolerance of the Jakes correlation quadrature.
pub const JAKES_QUAD_TOL: f64 = 1e-10;

/// One distinct shaping factor, expressed as `scale * bases[base]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledBase {
    pub base: usize,
    pub scale: f64,
}

/// The per-transmitter covariance structure `{R_j}`.
#[derive(Clone, Debug)]
pub struct CorrelationProfile {
    n_rx: usize,
    n_tx: usize,
    bases: Vec<CMat>,
    distinct: Vec<ScaledBase>,
    assignment: Vec<usize>,
    counts: Vec<usize>,
    base_grams: Vec<CMat>,
    gram_norms: Vec<f64>,
}

impl CorrelationProfile {
    /// Builds a profile from `M` distinct base factors, an assignment map and
    /// per-distinct scales. The general constructor behind the scenario
    /// builders.
    pub fn from_scaled_bases(
        n_tx: usize,
        bases: Vec<CMat>,
        distinct: Vec<ScaledBase>,
        assignment: Vec<usize>,
    ) -> Result<Self> {
        if bases.is_empty() || distinct.is_empty() {
            return Err(Error::Domain("profile needs at least one factor matrix".into()));
        }
        if n_tx == 0 {
            return Err(Error::Domain("profile needs at least one transmitter".into()));
        }
        let n_rx = bases[0].nrows();
        if n_rx == 0 {
            return Err(Error::Domain("factor matrices must be non-empty".into()));
        }
        for (i, b) in bases.iter().enumerate() {
            if b.nrows() != n_rx || b.ncols() != n_rx {
                return Err(Error::Domain(format!(
                    "base {i} is {}x{}, expected {n_rx}x{n_rx}",
                    b.nrows(),
                    b.ncols()
                )));
            }
            if b.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::Domain(format!("base {i} has non-finite entries")));
            }
        }
        for (m, e) in distinct.iter().enumerate() {
            if e.base >= bases.len() {
                return Err(Error::Domain(format!("distinct entry {m} references missing base {}", e.base)));
            }
            if !e.scale.is_finite() || e.scale < 0.0 {
                return Err(Error::Domain(format!("distinct entry {m} has invalid scale {}", e.scale)));
            }
        }
        if assignment.len() != n_tx {
            return Err(Error::Domain(format!(
                "assignment length {} does not match n_tx {n_tx}",
                assignment.len()
            )));
        }
        if let Some(bad) = assignment.iter().find(|&&m| m >= distinct.len()) {
            return Err(Error::Domain(format!(
                "assignment references distinct matrix {bad}, only {} exist",
                distinct.len()
            )));
        }

        let mut counts = vec![0usize; distinct.len()];
        for &m in &assignment {
            counts[m] += 1;
        }

        let base_grams: Vec<CMat> = bases.iter().map(linalg::gram_rx).collect();
        let base_norms: Vec<f64> = base_grams.iter().map(linalg::spectral_norm_herm_psd).collect();
        let gram_norms = distinct
            .iter()
            .map(|e| e.scale * e.scale * base_norms[e.base])
            .collect();

        Ok(CorrelationProfile {
            n_rx,
            n_tx,
            bases,
            distinct,
            assignment,
            counts,
            base_grams,
            gram_norms,
        })
    }

    /// Builds a profile from `M` distinct factor matrices (scale 1 each).
    pub fn from_distinct_factors(n_tx: usize, factors: Vec<CMat>, assignment: Vec<usize>) -> Result<Self> {
        let distinct = (0..factors.len()).map(|base| ScaledBase { base, scale: 1.0 }).collect();
        Self::from_scaled_bases(n_tx, factors, distinct, assignment)
    }

    /// Builds a profile from one factor per transmitter, deduplicating
    /// byte-identical matrices.
    pub fn from_column_factors(factors: Vec<CMat>) -> Result<Self> {
        let n_tx = factors.len();
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut uniques: Vec<CMat> = Vec::new();
        let mut assignment = Vec::with_capacity(n_tx);
        for f in factors {
            let key: Vec<u64> = f
                .as_slice()
                .iter()
                .flat_map(|v| [v.re.to_bits(), v.im.to_bits()])
                .collect();
            let idx = *seen.entry(key).or_insert_with(|| {
                uniques.push(f);
                uniques.len() - 1
            });
            assignment.push(idx);
        }
        Self::from_distinct_factors(n_tx, uniques, assignment)
    }

    /// `R_j = I` for every transmitter; the i.i.d. benchmark case.
    pub fn identity(n_rx: usize, n_tx: usize) -> Result<Self> {
        Self::from_distinct_factors(n_tx, vec![CMat::identity(n_rx, n_rx)], vec![0; n_tx])
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    /// Number of distinct factor matrices `M`.
    pub fn num_distinct(&self) -> usize {
        self.distinct.len()
    }

    /// Transmitter-to-distinct-matrix map.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Distinct matrix index of transmitter `k`.
    pub fn distinct_of(&self, k: usize) -> usize {
        self.assignment[k]
    }

    /// Number of transmitters assigned to distinct matrix `m`.
    pub fn count(&self, m: usize) -> usize {
        self.counts[m]
    }

    /// Spectral norms of `R_m R_m^H` per distinct matrix, recorded at
    /// construction.
    pub fn gram_spectral_norms(&self) -> &[f64] {
        &self.gram_norms
    }

    /// Materializes distinct factor `m` as `scale * base`.
    pub fn distinct_factor(&self, m: usize) -> CMat {
        let e = self.distinct[m];
        self.bases[e.base].map(|v| v * e.scale)
    }

    /// `tr(R_m R_m^H)` for distinct matrix `m`.
    pub fn gram_trace(&self, m: usize) -> f64 {
        let e = self.distinct[m];
        e.scale * e.scale * linalg::trace_re(&self.base_grams[e.base])
    }

    /// `Re tr(R_m R_m^H x)` for distinct matrix `m` and Hermitian `x`.
    pub fn gram_trace_with(&self, m: usize, x: &CMat) -> f64 {
        let e = self.distinct[m];
        e.scale * e.scale * linalg::trace_product_herm(&self.base_grams[e.base], x)
    }

    /// `sum_m coeff[m] * R_m R_m^H`, grouped per shared base.
    pub fn weighted_gram_sum(&self, coeff: &[f64]) -> CMat {
        assert_eq!(coeff.len(), self.distinct.len());
        let mut base_coeff = vec![0.0f64; self.bases.len()];
        for (e, &c) in self.distinct.iter().zip(coeff) {
            base_coeff[e.base] += c * e.scale * e.scale;
        }
        let mut acc = CMat::zeros(self.n_rx, self.n_rx);
        for (g, &c) in self.base_grams.iter().zip(&base_coeff) {
            if c != 0.0 {
                acc.zip_apply(g, |a, b| *a += b * c);
            }
        }
        acc
    }
}

/// Hermitian PSD square root via eigendecomposition.
///
/// Eigenvalues in `[-clip_rel * |theta|_2, 0)` are clipped to zero; anything
/// more negative rejects the input as not PSD.
pub fn psd_sqrt_with_clip(theta: &CMat, clip_rel: f64) -> Result<CMat> {
    if theta.nrows() != theta.ncols() {
        return Err(Error::Domain(format!(
            "psd_sqrt needs a square matrix, got {}x{}",
            theta.nrows(),
            theta.ncols()
        )));
    }
    let (vals, vecs) = linalg::hermitian_eigen(theta.clone());
    let max_abs = vals.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let floor = -clip_rel * max_abs;
    if let Some(bad) = vals.iter().find(|&&v| v < floor) {
        return Err(Error::Domain(format!(
            "matrix is not PSD: eigenvalue {bad:.6e} below clip threshold {floor:.6e}"
        )));
    }
    let sqrt_vals = CVec::from_iterator(
        vals.len(),
        vals.iter().map(|&v| C64::new(v.max(0.0).sqrt(), 0.0)),
    );
    let scaled = {
        let mut s = vecs.clone();
        for (j, col) in sqrt_vals.iter().enumerate() {
            s.column_mut(j).scale_mut(col.re);
        }
        s
    };
    Ok(linalg::hermitized(linalg::matmul(&scaled, &vecs.adjoint())))
}

pub fn psd_sqrt(theta: &CMat) -> Result<CMat> {
    psd_sqrt_with_clip(theta, PSD_CLIP_REL)
}

/// Path-loss profile: `R_j = diag(sqrt(p_j) / d_ij^(beta/2))`.
///
/// `distances` is `N x K` (receive antenna by transmitter), strictly
/// positive; byte-identical columns collapse onto one distinct matrix.
pub fn make_distributed_antenna_profile(
    distances: &DMatrix<f64>,
    powers: &[f64],
    pathloss_exponent: f64,
) -> Result<CorrelationProfile> {
    let (n_rx, n_tx) = distances.shape();
    if powers.len() != n_tx {
        return Err(Error::Domain(format!(
            "got {} powers for {n_tx} transmitters",
            powers.len()
        )));
    }
    if !pathloss_exponent.is_finite() || pathloss_exponent <= 0.0 {
        return Err(Error::Domain(format!("path loss exponent must be positive, got {pathloss_exponent}")));
    }
    let mut factors = Vec::with_capacity(n_tx);
    for j in 0..n_tx {
        let p = powers[j];
        if !(p > 0.0) {
            return Err(Error::Domain(format!("power of transmitter {j} must be positive, got {p}")));
        }
        let mut r = CMat::zeros(n_rx, n_rx);
        for i in 0..n_rx {
            let d = distances[(i, j)];
            if !(d > 0.0) {
                return Err(Error::Domain(format!("distance ({i},{j}) must be positive, got {d}")));
            }
            r[(i, i)] = C64::new(p.sqrt() / d.powf(pathloss_exponent / 2.0), 0.0);
        }
        factors.push(r);
    }
    CorrelationProfile::from_column_factors(factors)
}

/// Angular spread of one transmitter, `phi_min <= 0 <= phi_max`.
pub type AngleInterval = (f64, f64);

/// Draws `count` angular spreads, `phi_min ~ U[-pi, 0]` and
/// `phi_max ~ U[0, pi]` independently.
pub fn draw_angle_intervals<R: rand::Rng>(count: usize, rng: &mut R) -> Vec<AngleInterval> {
    (0..count)
        .map(|_| (rng.random_range(-PI..0.0), rng.random_range(0.0..PI)))
        .collect()
}

/// First row of the Hermitian Toeplitz Jakes correlation matrix: entry
/// `delta` is the angular average of `exp(i * 2*pi*spacing*delta * cos x)`
/// over the spread. Entry 0 is exactly 1.
pub fn jakes_correlation_row(
    n: usize,
    spacing_factor: f64,
    interval: AngleInterval,
    quad_tol: f64,
    parallel: bool,
) -> Result<Vec<C64>> {
    let (phi_min, phi_max) = interval;
    if !(phi_min <= 0.0 && phi_max >= 0.0 && phi_min >= -PI && phi_max <= PI) {
        return Err(Error::Domain(format!(
            "angle interval must satisfy -pi <= phi_min <= 0 <= phi_max <= pi, got ({phi_min}, {phi_max})"
        )));
    }
    if phi_min == phi_max {
        return Err(Error::Domain("angle interval must have positive length".into()));
    }
    let width = phi_max - phi_min;
    let row: Vec<Result<C64>> = exec::map_indexed(parallel, n, |delta| {
        if delta == 0 {
            return Ok(C64::new(1.0, 0.0));
        }
        let z = 2.0 * PI * spacing_factor * delta as f64;
        let (value, _) = integrate_oscillatory(
            |x| {
                let (s, c) = (z * x.cos()).sin_cos();
                C64::new(c, s)
            },
            phi_min,
            phi_max,
            z,
            quad_tol,
        )?;
        Ok(value / width)
    });
    row.into_iter().collect()
}

/// Extended Jakes profile: `R_j = Theta_j^(1/2)` where `Theta_j` is the
/// Toeplitz angular-average correlation of the receive array for the
/// transmitter's angular spread.
///
/// `intervals` holds the `M` distinct spreads; `assignment` maps
/// transmitters onto them (cyclic by default). The paper's antenna spacing
/// `d_kl = 2 lambda (k - l)` corresponds to `spacing_factor = 2`.
pub fn make_jakes_profile(
    n_rx: usize,
    n_tx: usize,
    spacing_factor: f64,
    intervals: &[AngleInterval],
    assignment: Option<&[usize]>,
    quad_tol: f64,
) -> Result<CorrelationProfile> {
    if intervals.is_empty() {
        return Err(Error::Domain("need at least one angle interval".into()));
    }
    let assignment: Vec<usize> = match assignment {
        Some(a) => a.to_vec(),
        None => (0..n_tx).map(|j| j % intervals.len()).collect(),
    };
    let parallel = exec::parallel_available();
    let mut factors = Vec::with_capacity(intervals.len());
    for &interval in intervals {
        let row = jakes_correlation_row(n_rx, spacing_factor, interval, quad_tol, parallel)?;
        let theta = CMat::from_fn(n_rx, n_rx, |k, l| {
            if k >= l { row[k - l] } else { row[l - k].conj() }
        });
        factors.push(psd_sqrt(&theta)?);
    }
    CorrelationProfile::from_distinct_factors(n_tx, factors, assignment)
}

/// Grouped MIMO multiple-access profile.
///
/// Group `m` contributes `K_m` transmitters with
/// `R_j = sqrt([tx_m]_ii) * rx_m^(1/2)`; all of them share the base matrix
/// `rx_m^(1/2)` and only differ by the recorded scale. `tx_correlations`
/// must be nonnegative diagonal.
pub fn make_mimo_mac_profile(
    rx_correlations: &[CMat],
    tx_correlations: &[DMatrix<f64>],
) -> Result<CorrelationProfile> {
    if rx_correlations.len() != tx_correlations.len() {
        return Err(Error::Domain(format!(
            "got {} receive and {} transmit correlation matrices",
            rx_correlations.len(),
            tx_correlations.len()
        )));
    }
    if rx_correlations.is_empty() {
        return Err(Error::Domain("need at least one group".into()));
    }
    let n_rx = rx_correlations[0].nrows();
    let mut bases = Vec::with_capacity(rx_correlations.len());
    for (m, rx) in rx_correlations.iter().enumerate() {
        if rx.nrows() != n_rx || rx.ncols() != n_rx {
            return Err(Error::Domain(format!(
                "receive correlation {m} is {}x{}, expected {n_rx}x{n_rx}",
                rx.nrows(),
                rx.ncols()
            )));
        }
        bases.push(psd_sqrt(rx)?);
    }

    let mut distinct: Vec<ScaledBase> = Vec::new();
    let mut seen: HashMap<(usize, u64), usize> = HashMap::new();
    let mut assignment = Vec::new();
    for (m, tx) in tx_correlations.iter().enumerate() {
        let k_m = tx.nrows();
        if tx.ncols() != k_m || k_m == 0 {
            return Err(Error::Domain(format!("transmit correlation {m} must be square and non-empty")));
        }
        for i in 0..k_m {
            for j in 0..k_m {
                if i != j && tx[(i, j)] != 0.0 {
                    return Err(Error::Domain(format!(
                        "transmit correlation {m} must be diagonal, entry ({i},{j}) = {}",
                        tx[(i, j)]
                    )));
                }
            }
        }
        for i in 0..k_m {
            let p = tx[(i, i)];
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::Domain(format!(
                    "transmit correlation {m} has invalid diagonal entry {p}"
                )));
            }
            let scale = p.sqrt();
            let idx = *seen.entry((m, scale.to_bits())).or_insert_with(|| {
                distinct.push(ScaledBase { base: m, scale });
                distinct.len() - 1
            });
            assignment.push(idx);
        }
    }
    let n_tx = assignment.len();
    CorrelationProfile::from_scaled_bases(n_tx, bases, distinct, assignment)
}

/// One seeded channel draw with cached Gram matrices.
#[derive(Debug)]
pub struct ChannelRealization {
    h: CMat,
    seed: SeedSpec,
    law: EntryLaw,
    gram: OnceLock<CMat>,
    tx_gram: OnceLock<CMat>,
}

impl ChannelRealization {
    pub fn matrix(&self) -> &CMat {
        &self.h
    }

    pub fn n_rx(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.h.ncols()
    }

    pub fn seed(&self) -> SeedSpec {
        self.seed
    }

    pub fn entry_law(&self) -> EntryLaw {
        self.law
    }

    pub fn column(&self, k: usize) -> CVec {
        CVec::from_column_slice(self.h.column(k).as_slice())
    }

    /// `B = H H^H`, computed once and cached.
    pub fn gram(&self) -> &CMat {
        self.gram.get_or_init(|| linalg::gram_rx(&self.h))
    }

    /// `G = H^H H` (`K x K`), computed once and cached. Shares the nonzero
    /// spectrum with `B`, which makes trace powers cheap when `K < N`.
    pub fn tx_gram(&self) -> &CMat {
        self.tx_gram.get_or_init(|| linalg::gram_tx(&self.h))
    }

    /// Wraps an explicit matrix (tests, replays). Seed metadata is kept for
    /// attribution only.
    pub fn from_matrix(h: CMat, seed: SeedSpec, law: EntryLaw) -> Self {
        ChannelRealization {
            h,
            seed,
            law,
            gram: OnceLock::new(),
            tx_gram: OnceLock::new(),
        }
    }
}

/// Draws the raw i.i.d. entry matrix `W` (`N x K`) for a seed: entries are
/// generated column by column, so any column is reconstructible given the
/// seed alone.
pub fn draw_entry_matrix(n_rx: usize, n_tx: usize, seed: SeedSpec, law: EntryLaw) -> CMat {
    let mut rng = seed.rng();
    let mut w = CMat::zeros(n_rx, n_tx);
    for j in 0..n_tx {
        for i in 0..n_rx {
            w[(i, j)] = law.sample(&mut rng);
        }
    }
    w
}

/// One channel draw: `h_j = (1/sqrt(K)) R_j w_j`, deterministic in `seed`.
pub fn draw_channel(profile: &CorrelationProfile, seed: SeedSpec, law: EntryLaw) -> ChannelRealization {
    let (n, k) = (profile.n_rx, profile.n_tx);
    let w = draw_entry_matrix(n, k, seed, law);
    let inv_sqrt_k = 1.0 / (k as f64).sqrt();

    // One gemm per base factor over the columns it shapes.
    let mut columns_of_base: Vec<Vec<usize>> = vec![Vec::new(); profile.bases.len()];
    for (j, &m) in profile.assignment.iter().enumerate() {
        columns_of_base[profile.distinct[m].base].push(j);
    }

    let mut h = CMat::zeros(n, k);
    for (b, cols) in columns_of_base.iter().enumerate() {
        if cols.is_empty() {
            continue;
        }
        let mut wb = CMat::zeros(n, cols.len());
        for (c, &j) in cols.iter().enumerate() {
            wb.column_mut(c).copy_from(&w.column(j));
        }
        let shaped = linalg::matmul(&profile.bases[b], &wb);
        for (c, &j) in cols.iter().enumerate() {
            let scale = profile.distinct[profile.assignment[j]].scale * inv_sqrt_k;
            h.column_mut(j)
                .zip_apply(&shaped.column(c), |out, v| *out = v * scale);
        }
    }
    ChannelRealization {
        h,
        seed,
        law,
        gram: OnceLock::new(),
        tx_gram: OnceLock::new(),
    }
}

// --- serialization -----------------------------------------------------

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    rows: usize,
    cols: usize,
    /// Row-major `(re, im)` pairs.
    data: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct ProfileFile {
    n_rx: usize,
    n_tx: usize,
    assignment: Vec<usize>,
    matrices: Vec<MatrixFile>,
}

fn matrix_to_file(m: &CMat) -> MatrixFile {
    let mut data = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            data.push((v.re, v.im));
        }
    }
    MatrixFile { rows: m.nrows(), cols: m.ncols(), data }
}

fn matrix_from_file(f: &MatrixFile) -> Result<CMat> {
    if f.data.len() != f.rows * f.cols {
        return Err(Error::Domain(format!(
            "matrix payload has {} entries for a {}x{} shape",
            f.data.len(),
            f.rows,
            f.cols
        )));
    }
    Ok(CMat::from_fn(f.rows, f.cols, |i, j| {
        let (re, im) = f.data[i * f.cols + j];
        C64::new(re, im)
    }))
}

/// Serializes a profile to the documented `.profile.json` container:
/// dimensions, assignment, and the `M` distinct factor matrices row-major as
/// `(re, im)` pairs. Scaled shared bases are materialized on save.
pub fn save_profile(profile: &CorrelationProfile, path: &Path) -> Result<()> {
    let file = ProfileFile {
        n_rx: profile.n_rx,
        n_tx: profile.n_tx,
        assignment: profile.assignment.clone(),
        matrices: (0..profile.num_distinct())
            .map(|m| matrix_to_file(&profile.distinct_factor(m)))
            .collect(),
    };
    let json = serde_json::to_string_pretty(&file)?;
    std::fs::write(path, json)?;
    Ok(())
}

/// Loads a `.profile.json` container written by [`save_profile`].
pub fn load_profile(path: &Path) -> Result<CorrelationProfile> {
    let file: ProfileFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let factors = file.matrices.iter().map(matrix_from_file).collect::<Result<Vec<_>>>()?;
    for f in &factors {
        if f.nrows() != file.n_rx {
            return Err(Error::Domain(format!(
                "profile file dimension mismatch: matrix is {}x{}, n_rx = {}",
                f.nrows(),
                f.ncols(),
                file.n_rx
            )));
        }
    }
    CorrelationProfile::from_distinct_factors(file.n_tx, factors, file.assignment)
}
