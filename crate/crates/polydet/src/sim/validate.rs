//! Self-validation harness: the oracle suites behind `polydet validate`.
//!
//! Each suite checks one pillar of the numeric stack against an independent
//! reference (closed forms, the literal-form recursion, Monte Carlo). The
//! injection option perturbs the quantity under test so the harness itself
//! can be shown to catch regressions.

use crate::channel::{self, CorrelationProfile};
use crate::detect;
use crate::error::Result;
use crate::fixed_point;
use crate::linalg;
use crate::moments;
use crate::rng::{EntryLaw, SeedSpec};

#[derive(Clone, Copy, Debug, Default)]
pub struct ValidateOptions {
    /// Test mode: multiplies the second-order scaled moment by `1 + eps`
    /// before the recursion cross-check, which must then fail.
    pub perturb_recursion: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub suites: Vec<SuiteOutcome>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.suites {
            let tag = if s.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("[{tag}] {}: {}\n", s.name, s.details));
        }
        let summary = if self.passed() { "all suites passed" } else { "validation FAILED" };
        out.push_str(&format!("{summary}\n"));
        out
    }
}

fn suite(name: &'static str, result: Result<(bool, String)>) -> SuiteOutcome {
    match result {
        Ok((passed, details)) => SuiteOutcome { name, passed, details },
        Err(e) => SuiteOutcome { name, passed: false, details: format!("error: {e}") },
    }
}

/// Runs every suite; failures do not abort later suites.
pub fn run_validate(opts: &ValidateOptions) -> ValidationReport {
    ValidationReport {
        suites: vec![
            suite("mp-moment-oracle", mp_moment_oracle()),
            suite("scaled-vs-literal-recursion", recursion_cross_check(opts)),
            suite("fixed-point-residual", fixed_point_residual()),
            suite("stieltjes-monte-carlo", stieltjes_monte_carlo()),
            suite("sinr-monte-carlo", sinr_monte_carlo()),
            suite("weights-and-ber", weights_and_ber()),
        ],
    }
}

/// Identity profiles against closed-form Marchenko–Pastur moments for four
/// aspect ratios, orders up to 8.
fn mp_moment_oracle() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for (n_rx, n_tx) in [(2usize, 8usize), (2, 4), (4, 4), (8, 4)] {
        let c = n_rx as f64 / n_tx as f64;
        let profile = CorrelationProfile::identity(n_rx, n_tx)?;
        let table = moments::global_moments(&moments::compute_recursion(&profile, 8));
        for n in 0..=8 {
            let expected = moments::marchenko_pastur_moment(c, n);
            worst = worst.max(((table.global[n] - expected) / expected).abs());
        }
    }
    Ok((worst <= 1e-9, format!("max relative error {worst:.3e} (tol 1e-9)")))
}

/// Scaled recursion against the literal factorial recursion on random PSD
/// profiles, orders up to 6.
fn recursion_cross_check(opts: &ValidateOptions) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for (seed, n_rx, n_tx, m) in [(101u64, 5usize, 7usize, 2usize), (102, 8, 6, 3), (103, 6, 6, 1)] {
        let profile = random_psd_profile(n_rx, n_tx, m, seed)?;
        let mut scaled = moments::global_moments(&moments::compute_recursion(&profile, 6)).global;
        if let Some(eps) = opts.perturb_recursion {
            scaled[2] *= 1.0 + eps;
        }
        let literal = moments::reference::literal_recursion_moments(&profile, 6);
        for n in 0..=6 {
            let denom = literal[n].abs().max(1e-300);
            worst = worst.max((scaled[n] - literal[n]).abs() / denom);
        }
    }
    Ok((worst <= 1e-12, format!("max relative deviation {worst:.3e} (tol 1e-12)")))
}

fn random_psd_profile(n_rx: usize, n_tx: usize, m: usize, seed: u64) -> Result<CorrelationProfile> {
    let mut rng = SeedSpec::profile(seed).rng();
    let factors: Vec<_> = (0..m)
        .map(|_| {
            let x = crate::CMat::from_fn(n_rx, n_rx, |_, _| crate::rng::standard_complex(&mut rng));
            channel::psd_sqrt(&linalg::gram_rx(&x))
        })
        .collect::<Result<_>>()?;
    let assignment = (0..n_tx).map(|j| j % m).collect();
    CorrelationProfile::from_distinct_factors(n_tx, factors, assignment)
}

/// Fixed-point defining-equation residuals over the experiment SNR grid on a
/// full-size Jakes profile.
fn fixed_point_residual() -> Result<(bool, String)> {
    let mut rng = SeedSpec::profile(202).rng();
    let intervals = channel::draw_angle_intervals(40, &mut rng);
    let profile = channel::make_jakes_profile(100, 40, 2.0, &intervals, None, channel::JAKES_QUAD_TOL)?;
    let mut worst = 0.0f64;
    for snr_db in [-10.0f64, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0] {
        let sigma2 = 10f64.powf(-snr_db / 10.0);
        let sol = fixed_point::solve(&profile, -sigma2)?;
        worst = worst.max(sol.residual());
    }
    Ok((worst <= 1e-10, format!("max defining residual {worst:.3e} (tol 1e-10)")))
}

/// `m(-s^2)` against the Monte Carlo average of `(1/N) tr (B + s^2 I)^-1` at
/// (N, K) = (256, 102).
fn stieltjes_monte_carlo() -> Result<(bool, String)> {
    let mut rng = SeedSpec::profile(203).rng();
    let intervals = channel::draw_angle_intervals(3, &mut rng);
    let profile = channel::make_jakes_profile(256, 102, 2.0, &intervals, None, channel::JAKES_QUAD_TOL)?;
    let sigma2 = 0.1;
    let sol = fixed_point::solve(&profile, -sigma2)?;
    let m_det = fixed_point::stieltjes_m(&sol);

    let draws = 12;
    let acc: f64 = crate::exec::map_indexed(exec_parallel(), draws, |t| {
        let ch = channel::draw_channel(&profile, SeedSpec::trial(203, t), EntryLaw::Gaussian);
        let mut a = ch.gram().clone();
        for i in 0..a.nrows() {
            a[(i, i)] += crate::C64::new(sigma2, 0.0);
        }
        let inv = linalg::inverse_hpd(&a).expect("HPD");
        linalg::trace_re(&inv) / 256.0
    })
    .into_iter()
    .sum();
    let m_mc = acc / draws as f64;
    let rel = ((m_mc - m_det) / m_det).abs();
    Ok((rel <= 0.02, format!("deterministic {m_det:.6}, Monte Carlo {m_mc:.6}, rel {rel:.3e} (tol 2e-2)")))
}

fn exec_parallel() -> bool {
    cfg!(feature = "parallel")
}

/// Closed-form SINR against a simulated symbol/noise decomposition.
fn sinr_monte_carlo() -> Result<(bool, String)> {
    let profile = CorrelationProfile::identity(8, 4)?;
    let ch = channel::draw_channel(&profile, SeedSpec::trial(204, 0), EntryLaw::Gaussian);
    let sigma2 = 0.25;
    let table = moments::empirical_moments_channel(&ch, 4);
    let w = detect::weights_from_moments(&table, sigma2, 2)?;
    let k = 2;
    let exact = detect::sinr_exact(&ch, &w, k)?.gamma;
    let mc = detect::monte_carlo_sinr(&ch, &w, k, 1_000_000, SeedSpec::samples(204, 0), exec_parallel());
    let rel = ((mc - exact) / exact).abs();
    Ok((rel <= 0.01, format!("formula {exact:.6}, Monte Carlo {mc:.6}, rel {rel:.3e} (tol 1e-2)")))
}

/// Frozen weight-system example and the Gaussian tail function.
fn weights_and_ber() -> Result<(bool, String)> {
    let table = moments::MomentTable {
        global: vec![1.0, 1.0, 2.0, 5.0, 14.0],
        per_user: None,
        provenance: moments::Provenance::Asymptotic,
        n_rx: 64,
        n_tx: 64,
    };
    let (phi_mat, phi_vec) = detect::build_weight_system(&table, 1.0, 2)?;
    let (w, _) = detect::solve_weights(&phi_mat, &phi_vec)?;
    let ok_weights = (w[0] - 0.625).abs() <= 1e-12 && (w[1] + 0.125).abs() <= 1e-12;
    let residual = (&phi_vec - &phi_mat * nalgebra::DVector::from_vec(w.clone())).norm();
    let ok_residual = residual <= 1e-12;
    let ok_ber = (detect::ber_bpsk(1.0) - 0.15865525393145707).abs() <= 1e-9
        && detect::ber_bpsk(0.0) == 0.5;
    let passed = ok_weights && ok_residual && ok_ber;
    Ok((
        passed,
        format!(
            "weights ({:.6}, {:.6}), residual {residual:.3e}, Q(1) = {:.9}",
            w[0],
            w[1],
            detect::ber_bpsk(1.0)
        ),
    ))
}
