//! Property tests for the structural invariants that hold for *any* valid
//! input, not just the worked examples.

use polydet::channel::{self, CorrelationProfile};
use polydet::detect::{self, DetectorWeights};
use polydet::linalg::{self, CMat};
use polydet::moments::{self, Provenance};
use polydet::rng::{EntryLaw, SeedSpec};
use proptest::prelude::*;

fn random_psd(n: usize, seed: u64) -> CMat {
    let mut rng = SeedSpec::profile(seed).rng();
    let x = CMat::from_fn(n, n, |_, _| polydet::rng::standard_complex(&mut rng));
    linalg::gram_rx(&x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// psd_sqrt squares back to its argument for any random PSD matrix.
    #[test]
    fn psd_sqrt_roundtrip(n in 1usize..7, seed in 0u64..1_000_000) {
        let theta = random_psd(n, seed);
        let root = channel::psd_sqrt(&theta).unwrap();
        let back = linalg::matmul(&root, &root);
        let norm = theta.norm().max(1e-300);
        prop_assert!((back - &theta).norm() <= 1e-10 * norm);
        prop_assert!(linalg::herm_asymmetry(&root) <= 1e-12);
    }

    /// Angular-average correlation rows: exactly 1 at offset zero, modulus
    /// at most 1 everywhere (averages of a unit-modulus integrand), and the
    /// implied Toeplitz matrix is PSD to clip tolerance.
    #[test]
    fn jakes_row_is_a_correlation_sequence(
        phi_min in -std::f64::consts::PI..-0.05,
        phi_max in 0.05..std::f64::consts::PI,
        spacing in 0.25f64..3.0,
    ) {
        let row = channel::jakes_correlation_row(5, spacing, (phi_min, phi_max), 1e-9, false).unwrap();
        prop_assert_eq!(row[0], polydet::C64::new(1.0, 0.0));
        for v in &row {
            prop_assert!(v.norm() <= 1.0 + 1e-9);
        }
        let theta = CMat::from_fn(5, 5, |k, l| if k >= l { row[k - l] } else { row[l - k].conj() });
        prop_assert!(channel::psd_sqrt(&theta).is_ok());
    }

    /// SINR is invariant under rescaling of the weight vector.
    #[test]
    fn sinr_scale_invariance(seed in 0u64..1_000_000, scale in prop::sample::select(vec![-3.0, -0.1, 0.5, 7.0])) {
        let profile = CorrelationProfile::identity(6, 4).unwrap();
        let ch = channel::draw_channel(&profile, SeedSpec::trial(seed, 0), EntryLaw::Gaussian);
        let w = DetectorWeights {
            coefficients: vec![0.8, -0.15, 0.02],
            noise_power: 0.5,
            provenance: Provenance::Empirical,
            condition_estimate: 1.0,
        };
        let scaled = DetectorWeights {
            coefficients: w.coefficients.iter().map(|v| v * scale).collect(),
            ..w.clone()
        };
        let g1 = detect::sinr_exact(&ch, &w, 1).unwrap().gamma;
        let g2 = detect::sinr_exact(&ch, &scaled, 1).unwrap().gamma;
        prop_assert!((g1 - g2).abs() <= 1e-9 * g1);
    }

    /// Solved weights always satisfy their defining linear system, whenever
    /// the solve is accepted at all; moment sequences come from genuine
    /// spectra so the system is well posed.
    #[test]
    fn weight_solve_residual(seed in 0u64..1_000_000, l in 1usize..4, sigma2 in 0.05f64..4.0) {
        let profile = CorrelationProfile::identity(8, 5).unwrap();
        let ch = channel::draw_channel(&profile, SeedSpec::trial(seed, 1), EntryLaw::Gaussian);
        let table = moments::empirical_moments_channel(&ch, 2 * l);
        let (phi_mat, phi_vec) = detect::build_weight_system(&table, sigma2, l).unwrap();
        if let Ok((w, _cond)) = detect::solve_weights(&phi_mat, &phi_vec) {
            let residual = (&phi_vec - &phi_mat * nalgebra::DVector::from_vec(w)).norm();
            prop_assert!(residual <= 1e-10 * phi_vec.norm().max(1e-300));
        }
    }

    /// Deterministic moment tables are genuine moment sequences: the Hankel
    /// block stays PSD to tolerance.
    #[test]
    fn asymptotic_hankel_psd(seed in 0u64..1_000_000, n_tx in 2usize..7) {
        let mut rng = SeedSpec::profile(seed).rng();
        let intervals = channel::draw_angle_intervals(2, &mut rng);
        let profile = channel::make_jakes_profile(4, n_tx, 2.0, &intervals, None, 1e-8).unwrap();
        let table = moments::global_moments(&moments::compute_recursion(&profile, 6));
        let min_eig = table.hankel_min_eigenvalue(3).unwrap();
        let trace: f64 = (1..=3).map(|i| table.global[2 * i]).sum();
        prop_assert!(min_eig >= -1e-8 * trace);
    }
}
