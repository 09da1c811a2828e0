//! Correlation-profile construction from a scenario config.
//!
//! Random scenario ingredients (angular spreads, distances) come from the
//! profile stream of the master seed, so a profile is drawn once per config
//! and shared by every trial and SNR point of a sweep.

use super::config::{ExperimentConfig, MacGroup, Scenario};
use crate::channel::{
    CorrelationProfile, draw_angle_intervals, make_distributed_antenna_profile,
    make_jakes_profile, make_mimo_mac_profile,
};
use crate::error::Result;
use crate::linalg::{C64, CMat};
use crate::rng::SeedSpec;
use nalgebra::DMatrix;
use rand::Rng;

pub fn build_profile(cfg: &ExperimentConfig) -> Result<CorrelationProfile> {
    let mut rng = SeedSpec::profile(cfg.seed).rng();
    match &cfg.scenario {
        Scenario::IdentityMp => CorrelationProfile::identity(cfg.n_rx, cfg.n_tx),
        Scenario::Jakes { spacing_factor, num_intervals, quadrature_tol } => {
            let m = num_intervals.unwrap_or(cfg.n_tx);
            let intervals = draw_angle_intervals(m, &mut rng);
            make_jakes_profile(cfg.n_rx, cfg.n_tx, *spacing_factor, &intervals, None, *quadrature_tol)
        }
        Scenario::DistributedAntenna { pathloss_exponent, distance_min, distance_max, powers } => {
            let d = DMatrix::from_fn(cfg.n_rx, cfg.n_tx, |_, _| {
                rng.random_range(*distance_min..*distance_max)
            });
            let powers = powers.clone().unwrap_or_else(|| vec![1.0; cfg.n_tx]);
            make_distributed_antenna_profile(&d, &powers, *pathloss_exponent)
        }
        Scenario::MimoMac { groups } => {
            let rx: Vec<CMat> = groups.iter().map(|g| exp_corr_matrix(cfg.n_rx, g.rx_exp_corr)).collect();
            let tx: Vec<DMatrix<f64>> = groups.iter().map(group_tx_matrix).collect();
            make_mimo_mac_profile(&rx, &tx)
        }
    }
}

/// Exponential receive correlation `rho^|i-j|`; Hermitian PSD for |rho| < 1.
fn exp_corr_matrix(n: usize, rho: f64) -> CMat {
    CMat::from_fn(n, n, |i, j| {
        C64::new(rho.powi((i as i32 - j as i32).abs()), 0.0)
    })
}

fn group_tx_matrix(g: &MacGroup) -> DMatrix<f64> {
    match &g.tx_powers {
        Some(p) => DMatrix::from_diagonal(&nalgebra::DVector::from_vec(p.clone())),
        None => DMatrix::identity(g.antennas, g.antennas),
    }
}
