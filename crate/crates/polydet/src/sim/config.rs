//! Experiment configuration: a JSON document mirroring [`ExperimentConfig`].
//!
//! Unknown fields are rejected so typos fail loudly. Every run is fully
//! determined by the config plus its master seed; the SHA-256 digest of the
//! canonical JSON is stamped into output headers for attribution.

use crate::error::{Error, Result};
use crate::rng::EntryLaw;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

fn default_spacing() -> f64 {
    2.0
}

fn default_quad_tol() -> f64 {
    crate::channel::JAKES_QUAD_TOL
}

fn default_distance_min() -> f64 {
    0.5
}

fn default_distance_max() -> f64 {
    2.0
}

fn default_pathloss() -> f64 {
    2.0
}

/// One MIMO-MAC transmitter group.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MacGroup {
    /// Number of transmit antennas `K_m` in the group.
    pub antennas: usize,
    /// Exponential receive-correlation coefficient `rho`; the receive
    /// correlation matrix is `rho^|i-j|`.
    pub rx_exp_corr: f64,
    /// Per-antenna transmit powers (diagonal of the transmit correlation);
    /// unit powers when omitted.
    #[serde(default)]
    pub tx_powers: Option<Vec<f64>>,
}

/// Scenario selector with per-scenario parameters.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Scenario {
    /// `R_j = I` for all transmitters; the Marchenko–Pastur benchmark.
    IdentityMp,
    /// Extended Jakes spatial correlation with angular spreads drawn from
    /// the profile stream of the master seed.
    Jakes {
        #[serde(default = "default_spacing")]
        spacing_factor: f64,
        /// Number of distinct angular spreads; transmitters are assigned
        /// cyclically. Defaults to one spread per transmitter.
        #[serde(default)]
        num_intervals: Option<usize>,
        #[serde(default = "default_quad_tol")]
        quadrature_tol: f64,
    },
    /// Per-antenna path loss with distances drawn uniformly from
    /// `[distance_min, distance_max)` (normalized units).
    DistributedAntenna {
        #[serde(default = "default_pathloss")]
        pathloss_exponent: f64,
        #[serde(default = "default_distance_min")]
        distance_min: f64,
        #[serde(default = "default_distance_max")]
        distance_max: f64,
        /// Per-transmitter powers; unit powers when omitted.
        #[serde(default)]
        powers: Option<Vec<f64>>,
    },
    /// Grouped MIMO multiple access; `n_tx` must equal the total antenna
    /// count of the groups.
    MimoMac { groups: Vec<MacGroup> },
}

/// Which moments feed the expansion weights.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum WeightSource {
    /// Deterministic moments, computed once per profile (the low-complexity
    /// mode of operation).
    #[default]
    Asymptotic,
    /// Per-realization empirical moments (the exact MSE-optimal weights).
    Empirical,
}

/// How per-trial SINRs are evaluated.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SinrEval {
    /// Closed form in the realized quadratic forms `[B^n]_kk`.
    #[default]
    ExactFormula,
    /// Deterministic approximations only; no channels are drawn.
    Asymptotic,
    /// Simulated symbol/noise samples per trial (slow; sanity checks).
    MonteCarlo,
}

fn default_trials() -> usize {
    1000
}

fn default_seed() -> u64 {
    1
}

fn default_l_values() -> Vec<usize> {
    vec![2, 3, 6]
}

fn default_snr_grid() -> Vec<f64> {
    vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0]
}

fn default_mc_samples() -> usize {
    10_000
}

fn default_parallel() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// Receive antennas `N`.
    pub n_rx: usize,
    /// Transmitters `K`.
    pub n_tx: usize,
    /// Expansion ranks to sweep.
    #[serde(default = "default_l_values")]
    pub l_values: Vec<usize>,
    #[serde(default = "default_snr_grid")]
    pub snr_grid_db: Vec<f64>,
    /// Monte Carlo channel draws per SNR point.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Master seed; all streams derive from it.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub weight_source: WeightSource,
    #[serde(default)]
    pub sinr_eval: SinrEval,
    /// Explicit user subset for per-user reporting (default: all users).
    #[serde(default)]
    pub users: Option<Vec<usize>>,
    /// Evenly spaced sample of this many users (alternative to `users`).
    #[serde(default)]
    pub user_sample: Option<usize>,
    /// Samples per trial when `sinr_eval` is `monte-carlo`.
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default)]
    pub entry_law: EntryLaw,
    /// Distribute trials over the rayon pool when compiled in. Outputs are
    /// byte-identical either way.
    #[serde(default = "default_parallel")]
    pub parallel: bool,
    /// Output directory for CSV files (default: current directory).
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rx == 0 || self.n_tx == 0 {
            return Err(Error::Config("n_rx and n_tx must be at least 1".into()));
        }
        if self.trials == 0 && self.sinr_eval != SinrEval::Asymptotic {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.l_values.is_empty() {
            return Err(Error::Config("l_values must not be empty".into()));
        }
        let r = self.n_rx.min(self.n_tx);
        for &l in &self.l_values {
            if l == 0 || l > r {
                return Err(Error::Config(format!(
                    "filter rank {l} outside 1..=min(N, K) = {r}"
                )));
            }
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::Config("snr_grid_db must not be empty".into()));
        }
        if self.snr_grid_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("snr_grid_db entries must be finite".into()));
        }
        if self.users.is_some() && self.user_sample.is_some() {
            return Err(Error::Config("set either users or user_sample, not both".into()));
        }
        if let Some(users) = &self.users {
            if users.is_empty() {
                return Err(Error::Config("users must not be empty when given".into()));
            }
            if let Some(&bad) = users.iter().find(|&&u| u >= self.n_tx) {
                return Err(Error::Config(format!(
                    "user index {bad} out of range for {} transmitters",
                    self.n_tx
                )));
            }
        }
        if let Some(s) = self.user_sample {
            if s == 0 || s > self.n_tx {
                return Err(Error::Config(format!(
                    "user_sample {s} outside 1..={}",
                    self.n_tx
                )));
            }
        }
        if self.mc_samples == 0 && self.sinr_eval == SinrEval::MonteCarlo {
            return Err(Error::Config("mc_samples must be at least 1".into()));
        }
        match &self.scenario {
            Scenario::Jakes { num_intervals, quadrature_tol, .. } => {
                if let Some(m) = num_intervals {
                    if *m == 0 || *m > self.n_tx {
                        return Err(Error::Config(format!(
                            "num_intervals {m} outside 1..={}",
                            self.n_tx
                        )));
                    }
                }
                if !(*quadrature_tol > 0.0) {
                    return Err(Error::Config("quadrature_tol must be positive".into()));
                }
            }
            Scenario::DistributedAntenna { distance_min, distance_max, powers, .. } => {
                if !(*distance_min > 0.0 && *distance_max > *distance_min) {
                    return Err(Error::Config(
                        "need 0 < distance_min < distance_max".into(),
                    ));
                }
                if let Some(p) = powers {
                    if p.len() != self.n_tx {
                        return Err(Error::Config(format!(
                            "got {} powers for {} transmitters",
                            p.len(),
                            self.n_tx
                        )));
                    }
                }
            }
            Scenario::MimoMac { groups } => {
                let total: usize = groups.iter().map(|g| g.antennas).sum();
                if total != self.n_tx {
                    return Err(Error::Config(format!(
                        "group antennas sum to {total}, n_tx is {}",
                        self.n_tx
                    )));
                }
                for (i, g) in groups.iter().enumerate() {
                    if g.antennas == 0 {
                        return Err(Error::Config(format!("group {i} has no antennas")));
                    }
                    if !(g.rx_exp_corr.abs() < 1.0) {
                        return Err(Error::Config(format!(
                            "group {i}: |rx_exp_corr| must be < 1, got {}",
                            g.rx_exp_corr
                        )));
                    }
                    if let Some(p) = &g.tx_powers {
                        if p.len() != g.antennas {
                            return Err(Error::Config(format!(
                                "group {i}: {} powers for {} antennas",
                                p.len(),
                                g.antennas
                            )));
                        }
                    }
                }
            }
            Scenario::IdentityMp => {}
        }
        Ok(())
    }

    /// Users to report on: explicit list, evenly spaced sample, or everyone.
    pub fn selected_users(&self) -> Vec<usize> {
        if let Some(users) = &self.users {
            let mut u = users.clone();
            u.sort_unstable();
            u.dedup();
            return u;
        }
        if let Some(s) = self.user_sample {
            return (0..s).map(|i| i * self.n_tx / s).collect();
        }
        (0..self.n_tx).collect()
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut h = Sha256::new();
        h.update(json.as_bytes());
        let out = h.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}
