//! Moment validation report: deterministic approximations against Monte
//! Carlo statistics of the realized moments, globally and per user.

use super::config::ExperimentConfig;
use super::scenario::build_profile;
use crate::error::Result;
use crate::exec;
use crate::moments;
use crate::rng::SeedSpec;

/// One report line; `user` is `None` for globally averaged moments.
#[derive(Clone, Debug)]
pub struct MomentReportRow {
    pub n: usize,
    pub user: Option<usize>,
    pub asymptotic: f64,
    pub empirical_mean: f64,
    pub empirical_std: f64,
    /// `|empirical_mean - asymptotic| / |asymptotic|` (NaN when the
    /// reference is zero).
    pub rel_err: f64,
}

#[derive(Clone, Debug)]
pub struct MomentReport {
    pub rows: Vec<MomentReportRow>,
    pub config_digest: String,
    pub n_max: usize,
}

/// Runs the report: one profile draw, `cfg.trials` channel draws, moments up
/// to order `n_max` for the global trace average and the selected users.
pub fn run_moment_report(cfg: &ExperimentConfig, n_max: usize) -> Result<MomentReport> {
    cfg.validate()?;
    let profile = build_profile(cfg)?;
    let users = cfg.selected_users();

    let state = moments::compute_recursion(&profile, n_max);
    let mu_bar = moments::global_moments(&state);
    let per_user_bar = moments::per_user_moments(&state, n_max)?;

    // Per-trial moment vectors, one global then one per selected user.
    let per_trial: Vec<Vec<f64>> = exec::map_indexed(cfg.parallel, cfg.trials, |t| {
        let ch = crate::channel::draw_channel(&profile, SeedSpec::trial(cfg.seed, t), cfg.entry_law);
        let table = moments::empirical_moments_channel(&ch, n_max);
        let user_rows = table.per_user.as_ref().expect("channel route fills per-user");
        let mut flat = Vec::with_capacity((users.len() + 1) * (n_max + 1));
        flat.extend_from_slice(&table.global);
        for &k in &users {
            flat.extend_from_slice(&user_rows[k]);
        }
        flat
    });

    let width = (users.len() + 1) * (n_max + 1);
    let mut sum = vec![0.0f64; width];
    let mut sum_sq = vec![0.0f64; width];
    for trial in &per_trial {
        for (i, &v) in trial.iter().enumerate() {
            sum[i] += v;
            sum_sq[i] += v * v;
        }
    }
    let t = cfg.trials as f64;
    let stat = |i: usize| -> (f64, f64) {
        let mean = sum[i] / t;
        let var = if cfg.trials > 1 {
            ((sum_sq[i] - sum[i] * sum[i] / t) / (t - 1.0)).max(0.0)
        } else {
            0.0
        };
        (mean, var.sqrt())
    };
    let rel = |mean: f64, reference: f64| -> f64 {
        if reference == 0.0 { f64::NAN } else { ((mean - reference) / reference).abs() }
    };

    let mut rows = Vec::new();
    for n in 0..=n_max {
        let (mean, std) = stat(n);
        rows.push(MomentReportRow {
            n,
            user: None,
            asymptotic: mu_bar.global[n],
            empirical_mean: mean,
            empirical_std: std,
            rel_err: rel(mean, mu_bar.global[n]),
        });
    }
    for (ui, &k) in users.iter().enumerate() {
        let base = (ui + 1) * (n_max + 1);
        for n in 0..=n_max {
            let (mean, std) = stat(base + n);
            rows.push(MomentReportRow {
                n,
                user: Some(k),
                asymptotic: per_user_bar[k][n],
                empirical_mean: mean,
                empirical_std: std,
                rel_err: rel(mean, per_user_bar[k][n]),
            });
        }
    }

    Ok(MomentReport { rows, config_digest: cfg.digest(), n_max })
}
