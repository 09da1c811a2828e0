//! Monte Carlo SNR sweeps.
//!
//! One sweep draws the correlation profile once, computes the deterministic
//! moment pipeline once, then evaluates matched/poly/LMMSE SINRs over
//! per-trial channel draws. Trials are embarrassingly parallel: trial `t`
//! always uses RNG stream `t`, per-trial results are collected in trial
//! order and reduced sequentially, so sweep outputs are byte-identical for
//! any worker count (including a fully sequential build).
//!
//! Numeric failures (a non-converging fixed point, a degenerate weight
//! system, a lost SINR denominator) mark the affected cells NaN and reduce
//! their `trials` count instead of aborting the sweep.

use super::config::{ExperimentConfig, SinrEval, WeightSource};
use super::scenario::build_profile;
use crate::channel::CorrelationProfile;
use crate::detect::{
    self, DetectionMethod, DetectorWeights, lmmse_sinr_all_users, monte_carlo_sinr,
    sinr_from_user_values, weights_from_moments,
};
use crate::error::Result;
use crate::exec;
use crate::fixed_point;
use crate::moments;
use crate::rng::SeedSpec;

/// Row owner: one transmitter or the pooled user ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UserTag {
    User(usize),
    Pooled,
}

impl std::fmt::Display for UserTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UserTag::User(k) => write!(f, "{k}"),
            UserTag::Pooled => write!(f, "all"),
        }
    }
}

/// One aggregated output cell of a sweep.
#[derive(Clone, Debug)]
pub struct ResultRow {
    pub snr_db: f64,
    pub method: DetectionMethod,
    pub user: UserTag,
    /// Mean SINR over contributing trials (deterministic value for the
    /// `*-asympt` methods).
    pub gamma_mean: f64,
    /// Sample standard deviation over trials (0 for deterministic rows).
    pub gamma_std: f64,
    /// Mean `Q(sqrt(gamma))` over contributing trials.
    pub ber: f64,
    /// Contributing trials; 0 marks a deterministic row; less than the
    /// configured count means some trials failed numerically.
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub config_digest: String,
    pub profile: CorrelationProfile,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Aggregation {
    PerUser,
    Pooled,
}

/// SINR-versus-SNR sweep with per-user rows.
pub fn run_sinr_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    run_sweep(cfg, Aggregation::PerUser)
}

/// BER-versus-SNR sweep pooled over the user ensemble.
pub fn run_ber_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    run_sweep(cfg, Aggregation::Pooled)
}

struct Cell {
    count: usize,
    sum: f64,
    sum_sq: f64,
    ber_sum: f64,
}

impl Cell {
    fn new() -> Self {
        Cell { count: 0, sum: 0.0, sum_sq: 0.0, ber_sum: 0.0 }
    }

    fn push(&mut self, gamma: f64) {
        if gamma.is_finite() {
            self.count += 1;
            self.sum += gamma;
            self.sum_sq += gamma * gamma;
            self.ber_sum += detect::ber_bpsk(gamma);
        }
    }

    fn merge_into_row(cells: &[&Cell], snr_db: f64, method: DetectionMethod, user: UserTag, seed: u64) -> ResultRow {
        let count: usize = cells.iter().map(|c| c.count).sum();
        let (sum, sum_sq, ber_sum) = cells.iter().fold((0.0, 0.0, 0.0), |(a, b, c), cell| {
            (a + cell.sum, b + cell.sum_sq, c + cell.ber_sum)
        });
        let (mean, std, ber) = if count == 0 {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            let mean = sum / count as f64;
            let var = if count > 1 {
                ((sum_sq - sum * sum / count as f64) / (count as f64 - 1.0)).max(0.0)
            } else {
                0.0
            };
            (mean, var.sqrt(), ber_sum / count as f64)
        };
        ResultRow { snr_db, method, user, gamma_mean: mean, gamma_std: std, ber, trials: count, seed }
    }
}

fn run_sweep(cfg: &ExperimentConfig, agg: Aggregation) -> Result<SweepOutput> {
    cfg.validate()?;
    let profile = build_profile(cfg)?;
    let config_digest = cfg.digest();

    let mut l_values = cfg.l_values.clone();
    l_values.sort_unstable();
    l_values.dedup();
    let l_max = *l_values.iter().max().expect("validated non-empty");
    let n_need = 2 * l_max;

    // Users evaluated per trial: the pooled aggregate needs everyone, the
    // per-user report only the selected subset.
    let eval_users: Vec<usize> = match agg {
        Aggregation::Pooled => (0..cfg.n_tx).collect(),
        Aggregation::PerUser => cfg.selected_users(),
    };
    let report_users: Vec<UserTag> = match agg {
        Aggregation::Pooled => vec![UserTag::Pooled],
        Aggregation::PerUser => eval_users.iter().map(|&k| UserTag::User(k)).collect(),
    };

    let snr_points: Vec<(f64, f64)> = cfg
        .snr_grid_db
        .iter()
        .map(|&db| (db, 10f64.powf(-db / 10.0)))
        .collect();

    // Deterministic pipeline: recursion, global and per-user moments, the
    // per-(snr, L) approximate weights, and the LMMSE fixed points.
    let state = moments::compute_recursion(&profile, n_need);
    let mu_bar = moments::global_moments(&state);
    let per_user_bar = moments::per_user_moments(&state, n_need)?;

    let w_bar: Vec<Vec<Option<DetectorWeights>>> = snr_points
        .iter()
        .map(|&(_, sigma2)| {
            l_values
                .iter()
                .map(|&l| weights_from_moments(&mu_bar, sigma2, l).ok())
                .collect()
        })
        .collect();

    let lmmse_bar: Vec<Option<fixed_point::FixedPointSolution>> = exec::map_indexed(
        cfg.parallel,
        snr_points.len(),
        |si| fixed_point::solve(&profile, -snr_points[si].1).ok(),
    );

    // Empirical methods in reporting order.
    let methods: Vec<DetectionMethod> = std::iter::once(DetectionMethod::Matched)
        .chain(l_values.iter().map(|&l| DetectionMethod::Poly { rank: l }))
        .chain(std::iter::once(DetectionMethod::Lmmse))
        .collect();
    let n_methods = methods.len();
    let n_users = eval_users.len();
    let cells_per_trial = snr_points.len() * n_methods * n_users;
    let cell_index = |si: usize, mi: usize, ui: usize| (si * n_methods + mi) * n_users + ui;

    let trials = if cfg.sinr_eval == SinrEval::Asymptotic { 0 } else { cfg.trials };

    // One gamma per cell per trial, NaN marking failures; collected in trial
    // order so the reduction never depends on scheduling.
    let per_trial: Vec<Vec<f64>> = exec::map_indexed(cfg.parallel, trials, |t| {
        let ch = crate::channel::draw_channel(&profile, SeedSpec::trial(cfg.seed, t), cfg.entry_law);
        let table = moments::empirical_moments_channel(&ch, n_need);
        let user_values = table.per_user.as_ref().expect("channel route fills per-user");

        let trial_weights: Vec<Vec<Option<DetectorWeights>>> = match cfg.weight_source {
            WeightSource::Asymptotic => Vec::new(),
            WeightSource::Empirical => snr_points
                .iter()
                .map(|&(_, sigma2)| {
                    l_values
                        .iter()
                        .map(|&l| weights_from_moments(&table, sigma2, l).ok())
                        .collect()
                })
                .collect(),
        };

        let mut gammas = vec![f64::NAN; cells_per_trial];
        for (si, &(_, sigma2)) in snr_points.iter().enumerate() {
            let lmmse = lmmse_sinr_all_users(&ch, sigma2).ok();
            for (mi, method) in methods.iter().enumerate() {
                match method {
                    DetectionMethod::Matched => {
                        for (ui, &k) in eval_users.iter().enumerate() {
                            let g = match cfg.sinr_eval {
                                SinrEval::MonteCarlo => monte_carlo_sinr(
                                    &ch,
                                    &DetectorWeights::matched(sigma2),
                                    k,
                                    cfg.mc_samples,
                                    SeedSpec::samples(cfg.seed, t),
                                    false,
                                ),
                                _ => sinr_from_user_values(&user_values[k], &[1.0], sigma2)
                                    .unwrap_or(f64::NAN),
                            };
                            gammas[cell_index(si, mi, ui)] = g;
                        }
                    }
                    DetectionMethod::Poly { rank } => {
                        let li = l_values.iter().position(|l| l == rank).expect("rank listed");
                        let w = match cfg.weight_source {
                            WeightSource::Asymptotic => w_bar[si][li].as_ref(),
                            WeightSource::Empirical => trial_weights[si][li].as_ref(),
                        };
                        let Some(w) = w else { continue };
                        for (ui, &k) in eval_users.iter().enumerate() {
                            let g = match cfg.sinr_eval {
                                SinrEval::MonteCarlo => monte_carlo_sinr(
                                    &ch,
                                    w,
                                    k,
                                    cfg.mc_samples,
                                    SeedSpec::samples(cfg.seed, t),
                                    false,
                                ),
                                _ => sinr_from_user_values(&user_values[k], &w.coefficients, sigma2)
                                    .unwrap_or(f64::NAN),
                            };
                            gammas[cell_index(si, mi, ui)] = g;
                        }
                    }
                    DetectionMethod::Lmmse => {
                        if let Some(all) = &lmmse {
                            for (ui, &k) in eval_users.iter().enumerate() {
                                gammas[cell_index(si, mi, ui)] = all[k];
                            }
                        }
                    }
                    _ => unreachable!("deterministic methods are not per-trial"),
                }
            }
        }
        gammas
    });

    // Ordered reduction.
    let mut cells: Vec<Cell> = (0..cells_per_trial).map(|_| Cell::new()).collect();
    for trial in &per_trial {
        for (cell, &g) in cells.iter_mut().zip(trial) {
            cell.push(g);
        }
    }

    let mut rows = Vec::new();
    for (si, &(snr_db, sigma2)) in snr_points.iter().enumerate() {
        for (mi, &method) in methods.iter().enumerate() {
            match agg {
                Aggregation::PerUser => {
                    for (ui, tag) in report_users.iter().enumerate() {
                        let cell = &cells[cell_index(si, mi, ui)];
                        rows.push(Cell::merge_into_row(&[cell], snr_db, method, *tag, cfg.seed));
                    }
                }
                Aggregation::Pooled => {
                    let pooled: Vec<&Cell> =
                        (0..n_users).map(|ui| &cells[cell_index(si, mi, ui)]).collect();
                    rows.push(Cell::merge_into_row(&pooled, snr_db, method, UserTag::Pooled, cfg.seed));
                }
            }
        }

        // Deterministic companion rows: the approximations the sweep is
        // validating against.
        for (li, &l) in l_values.iter().enumerate() {
            let method = DetectionMethod::PolyAsymptotic { rank: l };
            let gamma_of = |k: usize| -> f64 {
                match &w_bar[si][li] {
                    Some(w) => sinr_from_user_values(&per_user_bar[k], &w.coefficients, sigma2)
                        .unwrap_or(f64::NAN),
                    None => f64::NAN,
                }
            };
            push_deterministic_rows(&mut rows, agg, &eval_users, &report_users, snr_db, method, cfg.seed, gamma_of);
        }
        let method = DetectionMethod::LmmseAsymptotic;
        let gamma_of = |k: usize| -> f64 {
            match &lmmse_bar[si] {
                Some(sol) => sol.delta_for_user(k),
                None => f64::NAN,
            }
        };
        push_deterministic_rows(&mut rows, agg, &eval_users, &report_users, snr_db, method, cfg.seed, gamma_of);
    }

    Ok(SweepOutput { rows, config_digest, profile })
}

#[allow(clippy::too_many_arguments)]
fn push_deterministic_rows(
    rows: &mut Vec<ResultRow>,
    agg: Aggregation,
    eval_users: &[usize],
    report_users: &[UserTag],
    snr_db: f64,
    method: DetectionMethod,
    seed: u64,
    gamma_of: impl Fn(usize) -> f64,
) {
    match agg {
        Aggregation::PerUser => {
            for tag in report_users {
                let UserTag::User(k) = tag else { unreachable!() };
                let gamma = gamma_of(*k);
                rows.push(ResultRow {
                    snr_db,
                    method,
                    user: *tag,
                    gamma_mean: gamma,
                    gamma_std: 0.0,
                    ber: detect::ber_bpsk(gamma.max(0.0)),
                    trials: 0,
                    seed,
                });
            }
        }
        Aggregation::Pooled => {
            // Theoretical ensemble figures: mean gamma, spread across users,
            // mean of the per-user error rates.
            let gammas: Vec<f64> = eval_users.iter().map(|&k| gamma_of(k)).collect();
            let finite: Vec<f64> = gammas.iter().copied().filter(|g| g.is_finite()).collect();
            let (mean, std, ber) = if finite.is_empty() {
                (f64::NAN, f64::NAN, f64::NAN)
            } else {
                let n = finite.len() as f64;
                let mean = finite.iter().sum::<f64>() / n;
                let var = (finite.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>()
                    / (n - 1.0).max(1.0))
                .max(0.0);
                let ber = finite.iter().map(|&g| detect::ber_bpsk(g)).sum::<f64>() / n;
                (mean, var.sqrt(), ber)
            };
            rows.push(ResultRow {
                snr_db,
                method,
                user: UserTag::Pooled,
                gamma_mean: mean,
                gamma_std: std,
                ber,
                trials: 0,
                seed,
            });
        }
    }
}
