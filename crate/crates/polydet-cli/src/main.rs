//! `polydet` — Monte Carlo sweeps and validation for polynomial expansion
//! multiuser detection.
//!
//! Subcommands: `sinr-sweep`, `ber-sweep`, `moments`, `validate`. Exit
//! codes: 0 success, 2 configuration error, 3 numeric/convergence failure,
//! 4 validation failure.

use clap::{Args, Parser, Subcommand};
use polydet::sim::{
    self, ExperimentConfig, RunMeta, SweepOutput, ValidateOptions, gnuplot_ber_script,
    gnuplot_sinr_script, write_report_csv, write_sweep_csv,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_VALIDATION: u8 = 4;

#[derive(Parser)]
#[command(name = "polydet", version, about = "Polynomial expansion multiuser detection experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// SINR-versus-SNR sweep with per-user rows (simulation markers plus
    /// deterministic approximation rows).
    SinrSweep(SweepArgs),
    /// BER-versus-SNR sweep pooled over the user ensemble.
    BerSweep(SweepArgs),
    /// Deterministic-versus-empirical moment report.
    Moments(MomentArgs),
    /// Run the built-in oracle suites.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config (JSON; see README for the schema).
    #[arg(long)]
    config: PathBuf,
    /// Override the SNR grid, comma separated dB values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr_db: Option<Vec<f64>>,
    /// Override the Monte Carlo trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (default: <out_dir>/<subcommand>.csv).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Also write a gnuplot script next to the CSV.
    #[arg(long)]
    gnuplot: bool,
    /// Also save the correlation profile (.profile.json) next to the CSV.
    #[arg(long)]
    save_profile: bool,
}

#[derive(Args)]
struct MomentArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Highest moment order to report.
    #[arg(long, default_value_t = 8)]
    n_max: usize,
}

#[derive(Args)]
struct ValidateArgs {
    /// Test mode: perturb the moment recursion so the harness must fail.
    #[arg(long, hide = true)]
    inject_recursion_bug: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::SinrSweep(args) => run_sweep(args, "sinr-sweep"),
        Cmd::BerSweep(args) => run_sweep(args, "ber-sweep"),
        Cmd::Moments(args) => run_moments(args),
        Cmd::Validate(args) => return run_validation(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::from(EXIT_NUMERIC) }
        }
    }
}

fn load_config(common: &CommonArgs) -> polydet::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(&common.config)?;
    if let Some(snr) = &common.snr_db {
        cfg.snr_grid_db = snr.clone();
    }
    if let Some(trials) = common.trials {
        cfg.trials = trials;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_path(cfg: &ExperimentConfig, common: &CommonArgs, name: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| {
        cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from(".")).join(name)
    })
}

fn ensure_parent(path: &Path) -> polydet::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

fn run_sweep(args: SweepArgs, subcommand: &'static str) -> polydet::Result<()> {
    let cfg = load_config(&args.common)?;
    let out: SweepOutput = if subcommand == "sinr-sweep" {
        sim::run_sinr_sweep(&cfg)?
    } else {
        sim::run_ber_sweep(&cfg)?
    };

    let path = out_path(&cfg, &args.common, &format!("{}.csv", subcommand.replace('-', "_")));
    ensure_parent(&path)?;
    let meta = RunMeta { subcommand, config_digest: out.config_digest.clone(), seed: cfg.seed };
    write_sweep_csv(&path, &out.rows, &meta)?;
    println!("wrote {} rows to {}", out.rows.len(), path.display());

    warn_on_degraded_rows(&cfg, &out);

    if args.gnuplot {
        let csv_name = path.file_name().unwrap().to_string_lossy().to_string();
        let script = if subcommand == "sinr-sweep" {
            gnuplot_sinr_script(&csv_name, &cfg.l_values)
        } else {
            gnuplot_ber_script(&csv_name, &cfg.l_values)
        };
        let gp = path.with_extension("gp");
        std::fs::write(&gp, script)?;
        println!("wrote gnuplot script to {}", gp.display());
    }
    if args.save_profile {
        let pf = path.with_extension("profile.json");
        polydet::channel::save_profile(&out.profile, &pf)?;
        println!("wrote correlation profile to {}", pf.display());
    }
    Ok(())
}

fn warn_on_degraded_rows(cfg: &ExperimentConfig, out: &SweepOutput) {
    let degraded: usize = out
        .rows
        .iter()
        .filter(|r| r.trials > 0 && r.trials < cfg.trials * expected_cells(cfg, r))
        .count();
    if degraded > 0 {
        eprintln!("warning: {degraded} rows aggregated fewer trials than configured (numeric failures recorded as NaN)");
    }
}

fn expected_cells(cfg: &ExperimentConfig, row: &sim::ResultRow) -> usize {
    match row.user {
        sim::UserTag::Pooled => cfg.n_tx,
        sim::UserTag::User(_) => 1,
    }
}

fn run_moments(args: MomentArgs) -> polydet::Result<()> {
    let cfg = load_config(&args.common)?;
    let report = sim::run_moment_report(&cfg, args.n_max)?;
    let path = out_path(&cfg, &args.common, "moments.csv");
    ensure_parent(&path)?;
    let meta = RunMeta {
        subcommand: "moments",
        config_digest: report.config_digest.clone(),
        seed: cfg.seed,
    };
    write_report_csv(&path, &report, &meta)?;
    println!("wrote {} rows to {}", report.rows.len(), path.display());
    Ok(())
}

fn run_validation(args: ValidateArgs) -> ExitCode {
    let opts = ValidateOptions {
        perturb_recursion: args.inject_recursion_bug.then_some(1e-6),
    };
    let report = sim::run_validate(&opts);
    print!("{}", report.render());
    if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_VALIDATION) }
}
