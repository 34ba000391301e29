//! `onebit-sim`: BER-vs-SNR sweeps for 1-bit precoders.
//!
//! Settings come from built-in defaults, then `--config`, then individual
//! flags. The CSV goes to `--out` if given, otherwise to stdout. Exit status
//! is 1 on configuration or I/O errors and 3 if any precoder call failed
//! during the sweep (those trials are counted as all-bits-in-error).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use onebit::sim::{csv_string, sweep};
use onebit::SweepConfig;

#[derive(Debug, Parser)]
#[command(name = "onebit-sim", version, about = "Monte-Carlo BER sweeps for 1-bit massive MU-MIMO precoding")]
struct Args {
    /// key = value config file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of base-station antennas B.
    #[arg(long)]
    bs_antennas: Option<String>,
    /// Number of users U.
    #[arg(long)]
    ues: Option<String>,
    /// Slots per coherence block K.
    #[arg(long)]
    slots: Option<String>,
    /// Comma list of SNRs in dB; items may be start:step:stop ranges.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<String>,
    /// QPSK, 8PSK, 16QAM, 16PSK or 64QAM.
    #[arg(long)]
    constellation: Option<String>,
    /// Comma list of zfq, mrtq, squid, sdr, exhaustive.
    #[arg(long)]
    precoder: Option<String>,
    /// genie, pilot or blind.
    #[arg(long)]
    estimator: Option<String>,
    /// Monte-Carlo trials per SNR point.
    #[arg(long)]
    trials: Option<String>,
    /// Master seed.
    #[arg(long)]
    seed: Option<String>,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stop a point once every precoder has this many bit errors.
    #[arg(long)]
    min_errors: Option<String>,
    /// Any other config key, e.g. `--set squid.max_iters=500`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Print per-point diagnostics to stderr.
    #[arg(long, short)]
    verbose: bool,
}

fn build_config(args: &Args) -> Result<SweepConfig, String> {
    let mut cfg = SweepConfig::default();
    if let Some(path) = &args.config {
        cfg.apply_file(path).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    let flags = [
        ("bs_antennas", &args.bs_antennas),
        ("ues", &args.ues),
        ("slots", &args.slots),
        ("snr_db", &args.snr_db),
        ("constellation", &args.constellation),
        ("precoder", &args.precoder),
        ("estimator", &args.estimator),
        ("trials", &args.trials),
        ("seed", &args.seed),
        ("min_errors", &args.min_errors),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v).map_err(|e| format!("--{}: {e}", key.replace('_', "-")))?;
        }
    }
    for kv in &args.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
        cfg.set(k, v).map_err(|e| format!("--set {kv}: {e}"))?;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match build_config(&args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    // The sweep writes the file itself when `out` is set.
    let records = match sweep(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if cfg.out.is_none() {
        print!("{}", csv_string(&records));
    }

    let mut failures = 0;
    for r in &records {
        failures += r.hard_failures;
        if args.verbose || r.hard_failures > 0 {
            eprintln!(
                "{:>6} dB {:<10} ber {:.3e} trials {} solver_flags {} failures {} ({:.2?})",
                r.snr_db,
                r.precoder.as_str(),
                r.ber(),
                r.trials,
                r.solver_flags,
                r.hard_failures,
                r.wall_time
            );
        }
    }
    if failures > 0 {
        eprintln!("error: {failures} precoder failures; affected trials were counted as all bits in error");
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}
