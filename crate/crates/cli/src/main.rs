use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ncc_cli::csv::{verdict_row, VERDICT_HEADER};
use ncc_cli::{calibrate_threshold, detect_file, experiment_csv, generate, CalibrationSource, CliError, RunConfig};
use ncc_core::sigmodel::Hypothesis;
use ncc_core::DetectorKind;

/// Noncircular-covariance spectrum sensing: block generation, detection,
/// threshold calibration and Monte-Carlo experiments.
///
/// Exit codes: 0 success, 1 degenerate data, 2 usage or I/O error,
/// 3 config validation error.
#[derive(Parser)]
#[command(name = "ncc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one received block and write it as a binary IQ file.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a detector on an IQ file and print one CSV row:
    /// detector,statistic,threshold,decision,M,K
    Detect {
        iq: PathBuf,
        #[arg(long, default_value = "ncc")]
        detector: DetectorKind,
        #[arg(long, default_value_t = 0.05)]
        pf: f64,
        /// Use this threshold instead of a theoretical or calibrated one.
        #[arg(long, allow_negative_numbers = true)]
        threshold: Option<f64>,
        /// Config supplying alpha_db and n_cal_trials for baseline calibration.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Print the CSV header before the row.
        #[arg(long)]
        header: bool,
    },
    /// Empirically calibrate a detector threshold under H0.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "ncc")]
        detector: DetectorKind,
        #[arg(long)]
        pf: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the experiment described by a config and write its CSV.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Output path; defaults to [run] out, else stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { config, out, seed } => {
            let cfg = RunConfig::load(&config)?;
            let g = generate(&cfg, &out, seed)?;
            let sigma2: Vec<String> = g.block.noise_var.iter().map(|v| format!("{v:.9}")).collect();
            println!("file={}", out.display());
            println!("hypothesis={}", g.scenario.hypothesis);
            println!("M={} K={}", g.block.antennas(), g.block.len());
            println!("seed={}", g.scenario.seed);
            println!("sigma2={}", sigma2.join(","));
            match g.scenario.hypothesis {
                Hypothesis::H1 => println!("snr_db={:.9}", g.realized_snr_db),
                Hypothesis::H0 => println!("snr_db=-inf"),
            }
            Ok(())
        }
        Command::Detect {
            iq,
            detector,
            pf,
            threshold,
            config,
            seed,
            workers,
            header,
        } => {
            if !(pf > 0.0 && pf < 1.0) {
                return Err(CliError::Usage(format!("--pf must lie in (0, 1), got {pf}")));
            }
            let mut source = CalibrationSource {
                alpha_db: 1.0,
                n_cal_trials: 10_000usize.max((100.0 / pf).ceil() as usize),
                seed: seed.unwrap_or(0),
                workers,
            };
            if let Some(path) = config {
                let cfg = RunConfig::load(&path)?;
                source.alpha_db = cfg.alpha_db;
                source.n_cal_trials = cfg.n_cal_trials.max((100.0 / pf).ceil() as usize);
                source.seed = seed.unwrap_or(cfg.seed);
            }
            let verdict = detect_file(&iq, detector, pf, threshold, &source)?;
            if verdict.rank_deficient {
                eprintln!("warning: covariance is not positive definite; {} statistic set to +inf", verdict.kind);
            }
            if header {
                println!("{VERDICT_HEADER}");
            }
            println!("{}", verdict_row(&verdict));
            Ok(())
        }
        Command::Calibrate {
            config,
            detector,
            pf,
            seed,
            workers,
        } => {
            let cfg = RunConfig::load(&config)?;
            let pf = pf.unwrap_or(cfg.pf);
            let mut scenario = cfg.scenario(Hypothesis::H0);
            if let Some(s) = seed {
                scenario.seed = s;
            }
            let thr = calibrate_threshold(&scenario, detector, pf, cfg.n_cal_trials, workers.unwrap_or(cfg.workers))?;
            println!("detector,pf,threshold,n_cal_trials,seed");
            println!(
                "{},{},{},{},{}",
                detector,
                ncc_cli::csv::fmt_sig(pf),
                ncc_cli::csv::fmt_sig(thr),
                cfg.n_cal_trials,
                scenario.seed
            );
            Ok(())
        }
        Command::Experiment {
            config,
            out,
            workers,
            seed,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let csv = experiment_csv(&cfg, workers.unwrap_or(cfg.workers))?;
            match out.or(cfg.out.clone()) {
                Some(path) => std::fs::write(&path, csv).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
                None => print!("{csv}"),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ncc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
