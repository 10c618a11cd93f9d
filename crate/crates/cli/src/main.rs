use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qssm::analysis::PepConvention;
use qssm::channel::AngleMode;
use qssm::modem::ConstellationKind;
use qssm::montecarlo::{ChannelMode, Scheme, SimConfig, DEFAULT_SEED};
use qssm_cli::config::{ExperimentSpec, Overrides, SnrGrid, DEFAULT_LEVELS};
use qssm_cli::output::{read_curve_csv, write_atomic};
use qssm_cli::report::{compare_csv, compare_text, table_csv, validation_text, ARBITER_SEEDS};
use qssm_cli::{compare_report, parse_config, run_experiment, validate_analysis, CliError, Result};
use qssm_cli::{DEFAULT_OUTPUT_DIR, OUTPUT_DIR_ENV};

/// Monte Carlo and analytic ABEP for quadrature spatial scattering modulation.
#[derive(Debug, Parser)]
#[command(name = "qssm", version)]
struct Cli {
    #[command(flatten)]
    overrides: OverrideArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct OverrideArgs {
    /// Master seed for every config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trials per SNR point for every config.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Pairwise-error-probability convention: chi_square or exact_model.
    #[arg(long, global = true, value_parser = parse_convention)]
    convention: Option<PepConvention>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every config of a JSON experiment document.
    Run {
        config: PathBuf,
        /// Output directory (defaults to the document's output_dir, then $QSSM_OUTPUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one config described on the command line.
    Sweep(SweepArgs),
    /// Check the closed form against quadrature and arbitrate the PEP convention.
    Validate {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two curve files at fixed ABEP levels.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LEVELS)]
        levels: Vec<f64>,
        /// Also write the comparison as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the QSSM mapping table.
    Table {
        #[arg(short = 'l', long, default_value_t = 4)]
        paths: usize,
        #[arg(short = 'm', long, default_value_t = 4)]
        order: usize,
        #[arg(long, default_value = "qam", value_parser = parse_serde::<ConstellationKind>)]
        constellation: ConstellationKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, default_value = "qssm", value_parser = parse_serde::<Scheme>)]
    scheme: Scheme,
    #[arg(short = 'l', long, default_value_t = 4)]
    paths: usize,
    #[arg(short = 'm', long, default_value_t = 4)]
    order: usize,
    #[arg(long, default_value = "qam", value_parser = parse_serde::<ConstellationKind>)]
    constellation: ConstellationKind,
    #[arg(long, default_value = "ideal", value_parser = parse_serde::<ChannelMode>)]
    channel_mode: ChannelMode,
    #[arg(long, value_parser = parse_serde::<AngleMode>)]
    angle_mode: Option<AngleMode>,
    /// SNR grid in dB as start:stop:step (inclusive).
    #[arg(long, default_value = "0:24:2", value_parser = parse_range)]
    snr: SnrGrid,
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_convention(s: &str) -> std::result::Result<PepConvention, String> {
    s.parse().map_err(|e: qssm::Error| e.to_string())
}

fn parse_serde<T: serde::de::DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn parse_range(s: &str) -> std::result::Result<SnrGrid, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [start, stop, step] => Ok(SnrGrid::Range { start, stop, step }),
        [single] => Ok(SnrGrid::List(vec![single])),
        _ => Err("expected start:stop:step".into()),
    }
}

fn output_dir(flag: Option<PathBuf>, document: Option<&Path>) -> PathBuf {
    flag.or_else(|| document.map(Path::to_path_buf))
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

fn run_spec(mut spec: ExperimentSpec, overrides: Overrides, out: Option<PathBuf>) -> Result<()> {
    spec.apply(overrides)?;
    let dir = output_dir(out, spec.output_dir.as_deref());
    let summary = run_experiment(&spec, &dir)?;
    print!("{}", summary.text);
    match summary.comparison_error {
        Some(e) => Err(CliError::Numerical(e)),
        None => Ok(()),
    }
}

fn execute(cli: Cli) -> Result<()> {
    let overrides = Overrides {
        seed: cli.overrides.seed,
        trials: cli.overrides.trials,
        convention: cli.overrides.convention,
    };
    match cli.command {
        Command::Run { config, out } => {
            let text = std::fs::read_to_string(&config).map_err(|e| CliError::io(&config, e))?;
            let spec = parse_config(&text).map_err(|e| match e {
                CliError::Config(msg) => CliError::Config(format!("{}: {msg}", config.display())),
                other => other,
            })?;
            run_spec(spec, overrides, out)
        }
        Command::Sweep(args) => {
            let d = SimConfig::default();
            let mut config = SimConfig {
                label: args.label,
                scheme: args.scheme,
                paths: args.paths,
                order: args.order,
                constellation: args.constellation,
                channel_mode: args.channel_mode,
                angle_mode: args.angle_mode.unwrap_or(d.angle_mode),
                snr_db: args.snr.points()?,
                ..d
            };
            config.label = Some(config.name());
            let spec = ExperimentSpec {
                configs: vec![config],
                output_dir: None,
                seed: DEFAULT_SEED,
                comparisons: Vec::new(),
                levels: DEFAULT_LEVELS.to_vec(),
            };
            run_spec(spec, overrides, args.out)
        }
        Command::Validate { out } => {
            let seeds: Vec<u64> = match overrides.seed {
                Some(s) => (0..ARBITER_SEEDS.len() as u64).map(|i| s.wrapping_add(i)).collect(),
                None => ARBITER_SEEDS.to_vec(),
            };
            let report = validate_analysis(&seeds, overrides.trials.unwrap_or(qssm::montecarlo::DEFAULT_TRIALS))?;
            print!("{}", validation_text(&report));
            let dir = output_dir(out, None);
            let mut json = serde_json::to_string_pretty(&report).expect("report is serializable");
            json.push('\n');
            write_atomic(&dir.join("validation.json"), json.as_bytes())
        }
        Command::Compare { a, b, levels, out } => {
            if levels.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
                return Err(CliError::Config(format!("--levels: {levels:?} must lie in (0, 1)")));
            }
            let (ra, rb) = (read_curve_csv(&a)?, read_curve_csv(&b)?);
            let rows = compare_report(&ra, &rb, &levels)?;
            print!("{}", compare_text(&a.display().to_string(), &b.display().to_string(), &rows));
            match out {
                Some(path) => write_atomic(&path, &compare_csv(&rows)),
                None => Ok(()),
            }
        }
        Command::Table { paths, order, constellation, out } => {
            let csv = table_csv(paths, constellation, order)?;
            match out {
                Some(path) => write_atomic(&path, &csv),
                None => {
                    print!("{}", String::from_utf8_lossy(&csv));
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
