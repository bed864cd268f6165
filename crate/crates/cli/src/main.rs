use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kronproj::adaptive::Mode;
use kronproj::harness::{
    ce_bench, complexity_model, dp_bench, parse_config, run_adaptive_experiment, run_maintenance_experiment,
    verify_oracle, AdaptiveExperimentConfig, CeBenchConfig, ComplexityConfig, DpBenchConfig, Format,
    MaintExperimentConfig, Report, VerifyOracleConfig,
};
use serde::de::DeserializeOwned;

#[derive(Parser)]
#[command(name = "kronproj", version, about = "Kronecker projection maintenance experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML config file; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report destination (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
    /// Compare against brute-force oracles where the experiment supports it.
    #[arg(long, global = true, value_enum)]
    check_oracle: Option<Toggle>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Check the linear-algebra kernels and initialization against references.
    VerifyOracle,
    /// Run the maintained projection over a drifting spectrum.
    RunMaint,
    /// Empirical coordinate-wise embedding statistics per sketch family.
    CeBench,
    /// Private-median rank batteries and a neighbouring-input smoke test.
    DpBench,
    /// Adaptive norm-estimation reduction.
    AdaptiveSim,
    /// Adaptive set-query reduction.
    SetquerySim,
    /// Evaluate the rectangular multiplication cost model.
    Complexity,
}

fn load<T: DeserializeOwned + Default>(common: &Common) -> Result<T, String> {
    match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
            parse_config(&text).map_err(|e| e.to_string())
        }
        None => Ok(T::default()),
    }
}

fn oracle_flag(common: &Common, default: bool) -> bool {
    common.check_oracle.map_or(default, |t| t == Toggle::On)
}

fn run(cli: &Cli) -> Result<(String, Vec<String>), String> {
    let c = &cli.common;
    let format = match c.format {
        OutFormat::Json => Format::Json,
        OutFormat::Csv => Format::Csv,
    };
    fn emit(r: &impl Report, f: Format) -> (String, Vec<String>) {
        (r.render(f), r.violations())
    }
    let e = |e: kronproj::harness::HarnessError| e.to_string();
    Ok(match cli.command {
        Command::VerifyOracle => {
            let mut cfg: VerifyOracleConfig = load(c)?;
            cfg.seed = c.seed.unwrap_or(cfg.seed);
            emit(&verify_oracle(&cfg).map_err(e)?, format)
        }
        Command::RunMaint => {
            let mut cfg: MaintExperimentConfig = load(c)?;
            if let Some(s) = c.seed {
                cfg.drift.seed = s;
                cfg.maint.seed = s;
            }
            cfg.check_oracle = oracle_flag(c, cfg.check_oracle);
            emit(&run_maintenance_experiment(&cfg).map_err(e)?, format)
        }
        Command::CeBench => {
            let mut cfg: CeBenchConfig = load(c)?;
            cfg.seed = c.seed.unwrap_or(cfg.seed);
            emit(&ce_bench(&cfg).map_err(e)?, format)
        }
        Command::DpBench => {
            let mut cfg: DpBenchConfig = load(c)?;
            cfg.seed = c.seed.unwrap_or(cfg.seed);
            emit(&dp_bench(&cfg).map_err(e)?, format)
        }
        Command::AdaptiveSim | Command::SetquerySim => {
            let mut cfg: AdaptiveExperimentConfig = load(c)?;
            cfg.seed = c.seed.unwrap_or(cfg.seed);
            cfg.check_oracle = oracle_flag(c, cfg.check_oracle);
            let mode = match cli.command {
                Command::AdaptiveSim => Mode::Norm,
                _ => Mode::SetQuery { k: cfg.k },
            };
            emit(&run_adaptive_experiment(mode, &cfg).map_err(e)?, format)
        }
        Command::Complexity => {
            let cfg: ComplexityConfig = load(c)?;
            emit(&complexity_model(&cfg).map_err(e)?, format)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let (text, violations) = match run(&cli) {
        Ok(r) => r,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let written = match &cli.common.out {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("writing {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    if let Err(msg) = written {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    eprintln!("elapsed: {:.3}s", start.elapsed().as_secs_f64());
    if violations.is_empty() {
        ExitCode::SUCCESS
    } else {
        for v in &violations {
            eprintln!("threshold violated: {v}");
        }
        ExitCode::from(2)
    }
}
