use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use tlnp::data::{gen_gaussian, ingest_csv, CsvIngestSpec, DatasetBundle, GaussianSpec};
use tlnp::experiment::{emit_report, run_experiment, ExperimentConfig, ExperimentReport, ReportFormat};
use tlnp::oracle::OracleFixture;
use tlnp::{Error, Result};

#[derive(Parser)]
#[command(name = "tlnp", version, about = "Transfer-learning Neyman-Pearson outlier detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DataKind {
    Gaussian,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write JSON, CSV and plot-data files.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long, default_value = "report")]
        stem: String,
    },
    /// Build a dataset bundle from a Gaussian or CSV spec and cache it.
    GenData {
        kind: DataKind,
        spec: PathBuf,
        #[arg(long, default_value = "data")]
        out: PathBuf,
    },
    /// Solve an oracle fixture and print the result as JSON.
    Oracle { fixture: PathBuf },
    /// Re-emit CSV and plot-data files from a JSON report.
    Report {
        report: PathBuf,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long)]
        stem: Option<String>,
    },
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out, stem } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = run_experiment(&cfg)?;
            let files = emit_report(&report, &out, &stem, &[ReportFormat::Json, ReportFormat::Csv, ReportFormat::Plot])?;
            for f in files {
                println!("{}", f.display());
            }
        }
        Command::GenData { kind, spec, out } => {
            let text = read(&spec)?;
            let (bundle, hash) = match kind {
                DataKind::Gaussian => {
                    let s: GaussianSpec = toml::from_str(&text)?;
                    (gen_gaussian(&s)?, spec_hash(&s))
                }
                DataKind::Csv => {
                    let s: CsvIngestSpec = toml::from_str(&text)?;
                    (ingest_csv(&s)?, spec_hash(&s))
                }
            };
            std::fs::create_dir_all(&out).map_err(|e| Error::Config(format!("{}: {e}", out.display())))?;
            let path = DatasetBundle::cache_path(&out, &hash);
            bundle.save_json(&path)?;
            println!("{}", path.display());
        }
        Command::Oracle { fixture } => {
            let report = OracleFixture::load_json(&fixture)?.solve()?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Report { report, out, stem } => {
            let r = ExperimentReport::load_json(&report)?;
            let stem = stem.unwrap_or_else(|| format!("report-{}", r.config_hash));
            for f in emit_report(&r, &out, &stem, &[ReportFormat::Csv, ReportFormat::Plot])? {
                println!("{}", f.display());
            }
        }
    }
    Ok(())
}

fn spec_hash<T: serde::Serialize>(spec: &T) -> String {
    let json = serde_json::to_vec(spec).expect("spec serializes");
    format!("{:016x}", tlnp::seed::stable_hash(&[&json]))
}
