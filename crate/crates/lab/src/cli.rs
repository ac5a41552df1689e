//! Command-line entry points. Exit codes: 0 ok, 2 config or missing input,
//! 3 data, 4 verification.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use sweetspot_core::timing::AggregationRule;

use crate::analysis::{self, AnalysisOptions};
use crate::config::{Config, SweepSpec};
use crate::error::{exit, LabError, Result};
use crate::{dataset, plot, runner, verify};

#[derive(Debug, Parser)]
#[command(name = "sweetspot", version, about = "Dataset-size sweep lab for small transformers on algorithmic tasks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write train/validation files, the vocabulary and a header.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Override a config key, `key=value`; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the score-table generator with the brute-force oracle on
    /// every pair of the configured length.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "max-oracle-L", default_value_t = 3)]
        max_oracle_l: usize,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Train a single run.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every cell of a sweep file, resuming completed cells.
    Sweep {
        #[arg(long)]
        manifest: PathBuf,
        /// Cells run concurrently; `PARALLEL_CELLS` when omitted, else 1.
        #[arg(long)]
        parallel: Option<usize>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Crossing tables, critical size and sweet spot from a sweep directory.
    Analyze {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long, default_value = "0.3,0.6,0.9,0.98")]
        tau: String,
        /// Seed aggregation: majority, any or all.
        #[arg(long, default_value = "majority")]
        rule: String,
        #[arg(long, default_value_t = 0.5)]
        until_val: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render SVG figures from an analysis directory.
    Plot {
        #[arg(long)]
        analysis: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// `OUTPUT_DIR`, or `out` in the working directory.
pub fn output_base() -> PathBuf {
    std::env::var_os("OUTPUT_DIR").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
}

fn stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep").to_string()
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Generate { config, overrides, out } => {
            let cfg = Config::load(&config, &overrides)?;
            let dir = out.unwrap_or_else(|| {
                output_base().join("datasets").join(format!("{}{}-n{}-s{}", cfg.task, cfg.size, cfg.n, cfg.seed))
            });
            let w = dataset::write_dataset(&cfg, &dir)?;
            println!("dataset: {}", w.dir.display());
            println!("universe size: {}", w.universe);
            println!("train.tsv sha256: {}", w.train_sha256);
            println!("validation.tsv sha256: {}", w.validation_sha256);
        }
        Command::Verify { config, max_oracle_l, overrides } => {
            let cfg = Config::load(&config, &overrides)?;
            let spec = cfg.task_spec()?;
            if spec.family != sweetspot_core::corpus::TaskFamily::Nw {
                return Err(LabError::Config("verify needs task = \"nw\"".into()));
            }
            let report = verify::verify(spec.size, &spec.scoring, max_oracle_l)?;
            println!(
                "L = {}: {} pairs, {} cells, {} mismatches",
                report.len, report.pairs, report.cells, report.mismatches
            );
            verify::check(&report)?;
        }
        Command::Train { config, seed, mut overrides, out } => {
            if let Some(s) = seed {
                overrides.push(format!("seed={s}"));
            }
            let cfg = Config::load(&config, &overrides)?;
            let dir = out.unwrap_or_else(|| output_base().join("runs").join(cfg.run_id()));
            let run_id = cfg.run_id();
            let outcome = runner::run_cell(&cfg, &dir, |r| {
                eprintln!("[{run_id}] t={} A_T={:.4} A_V={:.4} loss={:.4}", r.t, r.a_t(), r.a_v(), r.loss)
            })?;
            println!("run: {}", dir.display());
            println!("parameters: {}", outcome.param_count);
            println!("status: {} after {} updates", outcome.status, outcome.updates);
        }
        Command::Sweep { manifest, parallel, overrides, out } => {
            let sweep = SweepSpec::load(&manifest, &overrides)?;
            let parallel = match parallel {
                Some(k) if k > 0 => k,
                Some(_) => return Err(LabError::Config("--parallel must be positive".into())),
                None => runner::parallel_from_env()?.unwrap_or(1),
            };
            let root = out.unwrap_or_else(|| output_base().join("sweeps").join(stem(&manifest)));
            let rows = runner::run_sweep(&sweep, &root, parallel, &|line| eprintln!("{line}"))?;
            println!("sweep: {}", root.display());
            for r in &rows {
                println!("{}\t{}\t{}", r.run_id, r.status, r.detail);
            }
        }
        Command::Analyze { runs, tau, rule, until_val, out } => {
            let rule =
                AggregationRule::parse(&rule).ok_or_else(|| LabError::Config(format!("unknown rule {rule:?}")))?;
            let options = AnalysisOptions { taus: analysis::parse_taus(&tau)?, rule, until_val };
            let result = analysis::analyze(&runs, options)?;
            let out = out.unwrap_or_else(|| runs.join("analysis"));
            result.write(&runs, &out)?;
            println!("analysis: {}", out.display());
            print!("{}", result.derived_csv());
        }
        Command::Plot { analysis, out } => {
            let out = out.unwrap_or_else(|| analysis.join("figures"));
            let files = plot::plot(&analysis, &out)?;
            for f in files {
                println!("{}", f.display());
            }
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command, and returns the
/// exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::CONFIG } else { exit::OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
