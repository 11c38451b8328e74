//! `khebb`: reproducible runs of the two-oscillator analysis, the region
//! sweep and the N-oscillator ensemble. Every run writes its outputs and a
//! `manifest.json` into one directory; `khebb replay` reruns a manifest.

mod commands;
mod error;
mod manifest;
mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use commands::Job;
use error::{CliError, Result};
use manifest::RunManifest;
use output::OutputDir;

/// Base directory for outputs when `--out` is not given.
const OUT_DIR_ENV: &str = "KHEBB_OUT_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "khebb",
    version,
    about = "Kuramoto oscillators with inertia and Hebbian coupling"
)]
struct Cli {
    /// Output directory [default: $KHEBB_OUT_DIR/<command>, else khebb-out/<command>]
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for parallel work [default: all cores]
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Trajectories of the reduced system from random starts.
    PairSimulate(commands::pair::SimulateArgs),
    /// Equilibria, eigenvalues and stability classes as JSON.
    PairAnalyze(commands::pair::AnalyzeArgs),
    /// Real-eigenvalue regions over the (u, v) square.
    GammaRaster(commands::raster::RasterArgs),
    /// Closed-form periodic orbit against simulation.
    OrbitApprox(commands::orbit::OrbitArgs),
    /// Label the (alpha, omega) plane by counting section crossings.
    RegionSweep(commands::sweep::SweepArgs),
    /// N oscillators with Gaussian frequencies; order-parameter series.
    EnsembleRun(commands::ensemble::EnsembleArgs),
    /// Run the command recorded in a manifest again.
    Replay {
        manifest: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::PairSimulate(_) => "pair-simulate",
            Self::PairAnalyze(_) => "pair-analyze",
            Self::GammaRaster(_) => "gamma-raster",
            Self::OrbitApprox(_) => "orbit-approx",
            Self::RegionSweep(_) => "region-sweep",
            Self::EnsembleRun(_) => "ensemble-run",
            Self::Replay { .. } => "replay",
        }
    }

    fn into_job(self) -> Result<Job> {
        Ok(match self {
            Self::PairSimulate(a) => Job::PairSimulate(a),
            Self::PairAnalyze(a) => Job::PairAnalyze(a),
            Self::GammaRaster(a) => Job::GammaRaster(a),
            Self::OrbitApprox(a) => Job::OrbitApprox(a),
            Self::RegionSweep(a) => Job::RegionSweep(a.resolve()?),
            Self::EnsembleRun(a) => Job::EnsembleRun(a.resolved()),
            Self::Replay { manifest } => {
                let m = RunManifest::read(&manifest)?;
                Job::from_manifest(&m.command, m.config)?
            }
        })
    }
}

fn out_dir(explicit: Option<PathBuf>, command: &str) -> PathBuf {
    explicit.unwrap_or_else(|| {
        let base = std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("khebb-out"), PathBuf::from);
        base.join(command)
    })
}

fn execute(job: &Job, dir: &Path) -> Result<serde_json::Value> {
    let started = Instant::now();
    let mut out = OutputDir::create(dir)?;
    let result = job.run(&mut out)?;
    let manifest = RunManifest {
        command: job.name().to_string(),
        config: job.config(),
        seed: job.seed(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_seconds: started.elapsed().as_secs_f64(),
        outputs: out.written().to_vec(),
    };
    let path = out.root().join(manifest::FILE_NAME);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(CliError::io(&path))?;
    Ok(result.report.unwrap_or_else(|| serde_json::to_value(&manifest).expect("manifest serializes")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let outcome = (|| {
        if let Some(n) = cli.jobs {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Usage(format!("--jobs: {e}")))?;
        }
        let job = cli.command.into_job()?;
        execute(&job, &out_dir(cli.out, job.name()))
    })();
    match outcome {
        Ok(report) => {
            // a closed pipe on stdout is not a failed run
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            let _ = writeln!(std::io::stdout(), "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "{}", e.to_json(name));
            ExitCode::from(e.exit_code())
        }
    }
}
