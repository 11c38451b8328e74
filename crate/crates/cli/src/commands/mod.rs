pub mod ensemble;
pub mod orbit;
pub mod pair;
pub mod raster;
pub mod sweep;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::output::OutputDir;

/// What a command hands back besides its files.
#[derive(Debug, Default)]
pub struct RunOutput {
    /// Printed to stdout instead of the manifest when present.
    pub report: Option<serde_json::Value>,
}

impl RunOutput {
    pub fn report<S: Serialize>(value: &S) -> Self {
        Self {
            report: serde_json::to_value(value).ok(),
        }
    }
}

/// A fully resolved command, as recorded in a manifest.
#[derive(Debug, Clone)]
pub enum Job {
    PairSimulate(pair::SimulateArgs),
    PairAnalyze(pair::AnalyzeArgs),
    GammaRaster(raster::RasterArgs),
    OrbitApprox(orbit::OrbitArgs),
    RegionSweep(sweep::RegionSweepConfig),
    EnsembleRun(ensemble::EnsembleArgs),
}

fn from_value<T: DeserializeOwned>(command: &str, config: serde_json::Value) -> Result<T> {
    serde_json::from_value(config).map_err(|e| CliError::Usage(format!("bad {command} config in manifest: {e}")))
}

impl Job {
    pub fn name(&self) -> &'static str {
        match self {
            Self::PairSimulate(_) => "pair-simulate",
            Self::PairAnalyze(_) => "pair-analyze",
            Self::GammaRaster(_) => "gamma-raster",
            Self::OrbitApprox(_) => "orbit-approx",
            Self::RegionSweep(_) => "region-sweep",
            Self::EnsembleRun(_) => "ensemble-run",
        }
    }

    pub fn config(&self) -> serde_json::Value {
        let v = match self {
            Self::PairSimulate(c) => serde_json::to_value(c),
            Self::PairAnalyze(c) => serde_json::to_value(c),
            Self::GammaRaster(c) => serde_json::to_value(c),
            Self::OrbitApprox(c) => serde_json::to_value(c),
            Self::RegionSweep(c) => serde_json::to_value(c),
            Self::EnsembleRun(c) => serde_json::to_value(c),
        };
        v.expect("configs serialize to JSON")
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Self::PairSimulate(c) => Some(c.seed),
            Self::RegionSweep(c) => Some(c.sweep.seed),
            Self::EnsembleRun(c) => Some(c.seed),
            _ => None,
        }
    }

    pub fn from_manifest(command: &str, config: serde_json::Value) -> Result<Self> {
        Ok(match command {
            "pair-simulate" => Self::PairSimulate(from_value(command, config)?),
            "pair-analyze" => Self::PairAnalyze(from_value(command, config)?),
            "gamma-raster" => Self::GammaRaster(from_value(command, config)?),
            "orbit-approx" => Self::OrbitApprox(from_value(command, config)?),
            "region-sweep" => Self::RegionSweep(from_value(command, config)?),
            "ensemble-run" => Self::EnsembleRun(from_value(command, config)?),
            other => return Err(CliError::Usage(format!("unknown command in manifest: {other}"))),
        })
    }

    pub fn run(&self, out: &mut OutputDir) -> Result<RunOutput> {
        match self {
            Self::PairSimulate(c) => pair::simulate(c, out),
            Self::PairAnalyze(c) => pair::analyze(c, out),
            Self::GammaRaster(c) => raster::run(c, out),
            Self::OrbitApprox(c) => orbit::run(c, out),
            Self::RegionSweep(c) => sweep::run(c, out),
            Self::EnsembleRun(c) => ensemble::run(c, out),
        }
    }
}
