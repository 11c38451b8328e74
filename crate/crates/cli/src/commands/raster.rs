use clap::Args;
use kuramoto_hebbian::pair;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::RunOutput;
use crate::error::Result;
use crate::output::OutputDir;

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(deny_unknown_fields)]
pub struct RasterArgs {
    #[arg(short = 'm', long, default_value_t = 1.0)]
    pub mass: f64,
    /// Points per axis over [0, bound]^2.
    #[arg(long, default_value_t = 1000)]
    pub grid: usize,
}

/// Writes `gamma_raster.csv`.
pub fn run(args: &RasterArgs, out: &mut OutputDir) -> Result<RunOutput> {
    let raster = pair::gamma_raster(args.mass, args.grid)?;
    out.write_with("gamma_raster.csv", |w| raster.write_csv(w))?;
    let count = |f: fn(&pair::GammaCell<f64>) -> bool| raster.cells.iter().filter(|c| f(c)).count();
    Ok(RunOutput::report(&json!({
        "mass": raster.mass,
        "grid": raster.n,
        "bound": raster.bound,
        "cells_in_gamma1": count(|c| c.in_gamma1),
        "cells_in_gamma2": count(|c| c.in_gamma2),
    })))
}
